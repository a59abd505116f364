//! Finite-difference Jacobians and the damped Gauss-Newton update.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::energy::{EnergyContext, FitConfig, ResidualVector};
use crate::error::{Error, Result};
use crate::hand_model::{HandParams, NUM_SHAPE, PARAM_DIM, POSE_DIM};

/// Per-parameter finite-difference steps: translations use the metric step.
pub fn param_steps(config: &FitConfig) -> [f64; PARAM_DIM] {
    let mut h = [config.fd_step; PARAM_DIM];
    for hand in 0..2 {
        let base = 2 * NUM_SHAPE + hand * POSE_DIM;
        for k in 3..6 {
            h[base + k] = config.fd_step_translation;
        }
    }
    h
}

fn shifted(base: &[f64], k: usize, delta: f64) -> HandParams {
    let mut v = base.to_vec();
    v[k] += delta;
    HandParams::from_slice(&v).expect("fixed length")
}

fn eval(ctx: &EnergyContext, p: &HandParams, len: usize) -> Result<Vec<f64>> {
    let r = ctx.residuals(p)?;
    if r.len() != len {
        return Err(Error::Numerical(format!(
            "residual length changed under perturbation ({} vs {len})",
            r.len()
        )));
    }
    Ok(r.values)
}

/// Central-difference Jacobian, one column per parameter. Columns are
/// computed in parallel but each is independent, so the result does not
/// depend on the thread count.
pub fn jacobian(ctx: &EnergyContext, params: &HandParams, m: usize, steps: &[f64; PARAM_DIM]) -> Result<DMatrix<f64>> {
    let base = params.to_vec();
    let cols: Vec<Vec<f64>> = (0..PARAM_DIM)
        .into_par_iter()
        .map(|k| {
            let h = steps[k];
            let plus = eval(ctx, &shifted(&base, k, h), m)?;
            let minus = eval(ctx, &shifted(&base, k, -h), m)?;
            Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        })
        .collect::<Result<_>>()?;
    let mut j = DMatrix::zeros(m, PARAM_DIM);
    for (k, col) in cols.iter().enumerate() {
        j.set_column(k, &DVector::from_column_slice(col));
    }
    Ok(j)
}

/// Fourth-order five-point stencil Jacobian, used to check [`jacobian`].
pub fn jacobian_five_point(
    ctx: &EnergyContext,
    params: &HandParams,
    m: usize,
    steps: &[f64; PARAM_DIM],
) -> Result<DMatrix<f64>> {
    let base = params.to_vec();
    let cols: Vec<Vec<f64>> = (0..PARAM_DIM)
        .into_par_iter()
        .map(|k| {
            let h = steps[k];
            let f = |d: f64| eval(ctx, &shifted(&base, k, d), m);
            let (p2, p1, m1, m2) = (f(2.0 * h)?, f(h)?, f(-h)?, f(-2.0 * h)?);
            Ok((0..m)
                .map(|i| (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * h))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut j = DMatrix::zeros(m, PARAM_DIM);
    for (k, col) in cols.iter().enumerate() {
        j.set_column(k, &DVector::from_column_slice(col));
    }
    Ok(j)
}

/// Solves `(JᵀJ + μI) Δ = -Jᵀr`.
pub fn damped_step(j: &DMatrix<f64>, r: &[f64], mu: f64) -> Result<DVector<f64>> {
    let r = DVector::from_column_slice(r);
    let mut a = j.tr_mul(j);
    for i in 0..a.nrows() {
        a[(i, i)] += mu;
    }
    let g = j.tr_mul(&r);
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::Numerical("damped normal matrix is not positive definite".into()))?;
    Ok(-chol.solve(&g))
}

#[derive(Clone, Debug)]
pub struct LmStep {
    pub params: HandParams,
    pub energy_before: f64,
    pub energy_after: f64,
    pub accepted: bool,
    /// The residuals at the returned parameters.
    pub residuals: ResidualVector,
}

/// One damped step; the update is kept only if it lowers the energy. A
/// rejected update is retried with tenfold damping up to
/// `config.damping_retries` times (zero by default).
pub fn lm_step(ctx: &EnergyContext, params: &HandParams, steps: &[f64; PARAM_DIM]) -> Result<LmStep> {
    let r0 = ctx.residuals(params)?;
    let f0 = r0.energy();
    let j = jacobian(ctx, params, r0.len(), steps)?;
    let base = params.to_vec();
    let mut mu = ctx.config.mu;
    for _ in 0..=ctx.config.damping_retries {
        let delta = damped_step(&j, &r0.values, mu)?;
        let v: Vec<f64> = base.iter().zip(delta.iter()).map(|(a, d)| a + d).collect();
        let candidate = HandParams::from_slice(&v)?;
        if candidate.is_finite() {
            if let Ok(r1) = ctx.residuals(&candidate) {
                if r1.energy() < f0 {
                    return Ok(LmStep {
                        params: candidate,
                        energy_before: f0,
                        energy_after: r1.energy(),
                        accepted: true,
                        residuals: r1,
                    });
                }
            }
        }
        mu *= 10.0;
    }
    Ok(LmStep {
        params: params.clone(),
        energy_before: f0,
        energy_after: f0,
        accepted: false,
        residuals: r0,
    })
}
