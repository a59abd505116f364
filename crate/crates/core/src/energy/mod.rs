//! Fitting energy as a stacked, pre-weighted residual vector.

mod boundary;
mod config;
mod terms;

pub use boundary::{
    boundary_vertices, boundary_vertices_in, freeze_silhouette, normal_weight, vertex_normals,
};
pub use config::FitConfig;
pub use terms::{
    gaussian_overlap, omega_0, omega_overlap, omega_scale, overlap_pairs, phi_dense, phi_inter,
    phi_intra, phi_key, phi_sil, PriorWeights, SilhouetteVertex,
};

use crate::error::Result;
use crate::hand_model::{collision_gaussians_posed, pose_hands, HandModel, HandParams};
use crate::maps::FittingTargets;

/// Residual blocks in stacking order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Block {
    Dense,
    Sil,
    Key,
    Intra,
    Inter,
    TikhonovBeta,
    ThresholdTheta,
    TemporalBeta,
    TemporalTheta,
    Symmetry,
    Overlap,
    Scale,
}

impl Block {
    pub const ALL: [Block; 12] = [
        Block::Dense,
        Block::Sil,
        Block::Key,
        Block::Intra,
        Block::Inter,
        Block::TikhonovBeta,
        Block::ThresholdTheta,
        Block::TemporalBeta,
        Block::TemporalTheta,
        Block::Symmetry,
        Block::Overlap,
        Block::Scale,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::Dense => "dense",
            Block::Sil => "sil",
            Block::Key => "key",
            Block::Intra => "intra",
            Block::Inter => "inter",
            Block::TikhonovBeta => "tikhonov_beta",
            Block::ThresholdTheta => "threshold_theta",
            Block::TemporalBeta => "temporal_beta",
            Block::TemporalTheta => "temporal_theta",
            Block::Symmetry => "symmetry",
            Block::Overlap => "overlap",
            Block::Scale => "scale",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualVector {
    pub values: Vec<f64>,
    /// Start of each block in `values`, plus the total length.
    pub offsets: [usize; 13],
    /// Some geometry fell behind the camera; its rows were zeroed.
    pub degenerate: bool,
}

impl ResidualVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block(&self, b: Block) -> &[f64] {
        let i = b as usize;
        &self.values[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn block_energy(&self, b: Block) -> f64 {
        self.block(b).iter().map(|r| r * r).sum()
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|r| r * r).sum()
    }
}

/// Everything the energy needs besides the parameters. Pure: safe to
/// evaluate from many threads.
#[derive(Clone, Copy)]
pub struct EnergyContext<'a> {
    pub model: &'a HandModel,
    pub config: &'a FitConfig,
    pub targets: &'a FittingTargets,
    pub prev: Option<&'a HandParams>,
    pub silhouette: &'a [SilhouetteVertex],
    pub overlap_pairs: &'a [(usize, usize)],
    /// Palm length prior, also the metric scale of the depth targets.
    pub alpha: f64,
}

impl EnergyContext<'_> {
    pub fn prior_weights(&self) -> PriorWeights {
        let c = self.config;
        PriorWeights {
            lambda_beta: c.lambda_beta,
            lambda_theta: c.lambda_theta,
            lambda_tau: if c.temporal { c.lambda_tau } else { 0.0 },
            lambda_sym: c.lambda_sym,
            t_theta: c.t_theta,
        }
    }

    pub fn residuals(&self, params: &HandParams) -> Result<ResidualVector> {
        let c = self.config;
        let intr = &c.intrinsics;
        let t = self.targets;
        let posed = pose_hands(self.model, params)?;
        let mut values = Vec::new();
        let mut offsets = [0usize; 13];
        let mut degenerate = false;
        let mut mark = |values: &Vec<f64>, b: Block| offsets[b as usize + 1] = values.len();

        phi_dense(&mut values, &posed, &t.psi, intr, c.lambda_dense, &mut degenerate);
        mark(&values, Block::Dense);
        phi_sil(&mut values, &posed, self.silhouette, &t.dt, intr, c.lambda_sil, &mut degenerate);
        mark(&values, Block::Sil);
        phi_key(&mut values, self.model, &posed, &t.keypoints, intr, c.lambda_key, &mut degenerate);
        mark(&values, Block::Key);
        phi_intra(&mut values, &posed, &t.intra, c.lambda_intra);
        mark(&values, Block::Intra);
        phi_inter(&mut values, &posed, t.inter.as_ref(), c.lambda_inter);
        mark(&values, Block::Inter);

        let w = self.prior_weights();
        let start = values.len();
        omega_0(&mut values, params, self.prev, &w);
        // omega_0 emits fixed-size sub-blocks.
        let sizes = [20, 90, 20, 102, 10];
        let mut at = start;
        for (b, n) in [
            Block::TikhonovBeta,
            Block::ThresholdTheta,
            Block::TemporalBeta,
            Block::TemporalTheta,
            Block::Symmetry,
        ]
        .into_iter()
        .zip(sizes)
        {
            at += n;
            offsets[b as usize + 1] = at;
        }
        debug_assert_eq!(at, values.len());

        let gaussians = collision_gaussians_posed(self.model, params, &posed);
        omega_overlap(&mut values, &gaussians, self.overlap_pairs, c.lambda_overlap);
        offsets[Block::Overlap as usize + 1] = values.len();
        omega_scale(&mut values, self.model, params, self.alpha, c.lambda_scale);
        offsets[Block::Scale as usize + 1] = values.len();

        if values.iter().any(|v| !v.is_finite()) {
            return Err(crate::error::Error::NonFinite("residual vector"));
        }
        Ok(ResidualVector {
            values,
            offsets,
            degenerate,
        })
    }

    pub fn energy(&self, params: &HandParams) -> Result<f64> {
        Ok(self.residuals(params)?.energy())
    }
}

/// Pair list for the fixed collision layout of `model`.
pub fn model_overlap_pairs(model: &HandModel) -> Vec<(usize, usize)> {
    let g = collision_gaussians_posed(
        model,
        &HandParams::default(),
        &pose_hands(model, &HandParams::default()).expect("rest pose is finite"),
    );
    overlap_pairs(&g)
}

#[cfg(test)]
mod tests;
