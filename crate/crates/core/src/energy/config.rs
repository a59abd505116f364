//! Fitting configuration and its `key = value` file format.

use std::path::Path;

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub lambda_dense: f64,
    pub lambda_sil: f64,
    pub lambda_key: f64,
    pub lambda_intra: f64,
    pub lambda_inter: f64,
    pub lambda_beta: f64,
    pub lambda_theta: f64,
    pub lambda_tau: f64,
    pub lambda_sym: f64,
    pub lambda_overlap: f64,
    pub lambda_scale: f64,
    pub t_theta: f64,
    pub t_r: f64,
    pub t_c: f64,
    pub t_h: f64,
    pub mu: f64,
    /// Retries of a rejected LM update with tenfold damping each.
    pub damping_retries: usize,
    /// Palm length prior in meters; `None` uses the model's mean-shape palm.
    pub alpha: Option<f64>,
    pub intrinsics: CameraIntrinsics,
    pub iterations: usize,
    /// Temporal smoothing rows active from the second frame on.
    pub temporal: bool,
    /// Zero each hand's distance transform under the other hand.
    pub occlusion_aware: bool,
    pub model_seed: u64,
    /// Central-difference step for angles and shape coefficients.
    pub fd_step: f64,
    /// Central-difference step for translations (meters).
    pub fd_step_translation: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            lambda_dense: 0.003,
            lambda_sil: 0.0045,
            lambda_key: 0.005,
            lambda_intra: 0.3,
            lambda_inter: 0.1,
            lambda_beta: 0.025,
            lambda_theta: 0.0375,
            lambda_tau: 0.3,
            lambda_sym: 0.5,
            lambda_overlap: 4.6e5,
            lambda_scale: 1e3,
            t_theta: 0.1,
            t_r: 2.3,
            t_c: 0.04,
            t_h: 0.7,
            mu: 1.0,
            damping_retries: 0,
            alpha: None,
            intrinsics: CameraIntrinsics::default(),
            iterations: 10,
            temporal: true,
            occlusion_aware: true,
            model_seed: 0,
            fd_step: 1e-4,
            fd_step_translation: 1e-5,
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let lambdas = [
            ("lambda_dense", self.lambda_dense),
            ("lambda_sil", self.lambda_sil),
            ("lambda_key", self.lambda_key),
            ("lambda_intra", self.lambda_intra),
            ("lambda_inter", self.lambda_inter),
            ("lambda_beta", self.lambda_beta),
            ("lambda_theta", self.lambda_theta),
            ("lambda_tau", self.lambda_tau),
            ("lambda_sym", self.lambda_sym),
            ("lambda_overlap", self.lambda_overlap),
            ("lambda_scale", self.lambda_scale),
        ];
        for (k, v) in lambdas {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{k} must be >= 0, got {v}")));
            }
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::InvalidArgument(format!("alpha must be > 0, got {a}")));
            }
        }
        if !(self.mu > 0.0) {
            return Err(Error::InvalidArgument(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.fd_step > 0.0 && self.fd_step_translation > 0.0) {
            return Err(Error::InvalidArgument("finite-difference steps must be > 0".into()));
        }
        self.intrinsics.validate()
    }

    /// Parses `key = value` lines on top of the defaults. `#` starts a
    /// comment; unknown keys are rejected.
    pub fn parse(text: &str) -> Result<FitConfig> {
        let mut c = FitConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                line,
                msg: format!("expected `key = value`, got `{content}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let num = || -> Result<f64> {
                value.parse::<f64>().map_err(|_| Error::Config {
                    line,
                    msg: format!("`{key}` expects a number, got `{value}`"),
                })
            };
            let int = || -> Result<u64> {
                value.parse::<u64>().map_err(|_| Error::Config {
                    line,
                    msg: format!("`{key}` expects a non-negative integer, got `{value}`"),
                })
            };
            let boolean = || -> Result<bool> {
                parse_bool(value).ok_or_else(|| Error::Config {
                    line,
                    msg: format!("`{key}` expects true/false, got `{value}`"),
                })
            };
            match key {
                "lambda_dense" => c.lambda_dense = num()?,
                "lambda_sil" => c.lambda_sil = num()?,
                "lambda_key" => c.lambda_key = num()?,
                "lambda_intra" => c.lambda_intra = num()?,
                "lambda_inter" => c.lambda_inter = num()?,
                "lambda_beta" => c.lambda_beta = num()?,
                "lambda_theta" => c.lambda_theta = num()?,
                "lambda_tau" => c.lambda_tau = num()?,
                "lambda_sym" => c.lambda_sym = num()?,
                "lambda_overlap" => c.lambda_overlap = num()?,
                "lambda_scale" => c.lambda_scale = num()?,
                "t_theta" => c.t_theta = num()?,
                "t_r" => c.t_r = num()?,
                "t_c" => c.t_c = num()?,
                "t_h" => c.t_h = num()?,
                "mu" => c.mu = num()?,
                "damping_retries" => c.damping_retries = int()? as usize,
                "alpha" => c.alpha = Some(num()?),
                "fx" => c.intrinsics.fx = num()?,
                "fy" => c.intrinsics.fy = num()?,
                "cx" => c.intrinsics.cx = num()?,
                "cy" => c.intrinsics.cy = num()?,
                "width" => c.intrinsics.width = int()? as usize,
                "height" => c.intrinsics.height = int()? as usize,
                "iterations" => c.iterations = int()? as usize,
                "temporal" => c.temporal = boolean()?,
                "occlusion_aware" => c.occlusion_aware = boolean()?,
                "model_seed" => c.model_seed = int()?,
                "fd_step" => c.fd_step = num()?,
                "fd_step_translation" => c.fd_step_translation = num()?,
                other => {
                    return Err(Error::Config {
                        line,
                        msg: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<FitConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FitConfig::parse(&text)
    }

    /// Serializes every key, so `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let k = &self.intrinsics;
        let mut s = String::new();
        let num = |s: &mut String, key: &str, v: f64| s.push_str(&format!("{key} = {v:?}\n"));
        num(&mut s, "lambda_dense", self.lambda_dense);
        num(&mut s, "lambda_sil", self.lambda_sil);
        num(&mut s, "lambda_key", self.lambda_key);
        num(&mut s, "lambda_intra", self.lambda_intra);
        num(&mut s, "lambda_inter", self.lambda_inter);
        num(&mut s, "lambda_beta", self.lambda_beta);
        num(&mut s, "lambda_theta", self.lambda_theta);
        num(&mut s, "lambda_tau", self.lambda_tau);
        num(&mut s, "lambda_sym", self.lambda_sym);
        num(&mut s, "lambda_overlap", self.lambda_overlap);
        num(&mut s, "lambda_scale", self.lambda_scale);
        num(&mut s, "t_theta", self.t_theta);
        num(&mut s, "t_r", self.t_r);
        num(&mut s, "t_c", self.t_c);
        num(&mut s, "t_h", self.t_h);
        num(&mut s, "mu", self.mu);
        s.push_str(&format!("damping_retries = {}\n", self.damping_retries));
        if let Some(a) = self.alpha {
            num(&mut s, "alpha", a);
        }
        num(&mut s, "fx", k.fx);
        num(&mut s, "fy", k.fy);
        num(&mut s, "cx", k.cx);
        num(&mut s, "cy", k.cy);
        s.push_str(&format!("width = {}\nheight = {}\n", k.width, k.height));
        s.push_str(&format!("iterations = {}\n", self.iterations));
        s.push_str(&format!("temporal = {}\n", self.temporal));
        s.push_str(&format!("occlusion_aware = {}\n", self.occlusion_aware));
        s.push_str(&format!("model_seed = {}\n", self.model_seed));
        num(&mut s, "fd_step", self.fd_step);
        num(&mut s, "fd_step_translation", self.fd_step_translation);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_hyperparameters() {
        let c = FitConfig::default();
        assert_eq!(c.lambda_dense, 0.003);
        assert_eq!(c.lambda_sil, 0.0045);
        assert_eq!(c.lambda_key, 0.005);
        assert_eq!(c.lambda_intra, 0.3);
        assert_eq!(c.lambda_inter, 0.1);
        assert_eq!(c.lambda_beta, 0.025);
        assert_eq!(c.lambda_theta, 0.0375);
        assert_eq!(c.lambda_tau, 0.3);
        assert_eq!(c.lambda_sym, 0.5);
        assert_eq!(c.lambda_overlap, 4.6e5);
        assert_eq!(c.lambda_scale, 1e3);
        assert_eq!(c.t_theta, 0.1);
        assert_eq!(c.t_r, 2.3);
        assert_eq!(c.t_c, 0.04);
        assert_eq!(c.t_h, 0.7);
        assert_eq!(c.mu, 1.0);
        assert_eq!(c.iterations, 10);
    }

    #[test]
    fn parses_overrides_and_comments() {
        let c = FitConfig::parse("# camera\nfx = 500\nfy=500 # inline\n\nwidth = 640\ntemporal = false\nalpha = 0.085\n").unwrap();
        assert_eq!(c.intrinsics.fx, 500.0);
        assert_eq!(c.intrinsics.width, 640);
        assert!(!c.temporal);
        assert_eq!(c.alpha, Some(0.085));
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let e = FitConfig::parse("fx = 1\nbogus = 3\n").unwrap_err();
        assert!(e.to_string().contains("line 2") && e.to_string().contains("bogus"));
        assert!(FitConfig::parse("lambda_dense 3").is_err());
        assert!(FitConfig::parse("lambda_dense = abc").is_err());
        assert!(FitConfig::parse("lambda_dense = -1").is_err());
        assert!(FitConfig::parse("alpha = 0").is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut c = FitConfig::default();
        c.alpha = Some(0.0912);
        c.lambda_tau = 0.0;
        c.intrinsics.cx = 100.25;
        assert_eq!(FitConfig::parse(&c.to_text()).unwrap(), c);
    }
}
