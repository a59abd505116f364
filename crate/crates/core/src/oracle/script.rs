//! Keyframe scripts: `camera fx fy cx cy w h`, `alpha a`, and
//! `<frame> <122 parameters>` lines. Frames between keyframes are linearly
//! interpolated.

use std::path::Path;

use crate::camera::CameraIntrinsics;
use crate::error::{Error, Result};
use crate::hand_model::{HandParams, PARAM_DIM};

#[derive(Clone, Debug, PartialEq)]
pub struct Script {
    pub intrinsics: CameraIntrinsics,
    pub alpha: Option<f64>,
    pub keyframes: Vec<(usize, HandParams)>,
}

impl Script {
    pub fn parse(text: &str) -> Result<Script> {
        let mut intrinsics = CameraIntrinsics::default();
        let mut alpha = None;
        let mut keyframes: Vec<(usize, HandParams)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Script { line, msg };
            let tokens: Vec<&str> = content.split_whitespace().collect();
            let nums = |toks: &[&str]| -> Result<Vec<f64>> {
                toks.iter()
                    .map(|t| t.parse::<f64>().map_err(|_| err(format!("`{t}` is not a number"))))
                    .collect()
            };
            match tokens[0] {
                "camera" => {
                    let v = nums(&tokens[1..])?;
                    if v.len() != 6 {
                        return Err(err(format!("camera needs 6 values, got {}", v.len())));
                    }
                    let dim = |x: f64| {
                        (x >= 1.0 && x.fract() == 0.0)
                            .then_some(x as usize)
                            .ok_or_else(|| err(format!("image size `{x}` must be a positive integer")))
                    };
                    intrinsics = CameraIntrinsics::new(v[0], v[1], v[2], v[3], dim(v[4])?, dim(v[5])?)
                        .map_err(|e| err(e.to_string()))?;
                }
                "alpha" => {
                    let v = nums(&tokens[1..])?;
                    if v.len() != 1 || !(v[0] > 0.0) {
                        return Err(err("alpha needs one positive value".into()));
                    }
                    alpha = Some(v[0]);
                }
                first => {
                    let frame: usize = first
                        .parse()
                        .map_err(|_| err(format!("expected a frame index or keyword, got `{first}`")))?;
                    let v = nums(&tokens[1..])?;
                    if v.len() != PARAM_DIM {
                        return Err(err(format!("keyframe needs {PARAM_DIM} values, got {}", v.len())));
                    }
                    let params = HandParams::from_slice(&v).map_err(|e| err(e.to_string()))?;
                    if !params.is_finite() {
                        return Err(err("non-finite parameter".into()));
                    }
                    match keyframes.last() {
                        None if frame != 0 => return Err(err("first keyframe must be frame 0".into())),
                        Some((prev, _)) if frame <= *prev => {
                            return Err(err(format!("frame {frame} does not follow frame {prev}")))
                        }
                        _ => {}
                    }
                    keyframes.push((frame, params));
                }
            }
        }
        if keyframes.is_empty() {
            return Err(Error::Empty("script has no keyframes"));
        }
        Ok(Script {
            intrinsics,
            alpha,
            keyframes,
        })
    }

    pub fn load(path: &Path) -> Result<Script> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Script::parse(&text)
    }

    pub fn num_frames(&self) -> usize {
        self.keyframes.last().map_or(0, |k| k.0 + 1)
    }

    /// Parameters for every frame.
    pub fn frames(&self) -> Vec<HandParams> {
        let mut out = Vec::with_capacity(self.num_frames());
        out.push(self.keyframes[0].1.clone());
        for pair in self.keyframes.windows(2) {
            let ((f0, a), (f1, b)) = (&pair[0], &pair[1]);
            let (va, vb) = (a.to_vec(), b.to_vec());
            for f in f0 + 1..=*f1 {
                let t = (f - f0) as f64 / (f1 - f0) as f64;
                let v: Vec<f64> = va.iter().zip(&vb).map(|(x, y)| x + (y - x) * t).collect();
                out.push(HandParams::from_slice(&v).expect("length checked"));
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let k = &self.intrinsics;
        let mut s = format!(
            "camera {:?} {:?} {:?} {:?} {} {}\n",
            k.fx, k.fy, k.cx, k.cy, k.width, k.height
        );
        if let Some(a) = self.alpha {
            s.push_str(&format!("alpha {a:?}\n"));
        }
        for (f, p) in &self.keyframes {
            s.push_str(&f.to_string());
            for v in p.to_vec() {
                s.push_str(&format!(" {v:?}"));
            }
            s.push('\n');
        }
        s
    }
}
