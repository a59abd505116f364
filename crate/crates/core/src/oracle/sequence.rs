//! Synthetic sequences on disk: `frame_NNNN/` map bundles, `gt.csv`,
//! `gt_params.csv` and `camera.cfg`.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::camera::{CameraIntrinsics, Pixel};
use crate::error::{Error, Result};
use crate::hand_model::{Hand, HandModel};
use crate::solver::{save_records, FrameRecord};

use super::noise::{apply_noise, NoiseSpec};
use super::render::{render_maps, GtPoint, RenderedFrame};
use super::script::Script;

pub const GT_FILE: &str = "gt.csv";
pub const GT_PARAMS_FILE: &str = "gt_params.csv";
pub const CAMERA_FILE: &str = "camera.cfg";
const GT_HEADER: &str = "frame,hand,joint,u,v,x,y,z,occluded";

pub fn frame_dir(root: &Path, frame: usize) -> PathBuf {
    root.join(format!("frame_{frame:04}"))
}

/// Renders every frame of `script`, noise included.
pub fn render_sequence(
    model: &HandModel,
    script: &Script,
    noise: &NoiseSpec,
    alpha: f64,
) -> Result<Vec<RenderedFrame>> {
    script
        .frames()
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut f = render_maps(model, p, &script.intrinsics, alpha, i)?;
            apply_noise(&mut f, noise, i);
            Ok(f)
        })
        .collect()
}

pub fn write_gt<W: Write>(out: &mut W, points: &[GtPoint]) -> Result<()> {
    let mut s = String::from(GT_HEADER);
    s.push('\n');
    for g in points {
        s.push_str(&format!(
            "{},{},{},{:?},{:?},{:?},{:?},{:?},{}\n",
            g.frame,
            g.hand.name(),
            g.id,
            g.pixel.x,
            g.pixel.y,
            g.position.x,
            g.position.y,
            g.position.z,
            g.occluded as u8
        ));
    }
    out.write_all(s.as_bytes()).map_err(|e| Error::io("<gt>", e))
}

pub fn read_gt<R: BufRead>(input: R) -> Result<Vec<GtPoint>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|e| Error::io("<gt>", e))?;
        let err = |msg: String| Error::Csv { line: line_no, msg };
        if line.trim().is_empty() || line.starts_with("frame") {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 9 {
            return Err(err(format!("expected 9 fields, got {}", f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
        out.push(GtPoint {
            frame: f[0].parse().map_err(|_| err(format!("bad frame `{}`", f[0])))?,
            hand: Hand::parse(f[1]).ok_or_else(|| err(format!("bad hand `{}`", f[1])))?,
            id: f[2].parse().map_err(|_| err(format!("bad joint id `{}`", f[2])))?,
            pixel: Pixel::new(num(f[3])?, num(f[4])?),
            position: Vector3::new(num(f[5])?, num(f[6])?, num(f[7])?),
            occluded: match f[8] {
                "0" => false,
                "1" => true,
                o => return Err(err(format!("bad occlusion flag `{o}`"))),
            },
        });
    }
    Ok(out)
}

pub fn load_gt(path: &Path) -> Result<Vec<GtPoint>> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_gt(std::io::BufReader::new(f))
}

pub fn save_gt(path: &Path, points: &[GtPoint]) -> Result<()> {
    let mut buf = Vec::new();
    write_gt(&mut buf, points)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn camera_config_text(k: &CameraIntrinsics, alpha: f64) -> String {
    format!(
        "fx = {:?}\nfy = {:?}\ncx = {:?}\ncy = {:?}\nwidth = {}\nheight = {}\nalpha = {:?}\n",
        k.fx, k.fy, k.cx, k.cy, k.width, k.height, alpha
    )
}

/// Renders and writes a sequence; returns the number of frames.
pub fn generate_sequence(
    model: &HandModel,
    script: &Script,
    noise: &NoiseSpec,
    alpha: f64,
    out: &Path,
) -> Result<usize> {
    let frames = render_sequence(model, script, noise, alpha)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut gt = Vec::new();
    for (i, f) in frames.iter().enumerate() {
        f.maps.save_bundle(&frame_dir(out, i))?;
        gt.extend_from_slice(&f.gt);
    }
    save_gt(&out.join(GT_FILE), &gt)?;
    let records: Vec<FrameRecord> = script
        .frames()
        .into_iter()
        .enumerate()
        .map(|(frame, params)| FrameRecord {
            frame,
            params,
            energy: 0.0,
            accepted: 0,
        })
        .collect();
    save_records(&out.join(GT_PARAMS_FILE), &records)?;
    let cam = out.join(CAMERA_FILE);
    std::fs::write(&cam, camera_config_text(&script.intrinsics, alpha)).map_err(|e| Error::io(&cam, e))?;
    Ok(frames.len())
}

/// Frame directories of a sequence in index order.
pub fn list_frames(root: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut frames: Vec<(usize, PathBuf)> = Vec::new();
    for e in entries {
        let e = e.map_err(|e| Error::io(root, e))?;
        let name = e.file_name();
        let Some(idx) = name.to_str().and_then(|n| n.strip_prefix("frame_")).and_then(|n| n.parse().ok()) else {
            continue;
        };
        frames.push((idx, e.path()));
    }
    if frames.is_empty() {
        return Err(Error::Format(format!("{}: no frame_NNNN directories", root.display())));
    }
    frames.sort();
    for (expect, (idx, p)) in frames.iter().enumerate() {
        if *idx != expect {
            return Err(Error::Format(format!(
                "missing frame {expect} (next found: {})",
                p.display()
            )));
        }
    }
    Ok(frames.into_iter().map(|f| f.1).collect())
}
