//! Model blob (a sequence of R2HM records) and Wavefront OBJ dumps.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use super::{BoneEnd, GaussianAttachment, HandModel, NUM_FINGERS, NUM_JOINTS, NUM_SHAPE};
use crate::error::{Error, Result};
use crate::maps::format::{read_raster, write_raster, Raster};

fn vec3_raster(points: &[Vector3<f64>]) -> Raster {
    Raster::f64(points.len(), 1, 3, points.iter().flat_map(|p| [p.x, p.y, p.z]).collect())
}

fn raster_vec3(r: &Raster) -> Result<Vec<Vector3<f64>>> {
    let d = r.as_f64()?;
    Ok(d.chunks_exact(3).map(|c| Vector3::new(c[0], c[1], c[2])).collect())
}

fn sparse_to_dense(rows: &[Vec<(usize, f64)>], cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows.len() * cols];
    for (r, row) in rows.iter().enumerate() {
        for &(c, w) in row {
            out[r * cols + c] = w;
        }
    }
    out
}

fn dense_to_sparse(data: &[f64], cols: usize) -> Vec<Vec<(usize, f64)>> {
    data.chunks_exact(cols)
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(c, w)| (c, *w))
                .collect()
        })
        .collect()
}

pub fn write_model<W: Write>(out: &mut W, model: &HandModel) -> Result<()> {
    let n = model.num_vertices();
    let records = [
        vec3_raster(&model.template),
        Raster::f64(
            model.triangles.len(),
            1,
            3,
            model.triangles.iter().flatten().map(|&i| i as f64).collect(),
        ),
        Raster::f64(NUM_JOINTS, n, 1, sparse_to_dense(&model.joint_regressor, n)),
        Raster::f64(n, NUM_JOINTS, 1, sparse_to_dense(&model.skinning, NUM_JOINTS)),
        Raster::f64(
            NUM_SHAPE,
            n,
            3,
            model.shape_basis.iter().flatten().flat_map(|p| [p.x, p.y, p.z]).collect(),
        ),
        vec3_raster(&model.match_features),
        Raster::f64(
            model.gaussian_layout.len(),
            1,
            5,
            model
                .gaussian_layout
                .iter()
                .flat_map(|g| {
                    let (kind, idx) = match g.end {
                        BoneEnd::Joint(k) => (0.0, k),
                        BoneEnd::Vertex(v) => (1.0, v),
                    };
                    [g.bone as f64, kind, idx as f64, g.position, g.radius]
                })
                .collect(),
        ),
        Raster::f64(1, NUM_FINGERS, 1, model.fingertips.iter().map(|&v| v as f64).collect()),
    ];
    for r in &records {
        write_raster(out, r)?;
    }
    Ok(())
}

fn index(v: f64, what: &str) -> Result<usize> {
    if v < 0.0 || v.fract() != 0.0 || !v.is_finite() {
        return Err(Error::Format(format!("invalid {what} index {v}")));
    }
    Ok(v as usize)
}

pub fn read_model<R: Read>(input: &mut R) -> Result<HandModel> {
    let template = raster_vec3(&read_raster(input)?.expect_channels(3)?)?;
    let n = template.len();
    let tri = read_raster(input)?.expect_channels(3)?;
    let triangles = tri
        .as_f64()?
        .chunks_exact(3)
        .map(|c| -> Result<[u32; 3]> {
            Ok([
                index(c[0], "triangle")? as u32,
                index(c[1], "triangle")? as u32,
                index(c[2], "triangle")? as u32,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let reg = read_raster(input)?.expect_shape(NUM_JOINTS, n, 1)?;
    let joint_regressor = dense_to_sparse(reg.as_f64()?, n);
    let skin = read_raster(input)?.expect_shape(n, NUM_JOINTS, 1)?;
    let skinning = dense_to_sparse(skin.as_f64()?, NUM_JOINTS);
    let basis = read_raster(input)?.expect_shape(NUM_SHAPE, n, 3)?;
    let flat = raster_vec3(&basis)?;
    let shape_basis = flat.chunks_exact(n).map(|c| c.to_vec()).collect();
    let match_features = raster_vec3(&read_raster(input)?.expect_shape(n, 1, 3)?)?;
    let layout = read_raster(input)?.expect_channels(5)?;
    let gaussian_layout = layout
        .as_f64()?
        .chunks_exact(5)
        .map(|g| -> Result<GaussianAttachment> {
            let idx = index(g[2], "bone end")?;
            Ok(GaussianAttachment {
                bone: index(g[0], "bone")?,
                end: if g[1] == 0.0 {
                    BoneEnd::Joint(idx)
                } else {
                    BoneEnd::Vertex(idx)
                },
                position: g[3],
                radius: g[4],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let tips = read_raster(input)?.expect_shape(1, NUM_FINGERS, 1)?;
    let mut fingertips = [0usize; NUM_FINGERS];
    for (t, v) in fingertips.iter_mut().zip(tips.as_f64()?) {
        *t = index(*v, "fingertip")?;
    }
    let model = HandModel {
        template,
        triangles,
        joint_regressor,
        skinning,
        shape_basis,
        match_features,
        gaussian_layout,
        fingertips,
    };
    model.validate()?;
    Ok(model)
}

impl HandModel {
    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        write_model(&mut w, self)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<HandModel> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        read_model(&mut BufReader::new(f))
    }
}

/// Writes vertices and 0-based triangles as a Wavefront OBJ text mesh.
pub fn write_obj<W: Write>(out: &mut W, vertices: &[Vector3<f64>], triangles: &[[u32; 3]]) -> Result<()> {
    let wrap = |e| Error::Format(format!("obj write failed: {e}"));
    for v in vertices {
        writeln!(out, "v {:.6} {:.6} {:.6}", v.x, v.y, v.z).map_err(wrap)?;
    }
    for t in triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1).map_err(wrap)?;
    }
    Ok(())
}
