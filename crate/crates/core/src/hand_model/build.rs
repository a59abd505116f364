//! Procedural low-poly hand: a lofted elliptical palm tube and five lofted
//! finger tubes, each closed with cap vertices.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::{geodesic_distances, mds_embedding, normalize_unit_cube};
use super::{BoneEnd, GaussianAttachment, HandModel, NUM_FINGERS, NUM_JOINTS, NUM_SHAPE};

const FINGER_RING: usize = 12;
const PALM_RING: usize = 16;
const PALM_STATIONS: usize = 9;
const PALM_LENGTH: f64 = 0.096;
const BLEND: f64 = 0.005;

struct FingerSpec {
    base: Vector3<f64>,
    dir: Vector3<f64>,
    lengths: [f64; 3],
    radius: f64,
}

fn finger_specs(jitter: &mut impl FnMut() -> f64) -> [FingerSpec; NUM_FINGERS] {
    let spec = |base: [f64; 3], dir: [f64; 3], lengths: [f64; 3], radius: f64| FingerSpec {
        base: Vector3::from(base),
        dir: Vector3::from(dir).normalize(),
        lengths,
        radius,
    };
    let mut j = |x: f64| x * (1.0 + jitter());
    [
        spec(
            [0.024, -0.022, -0.006],
            [0.62, -0.74, -0.26],
            [j(0.040), j(0.032), j(0.028)],
            0.0105,
        ),
        spec([0.025, -0.088, 0.0], [0.06, -1.0, 0.0], [j(0.036), j(0.022), j(0.019)], 0.0088),
        spec([0.0, -0.090, 0.0], [0.0, -1.0, 0.0], [j(0.040), j(0.025), j(0.020)], 0.0090),
        spec([-0.022, -0.087, 0.0], [-0.05, -1.0, 0.0], [j(0.037), j(0.024), j(0.019)], 0.0085),
        spec([-0.042, -0.080, 0.0], [-0.13, -1.0, 0.0], [j(0.030), j(0.018), j(0.017)], 0.0075),
    ]
}

#[derive(Clone, Copy)]
enum Part {
    Palm,
    Finger {
        finger: usize,
        /// Axial coordinate relative to the finger's first joint.
        s: f64,
        center: Vector3<f64>,
    },
}

#[derive(Default)]
struct MeshBuilder {
    vertices: Vec<Vector3<f64>>,
    parts: Vec<Part>,
    triangles: Vec<[u32; 3]>,
}

struct Ring {
    center: Vector3<f64>,
    ra: f64,
    rb: f64,
    s: f64,
}

impl MeshBuilder {
    fn push(&mut self, p: Vector3<f64>, part: Part) -> usize {
        self.vertices.push(p);
        self.parts.push(part);
        self.vertices.len() - 1
    }

    /// Closed tube along `axis` with cross-section frame `(u, v)` such that
    /// `u x v = axis`. Returns the vertex indices of every ring.
    #[allow(clippy::too_many_arguments)]
    fn tube(
        &mut self,
        rings: &[Ring],
        n: usize,
        u: Vector3<f64>,
        v: Vector3<f64>,
        start_cap: (Vector3<f64>, f64),
        end_cap: (Vector3<f64>, f64),
        finger: Option<usize>,
    ) -> (Vec<Vec<usize>>, usize, usize) {
        let part = |s: f64, c: Vector3<f64>| match finger {
            Some(f) => Part::Finger {
                finger: f,
                s,
                center: c,
            },
            None => Part::Palm,
        };
        let mut idx = Vec::with_capacity(rings.len());
        for r in rings {
            let ring = (0..n)
                .map(|i| {
                    let phi = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    let p = r.center + u * (r.ra * phi.cos()) + v * (r.rb * phi.sin());
                    self.push(p, part(r.s, r.center))
                })
                .collect::<Vec<_>>();
            idx.push(ring);
        }
        for k in 0..rings.len() - 1 {
            for i in 0..n {
                let i1 = (i + 1) % n;
                let a = idx[k][i] as u32;
                let b = idx[k][i1] as u32;
                let c = idx[k + 1][i1] as u32;
                let d = idx[k + 1][i] as u32;
                self.triangles.push([a, b, c]);
                self.triangles.push([a, c, d]);
            }
        }
        let s0 = self.push(start_cap.0, part(start_cap.1, start_cap.0));
        let first = &idx[0];
        for i in 0..n {
            let i1 = (i + 1) % n;
            self.triangles
                .push([s0 as u32, first[i1] as u32, first[i] as u32]);
        }
        let e = self.push(end_cap.0, part(end_cap.1, end_cap.0));
        let last = idx.last().unwrap();
        for i in 0..n {
            let i1 = (i + 1) % n;
            self.triangles.push([e as u32, last[i] as u32, last[i1] as u32]);
        }
        (idx, s0, e)
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Skinning weights of a finger surface point at axial coordinate `s`.
fn finger_weights(finger: usize, s: f64, lengths: &[f64; 3]) -> Vec<(usize, f64)> {
    let j0 = 1 + 3 * finger;
    // (boundary position, bone below, bone above)
    let bounds = [
        (0.0, 0usize, j0),
        (lengths[0], j0, j0 + 1),
        (lengths[0] + lengths[1], j0 + 1, j0 + 2),
    ];
    for &(b, lo, hi) in &bounds {
        if (s - b).abs() < BLEND {
            let t = smoothstep((s - b + BLEND) / (2.0 * BLEND));
            if t <= 0.0 {
                return vec![(lo, 1.0)];
            }
            if t >= 1.0 {
                return vec![(hi, 1.0)];
            }
            return vec![(lo, 1.0 - t), (hi, t)];
        }
    }
    let owner = if s < 0.0 {
        0
    } else if s < lengths[0] {
        j0
    } else if s < lengths[0] + lengths[1] {
        j0 + 1
    } else {
        j0 + 2
    };
    vec![(owner, 1.0)]
}

/// Builds the procedural hand model. Fixed seeds yield bitwise identical
/// models; the seed perturbs phalanx lengths by at most 3%.
/// Surface encoding used for dense matching.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FeatureEncoding {
    /// Mean-shape rest positions scaled per axis into the unit cube.
    /// Injective on the surface, so hidden vertices rarely find a match
    /// within the matching threshold.
    #[default]
    RestPosition,
    /// Classical MDS of surface geodesics. Front and back of the palm and
    /// fingers receive nearly the same code.
    GeodesicMds,
}

pub fn build_model(seed: u64) -> HandModel {
    build_model_with(seed, FeatureEncoding::default())
}

pub fn build_model_with(seed: u64, encoding: FeatureEncoding) -> HandModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = || {
        if seed == 0 {
            0.0
        } else {
            rng.random_range(-0.03..0.03)
        }
    };
    let fingers = finger_specs(&mut jitter);

    let mut mb = MeshBuilder::default();

    // Palm: elliptical tube from the wrist (y = 0) to the knuckles (-y).
    let palm_rings: Vec<Ring> = (0..PALM_STATIONS)
        .map(|k| {
            let t = k as f64 / (PALM_STATIONS - 1) as f64;
            Ring {
                center: Vector3::new(0.0, -PALM_LENGTH * t, 0.0),
                ra: 0.030 + 0.016 * t,
                rb: 0.013,
                s: 0.0,
            }
        })
        .collect();
    let (palm_idx, _, _) = mb.tube(
        &palm_rings,
        PALM_RING,
        Vector3::x(),
        Vector3::z(),
        (Vector3::new(0.0, 0.004, 0.0), 0.0),
        (Vector3::new(0.0, -PALM_LENGTH - 0.006, 0.0), 0.0),
        None,
    );
    let palm_count = mb.vertices.len();

    let mut joint_regressor: Vec<Vec<(usize, f64)>> = vec![Vec::new(); NUM_JOINTS];
    let w_palm = 1.0 / PALM_RING as f64;
    joint_regressor[0] = palm_idx[0].iter().map(|&v| (v, w_palm)).collect();

    let mut fingertips = [0usize; NUM_FINGERS];
    let mut finger_first = [0usize; NUM_FINGERS];
    for (f, spec) in fingers.iter().enumerate() {
        let [l1, l2, l3] = spec.lengths;
        let total = l1 + l2 + l3;
        let d = spec.dir;
        let u = (Vector3::x() - d * Vector3::x().dot(&d)).normalize();
        let v = d.cross(&u);
        let stations = [
            -0.012,
            0.0,
            0.5 * l1,
            l1,
            l1 + 0.5 * l2,
            l1 + l2,
            l1 + l2 + 0.5 * l3,
            l1 + l2 + 0.85 * l3,
        ];
        let rings: Vec<Ring> = stations
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let taper = 1.0 - 0.18 * s.max(0.0) / total;
                let end = if k == stations.len() - 1 { 0.75 } else { 1.0 };
                let r = spec.radius * taper * end;
                Ring {
                    center: spec.base + d * s,
                    ra: r * 1.05,
                    rb: r,
                    s,
                }
            })
            .collect();
        finger_first[f] = mb.vertices.len();
        let (idx, _, tip) = mb.tube(
            &rings,
            FINGER_RING,
            u,
            v,
            (spec.base + d * -0.016, -0.016),
            (spec.base + d * total, total),
            Some(f),
        );
        fingertips[f] = tip;
        let w = 1.0 / FINGER_RING as f64;
        // Stations 1, 3 and 5 sit on the finger's joints.
        for (k, station) in [1usize, 3, 5].iter().enumerate() {
            joint_regressor[1 + 3 * f + k] = idx[*station].iter().map(|&v| (v, w)).collect();
        }
    }

    let n = mb.vertices.len();

    let skinning: Vec<Vec<(usize, f64)>> = mb
        .parts
        .iter()
        .map(|part| match *part {
            Part::Palm => vec![(0, 1.0)],
            Part::Finger { finger, s, .. } => finger_weights(finger, s, &fingers[finger].lengths),
        })
        .collect();

    // Shape modes: displacement per unit coefficient (meters).
    let mut basis = vec![vec![Vector3::zeros(); n]; NUM_SHAPE];
    for (i, (p, part)) in mb.vertices.iter().zip(&mb.parts).enumerate() {
        basis[0][i] = p * 0.08;
        match *part {
            Part::Palm => {
                basis[2][i] = Vector3::new(0.1 * p.x, 0.0, 0.0);
                basis[3][i] = Vector3::new(0.0, 0.1 * p.y, 0.0);
                basis[5][i] = Vector3::new(0.0, 0.0, 0.1 * p.z);
            }
            Part::Finger { finger, s, center } => {
                let spec = &fingers[finger];
                let axial = spec.dir * (0.1 * s.max(0.0));
                basis[1][i] = axial;
                basis[2][i] = Vector3::new(0.1 * spec.base.x, 0.0, 0.0);
                basis[3][i] = Vector3::new(0.0, 0.1 * spec.base.y, 0.0);
                basis[4][i] = (p - center) * 0.1;
                match finger {
                    0 => {
                        basis[6][i] = axial;
                        basis[9][i] = Vector3::new(0.01, 0.005, 0.0);
                    }
                    1 => basis[7][i] = axial,
                    3 | 4 => basis[8][i] = axial,
                    _ => {}
                }
            }
        }
    }

    let mut gaussian_layout = Vec::with_capacity(NUM_JOINTS);
    gaussian_layout.push(GaussianAttachment {
        bone: 0,
        end: BoneEnd::Joint(super::MIDDLE_MCP),
        position: 0.5,
        radius: 0.05,
    });
    for f in 0..NUM_FINGERS {
        for k in 0..3 {
            let bone = 1 + 3 * f + k;
            let end = if k < 2 {
                BoneEnd::Joint(bone + 1)
            } else {
                BoneEnd::Vertex(fingertips[f])
            };
            gaussian_layout.push(GaussianAttachment {
                bone,
                end,
                position: 0.5,
                radius: if f == 0 && k == 0 { 0.06 } else { 0.05 },
            });
        }
    }

    let match_features = match encoding {
        FeatureEncoding::RestPosition => normalize_unit_cube(&mb.vertices),
        FeatureEncoding::GeodesicMds => geodesic_mds_features(
            &mb.vertices,
            &mb.triangles,
            &finger_first,
            palm_count,
            fingertips[2],
        ),
    };

    HandModel {
        template: mb.vertices,
        triangles: mb.triangles,
        joint_regressor,
        skinning,
        shape_basis: basis,
        match_features,
        gaussian_layout,
        fingertips,
    }
}

fn geodesic_mds_features(
    vertices: &[Vector3<f64>],
    triangles: &[[u32; 3]],
    finger_first: &[usize; NUM_FINGERS],
    palm_count: usize,
    anchor_tip: usize,
) -> Vec<Vector3<f64>> {
    // Geodesics over the surface graph; finger tubes are bridged to the palm
    // where they enter it.
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(3 * triangles.len());
    for t in triangles {
        for k in 0..3 {
            let (a, b) = (t[k] as usize, t[(k + 1) % 3] as usize);
            edges.push((a.min(b), a.max(b)));
        }
    }
    for &first in finger_first {
        // Base and first-joint rings.
        for v in first..first + 2 * FINGER_RING {
            let nearest = (0..palm_count)
                .min_by(|&a, &b| {
                    let da = (vertices[a] - vertices[v]).norm_squared();
                    let db = (vertices[b] - vertices[v]).norm_squared();
                    da.total_cmp(&db)
                })
                .unwrap();
            edges.push((nearest.min(v), nearest.max(v)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let geo = geodesic_distances(&vertices, &edges);
    let mut embedding = mds_embedding(&geo, 3);
    // Fix the eigenvector signs: the middle fingertip is positive on every axis.
    let anchor = anchor_tip;
    for axis in 0..3 {
        if embedding[anchor][axis] < 0.0 {
            for e in embedding.iter_mut() {
                e[axis] = -e[axis];
            }
        }
    }
    normalize_unit_cube(&embedding)
}
