//! Procedural two-hand surface model with a MANO-style parameter interface.
//!
//! Each hand has 10 shape coefficients and 51 pose parameters
//! (global axis-angle, global translation, 15 articulated joints as
//! axis-angle). Vertices are obtained by linear blend skinning of the
//! shape-displaced template followed by the global rigid transform. The
//! left hand is the x-mirror of the right template.

mod build;
mod features;
mod io;

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};

pub use build::{build_model, build_model_with, FeatureEncoding};
pub use features::{geodesic_distances, mds_embedding};
pub use io::{read_model, write_model, write_obj};

pub const NUM_JOINTS: usize = 16;
pub const NUM_SHAPE: usize = 10;
pub const ARTICULATION_DIM: usize = 45;
pub const POSE_DIM: usize = 51;
pub const PARAM_DIM: usize = 2 * (NUM_SHAPE + POSE_DIM);

/// Wrist is joint 0; finger `f` (thumb, index, middle, ring, pinky) owns
/// joints `1 + 3f ..= 3 + 3f`, ordered from the palm outwards.
pub const JOINT_PARENTS: [Option<usize>; NUM_JOINTS] = [
    None,
    Some(0),
    Some(1),
    Some(2),
    Some(0),
    Some(4),
    Some(5),
    Some(0),
    Some(7),
    Some(8),
    Some(0),
    Some(10),
    Some(11),
    Some(0),
    Some(13),
    Some(14),
];

pub const WRIST: usize = 0;
pub const MIDDLE_MCP: usize = 7;

/// The 14 annotated interior joints per hand: every finger joint except
/// the thumb base.
pub const INTERIOR_JOINTS: [usize; 14] = [2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15];

pub const NUM_FINGERS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Hand {
    Left,
    Right,
}

impl Hand {
    pub const BOTH: [Hand; 2] = [Hand::Left, Hand::Right];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Hand::Left => 0,
            Hand::Right => 1,
        }
    }

    pub fn from_index(i: usize) -> Hand {
        if i == 0 {
            Hand::Left
        } else {
            Hand::Right
        }
    }

    pub fn other(self) -> Hand {
        match self {
            Hand::Left => Hand::Right,
            Hand::Right => Hand::Left,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Hand::Left => "left",
            Hand::Right => "right",
        }
    }

    pub fn parse(s: &str) -> Option<Hand> {
        match s {
            "left" | "L" | "l" | "0" => Some(Hand::Left),
            "right" | "R" | "r" | "1" => Some(Hand::Right),
            _ => None,
        }
    }

    fn mirror(self, p: Vector3<f64>) -> Vector3<f64> {
        match self {
            Hand::Left => Vector3::new(-p.x, p.y, p.z),
            Hand::Right => p,
        }
    }
}

/// Where a collision bone ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoneEnd {
    Joint(usize),
    Vertex(usize),
}

/// One collision Gaussian, attached to the bone that starts at joint `bone`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianAttachment {
    pub bone: usize,
    pub end: BoneEnd,
    /// Fractional position along the bone, 0 at the start joint.
    pub position: f64,
    /// Standard deviation as a fraction of the bone length.
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HandModel {
    /// Right-hand rest template, meters, wrist at the origin.
    pub template: Vec<Vector3<f64>>,
    pub triangles: Vec<[u32; 3]>,
    /// Sparse rows, one per joint: `(vertex, weight)`.
    pub joint_regressor: Vec<Vec<(usize, f64)>>,
    /// Sparse rows, one per vertex: `(joint, weight)`.
    pub skinning: Vec<Vec<(usize, f64)>>,
    /// `NUM_SHAPE` displacement fields, meters per unit coefficient.
    pub shape_basis: Vec<Vec<Vector3<f64>>>,
    /// Dense matching encoding, in `[0, 1]^3`, shared by both hands.
    pub match_features: Vec<Vector3<f64>>,
    pub gaussian_layout: Vec<GaussianAttachment>,
    /// Fingertip vertex per finger (thumb first).
    pub fingertips: [usize; NUM_FINGERS],
}

impl HandModel {
    pub fn num_vertices(&self) -> usize {
        self.template.len()
    }

    /// Dense skinning-weight row of a vertex.
    pub fn skinning_row(&self, v: usize) -> [f64; NUM_JOINTS] {
        let mut row = [0.0; NUM_JOINTS];
        for &(j, w) in &self.skinning[v] {
            row[j] += w;
        }
        row
    }

    /// Triangles with orientation corrected for the hand's mirroring.
    pub fn hand_triangles(&self, hand: Hand) -> Vec<[u32; 3]> {
        match hand {
            Hand::Right => self.triangles.clone(),
            Hand::Left => self.triangles.iter().map(|t| [t[0], t[2], t[1]]).collect(),
        }
    }

    /// Rest template of `hand` displaced by its shape coefficients.
    pub fn shaped_template(&self, hand: Hand, beta: &[f64]) -> Vec<Vector3<f64>> {
        debug_assert_eq!(beta.len(), NUM_SHAPE);
        let mut out: Vec<Vector3<f64>> = self.template.clone();
        for (mode, &b) in self.shape_basis.iter().zip(beta) {
            if b == 0.0 {
                continue;
            }
            for (p, d) in out.iter_mut().zip(mode) {
                *p += d * b;
            }
        }
        if hand == Hand::Left {
            for p in out.iter_mut() {
                *p = hand.mirror(*p);
            }
        }
        out
    }

    pub fn regress_joints(&self, vertices: &[Vector3<f64>]) -> [Vector3<f64>; NUM_JOINTS] {
        let mut joints = [Vector3::zeros(); NUM_JOINTS];
        for (j, row) in self.joint_regressor.iter().enumerate() {
            for &(v, w) in row {
                joints[j] += vertices[v] * w;
            }
        }
        joints
    }

    pub fn rest_joints(&self, hand: Hand, beta: &[f64]) -> [Vector3<f64>; NUM_JOINTS] {
        self.regress_joints(&self.shaped_template(hand, beta))
    }

    /// Checks the structural invariants of the model.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vertices();
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if n < 200 {
            return bad(format!("model has {n} vertices, need at least 200"));
        }
        if self.skinning.len() != n || self.match_features.len() != n {
            return bad("per-vertex tables disagree with vertex count".into());
        }
        if self.shape_basis.len() != NUM_SHAPE || self.shape_basis.iter().any(|m| m.len() != n) {
            return bad("shape basis has wrong dimensions".into());
        }
        if self.joint_regressor.len() != NUM_JOINTS {
            return bad("joint regressor must have 16 rows".into());
        }
        for (v, row) in self.skinning.iter().enumerate() {
            let s: f64 = row.iter().map(|e| e.1).sum();
            if (s - 1.0).abs() > 1e-9 || row.iter().any(|e| e.1 < 0.0 || e.0 >= NUM_JOINTS) {
                return bad(format!("skinning row {v} is not a partition of unity"));
            }
        }
        for (j, row) in self.joint_regressor.iter().enumerate() {
            let s: f64 = row.iter().map(|e| e.1).sum();
            if (s - 1.0).abs() > 1e-9 || row.iter().any(|e| e.1 < 0.0 || e.0 >= n) {
                return bad(format!("joint regressor row {j} is not convex"));
            }
        }
        if self
            .match_features
            .iter()
            .any(|f| f.iter().any(|c| !(0.0..=1.0).contains(c)))
        {
            return bad("matching features outside [0,1]^3".into());
        }
        if self.triangles.iter().flatten().any(|&i| i as usize >= n) {
            return bad("triangle index out of range".into());
        }
        if self.fingertips.iter().any(|&v| v >= n) {
            return bad("fingertip index out of range".into());
        }
        Ok(())
    }
}

/// Stacked shape and pose parameters of both hands.
///
/// Flat layout: `[beta_left(10), beta_right(10), theta_left(51), theta_right(51)]`
/// with `theta_h = [axis-angle(3), translation(3), articulation(45)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HandParams {
    pub beta: [f64; 2 * NUM_SHAPE],
    pub theta: [f64; 2 * POSE_DIM],
}

impl Default for HandParams {
    fn default() -> Self {
        HandParams {
            beta: [0.0; 2 * NUM_SHAPE],
            theta: [0.0; 2 * POSE_DIM],
        }
    }
}

impl HandParams {
    pub fn beta_hand(&self, hand: Hand) -> &[f64] {
        let o = hand.index() * NUM_SHAPE;
        &self.beta[o..o + NUM_SHAPE]
    }

    pub fn beta_hand_mut(&mut self, hand: Hand) -> &mut [f64] {
        let o = hand.index() * NUM_SHAPE;
        &mut self.beta[o..o + NUM_SHAPE]
    }

    pub fn theta_hand(&self, hand: Hand) -> &[f64] {
        let o = hand.index() * POSE_DIM;
        &self.theta[o..o + POSE_DIM]
    }

    pub fn theta_hand_mut(&mut self, hand: Hand) -> &mut [f64] {
        let o = hand.index() * POSE_DIM;
        &mut self.theta[o..o + POSE_DIM]
    }

    pub fn global_rotation(&self, hand: Hand) -> Vector3<f64> {
        Vector3::from_column_slice(&self.theta_hand(hand)[0..3])
    }

    pub fn translation(&self, hand: Hand) -> Vector3<f64> {
        Vector3::from_column_slice(&self.theta_hand(hand)[3..6])
    }

    pub fn set_global(&mut self, hand: Hand, rotation: Vector3<f64>, translation: Vector3<f64>) {
        let t = self.theta_hand_mut(hand);
        t[0..3].copy_from_slice(rotation.as_slice());
        t[3..6].copy_from_slice(translation.as_slice());
    }

    pub fn articulation(&self, hand: Hand) -> &[f64] {
        &self.theta_hand(hand)[6..]
    }

    pub fn articulation_mut(&mut self, hand: Hand) -> &mut [f64] {
        &mut self.theta_hand_mut(hand)[6..]
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(PARAM_DIM);
        v.extend_from_slice(&self.beta);
        v.extend_from_slice(&self.theta);
        v
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        if values.len() != PARAM_DIM {
            return Err(Error::DimMismatch {
                expected: format!("{PARAM_DIM} parameters"),
                found: values.len().to_string(),
            });
        }
        let mut p = HandParams::default();
        p.beta.copy_from_slice(&values[..2 * NUM_SHAPE]);
        p.theta.copy_from_slice(&values[2 * NUM_SHAPE..]);
        Ok(p)
    }

    pub fn is_finite(&self) -> bool {
        self.beta.iter().chain(self.theta.iter()).all(|v| v.is_finite())
    }

    /// Flat index of a shape coefficient.
    pub fn beta_index(hand: Hand, i: usize) -> usize {
        hand.index() * NUM_SHAPE + i
    }

    /// Flat index of a pose parameter.
    pub fn theta_index(hand: Hand, i: usize) -> usize {
        2 * NUM_SHAPE + hand.index() * POSE_DIM + i
    }
}

/// Posed surface and skeleton of both hands in camera space.
#[derive(Clone, Debug, PartialEq)]
pub struct PosedHands {
    /// `2N` vertices, left hand first.
    pub vertices: Vec<Vector3<f64>>,
    pub joints: [[Vector3<f64>; NUM_JOINTS]; 2],
    pub per_hand: usize,
}

impl PosedHands {
    pub fn hand_vertices(&self, hand: Hand) -> &[Vector3<f64>] {
        let o = hand.index() * self.per_hand;
        &self.vertices[o..o + self.per_hand]
    }

    pub fn root(&self, hand: Hand) -> Vector3<f64> {
        self.joints[hand.index()][WRIST]
    }

    /// Hand owning a stacked vertex index.
    pub fn hand_of(&self, v: usize) -> Hand {
        Hand::from_index(v / self.per_hand)
    }

    /// Root joint of the hand owning a stacked vertex index.
    pub fn root_of(&self, v: usize) -> Vector3<f64> {
        self.root(self.hand_of(v))
    }

    /// Fit keypoint positions: wrist then the five fingertips, per hand.
    pub fn keypoints(&self, model: &HandModel, hand: Hand) -> [Vector3<f64>; 6] {
        let verts = self.hand_vertices(hand);
        let mut k = [self.root(hand); 6];
        for (f, &v) in model.fingertips.iter().enumerate() {
            k[f + 1] = verts[v];
        }
        k
    }
}

/// Exponential map of an axis-angle vector.
pub fn rodrigues(aa: &Vector3<f64>) -> Matrix3<f64> {
    Rotation3::new(*aa).into_inner()
}

/// Posed vertices and joints of one hand.
pub fn pose_hand(
    model: &HandModel,
    hand: Hand,
    beta: &[f64],
    theta: &[f64],
) -> (Vec<Vector3<f64>>, [Vector3<f64>; NUM_JOINTS]) {
    debug_assert_eq!(theta.len(), POSE_DIM);
    let shaped = model.shaped_template(hand, beta);
    let rest = model.regress_joints(&shaped);

    let mut rot = [Matrix3::identity(); NUM_JOINTS];
    let mut pos = [Vector3::zeros(); NUM_JOINTS];
    pos[WRIST] = rest[WRIST];
    for j in 1..NUM_JOINTS {
        let p = JOINT_PARENTS[j].unwrap();
        let aa = Vector3::from_column_slice(&theta[6 + 3 * (j - 1)..6 + 3 * j]);
        let local = if aa == Vector3::zeros() {
            Matrix3::identity()
        } else {
            rodrigues(&aa)
        };
        pos[j] = pos[p] + rot[p] * (rest[j] - rest[p]);
        rot[j] = rot[p] * local;
    }

    let g_rot = rodrigues(&Vector3::new(theta[0], theta[1], theta[2]));
    let g_t = Vector3::new(theta[3], theta[4], theta[5]);

    let vertices = shaped
        .iter()
        .zip(&model.skinning)
        .map(|(x, weights)| {
            let mut acc = Vector3::zeros();
            for &(j, w) in weights {
                acc += (pos[j] + rot[j] * (x - rest[j])) * w;
            }
            g_rot * acc + g_t
        })
        .collect();
    let mut joints = [Vector3::zeros(); NUM_JOINTS];
    for j in 0..NUM_JOINTS {
        joints[j] = g_rot * pos[j] + g_t;
    }
    (vertices, joints)
}

pub fn pose_hands(model: &HandModel, params: &HandParams) -> Result<PosedHands> {
    if !params.is_finite() {
        return Err(Error::NonFinite("hand parameters"));
    }
    let (vl, jl) = pose_hand(
        model,
        Hand::Left,
        params.beta_hand(Hand::Left),
        params.theta_hand(Hand::Left),
    );
    let (vr, jr) = pose_hand(
        model,
        Hand::Right,
        params.beta_hand(Hand::Right),
        params.theta_hand(Hand::Right),
    );
    Ok(assemble(vl, jl, vr, jr))
}

pub(crate) fn assemble(
    mut vl: Vec<Vector3<f64>>,
    jl: [Vector3<f64>; NUM_JOINTS],
    vr: Vec<Vector3<f64>>,
    jr: [Vector3<f64>; NUM_JOINTS],
) -> PosedHands {
    let per_hand = vl.len();
    vl.extend(vr);
    PosedHands {
        vertices: vl,
        joints: [jl, jr],
        per_hand,
    }
}

/// Distance between the wrist and the middle-finger MCP joint of the shaped
/// rest template.
pub fn palm_length(model: &HandModel, beta: &[f64]) -> f64 {
    let j = model.rest_joints(Hand::Right, beta);
    (j[MIDDLE_MCP] - j[WRIST]).norm()
}

/// Isotropic normalized collision Gaussian attached to a bone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionGaussian {
    pub mean: Vector3<f64>,
    pub std: f64,
    pub hand: Hand,
    pub bone: usize,
}

pub fn collision_gaussians(model: &HandModel, params: &HandParams) -> Result<Vec<CollisionGaussian>> {
    let posed = pose_hands(model, params)?;
    Ok(collision_gaussians_posed(model, params, &posed))
}

/// Collision Gaussians for an already posed configuration.
pub fn collision_gaussians_posed(
    model: &HandModel,
    params: &HandParams,
    posed: &PosedHands,
) -> Vec<CollisionGaussian> {
    let mut out = Vec::with_capacity(2 * model.gaussian_layout.len());
    for hand in Hand::BOTH {
        let shaped = model.shaped_template(hand, params.beta_hand(hand));
        let rest = model.regress_joints(&shaped);
        let verts = posed.hand_vertices(hand);
        let joints = &posed.joints[hand.index()];
        for g in &model.gaussian_layout {
            let (rest_end, posed_end) = match g.end {
                BoneEnd::Joint(k) => (rest[k], joints[k]),
                BoneEnd::Vertex(v) => (shaped[v], verts[v]),
            };
            let start = joints[g.bone];
            let length = (rest_end - rest[g.bone]).norm();
            out.push(CollisionGaussian {
                mean: start + (posed_end - start) * g.position,
                std: g.radius * length,
                hand,
                bone: g.bone,
            });
        }
    }
    out
}

/// Whether two bones of the same hand share a joint in the kinematic tree.
pub fn bones_adjacent(a: usize, b: usize) -> bool {
    a == b || JOINT_PARENTS[a] == Some(b) || JOINT_PARENTS[b] == Some(a)
}
