//! Pinhole projection and pixel-grid conventions.
//!
//! Pixel `(0, 0)` is the center of the top-left pixel. Continuous pixel
//! coordinates are used throughout; rasterization samples at integer
//! coordinates. No lens distortion.

use nalgebra::{Matrix2x3, Vector2, Vector3};

use crate::error::{Error, Result};

pub type Pixel = Vector2<f64>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        CameraIntrinsics {
            fx: 300.0,
            fy: 300.0,
            cx: 159.5,
            cy: 119.5,
            width: 320,
            height: 240,
        }
    }
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.cx.is_finite() || !self.cy.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "focal lengths must be positive (fx = {}, fy = {})",
                self.fx, self.fy
            )));
        }
        if self.width < 16 || self.height < 16 {
            return Err(Error::InvalidArgument(format!(
                "image must be at least 16x16, got {}x{}",
                self.width, self.height
            )));
        }
        Ok(())
    }

    /// Projects a camera-space point (meters) to continuous pixel coordinates.
    pub fn project(&self, p: &Vector3<f64>) -> Result<Pixel> {
        if p.z <= 0.0 || !p.z.is_finite() {
            return Err(Error::BehindCamera { z: p.z });
        }
        Ok(self.project_unchecked(p))
    }

    #[inline]
    pub fn project_unchecked(&self, p: &Vector3<f64>) -> Pixel {
        Pixel::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }

    /// Camera-space point at depth `z` on the ray through pixel `(u, v)`.
    pub fn backproject(&self, u: f64, v: f64, z: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }

    /// Jacobian of the projection with respect to the camera-space point.
    pub fn projection_jacobian(&self, p: &Vector3<f64>) -> Matrix2x3<f64> {
        let iz = 1.0 / p.z;
        let iz2 = iz * iz;
        Matrix2x3::new(
            self.fx * iz,
            0.0,
            -self.fx * p.x * iz2,
            0.0,
            self.fy * iz,
            -self.fy * p.y * iz2,
        )
    }

    /// Nearest pixel to a continuous coordinate, if it lies inside the image.
    pub fn pixel_of(&self, px: &Pixel) -> Option<(usize, usize)> {
        let c = px.x.round();
        let r = px.y.round();
        if c < 0.0 || r < 0.0 || c >= self.width as f64 || r >= self.height as f64 {
            return None;
        }
        Some((r as usize, c as usize))
    }

    /// Nearest pixel, clamped to the image border.
    pub fn clamped_pixel(&self, px: &Pixel) -> (usize, usize) {
        let c = px.x.round().clamp(0.0, (self.width - 1) as f64);
        let r = px.y.round().clamp(0.0, (self.height - 1) as f64);
        (r as usize, c as usize)
    }
}

/// Depth (z component) of a camera-space point.
#[inline]
pub fn z_of(p: &Vector3<f64>) -> f64 {
    p.z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k() -> CameraIntrinsics {
        CameraIntrinsics::new(500.0, 500.0, 320.0, 240.0, 640, 480).unwrap()
    }

    #[test]
    fn principal_point() {
        let p = k().project(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(p, Pixel::new(320.0, 240.0));
    }

    #[test]
    fn offset_point() {
        let p = k().project(&Vector3::new(0.1, 0.0, 1.0)).unwrap();
        assert!((p.x - 370.0).abs() < 1e-12);
        assert_eq!(p.y, 240.0);
    }

    #[test]
    fn behind_camera() {
        assert!(matches!(
            k().project(&Vector3::new(0.0, 0.0, -1.0)),
            Err(Error::BehindCamera { .. })
        ));
        assert!(k().project(&Vector3::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn z_component() {
        let p = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(z_of(&p), 3.0);
        let t = Vector3::new(0.5, -1.0, 0.25);
        assert_eq!(z_of(&(p + t)), z_of(&p) + t.z);
    }

    #[test]
    fn rejects_bad_intrinsics() {
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0, 32, 32).is_err());
        assert!(CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 8, 32).is_err());
    }

    #[test]
    fn jacobian_matches_differences() {
        let k = k();
        let p = Vector3::new(0.05, -0.02, 0.6);
        let j = k.projection_jacobian(&p);
        let h = 1e-6;
        for c in 0..3 {
            let mut a = p;
            let mut b = p;
            a[c] += h;
            b[c] -= h;
            let d = (k.project_unchecked(&a) - k.project_unchecked(&b)) / (2.0 * h);
            assert!((d.x - j[(0, c)]).abs() < 1e-4);
            assert!((d.y - j[(1, c)]).abs() < 1e-4);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn backprojection_roundtrip(u in 0.0..640.0f64, v in 0.0..480.0f64, z in 0.05..10.0f64) {
                let k = k();
                let p = k.project(&k.backproject(u, v, z)).unwrap();
                prop_assert!((p.x - u).abs() < 1e-9 && (p.y - v).abs() < 1e-9);
            }

            #[test]
            fn ray_scale_invariance(x in -1.0..1.0f64, y in -1.0..1.0f64, z in 0.1..5.0f64, s in 0.1..10.0f64) {
                let k = k();
                let p = Vector3::new(x, y, z);
                let a = k.project(&p).unwrap();
                let b = k.project(&(p * s)).unwrap();
                prop_assert!((a - b).norm() < 1e-9);
            }
        }
    }
}
