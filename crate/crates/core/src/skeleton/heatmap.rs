use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{Skeleton, NUM_JOINTS};

/// Heatmap grid geometry. A joint at normalized `(x, y)` sits at pixel
/// coordinates `(x * width, y * height)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapGrid {
    pub width: usize,
    pub height: usize,
    /// Bump standard deviation in pixels.
    pub sigma: f64,
}

impl HeatmapGrid {
    pub fn new(width: usize, height: usize, sigma: f64) -> Result<Self> {
        if width < 4 || height < 4 {
            return Err(Error::invalid(format!(
                "heatmap grid {width}x{height} smaller than 4x4"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("heatmap sigma must be positive, got {sigma}")));
        }
        Ok(HeatmapGrid {
            width,
            height,
            sigma,
        })
    }

    #[inline]
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    /// Writes the first `joints` maps for `skel` into `out`, joint-major then
    /// row-major. Each visible joint gets an unnormalized Gaussian bump with
    /// peak 1; hidden joints get zeros.
    pub fn render_into<T: Real>(&self, skel: &Skeleton<T>, joints: usize, out: &mut [T]) {
        let px = self.pixels();
        assert_eq!(out.len(), joints * px, "heatmap buffer size");
        let inv_two_var = T::one() / T::of(2.0 * self.sigma * self.sigma);
        let mut gx = vec![T::zero(); self.width];
        let mut gy = vec![T::zero(); self.height];
        for (j, map) in skel.joints()[..joints].iter().zip(out.chunks_exact_mut(px)) {
            if !j.visible {
                map.fill(T::zero());
                continue;
            }
            let cx = j.x * T::of(self.width as f64);
            let cy = j.y * T::of(self.height as f64);
            for (i, g) in gx.iter_mut().enumerate() {
                let d = T::of(i as f64) - cx;
                *g = (-(d * d) * inv_two_var).exp();
            }
            for (i, g) in gy.iter_mut().enumerate() {
                let d = T::of(i as f64) - cy;
                *g = (-(d * d) * inv_two_var).exp();
            }
            for (row, gyv) in map.chunks_exact_mut(self.width).zip(&gy) {
                for (v, gxv) in row.iter_mut().zip(&gx) {
                    *v = *gxv * *gyv;
                }
            }
        }
    }
}

impl Default for HeatmapGrid {
    fn default() -> Self {
        HeatmapGrid {
            width: 16,
            height: 16,
            sigma: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSet<T> {
    pub grid: HeatmapGrid,
    pub num_joints: usize,
    /// `num_joints * height * width` intensities, joint-major then row-major.
    pub data: Vec<T>,
}

impl<T: Real> HeatmapSet<T> {
    pub fn zeros(grid: HeatmapGrid, num_joints: usize) -> Self {
        HeatmapSet {
            grid,
            num_joints,
            data: vec![T::zero(); num_joints * grid.pixels()],
        }
    }

    #[inline]
    pub fn at(&self, joint: usize, x: usize, y: usize) -> T {
        self.data[joint * self.grid.pixels() + y * self.grid.width + x]
    }

    pub fn map(&self, joint: usize) -> &[T] {
        let px = self.grid.pixels();
        &self.data[joint * px..(joint + 1) * px]
    }
}

pub fn make_heatmaps<T: Real>(skel: &Skeleton<T>, grid: HeatmapGrid) -> HeatmapSet<T> {
    let mut set = HeatmapSet::zeros(grid, NUM_JOINTS);
    grid.render_into(skel, NUM_JOINTS, &mut set.data);
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::Joint;

    fn single(x: f64, y: f64) -> Skeleton<f64> {
        let mut joints = [Joint::default(); NUM_JOINTS];
        joints[4] = Joint {
            x,
            y,
            visible: true,
        };
        Skeleton::new(joints).unwrap()
    }

    #[test]
    fn single_joint_peaks_at_its_pixel() {
        let grid = HeatmapGrid::new(16, 16, 1.5).unwrap();
        let h = make_heatmaps(&single(0.5, 0.5), grid);
        assert_eq!(h.at(4, 8, 8), 1.0);
        let max = h.map(4).iter().cloned().fold(0.0, f64::max);
        assert_eq!(max, 1.0);
        for j in (0..NUM_JOINTS).filter(|j| *j != 4) {
            assert!(h.map(j).iter().all(|v| *v == 0.0));
        }
        assert!(h.data.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn tiny_sigma_leaves_one_pixel() {
        let grid = HeatmapGrid::new(16, 16, 1e-3).unwrap();
        let h = make_heatmaps(&single(0.25, 0.5), grid);
        let nonzero: Vec<_> = h.map(4).iter().enumerate().filter(|(_, v)| **v > 0.0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].0, 8 * 16 + 4);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(HeatmapGrid::new(3, 16, 1.0).is_err());
        assert!(HeatmapGrid::new(16, 16, 0.0).is_err());
    }
}
