//! Optimal camera motion for discovering free space in front of semi-dense points.
//!
//! Moving the camera by a unit direction `x` sweeps, for every measured point `p`, a
//! triangle of free space with area `|p x x| / 2`. The summed squared area is a quadratic
//! form `x^T M x / 2` with `M = sum_i hat(p_i)^T hat(p_i) = sum_i (|p_i|^2 I - p_i p_i^T)`,
//! so the best direction is the eigenvector of `M` with the largest eigenvalue.

use nalgebra::{Matrix3, Vector3};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::{canonical_sign, symmetric_eigen3};
use crate::geometry::{backproject, CameraIntrinsics};
use crate::rng;
use crate::scalar::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("motion direction must be a unit vector (norm {0})")]
    NonUnitDirection(f64),
    #[error("all points are at the camera center; the optimal direction is undefined")]
    Degenerate,
    #[error("invalid Monte-Carlo parameters: {0}")]
    InvalidParameters(String),
}

/// The matrix `M`, its eigen-structure and the optimal motion direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionAnalysis<T: Real> {
    pub m: Matrix3<T>,
    /// Descending.
    pub eigenvalues: [T; 3],
    /// Unit vectors, slot `i` paired with `eigenvalues[i]`, largest component positive.
    pub eigenvectors: [Vector3<T>; 3],
}

impl<T: Real> DirectionAnalysis<T> {
    pub fn from_matrix(m: Matrix3<T>) -> Self {
        let e = symmetric_eigen3(&m);
        Self {
            m,
            eigenvalues: e.values,
            eigenvectors: e.vectors,
        }
    }

    pub fn optimal(&self) -> Vector3<T> {
        self.eigenvectors[0]
    }

    /// Whether `lambda1` and `lambda2` coincide within `rel_tol`, in which case every unit
    /// vector of the plane spanned by the first two eigenvectors is equally optimal.
    pub fn top_plane_degenerate(&self, rel_tol: T) -> bool {
        (self.eigenvalues[0] - self.eigenvalues[1]).abs() <= rel_tol * self.eigenvalues[0].abs()
    }
}

/// `hat(p)^T hat(p) = |p|^2 I - p p^T`.
fn cross_gram<T: Real>(p: &Vector3<T>) -> Matrix3<T> {
    Matrix3::identity() * p.norm_squared() - p * p.transpose()
}

/// `S(x) = 1/2 sum_i |p_i x x|^2`, twice the summed squared swept triangle areas.
pub fn observed_area_sq<T: Real>(points: &[Vector3<T>], x: &Vector3<T>) -> Result<T, MotionError> {
    let n = x.norm();
    if (n - T::one()).abs() > T::unit_tolerance() {
        return Err(MotionError::NonUnitDirection(n.to_f64_lossy()));
    }
    let half = T::lit(0.5);
    Ok(points.iter().map(|p| p.cross(x).norm_squared()).sum::<T>() * half)
}

pub fn build_m<T: Real>(points: &[Vector3<T>]) -> Matrix3<T> {
    points
        .iter()
        .fold(Matrix3::zeros(), |acc, p| acc + cross_gram(p))
}

/// Direction maximizing [`observed_area_sq`] over unit vectors.
///
/// When `lambda1 == lambda2` the returned vector is one member of the optimal plane.
pub fn optimal_direction<T: Real>(
    points: &[Vector3<T>],
) -> Result<(Vector3<T>, DirectionAnalysis<T>), MotionError> {
    if points.iter().all(|p| p.norm_squared() == T::zero()) {
        return Err(MotionError::Degenerate);
    }
    let analysis = DirectionAnalysis::from_matrix(build_m(points));
    Ok((analysis.optimal(), analysis))
}

/// Sampling setup for [`monte_carlo_summary`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + for<'a> Deserialize<'a>")]
pub struct McConfig<T: Real> {
    pub intrinsics: CameraIntrinsics<T>,
    pub n_points: usize,
    pub depth_range: (T, T),
    pub trials: usize,
    pub seed: u64,
}

impl<T: Real> Default for McConfig<T> {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics::default(),
            n_points: 600,
            depth_range: (T::lit(0.5), T::lit(5.0)),
            trials: 100,
            seed: 1,
        }
    }
}

/// Mean and standard deviation of one eigen slot over all trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotStats {
    pub eigenvalue_mean: f64,
    pub eigenvalue_std: f64,
    pub eigenvector_mean: [f64; 3],
    pub eigenvector_std: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub trials: usize,
    pub n_points: usize,
    pub seed: u64,
    pub slots: [SlotStats; 3],
}

impl McSummary {
    /// Aligned text table, one row per eigen slot.
    pub fn table(&self) -> String {
        let mut out = format!(
            "eigen-analysis of M over {} trials x {} points (seed {})\n",
            self.trials, self.n_points, self.seed
        );
        out.push_str(&format!(
            "{:<4} {:>22}   {:<30} {:<30}\n",
            "slot", "eigenvalue", "eigenvector mean", "eigenvector std"
        ));
        for (i, s) in self.slots.iter().enumerate() {
            let ev = format!("{:.1} +- {:.1}", s.eigenvalue_mean, s.eigenvalue_std);
            let m = s.eigenvector_mean;
            let d = s.eigenvector_std;
            out.push_str(&format!(
                "{:<4} {:>22}   {:<30} {:<30}\n",
                i + 1,
                ev,
                format!("({:.3}, {:.3}, {:.3})", m[0], m[1], m[2]),
                format!("({:.3}, {:.3}, {:.3})", d[0], d[1], d[2]),
            ));
        }
        out
    }
}

/// Samples `n_points` uniform `(u, v, d)` triples and backprojects them.
pub fn sample_frustum<T: Real>(
    intr: &CameraIntrinsics<T>,
    n_points: usize,
    depth_range: (T, T),
    rng: &mut rng::Rng,
) -> Vec<Vector3<T>> {
    let w = intr.width as f64;
    let h = intr.height as f64;
    let (d0, d1) = (depth_range.0.to_f64_lossy(), depth_range.1.to_f64_lossy());
    (0..n_points)
        .map(|_| {
            let u = rng.random_range(0.0..w);
            let v = rng.random_range(0.0..h);
            let d = rng.random_range(d0..d1);
            backproject(intr, T::lit(u), T::lit(v), T::lit(d)).expect("sample inside the image")
        })
        .collect()
}

/// Monte-Carlo eigen statistics of `M` for uniformly sampled image points and depths.
///
/// Trial `t` draws from the sub-stream `(seed, t)`; trials run in parallel.
pub fn monte_carlo_summary<T: Real>(cfg: &McConfig<T>) -> Result<McSummary, MotionError> {
    if cfg.trials < 1 {
        return Err(MotionError::InvalidParameters("trials must be >= 1".into()));
    }
    if cfg.n_points < 3 {
        return Err(MotionError::InvalidParameters(
            "n_points must be >= 3".into(),
        ));
    }
    let (d0, d1) = cfg.depth_range;
    if !(d0 > T::zero() && d1 > d0) {
        return Err(MotionError::InvalidParameters(
            "depth range must satisfy 0 < min < max".into(),
        ));
    }
    cfg.intrinsics
        .validate()
        .map_err(|e| MotionError::InvalidParameters(e.to_string()))?;

    let per_trial: Vec<([f64; 3], [Vector3<f64>; 3])> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::substream(cfg.seed, t as u64);
            let pts = sample_frustum(&cfg.intrinsics, cfg.n_points, cfg.depth_range, &mut r);
            let a = DirectionAnalysis::from_matrix(build_m(&pts));
            (
                a.eigenvalues.map(|v| v.to_f64_lossy()),
                a.eigenvectors
                    .map(|v| canonical_sign(v.map(|c| c.to_f64_lossy()))),
            )
        })
        .collect();

    let slots = std::array::from_fn(|slot| {
        let vals: Vec<f64> = per_trial.iter().map(|(l, _)| l[slot]).collect();
        let (mean, std) = mean_std(&vals);
        let mut vmean = [0.0; 3];
        let mut vstd = [0.0; 3];
        for c in 0..3 {
            let comp: Vec<f64> = per_trial.iter().map(|(_, v)| v[slot][c]).collect();
            (vmean[c], vstd[c]) = mean_std(&comp);
        }
        SlotStats {
            eigenvalue_mean: mean,
            eigenvalue_std: std,
            eigenvector_mean: vmean,
            eigenvector_std: vstd,
        }
    });
    Ok(McSummary {
        trials: cfg.trials,
        n_points: cfg.n_points,
        seed: cfg.seed,
        slots,
    })
}

/// Population mean and standard deviation.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn v(x: f64, y: f64, z: f64) -> Vector3<f64> {
        Vector3::new(x, y, z)
    }

    #[test]
    fn observed_area_examples() {
        let pts = [v(0.0, 0.0, 1.0)];
        assert_eq!(observed_area_sq(&pts, &v(1.0, 0.0, 0.0)).unwrap(), 0.5);
        assert_eq!(observed_area_sq(&pts, &v(0.0, 0.0, 1.0)).unwrap(), 0.0);
        assert!(matches!(
            observed_area_sq(&pts, &v(2.0, 0.0, 0.0)),
            Err(MotionError::NonUnitDirection(_))
        ));
    }

    #[test]
    fn build_m_examples() {
        assert_eq!(
            build_m(&[v(0.0, 0.0, 1.0)]),
            Matrix3::from_diagonal(&v(1.0, 1.0, 0.0))
        );
        assert_eq!(
            build_m(&[v(0.0, 0.0, 1.0), v(0.0, 0.0, 1.0)]),
            Matrix3::from_diagonal(&v(2.0, 2.0, 0.0))
        );
        let expect = Matrix3::new(13.0, -2.0, -3.0, -2.0, 10.0, -6.0, -3.0, -6.0, 5.0);
        assert_eq!(build_m(&[v(1.0, 2.0, 3.0)]), expect);
        assert_eq!(build_m::<f64>(&[]), Matrix3::zeros());
    }

    #[test]
    fn optimal_direction_single_point() {
        let pts = [v(0.0, 0.0, 1.0)];
        let (x, a) = optimal_direction(&pts).unwrap();
        assert!(x.z.abs() < 1e-9);
        assert_relative_eq!(observed_area_sq(&pts, &x).unwrap(), 0.5, epsilon = 1e-12);
        assert!(a.top_plane_degenerate(1e-12));
    }

    #[test]
    fn optimal_direction_degenerate_input() {
        assert_eq!(
            optimal_direction(&[v(0.0, 0.0, 0.0)]).unwrap_err(),
            MotionError::Degenerate
        );
        assert_eq!(
            optimal_direction::<f64>(&[]).unwrap_err(),
            MotionError::Degenerate
        );
    }

    #[test]
    fn optical_axis_points_give_lateral_direction() {
        let mut r = rng::seeded(3);
        let pts: Vec<_> = (0..50)
            .map(|_| {
                v(
                    r.random_range(-1e-4..1e-4),
                    r.random_range(-1e-4..1e-4),
                    r.random_range(0.5..5.0),
                )
            })
            .collect();
        let (x, a) = optimal_direction(&pts).unwrap();
        assert!(x.z.abs() < 1e-3);
        assert!(a.eigenvectors[2].z.abs() > 1.0 - 1e-6);
    }

    #[test]
    fn collinear_points_on_axis() {
        let pts = [v(0.0, 0.0, 1.0), v(0.0, 0.0, 2.0), v(0.0, 0.0, 3.5)];
        let (_, a) = optimal_direction(&pts).unwrap();
        assert_relative_eq!(a.eigenvalues[0], a.eigenvalues[1], epsilon = 1e-12);
        assert_relative_eq!(a.eigenvectors[2], v(0.0, 0.0, 1.0), epsilon = 1e-12);
        assert_eq!(a.eigenvalues[2], 0.0);
    }

    #[test]
    fn narrow_frustum_third_axis_is_viewing_direction() {
        // shrinking the field of view drives the smallest eigenvector to the optical axis
        let mut last = 0.0f64;
        for f in [100.0f64, 1000.0, 10000.0] {
            let intr = CameraIntrinsics::new(f, f, 320.0, 240.0, 640, 480).unwrap();
            let pts = sample_frustum(&intr, 600, (0.5, 5.0), &mut rng::seeded(11));
            let (_, a) = optimal_direction(&pts).unwrap();
            let z = a.eigenvectors[2].z.abs();
            assert!(z >= last - 1e-12);
            last = z;
        }
        assert!(last > 1.0 - 1e-6);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let cfg = McConfig::<f64> {
            trials: 1,
            seed: 99,
            ..Default::default()
        };
        let a = monte_carlo_summary(&cfg).unwrap();
        let b = monte_carlo_summary(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.slots[0].eigenvalue_std, 0.0);
    }

    #[test]
    fn monte_carlo_rejects_bad_parameters() {
        let bad = McConfig::<f64> {
            n_points: 2,
            ..Default::default()
        };
        assert!(monte_carlo_summary(&bad).is_err());
        let bad = McConfig::<f64> {
            trials: 0,
            ..Default::default()
        };
        assert!(monte_carlo_summary(&bad).is_err());
    }

    #[test]
    fn monte_carlo_f32_matches_f64_structure() {
        let cfg32 = McConfig::<f32> {
            trials: 5,
            ..Default::default()
        };
        let cfg64 = McConfig::<f64> {
            trials: 5,
            ..Default::default()
        };
        let a = monte_carlo_summary(&cfg32).unwrap();
        let b = monte_carlo_summary(&cfg64).unwrap();
        for s in 0..3 {
            let rel = (a.slots[s].eigenvalue_mean - b.slots[s].eigenvalue_mean).abs()
                / b.slots[s].eigenvalue_mean;
            assert!(rel < 1e-4, "slot {s}: {rel}");
        }
    }

    fn arb_points(n: usize) -> impl Strategy<Value = Vec<Vector3<f64>>> {
        prop::collection::vec(
            prop::array::uniform3(-5.0..5.0f64).prop_map(Vector3::from),
            1..n,
        )
    }

    fn arb_unit() -> impl Strategy<Value = Vector3<f64>> {
        (0.0..2.0 * PI, -1.0..1.0f64).prop_map(|(phi, z)| {
            let r = (1.0 - z * z).sqrt();
            v(r * phi.cos(), r * phi.sin(), z)
        })
    }

    proptest! {
        #[test]
        fn m_is_symmetric_psd(pts in arb_points(40)) {
            let m = build_m(&pts);
            prop_assert!((m - m.transpose()).amax() <= 1e-9);
            let a = DirectionAnalysis::from_matrix(m);
            let scale = a.eigenvalues[0].max(1.0);
            prop_assert!(a.eigenvalues[2] >= -1e-9 * scale);
            for i in 0..3 {
                let r = (m * a.eigenvectors[i] - a.eigenvectors[i] * a.eigenvalues[i]).norm();
                prop_assert!(r <= 1e-6 * scale);
            }
        }

        #[test]
        fn area_matches_quadratic_form(pts in arb_points(60), x in arb_unit()) {
            let s = observed_area_sq(&pts, &x).unwrap();
            let q = 0.5 * x.dot(&(build_m(&pts) * x));
            prop_assert!((s - q).abs() <= 1e-9 * s.abs().max(1.0));
        }

        #[test]
        fn scale_law(pts in arb_points(30), c in 0.1..10.0f64) {
            let scaled: Vec<_> = pts.iter().map(|p| p * c).collect();
            let m = build_m(&pts);
            let ms = build_m(&scaled);
            prop_assert!((ms - m * (c * c)).amax() <= 1e-9 * ms.amax().max(1.0));
        }

        #[test]
        fn rotation_equivariance(pts in arb_points(30), angles in prop::array::uniform3(-3.0..3.0f64)) {
            let r = nalgebra::Rotation3::from_euler_angles(angles[0], angles[1], angles[2]);
            let rotated: Vec<_> = pts.iter().map(|p| r * p).collect();
            let lhs = build_m(&rotated);
            let rhs = r.matrix() * build_m(&pts) * r.matrix().transpose();
            prop_assert!((lhs - rhs).amax() <= 1e-9 * lhs.amax().max(1.0));
        }
    }
}
