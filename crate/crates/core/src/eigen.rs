//! Eigen-decomposition of symmetric 3x3 matrices.
//!
//! Eigenvalues come from the trigonometric solution of the characteristic cubic and
//! eigenvectors from cross products of the rows of `A - lambda I`. When two eigenvalues
//! are nearly equal the cross products lose precision, so the decomposition falls back
//! to cyclic Jacobi rotations.

use nalgebra::{Matrix3, Vector3};

use crate::scalar::Real;

/// Eigenvalues in descending order, with unit eigenvectors paired by slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricEigen3<T: Real> {
    pub values: [T; 3],
    pub vectors: [Vector3<T>; 3],
}

impl<T: Real> SymmetricEigen3<T> {
    /// Columns are the eigenvectors.
    pub fn vector_matrix(&self) -> Matrix3<T> {
        Matrix3::from_columns(&self.vectors)
    }
}

/// Flips `v` so that its largest-magnitude component is positive.
pub fn canonical_sign<T: Real>(v: Vector3<T>) -> Vector3<T> {
    let mut best = 0;
    for i in 1..3 {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < T::zero() {
        -v
    } else {
        v
    }
}

/// Relative eigenvalue gap under which the Jacobi path is used.
fn degeneracy_gap<T: Real>() -> T {
    let g = T::default_epsilon().sqrt();
    let floor = T::lit(1e-6);
    if g > floor {
        g
    } else {
        floor
    }
}

/// Decomposes a symmetric matrix. Only the lower triangle is read.
pub fn symmetric_eigen3<T: Real>(m: &Matrix3<T>) -> SymmetricEigen3<T> {
    let a = symmetrize(m);
    let values = eigenvalues_closed_form(&a);
    let scale = values[0].abs().max(values[2].abs());
    let gap = degeneracy_gap::<T>();
    let degenerate = scale == T::zero()
        || (values[0] - values[1]) <= gap * scale
        || (values[1] - values[2]) <= gap * scale;
    let out = if degenerate {
        jacobi(&a)
    } else {
        closed_form_vectors(&a, values).unwrap_or_else(|| jacobi(&a))
    };
    SymmetricEigen3 {
        values: out.values,
        vectors: out.vectors.map(canonical_sign),
    }
}

fn symmetrize<T: Real>(m: &Matrix3<T>) -> Matrix3<T> {
    let mut a = *m;
    a[(0, 1)] = m[(1, 0)];
    a[(0, 2)] = m[(2, 0)];
    a[(1, 2)] = m[(2, 1)];
    a
}

/// Descending eigenvalues of a symmetric matrix.
pub fn eigenvalues_closed_form<T: Real>(a: &Matrix3<T>) -> [T; 3] {
    let three = T::lit(3.0);
    let two = T::lit(2.0);
    let off = a[(0, 1)] * a[(0, 1)] + a[(0, 2)] * a[(0, 2)] + a[(1, 2)] * a[(1, 2)];
    if off == T::zero() {
        let mut d = [a[(0, 0)], a[(1, 1)], a[(2, 2)]];
        d.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
        return d;
    }
    let q = a.trace() / three;
    let d0 = a[(0, 0)] - q;
    let d1 = a[(1, 1)] - q;
    let d2 = a[(2, 2)] - q;
    let p2 = d0 * d0 + d1 * d1 + d2 * d2 + two * off;
    let p = (p2 / T::lit(6.0)).sqrt();
    let b = (a - Matrix3::identity() * q) / p;
    let mut r = b.determinant() / two;
    if r < -T::one() {
        r = -T::one();
    } else if r > T::one() {
        r = T::one();
    }
    let phi = r.acos() / three;
    let l1 = q + two * p * phi.cos();
    let l3 = q + two * p * (phi + two * T::pi() / three).cos();
    let l2 = three * q - l1 - l3;
    let mut v = [l1, l2, l3];
    v.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    v
}

fn null_vector<T: Real>(a: &Matrix3<T>, lambda: T) -> Option<Vector3<T>> {
    let s = a - Matrix3::identity() * lambda;
    let r0 = s.row(0).transpose();
    let r1 = s.row(1).transpose();
    let r2 = s.row(2).transpose();
    let candidates = [r0.cross(&r1), r0.cross(&r2), r1.cross(&r2)];
    let best = candidates.iter().copied().max_by(|x, y| {
        x.norm_squared()
            .partial_cmp(&y.norm_squared())
            .unwrap_or(std::cmp::Ordering::Equal)
    })?;
    let n = best.norm();
    (n > T::zero() && n.is_finite()).then(|| best / n)
}

fn closed_form_vectors<T: Real>(a: &Matrix3<T>, values: [T; 3]) -> Option<SymmetricEigen3<T>> {
    let v0 = null_vector(a, values[0])?;
    let v2 = null_vector(a, values[2])?;
    // re-orthogonalize the smallest against the largest, complete with a cross product
    let v2 = v2 - v0 * v0.dot(&v2);
    let n = v2.norm();
    if !(n > T::zero()) {
        return None;
    }
    let v2 = v2 / n;
    let v1 = v2.cross(&v0);
    Some(SymmetricEigen3 {
        values,
        vectors: [v0, v1, v2],
    })
}

/// Cyclic Jacobi eigenvalue iteration.
pub fn jacobi<T: Real>(m: &Matrix3<T>) -> SymmetricEigen3<T> {
    let mut a = symmetrize(m);
    let mut v = Matrix3::<T>::identity();
    let two = T::lit(2.0);
    for _sweep in 0..64 {
        let off = a[(0, 1)].abs() + a[(0, 2)].abs() + a[(1, 2)].abs();
        let diag = a[(0, 0)].abs() + a[(1, 1)].abs() + a[(2, 2)].abs();
        if off <= T::default_epsilon() * diag || off == T::zero() {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = a[(p, q)];
            if apq == T::zero() {
                continue;
            }
            let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
            let sign = if theta >= T::zero() {
                T::one()
            } else {
                -T::one()
            };
            let t = sign / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            let mut rot = Matrix3::<T>::identity();
            rot[(p, p)] = c;
            rot[(q, q)] = c;
            rot[(p, q)] = s;
            rot[(q, p)] = -s;
            a = rot.transpose() * a * rot;
            a[(p, q)] = T::zero();
            a[(q, p)] = T::zero();
            v *= rot;
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| {
        a[(j, j)]
            .partial_cmp(&a[(i, i)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    SymmetricEigen3 {
        values: order.map(|i| a[(i, i)]),
        vectors: order.map(|i| v.column(i).into_owned()),
    }
}
