//! Small dense helpers: max-entry norms, adjoints and a symmetric
//! tridiagonal eigensolver (implicit QL with Wilkinson-style shifts).

use ndarray::{Array1, Array2};

use crate::error::{LabError, Result};
use crate::scalar::{Cx, Real};

pub type CMatrix<T> = Array2<Cx<T>>;

/// Largest entry modulus.
pub fn max_entry<T: Real>(a: &CMatrix<T>) -> T {
    a.iter().fold(T::zero(), |m, z| m.max(z.norm()))
}

/// Largest entry modulus of `a - b`.
pub fn max_entry_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .fold(T::zero(), |m, (x, y)| m.max((*x - *y).norm()))
}

pub fn adjoint<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    a.t().mapv(|z| z.conj())
}

pub fn identity<T: Real>(n: usize) -> CMatrix<T> {
    Array2::from_diag_elem(n, Cx::new(T::one(), T::zero()))
}

/// Leading `k x k` block, copied.
pub fn leading_block<T: Real>(a: &CMatrix<T>, k: usize) -> CMatrix<T> {
    a.slice(ndarray::s![..k, ..k]).to_owned()
}

/// Eigen-decomposition of a real symmetric tridiagonal matrix.
pub struct TridiagonalEigen<T> {
    /// Ascending eigenvalues.
    pub values: Vec<T>,
    /// Column `k` is the unit eigenvector for `values[k]`, when requested.
    pub vectors: Option<Array2<T>>,
}

/// Implicit QL iteration on the tridiagonal matrix with main diagonal
/// `diag` and sub/super-diagonal `off` (`off.len() == diag.len() - 1`).
pub fn symmetric_tridiagonal_eigen<T: Real>(
    diag: &[T],
    off: &[T],
    want_vectors: bool,
) -> Result<TridiagonalEigen<T>> {
    let n = diag.len();
    if n == 0 {
        return Ok(TridiagonalEigen {
            values: Vec::new(),
            vectors: want_vectors.then(|| Array2::zeros((0, 0))),
        });
    }
    if off.len() + 1 != n {
        return Err(LabError::Dimension {
            expected: n - 1,
            got: off.len(),
            context: "tridiagonal off-diagonal length",
        });
    }
    let mut d = diag.to_vec();
    let mut e: Vec<T> = off.iter().copied().chain(std::iter::once(T::zero())).collect();
    let mut z = want_vectors.then(|| Array2::<T>::eye(n));

    let eps = T::epsilon();
    let mut f = T::zero();
    let mut tst1 = T::zero();
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(LabError::Eigen { index: l });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (T::two() * e[l]);
                let mut r = p.hypot(T::one());
                if p < T::zero() {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = T::one();
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = T::zero();
                let mut s2 = T::zero();
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_mut() {
                        for k in 0..n {
                            let h = z[[k, i + 1]];
                            z[[k, i + 1]] = s * z[[k, i]] + c * h;
                            z[[k, i]] = c * z[[k, i]] - s * h;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = T::zero();
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = z.map(|z| {
        let mut out = Array2::zeros((n, n));
        for (dst, &src) in order.iter().enumerate() {
            out.column_mut(dst).assign(&z.column(src));
        }
        out
    });
    Ok(TridiagonalEigen { values, vectors })
}

/// Gauss–Jordan inverse with partial pivoting; `None` when singular.
pub fn invert<T: Real>(a: &CMatrix<T>) -> Option<CMatrix<T>> {
    let n = a.nrows();
    let mut work = a.clone();
    let mut inv = identity::<T>(n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| {
            work[[r, col]]
                .norm()
                .partial_cmp(&work[[s, col]].norm())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        let p = work[[pivot, col]];
        if p.norm() == T::zero() || !p.norm().is_finite() {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                work.swap([pivot, k], [col, k]);
                inv.swap([pivot, k], [col, k]);
            }
        }
        let scale = p.inv();
        for k in 0..n {
            work[[col, k]] *= scale;
            inv[[col, k]] *= scale;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = work[[r, col]];
            if f.norm() == T::zero() {
                continue;
            }
            for k in 0..n {
                let w = work[[col, k]];
                let v = inv[[col, k]];
                work[[r, k]] -= f * w;
                inv[[r, k]] -= f * v;
            }
        }
    }
    Some(inv)
}

/// Eigen-decomposition `H = W diag(values) W^dagger` of a hermitian
/// tridiagonal matrix.
///
/// A diagonal phase similarity makes the off-diagonal real, after which the
/// real symmetric solver applies.
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

pub fn hermitian_tridiagonal_eigen<T: Real>(h: &CMatrix<T>, tol: T) -> Result<HermitianEigen<T>> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(LabError::Dimension {
            expected: n,
            got: h.ncols(),
            context: "square matrix",
        });
    }
    for ((r, c), z) in h.indexed_iter() {
        if r.abs_diff(c) > 1 && z.norm() > tol {
            return Err(LabError::Contract(format!(
                "matrix is not tridiagonal: entry ({r}, {c}) = {z}"
            )));
        }
        if (*z - h[[c, r]].conj()).norm() > tol {
            return Err(LabError::Contract(format!("matrix is not hermitian at ({r}, {c})")));
        }
    }
    let diag: Vec<T> = (0..n).map(|k| h[[k, k]].re).collect();
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    let mut phases = Vec::with_capacity(n);
    if n > 0 {
        phases.push(Cx::new(T::one(), T::zero()));
    }
    for k in 0..n.saturating_sub(1) {
        let b = h[[k + 1, k]];
        let mag = b.norm();
        let unit = if mag > T::zero() { b / mag } else { Cx::new(T::one(), T::zero()) };
        off.push(mag);
        phases.push(phases[k] * unit);
    }
    let eig = symmetric_tridiagonal_eigen(&diag, &off, true)?;
    let v = eig.vectors.expect("vectors requested");
    let mut vectors = Array2::zeros((n, n));
    for r in 0..n {
        for c in 0..n {
            vectors[[r, c]] = phases[r] * v[[r, c]];
        }
    }
    Ok(HermitianEigen {
        values: eig.values,
        vectors,
    })
}

/// Matrix-vector product `a * v`.
pub fn apply<T: Real>(a: &CMatrix<T>, v: &Array1<Cx<T>>) -> Array1<Cx<T>> {
    a.dot(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_eigenpairs() {
        // [[2, 1], [1, 2]] has eigenvalues 1 and 3.
        let eig = symmetric_tridiagonal_eigen(&[2.0_f64, 2.0], &[1.0], true).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 3.0).abs() < 1e-14);
        let v = eig.vectors.unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[[0, 1]].abs() - r).abs() < 1e-14);
        assert!((v[[0, 0]] * v[[1, 0]] + r * r).abs() < 1e-14);
    }

    #[test]
    fn reconstructs_random_tridiagonal() {
        let n = 40;
        let diag: Vec<f64> = (0..n).map(|k| ((k * 7919) % 13) as f64 * 0.3 - 1.5).collect();
        let off: Vec<f64> = (0..n - 1).map(|k| ((k * 104729) % 11) as f64 * 0.2 + 0.1).collect();
        let eig = symmetric_tridiagonal_eigen(&diag, &off, true).unwrap();
        let v = eig.vectors.unwrap();
        let mut a = Array2::<f64>::zeros((n, n));
        for k in 0..n {
            a[[k, k]] = diag[k];
            if k + 1 < n {
                a[[k, k + 1]] = off[k];
                a[[k + 1, k]] = off[k];
            }
        }
        let lam = Array2::from_diag(&Array1::from(eig.values.clone()));
        let back = v.dot(&lam).dot(&v.t());
        let err = (&back - &a).iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        assert!(err < 1e-12, "reconstruction error {err}");
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn inverse_of_small_matrix() {
        let a = ndarray::array![
            [Cx::new(2.0_f64, 0.0), Cx::new(0.0, 1.0)],
            [Cx::new(1.0, -1.0), Cx::new(3.0, 0.0)]
        ];
        let inv = invert(&a).unwrap();
        assert!(max_entry_diff(&a.dot(&inv), &identity(2)) < 1e-15);
        let singular = Array2::from_elem((2, 2), Cx::new(1.0_f64, 0.0));
        assert!(invert(&singular).is_none());
    }

    #[test]
    fn hermitian_tridiagonal_with_imaginary_coupling() {
        let n = 12;
        let mut h = Array2::<Cx<f64>>::zeros((n, n));
        for k in 0..n - 1 {
            let b = ((k + 1) as f64 / 2.0).sqrt();
            h[[k, k + 1]] = Cx::new(0.0, -b);
            h[[k + 1, k]] = Cx::new(0.0, b);
        }
        let eig = hermitian_tridiagonal_eigen(&h, 1e-14).unwrap();
        let lam = Array2::from_diag(&Array1::from(eig.values.iter().map(|&v| Cx::new(v, 0.0)).collect::<Vec<_>>()));
        let back = eig.vectors.dot(&lam).dot(&adjoint(&eig.vectors));
        assert!(max_entry_diff(&back, &h) < 1e-13);
        assert!(max_entry_diff(&adjoint(&eig.vectors).dot(&eig.vectors), &identity(n)) < 1e-13);
    }

    #[test]
    fn length_mismatch_is_reported() {
        assert!(matches!(
            symmetric_tridiagonal_eigen(&[1.0_f64, 2.0], &[1.0, 2.0], false),
            Err(LabError::Dimension { .. })
        ));
    }
}
