//! Orthonormal Hermite functions, Gauss–Hermite quadrature and the
//! grid/coefficient conversions built on them.
//!
//! Grid-valued sequences always carry the square-root weight folding:
//! entry `i` of a sample vector holds `sqrt(w_i) * f(x_i)`, where `w_i` is
//! the folded weight (the Gaussian weight function already absorbed). With
//! that convention the basis matrix has orthonormal columns and projection
//! onto the basis is a plain transpose product.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::symmetric_tridiagonal_eigen;
use crate::scalar::{Cx, Real};
use crate::state::StateVector;

/// Smallest truncation for which all four quarter-turn eigenspaces are nonempty.
pub const MIN_DIM: usize = 4;

/// Truncation dimension `dim` and quadrature order `quad_order`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct BasisSpec {
    dim: usize,
    quad_order: usize,
}

#[derive(Deserialize)]
struct RawSpec {
    dim: usize,
    quad_order: usize,
}

impl TryFrom<RawSpec> for BasisSpec {
    type Error = LabError;

    fn try_from(raw: RawSpec) -> Result<Self> {
        BasisSpec::new(raw.dim, raw.quad_order)
    }
}

impl Default for BasisSpec {
    fn default() -> Self {
        BasisSpec {
            dim: 128,
            quad_order: 256,
        }
    }
}

impl BasisSpec {
    pub fn new(dim: usize, quad_order: usize) -> Result<Self> {
        if dim < MIN_DIM {
            return Err(LabError::InvalidSpec(format!(
                "dim {dim} < {MIN_DIM}: every quarter-turn eigenspace needs a basis element"
            )));
        }
        if quad_order < dim {
            return Err(LabError::InvalidSpec(format!(
                "quad_order {quad_order} < dim {dim}"
            )));
        }
        Ok(BasisSpec { dim, quad_order })
    }

    /// Quadrature-only spec; skips the `dim >= 4` rule so tiny rules can be built.
    pub fn quadrature_only(quad_order: usize) -> Result<Self> {
        if quad_order == 0 {
            return Err(LabError::InvalidSpec("quad_order must be positive".into()));
        }
        Ok(BasisSpec {
            dim: quad_order.min(MIN_DIM),
            quad_order,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order
    }

    /// Half-width `0.7 * sqrt(2 N)` beyond which the truncated basis cannot
    /// resolve the oscillations of position/momentum kernels.
    pub fn reliability_bound(&self) -> f64 {
        0.7 * (2.0 * self.dim as f64).sqrt()
    }
}

/// Runs the normalized three-term recurrence for `psi_0 .. psi_{count-1}` at `x`.
///
/// Values are carried as `mantissa * exp(log_scale)` so neither the Gaussian
/// factor nor the growth in the forbidden region can under- or overflow.
/// The visitor receives `(n, mantissa, log_scale)`.
fn visit_scaled<T: Real>(count: usize, x: T, mut visit: impl FnMut(usize, T, T)) {
    let big = T::max_value().sqrt();
    let mut log_scale = -x * x * T::half() - T::PI().ln() * T::lit(0.25);
    let mut prev = T::zero();
    let mut cur = T::one();
    for n in 0..count {
        visit(n, cur, log_scale);
        let np1 = T::from_usize(n + 1);
        let nn = T::from_usize(n);
        let next = x * (T::two() / np1).sqrt() * cur - (nn / np1).sqrt() * prev;
        prev = cur;
        cur = next;
        let mag = cur.abs();
        if mag > big {
            prev /= mag;
            cur /= mag;
            log_scale += mag.ln();
        }
    }
}

/// Orthonormal Hermite function `pi^{-1/4} (2^n n!)^{-1/2} e^{-x^2/2} H_n(x)`.
pub fn hermite_psi<T: Real>(n: usize, x: T) -> T {
    let mut out = T::zero();
    visit_scaled(n + 1, x, |k, m, ls| {
        if k == n {
            out = m * ls.exp();
        }
    });
    out
}

/// `psi_0(x) .. psi_{count-1}(x)`.
pub fn hermite_psi_all<T: Real>(count: usize, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(count);
    visit_scaled(count, x, |_, m, ls| out.push(m * ls.exp()));
    out
}

/// Mantissas of `psi_{m-1}` and `psi_m` sharing one scale, plus that log-scale.
fn top_pair<T: Real>(m: usize, x: T) -> (T, T, T) {
    let (mut lo, mut hi, mut scale) = (T::zero(), T::zero(), T::zero());
    let mut prev_ls = T::zero();
    visit_scaled(m + 1, x, |k, mant, ls| {
        if k + 1 == m {
            lo = mant;
            prev_ls = ls;
        } else if k == m {
            hi = mant;
            scale = ls;
        }
    });
    // A rescale between the two steps puts them on different scales.
    if prev_ls != scale {
        lo *= (prev_ls - scale).exp();
    }
    (lo, hi, scale)
}

/// Gauss–Hermite nodes with folded weights.
#[derive(Clone, Debug)]
pub struct QuadratureGrid<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
    log_weights: Vec<T>,
    sqrt_weights: Vec<T>,
}

impl<T: Real> QuadratureGrid<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Folded weights: `sum_i w_i u(x_i) v(x_i)` approximates `int u v dx`.
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn log_weights(&self) -> &[T] {
        &self.log_weights
    }

    pub fn sqrt_weights(&self) -> &[T] {
        &self.sqrt_weights
    }

    /// Folds raw function values: `f(x_i) -> sqrt(w_i) f(x_i)`.
    pub fn fold(&self, values: &[Cx<T>]) -> Result<Array1<Cx<T>>> {
        check_len(values.len(), self.len(), "grid values")?;
        Ok(values
            .iter()
            .zip(&self.sqrt_weights)
            .map(|(v, &s)| *v * s)
            .collect())
    }

    /// Inverse of [`fold`](Self::fold).
    pub fn unfold(&self, samples: &Array1<Cx<T>>) -> Result<Vec<Cx<T>>> {
        check_len(samples.len(), self.len(), "grid samples")?;
        Ok(samples
            .iter()
            .zip(&self.sqrt_weights)
            .map(|(v, &s)| *v / s)
            .collect())
    }

    /// Folded samples of an arbitrary complex function.
    pub fn sample(&self, f: impl Fn(T) -> Cx<T>) -> Array1<Cx<T>> {
        self.nodes
            .iter()
            .zip(&self.sqrt_weights)
            .map(|(&x, &s)| f(x) * s)
            .collect()
    }

    /// Indices of nodes with `|x| <= half_width`.
    pub fn window(&self, half_width: T) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.nodes[i].abs() <= half_width)
            .collect()
    }
}

fn check_len(got: usize, expected: usize, context: &'static str) -> Result<()> {
    if got != expected {
        return Err(LabError::Dimension {
            expected,
            got,
            context,
        });
    }
    Ok(())
}

/// `quad_order`-point Gauss–Hermite rule.
///
/// Nodes start from the eigenvalues of the Hermite Jacobi matrix and are
/// polished by Newton steps on `psi_M`; the non-negative half is computed and
/// mirrored so the rule is exactly symmetric. Folded weights are
/// `1 / (M psi_{M-1}(x_i)^2)`, evaluated in log space.
pub fn quadrature<T: Real>(spec: &BasisSpec) -> Result<QuadratureGrid<T>> {
    let m = spec.quad_order();
    let diag = vec![T::zero(); m];
    let off: Vec<T> = (1..m).map(|k| (T::from_usize(k) * T::half()).sqrt()).collect();
    let seeds = symmetric_tridiagonal_eigen(&diag, &off, false)?.values;

    let mut nodes = vec![T::zero(); m];
    let first_positive = m.div_ceil(2);
    let scale_m = (T::two() * T::from_usize(m)).sqrt();
    let eps = T::epsilon();
    for i in first_positive..m {
        let mut x = seeds[i].abs();
        let mut last_step = T::infinity();
        let mut converged = false;
        for _ in 0..100 {
            let (lo, hi, _) = top_pair(m, x);
            let deriv = scale_m * lo - x * hi;
            if deriv == T::zero() || !deriv.is_finite() {
                break;
            }
            let step = hi / deriv;
            x -= step;
            let mag = step.abs();
            let floor = T::lit(8.0) * eps * (T::one() + x.abs());
            let noise = eps.sqrt() * (T::one() + x.abs());
            if mag <= floor || (mag < noise && mag > T::half() * last_step) {
                converged = true;
                break;
            }
            last_step = mag;
        }
        if !converged || !x.is_finite() || x <= T::zero() {
            return Err(LabError::Convergence { index: i });
        }
        nodes[i] = x;
        nodes[m - 1 - i] = -x;
    }
    for w in nodes.windows(2) {
        if !(w[0] < w[1]) {
            return Err(LabError::Convergence { index: 0 });
        }
    }

    let ln_m = T::from_usize(m).ln();
    let mut log_weights = Vec::with_capacity(m);
    for &x in &nodes {
        let (lo, _, scale) = top_pair(m, x);
        // psi_{m-1}(x) = lo * exp(scale)
        log_weights.push(-ln_m - T::two() * (lo.abs().ln() + scale));
    }
    // Enforce exact mirror symmetry of the weights as well.
    for i in 0..m / 2 {
        let j = m - 1 - i;
        let avg = (log_weights[i] + log_weights[j]) * T::half();
        log_weights[i] = avg;
        log_weights[j] = avg;
    }
    let weights = log_weights.iter().map(|l| l.exp()).collect();
    let sqrt_weights = log_weights.iter().map(|l| (*l * T::half()).exp()).collect();
    Ok(QuadratureGrid {
        nodes,
        weights,
        log_weights,
        sqrt_weights,
    })
}

/// `M x N` matrix with entry `(i, n) = sqrt(w_i) psi_n(x_i)`.
#[derive(Clone, Debug)]
pub struct BasisMatrix<T> {
    values: Array2<T>,
}

impl<T: Real> BasisMatrix<T> {
    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn grid_len(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    /// `max |B^T B - I|`.
    pub fn orthonormality_error(&self) -> T {
        let gram = self.values.t().dot(&self.values);
        gram.indexed_iter().fold(T::zero(), |m, ((r, c), &v)| {
            let target = if r == c { T::one() } else { T::zero() };
            m.max((v - target).abs())
        })
    }

    /// Folded samples of basis function `n`.
    pub fn column(&self, n: usize) -> Array1<Cx<T>> {
        self.values.column(n).mapv(|v| Cx::new(v, T::zero()))
    }
}

pub fn basis_matrix<T: Real>(spec: &BasisSpec, grid: &QuadratureGrid<T>) -> Result<BasisMatrix<T>> {
    check_len(grid.len(), spec.quad_order(), "quadrature grid for basis spec")?;
    let n = spec.dim();
    let mut values = Array2::zeros((grid.len(), n));
    for (i, (&x, &lw)) in grid.nodes().iter().zip(grid.log_weights()).enumerate() {
        let half_lw = lw * T::half();
        visit_scaled(n, x, |k, mant, ls| {
            values[[i, k]] = mant * (ls + half_lw).exp();
        });
    }
    Ok(BasisMatrix { values })
}

/// Projects folded samples onto the basis: `c_n = sum_i B(i, n) samples(i)`.
pub fn coeffs_from_grid<T: Real>(samples: &Array1<Cx<T>>, basis: &BasisMatrix<T>) -> Result<StateVector<T>> {
    check_len(samples.len(), basis.grid_len(), "grid samples")?;
    let b = &basis.values;
    let coeffs = (0..basis.dim())
        .map(|n| {
            b.column(n)
                .iter()
                .zip(samples.iter())
                .fold(Cx::new(T::zero(), T::zero()), |acc, (&w, &s)| acc + s * w)
        })
        .collect();
    Ok(StateVector::from_coeffs(coeffs))
}

/// Folded samples `B c` of a coefficient vector.
pub fn grid_from_coeffs<T: Real>(state: &StateVector<T>, basis: &BasisMatrix<T>) -> Result<Array1<Cx<T>>> {
    check_len(state.dim(), basis.dim(), "coefficient vector")?;
    let b = &basis.values;
    Ok((0..basis.grid_len())
        .map(|i| {
            b.row(i)
                .iter()
                .zip(state.coeffs().iter())
                .fold(Cx::new(T::zero(), T::zero()), |acc, (&w, &c)| acc + c * w)
        })
        .collect())
}

/// Quadrature grid and basis matrix for one spec, built together.
#[derive(Clone, Debug)]
pub struct Basis<T> {
    pub spec: BasisSpec,
    pub grid: QuadratureGrid<T>,
    pub matrix: BasisMatrix<T>,
}

impl<T: Real> Basis<T> {
    pub fn new(spec: BasisSpec) -> Result<Self> {
        let grid = quadrature(&spec)?;
        let matrix = basis_matrix(&spec, &grid)?;
        Ok(Basis { spec, grid, matrix })
    }
}
