//! Operators in the Hermite-coefficient basis.
//!
//! Every operator of interest here (Fourier, parity, fractional rotations and
//! the regrouped quarter-involutions) is diagonal in this basis. Diagonal
//! operators keep their diagonal alongside the dense matrix so products and
//! powers are computed entrywise, which keeps the quarter-turn identities
//! exact in floating point.

use std::collections::BTreeSet;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hermite::{Basis, QuadratureGrid, MIN_DIM};
use crate::linalg::{adjoint, identity, max_entry_diff, CMatrix};
use crate::scalar::{cx, minus_i_pow, Cx, Real};
use crate::state::StateVector;

/// Name of the generator behind random regrouping plans and random states.
pub const GENERATOR: &str = "ChaCha8Rng::seed_from_u64";

/// Structural properties verified when an operator is built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tags {
    pub unitary: bool,
    pub diagonal: bool,
    pub hermitian: bool,
}

/// Dense `N x N` complex matrix with verified [`Tags`].
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix<T> {
    entries: CMatrix<T>,
    diag: Option<Vec<Cx<T>>>,
    tags: Tags,
}

fn tag_tol<T: Real>() -> T {
    T::tolerance(1e-12)
}

fn diag_is_unitary<T: Real>(d: &[Cx<T>]) -> bool {
    let tol = tag_tol::<T>();
    d.iter().all(|z| (z.norm_sqr() - T::one()).abs() <= tol)
}

fn diag_is_hermitian<T: Real>(d: &[Cx<T>]) -> bool {
    let tol = tag_tol::<T>();
    d.iter().all(|z| z.im.abs() <= tol)
}

fn dense_is_unitary<T: Real>(a: &CMatrix<T>) -> bool {
    max_entry_diff(&adjoint(a).dot(a), &identity(a.nrows())) <= tag_tol::<T>()
}

fn dense_is_hermitian<T: Real>(a: &CMatrix<T>) -> bool {
    max_entry_diff(a, &adjoint(a)) <= tag_tol::<T>()
}

fn dense_is_diagonal<T: Real>(a: &CMatrix<T>) -> bool {
    a.indexed_iter()
        .all(|((r, c), z)| r == c || (z.re == T::zero() && z.im == T::zero()))
}

impl<T: Real> OperatorMatrix<T> {
    /// Diagonal operator; tags are inferred.
    pub fn from_diagonal(d: Vec<Cx<T>>) -> Self {
        let entries = Array2::from_diag(&ndarray::Array1::from(d.clone()));
        let tags = Tags {
            unitary: diag_is_unitary(&d),
            diagonal: true,
            hermitian: diag_is_hermitian(&d),
        };
        OperatorMatrix {
            entries,
            diag: Some(d),
            tags,
        }
    }

    /// Dense operator with tags inferred from the entries.
    pub fn from_dense(entries: CMatrix<T>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(LabError::Dimension {
                expected: entries.nrows(),
                got: entries.ncols(),
                context: "operator must be square",
            });
        }
        if dense_is_diagonal(&entries) {
            return Ok(Self::from_diagonal(entries.diag().to_vec()));
        }
        let tags = Tags {
            unitary: dense_is_unitary(&entries),
            diagonal: false,
            hermitian: dense_is_hermitian(&entries),
        };
        Ok(OperatorMatrix {
            entries,
            diag: None,
            tags,
        })
    }

    /// Dense operator that must carry at least the `claimed` tags.
    pub fn with_tags(entries: CMatrix<T>, claimed: Tags) -> Result<Self> {
        let op = Self::from_dense(entries)?;
        let t = op.tags;
        for (want, have, name) in [
            (claimed.unitary, t.unitary, "unitary"),
            (claimed.diagonal, t.diagonal, "diagonal"),
            (claimed.hermitian, t.hermitian, "hermitian"),
        ] {
            if want && !have {
                return Err(LabError::Contract(format!("operator claimed {name} but is not")));
            }
        }
        Ok(op)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(vec![cx(T::one()); n])
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn diagonal(&self) -> Option<&[Cx<T>]> {
        self.diag.as_deref()
    }

    pub fn tags(&self) -> Tags {
        self.tags
    }

    pub fn is_unitary(&self) -> bool {
        self.tags.unitary
    }

    pub fn is_hermitian(&self) -> bool {
        self.tags.hermitian
    }

    pub fn adjoint(&self) -> Self {
        match &self.diag {
            Some(d) => Self::from_diagonal(d.iter().map(|z| z.conj()).collect()),
            None => OperatorMatrix {
                entries: adjoint(&self.entries),
                diag: None,
                tags: self.tags,
            },
        }
    }

    /// `self * rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim(), rhs.dim(), "operator dimensions differ");
        match (&self.diag, &rhs.diag) {
            (Some(a), Some(b)) => Self::from_diagonal(a.iter().zip(b).map(|(x, y)| *x * *y).collect()),
            (Some(a), None) => {
                let mut e = rhs.entries.clone();
                for (r, mut row) in e.rows_mut().into_iter().enumerate() {
                    row.mapv_inplace(|z| a[r] * z);
                }
                Self::from_dense(e).expect("square")
            }
            (None, Some(b)) => {
                let mut e = self.entries.clone();
                for mut row in e.rows_mut() {
                    for (c, z) in row.iter_mut().enumerate() {
                        *z *= b[c];
                    }
                }
                Self::from_dense(e).expect("square")
            }
            (None, None) => Self::from_dense(self.entries.dot(&rhs.entries)).expect("square"),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.dim());
        for _ in 0..k {
            out = out.compose(self);
        }
        out
    }

    /// Max-entry distance `max |self - other|`.
    pub fn distance(&self, other: &Self) -> T {
        match (&self.diag, &other.diag) {
            (Some(a), Some(b)) => a
                .iter()
                .zip(b)
                .fold(T::zero(), |m, (x, y)| m.max((*x - *y).norm())),
            _ => max_entry_diff(&self.entries, &other.entries),
        }
    }

    /// Matrix-vector product on a coefficient vector.
    pub fn apply(&self, s: &StateVector<T>) -> StateVector<T> {
        assert_eq!(self.dim(), s.dim(), "operator and state dimensions differ");
        let coeffs = match &self.diag {
            Some(d) => s.coeffs().iter().zip(d).map(|(c, z)| *c * *z).collect(),
            None => self.entries.dot(s.coeffs()),
        };
        StateVector::from_coeffs(coeffs)
    }

    /// Inverse, via the adjoint for unitary operators; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        if let Some(d) = &self.diag {
            if d.iter().any(|z| z.norm() == T::zero()) {
                return None;
            }
            return Some(Self::from_diagonal(d.iter().map(|z| z.inv()).collect()));
        }
        if self.tags.unitary {
            return Some(self.adjoint());
        }
        crate::linalg::invert(&self.entries).map(|e| Self::from_dense(e).expect("square"))
    }
}

/// `F psi_n = (-i)^n psi_n`.
pub fn fourier_operator<T: Real>(n: usize) -> OperatorMatrix<T> {
    OperatorMatrix::from_diagonal((0..n).map(minus_i_pow).collect())
}

/// `P psi_n = (-1)^n psi_n`.
pub fn parity_operator<T: Real>(n: usize) -> OperatorMatrix<T> {
    OperatorMatrix::from_diagonal((0..n).map(|k| minus_i_pow(2 * k)).collect())
}

/// Phase-space rotation by `theta`: diagonal `exp(-i n theta)`.
///
/// Angles that are whole quarter turns (to within rounding) use the exact
/// quarter-turn table, so `F(pi/2)` and `F(pi)` equal the Fourier and parity
/// operators bit for bit.
pub fn fractional_operator<T: Real>(n: usize, theta: T) -> OperatorMatrix<T> {
    let turns = theta / T::FRAC_PI_2();
    let nearest = turns.round();
    let snap = (turns - nearest).abs() <= T::lit(8.0) * T::epsilon() * T::one().max(turns.abs());
    let d = if snap {
        let q = nearest.to_i64().unwrap_or(0).rem_euclid(4) as usize;
        (0..n).map(|k| minus_i_pow(k * q)).collect()
    } else {
        (0..n)
            .map(|k| {
                let a = -T::from_usize(k) * theta;
                Cx::new(a.cos(), a.sin())
            })
            .collect()
    };
    OperatorMatrix::from_diagonal(d)
}

/// Position observable: `X(n, n+1) = X(n+1, n) = sqrt((n+1)/2)`.
pub fn position_operator<T: Real>(n: usize) -> OperatorMatrix<T> {
    let mut e = Array2::zeros((n, n));
    for k in 0..n.saturating_sub(1) {
        let v = cx((T::from_usize(k + 1) * T::half()).sqrt());
        e[[k, k + 1]] = v;
        e[[k + 1, k]] = v;
    }
    OperatorMatrix::from_dense(e).expect("square")
}

/// `P_K = K^dagger X K`.
pub fn conjugated_position<T: Real>(k: &OperatorMatrix<T>) -> Result<OperatorMatrix<T>> {
    if !k.is_unitary() {
        return Err(LabError::Contract("conjugating transform must be unitary".into()));
    }
    let x = position_operator::<T>(k.dim());
    Ok(k.adjoint().compose(&x).compose(k))
}

/// Momentum observable `F^dagger X F`.
pub fn momentum_operator<T: Real>(n: usize) -> OperatorMatrix<T> {
    conjugated_position(&fourier_operator(n)).expect("Fourier operator is unitary")
}

/// Four quarter-turn eigenspace projectors.
#[derive(Clone, Debug)]
pub struct ProjectorSet<T> {
    pub projectors: [OperatorMatrix<T>; 4],
}

/// Idempotence, orthogonality and completeness residuals.
#[derive(Clone, Copy, Debug)]
pub struct ProjectorResiduals<T> {
    pub idempotent: T,
    pub orthogonal: T,
    pub complete: T,
}

impl<T: Real> ProjectorSet<T> {
    fn from_sets(n: usize, sets: &[Vec<usize>; 4]) -> Self {
        let make = |set: &Vec<usize>| {
            let mut d = vec![cx(T::zero()); n];
            for &i in set {
                d[i] = cx(T::one());
            }
            OperatorMatrix::from_diagonal(d)
        };
        ProjectorSet {
            projectors: [make(&sets[0]), make(&sets[1]), make(&sets[2]), make(&sets[3])],
        }
    }

    /// `sum_k weights[k] P_k`.
    pub fn combine(&self, weights: [Cx<T>; 4]) -> OperatorMatrix<T> {
        let n = self.projectors[0].dim();
        let mut d = vec![cx(T::zero()); n];
        for (p, w) in self.projectors.iter().zip(weights) {
            for (acc, z) in d.iter_mut().zip(p.diagonal().expect("projectors are diagonal")) {
                *acc += *z * w;
            }
        }
        OperatorMatrix::from_diagonal(d)
    }

    /// `P_0 - i P_1 - P_2 + i P_3`.
    pub fn quarter_turn_operator(&self) -> OperatorMatrix<T> {
        self.combine([minus_i_pow(0), minus_i_pow(1), minus_i_pow(2), minus_i_pow(3)])
    }

    pub fn residuals(&self) -> ProjectorResiduals<T> {
        let n = self.projectors[0].dim();
        let mut idempotent = T::zero();
        let mut orthogonal = T::zero();
        let zero = OperatorMatrix::from_diagonal(vec![cx(T::zero()); n]);
        for (j, p) in self.projectors.iter().enumerate() {
            idempotent = idempotent.max(p.compose(p).distance(p));
            for q in self.projectors.iter().skip(j + 1) {
                orthogonal = orthogonal.max(p.compose(q).distance(&zero));
            }
        }
        let complete = self
            .combine([cx(T::one()); 4])
            .distance(&OperatorMatrix::identity(n));
        ProjectorResiduals {
            idempotent,
            orthogonal,
            complete,
        }
    }
}

/// Projectors onto `span{psi_{4r+k}}`.
pub fn fourier_projectors<T: Real>(n: usize) -> ProjectorSet<T> {
    RegroupingPlan::fourier(n).projectors()
}

/// Partition of even indices into `h0, h2` and odd indices into `h1, h3`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPlan", into = "RawPlan")]
pub struct RegroupingPlan {
    dim: usize,
    sets: [Vec<usize>; 4],
    seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct RawPlan {
    dim: usize,
    h0: Vec<usize>,
    h1: Vec<usize>,
    h2: Vec<usize>,
    h3: Vec<usize>,
    seed: Option<u64>,
}

impl TryFrom<RawPlan> for RegroupingPlan {
    type Error = LabError;

    fn try_from(raw: RawPlan) -> Result<Self> {
        let mut plan = RegroupingPlan::explicit(raw.dim, [raw.h0, raw.h1, raw.h2, raw.h3])?;
        plan.seed = raw.seed;
        Ok(plan)
    }
}

impl From<RegroupingPlan> for RawPlan {
    fn from(p: RegroupingPlan) -> Self {
        let [h0, h1, h2, h3] = p.sets;
        RawPlan {
            dim: p.dim,
            h0,
            h1,
            h2,
            h3,
            seed: p.seed,
        }
    }
}

/// How a plan is obtained.
#[derive(Clone, Debug)]
pub enum PlanSource {
    /// Sets `[h0, h1, h2, h3]`.
    Explicit([Vec<usize>; 4]),
    Random { seed: u64 },
}

pub fn make_regrouping_plan(n: usize, source: PlanSource) -> Result<RegroupingPlan> {
    match source {
        PlanSource::Explicit(sets) => RegroupingPlan::explicit(n, sets),
        PlanSource::Random { seed } => RegroupingPlan::random(n, seed),
    }
}

impl RegroupingPlan {
    /// `h_k = {4r + k}`.
    pub fn fourier(n: usize) -> Self {
        let mut sets: [Vec<usize>; 4] = Default::default();
        for i in 0..n {
            sets[i % 4].push(i);
        }
        RegroupingPlan {
            dim: n,
            sets,
            seed: None,
        }
    }

    /// Validates and canonicalizes (sorts) explicit sets `[h0, h1, h2, h3]`.
    pub fn explicit(n: usize, sets: [Vec<usize>; 4]) -> Result<Self> {
        if n < MIN_DIM {
            return Err(LabError::Plan {
                index: n,
                reason: format!("dimension must be at least {MIN_DIM}"),
            });
        }
        let mut seen = vec![false; n];
        let mut sorted: [Vec<usize>; 4] = Default::default();
        for (k, set) in sets.iter().enumerate() {
            let mut s = BTreeSet::new();
            for &i in set {
                if i >= n {
                    return Err(LabError::Plan {
                        index: i,
                        reason: format!("out of range for dimension {n}"),
                    });
                }
                if i % 2 != k % 2 {
                    let parity = if i % 2 == 0 { "even" } else { "odd" };
                    return Err(LabError::Plan {
                        index: i,
                        reason: format!("{parity} parity cannot be placed in h{k}"),
                    });
                }
                if seen[i] || !s.insert(i) {
                    return Err(LabError::Plan {
                        index: i,
                        reason: "appears in more than one set".into(),
                    });
                }
                seen[i] = true;
            }
            sorted[k] = s.into_iter().collect();
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(LabError::Plan {
                index: missing,
                reason: "not assigned to any set".into(),
            });
        }
        Ok(RegroupingPlan {
            dim: n,
            sets: sorted,
            seed: None,
        })
    }

    /// One unbiased coin per index, in increasing index order: heads sends an
    /// even index to `h0` (odd to `h1`), tails to `h2` (odd to `h3`).
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n < MIN_DIM {
            return Err(LabError::Plan {
                index: n,
                reason: format!("dimension must be at least {MIN_DIM}"),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sets: [Vec<usize>; 4] = Default::default();
        for i in 0..n {
            let heads: bool = rng.random();
            let k = match (i % 2, heads) {
                (0, true) => 0,
                (0, false) => 2,
                (_, true) => 1,
                (_, false) => 3,
            };
            sets[k].push(i);
        }
        Ok(RegroupingPlan {
            dim: n,
            sets,
            seed: Some(seed),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Index set of subspace `k` (0..4).
    pub fn set(&self, k: usize) -> &[usize] {
        &self.sets[k]
    }

    pub fn is_fourier(&self) -> bool {
        self.sets == RegroupingPlan::fourier(self.dim).sets
    }

    /// Which of `h0..h3` are empty.
    pub fn empty_sets(&self) -> Vec<usize> {
        (0..4).filter(|&k| self.sets[k].is_empty()).collect()
    }

    /// Subspace label `k` of basis index `i`.
    pub fn label(&self, i: usize) -> usize {
        (0..4)
            .find(|&k| self.sets[k].binary_search(&i).is_ok())
            .expect("validated plan covers every index")
    }

    pub fn projectors<T: Real>(&self) -> ProjectorSet<T> {
        ProjectorSet::from_sets(self.dim, &self.sets)
    }
}

/// `K = P~0 - i P~1 - P~2 + i P~3`.
pub fn k_operator<T: Real>(plan: &RegroupingPlan) -> OperatorMatrix<T> {
    OperatorMatrix::from_diagonal((0..plan.dim()).map(|i| minus_i_pow(plan.label(i))).collect())
}

/// Continuum kernel `kappa(x_i, x_j)` of `O` reconstructed on the grid:
/// `B O B^T` with the weight folding stripped from both axes.
pub fn kernel_matrix<T: Real>(op: &OperatorMatrix<T>, basis: &Basis<T>) -> Result<CMatrix<T>> {
    let b = basis.matrix.values();
    if op.dim() != b.ncols() {
        return Err(LabError::Dimension {
            expected: b.ncols(),
            got: op.dim(),
            context: "operator dimension vs basis",
        });
    }
    let m = b.nrows();
    let sw = basis.grid.sqrt_weights();
    // psi_n(x_i) = B(i, n) / sqrt(w_i)
    let psi: CMatrix<T> = Array2::from_shape_fn((m, b.ncols()), |(i, n)| cx(b[[i, n]] / sw[i]));
    let left = match op.diagonal() {
        Some(d) => Array2::from_shape_fn(psi.dim(), |(i, n)| psi[[i, n]] * d[n]),
        None => psi.dot(op.entries()),
    };
    Ok(left.dot(&psi.t()))
}

/// Quadrature discretization of the continuum Fourier integral acting on
/// folded samples: entry `(j, i) = sqrt(w_j) sqrt(w_i) exp(-i x_j x_i) / sqrt(2 pi)`.
pub fn fourier_quadrature_matrix<T: Real>(grid: &QuadratureGrid<T>) -> CMatrix<T> {
    let x = grid.nodes();
    let sw = grid.sqrt_weights();
    let norm = (T::two() * T::PI()).sqrt().recip();
    Array2::from_shape_fn((grid.len(), grid.len()), |(j, i)| {
        let a = -x[j] * x[i];
        Cx::new(a.cos(), a.sin()) * (sw[j] * sw[i] * norm)
    })
}

/// The Fourier integral expressed in the coefficient basis by quadrature: `B^T Q B`.
pub fn fourier_by_quadrature<T: Real>(basis: &Basis<T>) -> CMatrix<T> {
    let q = fourier_quadrature_matrix(&basis.grid);
    let b = basis.matrix.values().mapv(cx);
    b.t().dot(&q).dot(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::BasisSpec;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    type Op = OperatorMatrix<f64>;
    const I: Cx<f64> = Cx::new(0.0, 1.0);

    fn dense_product(a: &Op, b: &Op) -> CMatrix<f64> {
        let n = a.dim();
        Array2::from_shape_fn((n, n), |(r, c)| {
            (0..n).fold(Cx::new(0.0, 0.0), |acc, k| acc + a.entries()[[r, k]] * b.entries()[[k, c]])
        })
    }

    #[test]
    fn fourier_entries_and_period() {
        let f: Op = fourier_operator(8);
        assert_eq!(f.entries()[[0, 0]], Cx::new(1.0, 0.0));
        assert_eq!(f.entries()[[3, 3]], I);
        assert!(f.is_unitary() && f.tags().diagonal);
        assert_eq!(f.pow(4), Op::identity(8));
        assert_eq!(f.pow(2), parity_operator(8));
    }

    #[test]
    fn parity_is_involution() {
        let p: Op = parity_operator(6);
        assert_eq!(p.entries()[[2, 2]], Cx::new(1.0, 0.0));
        assert_eq!(p.compose(&p), Op::identity(6));
    }

    #[test]
    fn parity_reverses_grid_samples() {
        let basis = Basis::<f64>::new(BasisSpec::new(8, 17).unwrap()).unwrap();
        let s = StateVector::unit(8, 1);
        let flipped = parity_operator(8).apply(&s);
        let a = crate::hermite::grid_from_coeffs(&s, &basis.matrix).unwrap();
        let b = crate::hermite::grid_from_coeffs(&flipped, &basis.matrix).unwrap();
        let m = a.len();
        for i in 0..m {
            assert!((b[i] - a[m - 1 - i]).norm() < 1e-15);
        }
    }

    #[test]
    fn fourier_projector_structure() {
        let ps: ProjectorSet<f64> = fourier_projectors(8);
        let d0: Vec<f64> = ps.projectors[0].diagonal().unwrap().iter().map(|z| z.re).collect();
        assert_eq!(d0, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let r = ps.residuals();
        assert_eq!((r.idempotent, r.orthogonal, r.complete), (0.0, 0.0, 0.0));
        assert_eq!(ps.quarter_turn_operator(), fourier_operator(8));
        let zero = Op::from_diagonal(vec![Cx::new(0.0, 0.0); 8]);
        assert_eq!(ps.projectors[1].compose(&ps.projectors[3]), zero);
    }

    #[test]
    fn explicit_plans() {
        let fourier = make_regrouping_plan(
            8,
            PlanSource::Explicit([vec![0, 4], vec![1, 5], vec![2, 6], vec![3, 7]]),
        )
        .unwrap();
        assert!(fourier.is_fourier());
        assert_eq!(k_operator::<f64>(&fourier), fourier_operator(8));

        let other = make_regrouping_plan(
            8,
            PlanSource::Explicit([vec![0, 6], vec![1, 7], vec![2, 4], vec![3, 5]]),
        )
        .unwrap();
        assert!(!other.is_fourier());
        let k: Op = k_operator(&other);
        assert_eq!(k.entries()[[6, 6]], Cx::new(1.0, 0.0));
        assert_eq!(fourier_operator::<f64>(8).entries()[[6, 6]], Cx::new(-1.0, 0.0));
        assert_eq!(k.distance(&fourier_operator(8)), 2.0);
        assert_eq!(k.compose(&k), parity_operator(8));
        assert_eq!(k.pow(4), Op::identity(8));
    }

    #[test]
    fn plan_validation_names_index() {
        let err = RegroupingPlan::explicit(8, [vec![0, 1], vec![3, 5, 7], vec![2, 4, 6], vec![]]).unwrap_err();
        match err {
            LabError::Plan { index, reason } => {
                assert_eq!(index, 1);
                assert!(reason.contains("odd"));
            }
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(
            RegroupingPlan::explicit(8, [vec![0, 2], vec![1, 3], vec![2, 4, 6], vec![5, 7]]),
            Err(LabError::Plan { index: 2, .. })
        ));
        assert!(matches!(
            RegroupingPlan::explicit(8, [vec![0, 2], vec![1, 3], vec![4], vec![5, 7]]),
            Err(LabError::Plan { index: 6, .. })
        ));
        assert!(matches!(
            RegroupingPlan::explicit(4, [vec![0, 8], vec![1, 3], vec![2], vec![]]),
            Err(LabError::Plan { index: 8, .. })
        ));
    }

    #[test]
    fn degenerate_plan_is_allowed_and_flagged() {
        let p = RegroupingPlan::explicit(6, [vec![0, 2, 4], vec![1, 3, 5], vec![], vec![]]).unwrap();
        assert_eq!(p.empty_sets(), vec![2, 3]);
        let k: Op = k_operator(&p);
        assert_eq!(k.compose(&k), parity_operator(6));
    }

    #[test]
    fn random_plans_are_reproducible() {
        let a = RegroupingPlan::random(64, 7).unwrap();
        let b = RegroupingPlan::random(64, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.seed(), Some(7));
        assert_ne!(a, RegroupingPlan::random(64, 8).unwrap());
    }

    #[test]
    fn plan_json_round_trip() {
        let p = RegroupingPlan::random(16, 3).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.starts_with(r#"{"dim":16,"h0":["#));
        let back: RegroupingPlan = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
        let bad = r#"{"dim": 4, "h0": [0, 1], "h1": [3], "h2": [2], "h3": [], "seed": null}"#;
        assert!(serde_json::from_str::<RegroupingPlan>(bad).is_err());
    }

    #[test]
    fn fractional_special_angles() {
        assert_eq!(fractional_operator(16, FRAC_PI_2), fourier_operator::<f64>(16));
        assert_eq!(fractional_operator(16, PI), parity_operator::<f64>(16));
        assert_eq!(fractional_operator(16, 0.0), Op::identity(16));
        assert_eq!(fractional_operator(16, -FRAC_PI_2), fourier_operator::<f64>(16).adjoint());
    }

    #[test]
    fn fractional_group_law() {
        let (a, b) = (0.37, 1.91);
        let lhs = fractional_operator::<f64>(64, a).compose(&fractional_operator(64, b));
        assert!(lhs.distance(&fractional_operator(64, a + b)) <= 1e-12);
    }

    #[test]
    fn position_entries_match_quadrature() {
        let x: Op = position_operator(6);
        assert!((x.entries()[[0, 1]].re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(x.is_hermitian());
        for k in 0..6 {
            assert_eq!(x.entries()[[k, k]], Cx::new(0.0, 0.0));
        }
        // Independent: integrate psi_m x psi_n on a Gauss-Hermite grid.
        let basis = Basis::<f64>::new(BasisSpec::new(6, 24).unwrap()).unwrap();
        let b = basis.matrix.values();
        for r in 0..6 {
            for c in 0..6 {
                let q: f64 = (0..b.nrows()).map(|i| b[[i, r]] * basis.grid.nodes()[i] * b[[i, c]]).sum();
                assert!((q - x.entries()[[r, c]].re).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn momentum_matches_dense_conjugation() {
        let n = 10;
        let f: Op = fourier_operator(n);
        let x: Op = position_operator(n);
        let dense = dense_product(&f.adjoint(), &Op::from_dense(dense_product(&x, &f)).unwrap());
        let p: Op = momentum_operator(n);
        assert!(max_entry_diff(p.entries(), &dense) < 1e-15);
        // P(0,1) = -i/sqrt(2): -i d/dx convention, gives [X, P] = +i.
        assert!((p.entries()[[0, 1]] - Cx::new(0.0, -FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!(p.is_hermitian());
        assert!(p.entries().iter().all(|z| z.re == 0.0));
    }

    #[test]
    fn conjugated_position_cases() {
        let n = 12;
        let x: Op = position_operator(n);
        assert_eq!(conjugated_position(&fourier_operator::<f64>(n)).unwrap(), momentum_operator(n));
        assert_eq!(conjugated_position(&Op::identity(n)).unwrap(), x);
        let flipped = conjugated_position(&parity_operator::<f64>(n)).unwrap();
        assert!(max_entry_diff(flipped.entries(), &x.entries().mapv(|z| -z)) <= 1e-12);
        let not_unitary = Op::from_diagonal(vec![Cx::new(2.0, 0.0); n]);
        assert!(matches!(conjugated_position(&not_unitary), Err(LabError::Contract(_))));
    }

    #[test]
    fn tag_claims_are_checked() {
        let x: Op = position_operator(4);
        assert!(Op::with_tags(x.entries().clone(), Tags { hermitian: true, ..Tags::default() }).is_ok());
        assert!(Op::with_tags(x.entries().clone(), Tags { unitary: true, ..Tags::default() }).is_err());
    }

    #[test]
    fn identity_and_parity_kernels() {
        let basis = Basis::<f64>::new(BasisSpec::new(32, 64).unwrap()).unwrap();
        let m = basis.grid.len();
        let window = basis.grid.window(2.5);
        let id = kernel_matrix(&Op::identity(32), &basis).unwrap();
        let par = kernel_matrix(&parity_operator(32), &basis).unwrap();
        for &i in &window {
            let row_max = (0..m).max_by(|&a, &b| id[[i, a]].norm().partial_cmp(&id[[i, b]].norm()).unwrap());
            assert_eq!(row_max, Some(i));
            let rev_max = (0..m).max_by(|&a, &b| par[[i, a]].norm().partial_cmp(&par[[i, b]].norm()).unwrap());
            assert_eq!(rev_max, Some(m - 1 - i));
        }
        // Parity kernel is the identity kernel with columns reversed.
        for i in 0..m {
            for j in 0..m {
                assert!((par[[i, j]] - id[[i, m - 1 - j]]).norm() <= 1e-12 * (1.0 + id[[i, m - 1 - j]].norm()));
            }
        }
    }

    #[test]
    fn quadrature_fourier_agrees_with_spectral_form() {
        let basis = Basis::<f64>::new(BasisSpec::new(64, 128).unwrap()).unwrap();
        let q = fourier_by_quadrature(&basis);
        let f: Op = fourier_operator(64);
        let lead = crate::linalg::leading_block(&q, 32);
        assert!(max_entry_diff(&lead, &crate::linalg::leading_block(f.entries(), 32)) <= 1e-8);
    }
}
