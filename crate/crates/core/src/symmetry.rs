//! Symmetry checks for candidate position-to-momentum transforms and the
//! exploratory scans (commutators, uncertainty products, kernel bias,
//! translations) run on them.
//!
//! All operator norms are max-entry norms. Residuals are widened to `f64`
//! for reporting whatever scalar type the computation ran in.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hermite::{Basis, BasisSpec};
use crate::linalg::{hermitian_tridiagonal_eigen, identity, max_entry, CMatrix};
use crate::operator::{
    conjugated_position, kernel_matrix, momentum_operator, parity_operator, position_operator, OperatorMatrix,
    RegroupingPlan, GENERATOR,
};
use crate::scalar::{cx, i_unit, minus_i_pow, Real};
use crate::state::{existential_weight, moments, transform_state, StateVector};

pub const UNITARITY: &str = "unitarity";
pub const SQUARE_IS_PARITY: &str = "square_is_parity";
pub const PERIOD_FOUR: &str = "period_four";
pub const EIGENVALUES: &str = "eigenvalues_quarter_turns";
pub const INVERSE_IS_CUBE: &str = "inverse_is_cube";

/// Names of the rows [`verify_symmetry`] produces, in order.
pub const SYMMETRY_CHECKS: [&str; 5] = [UNITARITY, SQUARE_IS_PARITY, PERIOD_FOUR, EIGENVALUES, INVERSE_IS_CUBE];

/// Coefficients beyond `dim - INTERIOR_PAD` are zeroed in random scan states.
pub const INTERIOR_PAD: usize = 8;

/// One named residual against its tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            residual,
            tolerance,
            // NaN residuals fail.
            pass: residual <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub dim: usize,
    pub basis: Option<BasisSpec>,
    /// Human-readable operator label, e.g. `fourier` or `k(seed=7)`.
    pub operator: String,
    pub plan: Option<RegroupingPlan>,
    pub seed: Option<u64>,
    pub generator: String,
    pub reliability_bound: Option<f64>,
    pub flags: Vec<String>,
    /// Excluded from the determinism contract.
    pub timestamp: String,
}

impl ReportMetadata {
    pub fn for_dim(dim: usize) -> Self {
        ReportMetadata {
            dim,
            generator: GENERATOR.to_string(),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub checks: Vec<Check>,
    pub metadata: ReportMetadata,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failing(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Quarter-involution checks with one tolerance for every row.
pub fn verify_symmetry<T: Real>(op: &OperatorMatrix<T>, tol: f64) -> PropertyReport {
    verify_symmetry_with(op, &BTreeMap::new(), tol)
}

/// Quarter-involution checks; `tolerances` overrides `default_tol` by row name.
pub fn verify_symmetry_with<T: Real>(
    op: &OperatorMatrix<T>,
    tolerances: &BTreeMap<String, f64>,
    default_tol: f64,
) -> PropertyReport {
    let n = op.dim();
    let tol = |name: &str| tolerances.get(name).copied().unwrap_or(default_tol);
    let id = OperatorMatrix::<T>::identity(n);
    let square = op.compose(op);
    let fourth = square.compose(&square);
    let cube = square.compose(op);
    let mut metadata = ReportMetadata::for_dim(n);

    let unitarity = op.adjoint().compose(op).distance(&id).widen();
    let square_parity = square.distance(&parity_operator(n)).widen();
    let period = fourth.distance(&id).widen();
    let eigen = match op.diagonal() {
        Some(d) => {
            let roots: [crate::scalar::Cx<T>; 4] = std::array::from_fn(minus_i_pow);
            let mut present = [false; 4];
            let worst = d.iter().fold(T::zero(), |m, z| {
                let (k, dist) = roots
                    .iter()
                    .map(|r| (*z - *r).norm())
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
                    .expect("four roots");
                present[k] = true;
                m.max(dist)
            });
            let labels = ["1", "-i", "-1", "i"];
            for (k, p) in present.iter().enumerate() {
                if !p {
                    metadata.flags.push(format!("eigenvalue {} absent", labels[k]));
                }
            }
            worst.widen()
        }
        None if op.is_unitary() => {
            // Unitary: every eigenvalue lies within (pi/8) |lambda^4 - 1| of a
            // quarter turn, and |lambda^4 - 1| <= ||O^4 - I||_F.
            let diff = fourth.entries() - identity::<T>(n);
            let frob = diff.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
            metadata.flags.push("eigenvalue row is a Frobenius bound (dense operator)".into());
            (T::PI() / T::lit(8.0) * frob).widen()
        }
        None => {
            metadata.flags.push("eigenvalues not computed for dense non-unitary operator".into());
            f64::INFINITY
        }
    };
    let inverse = match op.inverse() {
        Some(inv) => inv.distance(&cube).widen(),
        None => {
            metadata.flags.push("operator is singular".into());
            f64::INFINITY
        }
    };
    let checks = [unitarity, square_parity, period, eigen, inverse]
        .into_iter()
        .zip(SYMMETRY_CHECKS)
        .map(|(r, name)| Check::new(name, r, tol(name)))
        .collect();
    PropertyReport { checks, metadata }
}

/// `max |[X, P_K] - i I|` over the leading block and over the full matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorResidual {
    pub interior_dim: usize,
    pub interior: f64,
    pub full: f64,
}

pub fn commutator_residual<T: Real>(
    x: &OperatorMatrix<T>,
    pk: &OperatorMatrix<T>,
    interior: usize,
) -> Result<CommutatorResidual> {
    if !x.is_hermitian() || !pk.is_hermitian() {
        return Err(LabError::Contract("commutator arguments must be hermitian".into()));
    }
    let n = x.dim();
    if pk.dim() != n {
        return Err(LabError::Dimension {
            expected: n,
            got: pk.dim(),
            context: "commutator operands",
        });
    }
    if interior > n.saturating_sub(2) || interior == 0 {
        return Err(LabError::Dimension {
            expected: n.saturating_sub(2),
            got: interior,
            context: "interior block must be 1..=N-2",
        });
    }
    let c: CMatrix<T> = x.entries().dot(pk.entries()) - pk.entries().dot(x.entries());
    let target = identity::<T>(n).mapv(|z| z * i_unit());
    let diff = c - target;
    let inner = diff.slice(ndarray::s![..interior, ..interior]).to_owned();
    Ok(CommutatorResidual {
        interior_dim: interior,
        interior: max_entry(&inner).widen(),
        full: max_entry(&diff).widen(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyRow {
    pub state: usize,
    pub var_x: f64,
    pub var_p: f64,
    pub delta_x: f64,
    pub delta_p: f64,
    pub variance_product: f64,
    pub deviation_product: f64,
}

/// `Delta X` against `Delta P_K` with `P_K = K^dagger X K`, one row per state.
///
/// Rows carry no verdict; only the Fourier case has a known floor.
pub fn uncertainty_scan<T: Real>(k: &OperatorMatrix<T>, states: &[StateVector<T>]) -> Result<Vec<UncertaintyRow>> {
    let pk = conjugated_position(k)?;
    let x = position_operator::<T>(k.dim());
    states
        .par_iter()
        .enumerate()
        .map(|(id, s)| {
            let mx = moments(s, &x)?;
            let mp = moments(s, &pk)?;
            let (vx, vp) = (mx.variance.widen(), mp.variance.widen());
            Ok(UncertaintyRow {
                state: id,
                var_x: vx,
                var_p: vp,
                delta_x: vx.sqrt(),
                delta_p: vp.sqrt(),
                variance_product: vx * vp,
                deviation_product: vx.sqrt() * vp.sqrt(),
            })
        })
        .collect()
}

/// Gaussian random coefficients with the top [`INTERIOR_PAD`] zeroed, normalized.
pub fn random_interior_states<T: Real>(n: usize, count: usize, seed: u64) -> Result<Vec<StateVector<T>>> {
    if n <= INTERIOR_PAD {
        return Err(LabError::Dimension {
            expected: INTERIOR_PAD + 1,
            got: n,
            context: "random interior states need dim > 8",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let coeffs = (0..n)
                .map(|k| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    if k < n - INTERIOR_PAD {
                        crate::scalar::Cx::new(T::lit(re), T::lit(im))
                    } else {
                        cx(T::zero())
                    }
                })
                .collect();
            StateVector::normalized(coeffs)
        })
        .collect()
}

/// Statistics of `| |kappa(x, p)| - 1/sqrt(2 pi) |` over `|x|, |p| <= window`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelDeviation {
    pub window: f64,
    pub mean: f64,
    pub max: f64,
    pub pairs: usize,
}

pub fn unbiasedness_scan<T: Real>(op: &OperatorMatrix<T>, basis: &Basis<T>, window: f64) -> Result<KernelDeviation> {
    let bound = basis.spec.reliability_bound();
    if !(window > 0.0 && window <= bound) {
        return Err(LabError::Range(format!(
            "window {window} outside (0, {bound:.6}] (0.7 sqrt(2N) for N = {})",
            basis.spec.dim()
        )));
    }
    let kappa = kernel_matrix(op, basis)?;
    let idx = basis.grid.window(T::lit(window));
    let flat = (T::two() * T::PI()).sqrt().recip();
    let mut sum = 0.0;
    let mut max = 0.0_f64;
    for &i in &idx {
        for &j in &idx {
            let d = (kappa[[i, j]].norm() - flat).abs().widen();
            sum += d;
            max = max.max(d);
        }
    }
    let pairs = idx.len() * idx.len();
    Ok(KernelDeviation {
        window,
        mean: if pairs > 0 { sum / pairs as f64 } else { 0.0 },
        max,
        pairs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslationCheck {
    pub a: f64,
    pub interior: usize,
    /// Rows/columns excluded at the basis edge: `ceil(4 N |a|)`.
    pub guard_band: usize,
    pub residual_interior: f64,
    pub residual_full: f64,
}

/// `U_a^dagger X U_a - (X + a I)` with `U_a = exp(-i a P)`, `P` diagonalized as
/// a hermitian tridiagonal matrix.
pub fn translation_check<T: Real>(a: T, n: usize, interior: usize) -> Result<TranslationCheck> {
    let af = a.widen();
    if !(af.abs() <= 1.0) {
        return Err(LabError::Range(format!("displacement {af} outside [-1, 1]")));
    }
    let guard_band = (4.0 * n as f64 * af.abs()).ceil() as usize;
    if interior == 0 || interior + guard_band > n {
        return Err(LabError::Range(format!(
            "interior {interior} must be in 1..={} (N = {n}, guard band {guard_band})",
            n.saturating_sub(guard_band)
        )));
    }
    let x = position_operator::<T>(n);
    let p = momentum_operator::<T>(n);
    let eig = hermitian_tridiagonal_eigen(p.entries(), T::tolerance(1e-12))?;
    let w = &eig.vectors;
    let phases: Vec<_> = eig.values.iter().map(|&l| crate::scalar::Cx::from_polar(T::one(), -a * l)).collect();
    let mut scaled = w.clone();
    for mut row in scaled.rows_mut() {
        for (c, z) in row.iter_mut().enumerate() {
            *z *= phases[c];
        }
    }
    let u = scaled.dot(&crate::linalg::adjoint(w));
    let moved = crate::linalg::adjoint(&u).dot(x.entries()).dot(&u);
    let shifted = x.entries() + &identity::<T>(n).mapv(|z| z * a);
    let diff = moved - shifted;
    let inner = diff.slice(ndarray::s![..interior, ..interior]).to_owned();
    Ok(TranslationCheck {
        a: af,
        interior,
        guard_band,
        residual_interior: max_entry(&inner).widen(),
        residual_full: max_entry(&diff).widen(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliRow {
    pub transform: String,
    /// Sup-norm distance between the two transformed existential weights.
    pub weight_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliReport {
    pub rows: Vec<PauliRow>,
    /// `min_theta || f - e^{i theta} g ||`.
    pub state_distance: f64,
}

pub fn pauli_report<T: Real>(
    pair: (&StateVector<T>, &StateVector<T>),
    transforms: &[(&str, &OperatorMatrix<T>)],
    basis: &Basis<T>,
) -> Result<PauliReport> {
    let (f, g) = pair;
    let rows = transforms
        .iter()
        .map(|(name, t)| {
            let wf = existential_weight(&transform_state(t, f)?, basis)?;
            let wg = existential_weight(&transform_state(t, g)?, basis)?;
            let d = wf.iter().zip(&wg).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
            Ok(PauliRow {
                transform: name.to_string(),
                weight_distance: d.widen(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PauliReport {
        rows,
        state_distance: f.phase_min_distance(g).widen(),
    })
}

/// Everything the exploration command measures for one transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplorationReport {
    pub metadata: ReportMetadata,
    pub commutator_interior_dim: usize,
    pub commutator_interior_residual: f64,
    pub commutator_full_residual: f64,
    pub uncertainty_samples: Vec<UncertaintyRow>,
    pub kernel_deviation: KernelDeviation,
    /// Same scan for the Fourier operator at equal dimension.
    pub kernel_baseline: KernelDeviation,
    /// `kernel_deviation.max / kernel_baseline.max`.
    pub kernel_ratio: f64,
    pub window: f64,
    pub translation: TranslationCheck,
    /// Required checks; populated only when the transform is the Fourier operator.
    pub checks: Vec<Check>,
}
