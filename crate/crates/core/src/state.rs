//! Quantum states: coefficient vectors in the Hermite basis and
//! `(existential weight, phase)` samples on the quadrature grid.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hermite::{coeffs_from_grid, grid_from_coeffs, Basis, QuadratureGrid};
use crate::operator::OperatorMatrix;
use crate::scalar::{cx, Cx, Real};

/// Largest mass fraction a state may lose to truncation before it is rejected.
pub const MAX_LEAKAGE: f64 = 1e-6;

/// Hermite coefficients of a state.
///
/// Construction does not force unit norm (a raw projection may be anything);
/// operations that need a physical state check it.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    coeffs: Array1<Cx<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn from_coeffs(coeffs: Array1<Cx<T>>) -> Self {
        StateVector { coeffs }
    }

    /// Basis vector `e_k` in dimension `n`.
    pub fn unit(n: usize, k: usize) -> Self {
        let mut c = Array1::from_elem(n, cx(T::zero()));
        c[k] = cx(T::one());
        StateVector { coeffs: c }
    }

    /// Scales to unit norm; a zero vector is a numerical error.
    pub fn normalized(coeffs: Array1<Cx<T>>) -> Result<Self> {
        let s = StateVector { coeffs };
        let norm = s.norm();
        if norm == T::zero() || !norm.is_finite() {
            return Err(LabError::Numerical("cannot normalize a zero state".into()));
        }
        Ok(s.scaled(cx(norm.recip())))
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &Array1<Cx<T>> {
        &self.coeffs
    }

    pub fn norm_sqr(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |a, z| a + z.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn is_unit(&self, tol: T) -> bool {
        (self.norm_sqr() - T::one()).abs() <= tol
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Cx<T> {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .fold(cx(T::zero()), |a, (x, y)| a + x.conj() * *y)
    }

    pub fn scaled(&self, factor: Cx<T>) -> Self {
        StateVector {
            coeffs: self.coeffs.mapv(|z| z * factor),
        }
    }

    /// Coefficient-wise complex conjugate.
    pub fn conj(&self) -> Self {
        StateVector {
            coeffs: self.coeffs.mapv(|z| z.conj()),
        }
    }

    pub fn distance(&self, other: &Self) -> T {
        self.coeffs
            .iter()
            .zip(other.coeffs.iter())
            .fold(T::zero(), |a, (x, y)| a + (*x - *y).norm_sqr())
            .sqrt()
    }

    /// `min_theta || self - e^{i theta} other ||`.
    pub fn phase_min_distance(&self, other: &Self) -> T {
        let d2 = self.norm_sqr() + other.norm_sqr() - T::two() * self.inner(other).norm();
        d2.max(T::zero()).sqrt()
    }
}

/// Which variable the grid samples are read as.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perspective {
    Position,
    Momentum,
}

/// A state as existential weight `rho >= 0` and phase `alpha` at the nodes.
///
/// Where `rho` vanishes the phase is meaningless; it is stored as 0 and the
/// node is listed in `undefined_phase`.
#[derive(Clone, Debug)]
pub struct GridState<'g, T> {
    grid: &'g QuadratureGrid<T>,
    rho: Vec<T>,
    phase: Vec<T>,
    perspective: Perspective,
    undefined_phase: Vec<usize>,
}

impl<'g, T: Real> GridState<'g, T> {
    pub fn new(grid: &'g QuadratureGrid<T>, rho: Vec<T>, phase: Vec<T>, perspective: Perspective) -> Result<Self> {
        for (got, ctx) in [(rho.len(), "weight samples"), (phase.len(), "phase samples")] {
            if got != grid.len() {
                return Err(LabError::Dimension {
                    expected: grid.len(),
                    got,
                    context: ctx,
                });
            }
        }
        if let Some((index, &value)) = rho.iter().enumerate().find(|(_, r)| !(**r >= T::zero())) {
            return Err(LabError::Domain {
                index,
                value: value.widen(),
            });
        }
        let mass = rho
            .iter()
            .zip(grid.weights())
            .fold(T::zero(), |a, (r, w)| a + *r * *w);
        if (mass - T::one()).abs() > T::tolerance(1e-8) {
            return Err(LabError::Numerical(format!(
                "existential weight integrates to {mass}, expected 1"
            )));
        }
        let mut phase = phase;
        let mut undefined_phase = Vec::new();
        for (i, r) in rho.iter().enumerate() {
            if *r == T::zero() {
                phase[i] = T::zero();
                undefined_phase.push(i);
            }
        }
        Ok(GridState {
            grid,
            rho,
            phase,
            perspective,
            undefined_phase,
        })
    }

    /// Samples `rho = |f|^2` and `alpha = arg f` of a coefficient state.
    pub fn from_state(state: &StateVector<T>, basis: &'g Basis<T>, perspective: Perspective) -> Result<Self> {
        let values = basis.grid.unfold(&grid_from_coeffs(state, &basis.matrix)?)?;
        let rho = values.iter().map(|z| z.norm_sqr()).collect();
        let phase = values.iter().map(|z| z.arg()).collect();
        GridState::new(&basis.grid, rho, phase, perspective)
    }

    pub fn grid(&self) -> &QuadratureGrid<T> {
        self.grid
    }

    pub fn rho(&self) -> &[T] {
        &self.rho
    }

    pub fn phase(&self) -> &[T] {
        &self.phase
    }

    pub fn perspective(&self) -> Perspective {
        self.perspective
    }

    pub fn undefined_phase(&self) -> &[usize] {
        &self.undefined_phase
    }
}

/// Result of projecting grid data onto the truncated basis.
#[derive(Clone, Debug)]
pub struct Projected<T> {
    pub state: StateVector<T>,
    /// `1 - ||c||^2` before renormalization.
    pub leakage: T,
}

/// Coefficients of `sqrt(rho) exp(i alpha)`.
pub fn state_from_weight_phase<T: Real>(grid_state: &GridState<'_, T>, basis: &Basis<T>) -> Result<Projected<T>> {
    let grid = &basis.grid;
    if grid_state.rho().len() != grid.len() {
        return Err(LabError::Dimension {
            expected: grid.len(),
            got: grid_state.rho().len(),
            context: "weight samples",
        });
    }
    let samples: Array1<Cx<T>> = grid_state
        .rho()
        .iter()
        .zip(grid_state.phase())
        .zip(grid.sqrt_weights())
        .map(|((r, a), s)| Cx::from_polar(r.sqrt() * *s, *a))
        .collect();
    let raw = coeffs_from_grid(&samples, &basis.matrix)?;
    let leakage = T::one() - raw.norm_sqr();
    if leakage > T::lit(MAX_LEAKAGE) {
        return Err(LabError::Truncation {
            leakage: leakage.widen(),
        });
    }
    Ok(Projected {
        state: StateVector::normalized(raw.coeffs().clone())?,
        leakage,
    })
}

fn require_unit<T: Real>(s: &StateVector<T>) -> Result<()> {
    if !s.is_unit(T::tolerance(1e-10)) {
        return Err(LabError::Contract(format!(
            "state must have unit norm, has |s|^2 = {}",
            s.norm_sqr()
        )));
    }
    Ok(())
}

/// `g = O f` for a unitary `O`.
pub fn transform_state<T: Real>(op: &OperatorMatrix<T>, s: &StateVector<T>) -> Result<StateVector<T>> {
    if !op.is_unitary() {
        return Err(LabError::Contract("transform must be unitary".into()));
    }
    if op.dim() != s.dim() {
        return Err(LabError::Dimension {
            expected: op.dim(),
            got: s.dim(),
            context: "state vs operator",
        });
    }
    require_unit(s)?;
    Ok(op.apply(s))
}

/// `rho(x_i) = |f(x_i)|^2`, unfolded.
pub fn existential_weight<T: Real>(s: &StateVector<T>, basis: &Basis<T>) -> Result<Vec<T>> {
    let samples = grid_from_coeffs(s, &basis.matrix)?;
    Ok(samples
        .iter()
        .zip(basis.grid.weights())
        .map(|(z, w)| z.norm_sqr() / *w)
        .collect())
}

/// `f = (e_0 + e^{i phi} e_2) / sqrt(2)` and its coefficient-wise conjugate.
///
/// Both members share position and momentum weights for every `phi`; their
/// overlap is `e^{-i phi} cos(phi)`.
pub fn pauli_pair<T: Real>(phi: T, n: usize) -> Result<(StateVector<T>, StateVector<T>)> {
    if n < 3 {
        return Err(LabError::Dimension {
            expected: 3,
            got: n,
            context: "Pauli pair needs psi_0 and psi_2",
        });
    }
    let r = T::half().sqrt();
    let mut c = Array1::from_elem(n, cx(T::zero()));
    c[0] = cx(r);
    c[2] = Cx::from_polar(r, phi);
    let f = StateVector::from_coeffs(c);
    let g = f.conj();
    Ok((f, g))
}

/// Expectation and variance of a hermitian observable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments<T> {
    pub expectation: T,
    pub variance: T,
}

pub fn moments<T: Real>(s: &StateVector<T>, op: &OperatorMatrix<T>) -> Result<Moments<T>> {
    if !op.is_hermitian() {
        return Err(LabError::Contract("observable must be hermitian".into()));
    }
    require_unit(s)?;
    let os = op.apply(s);
    let mean = s.inner(&os);
    if mean.im.abs() > T::tolerance(1e-10) {
        return Err(LabError::Numerical(format!(
            "expectation of hermitian observable has imaginary part {}",
            mean.im
        )));
    }
    // <s, O^2 s> = ||O s||^2 for hermitian O.
    let variance = os.norm_sqr() - mean.re * mean.re;
    if variance < -T::tolerance(1e-10) {
        return Err(LabError::Numerical(format!("negative variance {variance}")));
    }
    Ok(Moments {
        expectation: mean.re,
        variance: variance.max(T::zero()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::BasisSpec;
    use crate::operator::{fourier_operator, momentum_operator, parity_operator, position_operator};
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

    fn basis(n: usize, m: usize) -> Basis<f64> {
        Basis::new(BasisSpec::new(n, m).unwrap()).unwrap()
    }

    fn density_of(s: &StateVector<f64>, b: &Basis<f64>) -> (Vec<f64>, Vec<f64>) {
        let v = b.grid.unfold(&grid_from_coeffs(s, &b.matrix).unwrap()).unwrap();
        (v.iter().map(|z| z.norm_sqr()).collect(), v.iter().map(|z| z.arg()).collect())
    }

    #[test]
    fn coefficient_projection_examples() {
        let b = basis(16, 40);
        let c3 = coeffs_from_grid(&b.matrix.column(3), &b.matrix).unwrap();
        assert!(c3.distance(&StateVector::unit(16, 3)) <= 1e-10);

        let r = 0.5_f64.sqrt();
        let mix = (&b.matrix.column(0) + &b.matrix.column(2)).mapv(|z| z * r);
        let c = coeffs_from_grid(&mix, &b.matrix).unwrap();
        let mut want = Array1::from_elem(16, Cx::new(0.0, 0.0));
        want[0] = Cx::new(r, 0.0);
        want[2] = Cx::new(r, 0.0);
        assert!(c.distance(&StateVector::from_coeffs(want)) <= 1e-10);

        let zero = Array1::from_elem(40, Cx::new(0.0, 0.0));
        assert_eq!(coeffs_from_grid(&zero, &b.matrix).unwrap().norm(), 0.0);
    }

    #[test]
    fn grid_samples_of_basis_vectors() {
        let b = basis(8, 17);
        let e0 = grid_from_coeffs(&StateVector::unit(8, 0), &b.matrix).unwrap();
        assert_eq!(e0, b.matrix.column(0));
        let e1 = grid_from_coeffs(&StateVector::unit(8, 1), &b.matrix).unwrap();
        assert_eq!(e1[8].norm(), 0.0);
    }

    #[test]
    fn weight_phase_round_trips() {
        let b = basis(32, 64);
        let (rho, _) = density_of(&StateVector::unit(32, 0), &b);
        let gs = GridState::new(&b.grid, rho.clone(), vec![0.0; 64], Perspective::Position).unwrap();
        let p = state_from_weight_phase(&gs, &b).unwrap();
        assert!(p.state.distance(&StateVector::unit(32, 0)) <= 1e-10);
        assert!(p.leakage.abs() <= 1e-10);

        let c = 0.7;
        let gs = GridState::new(&b.grid, rho, vec![c; 64], Perspective::Position).unwrap();
        let p = state_from_weight_phase(&gs, &b).unwrap();
        let want = StateVector::unit(32, 0).scaled(Cx::from_polar(1.0, c));
        assert!(p.state.distance(&want) <= 1e-10);

        let mut coeffs = Array1::from_elem(32, Cx::new(0.0, 0.0));
        coeffs[0] = Cx::new(0.5_f64.sqrt(), 0.0);
        coeffs[2] = Cx::new(0.5_f64.sqrt(), 0.0);
        let target = StateVector::from_coeffs(coeffs);
        let (rho, alpha) = density_of(&target, &b);
        let gs = GridState::new(&b.grid, rho, alpha, Perspective::Position).unwrap();
        let p = state_from_weight_phase(&gs, &b).unwrap();
        assert!(p.state.distance(&target) <= 1e-9);
    }

    #[test]
    fn weight_errors() {
        let b = basis(8, 16);
        let mut rho = existential_weight(&StateVector::unit(8, 0), &b).unwrap();
        rho[3] = -1e-3;
        assert!(matches!(
            GridState::new(&b.grid, rho, vec![0.0; 16], Perspective::Position),
            Err(LabError::Domain { index: 3, .. })
        ));
        // psi_12 lies entirely outside an 8-function basis.
        let wide = basis(16, 16);
        let outside = existential_weight(&StateVector::unit(16, 12), &wide).unwrap();
        let narrow = Basis::<f64> {
            spec: BasisSpec::new(8, 16).unwrap(),
            grid: wide.grid.clone(),
            matrix: crate::hermite::basis_matrix(&BasisSpec::new(8, 16).unwrap(), &wide.grid).unwrap(),
        };
        let gs = GridState::new(&narrow.grid, outside, vec![0.0; 16], Perspective::Position).unwrap();
        assert!(matches!(
            state_from_weight_phase(&gs, &narrow),
            Err(LabError::Truncation { .. })
        ));
    }

    #[test]
    fn zero_density_nodes_are_flagged() {
        let b = basis(8, 9);
        let s = StateVector::unit(8, 1);
        let gs = GridState::from_state(&s, &b, Perspective::Position).unwrap();
        assert_eq!(gs.undefined_phase(), &[4]);
        assert_eq!(gs.phase()[4], 0.0);
    }

    #[test]
    fn fourier_transform_examples() {
        let f = fourier_operator::<f64>(8);
        let e0 = StateVector::unit(8, 0);
        assert_eq!(transform_state(&f, &e0).unwrap(), e0);
        let e3 = StateVector::unit(8, 3);
        assert_eq!(transform_state(&f, &e3).unwrap(), e3.scaled(Cx::new(0.0, 1.0)));
        let s = StateVector::normalized(Array1::from_shape_fn(8, |k| Cx::new(k as f64 - 2.5, 0.3 * k as f64))).unwrap();
        let twice = transform_state(&f, &transform_state(&f, &s).unwrap()).unwrap();
        assert!(twice.distance(&parity_operator(8).apply(&s)) <= 1e-15);
    }

    #[test]
    fn transform_contracts() {
        let x = position_operator::<f64>(8);
        assert!(matches!(transform_state(&x, &StateVector::unit(8, 0)), Err(LabError::Contract(_))));
        let long = StateVector::unit(8, 0).scaled(Cx::new(2.0, 0.0));
        assert!(transform_state(&fourier_operator(8), &long).is_err());
    }

    #[test]
    fn existential_weight_examples() {
        let b = basis(16, 32);
        let e0 = StateVector::unit(16, 0);
        let rho = existential_weight(&e0, &b).unwrap();
        for (r, &x) in rho.iter().zip(b.grid.nodes()) {
            let want = (-x * x).exp() / PI.sqrt();
            assert!((r - want).abs() <= 1e-13 * want.max(1e-300) + 1e-300);
        }
        let mass: f64 = rho.iter().zip(b.grid.weights()).map(|(r, w)| r * w).sum();
        assert!((mass - 1.0).abs() <= 1e-8);
        let f = fourier_operator(16);
        assert_eq!(existential_weight(&f.apply(&e0), &b).unwrap(), rho);
        let s = StateVector::normalized(Array1::from_shape_fn(16, |k| Cx::new(1.0, k as f64))).unwrap();
        let a = existential_weight(&s, &b).unwrap();
        let c = existential_weight(&s.scaled(Cx::from_polar(1.0, 1.234)), &b).unwrap();
        for (x, y) in a.iter().zip(&c) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
        }
    }

    #[test]
    fn pauli_pair_examples() {
        let b = basis(16, 32);
        let (f, g) = pauli_pair(FRAC_PI_2, 16).unwrap();
        assert!(f.is_unit(1e-15) && g.is_unit(1e-15));
        let (rf, rg) = (existential_weight(&f, &b).unwrap(), existential_weight(&g, &b).unwrap());
        assert!(rf.iter().zip(&rg).all(|(a, c)| (a - c).abs() <= 1e-12));
        let four = fourier_operator(16);
        let mf = existential_weight(&four.apply(&f), &b).unwrap();
        let mg = existential_weight(&four.apply(&g), &b).unwrap();
        assert!(mf.iter().zip(&mg).all(|(a, c)| (a - c).abs() <= 1e-12));
        assert!(f.inner(&g).norm() <= 1e-16);
        assert!((f.phase_min_distance(&g) - SQRT_2).abs() <= 1e-12);

        // <f, fbar> = e^{-i phi} cos(phi)
        let phi = 0.83_f64;
        let (f, g) = pauli_pair(phi, 4).unwrap();
        let want = Cx::from_polar(phi.cos(), -phi);
        assert!((f.inner(&g) - want).norm() <= 1e-15);

        let (f, g) = pauli_pair(1e-9, 4).unwrap();
        assert!(f.phase_min_distance(&g) < 1e-8);
        assert!(pauli_pair(1.0_f64, 2).is_err());
    }

    #[test]
    fn moment_examples() {
        let n = 16;
        let x = position_operator::<f64>(n);
        let p = momentum_operator::<f64>(n);
        let m = moments(&StateVector::<f64>::unit(n, 0), &x).unwrap();
        assert!(m.expectation.abs() < 1e-15 && (m.variance - 0.5).abs() < 1e-14);
        let m = moments(&StateVector::unit(n, 0), &p).unwrap();
        assert!(m.expectation.abs() < 1e-15 && (m.variance - 0.5).abs() < 1e-14);
        let m = moments(&StateVector::unit(n, 1), &x).unwrap();
        assert!((m.variance - 1.5).abs() < 1e-14);

        // Gaussian moment oracle: integrate x^2 psi_1^2 by quadrature.
        let b = basis(n, 40);
        let q: f64 = (0..40)
            .map(|i| b.grid.nodes()[i].powi(2) * b.matrix.values()[[i, 1]].powi(2))
            .sum();
        assert!((q - 1.5).abs() < 1e-12);

        assert!(matches!(
            moments(&StateVector::unit(n, 0), &fourier_operator::<f64>(n)),
            Err(LabError::Contract(_))
        ));
    }
}
