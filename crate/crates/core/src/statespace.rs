//! Continuous-time state-space realizations and the operations built on them:
//! evaluation of the transfer matrix, LFT interconnection, column
//! concatenation, stability, Lyapunov gramians and the H2 norm.

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{self, block_diag, hstack, to_complex, vstack, CMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateSpaceError {
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("ResolventSingular: sI - A is singular at s = {0}")]
    ResolventSingular(Complex64),
    #[error("PartitionInvalid: {0}")]
    PartitionInvalid(String),
    #[error("EigendecompositionFailure")]
    EigendecompositionFailure,
    #[error("UnstableA: Lyapunov equation needs a Hurwitz matrix (spectral abscissa {0})")]
    UnstableA(f64),
}

type Result<T> = std::result::Result<T, StateSpaceError>;

/// Realization `(A, B, C, D)` of `C (sI - A)⁻¹ B + D`.
///
/// The state count is the realization's degree, which need not be minimal.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

impl StateSpace {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(StateSpaceError::DimensionMismatch(format!("A is {}x{}", n, a.ncols())));
        }
        if b.nrows() != n || c.ncols() != n || d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(StateSpaceError::DimensionMismatch(format!(
                "A {:?}, B {:?}, C {:?}, D {:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        Ok(StateSpace { a, b, c, d })
    }

    /// Memoryless system `D`.
    pub fn static_gain(d: DMatrix<f64>) -> Self {
        let (q, m) = d.shape();
        StateSpace {
            a: DMatrix::zeros(0, 0),
            b: DMatrix::zeros(0, m),
            c: DMatrix::zeros(q, 0),
            d,
        }
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }
    pub fn n_inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn into_parts(self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        (self.a, self.b, self.c, self.d)
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.d.iter().all(|&x| x == 0.0)
    }

    /// `C (sI - A)⁻¹ B + D` at a complex frequency.
    pub fn evaluate(&self, s: Complex64) -> Result<CMatrix> {
        let n = self.order();
        let d = to_complex(&self.d);
        if n == 0 {
            return Ok(d);
        }
        let resolvent = CMatrix::identity(n, n) * s - to_complex(&self.a);
        let lu = resolvent.lu();
        let u = lu.u();
        let diag: Vec<f64> = u.diagonal().iter().map(|z| z.norm()).collect();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        if !(lo > 1e-13 * hi.max(1.0)) {
            return Err(StateSpaceError::ResolventSingular(s));
        }
        let x = lu
            .solve(&to_complex(&self.b))
            .ok_or(StateSpaceError::ResolventSingular(s))?;
        Ok(to_complex(&self.c) * x + d)
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        linalg::eigenvalues(&self.a).ok_or(StateSpaceError::EigendecompositionFailure)
    }

    /// Change of state coordinates `x = T x̃`: `(T⁻¹AT, T⁻¹B, CT, D)`.
    pub fn similarity(&self, t: &DMatrix<f64>, t_inv: &DMatrix<f64>) -> Self {
        StateSpace {
            a: t_inv * &self.a * t,
            b: t_inv * &self.b,
            c: &self.c * t,
            d: self.d.clone(),
        }
    }

    /// Submatrix of inputs and outputs, keeping all states.
    pub fn subsystem(&self, outputs: &[usize], inputs: &[usize]) -> Self {
        let all: Vec<usize> = (0..self.order()).collect();
        StateSpace {
            a: self.a.clone(),
            b: linalg::select(&self.b, &all, inputs),
            c: linalg::select(&self.c, outputs, &all),
            d: linalg::select(&self.d, outputs, inputs),
        }
    }
}

/// Column concatenation `[G1 G2]` with block-diagonal dynamics.
pub fn hcat(g1: &StateSpace, g2: &StateSpace) -> Result<StateSpace> {
    if g1.n_outputs() != g2.n_outputs() {
        return Err(StateSpaceError::DimensionMismatch(format!(
            "hcat needs equal output counts, got {} and {}",
            g1.n_outputs(),
            g2.n_outputs()
        )));
    }
    StateSpace::new(
        block_diag(&[g1.a.clone(), g2.a.clone()]),
        block_diag(&[g1.b.clone(), g2.b.clone()]),
        hstack(&[&g1.c, &g2.c]),
        hstack(&[&g1.d, &g2.d]),
    )
}

/// Column concatenation of several systems.
pub fn hcat_all(parts: &[StateSpace]) -> Result<StateSpace> {
    let mut iter = parts.iter();
    let first = iter
        .next()
        .ok_or_else(|| StateSpaceError::DimensionMismatch("hcat of nothing".into()))?
        .clone();
    iter.try_fold(first, |acc, g| hcat(&acc, g))
}

/// Row stacking `[G1; G2]` of two systems sharing an input.
pub fn vcat(g1: &StateSpace, g2: &StateSpace) -> Result<StateSpace> {
    if g1.n_inputs() != g2.n_inputs() {
        return Err(StateSpaceError::DimensionMismatch(format!(
            "vcat needs equal input counts, got {} and {}",
            g1.n_inputs(),
            g2.n_inputs()
        )));
    }
    StateSpace::new(
        block_diag(&[g1.a.clone(), g2.a.clone()]),
        vstack(&[&g1.b, &g2.b]),
        block_diag(&[g1.c.clone(), g2.c.clone()]),
        vstack(&[&g1.d, &g2.d]),
    )
}

/// Linear fractional transformation `M11 + M12 K (I - M22 K)⁻¹ M21`.
///
/// `m` takes inputs `[w; u]` (the first `w_inputs` columns are `w`) and
/// produces outputs `[z; y]` (the first `z_outputs` rows are `z`). The
/// `y <- u` feedthrough must be zero. Closed-loop states are `[M; K]`.
pub fn lft(m: &StateSpace, w_inputs: usize, z_outputs: usize, k: &StateSpace) -> Result<StateSpace> {
    let nu = m.n_inputs().checked_sub(w_inputs).ok_or_else(|| {
        StateSpaceError::DimensionMismatch("more w inputs than inputs".into())
    })?;
    let ny = m.n_outputs().checked_sub(z_outputs).ok_or_else(|| {
        StateSpaceError::DimensionMismatch("more z outputs than outputs".into())
    })?;
    if k.n_inputs() != ny || k.n_outputs() != nu {
        return Err(StateSpaceError::DimensionMismatch(format!(
            "controller is {}x{}, plant loop channel needs {}x{}",
            k.n_outputs(),
            k.n_inputs(),
            nu,
            ny
        )));
    }
    let n = m.order();
    let b1 = m.b.columns(0, w_inputs);
    let b2 = m.b.columns(w_inputs, nu);
    let c1 = m.c.rows(0, z_outputs);
    let c2 = m.c.rows(z_outputs, ny);
    let d11 = m.d.view((0, 0), (z_outputs, w_inputs));
    let d12 = m.d.view((0, w_inputs), (z_outputs, nu));
    let d21 = m.d.view((z_outputs, 0), (ny, w_inputs));
    let d22 = m.d.view((z_outputs, w_inputs), (ny, nu));
    if d22.iter().any(|&x| x != 0.0) {
        return Err(StateSpaceError::PartitionInvalid(
            "the u -> y feedthrough of the plant must be zero".into(),
        ));
    }
    let (ak, bk, ck, dk) = (&k.a, &k.b, &k.c, &k.d);
    let nk = k.order();

    let mut a = DMatrix::zeros(n + nk, n + nk);
    a.view_mut((0, 0), (n, n)).copy_from(&(&m.a + b2 * dk * c2));
    a.view_mut((0, n), (n, nk)).copy_from(&(b2 * ck));
    a.view_mut((n, 0), (nk, n)).copy_from(&(bk * c2));
    a.view_mut((n, n), (nk, nk)).copy_from(ak);

    let b = vstack(&[&(b1 + b2 * dk * d21), &(bk * d21)]);
    let c = hstack(&[&(c1 + d12 * dk * c2), &(d12 * ck)]);
    let d = d11 + d12 * dk * d21;
    StateSpace::new(a, b, c, d)
}

pub fn spectral_abscissa(a: &DMatrix<f64>) -> Result<f64> {
    let eig = linalg::eigenvalues(a).ok_or(StateSpaceError::EigendecompositionFailure)?;
    Ok(eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
}

/// `true` iff every eigenvalue has real part `< -margin`. The empty matrix is stable.
pub fn is_stable(a: &DMatrix<f64>, margin: f64) -> Result<bool> {
    if a.nrows() != a.ncols() {
        return Err(StateSpaceError::DimensionMismatch("is_stable needs a square matrix".into()));
    }
    Ok(spectral_abscissa(a)? < -margin)
}

/// Solves `A P + P Aᵀ + W = 0` for a Hurwitz `A` by a Kronecker-vectorized dense solve.
pub fn lyapunov(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || w.shape() != (n, n) {
        return Err(StateSpaceError::DimensionMismatch(format!(
            "lyapunov: A {:?}, W {:?}",
            a.shape(),
            w.shape()
        )));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let abscissa = spectral_abscissa(a)?;
    if abscissa >= 0.0 {
        return Err(StateSpaceError::UnstableA(abscissa));
    }
    let eye = DMatrix::<f64>::identity(n, n);
    // column-major vec: vec(AP) = (I ⊗ A) vec P, vec(PAᵀ) = (A ⊗ I) vec P
    let op = linalg::kron(&eye, a) + linalg::kron(a, &eye);
    let rhs = DMatrix::from_column_slice(n * n, 1, (-w).as_slice());
    let sol = op
        .lu()
        .solve(&rhs)
        .ok_or(StateSpaceError::UnstableA(abscissa))?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    let p = (&p + p.transpose()) * 0.5;
    let residual = (a * &p + &p * a.transpose() + w).norm();
    if residual > 1e-8 * w.norm().max(f64::MIN_POSITIVE) {
        log::warn!("lyapunov residual {residual:.3e} for n = {n}");
    }
    Ok(p)
}

/// `‖A P + P Aᵀ + W‖_F`
pub fn lyapunov_residual(a: &DMatrix<f64>, p: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    (a * p + p * a.transpose() + w).norm()
}

/// H2 norm `sqrt(trace(C P Cᵀ))` with `P` the controllability gramian.
///
/// Unstable or non-strictly-proper systems have infinite norm; this is a
/// value, not an error.
pub fn h2_norm(sys: &StateSpace) -> f64 {
    if !sys.is_strictly_proper() {
        return f64::INFINITY;
    }
    if sys.order() == 0 {
        return 0.0;
    }
    match is_stable(&sys.a, 0.0) {
        Ok(true) => {}
        _ => return f64::INFINITY,
    }
    match lyapunov(&sys.a, &(&sys.b * sys.b.transpose())) {
        Ok(p) => (&sys.c * p * sys.c.transpose()).trace().max(0.0).sqrt(),
        Err(_) => f64::INFINITY,
    }
}

pub const POLE_CLEARANCE: f64 = 5e-2;

/// Deterministic complex sample points for transfer-matrix comparisons.
///
/// `count` points alternate between `0.1j·k` and `0.3·k`, `k = 1, 2, ...`;
/// the default 20 points are `{0.1j·k} ∪ {0.3·k}` for `k = 1..10`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub count: usize,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        FrequencyGrid { count: 20 }
    }
}

impl FrequencyGrid {
    pub fn new(count: usize) -> Self {
        FrequencyGrid { count }
    }

    pub fn points(&self) -> Vec<Complex64> {
        (0..self.count)
            .map(|i| {
                let k = (i / 2 + 1) as f64;
                if i % 2 == 0 {
                    Complex64::new(0.0, 0.1 * k)
                } else {
                    Complex64::new(0.3 * k, 0.0)
                }
            })
            .collect()
    }

    /// Grid points shifted until every listed pole is at least
    /// `POLE_CLEARANCE · (1 + |p|)` away.
    ///
    /// Recovering a controller from its Youla parameter cancels a near
    /// singularity at every open-loop pole, so samples close to a pole lose
    /// digits even though every realization involved is exact.
    pub fn avoiding(&self, poles: &[Complex64]) -> Vec<Complex64> {
        let nudge = Complex64::new(0.0137, 0.0071);
        self.points()
            .into_iter()
            .map(|mut s| {
                for _ in 0..1000 {
                    if poles.iter().all(|p| (s - p).norm() > POLE_CLEARANCE * (1.0 + p.norm())) {
                        break;
                    }
                    s += nudge;
                }
                s
            })
            .collect()
    }
}

/// Largest `max |G1(s) - G2(s)|` entry over the sample points.
pub fn max_sample_gap(g1: &StateSpace, g2: &StateSpace, points: &[Complex64]) -> Result<f64> {
    if g1.n_inputs() != g2.n_inputs() || g1.n_outputs() != g2.n_outputs() {
        return Err(StateSpaceError::DimensionMismatch("transfer matrices differ in shape".into()));
    }
    let mut worst = 0.0_f64;
    for &s in points {
        worst = worst.max(linalg::max_abs_c(&(g1.evaluate(s)? - g2.evaluate(s)?)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_order() -> StateSpace {
        StateSpace::new(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evaluate_first_order() {
        let g = first_order();
        assert!((g.evaluate(c(0.0, 0.0)).unwrap()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((g.evaluate(c(0.0, 1.0)).unwrap()[(0, 0)] - c(0.5, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn evaluate_static_gain_returns_d() {
        let d = DMatrix::from_row_slice(2, 1, &[3.0, -1.0]);
        let g = StateSpace::static_gain(d.clone());
        assert_eq!(g.evaluate(c(7.0, 2.0)).unwrap(), to_complex(&d));
    }

    #[test]
    fn evaluate_at_pole_fails() {
        let err = first_order().evaluate(c(-1.0, 0.0)).unwrap_err();
        assert!(matches!(err, StateSpaceError::ResolventSingular(_)));
    }

    #[test]
    fn new_rejects_inconsistent_dimensions() {
        let r = StateSpace::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(1, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
        );
        assert!(matches!(r, Err(StateSpaceError::DimensionMismatch(_))));
    }

    #[test]
    fn lft_with_zero_controller_is_m11() {
        // M with w, u inputs and z, y outputs
        let m = StateSpace::new(
            DMatrix::from_element(1, 1, -2.0),
            DMatrix::from_row_slice(1, 2, &[1.0, 3.0]),
            DMatrix::from_row_slice(2, 1, &[4.0, 1.0]),
            DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.0]),
        )
        .unwrap();
        let k = StateSpace::static_gain(DMatrix::zeros(1, 1));
        let f = lft(&m, 1, 1, &k).unwrap();
        let m11 = m.subsystem(&[0], &[0]);
        let pts = FrequencyGrid::default().points();
        assert!(max_sample_gap(&f, &m11, &pts).unwrap() < 1e-14);
    }

    #[test]
    fn lft_identity_sandwich_gives_k() {
        let mut d = DMatrix::zeros(4, 4);
        d.view_mut((0, 2), (2, 2)).fill_with_identity();
        d.view_mut((2, 0), (2, 2)).fill_with_identity();
        let m = StateSpace::static_gain(d);
        let kd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
        let f = lft(&m, 2, 2, &StateSpace::static_gain(kd.clone())).unwrap();
        assert_eq!(f.d(), &kd);
        assert_eq!(f.order(), 0);
    }

    #[test]
    fn lft_rejects_nonzero_d22() {
        let m = StateSpace::static_gain(DMatrix::from_element(2, 2, 1.0));
        let k = StateSpace::static_gain(DMatrix::zeros(1, 1));
        assert!(matches!(lft(&m, 1, 1, &k), Err(StateSpaceError::PartitionInvalid(_))));
    }

    #[test]
    fn hcat_of_static_gains() {
        let d1 = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let d2 = DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 5.0, 6.0]);
        let g = hcat(&StateSpace::static_gain(d1), &StateSpace::static_gain(d2)).unwrap();
        assert_eq!(g.d(), &DMatrix::from_row_slice(2, 3, &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]));
        assert!(hcat(&first_order(), &StateSpace::static_gain(DMatrix::zeros(2, 1))).is_err());
    }

    #[test]
    fn hcat_evaluates_columnwise() {
        let g = first_order();
        let gg = hcat(&g, &g).unwrap();
        let s = c(0.2, 0.7);
        let v = g.evaluate(s).unwrap()[(0, 0)];
        let w = gg.evaluate(s).unwrap();
        assert_eq!(w.shape(), (1, 2));
        assert!((w[(0, 0)] - v).norm() < 1e-15 && (w[(0, 1)] - v).norm() < 1e-15);
    }

    #[test]
    fn stability_checks() {
        assert!(is_stable(&(-DMatrix::<f64>::identity(3, 3)), 0.0).unwrap());
        assert!(!is_stable(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]), 0.0).unwrap());
        assert!(!is_stable(&(-DMatrix::<f64>::identity(2, 2)), 1.5).unwrap());
        assert!(is_stable(&DMatrix::zeros(0, 0), 0.0).unwrap());
    }

    #[test]
    fn lyapunov_scalar_and_diagonal() {
        let p = lyapunov(&DMatrix::from_element(1, 1, -1.0), &DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
        let p = lyapunov(&(-DMatrix::<f64>::identity(2, 2)), &DMatrix::identity(2, 2)).unwrap();
        assert!((p - DMatrix::<f64>::identity(2, 2) * 0.5).amax() < 1e-15);
        assert!(matches!(
            lyapunov(&DMatrix::from_element(1, 1, 1.0), &DMatrix::from_element(1, 1, 1.0)),
            Err(StateSpaceError::UnstableA(_))
        ));
    }

    #[test]
    fn h2_of_first_order_lag() {
        assert!((h2_norm(&first_order()) - 0.5_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn h2_infinite_for_unstable_or_proper() {
        let unstable = StateSpace::new(
            DMatrix::from_element(1, 1, 0.5),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(h2_norm(&unstable).is_infinite());
        let proper = StateSpace::static_gain(DMatrix::from_element(1, 1, 1.0));
        assert!(h2_norm(&proper).is_infinite());
        assert_eq!(h2_norm(&StateSpace::static_gain(DMatrix::zeros(1, 1))), 0.0);
    }

    #[test]
    fn grid_default_points() {
        let pts = FrequencyGrid::default().points();
        assert_eq!(pts.len(), 20);
        assert_eq!(pts[0], c(0.0, 0.1));
        assert_eq!(pts[1], c(0.3, 0.0));
        assert_eq!(pts[19], c(3.0, 0.0));
        let shifted = FrequencyGrid::default().avoiding(&[c(0.3, 0.0)]);
        assert!((shifted[1] - c(0.3, 0.0)).norm() > 1e-3);
        assert_eq!(shifted[0], pts[0]);
    }
}
