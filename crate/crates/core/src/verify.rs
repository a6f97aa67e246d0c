//! Numerical certification of a synthesized controller.
//!
//! Every check works on stored realizations and the plant; nothing is
//! re-synthesized. A check never raises: problems surface as failing
//! verdicts with an infinite measurement.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::linalg::{self, max_abs_c, CMatrix};
use crate::poset::IncidencePattern;
use crate::riccati;
use crate::statespace::{self, FrequencyGrid, StateSpace};
use crate::synthesis::{self, PlantData, SynthesisError, SynthesisResult};

/// Pass thresholds, one per check family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub incidence: f64,
    pub filter_inverse: f64,
    pub path_formula: f64,
    pub factorization: f64,
    pub reparametrization: f64,
    pub spectrum: f64,
    pub assembly: f64,
    /// Relative to `1 + ‖X‖`.
    pub riccati: f64,
    pub norm_order: f64,
    /// Relative to `1 + ‖P11 + P12 Q*‖²`.
    pub decomposition: f64,
    pub stability_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            incidence: 1e-8,
            filter_inverse: 1e-8,
            path_formula: 1e-7,
            factorization: 1e-7,
            reparametrization: 1e-7,
            spectrum: 1e-6,
            assembly: 1e-9,
            riccati: 1e-7,
            norm_order: 1e-9,
            decomposition: 1e-8,
            stability_margin: 0.0,
        }
    }
}

/// Outcome of one check. `passed` holds exactly when `measured <= tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub check_name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub reference: String,
}

impl Verdict {
    pub fn new(name: &str, measured: f64, tolerance: f64, reference: &str) -> Self {
        Verdict {
            check_name: name.to_string(),
            passed: measured <= tolerance,
            measured,
            tolerance,
            reference: reference.to_string(),
        }
    }
}

/// H2 norms of the open loop, the centralized optimum and the poset-causal optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub h_open: f64,
    pub h_centralized: f64,
    pub h_decentralized: f64,
}

impl NormReport {
    pub fn gap(&self) -> f64 {
        self.h_decentralized - self.h_centralized
    }
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub verdicts: Vec<Verdict>,
    pub norms: NormReport,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.passed)
    }
}

/// Stored Riccati data for one poset element.
#[derive(Debug, Clone, PartialEq)]
pub struct GainRecord {
    pub x: DMatrix<f64>,
    pub gain: DMatrix<f64>,
}

/// The realizations a verification run consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub controller: StateSpace,
    pub phi: StateSpace,
    pub gamma: StateSpace,
    pub k_phi: StateSpace,
    pub q_star: StateSpace,
    /// Internal element order.
    pub gains: Vec<GainRecord>,
}

impl From<&SynthesisResult> for Artifacts {
    fn from(r: &SynthesisResult) -> Self {
        Artifacts {
            controller: r.k_star.clone(),
            phi: r.phi.clone(),
            gamma: r.gamma.clone(),
            k_phi: r.k_phi.clone(),
            q_star: r.q_star.clone(),
            gains: r
                .gains
                .iter()
                .map(|g| GainRecord { x: g.x.clone(), gain: g.gain.clone() })
                .collect(),
        }
    }
}

impl Artifacts {
    /// Confirms every realization has the input/output shape the plant requires.
    pub fn check_dimensions(&self, plant: &PlantData) -> Result<(), String> {
        let part = plant.partition();
        let (n, m, r) = (part.n_states(), part.n_inputs(), part.n_disturbances());
        let want = [
            ("controller", &self.controller, m, n),
            ("phi", &self.phi, n, n),
            ("gamma", &self.gamma, n, n),
            ("k_phi", &self.k_phi, m, n),
            ("q_star", &self.q_star, m, r),
        ];
        for (name, sys, rows, cols) in want {
            if sys.n_outputs() != rows || sys.n_inputs() != cols {
                return Err(format!(
                    "{name} is {}x{}, plant requires {rows}x{cols}",
                    sys.n_outputs(),
                    sys.n_inputs()
                ));
            }
        }
        if self.gains.len() != plant.poset().len() {
            return Err(format!(
                "{} gain records for {} poset elements",
                self.gains.len(),
                plant.poset().len()
            ));
        }
        for (j, g) in self.gains.iter().enumerate() {
            let down = plant.poset().downstream(j);
            let (nd, md) = (part.states_in(&down), part.input_indices(&down).len());
            if g.x.shape() != (nd, nd) || g.gain.shape() != (md, nd) {
                return Err(format!("gain record {} has the wrong shape", plant.poset().label(j)));
            }
        }
        Ok(())
    }
}

/// Computes the three reference norms for a plant and a controller.
pub fn norm_report(plant: &PlantData, k: &StateSpace) -> Result<NormReport, SynthesisError> {
    let h_open = statespace::h2_norm(&plant.open_loop());
    let central = synthesis::centralized(plant)?;
    let h_centralized = statespace::h2_norm(&synthesis::centralized_closed_loop(plant, &central));
    let h_decentralized = statespace::h2_norm(&plant.closed_loop(k)?);
    Ok(NormReport { h_open, h_centralized, h_decentralized })
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("UnstableSystem: spectral abscissa {0}")]
    UnstableSystem(f64),
    #[error("system has a feedthrough term")]
    NotStrictlyProper,
}

/// Time-domain H2 norm: `sqrt(∫₀ᵀ ‖C e^{At} B‖_F² dt)` by composite Simpson quadrature.
///
/// Only meaningful for stable, strictly proper systems and a horizon long
/// compared with the slowest mode.
pub fn empirical_h2(sys: &StateSpace, horizon: f64, step: f64) -> Result<f64, OracleError> {
    if !sys.is_strictly_proper() {
        return Err(OracleError::NotStrictlyProper);
    }
    if sys.order() == 0 {
        return Ok(0.0);
    }
    let abscissa = statespace::spectral_abscissa(sys.a()).map_err(|_| OracleError::UnstableSystem(f64::NAN))?;
    if abscissa >= 0.0 {
        return Err(OracleError::UnstableSystem(abscissa));
    }
    let mut intervals = (horizon / step).ceil() as usize;
    intervals += intervals % 2;
    let h = horizon / intervals as f64;
    let propagator = (sys.a() * h).exp();
    let mut state = sys.b().clone();
    let mut total = 0.0;
    for k in 0..=intervals {
        let weight = if k == 0 || k == intervals {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        total += weight * (sys.c() * &state).norm_squared();
        state = &propagator * state;
    }
    Ok((total * h / 3.0).sqrt())
}

fn failed(name: &str, tolerance: f64, reference: &str, why: impl std::fmt::Display) -> Verdict {
    log::warn!("{name}: {why}");
    Verdict::new(name, f64::INFINITY, tolerance, reference)
}

fn finite_or_inf(x: f64) -> f64 {
    if x.is_nan() {
        f64::INFINITY
    } else {
        x
    }
}

struct Context<'a> {
    plant: &'a PlantData,
    art: &'a Artifacts,
    tol: &'a Tolerances,
    points: Vec<Complex64>,
}

impl Context<'_> {
    fn sample(&self, sys: &StateSpace) -> Result<Vec<CMatrix>, String> {
        self.points
            .iter()
            .map(|&s| sys.evaluate(s).map_err(|e| e.to_string()))
            .collect()
    }

    fn assembly_identities(&self) -> Verdict {
        const NAME: &str = "assembly_identities";
        const REF: &str = "selector identities of the block-diagonal assembly";
        let q = &self.art.q_star;
        let mut worst = 0.0_f64;
        for (_, r) in synthesis::assembly_residuals(self.plant, q.a(), q.c()) {
            worst = worst.max(r);
        }
        let (pi1, _, _, _) = synthesis::structure_selectors(self.plant.poset(), self.plant.partition());
        if q.b().shape() == (pi1.nrows(), self.plant.f().ncols()) {
            worst = worst.max((q.b() - &pi1 * self.plant.f()).amax());
        } else {
            worst = f64::INFINITY;
        }
        Verdict::new(NAME, finite_or_inf(worst), self.tol.assembly, REF)
    }

    fn riccati_residuals(&self) -> Verdict {
        const NAME: &str = "riccati_residuals";
        const REF: &str = "per-element Riccati equations on the downstream subsystems";
        let mut worst = 0.0_f64;
        for (j, g) in self.art.gains.iter().enumerate() {
            let sub = match synthesis::extract(self.plant, j) {
                Ok(s) => s,
                Err(e) => return failed(NAME, self.tol.riccati, REF, e),
            };
            let res = riccati::care_residual(&sub.a, &sub.b, &sub.c, &sub.d, &g.x);
            let r = sub.d.transpose() * &sub.d;
            let gain_gap = match r.try_inverse() {
                Some(ri) => (ri * sub.b.transpose() * &g.x - &g.gain).amax(),
                None => f64::INFINITY,
            };
            let scale = 1.0 + g.x.amax();
            worst = worst.max(res / scale).max(gain_gap / scale);
        }
        Verdict::new(NAME, finite_or_inf(worst), self.tol.riccati, REF)
    }

    fn stability(&self, name: &str, a: &DMatrix<f64>, reference: &str) -> Verdict {
        // strict inequality folded into the tolerance
        let tol = -self.tol.stability_margin - 1e-12;
        match statespace::spectral_abscissa(a) {
            Ok(x) => Verdict::new(name, finite_or_inf(x), tol, reference),
            Err(e) => failed(name, tol, reference, e),
        }
    }

    fn filter_inverse(&self) -> Verdict {
        const NAME: &str = "filter_inverse";
        const REF: &str = "Φ and Γ are mutual inverses";
        let run = || -> Result<f64, String> {
            let phi = self.sample(&self.art.phi)?;
            let gamma = self.sample(&self.art.gamma)?;
            let mut worst = 0.0_f64;
            for (p, g) in phi.iter().zip(&gamma) {
                let eye = CMatrix::identity(p.nrows(), p.nrows());
                worst = worst.max((p * g - &eye).norm()).max((g * p - &eye).norm());
            }
            Ok(worst)
        };
        match run() {
            Ok(w) => Verdict::new(NAME, finite_or_inf(w), self.tol.filter_inverse, REF),
            Err(e) => failed(NAME, self.tol.filter_inverse, REF, e),
        }
    }

    fn filter_diagonal(&self) -> Verdict {
        const NAME: &str = "filter_diagonal_identity";
        const REF: &str = "diagonal blocks of Φ and Γ are identities";
        let pattern = self.plant.state_pattern();
        let run = || -> Result<f64, String> {
            let mut worst = 0.0_f64;
            for sys in [&self.art.phi, &self.art.gamma] {
                for v in self.sample(sys)? {
                    for i in 0..self.plant.poset().len() {
                        let blk = pattern.block(&v, i, i);
                        let eye = CMatrix::identity(blk.nrows(), blk.ncols());
                        worst = worst.max(max_abs_c(&(blk - eye)));
                    }
                }
            }
            Ok(worst)
        };
        match run() {
            Ok(w) => Verdict::new(NAME, finite_or_inf(w), self.tol.filter_inverse, REF),
            Err(e) => failed(NAME, self.tol.filter_inverse, REF, e),
        }
    }

    fn path_formula(&self) -> Verdict {
        const NAME: &str = "gamma_path_formula";
        const REF: &str = "Γ equals the chain path-sum inverse of Φ";
        let pattern = self.plant.state_pattern();
        let run = || -> Result<f64, String> {
            let phi = self.sample(&self.art.phi)?;
            let gamma = self.sample(&self.art.gamma)?;
            let mut worst = 0.0_f64;
            for (p, g) in phi.iter().zip(&gamma) {
                let inv = pattern.inverse(p).map_err(|e| e.to_string())?;
                worst = worst.max(max_abs_c(&(inv - g)));
            }
            Ok(worst)
        };
        match run() {
            Ok(w) => Verdict::new(NAME, finite_or_inf(w), self.tol.path_formula, REF),
            Err(e) => failed(NAME, self.tol.path_formula, REF, e),
        }
    }

    fn factorization(&self) -> Verdict {
        const NAME: &str = "controller_factorization";
        const REF: &str = "K* = K_Φ Γ";
        let run = || -> Result<f64, String> {
            let k = self.sample(&self.art.controller)?;
            let kp = self.sample(&self.art.k_phi)?;
            let g = self.sample(&self.art.gamma)?;
            Ok(k.iter()
                .zip(kp.iter().zip(&g))
                .map(|(k, (kp, g))| max_abs_c(&(k - kp * g)))
                .fold(0.0, f64::max))
        };
        match run() {
            Ok(w) => Verdict::new(NAME, finite_or_inf(w), self.tol.factorization, REF),
            Err(e) => failed(NAME, self.tol.factorization, REF, e),
        }
    }

    fn incidence(&self) -> Verdict {
        const NAME: &str = "incidence_membership";
        const REF: &str = "K*, Φ, Γ, K_Φ and Q* lie in the incidence algebra";
        let cp = self.plant.controller_pattern();
        let sp = self.plant.state_pattern();
        let qp = self.plant.q_pattern();
        let checks: [(&StateSpace, &IncidencePattern); 5] = [
            (&self.art.controller, &cp),
            (&self.art.phi, &sp),
            (&self.art.gamma, &sp),
            (&self.art.k_phi, &cp),
            (&self.art.q_star, &qp),
        ];
        let run = || -> Result<f64, String> {
            let mut worst = 0.0_f64;
            for (sys, pattern) in checks {
                worst = worst.max(pattern.max_violation(sys.d()).map_err(|e| e.to_string())?);
                for v in self.sample(sys)? {
                    worst = worst.max(pattern.max_violation(&v).map_err(|e| e.to_string())?);
                }
            }
            Ok(worst)
        };
        match run() {
            Ok(w) => Verdict::new(NAME, finite_or_inf(w), self.tol.incidence, REF),
            Err(e) => failed(NAME, self.tol.incidence, REF, e),
        }
    }

    fn closed_loop_checks(&self) -> Vec<Verdict> {
        const REF_STAB: &str = "closed loop is internally stable";
        const REF_SPEC: &str = "closed-loop spectrum equals the assembled subproblem spectrum";
        let stab_tol = -self.tol.stability_margin - 1e-12;
        let cl = match self.plant.closed_loop(&self.art.controller) {
            Ok(cl) => cl,
            Err(e) => {
                return vec![
                    failed("closed_loop_stability", stab_tol, REF_STAB, &e),
                    failed("closed_loop_spectrum", self.tol.spectrum, REF_SPEC, e),
                ]
            }
        };
        let stab = self.stability("closed_loop_stability", cl.a(), REF_STAB);
        let spec = match (linalg::eigenvalues(cl.a()), linalg::eigenvalues(self.art.q_star.a())) {
            (Some(x), Some(y)) => Verdict::new(
                "closed_loop_spectrum",
                finite_or_inf(linalg::spectrum_distance(&x, &y)),
                self.tol.spectrum,
                REF_SPEC,
            ),
            _ => failed("closed_loop_spectrum", self.tol.spectrum, REF_SPEC, "eigenvalues did not converge"),
        };
        vec![stab, spec]
    }

    fn reparametrization(&self) -> Verdict {
        const NAME: &str = "reparametrization";
        const REF: &str = "Q* = K*(I − P22 K*)⁻¹ P21";
        let part = self.plant.partition();
        let model = self.plant.reparametrization_model();
        let run = || -> Result<f64, String> {
            let q = statespace::lft(&model, part.n_disturbances(), part.n_inputs(), &self.art.controller)
                .map_err(|e| e.to_string())?;
            statespace::max_sample_gap(&q, &self.art.q_star, &self.points).map_err(|e| e.to_string())
        };
        match run() {
            Ok(w) => Verdict::new(NAME, finite_or_inf(w), self.tol.reparametrization, REF),
            Err(e) => failed(NAME, self.tol.reparametrization, REF, e),
        }
    }

    fn recovery(&self) -> Verdict {
        const NAME: &str = "controller_recovery";
        const REF: &str = "K* = Q* P21†(I + P22 Q* P21†)⁻¹";
        let run = || -> Result<f64, String> {
            let samples = synthesis::recover_k_from_q(self.plant, &self.art.q_star, &self.points)
                .map_err(|e| e.to_string())?;
            let mut worst = 0.0_f64;
            for (s, k) in samples {
                let direct = self.art.controller.evaluate(s).map_err(|e| e.to_string())?;
                worst = worst.max(max_abs_c(&(direct - k)));
            }
            Ok(worst)
        };
        match run() {
            Ok(w) => Verdict::new(NAME, finite_or_inf(w), self.tol.reparametrization, REF),
            Err(e) => failed(NAME, self.tol.reparametrization, REF, e),
        }
    }

    /// `‖P11 + P12 Q*‖² = Σ_j tr(F_jjᵀ X_j F_jj)`, and the LFT closed loop
    /// carries the same norm. The norm is taken on the stable realization
    /// in assembled coordinates, which is first matched against the direct
    /// series realization by sampling.
    fn decomposition(&self, h_dec: f64) -> Vec<Verdict> {
        const REF_REAL: &str = "assembled-coordinate realization of P11 + P12 Q*";
        const REF_COL: &str = "squared norm splits into per-element optimal costs";
        const REF_LOOP: &str = "closed loop equals P11 + P12 Q*";
        let tol = self.tol.decomposition;
        let stable = match synthesis::affine_in_q_star(self.plant, &self.art.q_star) {
            Ok(a) => a,
            Err(e) => {
                return vec![
                    failed("affine_realization", self.tol.reparametrization, REF_REAL, &e),
                    failed("column_decomposition", tol, REF_COL, &e),
                    failed("closed_loop_norm", tol, REF_LOOP, e),
                ]
            }
        };
        let gap = self
            .plant
            .affine_in_q(&self.art.q_star)
            .map_err(|e| e.to_string())
            .and_then(|direct| statespace::max_sample_gap(&stable, &direct, &self.points).map_err(|e| e.to_string()));
        let realization = match gap {
            Ok(g) => Verdict::new("affine_realization", finite_or_inf(g), self.tol.reparametrization, REF_REAL),
            Err(e) => failed("affine_realization", self.tol.reparametrization, REF_REAL, e),
        };
        let total = statespace::h2_norm(&stable);
        let mut parts = 0.0;
        for (j, g) in self.art.gains.iter().enumerate() {
            match synthesis::extract(self.plant, j) {
                Ok(sub) => parts += (sub.f.transpose() * &g.x * &sub.f).trace(),
                Err(e) => return vec![realization, failed("column_decomposition", tol, REF_COL, e)],
            }
        }
        let sq = total * total;
        vec![
            realization,
            Verdict::new("column_decomposition", finite_or_inf((sq - parts).abs() / (1.0 + sq)), tol, REF_COL),
            Verdict::new("closed_loop_norm", finite_or_inf((h_dec - total).abs() / (1.0 + total)), tol, REF_LOOP),
        ]
    }

    fn degree(&self) -> Verdict {
        let part = self.plant.partition();
        let bound = synthesis::degree_bound(self.plant.poset(), part) as f64;
        let coarse = synthesis::coarse_degree_bound(self.plant.poset(), part) as f64;
        let order = self.art.controller.order() as f64;
        Verdict::new(
            "controller_degree",
            (order - bound).abs().max(order - coarse),
            0.0,
            "controller degree is Σ n(↓↓j), at most σ·max n_i",
        )
    }
}

/// Runs every check in a fixed order.
pub fn run_all(plant: &PlantData, art: &Artifacts, tol: &Tolerances, grid: &FrequencyGrid) -> VerificationReport {
    let nan = NormReport {
        h_open: statespace::h2_norm(&plant.open_loop()),
        h_centralized: f64::INFINITY,
        h_decentralized: f64::INFINITY,
    };
    let norms = norm_report(plant, &art.controller).unwrap_or(nan);

    if let Err(why) = art.check_dimensions(plant) {
        return VerificationReport {
            verdicts: vec![failed("dimensions", 0.0, "stored artifacts match the plant", why)],
            norms,
        };
    }

    let mut poles = Vec::new();
    for a in [plant.a(), art.controller.a(), art.phi.a(), art.gamma.a(), art.k_phi.a(), art.q_star.a()] {
        poles.extend(linalg::eigenvalues(a).unwrap_or_default());
    }
    let ctx = Context { plant, art, tol, points: grid.avoiding(&poles) };

    let mut verdicts = vec![
        ctx.assembly_identities(),
        ctx.riccati_residuals(),
        ctx.stability("assembled_stability", art.q_star.a(), "assembled subproblem dynamics are stable"),
        ctx.filter_inverse(),
        ctx.filter_diagonal(),
        ctx.path_formula(),
        ctx.factorization(),
        ctx.incidence(),
    ];
    verdicts.extend(ctx.closed_loop_checks());
    verdicts.push(ctx.reparametrization());
    verdicts.push(ctx.recovery());
    verdicts.extend(ctx.decomposition(norms.h_decentralized));
    verdicts.push(ctx.degree());
    verdicts.push(Verdict::new(
        "norm_ordering",
        finite_or_inf(norms.h_centralized - norms.h_decentralized),
        tol.norm_order,
        "centralized optimum bounds the constrained optimum",
    ));
    for v in &verdicts {
        log::debug!("{} measured {:.3e} tolerance {:.3e} passed {}", v.check_name, v.measured, v.tolerance, v.passed);
    }
    VerificationReport { verdicts, norms }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::{synthesize, validate_plant, RawPlant, SynthesisOptions};
    use crate::{linalg::vstack, BlockPartition, Poset};

    fn two_chain() -> PlantData {
        let raw = RawPlant {
            poset: Poset::chain(2),
            partition: BlockPartition::scalar(2, 4),
            a: DMatrix::from_row_slice(2, 2, &[0.5, 0., 1., -1.]),
            b: DMatrix::from_row_slice(2, 2, &[1., 0., 0.3, 1.]),
            c: vstack(&[&DMatrix::identity(2, 2), &DMatrix::zeros(2, 2)]),
            d: vstack(&[&DMatrix::zeros(2, 2), &DMatrix::identity(2, 2)]),
            f: DMatrix::identity(2, 2),
        };
        validate_plant(raw, 1e-9).unwrap()
    }

    #[test]
    fn verdict_pass_iff_within_tolerance() {
        assert!(Verdict::new("x", 1e-9, 1e-9, "").passed);
        assert!(!Verdict::new("x", 2e-9, 1e-9, "").passed);
        assert!(!Verdict::new("x", f64::INFINITY, 1e-9, "").passed);
        assert!(!Verdict::new("x", f64::NAN, 1e-9, "").passed);
    }

    #[test]
    fn synthesized_two_chain_certifies() {
        let plant = two_chain();
        let res = synthesize(&plant, &SynthesisOptions::default()).unwrap();
        let report = run_all(&plant, &Artifacts::from(&res), &Tolerances::default(), &FrequencyGrid::default());
        for v in &report.verdicts {
            assert!(v.passed, "{v:?}");
        }
        assert_eq!(report.verdicts.len(), 17);
    }

    #[test]
    fn tampered_controller_fails() {
        let plant = two_chain();
        let res = synthesize(&plant, &SynthesisOptions::default()).unwrap();
        let mut art = Artifacts::from(&res);
        let (a, b, c, mut d) = art.controller.clone().into_parts();
        d[(0, 1)] = 0.3;
        art.controller = StateSpace::new(a, b, c, d).unwrap();
        let report = run_all(&plant, &art, &Tolerances::default(), &FrequencyGrid::default());
        let failing: Vec<&str> = report.failures().map(|v| v.check_name.as_str()).collect();
        assert!(failing.contains(&"incidence_membership"));
        assert!(failing.contains(&"controller_factorization"));
    }

    #[test]
    fn wrong_shape_is_one_failing_verdict() {
        let plant = two_chain();
        let res = synthesize(&plant, &SynthesisOptions::default()).unwrap();
        let mut art = Artifacts::from(&res);
        art.gains.pop();
        assert!(art.check_dimensions(&plant).is_err());
        let report = run_all(&plant, &art, &Tolerances::default(), &FrequencyGrid::default());
        assert_eq!(report.verdicts.len(), 1);
        assert!(!report.all_passed());
    }

    #[test]
    fn empirical_norm_of_first_order_lag() {
        // 1/(s+1): H2 norm sqrt(1/2)
        let sys = StateSpace::new(
            DMatrix::from_element(1, 1, -1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let e = empirical_h2(&sys, 40.0, 0.01).unwrap();
        assert!((e - 0.5_f64.sqrt()).abs() < 1e-8, "{e}");
    }
}
