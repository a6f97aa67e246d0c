//! H2-optimal poset-causal state-feedback synthesis.
//!
//! The constrained problem `min ‖P11 + P12 Q‖` over `Q` in the incidence
//! algebra separates column by column: column `j` of `Q` only lives on the
//! rows in `↓j`, so each column is an unconstrained centralized problem on
//! the principal subsystem indexed by `↓j`, disturbed through `F_jj` alone.
//! The per-element Riccati gains `K(↓j,↓j)` are stacked into block-diagonal
//! matrices and mapped back to plant coordinates by three selector matrices,
//! from which the controller and the filter pair are read off directly.
//!
//! State layout of the assembled system: element blocks in linear-extension
//! order; inside block `j` the states of `↓j` in linear-extension order, so
//! `j`'s own states come first.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{self, block_diag, hstack, selector, to_complex, vstack, CMatrix};
use crate::poset::{BlockPartition, IncidencePattern, Poset, PosetError};
use crate::riccati::{self, RiccatiError, RiccatiSolution};
use crate::statespace::{self, FrequencyGrid, StateSpace, StateSpaceError};
use crate::verify::{self, NormReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthesisError {
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("NotPosetCausal({row},{col}): block {matrix}[{row},{col}] is nonzero (max |entry| {magnitude:.3e}) but {col} is not upstream of {row}")]
    NotPosetCausal {
        matrix: &'static str,
        row: String,
        col: String,
        magnitude: f64,
    },
    #[error("CrossTermNonzero: |CᵀD| = {0:.3e}")]
    CrossTermNonzero(f64),
    #[error("InputWeightSingular: DᵀD is not positive definite")]
    InputWeightSingular,
    #[error("FNotBlockDiagonal({row},{col}): off-diagonal disturbance block is nonzero")]
    FNotBlockDiagonal { row: String, col: String },
    #[error("FRankDeficient({0}): diagonal disturbance block lacks full column rank")]
    FRankDeficient(String),
    #[error("SubsystemNotStabilizable({0}): diagonal pair (A_jj, B_jj) fails the Hautus test")]
    SubsystemNotStabilizable(String),
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
    #[error("Riccati subproblem at {element}: {source}")]
    Subproblem {
        element: String,
        #[source]
        source: RiccatiError,
    },
    #[error("Centralized baseline: {0}")]
    Centralized(RiccatiError),
    #[error("AssemblyIdentityViolated({name}): residual {residual:.3e}")]
    AssemblyIdentityViolated { name: String, residual: f64 },
}

type Result<T> = std::result::Result<T, SynthesisError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    /// Absolute tolerance for structural zero tests on plant data.
    pub atol: f64,
    /// Solve the per-element Riccati problems on the rayon pool.
    pub parallel: bool,
    /// Required stability margin of the assembled dynamics.
    pub margin: f64,
    pub grid: FrequencyGrid,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            atol: 1e-9,
            parallel: true,
            margin: 0.0,
            grid: FrequencyGrid::default(),
        }
    }
}

/// Plant data before validation, in the poset's internal element order.
#[derive(Debug, Clone)]
pub struct RawPlant {
    pub poset: Poset,
    pub partition: BlockPartition,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub f: DMatrix<f64>,
}

/// A validated poset-causal plant `ẋ = Ax + Fw + Bu, z = Cx + Du`.
#[derive(Debug, Clone)]
pub struct PlantData {
    poset: Poset,
    partition: BlockPartition,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    f: DMatrix<f64>,
}

fn shape_error(name: &str, got: (usize, usize), want: (usize, usize)) -> SynthesisError {
    SynthesisError::DimensionMismatch(format!(
        "{name} is {}x{}, partition requires {}x{}",
        got.0, got.1, want.0, want.1
    ))
}

/// Checks every standing assumption on the plant and returns the validated data.
pub fn validate_plant(raw: RawPlant, atol: f64) -> Result<PlantData> {
    let RawPlant { poset, partition, a, b, c, d, f } = raw;
    if poset.len() != partition.blocks() {
        return Err(SynthesisError::DimensionMismatch(format!(
            "poset has {} elements, partition has {} blocks",
            poset.len(),
            partition.blocks()
        )));
    }
    let (n, m, l, r) = (
        partition.n_states(),
        partition.n_inputs(),
        partition.output_dim(),
        partition.n_disturbances(),
    );
    for (name, mat, want) in [
        ("A", &a, (n, n)),
        ("B", &b, (n, m)),
        ("C", &c, (l, n)),
        ("D", &d, (l, m)),
        ("F", &f, (n, r)),
    ] {
        if mat.shape() != want {
            return Err(shape_error(name, mat.shape(), want));
        }
    }

    let sd = partition.state_dims().to_vec();
    let id = partition.input_dims().to_vec();
    for (name, mat, cols) in [("A", &a, sd.clone()), ("B", &b, id)] {
        let pattern = IncidencePattern::new(&poset, sd.clone(), cols)?;
        if let Some((i, j, mag)) = pattern.worst_violation(mat)? {
            if mag > atol {
                return Err(SynthesisError::NotPosetCausal {
                    matrix: name,
                    row: poset.label(i).to_string(),
                    col: poset.label(j).to_string(),
                    magnitude: mag,
                });
            }
        }
    }

    let cross = (c.transpose() * &d).amax();
    if cross > atol * (1.0 + c.amax() * d.amax()) {
        return Err(SynthesisError::CrossTermNonzero(cross));
    }
    let weight = d.transpose() * &d;
    let eig = nalgebra::SymmetricEigen::new(weight).eigenvalues;
    if m > 0 && eig.min() <= 1e-12 * eig.max().max(1.0) {
        return Err(SynthesisError::InputWeightSingular);
    }

    for i in 0..poset.len() {
        for j in 0..poset.len() {
            let blk = f.view(
                (partition.state_range(i).start, partition.disturbance_range(j).start),
                (partition.state_dims()[i], partition.disturbance_dims()[j]),
            );
            if i != j && blk.amax() > atol {
                return Err(SynthesisError::FNotBlockDiagonal {
                    row: poset.label(i).to_string(),
                    col: poset.label(j).to_string(),
                });
            }
            if i == j && linalg::rank(&blk.into_owned()) < partition.disturbance_dims()[j] {
                return Err(SynthesisError::FRankDeficient(poset.label(j).to_string()));
            }
        }
    }

    for j in 0..poset.len() {
        let sr: Vec<usize> = partition.state_range(j).collect();
        let ir: Vec<usize> = partition.input_range(j).collect();
        if !riccati::hautus_stabilizable(&linalg::select(&a, &sr, &sr), &linalg::select(&b, &sr, &ir)) {
            return Err(SynthesisError::SubsystemNotStabilizable(poset.label(j).to_string()));
        }
    }

    Ok(PlantData { poset, partition, a, b, c, d, f })
}

/// The centralized problem attached to one poset element.
#[derive(Debug, Clone)]
pub struct Subproblem {
    pub element: usize,
    /// `↓j` in linear-extension order, `j` first.
    pub elements: Vec<usize>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    /// `F_jj`
    pub f_jj: DMatrix<f64>,
    /// `F_jj` lifted to the `↓j` states (`E1 F_jj`).
    pub f: DMatrix<f64>,
}

impl PlantData {
    pub fn poset(&self) -> &Poset {
        &self.poset
    }
    pub fn partition(&self) -> &BlockPartition {
        &self.partition
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
    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn raw(&self) -> RawPlant {
        RawPlant {
            poset: self.poset.clone(),
            partition: self.partition.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            d: self.d.clone(),
            f: self.f.clone(),
        }
    }

    pub fn state_pattern(&self) -> IncidencePattern {
        let sd = self.partition.state_dims().to_vec();
        IncidencePattern::new(&self.poset, sd.clone(), sd).expect("partition matches poset")
    }

    /// Pattern of maps from states to inputs (controllers, `K_Φ`).
    pub fn controller_pattern(&self) -> IncidencePattern {
        IncidencePattern::new(
            &self.poset,
            self.partition.input_dims().to_vec(),
            self.partition.state_dims().to_vec(),
        )
        .expect("partition matches poset")
    }

    /// Pattern of maps from disturbances to inputs (`Q`).
    pub fn q_pattern(&self) -> IncidencePattern {
        IncidencePattern::new(
            &self.poset,
            self.partition.input_dims().to_vec(),
            self.partition.disturbance_dims().to_vec(),
        )
        .expect("partition matches poset")
    }

    /// `A^{↓j}`: block column `j` of `A` restricted to the rows in `↓j`.
    pub fn a_downstream_column(&self, j: usize) -> DMatrix<f64> {
        let rows = self.partition.state_indices(&self.poset.downstream(j));
        let cols: Vec<usize> = self.partition.state_range(j).collect();
        linalg::select(&self.a, &rows, &cols)
    }

    /// Realization `[P11 P12 ; P21 P22]` with inputs `[w; u]` and outputs `[z; x]`.
    pub fn generalized_plant(&self) -> StateSpace {
        let n = self.partition.n_states();
        let (l, m, r) = (self.partition.output_dim(), self.partition.n_inputs(), self.partition.n_disturbances());
        let mut d = DMatrix::zeros(l + n, r + m);
        d.view_mut((0, r), (l, m)).copy_from(&self.d);
        StateSpace::new(
            self.a.clone(),
            hstack(&[&self.f, &self.b]),
            vstack(&[&self.c, &DMatrix::identity(n, n)]),
            d,
        )
        .expect("validated dimensions")
    }

    /// `[0 I ; P21 P22]`, whose LFT with `K` is `K (I − P22 K)⁻¹ P21`.
    pub fn reparametrization_model(&self) -> StateSpace {
        let n = self.partition.n_states();
        let (m, r) = (self.partition.n_inputs(), self.partition.n_disturbances());
        let mut d = DMatrix::zeros(m + n, r + m);
        d.view_mut((0, r), (m, m)).fill_with_identity();
        StateSpace::new(
            self.a.clone(),
            hstack(&[&self.f, &self.b]),
            vstack(&[&DMatrix::zeros(m, n), &DMatrix::identity(n, n)]),
            d,
        )
        .expect("validated dimensions")
    }

    /// Open-loop map `P11 = C (sI − A)⁻¹ F`.
    pub fn open_loop(&self) -> StateSpace {
        StateSpace::new(
            self.a.clone(),
            self.f.clone(),
            self.c.clone(),
            DMatrix::zeros(self.partition.output_dim(), self.partition.n_disturbances()),
        )
        .expect("validated dimensions")
    }

    /// Closed-loop `T_zw` under state feedback `u = K x`.
    pub fn closed_loop(&self, k: &StateSpace) -> Result<StateSpace> {
        Ok(statespace::lft(
            &self.generalized_plant(),
            self.partition.n_disturbances(),
            self.partition.output_dim(),
            k,
        )?)
    }

    /// Realization of the affine map `P11 + P12 Q`.
    pub fn affine_in_q(&self, q: &StateSpace) -> Result<StateSpace> {
        if q.n_outputs() != self.partition.n_inputs() || q.n_inputs() != self.partition.n_disturbances() {
            return Err(SynthesisError::DimensionMismatch(format!(
                "Q is {}x{}, plant needs {}x{}",
                q.n_outputs(),
                q.n_inputs(),
                self.partition.n_inputs(),
                self.partition.n_disturbances()
            )));
        }
        let n = self.partition.n_states();
        let nq = q.order();
        let mut a = DMatrix::zeros(n + nq, n + nq);
        a.view_mut((0, 0), (n, n)).copy_from(&self.a);
        a.view_mut((0, n), (n, nq)).copy_from(&(&self.b * q.c()));
        a.view_mut((n, n), (nq, nq)).copy_from(q.a());
        let b = vstack(&[&(&self.f + &self.b * q.d()), q.b()]);
        let c = hstack(&[&self.c, &(&self.d * q.c())]);
        Ok(StateSpace::new(a, b, c, &self.d * q.d())?)
    }
}

/// Realization of `P11 + P12 Q*` on the state of `Q*` alone,
/// `(A_Q, B_Q, C R_x + D C_Q, 0)`.
///
/// Valid when `Q*` is an assembled optimum: the selector identities make
/// the plant states a linear function of the assembled ones, so the
/// plant's own (possibly unstable) modes drop out.
pub fn affine_in_q_star(plant: &PlantData, q: &StateSpace) -> Result<StateSpace> {
    let (_, _, rx, _) = structure_selectors(&plant.poset, &plant.partition);
    if q.order() != rx.ncols() || q.n_outputs() != plant.partition.n_inputs() {
        return Err(SynthesisError::DimensionMismatch(format!(
            "Q* has order {}, assembled state has {} entries",
            q.order(),
            rx.ncols()
        )));
    }
    Ok(StateSpace::new(
        q.a().clone(),
        q.b().clone(),
        &plant.c * rx + &plant.d * q.c(),
        &plant.d * q.d(),
    )?)
}

/// Principal subsystem indexed by `↓j` with disturbance through `F_jj` only.
pub fn extract(plant: &PlantData, j: usize) -> Result<Subproblem> {
    if j >= plant.poset.len() {
        return Err(PosetError::UnknownLabel(format!("#{j}")).into());
    }
    let elements = plant.poset.downstream(j);
    let xs = plant.partition.state_indices(&elements);
    let us = plant.partition.input_indices(&elements);
    let all_out: Vec<usize> = (0..plant.partition.output_dim()).collect();
    let own_states: Vec<usize> = plant.partition.state_range(j).collect();
    let own_dist: Vec<usize> = plant.partition.disturbance_range(j).collect();
    let f_jj = linalg::select(&plant.f, &own_states, &own_dist);
    let mut f = DMatrix::zeros(xs.len(), f_jj.ncols());
    f.view_mut((0, 0), f_jj.shape()).copy_from(&f_jj);
    Ok(Subproblem {
        element: j,
        elements,
        a: linalg::select(&plant.a, &xs, &xs),
        b: linalg::select(&plant.b, &xs, &us),
        c: linalg::select(&plant.c, &all_out, &xs),
        d: linalg::select(&plant.d, &all_out, &us),
        f_jj,
        f,
    })
}

/// Zero-pads a `↓j × ↓j` block gain (inputs × states) to a full `m × n` matrix.
pub fn embed_hat(
    poset: &Poset,
    partition: &BlockPartition,
    k_sub: &DMatrix<f64>,
    j: usize,
) -> Result<DMatrix<f64>> {
    let down = poset.downstream(j);
    let us = partition.input_indices(&down);
    let xs = partition.state_indices(&down);
    if k_sub.shape() != (us.len(), xs.len()) {
        return Err(shape_error("K(↓j,↓j)", k_sub.shape(), (us.len(), xs.len())));
    }
    let mut out = DMatrix::zeros(partition.n_inputs(), partition.n_states());
    for (r, &u) in us.iter().enumerate() {
        for (c, &x) in xs.iter().enumerate() {
            out[(u, x)] = k_sub[(r, c)];
        }
    }
    Ok(out)
}

/// Solves `Ric(↓j)` for every element. The subproblems are independent.
pub fn solve_subproblems(plant: &PlantData, parallel: bool) -> Result<Vec<RiccatiSolution>> {
    let solve = |j: usize| -> Result<RiccatiSolution> {
        let sub = extract(plant, j)?;
        let sol = riccati::ric(&sub.a, &sub.b, &sub.c, &sub.d, &sub.f).map_err(|source| {
            SynthesisError::Subproblem {
                element: plant.poset.label(j).to_string(),
                source,
            }
        })?;
        log::debug!(
            "Ric(↓{}) solved: {} states, residual {:.3e}",
            plant.poset.label(j),
            sub.a.nrows(),
            sol.residual
        );
        Ok(sol)
    };
    let p = plant.poset.len();
    if parallel {
        (0..p).into_par_iter().map(solve).collect()
    } else {
        (0..p).map(solve).collect()
    }
}

/// Block-structured matrices shared by the controller, the filters and `Q*`.
#[derive(Debug, Clone)]
pub struct AssemblyMatrices {
    /// `diag(A(↓j,↓j) − B(↓j,↓j) K(↓j,↓j))`
    pub big_a: DMatrix<f64>,
    /// `diag(K(↓j,↓j))`
    pub big_k: DMatrix<f64>,
    /// Selects each element's own states inside its block.
    pub pi1: DMatrix<f64>,
    /// Selects the strictly-downstream states inside each block.
    pub pi2: DMatrix<f64>,
    /// `[E_{↓1} … E_{↓p}]` on the state space.
    pub r_states: DMatrix<f64>,
    /// `[E_{↓1} … E_{↓p}]` on the input space.
    pub r_inputs: DMatrix<f64>,
    pub a_phi: DMatrix<f64>,
    pub b_phi: DMatrix<f64>,
    pub c_phi: DMatrix<f64>,
    pub c_q: DMatrix<f64>,
    /// Row offset of each element block in `big_a`.
    pub block_offsets: Vec<usize>,
    /// Row offset of each element block in `a_phi`.
    pub phi_offsets: Vec<usize>,
    /// `↓↓j` per element.
    pub strict_down: Vec<Vec<usize>>,
}

/// Selector matrices `(Π1, Π2, R_x, R_u)` determined by the poset and partition alone.
pub fn structure_selectors(poset: &Poset, part: &BlockPartition) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let p = poset.len();
    let n = part.n_states();
    let m = part.n_inputs();
    let mut pi1_blocks = Vec::with_capacity(p);
    let mut pi2_blocks = Vec::with_capacity(p);
    let mut rx_blocks = Vec::with_capacity(p);
    let mut ru_blocks = Vec::with_capacity(p);
    for j in 0..p {
        let down = poset.downstream(j);
        let nj = part.state_dims()[j];
        let n_down = part.states_in(&down);
        let own: Vec<usize> = (0..nj).collect();
        let rest: Vec<usize> = (nj..n_down).collect();
        pi1_blocks.push(selector(n_down, &own));
        pi2_blocks.push(selector(n_down, &rest));
        rx_blocks.push(selector(n, &part.state_indices(&down)));
        ru_blocks.push(selector(m, &part.input_indices(&down)));
    }
    let pi1 = block_diag(&pi1_blocks);
    let pi2 = block_diag(&pi2_blocks);
    let rx = hstack(&rx_blocks.iter().collect::<Vec<_>>());
    let ru = hstack(&ru_blocks.iter().collect::<Vec<_>>());
    (pi1, pi2, rx, ru)
}

/// Residuals of the identities the assembled matrices must satisfy, by name.
pub fn assembly_residuals(
    plant: &PlantData,
    big_a: &DMatrix<f64>,
    c_q: &DMatrix<f64>,
) -> Vec<(&'static str, f64)> {
    let (pi1, pi2, rx, _) = structure_selectors(&plant.poset, &plant.partition);
    let big_n = pi1.nrows();
    if big_a.shape() != (big_n, big_n) || c_q.shape() != (plant.partition.n_inputs(), big_n) {
        return vec![("dimensions", f64::INFINITY)];
    }
    let perm = hstack(&[&pi1, &pi2]);
    let perm_ok = perm.is_square()
        && perm.iter().all(|&x| x == 0.0 || x == 1.0)
        && perm.row_sum().iter().all(|&s| s == 1.0)
        && perm.column_sum().iter().all(|&s| s == 1.0);
    let scale = 1.0 + big_a.amax().max(c_q.amax()).max(plant.a.amax()).max(plant.b.amax());
    vec![
        ("permutation", if perm_ok { 0.0 } else { 1.0 }),
        ("selector_split", (&rx * &pi2 * pi2.transpose() + pi1.transpose() - &rx).amax()),
        (
            "intertwining",
            (&rx * big_a - &plant.b * c_q - &plant.a * &rx).amax() / scale,
        ),
        ("own_state_selection", (&plant.a * &rx * &pi1 - &plant.a).amax()),
    ]
}

/// Builds the assembly from the per-element gains `K(↓j,↓j)` and checks its identities.
pub fn assemble(plant: &PlantData, gains: &[DMatrix<f64>]) -> Result<AssemblyMatrices> {
    let p = plant.poset.len();
    if gains.len() != p {
        return Err(SynthesisError::DimensionMismatch(format!(
            "{} gains for {} elements",
            gains.len(),
            p
        )));
    }
    let mut closed = Vec::with_capacity(p);
    for (j, k) in gains.iter().enumerate() {
        let sub = extract(plant, j)?;
        if k.shape() != (sub.b.ncols(), sub.a.nrows()) {
            return Err(shape_error("K(↓j,↓j)", k.shape(), (sub.b.ncols(), sub.a.nrows())));
        }
        closed.push(&sub.a - &sub.b * k);
    }
    let big_a = block_diag(&closed);
    let big_k = block_diag(gains);
    let (pi1, pi2, r_states, r_inputs) = structure_selectors(&plant.poset, &plant.partition);

    let a_phi = pi2.transpose() * &big_a * &pi2;
    let b_phi = pi2.transpose() * &big_a * &pi1;
    let c_phi = &r_states * &pi2;
    let c_q = -(&r_inputs * &big_k);

    for (name, residual) in assembly_residuals(plant, &big_a, &c_q) {
        if !(residual <= 1e-9) {
            return Err(SynthesisError::AssemblyIdentityViolated {
                name: name.to_string(),
                residual,
            });
        }
    }

    let mut block_offsets = Vec::with_capacity(p);
    let mut phi_offsets = Vec::with_capacity(p);
    let mut strict_down = Vec::with_capacity(p);
    let (mut off, mut off2) = (0, 0);
    for j in 0..p {
        block_offsets.push(off);
        phi_offsets.push(off2);
        let sd = plant.poset.strict_downstream(j);
        off += plant.partition.states_in(&plant.poset.downstream(j));
        off2 += plant.partition.states_in(&sd);
        strict_down.push(sd);
    }

    Ok(AssemblyMatrices {
        big_a,
        big_k,
        pi1,
        pi2,
        r_states,
        r_inputs,
        a_phi,
        b_phi,
        c_phi,
        c_q,
        block_offsets,
        phi_offsets,
        strict_down,
    })
}

/// `K* = (A_Φ − B_Φ C_Φ, B_Φ, C_Q (Π2 − Π1 C_Φ), C_Q Π1)`.
pub fn controller(asm: &AssemblyMatrices) -> StateSpace {
    StateSpace::new(
        &asm.a_phi - &asm.b_phi * &asm.c_phi,
        asm.b_phi.clone(),
        &asm.c_q * (&asm.pi2 - &asm.pi1 * &asm.c_phi),
        &asm.c_q * &asm.pi1,
    )
    .expect("assembly dimensions are consistent")
}

/// The propagation filter `Φ`, the differential filter `Γ = Φ⁻¹`, and `K_Φ`.
#[derive(Debug, Clone)]
pub struct Filters {
    pub phi: StateSpace,
    pub gamma: StateSpace,
    pub k_phi: StateSpace,
}

/// `Φ = (A_Φ, B_Φ, C_Φ, I)`, `Γ = (A_Φ − B_Φ C_Φ, B_Φ, −C_Φ, I)`, and
/// `K_Φ = (A_Φ, B_Φ, C_Q Π2, C_Q Π1)`, whose column `j` is `−K̂(↓j,↓j) Φ(j)`.
///
/// With this sign the controller factors as `K* = K_Φ Γ`, i.e. the control
/// law is `u = K_Φ Γ x = −Σ_j K̂(↓j,↓j) Φ(j) (Γx)_j`.
pub fn filters(asm: &AssemblyMatrices) -> Filters {
    let n = asm.c_phi.nrows();
    let eye = DMatrix::identity(n, n);
    let phi = StateSpace::new(asm.a_phi.clone(), asm.b_phi.clone(), asm.c_phi.clone(), eye.clone())
        .expect("assembly dimensions are consistent");
    let gamma = StateSpace::new(
        &asm.a_phi - &asm.b_phi * &asm.c_phi,
        asm.b_phi.clone(),
        -&asm.c_phi,
        eye,
    )
    .expect("assembly dimensions are consistent");
    let k_phi = StateSpace::new(
        asm.a_phi.clone(),
        asm.b_phi.clone(),
        &asm.c_q * &asm.pi2,
        &asm.c_q * &asm.pi1,
    )
    .expect("assembly dimensions are consistent");
    Filters { phi, gamma, k_phi }
}

fn phi_block(asm: &AssemblyMatrices, part: &BlockPartition, j: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let size = part.states_in(&asm.strict_down[j]);
    let off = asm.phi_offsets[j];
    let a = asm.a_phi.view((off, off), (size, size)).into_owned();
    let col = part.state_range(j);
    let b = asm.b_phi.view((off, col.start), (size, col.len())).into_owned();
    (a, b)
}

/// Column `j` of `Φ` realized on its own: `(A_Φ(j), B_Φ(j), E_{↓↓j}, E_j)`.
pub fn phi_column(plant: &PlantData, asm: &AssemblyMatrices, j: usize) -> StateSpace {
    let part = &plant.partition;
    let (a, b) = phi_block(asm, part, j);
    let n = part.n_states();
    let c = selector(n, &part.state_indices(&asm.strict_down[j]));
    let d = selector(n, &part.state_indices(&[j]));
    StateSpace::new(a, b, c, d).expect("block dimensions are consistent")
}

/// Column `j` of `K_Φ`: `(A_Φ(j), B_Φ(j), −K̂ E_{↓↓j}, −K̂ E_j)` with `K̂ = K̂(↓j,↓j)`.
pub fn k_phi_column(plant: &PlantData, asm: &AssemblyMatrices, gains: &[DMatrix<f64>], j: usize) -> Result<StateSpace> {
    let part = &plant.partition;
    let (a, b) = phi_block(asm, part, j);
    let k_hat = embed_hat(&plant.poset, part, &gains[j], j)?;
    let n = part.n_states();
    let c = -(&k_hat * selector(n, &part.state_indices(&asm.strict_down[j])));
    let d = -(&k_hat * selector(n, &part.state_indices(&[j])));
    Ok(StateSpace::new(a, b, c, d)?)
}

/// `Q* = (A_big, Π1 F, C_Q, 0)`.
pub fn q_star(plant: &PlantData, asm: &AssemblyMatrices) -> StateSpace {
    StateSpace::new(
        asm.big_a.clone(),
        &asm.pi1 * &plant.f,
        asm.c_q.clone(),
        DMatrix::zeros(plant.partition.n_inputs(), plant.partition.n_disturbances()),
    )
    .expect("assembly dimensions are consistent")
}

/// Samples of `K = Q P21† (I + P22 Q P21†)⁻¹` with `P21† = F† (sI − A)`.
///
/// Since `P21† P22 = F† B`, the push-through identity gives the equivalent
/// `K = (I + Q F† B)⁻¹ Q F† (sI − A)`, which needs no resolvent. Points
/// where `Q` cannot be evaluated or `I + Q F† B` is singular are nudged.
pub fn recover_k_from_q(plant: &PlantData, q: &StateSpace, points: &[Complex64]) -> Result<Vec<(Complex64, CMatrix)>> {
    let n = plant.partition.n_states();
    let m = plant.partition.n_inputs();
    let f = &plant.f;
    let f_pinv = (f.transpose() * f)
        .try_inverse()
        .ok_or_else(|| SynthesisError::FRankDeficient("F".into()))?
        * f.transpose();
    let f_pinv_b = to_complex(&(&f_pinv * &plant.b));
    let f_pinv = to_complex(&f_pinv);
    let a = to_complex(&plant.a);
    let nudge = Complex64::new(0.0137, 0.0071);

    let at = |s: Complex64| -> Result<CMatrix> {
        let qs = q.evaluate(s)?;
        let lhs = CMatrix::identity(m, m) + &qs * &f_pinv_b;
        let rhs = qs * &f_pinv * (CMatrix::identity(n, n) * s - &a);
        lhs.lu().solve(&rhs).ok_or_else(|| StateSpaceError::ResolventSingular(s).into())
    };

    let mut out = Vec::with_capacity(points.len());
    for &s0 in points {
        let mut s = s0;
        let mut tries = 0;
        loop {
            match at(s) {
                Ok(k) if k.iter().all(|z| z.re.is_finite() && z.im.is_finite()) => {
                    out.push((s, k));
                    break;
                }
                _ if tries < 50 => {
                    s += nudge;
                    tries += 1;
                }
                Err(e) => return Err(e),
                Ok(_) => return Err(StateSpaceError::ResolventSingular(s).into()),
            }
        }
    }
    Ok(out)
}

/// Centralized H2-optimal static gain on the full plant.
pub fn centralized(plant: &PlantData) -> Result<RiccatiSolution> {
    riccati::ric(&plant.a, &plant.b, &plant.c, &plant.d, &plant.f).map_err(SynthesisError::Centralized)
}

/// Realization of a centralized closed loop `(A − BL, F, C − DL, 0)`.
pub fn centralized_closed_loop(plant: &PlantData, sol: &RiccatiSolution) -> StateSpace {
    StateSpace::new(
        &plant.a - &plant.b * &sol.gain,
        plant.f.clone(),
        &plant.c - &plant.d * &sol.gain,
        DMatrix::zeros(plant.partition.output_dim(), plant.partition.n_disturbances()),
    )
    .expect("validated dimensions")
}

/// Everything the synthesis produces.
#[derive(Debug, Clone)]
pub struct SynthesisResult {
    /// `Ric(↓j)` per element, in internal order.
    pub gains: Vec<RiccatiSolution>,
    pub assembly: AssemblyMatrices,
    pub k_star: StateSpace,
    pub phi: StateSpace,
    pub gamma: StateSpace,
    pub k_phi: StateSpace,
    pub q_star: StateSpace,
    /// `Σ_j n(↓↓j)`
    pub degree_bound: usize,
    pub norms: NormReport,
}

impl SynthesisResult {
    pub fn gain_matrices(&self) -> Vec<DMatrix<f64>> {
        self.gains.iter().map(|g| g.gain.clone()).collect()
    }
}

/// `Σ_j n(↓↓j)`
pub fn degree_bound(poset: &Poset, part: &BlockPartition) -> usize {
    (0..poset.len()).map(|j| part.states_in(&poset.strict_downstream(j))).sum()
}

/// `σ_P · max_i n_i`
pub fn coarse_degree_bound(poset: &Poset, part: &BlockPartition) -> usize {
    poset.sigma() * part.state_dims().iter().copied().max().unwrap_or(0)
}

/// Runs the whole pipeline on a validated plant.
pub fn synthesize(plant: &PlantData, opts: &SynthesisOptions) -> Result<SynthesisResult> {
    let gains = solve_subproblems(plant, opts.parallel)?;
    let ks: Vec<DMatrix<f64>> = gains.iter().map(|g| g.gain.clone()).collect();
    let assembly = assemble(plant, &ks)?;
    let abscissa = statespace::spectral_abscissa(&assembly.big_a)?;
    if !(abscissa < -opts.margin) {
        return Err(SynthesisError::AssemblyIdentityViolated {
            name: "stability".into(),
            residual: abscissa,
        });
    }
    let k_star = controller(&assembly);
    let Filters { phi, gamma, k_phi } = filters(&assembly);
    let q = q_star(plant, &assembly);
    let norms = verify::norm_report(plant, &k_star)?;
    log::info!(
        "synthesized controller of degree {} (h2 open {:.6}, centralized {:.6}, decentralized {:.6})",
        k_star.order(),
        norms.h_open,
        norms.h_centralized,
        norms.h_decentralized
    );
    Ok(SynthesisResult {
        gains,
        degree_bound: degree_bound(&plant.poset, &plant.partition),
        assembly,
        k_star,
        phi,
        gamma,
        k_phi,
        q_star: q,
        norms,
    })
}
