//! H2-optimal state-feedback synthesis for poset-causal linear systems.
//!
//! A poset-causal plant has `A` and `B` in the block incidence algebra of a
//! finite poset: input `j` only reaches the states downstream of `j`. The
//! optimal controller under the same structural constraint splits into one
//! centralized Riccati problem per poset element. The per-element gains are
//! stitched back into a single controller realization, together with the
//! propagation filter `Phi` and its inverse, the differential filter `Gamma`.
//!
//! Module map:
//!
//! - [`poset`]: finite posets, derived sets, chains and block incidence patterns.
//! - [`statespace`]: realizations, LFT interconnection, gramians, H2 norms.
//! - [`riccati`]: the stabilizing CARE solution and the associated optimal `Q`.
//! - [`synthesis`]: plant validation, per-element decomposition and assembly.
//! - [`verify`]: re-checks every structural property of a synthesized controller.
//! - [`io`]: JSON plant and result files.

pub mod io;
pub mod linalg;
pub mod poset;
pub mod riccati;
pub mod statespace;
pub mod synthesis;
pub mod verify;

pub use nalgebra::DMatrix;
pub use num_complex::Complex64;

pub use poset::{BlockPartition, IncidencePattern, Poset, PosetError};
pub use riccati::{ric, RiccatiError, RiccatiSolution};
pub use statespace::{FrequencyGrid, StateSpace, StateSpaceError};
pub use synthesis::{
    synthesize, AssemblyMatrices, PlantData, RawPlant, SynthesisError, SynthesisOptions,
    SynthesisResult,
};
pub use verify::{run_all, NormReport, Tolerances, Verdict, VerificationReport};
