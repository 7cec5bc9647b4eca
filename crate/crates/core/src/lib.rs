//! Linear-optical realisation of arbitrary POVMs.
//!
//! A measurement on the `m`-dimensional internal state of a photon (polarisation,
//! OAM, ...) is dilated into a unitary on `n` spatial modes, split by repeated
//! cosine–sine decompositions into balanced beam splitters, internal phase plates and
//! single-mode internal unitaries, and emitted as an [`OpticalNetlist`]. The
//! [`simulator`] propagates density matrices through a netlist and checks the result
//! against the direct POVM formulas.
//!
//! ```
//! use naimark_core::{compiler, povm, simulator};
//!
//! let sic = povm::make_sic_qubit();
//! let compiled = compiler::compile(&sic, &compiler::CompileOptions::default()).unwrap();
//! let res = compiled.netlist.resources();
//! assert_eq!((res.bbs, res.phase, res.unitary), (6, 6, 7));
//!
//! let report = simulator::verify(&compiled.netlist, &sic, 10, 7, 1e-10).unwrap();
//! assert!(report.pass);
//! ```

pub mod applications;
pub mod compiler;
pub mod dilation;
pub mod error;
pub mod json;
pub mod netlist;
pub mod numerics;
pub mod povm;
pub mod random;
pub mod simulator;

pub use error::{Error, Result};
pub use netlist::{NetElement, OpticalNetlist};
pub use numerics::CMatrix;
pub use povm::{PovmKind, PovmSpec};

/// Default numerical tolerances shared by every module.
pub mod tol {
    /// Unitarity / isometry residual (max-norm of `U†U − I`).
    pub const UNITARY: f64 = 1e-10;
    /// Reconstruction residual for factorizations.
    pub const RECON: f64 = 1e-10;
    /// Hermiticity residual.
    pub const HERM: f64 = 1e-10;
    /// Eigenvalues above `-PSD` are clamped to zero.
    pub const PSD: f64 = 1e-10;
    /// POVM completeness residual.
    pub const COMPLETE: f64 = 1e-10;
    /// Outcome probabilities at or below this have no defined post-measurement state.
    pub const PROB: f64 = 1e-12;
    /// Singular values below this are treated as structurally zero.
    pub const RANK: f64 = 1e-8;
    /// Wave-plate factoring residual.
    pub const WAVEPLATE: f64 = 1e-8;
}
