//! Pseudo-spectral toolkit for the finite-depth capillary water-wave system.
//!
//! See module docs: [`spectral`], [`dispersion`], [`dno`], [`evolution`],
//! [`normal_form`], [`paralin`], [`norms`], [`report`].

pub mod dispersion;
pub mod dno;
pub mod error;
pub mod evolution;
pub mod normal_form;
pub mod norms;
pub mod paralin;
pub mod report;
pub mod spectral;

pub use dispersion::{DispersionLaw, PhaseSignature, Sign};
pub use dno::{DnoBackend, DnoSolver, StripField};
pub use error::CoreError;
pub use evolution::{
    BilinearSymbol, ComplexState, DeltaPlacement, Evolver, Integrator, RhsMode, SurfaceState,
};
pub use normal_form::{CubicSource, NormalFormConfig, NormalFormSymbol, ProfileState};
pub use norms::{NormReport, SInftyOperand, SInftyReport, VectorFieldKind, Z2Report};
pub use paralin::{EnergyReport, GoodUnknown, SymmetrizationSymbols, XDependentSymbol};
pub use spectral::{DyadicCutoffs, Grid2D, SpectralField};
