//! Numerical toolkit for nematic-isotropic tactoids in a two-dimensional
//! Ginzburg-Landau model with a divergence penalty: wall costs, field
//! diagnostics, gradient-flow relaxation, the one-dimensional reduction,
//! sharp-interface criticality conditions and the tactoid construction.

pub mod cli_io;
pub mod curve;
pub mod error;
pub mod fields;
pub mod interp;
pub mod oned;
pub mod potentials;
pub mod quadrature;
pub mod relaxation;
pub mod sharp;
pub mod tactoid;

pub use curve::{directed_hausdorff, hausdorff, Curve};
pub use error::{Error, Result};
pub use fields::{BoundaryData, Domain, EnergyBreakdown, GridField, Shape};
pub use oned::{OneDLimitState, OneDProfile, OneDStructure};
pub use potentials::{PotentialKind, PotentialSpec, TabulatedPotential};
pub use relaxation::{InitKind, RunRecord, SimConfig};
pub use sharp::{CharInitialData, E0Breakdown, JunctionData, SharpConfig};
pub use tactoid::{TactoidSolution, ThetaProfile};
