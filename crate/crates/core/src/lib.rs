#![no_std]

extern crate alloc;

pub mod auxiliary;
pub mod boundary;
pub mod eigen;
pub mod energy;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod phi;
pub mod potential;
pub mod variational;
pub mod vecops;
pub mod verify;

pub use boundary::{BoundaryFunctional, ConvexSetK, CustomSmooth, SmoothPart};
pub use eigen::rayleigh_lambda1;
pub use energy::{discrete_equation, energy_eval, smooth_gradient, EnergyBreakdown, EnergyMode};
pub use error::{Error, Result};
pub use grid::{Grid, GridFunction};
pub use phi::{CustomPhi, PhiDiagnostics, PhiMap, PhiVariant};
pub use potential::{CustomPotential, Forcing, PotentialField, ProblemSpec, RadialTable};
