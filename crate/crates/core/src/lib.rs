//! Numerical laboratory for heat-semigroup smoothing on finite weighted
//! graphs: exact optimal smoothing constants, Wasserstein-1 and
//! bounded-Lipschitz distances, Cheeger constants, and machine-checked
//! functional inequalities linking them.

pub mod error;
pub mod space;
pub mod dirichlet;
pub mod generate;
pub mod quadrature;
pub mod heat;
pub mod transport;
pub mod spectral;
pub mod controls;
pub mod inequalities;
pub mod suite;
pub mod scenario;

pub use dirichlet::Dirichlet;
pub use error::{Error, Result};
pub use generate::{calibrate_metric, generate_space, SpaceFamily, SpaceFile, SpaceSpec};
pub use heat::{log_grid, HeatOperator, SmoothingProfile};
pub use space::{negative_part, positive_part, AtomicMeasure, Density, MetricMeasureSpace, Subset, Violation};
