//! Wave-front tracking for steady supersonic Euler flow past a Lipschitz
//! wall with a strong vortex sheet/entropy wave, plus the monitors used
//! to check its stability: the Glimm functional, the interaction
//! potential and a weighted L1 Lyapunov functional.
//!
//! The `examples/` directory walks through each layer:
//!
//! - `gas_eigen`: closure, characteristic slopes and eigenvectors
//! - `wave_curves`: shocks, rarefactions, contacts, admissibility
//! - `riemann_solvers`: weak, strong, lateral and simplified solvers
//! - `coefficients`: reflection/transmission coefficients and weights
//! - `wall_inflow`: walls, inflow profiles and their coarsening
//! - `track_scenario`: a full tracking run with its functional trace
//! - `glimm_monitor`: the Glimm functional across events
//! - `lyapunov_pair`: Lyapunov functional between two runs
//! - `convergence`: refinement study in the approximation parameter

// Negated comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod gas;
pub mod geometry;
pub mod numerics;
pub mod riemann;
pub mod scenario;
pub mod tracker;
pub mod wave_curves;

pub use error::{CoefficientError, CurveError, FunctionalError, GasError, GeometryError, ScenarioError, SolverError, TrackerError};
pub use gas::{EigenData, FlowState, GasModel};
pub use wave_curves::{Wave, WaveFamily};
