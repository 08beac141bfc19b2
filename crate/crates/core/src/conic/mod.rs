//! Second-order cone programming: problem container, interior-point solver,
//! complex-variable modelling layer and the beamforming subproblem builders.

mod builders;
mod cones;
mod model;
mod problem;
mod solver;

pub use builders::{
    build_power_min_socp, build_wmmse_step_socp, rate_floor_coefficient, BeamformerLayout,
    BeamformingSocp, FronthaulData, PowerMinSpec, WmmseStepSpec,
};
pub use model::{AffExpr, ComplexVar, SocpModel};
pub use problem::{Cone, ConicProblem};
pub use solver::{solve, SolveReport, SolveStatus, SolverSettings};
