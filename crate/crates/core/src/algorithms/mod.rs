//! Separate and joint optimization loops.

pub mod clusters;
pub mod common;
pub mod joint;
pub mod replay;
pub mod separate;
pub mod wmmse;

pub use clusters::{extract_rrh_clusters, RrhClusters, DEFAULT_CLUSTER_THRESHOLD};
pub use common::{
    cs_denominators, initial_beamformers, operating_rates, AlgorithmOptions, RanSolution,
};
pub use joint::{algorithm2_joint, JointSolution, SurrogateStep};
pub use replay::{replay, Allocation, Violations};
pub use separate::{algorithm1_separate_ran, separate_baseline, SeparateSolution};
pub use wmmse::{mmse_receiver, mse, mse_ceiling, mse_state, mse_weight, tau, MseState};
