//! Dual-ball discrimination test, the displayed-score grid and clustering
//! of agents by their grids.

mod clustering;
mod discrimination;
mod trajectories;

pub use clustering::{complete_linkage, cut_tree, standardize, standardize_and_cluster, ClusterOutput, Merge, MergeTree};
pub use discrimination::{
    run_discrimination_test, run_trial, score_grid_test, test_variant, DiscriminationResult, Hit, InteractionMatrix, TrialRow,
    GRID_AGENT_SCORES, GRID_OPPONENT_SCORES,
};
pub use trajectories::{check_trajectory, generate_trajectories, TrajectoryCheck, TrajectorySpec, X_RANGE};
