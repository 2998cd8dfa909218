//! Scenario configuration, parameter sweeps, output files and the CLI.

mod cli;
mod emit;
mod spec;
mod sweep;

pub use cli::{cli_main, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
pub use emit::{format_sig12, meta_path, to_json, write_json, SweepOutput};
pub use spec::{
    ChannelKind, DeParams, EvolutionNoise, GrapeParams, OptimizerKind, ScenarioSpec, DEFAULT_CHANNEL_STRENGTH,
    DEFAULT_OMEGA, DP_FINAL_TIME, FINAL_TIME_CAP, NEGATIVITY_HORIZON, NEGATIVITY_STEP,
};
pub use sweep::{optimize_point, sweep_fisher, sweep_negativity, FisherPoint, PointOptimization};
