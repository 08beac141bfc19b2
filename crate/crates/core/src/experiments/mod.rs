//! Experiment harness: single runs, sweeps and record emission.

pub mod records;
pub mod sweep;

pub use records::{
    aggregate, emit_records, from_json_str, to_csv_string, to_json_string, write_aggregate_csv,
    write_csv, AggregateRow, Format, Method, SolutionRecord, Stat, CSV_HEADER, STATUS_OPTIMAL,
};
#[cfg(feature = "parallel")]
pub use sweep::run_sweep_parallel;
pub use sweep::{
    apply_param, parse_grid, parse_seeds, run_single, run_sweep, run_sweep_sequential,
    solve_method, RunOutcome, SweepParam, SweepSpec, REPLAY_TOL,
};
