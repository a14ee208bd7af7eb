//! Scenario files, campaign driver, studies and output encodings.

mod campaign;
mod emit;
mod scenario;
mod studies;

pub use campaign::{
    p3_reference, run_campaign, run_campaign_with_powers, Campaign, FrameDiagnostics, FrameRecord,
};
pub use emit::{emit, from_json, sorted, to_json, write_csv, Format, Tabular};
pub use scenario::{
    builtin_names, load_scenario, MonteCarloConfig, RobustnessConfig, Scenario, SCHEMA_VERSION,
};
pub use studies::{
    draw_powers, mismatched_campaign, run_monte_carlo, run_robustness, trial_rng, AggregateRecord,
    RobustnessRecord,
};
