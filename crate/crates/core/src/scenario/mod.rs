//! Scenario files, reference-point tables and the experiment drivers behind the CLI.

pub mod config;
pub mod output;
pub mod slots;
pub mod studies;

pub use config::{load_scenario, CostConfig, Scenario, SlotSource, BUNDLED_NAME};
pub use output::{emit_outputs, format_sig, run_studies, StudyOutputs};
pub use slots::{ingest_reference_csv, parse_reference_csv, synthetic_slots, SlotTable};
pub use studies::{
    compare_tariffs, local_peaks, run_allocation_study, run_demand_sweep, run_ee_study,
    run_pricing_study, AllocationRow, EeRow, PricingStudy, Study, SweepRow,
};
