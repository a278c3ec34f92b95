//! Demonstration ingestion/synthesis, phase segmentation, scenario
//! orchestration, and run comparison — everything above the math core
//! needed to drive full contact-skill experiments from the CLI.

pub mod compare;
pub mod demo;
pub mod scenario;
pub mod segment;
pub mod synth;

pub use compare::{compare_runs, Comparison, ComparisonRow};
pub use demo::Demonstration;
pub use scenario::{
    run_scenario, write_log_csv, FeatureToggles, FrameMode, GainConfig, LogRow, RunReport,
    ScenarioConfig, ScenarioOutcome, SurfaceConfig,
};
pub use segment::{segment_demo, PhaseKind, PhaseSegment, SegmentConfig, SegmentedSkill};
pub use synth::{synthesize_demo, DemoKind, SynthConfig};

use thiserror::Error;

/// Harness-level failure, partitioned the same way as the CLI exit
/// codes: configuration (2), simulation (3), learning (4).
#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("simulation aborted: {0}")]
    Simulation(String),
    #[error("learning error: {0}")]
    Learning(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(_) => 2,
            Self::Simulation(_) => 3,
            Self::Learning(_) => 4,
        }
    }
}

impl From<crate::dmp::DmpError> for HarnessError {
    fn from(e: crate::dmp::DmpError) -> Self {
        Self::Learning(e.to_string())
    }
}

impl From<crate::frames::FrameError> for HarnessError {
    fn from(e: crate::frames::FrameError) -> Self {
        Self::Learning(e.to_string())
    }
}

impl From<crate::sim::SimError> for HarnessError {
    fn from(e: crate::sim::SimError) -> Self {
        Self::Simulation(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        Self::Config(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        Self::Config(format!("json: {e}"))
    }
}

impl From<toml::de::Error> for HarnessError {
    fn from(e: toml::de::Error) -> Self {
        Self::Config(format!("toml: {e}"))
    }
}
