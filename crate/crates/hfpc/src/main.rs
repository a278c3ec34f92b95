//! Command-line front end: demonstration synthesis, learning,
//! segmentation inspection, scenario execution, run comparison, and
//! parameter sweeps.
//!
//! Exit codes: 0 success, 2 configuration error, 3 simulation abort,
//! 4 learning error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use hfpc::harness::{
    compare_runs, run_scenario, segment_demo, synthesize_demo, write_log_csv, Demonstration,
    HarnessError, RunReport, ScenarioConfig, SegmentConfig, SegmentedSkill, SynthConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(name = "hfpc", about = "Hybrid force/position skills from demonstration", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic demonstration recording.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Segment a demonstration and fit all per-phase primitives.
    Learn {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report phase boundaries without writing primitives.
    Segment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Execute one scenario against a learned skill.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabulate metrics across saved run summaries.
    Compare {
        /// Two or more summary JSON files; the first is the baseline.
        reports: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run a scenario across a grid of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LearnConfig {
    /// Demonstration CSV path, relative to this config file.
    demo: String,
    #[serde(default)]
    segment: SegmentConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    /// "tau" or "height_offset_cm".
    parameter: String,
    values: Vec<f64>,
    scenario: ScenarioConfig,
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    Ok(toml::from_str(&text)?)
}

/// Interpret `rel` relative to the directory holding `config`.
fn sibling(config: &Path, rel: &str) -> PathBuf {
    let p = PathBuf::from(rel);
    if p.is_absolute() {
        p
    } else {
        config.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn load_skill_for(cfg: &ScenarioConfig, config_path: &Path) -> Result<SegmentedSkill, HarnessError> {
    if cfg.skill.is_empty() {
        return Err(HarnessError::Config("scenario config must set `skill`".into()));
    }
    SegmentedSkill::load_json(&sibling(config_path, &cfg.skill))
}

fn run_one(
    cfg: &ScenarioConfig,
    skill: &SegmentedSkill,
    out: &Path,
) -> Result<RunReport, HarnessError> {
    let outcome = run_scenario(cfg, skill)?;
    std::fs::create_dir_all(out)?;
    outcome.report.save_json(&out.join(format!("{}_summary.json", cfg.name)))?;
    write_log_csv(&out.join(format!("{}_log.csv", cfg.name)), &outcome.log)?;
    Ok(outcome.report)
}

fn real_main() -> Result<(), HarnessError> {
    env_logger::init();
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Synth { config, out, seed, format } => {
            let mut cfg: SynthConfig = read_toml(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let demo = synthesize_demo(&cfg)?;
            std::fs::create_dir_all(&out)?;
            let path = match format {
                Format::Csv => {
                    let path = out.join("demo.csv");
                    demo.save_csv(&path)?;
                    path
                }
                Format::Json => {
                    let path = out.join("demo.json");
                    demo.save_json(&path)?;
                    path
                }
            };
            println!("wrote {} ({} samples at {} Hz)", path.display(), demo.len(), demo.rate);
        }
        Cmd::Learn { config, out } => {
            let cfg: LearnConfig = read_toml(&config)?;
            let demo = Demonstration::load_csv(&sibling(&config, &cfg.demo))?;
            let skill = segment_demo(&demo, &cfg.segment)?;
            std::fs::create_dir_all(&out)?;
            skill.save_json(&out.join("skill.json"))?;
            for (i, seg) in skill.segments.iter().enumerate() {
                for (axis, label) in ["x", "y", "z"].iter().enumerate() {
                    let path = out.join(format!("seg{i}_pos_{label}.json"));
                    std::fs::write(&path, serde_json::to_string_pretty(&seg.position[axis])?)?;
                }
            }
            println!("wrote {} segments to {}", skill.segments.len(), out.display());
        }
        Cmd::Segment { config, out, format } => {
            let cfg: LearnConfig = read_toml(&config)?;
            let demo = Demonstration::load_csv(&sibling(&config, &cfg.demo))?;
            let skill = segment_demo(&demo, &cfg.segment)?;
            std::fs::create_dir_all(&out)?;
            #[derive(serde::Serialize)]
            struct Boundary {
                index: usize,
                kind: String,
                start: usize,
                end: usize,
                t_start: f64,
                t_end: f64,
                goal_force: Option<f64>,
            }
            let rows: Vec<Boundary> = skill
                .segments
                .iter()
                .enumerate()
                .map(|(i, s)| Boundary {
                    index: i,
                    kind: format!("{:?}", s.kind),
                    start: s.start,
                    end: s.end,
                    t_start: s.start as f64 / skill.rate,
                    t_end: s.end as f64 / skill.rate,
                    goal_force: s.goal_force,
                })
                .collect();
            match format {
                Format::Json => {
                    std::fs::write(out.join("segments.json"), serde_json::to_string_pretty(&rows)?)?
                }
                Format::Csv => {
                    let mut w = csv::Writer::from_path(out.join("segments.csv"))?;
                    w.write_record(["index", "kind", "start", "end", "t_start", "t_end", "goal_force"])?;
                    for r in rows {
                        w.write_record([
                            r.index.to_string(),
                            r.kind,
                            r.start.to_string(),
                            r.end.to_string(),
                            r.t_start.to_string(),
                            r.t_end.to_string(),
                            r.goal_force.map_or(String::new(), |g| g.to_string()),
                        ])?;
                    }
                    w.flush()?;
                }
            }
            println!("{} segments", skill.segments.len());
        }
        Cmd::Run { config, out, seed } => {
            let mut cfg = ScenarioConfig::load_toml(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let skill = load_skill_for(&cfg, &config)?;
            let report = run_one(&cfg, &skill, &out)?;
            if let Some(cause) = &report.aborted {
                return Err(HarnessError::Simulation(cause.clone()));
            }
            println!(
                "{}: contact={} peak={:.2}N steady_err={:.3}N",
                report.name, report.contact_achieved, report.peak_impact_force,
                report.steady_force_error
            );
        }
        Cmd::Compare { reports, out, format } => {
            let loaded: Result<Vec<RunReport>, _> =
                reports.iter().map(|p| RunReport::load_json(p)).collect();
            let table = compare_runs(&loaded?)?;
            std::fs::create_dir_all(&out)?;
            match format {
                Format::Csv => table.save_csv(&out.join("comparison.csv"))?,
                Format::Json => table.save_json(&out.join("comparison.json"))?,
            }
            println!("compared {} runs (baseline {})", table.rows.len(), table.baseline);
        }
        Cmd::Sweep { config, out, seed } => {
            let cfg: SweepConfig = read_toml(&config)?;
            cfg.scenario.validate()?;
            if cfg.values.is_empty() {
                return Err(HarnessError::Config("sweep needs at least one value".into()));
            }
            let skill = load_skill_for(&cfg.scenario, &config)?;
            let mut reports = Vec::new();
            for &v in &cfg.values {
                let mut scen = cfg.scenario.clone();
                if let Some(seed) = seed {
                    scen.seed = seed;
                }
                match cfg.parameter.as_str() {
                    "tau" => scen.tau = Some(v),
                    "height_offset_cm" => scen.surface.height_offset_cm = v,
                    other => {
                        return Err(HarnessError::Config(format!(
                            "unknown sweep parameter {other:?} (tau, height_offset_cm)"
                        )))
                    }
                }
                scen.name = format!("{}_{}_{v}", scen.name, cfg.parameter);
                let report = run_one(&scen, &skill, &out)?;
                println!(
                    "{}: contact={} steady_err={:.3}N{}",
                    report.name,
                    report.contact_achieved,
                    report.steady_force_error,
                    report.aborted.as_deref().map(|c| format!(" ABORTED: {c}")).unwrap_or_default()
                );
                reports.push(report);
            }
            if reports.len() >= 2 {
                let table = compare_runs(&reports)?;
                table.save_csv(&out.join("comparison.csv"))?;
                table.save_json(&out.join("comparison.json"))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
