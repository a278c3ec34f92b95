//! Aligned comparison tables across scenario runs: one row per run plus
//! deltas against the first (baseline) run, emitted as CSV or JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::harness::{HarnessError, RunReport};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub tau: f64,
    pub contact_achieved: bool,
    pub peak_impact_force: f64,
    pub steady_force_error: f64,
    pub force_rms_error: f64,
    pub pos_err_xy: f64,
    pub pos_err_l2: f64,
    pub hover_height: f64,
    pub loss_of_contact: bool,
    pub aborted: bool,
    /// Deltas relative to the first (baseline) row.
    pub d_steady_force_error: f64,
    pub d_pos_err_xy: f64,
    pub d_peak_impact_force: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub rows: Vec<ComparisonRow>,
}

pub fn compare_runs(reports: &[RunReport]) -> Result<Comparison, HarnessError> {
    if reports.len() < 2 {
        return Err(HarnessError::Config(format!(
            "comparison needs at least 2 reports, got {}",
            reports.len()
        )));
    }
    let base = &reports[0];
    let rows = reports
        .iter()
        .map(|r| ComparisonRow {
            name: r.name.clone(),
            tau: r.tau,
            contact_achieved: r.contact_achieved,
            peak_impact_force: r.peak_impact_force,
            steady_force_error: r.steady_force_error,
            force_rms_error: r.force_rms_error,
            pos_err_xy: r.pos_err_xy,
            pos_err_l2: r.pos_err_l2,
            hover_height: r.hover_height,
            loss_of_contact: r.loss_of_contact,
            aborted: r.aborted.is_some(),
            d_steady_force_error: r.steady_force_error - base.steady_force_error,
            d_pos_err_xy: r.pos_err_xy - base.pos_err_xy,
            d_peak_impact_force: r.peak_impact_force - base.peak_impact_force,
        })
        .collect();
    Ok(Comparison { baseline: base.name.clone(), rows })
}

impl Comparison {
    pub fn save_json(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, serde_json::to_string_pretty(self).map_err(HarnessError::from)?)?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "name",
            "tau",
            "contact_achieved",
            "peak_impact_force",
            "steady_force_error",
            "force_rms_error",
            "pos_err_xy",
            "pos_err_l2",
            "hover_height",
            "loss_of_contact",
            "aborted",
            "d_steady_force_error",
            "d_pos_err_xy",
            "d_peak_impact_force",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.name.clone(),
                format!("{}", r.tau),
                format!("{}", r.contact_achieved),
                format!("{}", r.peak_impact_force),
                format!("{}", r.steady_force_error),
                format!("{}", r.force_rms_error),
                format!("{}", r.pos_err_xy),
                format!("{}", r.pos_err_l2),
                format!("{}", r.hover_height),
                format!("{}", r.loss_of_contact),
                format!("{}", r.aborted),
                format!("{}", r.d_steady_force_error),
                format!("{}", r.d_pos_err_xy),
                format!("{}", r.d_peak_impact_force),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(name: &str, steady: f64) -> RunReport {
        RunReport {
            name: name.into(),
            seed: 0,
            tau: 2.0,
            contact_achieved: true,
            contact_time: Some(1.0),
            peak_impact_force: 5.0,
            steady_force_error: steady,
            force_rms_error: steady,
            pos_err_xy: 0.001,
            pos_err_l2: 0.002,
            hover_height: 0.0,
            xy_goal_error: 0.0,
            making_force_error: 0.0,
            final_force: 2.0,
            loss_of_contact: false,
            contact_edges: 1,
            aborted: None,
        }
    }

    #[test]
    fn identical_runs_zero_deltas() {
        let c = compare_runs(&[report("a", 0.1), report("b", 0.1)]).unwrap();
        assert_eq!(c.rows.len(), 2);
        assert_eq!(c.rows[1].d_steady_force_error, 0.0);
        assert_eq!(c.rows[1].d_pos_err_xy, 0.0);
    }

    #[test]
    fn single_report_is_an_error() {
        assert!(matches!(compare_runs(&[report("a", 0.1)]), Err(HarnessError::Config(_))));
    }

    #[test]
    fn deltas_are_relative_to_first() {
        let c = compare_runs(&[report("base", 0.1), report("other", 0.4)]).unwrap();
        assert!((c.rows[1].d_steady_force_error - 0.3).abs() < 1e-12);
        assert_eq!(c.baseline, "base");
    }
}
