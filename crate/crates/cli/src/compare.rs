//! Pairwise Wilcoxon comparison of scenarios' R²-vs-w_in distributions.

use std::io::Write;

use anyhow::{bail, Result};
use serde::Serialize;
use surgecorr_core::eval::wilcoxon_signed_rank;
use surgecorr_core::Error;

use crate::record::RunRecord;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub scenario_a: String,
    pub scenario_b: String,
    pub w_out: usize,
    pub n: usize,
    pub n_effective: usize,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub method: String,
    pub significant: bool,
}

/// The last record of each scenario name, in first-seen order.
pub fn latest_per_scenario(records: Vec<RunRecord>) -> Vec<RunRecord> {
    let mut out: Vec<RunRecord> = Vec::new();
    for r in records {
        match out.iter_mut().find(|o| o.scenario == r.scenario) {
            Some(slot) => *slot = r,
            None => out.push(r),
        }
    }
    out
}

fn complete(record: &RunRecord, w_out: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let rows = record.r2_by_w_in(w_out);
    let mut grid = Vec::new();
    let mut r2 = Vec::new();
    for (w_in, v) in rows {
        match v {
            Some(v) => {
                grid.push(w_in);
                r2.push(v);
            }
            None => bail!("scenario '{}' has no R² for w_in={w_in}, w_out={w_out}", record.scenario),
        }
    }
    Ok((grid, r2))
}

pub fn compare(records: &[RunRecord], alpha: f64) -> Result<Vec<ComparisonRow>> {
    if records.len() < 2 {
        bail!("need at least two scenarios to compare, got {}", records.len());
    }
    let mut rows = Vec::new();
    for i in 0..records.len() {
        for j in i + 1..records.len() {
            let (a, b) = (&records[i], &records[j]);
            for w_out in a.w_outs().into_iter().filter(|w| b.w_outs().contains(w)) {
                let (grid_a, r2_a) = complete(a, w_out)?;
                let (grid_b, r2_b) = complete(b, w_out)?;
                if grid_a != grid_b {
                    bail!(
                        "w_in grids differ between '{}' {:?} and '{}' {:?} at w_out={w_out}",
                        a.scenario,
                        grid_a,
                        b.scenario,
                        grid_b
                    );
                }
                let base = ComparisonRow {
                    scenario_a: a.scenario.clone(),
                    scenario_b: b.scenario.clone(),
                    w_out,
                    n: r2_a.len(),
                    n_effective: 0,
                    statistic: None,
                    p_value: None,
                    method: String::new(),
                    significant: false,
                };
                rows.push(match wilcoxon_signed_rank(&r2_a, &r2_b) {
                    Ok(w) => ComparisonRow {
                        n_effective: w.n_effective,
                        statistic: Some(w.statistic),
                        p_value: Some(w.p_value),
                        method: serde_json::to_value(w.method)?.as_str().unwrap_or_default().to_string(),
                        significant: w.significant(alpha),
                        ..base
                    },
                    Err(Error::Degenerate(_)) => ComparisonRow { method: "degenerate".into(), ..base },
                    Err(e) => return Err(e.into()),
                });
            }
        }
    }
    if rows.is_empty() {
        bail!("the scenarios share no prediction window");
    }
    Ok(rows)
}

/// `scenario_a,scenario_b,w_out,n,n_effective,statistic,p_value,method,significant`
pub fn write_comparison<W: Write>(out: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BoxRow<'a> {
    scenario: &'a str,
    w_out: usize,
    w_in: usize,
    r2: Option<f64>,
}

/// Long-format `scenario,w_out,w_in,r2`, one row per sweep cell.
pub fn write_boxplot<W: Write>(out: W, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in records {
        for w_out in rec.w_outs() {
            for (w_in, r2) in rec.r2_by_w_in(w_out) {
                w.serialize(BoxRow { scenario: &rec.scenario, w_out, w_in, r2 })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::SweepEntry;

    fn record(name: &str, r2: &[(usize, f64)]) -> RunRecord {
        RunRecord {
            scenario: name.into(),
            config_hash: String::new(),
            seed: 0,
            precision: "f64".into(),
            train_hours: 0,
            sweep: r2
                .iter()
                .map(|&(w_in, v)| SweepEntry {
                    w_in,
                    w_out: 1,
                    r2: Some(v),
                    mse: None,
                    rmse: None,
                    mae: None,
                    train_samples: 0,
                    seconds: 0.0,
                    error: None,
                })
                .collect(),
            selected: vec![],
            seconds: 0.0,
            outputs: vec![],
        }
    }

    fn grid(values: &[f64]) -> Vec<(usize, f64)> {
        values.iter().enumerate().map(|(i, &v)| (5 * (i + 1), v)).collect()
    }

    #[test]
    fn self_comparison_is_degenerate() {
        let a = record("a", &grid(&[0.8, 0.85, 0.9]));
        let mut b = a.clone();
        b.scenario = "b".into();
        let rows = compare(&[a, b], 0.05).unwrap();
        assert_eq!(rows[0].method, "degenerate");
        assert!(rows[0].p_value.is_none());
    }

    #[test]
    fn disjoint_ranges_are_significant() {
        // 8 positive differences: exact p = 2 / 256
        let a = record("a", &grid(&[0.90, 0.91, 0.92, 0.93, 0.94, 0.95, 0.96, 0.97]));
        let b = record("b", &grid(&[0.50, 0.52, 0.54, 0.56, 0.58, 0.60, 0.62, 0.64]));
        let rows = compare(&[a, b], 0.05).unwrap();
        assert_eq!(rows[0].p_value, Some(2.0 / 256.0));
        assert_eq!(rows[0].statistic, Some(0.0));
        assert!(rows[0].significant);
    }

    #[test]
    fn mismatched_grids_error() {
        let a = record("a", &[(5, 0.1), (10, 0.2)]);
        let b = record("b", &[(5, 0.1), (15, 0.2)]);
        assert!(compare(&[a, b], 0.05).is_err());
    }

    #[test]
    fn latest_record_wins() {
        let recs = latest_per_scenario(vec![record("a", &[(5, 0.1)]), record("b", &[(5, 0.2)]), record("a", &[(5, 0.3)])]);
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0].sweep[0].r2, Some(0.3));
    }
}
