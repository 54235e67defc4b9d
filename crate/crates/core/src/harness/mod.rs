//! Benchmark harness: parameter sweeps over the engine, the pinned CSV
//! schema, least-squares summaries, and the text report.

pub mod cli;
pub mod files;

use crate::engine::{self, Config, EngineError, NoTrace};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// One CSV record per attempt. The column set is a stable interface:
/// `n,seed,row_num,run_seq,ticks,millis,deaths,eats,restarts,solved`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvRow {
    pub n: usize,
    pub seed: u64,
    pub row_num: usize,
    pub run_seq: u32,
    pub ticks: u64,
    pub millis: u64,
    pub deaths: u64,
    pub eats: u64,
    pub restarts: u32,
    pub solved: bool,
}

pub const CSV_HEADER: &str = "n,seed,row_num,run_seq,ticks,millis,deaths,eats,restarts,solved";

/// Sidecar record carrying the weight ceilings a run was configured with,
/// for the (Least + Coop) weight analysis the main schema cannot express.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightsRow {
    pub least_plus_coop: f64,
    pub n: usize,
    pub seed: u64,
    pub row_num: usize,
    pub run_seq: u32,
    pub ticks: u64,
    pub solved: bool,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("csv schema mismatch: expected header `{expected}`, found `{found}`")]
    SchemaMismatch { expected: String, found: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid sweep: {0}")]
    InvalidSweep(String),
}

pub fn write_csv<W: std::io::Write>(w: W, rows: &[CsvRow]) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_writer(w);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(r: R) -> Result<Vec<CsvRow>, HarnessError> {
    let mut reader = csv::Reader::from_reader(r);
    let found = reader.headers()?.iter().collect::<Vec<_>>().join(",");
    if found != CSV_HEADER {
        return Err(HarnessError::SchemaMismatch {
            expected: CSV_HEADER.to_string(),
            found,
        });
    }
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record?);
    }
    Ok(rows)
}

pub fn write_weights_csv<W: std::io::Write>(
    w: W,
    rows: &[WeightsRow],
) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_writer(w);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_weights_csv<R: std::io::Read>(r: R) -> Result<Vec<WeightsRow>, HarnessError> {
    let mut reader = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for record in reader.deserialize() {
        rows.push(record?);
    }
    Ok(rows)
}

/// The full grid of a sweep: every n × parameter combination × seed runs as
/// an independent, seed-deterministic job.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub ns: Vec<usize>,
    pub seeds: Vec<u64>,
    pub row_nums: Vec<usize>,
    pub run_nums: Vec<u32>,
    pub max_random_ws: Vec<f64>,
    pub max_least_ws: Vec<f64>,
    pub max_coop_ws: Vec<f64>,
    pub fixed_weights: bool,
    pub init_energy: i64,
    pub step_lose_energy: i64,
    pub merge_threshold: i64,
    pub coop_bit_density: f64,
    pub tick_budget: u64,
    pub restart_budget: u32,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let agent = crate::agents::AgentParams::default();
        SweepSpec {
            ns: vec![8],
            seeds: (0..20).collect(),
            row_nums: vec![3],
            run_nums: vec![1],
            max_random_ws: vec![agent.max_random_w],
            max_least_ws: vec![agent.max_least_w],
            max_coop_ws: vec![agent.max_coop_w],
            fixed_weights: false,
            init_energy: agent.initial_energy,
            step_lose_energy: agent.step_lose_energy,
            merge_threshold: agent.merge_threshold,
            coop_bit_density: agent.coop_bit_density,
            tick_budget: 1_000_000,
            restart_budget: 10,
        }
    }
}

impl SweepSpec {
    fn config_for(&self, n: usize, point: &GridPoint, seed: u64) -> Config {
        let mut cfg = Config::queens(n);
        cfg.row_num = point.row_num;
        cfg.run_num = point.run_num;
        cfg.tick_budget = self.tick_budget;
        cfg.restart_budget = self.restart_budget;
        cfg.seed = seed;
        cfg.agent.initial_energy = self.init_energy;
        cfg.agent.step_lose_energy = self.step_lose_energy;
        cfg.agent.merge_threshold = self.merge_threshold;
        cfg.agent.coop_bit_density = self.coop_bit_density;
        cfg.agent.fixed_weights = self.fixed_weights;
        cfg.agent.max_random_w = point.max_random_w;
        cfg.agent.max_least_w = point.max_least_w;
        cfg.agent.max_coop_w = point.max_coop_w;
        cfg
    }

    fn grid(&self) -> Vec<GridPoint> {
        let mut points = Vec::new();
        for &row_num in &self.row_nums {
            for &run_num in &self.run_nums {
                for &max_random_w in &self.max_random_ws {
                    for &max_least_w in &self.max_least_ws {
                        for &max_coop_w in &self.max_coop_ws {
                            points.push(GridPoint {
                                row_num,
                                run_num,
                                max_random_w,
                                max_least_w,
                                max_coop_w,
                            });
                        }
                    }
                }
            }
        }
        points
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        for (name, empty) in [
            ("n", self.ns.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("row-num", self.row_nums.is_empty()),
            ("run-num", self.run_nums.is_empty()),
            ("max-random-w", self.max_random_ws.is_empty()),
            ("max-least-w", self.max_least_ws.is_empty()),
            ("max-coop-w", self.max_coop_ws.is_empty()),
        ] {
            if empty {
                return Err(HarnessError::InvalidSweep(format!("empty {name} list")));
            }
        }
        for &n in &self.ns {
            for point in self.grid() {
                self.config_for(n, &point, 0)
                    .validate()
                    .map_err(|e| HarnessError::InvalidSweep(e.to_string()))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct GridPoint {
    row_num: usize,
    run_num: u32,
    max_random_w: f64,
    max_least_w: f64,
    max_coop_w: f64,
}

/// Runs the whole grid. Jobs may execute concurrently; output order is the
/// deterministic job order (n, then grid point, then seed), so the same
/// spec always produces byte-identical CSV content. The millis column is
/// pinned to 0 for that reason — wall time is not reproducible.
pub fn run_sweep(spec: &SweepSpec) -> Result<(Vec<CsvRow>, Vec<WeightsRow>), HarnessError> {
    spec.validate()?;
    let mut jobs = Vec::new();
    for &n in &spec.ns {
        for point in spec.grid() {
            for &seed in &spec.seeds {
                jobs.push((n, point.clone(), seed));
            }
        }
    }
    let results: Vec<(Vec<CsvRow>, Vec<WeightsRow>)> = jobs
        .par_iter()
        .map(|(n, point, seed)| {
            let cfg = spec.config_for(*n, point, *seed);
            let outcome = match engine::solve_sequence(cfg, &mut NoTrace) {
                Ok(outcome) => outcome,
                Err(EngineError::BudgetExhausted(partial)) => partial,
                Err(EngineError::Config(e)) => unreachable!("validated config: {e}"),
            };
            let mut rows = Vec::new();
            let mut wrows = Vec::new();
            for attempt in &outcome.attempts {
                let s = &attempt.stats;
                rows.push(CsvRow {
                    n: *n,
                    seed: *seed,
                    row_num: point.row_num,
                    run_seq: s.run_seq,
                    ticks: s.ticks,
                    millis: 0,
                    deaths: s.deaths,
                    eats: s.eats,
                    restarts: s.restarts_before,
                    solved: s.solved,
                });
                wrows.push(WeightsRow {
                    least_plus_coop: point.max_least_w + point.max_coop_w,
                    n: *n,
                    seed: *seed,
                    row_num: point.row_num,
                    run_seq: s.run_seq,
                    ticks: s.ticks,
                    solved: s.solved,
                });
            }
            (rows, wrows)
        })
        .collect();
    let mut rows = Vec::new();
    let mut wrows = Vec::new();
    for (r, w) in results {
        rows.extend(r);
        wrows.extend(w);
    }
    Ok((rows, wrows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FitError {
    #[error("regression needs at least two points with distinct x values")]
    DegenerateInput,
}

/// Ordinary least squares through the closed-form normal equations.
pub fn linfit(points: &[(f64, f64)]) -> Result<RegressionFit, FitError> {
    if points.len() < 2 || points.iter().all(|p| p.0 == points[0].0) {
        return Err(FitError::DegenerateInput);
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return Err(FitError::DegenerateInput);
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_y = sy / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - (slope * p.0 + intercept)).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RegressionFit {
        slope,
        intercept,
        r_squared,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub row_num: usize,
    pub run_seq: u32,
    pub attempts: usize,
    pub solved: usize,
    /// Mean/median ticks over solved attempts.
    pub mean_ticks: f64,
    pub median_ticks: f64,
    pub total_deaths: u64,
    pub total_eats: u64,
    /// Least-squares fit of mean solved ticks against n, when at least two
    /// distinct n values are present.
    pub fit: Option<RegressionFit>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightBin {
    pub least_plus_coop: f64,
    pub attempts: usize,
    pub mean_ticks: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub total_attempts: usize,
    pub seed_count: usize,
    pub groups: Vec<GroupSummary>,
    pub weight_bins: Vec<WeightBin>,
    pub warnings: Vec<String>,
}

fn median_of(sorted: &[u64]) -> f64 {
    let k = sorted.len();
    if k % 2 == 1 {
        sorted[k / 2] as f64
    } else {
        (sorted[k / 2 - 1] as f64 + sorted[k / 2] as f64) / 2.0
    }
}

/// Summarizes sweep rows per (row_num, run_seq) group: mean and median
/// solved ticks, death/eat totals, and a fit of mean ticks over n. Groups
/// without solved attempts are omitted with a warning. Weight rows, when
/// given, produce the (least_w + coop_w)-keyed mean-runtime table.
pub fn build_report(rows: &[CsvRow], weights: Option<&[WeightsRow]>) -> Report {
    let mut report = Report {
        total_attempts: rows.len(),
        ..Report::default()
    };
    let mut seeds: Vec<u64> = rows.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    report.seed_count = seeds.len();

    let mut groups: BTreeMap<(usize, u32), Vec<&CsvRow>> = BTreeMap::new();
    for row in rows {
        groups.entry((row.row_num, row.run_seq)).or_default().push(row);
    }
    for ((row_num, run_seq), members) in groups {
        let solved: Vec<&&CsvRow> = members.iter().filter(|r| r.solved).collect();
        if solved.is_empty() {
            report.warnings.push(format!(
                "group row_num={row_num} run_seq={run_seq}: no solved attempts, omitted"
            ));
            continue;
        }
        let mut ticks: Vec<u64> = solved.iter().map(|r| r.ticks).collect();
        ticks.sort_unstable();
        let mean_ticks = ticks.iter().sum::<u64>() as f64 / ticks.len() as f64;

        let mut by_n: BTreeMap<usize, Vec<u64>> = BTreeMap::new();
        for r in &solved {
            by_n.entry(r.n).or_default().push(r.ticks);
        }
        let fit = if by_n.len() >= 2 {
            let points: Vec<(f64, f64)> = by_n
                .iter()
                .map(|(n, t)| {
                    (*n as f64, t.iter().sum::<u64>() as f64 / t.len() as f64)
                })
                .collect();
            linfit(&points).ok()
        } else {
            None
        };

        report.groups.push(GroupSummary {
            row_num,
            run_seq,
            attempts: members.len(),
            solved: solved.len(),
            mean_ticks,
            median_ticks: median_of(&ticks),
            total_deaths: members.iter().map(|r| r.deaths).sum(),
            total_eats: members.iter().map(|r| r.eats).sum(),
            fit,
        });
    }

    if let Some(weights) = weights {
        // Positive f64 keys sort correctly through their bit patterns.
        let mut bins: BTreeMap<u64, Vec<&WeightsRow>> = BTreeMap::new();
        for w in weights.iter().filter(|w| w.solved) {
            bins.entry(w.least_plus_coop.to_bits()).or_default().push(w);
        }
        for (bits, members) in bins {
            let mean_ticks =
                members.iter().map(|w| w.ticks).sum::<u64>() as f64 / members.len() as f64;
            report.weight_bins.push(WeightBin {
                least_plus_coop: f64::from_bits(bits),
                attempts: members.len(),
                mean_ticks,
            });
        }
    }
    report
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "report: {} attempts over {} distinct seeds",
            self.total_attempts, self.seed_count
        )?;
        for g in &self.groups {
            writeln!(
                f,
                "group row_num={} run_seq={}: attempts={} solved={} mean_ticks={:.3} \
                 median_ticks={:.1} deaths={} eats={}",
                g.row_num,
                g.run_seq,
                g.attempts,
                g.solved,
                g.mean_ticks,
                g.median_ticks,
                g.total_deaths,
                g.total_eats
            )?;
            if let Some(fit) = &g.fit {
                writeln!(
                    f,
                    "  fit: ticks ~ {:.6}*n + {:.6} (r2={:.4})",
                    fit.slope, fit.intercept, fit.r_squared
                )?;
            }
        }
        if !self.weight_bins.is_empty() {
            writeln!(f, "(least_w + coop_w) bins over solved attempts:")?;
            for b in &self.weight_bins {
                writeln!(
                    f,
                    "  {:>8.1}: attempts={} mean_ticks={:.3}",
                    b.least_plus_coop, b.attempts, b.mean_ticks
                )?;
            }
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<CsvRow> {
        vec![
            CsvRow {
                n: 8,
                seed: 1,
                row_num: 3,
                run_seq: 1,
                ticks: 40,
                millis: 0,
                deaths: 5,
                eats: 2,
                restarts: 0,
                solved: true,
            },
            CsvRow {
                n: 8,
                seed: 2,
                row_num: 3,
                run_seq: 1,
                ticks: 60,
                millis: 0,
                deaths: 7,
                eats: 1,
                restarts: 1,
                solved: false,
            },
        ]
    }

    #[test]
    fn csv_round_trip_preserves_rows() {
        let rows = sample_rows();
        let mut buf = Vec::new();
        write_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(read_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn csv_schema_is_bit_exact() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &sample_rows()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "n,seed,row_num,run_seq,ticks,millis,deaths,eats,restarts,solved\n\
             8,1,3,1,40,0,5,2,0,true\n\
             8,2,3,1,60,0,7,1,1,false\n"
        );
    }

    #[test]
    fn foreign_headers_are_rejected() {
        let bad = "n,seed,row_num,run_seq,ticks,millis,deaths,eats,restarts,ok\n";
        assert!(matches!(
            read_csv(bad.as_bytes()),
            Err(HarnessError::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn linfit_examples() {
        let fit = linfit(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]).unwrap();
        assert_eq!(fit.slope, 2.0);
        assert_eq!(fit.intercept, 1.0);
        assert_eq!(fit.r_squared, 1.0);

        let fit = linfit(&[(0.0, 0.0), (1.0, 1.0)]).unwrap();
        assert_eq!(fit.slope, 1.0);
        assert_eq!(fit.intercept, 0.0);

        let fit = linfit(&[(1.0, 2.0), (2.0, 4.0), (3.0, 7.0)]).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-9);
        assert!((fit.intercept - (-2.0 / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn linfit_rejects_degenerate_input() {
        assert_eq!(linfit(&[(1.0, 1.0)]), Err(FitError::DegenerateInput));
        assert_eq!(
            linfit(&[(2.0, 1.0), (2.0, 5.0)]),
            Err(FitError::DegenerateInput)
        );
    }

    #[test]
    fn linfit_matches_mean_centered_form() {
        // Same least squares through a different arithmetic path.
        let mut points = Vec::new();
        let mut x = 3.0f64;
        for i in 0..40 {
            x = (x * 1.3 + i as f64).rem_euclid(97.0);
            let y = (x * 2.7 - 31.0).rem_euclid(53.0);
            points.push((x, y));
        }
        let fit = linfit(&points).unwrap();
        let mx = points.iter().map(|p| p.0).sum::<f64>() / points.len() as f64;
        let my = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        assert!((fit.slope - slope).abs() < 1e-9);
        assert!((fit.intercept - intercept).abs() < 1e-9);
    }

    #[test]
    fn report_recovers_exact_linear_data() {
        // ticks = 3n + 7 for run_seq 1, ticks = 2n + 1 for run_seq 2.
        let mut rows = Vec::new();
        for n in [10usize, 20, 30] {
            for seed in 0..4u64 {
                rows.push(CsvRow {
                    n,
                    seed,
                    row_num: 3,
                    run_seq: 1,
                    ticks: (3 * n + 7) as u64,
                    millis: 0,
                    deaths: 1,
                    eats: 0,
                    restarts: 0,
                    solved: true,
                });
                rows.push(CsvRow {
                    n,
                    seed,
                    row_num: 3,
                    run_seq: 2,
                    ticks: (2 * n + 1) as u64,
                    millis: 0,
                    deaths: 0,
                    eats: 0,
                    restarts: 0,
                    solved: true,
                });
            }
        }
        let report = build_report(&rows, None);
        assert_eq!(report.seed_count, 4);
        assert_eq!(report.groups.len(), 2);
        let g1 = &report.groups[0];
        let fit = g1.fit.as_ref().unwrap();
        assert_eq!(fit.slope, 3.0);
        assert_eq!(fit.intercept, 7.0);
        assert_eq!(fit.r_squared, 1.0);
        let g2 = &report.groups[1];
        let fit = g2.fit.as_ref().unwrap();
        assert_eq!(fit.slope, 2.0);
        assert_eq!(fit.intercept, 1.0);
    }

    #[test]
    fn unsolved_groups_are_omitted_with_a_warning() {
        let mut rows = sample_rows();
        for r in &mut rows {
            r.solved = false;
        }
        let report = build_report(&rows, None);
        assert!(report.groups.is_empty());
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn weight_bins_group_by_exact_value() {
        let rows = sample_rows();
        let weights = vec![
            WeightsRow {
                least_plus_coop: 110.0,
                n: 8,
                seed: 1,
                row_num: 3,
                run_seq: 1,
                ticks: 40,
                solved: true,
            },
            WeightsRow {
                least_plus_coop: 110.0,
                n: 8,
                seed: 2,
                row_num: 3,
                run_seq: 1,
                ticks: 60,
                solved: true,
            },
            WeightsRow {
                least_plus_coop: 220.0,
                n: 8,
                seed: 1,
                row_num: 3,
                run_seq: 1,
                ticks: 20,
                solved: true,
            },
        ];
        let report = build_report(&rows, Some(&weights));
        assert_eq!(
            report.weight_bins,
            vec![
                WeightBin {
                    least_plus_coop: 110.0,
                    attempts: 2,
                    mean_ticks: 50.0
                },
                WeightBin {
                    least_plus_coop: 220.0,
                    attempts: 1,
                    mean_ticks: 20.0
                },
            ]
        );
    }

    #[test]
    fn sweep_is_deterministic_and_row_counted() {
        let spec = SweepSpec {
            ns: vec![6],
            seeds: vec![0, 1],
            row_nums: vec![2],
            run_nums: vec![2],
            ..SweepSpec::default()
        };
        let (rows_a, weights_a) = run_sweep(&spec).unwrap();
        let (rows_b, weights_b) = run_sweep(&spec).unwrap();
        assert_eq!(rows_a, rows_b);
        assert_eq!(weights_a, weights_b);
        // Clean success yields exactly run_num rows per (n, seed).
        for seed in [0, 1] {
            let per_seed: Vec<&CsvRow> =
                rows_a.iter().filter(|r| r.seed == seed).collect();
            assert!(per_seed.len() >= 2);
            if per_seed.iter().all(|r| r.solved) {
                assert_eq!(per_seed.len(), 2);
            }
        }
        for row in &rows_a {
            assert_eq!(row.millis, 0);
        }
    }

    #[test]
    fn sweep_validation_catches_bad_grids() {
        let spec = SweepSpec {
            ns: vec![4],
            row_nums: vec![4], // row_num must stay below n
            ..SweepSpec::default()
        };
        assert!(matches!(
            run_sweep(&spec),
            Err(HarnessError::InvalidSweep(_))
        ));
    }
}
