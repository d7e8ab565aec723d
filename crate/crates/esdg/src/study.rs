//! Drivers for the convergence study, the entropy study and plain runs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use esdg_core::timeint::{self, RecordInterval};
use esdg_core::{
    DGField, RhsDiagnostics, Semidiscretization, Stepping, SurfaceFluctuation, TimeSeries,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{fluctuation_label, RunConfig};
use crate::error::{AppError, AppResult};
use crate::norms::{self, EocReport};
use crate::output::{self, BlendLogWriter};
use crate::scenario::{self, Scenario, ScenarioKind};

/// Largest manufactured-source residual over 200 seeded random points.
pub fn manufactured_residual_check(p: &esdg_core::SveParams) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..200)
        .map(|_| {
            let x = rng.gen_range(0.0..std::f64::consts::SQRT_2);
            let t = rng.gen_range(0.0..1.0);
            scenario::manufactured_residual(p, x, t)
                .iter()
                .fold(0.0f64, |m, r| m.max(r.abs()))
        })
        .fold(0.0, f64::max)
}

/// Result of one integration.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub semi: Semidiscretization,
    pub initial: DGField,
    pub field: DGField,
    pub series: TimeSeries,
}

/// Integrates `scenario` on `elements` elements with the settings of `cfg`.
pub fn run_case(cfg: &RunConfig, scenario: &Scenario, elements: usize) -> AppResult<RunResult> {
    let semi = cfg.semidiscretization(scenario, elements)?;
    let initial = scenario.initial_field(&semi)?;
    let (field, series) = timeint::integrate(&semi, &initial, 0.0, &cfg.time, |_, _, _| Ok(()))?;
    Ok(RunResult {
        semi,
        initial,
        field,
        series,
    })
}

/// Manufactured-solution errors at `cfg.time.t_end` for every resolution of
/// the study.
pub fn run_convergence(cfg: &RunConfig) -> AppResult<EocReport> {
    let dt = match cfg.time.stepping {
        Stepping::Fixed(dt) => dt,
        Stepping::Cfl(_) => {
            return Err(AppError::config("time.dt", "the convergence study needs a fixed time step"))
        }
    };
    let scenario = cfg.scenario();
    if !scenario.has_exact() {
        return Err(AppError::config(
            "scheme.scenario",
            format!("`{}` has no exact solution to converge to", scenario.kind),
        ));
    }
    if scenario.kind == ScenarioKind::Manufactured {
        let r = manufactured_residual_check(&scenario.params);
        if r > 1e-6 {
            return Err(AppError::config(
                "model",
                format!("manufactured source fails its residual check ({r:e})"),
            ));
        }
    }
    let mut quiet = cfg.clone();
    quiet.time.record_interval = RecordInterval::Steps(usize::MAX);
    let mut report = EocReport::new(cfg.degree, dt, cfg.time.t_end);
    for &k in &cfg.study.resolutions {
        match run_case(&quiet, &scenario, k) {
            Ok(run) => {
                let exact = |x, t| scenario.exact_state(x, t).expect("checked above");
                report.push(k, norms::l2_error(&run.semi, &run.field, exact, cfg.time.t_end));
            }
            Err(e) => {
                return Err(AppError::PartialConvergence {
                    report,
                    source: Box::new(e),
                })
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct EntropyStudyRow {
    pub fluctuation: String,
    /// `max_t |(1/|Omega|) int S_t dx|` over every step.
    pub max_entropy_rate: Option<f64>,
    /// Mean entropy density of the initial field, the scale for relative
    /// tolerances.
    pub entropy_scale: f64,
    /// Median wall time of one right-hand side evaluation in seconds.
    pub median_rhs_seconds: Option<f64>,
    pub steps: usize,
    pub error: Option<String>,
}

/// Median wall time of `calls` right-hand side evaluations after `warmup`.
pub fn time_rhs(semi: &Semidiscretization, field: &DGField, warmup: usize, calls: usize) -> AppResult<f64> {
    let mut out = semi.zero_field();
    let mut diag = RhsDiagnostics::default();
    for _ in 0..warmup {
        semi.rhs_into(field, 0.0, &mut out, &mut diag)?;
    }
    let mut samples = Vec::with_capacity(calls);
    for _ in 0..calls.max(1) {
        let start = Instant::now();
        semi.rhs_into(field, 0.0, &mut out, &mut diag)?;
        samples.push(start.elapsed().as_secs_f64());
    }
    samples.sort_by(f64::total_cmp);
    Ok(samples[samples.len() / 2])
}

/// Runs the scenario with entropy-conservative volume and surface terms for
/// each fluctuation in the study list.
pub fn run_entropy_study(cfg: &RunConfig) -> AppResult<Vec<EntropyStudyRow>> {
    let scenario = cfg.scenario();
    let length = scenario.domain_length();
    let mut rows = Vec::new();
    for ec in &cfg.study.fluctuations {
        let mut run_cfg = cfg.clone();
        run_cfg.volume = ec.clone();
        run_cfg.surface = SurfaceFluctuation::Ec;
        run_cfg.time.record_interval = RecordInterval::Steps(1);
        let semi = run_cfg.semidiscretization(&scenario, cfg.elements)?;
        let initial = scenario.initial_field(&semi)?;
        let entropy_scale = (semi.total_entropy(&initial)? / length).abs().max(1.0);
        let mut row = EntropyStudyRow {
            fluctuation: fluctuation_label(ec),
            max_entropy_rate: None,
            entropy_scale,
            median_rhs_seconds: None,
            steps: 0,
            error: None,
        };
        match time_rhs(&semi, &initial, cfg.study.warmup_calls, cfg.study.timing_calls) {
            Ok(t) => row.median_rhs_seconds = Some(t),
            Err(e) => row.error = Some(e.to_string()),
        }
        if row.error.is_none() {
            match timeint::integrate(&semi, &initial, 0.0, &run_cfg.time, |_, _, _| Ok(())) {
                Ok((_, series)) => {
                    row.steps = series.steps;
                    row.max_entropy_rate = Some(
                        series
                            .rows
                            .iter()
                            .fold(0.0f64, |m, r| m.max((r.entropy_rate / length).abs())),
                    );
                }
                Err(e) => row.error = Some(e.to_string()),
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn entropy_study_table(rows: &[EntropyStudyRow]) -> String {
    let mut s = format!(
        "{:<14} {:>16} {:>12} {:>8}  {}\n",
        "fluctuation", "max rate", "rhs [us]", "steps", "status"
    );
    for r in rows {
        let rate = r.max_entropy_rate.map_or("-".into(), |v| format!("{v:.3e}"));
        let cost = r
            .median_rhs_seconds
            .map_or("-".into(), |v| format!("{:.1}", v * 1e6));
        let status = r.error.as_deref().unwrap_or("ok");
        s.push_str(&format!(
            "{:<14} {:>16} {:>12} {:>8}  {}\n",
            r.fluctuation, rate, cost, r.steps, status
        ));
    }
    s
}

/// Largest nodal change of `(h + b, hv, b)` between two fields.
pub fn max_deviation(a: &DGField, b: &DGField) -> [f64; 3] {
    a.values().iter().zip(b.values()).fold([0.0f64; 3], |m, (u, v)| {
        [
            m[0].max(((u.h + u.b) - (v.h + v.b)).abs()),
            m[1].max((u.hv - v.hv).abs()),
            m[2].max((u.b - v.b).abs()),
        ]
    })
}

/// L2 distances between solutions on consecutive resolutions, each coarse
/// solution measured on the next finer mesh. Runs are independent and
/// execute concurrently.
pub fn self_convergence(cfg: &RunConfig, resolutions: &[usize]) -> AppResult<Vec<[f64; 3]>> {
    let scenario = cfg.scenario();
    let mut quiet = cfg.clone();
    quiet.time.record_interval = RecordInterval::Steps(usize::MAX);
    let runs: Vec<RunResult> = resolutions
        .par_iter()
        .map(|&k| run_case(&quiet, &scenario, k))
        .collect::<AppResult<_>>()?;
    Ok(runs
        .windows(2)
        .map(|w| norms::l2_difference(&w[0].semi, &w[0].field, &w[1].semi, &w[1].field))
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub scenario: String,
    pub elements: usize,
    pub degree: usize,
    pub final_time: f64,
    pub steps: usize,
    pub initial_entropy: f64,
    pub final_entropy: f64,
    /// Largest nodal change of `(h + b, hv, b)` from the initial field.
    pub max_deviation: [f64; 3],
    /// Error against the exact solution where one exists.
    pub l2_error: Option<[f64; 3]>,
    pub snapshots: Vec<PathBuf>,
}

/// Runs a configuration and writes snapshots, the time series, an optional
/// blending log and a JSON summary into `dir`.
pub fn run_simulation(cfg: &RunConfig, dir: &Path) -> AppResult<(RunResult, SimulationSummary)> {
    let scenario = cfg.scenario();
    let semi = cfg.semidiscretization(&scenario, cfg.elements)?;
    let initial = scenario.initial_field(&semi)?;
    std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;

    let mut snapshots: Vec<(f64, PathBuf)> = Vec::new();
    let mut next_snapshot = 0.0;
    let mut blend_log = if cfg.output.log_blending {
        Some(BlendLogWriter::create(&dir.join("blending.csv"))?)
    } else {
        None
    };
    let mut io_error: Option<AppError> = None;
    let mut diag = RhsDiagnostics::with_log();
    let mut scratch = semi.zero_field();
    let t_end = cfg.time.t_end;

    let result = timeint::integrate(&semi, &initial, 0.0, &cfg.time, |_, t, field| {
        let due = t >= next_snapshot || t == t_end;
        if due {
            let path = dir.join(format!("snapshot_{:05}.csv", snapshots.len()));
            if let Err(e) = output::write_snapshot(&path, &semi, field) {
                io_error.get_or_insert(e);
            }
            snapshots.push((t, path));
            next_snapshot = match cfg.output.snapshot_interval {
                Some(dt) => next_snapshot + dt * ((t - next_snapshot) / dt).floor().max(0.0) + dt,
                None => f64::INFINITY,
            };
        }
        if let Some(w) = blend_log.as_mut() {
            semi.rhs_into(field, t, &mut scratch, &mut diag)?;
            if let Err(e) = w.write(t, diag.blend_log.as_deref().unwrap_or(&[])) {
                io_error.get_or_insert(e);
            }
        }
        Ok(())
    });
    if let Some(e) = io_error {
        return Err(e);
    }
    let (field, series) = result?;
    if let Some(w) = blend_log {
        w.finish()?;
    }

    output::write_time_series(&dir.join("time_series.csv"), &series)?;
    let index: String = std::iter::once("index,t,file\n".to_string())
        .chain(snapshots.iter().enumerate().map(|(i, (t, p))| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            format!("{i},{t:.16e},{name}\n")
        }))
        .collect();
    output::write_text(&dir.join("snapshots.csv"), &index)?;

    let summary = SimulationSummary {
        scenario: scenario.kind.to_string(),
        elements: cfg.elements,
        degree: cfg.degree,
        final_time: series.rows.last().map_or(0.0, |r| r.t),
        steps: series.steps,
        initial_entropy: semi.total_entropy(&initial)?,
        final_entropy: semi.total_entropy(&field)?,
        max_deviation: max_deviation(&field, &initial),
        l2_error: scenario
            .has_exact()
            .then(|| norms::l2_error(&semi, &field, |x, t| scenario.exact_state(x, t).unwrap(), t_end)),
        snapshots: snapshots.into_iter().map(|(_, p)| p).collect(),
    };
    output::write_text(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    Ok((
        RunResult {
            semi,
            initial,
            field,
            series,
        },
        summary,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    #[test]
    fn residual_check_passes_for_defaults() {
        assert!(manufactured_residual_check(&esdg_core::SveParams::default()) <= 1e-6);
    }

    #[test]
    fn single_resolution_has_no_orders() {
        let mut cfg = RunConfig::defaults(ScenarioKind::Manufactured);
        cfg.study.resolutions = vec![4];
        cfg.time.t_end = 0.01;
        let r = run_convergence(&cfg).unwrap();
        assert_eq!(r.resolutions, vec![4]);
        assert!(r.eoc.is_empty());
    }

    #[test]
    fn convergence_rejects_cfl_stepping_and_missing_exact() {
        let mut cfg = RunConfig::defaults(ScenarioKind::Manufactured);
        cfg.time.stepping = Stepping::Cfl(0.5);
        assert_eq!(run_convergence(&cfg).unwrap_err().exit_code(), 1);
        let cfg = RunConfig::defaults(ScenarioKind::Channel);
        assert!(run_convergence(&RunConfig {
            time: esdg_core::TimeIntegrationConfig::new(Default::default(), Stepping::Fixed(0.1), 1.0),
            ..cfg
        })
        .is_err());
    }

    #[test]
    fn failing_run_returns_partial_report() {
        let mut cfg = RunConfig::defaults(ScenarioKind::Manufactured);
        cfg.study.resolutions = vec![2, 4];
        cfg.time.t_end = 2.0;
        // far beyond the stability limit on the finer mesh
        cfg.time.stepping = Stepping::Fixed(0.05);
        match run_convergence(&cfg) {
            Err(AppError::PartialConvergence { report, .. }) => assert!(report.resolutions.len() < 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn well_balanced_run_writes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::defaults(ScenarioKind::WellBalanced);
        cfg.time.t_end = 0.2;
        cfg.output.snapshot_interval = Some(0.1);
        cfg.output.log_blending = true;
        let (run, summary) = run_simulation(&cfg, dir.path()).unwrap();
        assert_eq!(summary.steps, 10);
        assert_eq!(summary.snapshots.len(), 3);
        assert!(summary.max_deviation.iter().all(|&d| d <= 1e-13));
        let back = output::read_snapshot(&summary.snapshots[2]).unwrap();
        assert_eq!(back.len(), run.field.values().len());
        assert!(back.iter().zip(run.field.values()).all(|((_, a), b)| a == b));
        let ts = output::read_time_series(&dir.path().join("time_series.csv")).unwrap();
        assert_eq!(ts.last().unwrap().t, 0.2);
        assert!(dir.path().join("blending.csv").exists());
        assert!(dir.path().join("summary.json").exists());
    }
}
