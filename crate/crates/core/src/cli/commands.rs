use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{Algorithm, DiagnoseOptions, ExperimentConfig, Sequence};
use super::io::{self, DIAGNOSTICS_JSON, SUMMARY_JSON};
use super::registry;
use crate::apps::{cadzow_run, em_run, CadzowProblem};
use crate::diagnostics::{
    check_four_point, check_three_point, estimate_gap, fit_angle_exponent, fit_rate, holder_check, predicted_rate,
    reach_along, AngleFit, EstimateReport, Gap, RateFit, RateOptions, RatePrediction, Reach,
};
use crate::engine::{run_alternating, run_averaged, run_douglas_rachford, run_local_alternating, StopReason, Trace};
use crate::error::{Error, Result};
use crate::phase::{gs_run, Signal};
use crate::primitives::{Matrix, Point};
use crate::sets::{MagnitudeSpec, SetDescriptor};

/// Result of one diagnostic: its report, or the reason it could not be
/// computed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome<T> {
    Ok(T),
    Failed { error: String },
}

impl<T> Outcome<T> {
    fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => Outcome::Failed { error: e.to_string() },
        }
    }

    pub fn ok(&self) -> Option<&T> {
        match self {
            Outcome::Ok(v) => Some(v),
            Outcome::Failed { .. } => None,
        }
    }

    fn error(&self) -> Option<&str> {
        match self {
            Outcome::Ok(_) => None,
            Outcome::Failed { error } => Some(error),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub options: DiagnoseOptions,
    pub gap: Outcome<Gap>,
    pub angle: Option<Outcome<AngleFit>>,
    pub prediction: Option<Outcome<RatePrediction>>,
    pub rate: Option<Outcome<RateFit>>,
    pub three_point: Option<Outcome<EstimateReport>>,
    pub four_point: Option<Outcome<EstimateReport>>,
    pub holder: Option<Outcome<EstimateReport>>,
}

impl DiagnosticsReport {
    /// Names and messages of the checks that could not be computed.
    pub fn failures(&self) -> Vec<(&'static str, &str)> {
        [
            ("gap", self.gap.error()),
            ("angle", self.angle.as_ref().and_then(Outcome::error)),
            ("prediction", self.prediction.as_ref().and_then(Outcome::error)),
            ("rate", self.rate.as_ref().and_then(Outcome::error)),
            ("three-point", self.three_point.as_ref().and_then(Outcome::error)),
            ("four-point", self.four_point.as_ref().and_then(Outcome::error)),
            ("holder", self.holder.as_ref().and_then(Outcome::error)),
        ]
        .into_iter()
        .filter_map(|(name, e)| e.map(|e| (name, e)))
        .collect()
    }
}

pub fn diagnose_trace(trace: &Trace, opts: &DiagnoseOptions) -> DiagnosticsReport {
    let gap = Outcome::from_result(estimate_gap(trace, opts.tail_fraction, opts.cluster_radius));
    let r_star = gap.ok().map(|g| g.r_star);
    let need_angle = opts.angle || opts.three_point_fitted;
    let angle_fit = need_angle.then(|| match r_star {
        Some(r) => fit_angle_exponent(trace, r, opts.r_floor),
        None => Err(Error::InsufficientData {
            check: "angle",
            needed: 1,
            found: 0,
        }),
    });
    let prediction = match (&angle_fit, r_star) {
        (Some(Ok(fit)), Some(r)) if opts.angle => Some(Outcome::from_result(predicted_rate(fit.theta, r))),
        _ => None,
    };
    let rate = opts.rate.then(|| {
        let series: Vec<Point> = match opts.rate_sequence {
            Sequence::A => trace.a_points().cloned().collect(),
            Sequence::B => trace.b_points().cloned().collect(),
        };
        let ro = RateOptions {
            drop_tail: opts.drop_tail,
            window: opts.rate_window,
            reference: None,
        };
        Outcome::from_result(fit_rate(&series, &ro))
    });
    let mut three_point = opts
        .three_point
        .map(|[c, g]| Outcome::from_result(check_three_point(trace, c, g)));
    if opts.three_point_fitted && three_point.is_none() {
        three_point = angle_fit.as_ref().map(|fit| {
            Outcome::from_result(match fit {
                Ok(f) => check_three_point(trace, f.gamma / 4.0, f.gamma),
                Err(e) => Err(Error::invalid(format!("three-point needs the angle fit: {e}"))),
            })
        });
    }
    DiagnosticsReport {
        options: opts.clone(),
        angle: if opts.angle {
            angle_fit.map(Outcome::from_result)
        } else {
            None
        },
        prediction,
        rate,
        three_point,
        four_point: opts
            .four_point
            .map(|l| Outcome::from_result(check_four_point(trace, l))),
        holder: opts
            .holder
            .map(|[c, s]| Outcome::from_result(holder_check(trace, c, s, r_star.unwrap_or(0.0)))),
        gap,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub algorithm: Algorithm,
    pub stop_reason: StopReason,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub diagnostics: DiagnosticsReport,
    /// Algorithm-specific results.
    #[serde(default)]
    pub extra: serde_json::Value,
}

pub struct RunOutput {
    pub trace: Trace,
    pub summary: RunSummary,
}

fn first_sets(cfg: &ExperimentConfig) -> (&SetDescriptor, &SetDescriptor) {
    (&cfg.sets[0], &cfg.sets[1])
}

/// Executes an experiment without writing files.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let tol = &cfg.tolerances;
    let tie = &cfg.tie;
    let clock = Instant::now();
    let start = || cfg.start.clone().expect("validated");
    let (trace, extra) = match cfg.algorithm {
        Algorithm::Ap => {
            let (a, b) = first_sets(cfg);
            (run_alternating(a, b, &start(), tol, tie)?, serde_json::Value::Null)
        }
        Algorithm::LocalAp => {
            let (a, b) = first_sets(cfg);
            let curve = a.as_curve().expect("validated");
            let param = cfg.start_param.expect("validated");
            (
                run_local_alternating(curve, b, &param, tol, tie)?,
                serde_json::Value::Null,
            )
        }
        Algorithm::Dr => {
            let (a, b) = first_sets(cfg);
            let dr = run_douglas_rachford(a, b, &start(), tol, tie)?;
            let last_shadow = dr.shadow_a.last().cloned();
            (dr.to_trace(tol), json!({ "final_shadow_a": last_shadow }))
        }
        Algorithm::Averaged => (run_averaged(&cfg.sets, &start(), tol, tie)?, serde_json::Value::Null),
        Algorithm::Gs => {
            let spec = cfg.gs.as_ref().expect("validated");
            let m = MagnitudeSpec::new(spec.m.clone())?;
            let run = gs_run(&m, &spec.prior, &Signal::new(start())?, tol, tie)?;
            let extra = json!({
                "start_distance": run.start_distance,
                "better_than_zero": run.better_than_zero,
            });
            (run.trace, extra)
        }
        Algorithm::Em => {
            let p = cfg.em.as_ref().expect("validated");
            let run = em_run(p, &start(), tol)?;
            let extra = json!({ "x": run.state.x, "spread": run.spread });
            (run.trace, extra)
        }
        Algorithm::Cadzow => {
            let spec = cfg.cadzow.expect("validated");
            let problem = CadzowProblem {
                structure: cfg.sets[0].clone(),
                rank: spec.rank,
                start: Matrix::new(spec.rows, spec.cols, start().into_vec())?,
            };
            (cadzow_run(&problem, tol, tie)?, serde_json::Value::Null)
        }
    };
    let wall_time_s = clock.elapsed().as_secs_f64();
    let summary = RunSummary {
        name: cfg.name.clone(),
        algorithm: cfg.algorithm,
        stop_reason: trace.stop_reason,
        iterations: trace.len(),
        wall_time_s,
        diagnostics: diagnose_trace(&trace, &cfg.diagnostics),
        extra,
    };
    Ok(RunOutput { trace, summary })
}

pub fn write_outputs(dir: &Path, out: &RunOutput) -> Result<()> {
    io::write_trace(dir, &out.trace)?;
    io::write_json(&dir.join(SUMMARY_JSON), &out.summary)
}

pub fn exit_code(stop: StopReason) -> i32 {
    match stop {
        StopReason::Diverged => 2,
        _ => 0,
    }
}

fn output_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name))
}

/// Runs a config and writes its outputs. Returns the stop reason.
pub fn run_config(mut cfg: ExperimentConfig, out: Option<&Path>) -> Result<(PathBuf, RunSummary)> {
    cfg.apply_env_seed()?;
    let dir = output_dir(&cfg, out);
    let result = run_experiment(&cfg)?;
    write_outputs(&dir, &result)?;
    Ok((dir, result.summary))
}

pub fn cmd_run(config_path: &Path, out: Option<&Path>) -> Result<i32> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let cfg = ExperimentConfig::from_json(&text)?;
    let (dir, summary) = run_config(cfg, out)?;
    eprintln!(
        "{}: {} after {} blocks, outputs in {}",
        summary.name,
        summary.stop_reason.as_str(),
        summary.iterations,
        dir.display()
    );
    Ok(exit_code(summary.stop_reason))
}

/// Recomputes diagnostics from a run directory. Without `opts` the options
/// recorded in its summary are reused.
pub fn cmd_diagnose(dir: &Path, opts: Option<DiagnoseOptions>) -> Result<DiagnosticsReport> {
    let summary: Option<RunSummary> = std::fs::read_to_string(dir.join(SUMMARY_JSON))
        .ok()
        .map(|t| serde_json::from_str(&t))
        .transpose()?;
    let stop = summary.as_ref().map_or(StopReason::MaxIter, |s| s.stop_reason);
    let trace = io::read_trace(dir, stop)?;
    let opts = opts
        .or_else(|| summary.map(|s| s.diagnostics.options))
        .unwrap_or_default();
    let report = diagnose_trace(&trace, &opts);
    io::write_json(&dir.join(DIAGNOSTICS_JSON), &report)?;
    if let Some((name, msg)) = report.failures().first() {
        return Err(Error::Config(format!("{name}: {msg}")));
    }
    Ok(report)
}

pub fn read_set(spec: &str) -> Result<SetDescriptor> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec).map_err(|e| Error::Config(format!("cannot read {spec}: {e}")))?
    };
    SetDescriptor::from_json(&text)
}

pub fn cmd_reach(set: &str, point: &str, direction: &str, r_max: f64, tol: f64) -> Result<Reach> {
    let set = read_set(set)?;
    let b = io::parse_point(point)?;
    let d = io::parse_point(direction)?;
    let n = d.norm();
    if n == 0.0 {
        return Err(Error::invalid("direction must be nonzero"));
    }
    reach_along(&set, &b, &d.scale(1.0 / n), r_max, tol)
}

pub fn format_reach(r: &Reach) -> String {
    match r {
        Reach::Finite { value } => io::fmt_f64(*value),
        Reach::Infinite { r_max } => format!("infinite(>={})", io::fmt_f64(*r_max)),
    }
}

/// Runs presets into `out/<name>`, up to `jobs` at a time. Results keep
/// the order of `names`.
pub fn run_presets(names: &[String], out: &Path, jobs: usize) -> Vec<(String, Result<RunSummary>)> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunSummary>>>> = Mutex::new((0..names.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, names.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(name) = names.get(i) else { break };
                let r = registry::preset(name)
                    .and_then(|cfg| run_config(cfg, Some(&out.join(name))))
                    .map(|(_, s)| s);
                results.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });
    names
        .iter()
        .cloned()
        .zip(
            results
                .into_inner()
                .expect("threads joined")
                .into_iter()
                .map(|r| r.expect("every index ran")),
        )
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagnose_reproduces_summary() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = registry::preset("parabola-gap").unwrap();
        let (_, summary) = run_config(cfg, Some(dir.path())).unwrap();
        let report = cmd_diagnose(dir.path(), None).unwrap();
        assert_eq!(
            serde_json::to_string(&report).unwrap(),
            serde_json::to_string(&summary.diagnostics).unwrap()
        );
    }

    #[test]
    fn empty_trace_fails_diagnose() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join(io::TRACE_CSV),
            "k,r,step_a,step_b,alpha,beta,multivalued_hit\n",
        )
        .unwrap();
        std::fs::write(dir.path().join(io::POINTS_JSONL), "{\"k\":0,\"a\":[0.0],\"b\":[0.0]}\n").unwrap();
        let err = cmd_diagnose(dir.path(), None).unwrap_err();
        assert!(err.to_string().contains("gap"), "{err}");
    }

    #[test]
    fn reach_command() {
        let circle = r#"{"family": "sphere-product", "m": [1.0]}"#;
        let r = cmd_reach(circle, "1,0", "-2,0", 100.0, 1e-10).unwrap();
        assert!((r.value() - 1.0).abs() < 1e-8);
        assert!(format_reach(&cmd_reach(circle, "1,0", "1,0", 100.0, 1e-10).unwrap()).starts_with("infinite"));
        assert!(cmd_reach(circle, "2,0", "1,0", 100.0, 1e-10).is_err());
    }
}
