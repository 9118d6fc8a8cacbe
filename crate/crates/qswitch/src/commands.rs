//! Subcommand bodies. Each returns a JSON summary for stdout or an
//! [`Error`] that carries its exit code.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::{info, warn};
use qswitch_core::plant::{generate_adt_signal, verify_adt, DwellBound, ModeId, SignalGenerator};
use qswitch_core::simulator::Outcome;
use qswitch_core::{assess_design, monitor_invariants, simulate, DesignCertificate, Scenario};
use serde_json::{json, Value};

use crate::output;
use crate::scenario::{ScenarioFile, SignalSpec, SwitchSpec};
use crate::Error;

/// Scenario with the published two-mode parameter set.
pub const PUBLISHED_SCENARIO: &str = include_str!("../scenarios/paper_sec5.json");

/// Published design constants: `(name, value)`.
pub const PUBLISHED_CONSTANTS: [(&str, f64); 4] = [
    ("T", 0.6025),
    ("Omega", 0.9063),
    ("c", 1.9867),
    ("tau_a_min", 2.0744),
];

/// Certificate that clears every design inequality, including the declared
/// dwell time.
pub fn feasible_certificate(sc: &Scenario) -> Result<DesignCertificate, Error> {
    let cert = assess_design(&sc.plant, &sc.inputs)?;
    if let Some(v) = cert.violations(&sc.inputs).into_iter().next() {
        return Err(Error::Infeasible(v));
    }
    Ok(cert)
}

pub fn certificate(path: &Path) -> Result<(Value, Option<Error>), Error> {
    let loaded = ScenarioFile::read(path)?.load()?;
    let sc = &loaded.scenario;
    let cert = assess_design(&sc.plant, &sc.inputs)?;
    let violation = cert.violations(&sc.inputs).into_iter().next();
    Ok((
        output::certificate_json(&cert, &sc.inputs),
        violation.map(Error::Infeasible),
    ))
}

#[derive(Debug, Clone, Default)]
pub struct SimulateOptions {
    pub out: Option<PathBuf>,
    pub monitor: bool,
    pub h: Option<f64>,
    pub horizon: Option<f64>,
}

fn default_out(path: &Path) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    PathBuf::from(format!("{stem}.csv"))
}

/// Runs one scenario file and writes the trajectory, event log and report.
pub fn simulate_file(path: &Path, opts: &SimulateOptions) -> Result<Value, Error> {
    let loaded = ScenarioFile::read(path)?.load_with(opts.h, opts.horizon, None)?;
    let sc = &loaded.scenario;
    let cert = feasible_certificate(sc)?;
    if let Err(v) = verify_adt(&sc.signal, &sc.inputs.dwell, sc.horizon) {
        warn!(
            "{}: signal breaks the declared dwell bound on [{}, {}] ({} switches, {} allowed)",
            path.display(),
            v.s,
            v.t,
            v.count,
            v.allowed
        );
    }
    info!("{}: {} steps at h = {}", path.display(), sc.steps(), sc.h);
    let rec = simulate(sc, &cert).map_err(|e| Error::Simulation(e.to_string()))?;
    let monitors = opts.monitor.then(|| monitor_invariants(&rec, &cert, &sc.inputs));

    let out = opts.out.clone().unwrap_or_else(|| default_out(path));
    let events = output::sibling(&out, "events.csv");
    let report_path = output::sibling(&out, "report.json");
    output::write_file(&out, &output::trajectory_csv(sc, &rec))?;
    output::write_file(&events, &output::events_csv(&rec))?;
    let mut report = output::report_json(&rec, monitors.as_ref());
    report["scenario"] = json!(path.display().to_string());
    report["trajectory"] = json!(out.display().to_string());
    report["events_file"] = json!(events.display().to_string());
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    output::write_file(&report_path, &text)?;

    if let Outcome::Diverged { t, norm } = rec.outcome {
        return Err(Error::Diverged { t, norm });
    }
    if let Some(m) = &monitors {
        if !m.passed() {
            return Err(Error::MonitorFailed {
                failing: m.failing().into_iter().map(String::from).collect(),
            });
        }
    }
    report["status"] = json!("ok");
    Ok(report)
}

/// Fans `paths` over `jobs` worker threads. Results keep input order.
pub fn simulate_batch(
    paths: &[PathBuf],
    opts: &SimulateOptions,
    jobs: usize,
) -> Vec<Result<Value, Error>> {
    let slots: Vec<Mutex<Option<Result<Value, Error>>>> =
        paths.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, paths.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(path) = paths.get(i) else { break };
                let mut o = opts.clone();
                if let Some(dir) = &opts.out {
                    o.out = Some(dir.join(default_out(path)));
                }
                *slots[i].lock().unwrap() = Some(simulate_file(path, &o));
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

fn rel_error(computed: f64, published: f64) -> f64 {
    (computed - published).abs() / published.abs()
}

/// Compares the design constants against the published ones and, when the
/// design is feasible, writes the trajectory and the `|x|, |ξ|, μ` series.
pub fn reproduce(scenario: Option<&Path>, outdir: &Path) -> Result<(Value, Option<Error>), Error> {
    let file = match scenario {
        Some(p) => ScenarioFile::read(p)?,
        None => ScenarioFile::from_json(PUBLISHED_SCENARIO)?,
    };
    let loaded = file.load()?;
    let sc = &loaded.scenario;
    let cert = assess_design(&sc.plant, &sc.inputs)?;
    let computed = [cert.period, cert.omega, cert.c, cert.tau_a_min];
    let constants: Vec<Value> = PUBLISHED_CONSTANTS
        .iter()
        .zip(computed)
        .map(|((name, published), value)| {
            json!({
                "name": name,
                "computed": value,
                "published": published,
                "rel_error": rel_error(value, *published),
            })
        })
        .collect();
    let violations = cert.violations(&sc.inputs);
    let mut summary = json!({
        "constants": constants,
        "violations": violations.iter().map(output::violation_json).collect::<Vec<_>>(),
        "simulation": null,
    });
    if let Some(v) = violations.first() {
        summary["status"] = json!("infeasible");
        return Ok((summary, Some(Error::Infeasible(*v))));
    }

    std::fs::create_dir_all(outdir)
        .map_err(|e| Error::Io(format!("{}: {e}", outdir.display())))?;
    let rec = simulate(sc, &cert).map_err(|e| Error::Simulation(e.to_string()))?;
    let monitors = monitor_invariants(&rec, &cert, &sc.inputs);
    output::write_file(&outdir.join("trajectory.csv"), &output::trajectory_csv(sc, &rec))?;
    output::write_file(&outdir.join("events.csv"), &output::events_csv(&rec))?;
    output::write_file(&outdir.join("series.csv"), &output::series_csv(&rec))?;
    summary["simulation"] = output::report_json(&rec, Some(&monitors));
    summary["outdir"] = json!(outdir.display().to_string());
    let failure = match rec.outcome {
        Outcome::Diverged { t, norm } => Some(Error::Diverged { t, norm }),
        Outcome::Completed if !monitors.passed() => Some(Error::MonitorFailed {
            failing: monitors.failing().into_iter().map(String::from).collect(),
        }),
        Outcome::Completed => None,
    };
    summary["status"] = json!(if failure.is_none() { "ok" } else { "failed" });
    Ok((summary, failure))
}

/// Draws a dwell-time-respecting signal for the scenario's modes. Uses the
/// file's `generate` block if present, else the design's `N0`, `tau_a` and
/// the simulation horizon.
pub fn gen_signal(path: &Path, seed: u64) -> Result<Value, Error> {
    let file = ScenarioFile::read(path)?;
    let plant = file.plant()?;
    let (n0, tau_a, horizon) = match &file.signal.generate {
        Some(g) => (g.n0, g.tau_a, g.horizon),
        None => (file.design.n0, file.design.tau_a, file.sim.horizon),
    };
    let bound = DwellBound::new(n0, tau_a).map_err(|e| Error::Schema(e.to_string()))?;
    let spec = SignalGenerator {
        bound,
        horizon,
        seed,
        initial_mode: Some(ModeId(file.signal.initial_mode)),
        grid: Some(file.sim.h),
    };
    let sig = generate_adt_signal(&plant.mode_ids(), &spec)
        .map_err(|e| Error::Schema(format!("signal generation: {e}")))?;
    verify_adt(&sig, &bound, horizon)
        .map_err(|v| Error::Simulation(format!("generated signal breaks its bound: {v:?}")))?;
    let spec = SignalSpec {
        initial_mode: sig.initial_mode().0,
        switches: Some(
            sig.switches()
                .iter()
                .map(|s| SwitchSpec { t: s.time, mode: s.mode.0 })
                .collect(),
        ),
        generate: None,
    };
    Ok(json!({ "status": "ok", "seed": seed, "N0": n0, "tau_a": tau_a, "signal": spec }))
}
