//! CSV and JSON writers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use qswitch_core::design::{DesignCertificate, DesignInputs, Violation};
use qswitch_core::simulator::{EventKind, MonitorVerdict, Outcome, TrajectoryRecord};
use qswitch_core::{MonitorReport, Scenario};
use serde_json::{json, Value};

use crate::scenario::rows_of;
use crate::Error;

/// Full-precision float, as used in every CSV cell.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_header(n: usize, m: usize, p: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("x{i}")));
    cols.extend((1..=n).map(|i| format!("xi{i}")));
    cols.extend(["mu", "sigma", "stage"].map(String::from));
    cols.extend((1..=m).map(|i| format!("u{i}")));
    cols.extend((1..=p).map(|i| format!("q{i}")));
    cols.extend(["V", "in_R1", "in_R2"].map(String::from));
    cols.join(",")
}

pub fn trajectory_csv(sc: &Scenario, rec: &TrajectoryRecord) -> String {
    let d = sc.plant.dims();
    let mut out = trajectory_header(d.state, d.input, d.output);
    out.push('\n');
    for r in &rec.rows {
        let mut cells = vec![fmt_f64(r.t)];
        cells.extend(r.x.iter().map(|v| fmt_f64(*v)));
        cells.extend(r.xi.iter().map(|v| fmt_f64(*v)));
        cells.push(fmt_f64(r.mu));
        cells.push(r.mode.to_string());
        cells.push(r.stage.as_str().to_string());
        cells.extend(r.u.iter().map(|v| fmt_f64(*v)));
        cells.extend(r.q.iter().map(|v| fmt_f64(*v)));
        cells.push(fmt_f64(r.v));
        cells.push(u8::from(r.in_r1).to_string());
        cells.push(u8::from(r.in_r2).to_string());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub const EVENTS_HEADER: &str = "t,kind,reason,from,to,mu_before,mu_after";

pub fn events_csv(rec: &TrajectoryRecord) -> String {
    let mut out = format!("{EVENTS_HEADER}\n");
    for e in &rec.events {
        let t = fmt_f64(e.t);
        let _ = match &e.kind {
            EventKind::Zoom(z) => writeln!(
                out,
                "{t},zoom,{},,,{},{}",
                z.reason,
                fmt_f64(z.before),
                fmt_f64(z.after)
            ),
            EventKind::Switch { from, to } => writeln!(out, "{t},switch,,{from},{to},,"),
            EventKind::Stage { from, to } => {
                writeln!(out, "{t},stage,,{},{},,", from.as_str(), to.as_str())
            }
        };
    }
    out
}

/// `t, |x|, |ξ|, μ` — the norms and zoom variable over time.
pub fn series_csv(rec: &TrajectoryRecord) -> String {
    let mut out = String::from("t,norm_x,norm_xi,mu\n");
    for r in &rec.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.x.norm()),
            fmt_f64(r.xi.norm()),
            fmt_f64(r.mu)
        );
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    f.write_all(contents.as_bytes())
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// `traj.csv` -> `traj.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}.{suffix}"))
}

pub fn violation_json(v: &Violation) -> Value {
    json!({
        "code": v.code(),
        "message": v.to_string(),
        "minimum_M": v.minimum_range(),
    })
}

pub fn certificate_json(cert: &DesignCertificate, inputs: &DesignInputs) -> Value {
    let violations = cert.violations(inputs);
    let per_mode = |f: &dyn Fn(qswitch_core::ModeId) -> Value| {
        cert.lyapunov
            .keys()
            .map(|id| (id.to_string(), f(*id)))
            .collect::<serde_json::Map<_, _>>()
    };
    json!({
        "status": if violations.is_empty() { "ok" } else { "infeasible" },
        "feasible": violations.is_empty(),
        "violations": violations.iter().map(violation_json).collect::<Vec<_>>(),
        "T": cert.period,
        "T_infimum": cert.period_infimum,
        "Omega": cert.omega,
        "c": cert.c,
        "tau_a_min": cert.tau_a_min,
        "tau_a": inputs.dwell.average_dwell_time(),
        "N": cert.window_count,
        "Theta": cert.theta,
        "lambda_P_max": cert.lambda_p_max,
        "lambda_P_min": cert.lambda_p_min,
        "lambda_Q_min": cert.lambda_q_min,
        "C_max": cert.c_max,
        "Gamma": cert.gamma,
        "Lambda": cert.jump_gain,
        "scaling": cert.scaling.iter().map(|((to, from), c)| json!({
            "to": to.0, "from": from.0, "c": c,
        })).collect::<Vec<_>>(),
        "P": per_mode(&|id| json!(rows_of(cert.lyapunov[&id].matrix()))),
        "capture": per_mode(&|id| {
            let k = &cert.capture[&id];
            json!({
                "gramian": rows_of(k.gramian.matrix()),
                "response_bound": k.response_bound,
                "error_gain": k.error_gain(inputs.capture_window),
            })
        }),
    })
}

fn verdict_json(v: &MonitorVerdict) -> Value {
    json!({
        "name": v.name,
        "passed": v.passed,
        "worst_margin": v.worst_margin,
        "checked": v.checked,
        "violations": v.violations,
        "first_violation": v.first_violation,
    })
}

pub fn outcome_json(o: &Outcome) -> Value {
    match o {
        Outcome::Completed => json!({ "status": "completed" }),
        Outcome::Diverged { t, norm } => json!({ "status": "diverged", "t": t, "norm": norm }),
    }
}

pub fn report_json(rec: &TrajectoryRecord, monitors: Option<&MonitorReport>) -> Value {
    let last = rec.last();
    json!({
        "outcome": outcome_json(&rec.outcome),
        "steps": rec.rows.len(),
        "h": rec.h,
        "capture_time": rec.capture_time(),
        "effective_period": rec.effective_period(),
        "final_t": last.map(|r| r.t),
        "final_norm_z": last.map(|r| r.z().norm()),
        "final_mu": last.map(|r| r.mu),
        "events": rec.events.len(),
        "monitors": monitors.map(|m| json!({
            "passed": m.passed(),
            "failing": m.failing(),
            "verdicts": m.verdicts().iter().map(|v| verdict_json(v)).collect::<Vec<_>>(),
        })),
    })
}
