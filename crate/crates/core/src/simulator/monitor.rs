//! Runtime checks of the invariance and decrease claims along a recorded
//! trajectory.

use alloc::string::String;
use alloc::vec::Vec;

use super::{EventKind, Row, TrajectoryRecord};
use crate::controller::{Stage, UpdateReason};
use crate::design::{DesignCertificate, DesignInputs};

/// Additive slack `(a, b)` for the decrease-rate check: `a + b·h`.
pub const DECREASE_SLACK: (f64, f64) = (1e-6, 10.0);
/// Relative slack for the level-set, zoom-out and envelope checks.
const RELATIVE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorVerdict {
    pub name: String,
    pub passed: bool,
    /// Largest margin seen; `≤ 0` passes, `-inf` when nothing was checked.
    /// The decrease check reports `lhs - rhs` (slack included), the others
    /// the relative excess `lhs/rhs - 1`.
    pub worst_margin: f64,
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<f64>,
}

impl MonitorVerdict {
    fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            passed: true,
            worst_margin: f64::NEG_INFINITY,
            checked: 0,
            violations: 0,
            first_violation: None,
        }
    }

    fn record_relative(&mut self, t: f64, lhs: f64, rhs: f64) {
        let margin = if lhs == 0.0 && rhs == 0.0 {
            -1.0
        } else {
            lhs / rhs - 1.0 - RELATIVE_SLACK
        };
        self.push(t, margin);
    }

    fn record(&mut self, t: f64, lhs: f64, rhs: f64) {
        self.push(t, lhs - rhs);
    }

    fn push(&mut self, t: f64, margin: f64) {
        self.checked += 1;
        if margin > self.worst_margin || margin.is_nan() {
            self.worst_margin = margin;
        }
        if !(margin <= 0.0) {
            self.passed = false;
            self.violations += 1;
            self.first_violation.get_or_insert(t);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    /// `V ≤ λ_P M² μ² / C_max²` at and after capture.
    pub outer_region: MonitorVerdict,
    /// `V(t2) ≤ V(t1) − (t2−t1)·λ_Q κ(1+κ)(ΘΔμ)²` between updates, outside
    /// the inner region.
    pub decrease_rate: MonitorVerdict,
    /// `|x(t)| ≤ Λ^{N0 + t/τ_a} e^{Γt} |x(0)|` during zoom-out.
    pub zoom_out_bound: MonitorVerdict,
    /// `μ(t0+mT) ≤ √(c^{N0+T/τ_a}) (Ω√(c^{T/τ_a}))^m μ(t0)`.
    pub zoom_envelope: MonitorVerdict,
}

impl MonitorReport {
    pub fn verdicts(&self) -> [&MonitorVerdict; 4] {
        [
            &self.outer_region,
            &self.decrease_rate,
            &self.zoom_out_bound,
            &self.zoom_envelope,
        ]
    }

    pub fn passed(&self) -> bool {
        self.verdicts().iter().all(|v| v.passed)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.verdicts()
            .iter()
            .filter(|v| !v.passed)
            .map(|v| v.name.as_str())
            .collect()
    }
}

fn same_run(start: &Row, row: &Row, prev: &Row) -> bool {
    row.stage == Stage::ZoomIn
        && !row.in_r2
        && row.step == prev.step + 1
        && row.mode == start.mode
        && row.mu == start.mu
}

pub fn monitor_invariants(
    traj: &TrajectoryRecord,
    cert: &DesignCertificate,
    inputs: &DesignInputs,
) -> MonitorReport {
    let q = &inputs.quantizer;
    let mut outer = MonitorVerdict::new("outer_region");
    let mut decrease = MonitorVerdict::new("decrease_rate");
    let mut zoom_out = MonitorVerdict::new("zoom_out_bound");
    let mut envelope = MonitorVerdict::new("zoom_envelope");

    for row in traj.rows.iter().filter(|r| r.stage == Stage::ZoomIn) {
        let level = cert.outer_level(q.range(), row.mu);
        outer.record_relative(row.t, row.v, level);
    }

    let slack = DECREASE_SLACK.0 + DECREASE_SLACK.1 * traj.h;
    let mut run_start: Option<usize> = None;
    for (i, row) in traj.rows.iter().enumerate() {
        let continues = match run_start {
            Some(s) => same_run(&traj.rows[s], row, &traj.rows[i - 1]),
            None => false,
        };
        if continues {
            let start = &traj.rows[run_start.unwrap_or(i)];
            let rate = cert.decrease_rate(q.error_bound(), inputs.kappa, start.mu);
            decrease.record(row.t, row.v, start.v - (row.t - start.t) * rate + slack);
        } else if row.stage == Stage::ZoomIn && !row.in_r2 {
            run_start = Some(i);
        } else {
            run_start = None;
        }
    }

    if let Some(first) = traj.rows.first() {
        let x0 = first.x.norm();
        let tau_a = inputs.dwell.average_dwell_time();
        let n0 = inputs.dwell.chatter_bound();
        let log_lambda = libm::log(cert.jump_gain);
        for row in traj.rows.iter().filter(|r| r.stage == Stage::ZoomOut) {
            let bound =
                libm::exp(log_lambda * (n0 + row.t / tau_a) + cert.gamma * row.t) * x0;
            zoom_out.record_relative(row.t, row.x.norm(), bound);
        }
    }

    if let Some(mu0) = traj.anchor_mu {
        let tau_a = inputs.dwell.average_dwell_time();
        let n0 = inputs.dwell.chatter_bound();
        let period = traj.effective_period();
        let head = libm::pow(cert.c, 0.5 * (n0 + period / tau_a));
        let ratio = cert.omega * libm::pow(cert.c, 0.5 * period / tau_a);
        let mut m = 0u32;
        for e in &traj.events {
            if let EventKind::Zoom(z) = &e.kind {
                if z.reason == UpdateReason::Period {
                    m += 1;
                    // the recorded μ after every event at this step
                    let mu = traj.rows.get(e.step as usize).map_or(z.after, |r| r.mu);
                    let bound = head * libm::pow(ratio, m as f64) * mu0;
                    envelope.record_relative(e.t, mu, bound);
                }
            }
        }
    }

    MonitorReport {
        outer_region: outer,
        decrease_rate: decrease,
        zoom_out_bound: zoom_out,
        zoom_envelope: envelope,
    }
}
