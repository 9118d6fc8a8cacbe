//! Fixed-step hybrid simulation of the quantized closed loop.
//!
//! Each step holds the quantized output sampled at the step start and
//! advances `(x, ξ)` with classical RK4. Switches, period ends and
//! zoom-out updates happen on grid points, in that order, before sampling.

mod monitor;

pub use monitor::{monitor_invariants, MonitorReport, MonitorVerdict, DECREASE_SLACK};

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::controller::{ControllerError, ControllerState, Stage, UpdateReason, ZoomUpdate};
use crate::design::{DesignCertificate, DesignInputs};
use crate::numerics::{Matrix, Vector};
use crate::plant::{ModeId, PlantError, SwitchedPlant, SwitchingSignal};
use crate::quantizer::QuantizerError;

/// A run stops once `|z|` exceeds this.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;
pub const DEFAULT_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("{name} must be positive and finite, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("x0 has length {got}, plant state dimension is {expected}")]
    InitialState { expected: usize, got: usize },
    #[error("initial estimate has length {got}, plant state dimension is {expected}")]
    InitialEstimate { expected: usize, got: usize },
    #[error("certificate admits no zoom-in period (Omega = {omega}, T = {period})")]
    InfeasibleCertificate { omega: f64, period: f64 },
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Controller(#[from] ControllerError),
    #[error(transparent)]
    Quantizer(#[from] QuantizerError),
}

/// How the controller starts.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    /// `μ = 1`, `ξ = 0`, searching for a capture window.
    ZoomOut,
    /// Zoom-in from `t = 0` with the given estimate and zoom.
    ZoomIn { xi: Vector, mu: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plant: SwitchedPlant,
    pub inputs: DesignInputs,
    /// Already snapped to the `h` grid.
    pub signal: SwitchingSignal,
    pub x0: Vector,
    pub horizon: f64,
    pub h: f64,
    pub start: Start,
    /// Lower bound on `μ` set at capture; 0 leaves the capture bound as is.
    pub zoom_floor: f64,
}

impl Scenario {
    pub fn new(
        plant: SwitchedPlant,
        inputs: DesignInputs,
        signal: SwitchingSignal,
        x0: Vector,
        horizon: f64,
        h: f64,
    ) -> Result<Self, SimError> {
        for (name, value) in [("horizon", horizon), ("h", h)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(SimError::BadParameter { name, value });
            }
        }
        let n = plant.dims().state;
        if x0.len() != n {
            return Err(SimError::InitialState {
                expected: n,
                got: x0.len(),
            });
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(SimError::BadParameter {
                name: "x0",
                value: f64::NAN,
            });
        }
        for p in signal.visited_modes() {
            plant.mode(p)?;
        }
        let signal = signal.snapped_to_grid(h)?;
        Ok(Self {
            plant,
            inputs,
            signal,
            x0,
            horizon,
            h,
            start: Start::ZoomOut,
            zoom_floor: 0.0,
        })
    }

    pub fn with_start(mut self, start: Start) -> Result<Self, SimError> {
        if let Start::ZoomIn { xi, mu } = &start {
            let n = self.plant.dims().state;
            if xi.len() != n {
                return Err(SimError::InitialEstimate {
                    expected: n,
                    got: xi.len(),
                });
            }
            if !(*mu > 0.0 && mu.is_finite()) {
                return Err(SimError::BadParameter {
                    name: "mu",
                    value: *mu,
                });
            }
        }
        self.start = start;
        Ok(self)
    }

    pub fn with_zoom_floor(mut self, alpha: f64) -> Result<Self, SimError> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(SimError::BadParameter {
                name: "alpha",
                value: alpha,
            });
        }
        self.zoom_floor = alpha;
        Ok(self)
    }

    pub fn steps(&self) -> u64 {
        libm::round(self.horizon / self.h) as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub step: u64,
    pub t: f64,
    pub x: Vector,
    pub xi: Vector,
    pub mu: f64,
    pub mode: ModeId,
    pub stage: Stage,
    pub u: Vector,
    pub q: Vector,
    /// `V_σ(z)` with `z = (x, x - ξ)`.
    pub v: f64,
    pub in_r1: bool,
    pub in_r2: bool,
}

impl Row {
    pub fn z(&self) -> Vector {
        stack(&self.x, &(&self.x - &self.xi))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    Zoom(ZoomUpdate),
    Switch { from: ModeId, to: ModeId },
    Stage { from: Stage, to: Stage },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub step: u64,
    pub t: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Completed,
    /// `|z|` exceeded the threshold or became non-finite at `t`.
    Diverged { t: f64, norm: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub h: f64,
    pub rows: Vec<Row>,
    pub events: Vec<Event>,
    pub outcome: Outcome,
    /// Step at which zoom-in began.
    pub capture_step: Option<u64>,
    /// `μ` in force once all events at the capture step are applied.
    pub anchor_mu: Option<f64>,
    /// Zoom-in period in grid steps: `T` rounded up to the grid.
    pub period_steps: u64,
}

impl TrajectoryRecord {
    pub fn capture_time(&self) -> Option<f64> {
        self.capture_step.map(|k| k as f64 * self.h)
    }

    /// Zoom-in period actually used, `period_steps · h`.
    pub fn effective_period(&self) -> f64 {
        self.period_steps as f64 * self.h
    }

    pub fn last(&self) -> Option<&Row> {
        self.rows.last()
    }

    /// Zoom updates for one reason, as `(t, before, after)`.
    pub fn zoom_updates(&self, reason: UpdateReason) -> Vec<(f64, f64, f64)> {
        self.events
            .iter()
            .filter_map(|e| match &e.kind {
                EventKind::Zoom(z) if z.reason == reason => Some((e.t, z.before, z.after)),
                _ => None,
            })
            .collect()
    }
}

pub fn stack(a: &Vector, b: &Vector) -> Vector {
    let mut out = Vector::zeros(a.len() + b.len());
    out.rows_mut(0, a.len()).copy_from(a);
    out.rows_mut(a.len(), b.len()).copy_from(b);
    out
}

/// `(in_R1, in_R2)`; both boundaries are inclusive.
pub fn region_membership(
    z: &Vector,
    mu: f64,
    p: ModeId,
    cert: &DesignCertificate,
    inputs: &DesignInputs,
) -> Result<(bool, bool), PlantError> {
    let v = cert
        .lyapunov
        .get(&p)
        .ok_or(PlantError::UnknownMode(p))?
        .quadratic_form(z);
    Ok(classify(v, mu, cert, inputs))
}

fn classify(v: f64, mu: f64, cert: &DesignCertificate, inputs: &DesignInputs) -> (bool, bool) {
    let q = &inputs.quantizer;
    (
        v <= cert.outer_level(q.range(), mu),
        v <= cert.inner_level(q.error_bound(), inputs.kappa, mu),
    )
}

/// Zoom-in generator `[[A, BK], [0, A+LC+BK]]` and injection `[0; -L]`.
struct ModeFlow {
    zoom_in: Matrix,
    zoom_out: Matrix,
    injection: Matrix,
}

fn mode_flows(plant: &SwitchedPlant) -> BTreeMap<ModeId, ModeFlow> {
    let n = plant.dims().state;
    let mut out = BTreeMap::new();
    for (id, m) in plant.modes() {
        let bk = m.b() * m.k();
        let mut zoom_in = Matrix::zeros(2 * n, 2 * n);
        zoom_in.view_mut((0, 0), (n, n)).copy_from(m.a());
        zoom_in.view_mut((0, n), (n, n)).copy_from(&bk);
        zoom_in
            .view_mut((n, n), (n, n))
            .copy_from(&(m.observer_matrix() + &bk));
        let mut zoom_out = Matrix::zeros(2 * n, 2 * n);
        zoom_out.view_mut((0, 0), (n, n)).copy_from(m.a());
        let p = m.output_dim();
        let mut injection = Matrix::zeros(2 * n, p);
        injection.view_mut((n, 0), (n, p)).copy_from(&(-m.l()));
        out.insert(
            id,
            ModeFlow {
                zoom_in,
                zoom_out,
                injection,
            },
        );
    }
    out
}

fn rk4(g: &Matrix, forcing: &Vector, w: &Vector, h: f64) -> Vector {
    let f = |w: &Vector| g * w + forcing;
    let k1 = f(w);
    let k2 = f(&(w + &k1 * (0.5 * h)));
    let k3 = f(&(w + &k2 * (0.5 * h)));
    let k4 = f(&(w + &k3 * h));
    w + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

pub fn simulate(
    scenario: &Scenario,
    cert: &DesignCertificate,
) -> Result<TrajectoryRecord, SimError> {
    if !(cert.omega < 1.0) || !(cert.period > 0.0) {
        return Err(SimError::InfeasibleCertificate {
            omega: cert.omega,
            period: cert.period,
        });
    }
    let plant = &scenario.plant;
    let inputs = &scenario.inputs;
    let quantizer = &inputs.quantizer;
    let h = scenario.h;
    let n = plant.dims().state;
    let steps = scenario.steps();
    let period_steps = (libm::ceil(cert.period / h - 1e-9) as u64).max(1);
    let flows = mode_flows(plant);

    let mut switch_at: BTreeMap<u64, ModeId> = BTreeMap::new();
    for s in scenario.signal.switches() {
        switch_at.insert(libm::round(s.time / h) as u64, s.mode);
    }

    let initial = scenario.signal.initial_mode();
    let (mut ctrl, mut capture_step) = match &scenario.start {
        Start::ZoomOut => (ControllerState::new(initial, n), None),
        Start::ZoomIn { xi, mu } => (
            ControllerState::zooming_in(initial, xi.clone(), *mu, 0.0),
            Some(0),
        ),
    };
    let mut anchor_mu = capture_step.map(|_| ctrl.mu());

    let mut w = stack(&scenario.x0, ctrl.xi());
    let mut rows = Vec::with_capacity(steps as usize + 1);
    let mut events = Vec::new();
    let mut outcome = Outcome::Completed;

    for k in 0..=steps {
        let t = k as f64 * h;
        let mut x = w.rows(0, n).into_owned();

        if let Some(&to) = switch_at.get(&k) {
            let from = ctrl.mode();
            if to != from {
                x = plant.jump(to, from)? * &x;
                let before_stage = ctrl.stage();
                if let Some(z) = ctrl.on_switch(plant, cert, to)? {
                    events.push(Event { step: k, t, kind: EventKind::Zoom(z) });
                }
                events.push(Event { step: k, t, kind: EventKind::Switch { from, to } });
                if ctrl.stage() != before_stage {
                    events.push(Event {
                        step: k,
                        t,
                        kind: EventKind::Stage { from: before_stage, to: ctrl.stage() },
                    });
                }
            }
        }

        if ctrl.stage() == Stage::ZoomIn {
            if let Some(c0) = capture_step {
                if k > c0 && (k - c0) % period_steps == 0 {
                    let z = ctrl.zoom_in_on_period_end(cert)?;
                    events.push(Event { step: k, t, kind: EventKind::Zoom(z) });
                }
            }
        }

        if let Some(z) = ctrl.update_zoom_out(cert, inputs, t) {
            events.push(Event { step: k, t, kind: EventKind::Zoom(z) });
        }

        let mode = plant.mode(ctrl.mode())?;
        let mut q = quantizer.zoomed_quantize(&(mode.c() * &x), ctrl.mu())?;
        if ctrl.stage() == Stage::ZoomOut {
            ctrl.advance_zoom_out(inputs, &q, ctrl.mode(), t)?;
            if ctrl.stage() == Stage::Capture {
                events.push(Event {
                    step: k,
                    t,
                    kind: EventKind::Stage { from: Stage::ZoomOut, to: Stage::Capture },
                });
                let z = ctrl.capture(plant, cert, inputs, scenario.zoom_floor)?;
                events.push(Event { step: k, t, kind: EventKind::Zoom(z) });
                events.push(Event {
                    step: k,
                    t,
                    kind: EventKind::Stage { from: Stage::Capture, to: Stage::ZoomIn },
                });
                capture_step = Some(k);
                anchor_mu = Some(ctrl.mu());
                q = quantizer.zoomed_quantize(&(mode.c() * &x), ctrl.mu())?;
            }
        }

        let xi = ctrl.xi().clone();
        let (_, u) = ctrl.observer_derivative(mode, &xi, &q);
        w = stack(&x, &xi);
        let z = stack(&x, &(&x - &xi));
        let znorm = z.norm();
        let v = cert.lyapunov[&ctrl.mode()].quadratic_form(&z);
        let (in_r1, in_r2) = classify(v, ctrl.mu(), cert, inputs);
        rows.push(Row {
            step: k,
            t,
            x,
            xi,
            mu: ctrl.mu(),
            mode: ctrl.mode(),
            stage: ctrl.stage(),
            u,
            q: q.clone(),
            v,
            in_r1,
            in_r2,
        });

        if !(znorm <= DIVERGENCE_THRESHOLD) {
            outcome = Outcome::Diverged { t, norm: znorm };
            break;
        }
        if k == steps {
            break;
        }

        let flow = &flows[&ctrl.mode()];
        w = if ctrl.stage() == Stage::ZoomIn {
            rk4(&flow.zoom_in, &(&flow.injection * &q), &w, h)
        } else {
            rk4(&flow.zoom_out, &Vector::zeros(2 * n), &w, h)
        };
        ctrl.set_xi(w.rows(n, n).into_owned());
    }

    Ok(TrajectoryRecord {
        h,
        rows,
        events,
        outcome,
        capture_step,
        anchor_mu,
        period_steps,
    })
}
