//! Zoom-out / capture / zoom-in controller with a Luenberger observer.

use alloc::vec::Vec;
use core::fmt;

use crate::design::{CaptureKernel, DesignCertificate, DesignInputs};
use crate::numerics::{self, Matrix, NumericsError, Vector};
use crate::plant::{ModeDynamics, ModeId, PlantError, SwitchedPlant};

/// Relative slack when comparing grid times against window lengths.
const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    ZoomOut,
    Capture,
    ZoomIn,
}

impl Stage {
    pub fn as_str(&self) -> &'static str {
        match self {
            Stage::ZoomOut => "zoom_out",
            Stage::Capture => "capture",
            Stage::ZoomIn => "zoom_in",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateReason {
    Switch,
    Period,
    ZoomOut,
    Capture,
}

impl UpdateReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            UpdateReason::Switch => "switch",
            UpdateReason::Period => "period",
            UpdateReason::ZoomOut => "zoom-out",
            UpdateReason::Capture => "capture",
        }
    }
}

impl fmt::Display for UpdateReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZoomUpdate {
    pub reason: UpdateReason,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControllerError {
    #[error("operation needs stage {expected}, controller is in {actual}")]
    WrongStage { expected: Stage, actual: Stage },
    #[error("capture buffer does not span the window: {covered} of {tau}")]
    IncompleteWindow { covered: f64, tau: f64 },
    #[error("no capture data for mode {0}")]
    MissingKernel(ModeId),
    #[error("no scaling factor for switch {from} -> {to}")]
    MissingScaling { to: ModeId, from: ModeId },
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// `μ` during zoom-out on `[kτ̄, (k+1)τ̄)`.
pub fn zoom_out_mu(cert: &DesignCertificate, inputs: &DesignInputs, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let tau_a = inputs.dwell.average_dwell_time();
    let growth = libm::pow(cert.jump_gain, 1.0 / tau_a) * libm::exp(cert.gamma);
    libm::pow(cert.jump_gain, inputs.dwell.chatter_bound())
        * libm::pow(
            growth,
            (1.0 + inputs.zoom_out_margin) * k as f64 * inputs.zoom_out_period,
        )
}

/// Index `k` of the zoom-out interval containing `t`.
pub fn zoom_out_index(inputs: &DesignInputs, t: f64) -> u64 {
    let tb = inputs.zoom_out_period;
    libm::floor(t / tb + TIME_EPS).max(0.0) as u64
}

/// One buffered capture sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureSample {
    pub t: f64,
    pub q: Vector,
    pub mu: f64,
}

/// `e^{Aτ} W⁻¹ ∫ e^{Aᵀs} Cᵀ y(s0+s) ds`, trapezoidal in `s` over the
/// sample times (which must start at `s0` and end at `s0+τ`).
pub fn reconstruct_state(
    mode: &ModeDynamics,
    kernel: &CaptureKernel,
    samples: &[(f64, Vector)],
) -> Result<Vector, NumericsError> {
    let n = mode.state_dim();
    let mut integral = Vector::zeros(n);
    if samples.len() >= 2 {
        let s0 = samples[0].0;
        let at = mode.a().transpose();
        let ct = mode.c().transpose();
        let weigh = |s: f64, y: &Vector| -> Result<Vector, NumericsError> {
            Ok(numerics::matrix_exponential(&at, s - s0)? * (&ct * y))
        };
        let mut prev = weigh(samples[0].0, &samples[0].1)?;
        for w in samples.windows(2) {
            let next = weigh(w[1].0, &w[1].1)?;
            integral += (&prev + &next) * (0.5 * (w[1].0 - w[0].0));
            prev = next;
        }
    }
    Ok(&kernel.propagator * (&kernel.gramian_inverse * integral))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    stage: Stage,
    mu: f64,
    xi: Vector,
    mode: ModeId,
    zoom_out_k: u64,
    switchfree_start: Option<f64>,
    capture_buffer: Vec<CaptureSample>,
    period_anchor: f64,
    period_index: u64,
}

impl ControllerState {
    /// Zoom-out start: `μ = 1`, `ξ = 0`.
    pub fn new(initial_mode: ModeId, state_dim: usize) -> Self {
        Self {
            stage: Stage::ZoomOut,
            mu: 1.0,
            xi: Vector::zeros(state_dim),
            mode: initial_mode,
            zoom_out_k: 0,
            switchfree_start: None,
            capture_buffer: Vec::new(),
            period_anchor: 0.0,
            period_index: 0,
        }
    }

    /// Skips zoom-out and capture: starts zoom-in at `anchor` with the given
    /// estimate and zoom.
    pub fn zooming_in(mode: ModeId, xi: Vector, mu: f64, anchor: f64) -> Self {
        Self {
            stage: Stage::ZoomIn,
            mu,
            xi,
            mode,
            zoom_out_k: 0,
            switchfree_start: None,
            capture_buffer: Vec::new(),
            period_anchor: anchor,
            period_index: 0,
        }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn xi(&self) -> &Vector {
        &self.xi
    }
    pub fn mode(&self) -> ModeId {
        self.mode
    }
    pub fn zoom_out_k(&self) -> u64 {
        self.zoom_out_k
    }
    pub fn switchfree_start(&self) -> Option<f64> {
        self.switchfree_start
    }
    pub fn capture_buffer(&self) -> &[CaptureSample] {
        &self.capture_buffer
    }
    pub fn period_anchor(&self) -> f64 {
        self.period_anchor
    }
    pub fn period_index(&self) -> u64 {
        self.period_index
    }

    /// Overwrites `ξ` (used by the integrator between events).
    pub fn set_xi(&mut self, xi: Vector) {
        self.xi = xi;
    }

    fn expect(&self, stage: Stage) -> Result<(), ControllerError> {
        if self.stage == stage {
            Ok(())
        } else {
            Err(ControllerError::WrongStage {
                expected: stage,
                actual: self.stage,
            })
        }
    }

    fn clear_window(&mut self) {
        self.switchfree_start = None;
        self.capture_buffer.clear();
    }

    /// Moves the zoom-out schedule to the interval containing `t`.
    pub fn update_zoom_out(
        &mut self,
        cert: &DesignCertificate,
        inputs: &DesignInputs,
        t: f64,
    ) -> Option<ZoomUpdate> {
        if self.stage != Stage::ZoomOut {
            return None;
        }
        let k = zoom_out_index(inputs, t);
        if k <= self.zoom_out_k {
            return None;
        }
        let before = self.mu;
        self.zoom_out_k = k;
        self.mu = zoom_out_mu(cert, inputs, k);
        Some(ZoomUpdate {
            reason: UpdateReason::ZoomOut,
            before,
            after: self.mu,
        })
    }

    /// Feeds one zoom-out sample. The window restarts on saturation or on a
    /// mode change; once it spans `τ` the stage becomes `Capture`.
    pub fn advance_zoom_out(
        &mut self,
        inputs: &DesignInputs,
        q_out: &Vector,
        sigma: ModeId,
        t: f64,
    ) -> Result<(), ControllerError> {
        self.expect(Stage::ZoomOut)?;
        if sigma != self.mode {
            self.mode = sigma;
            self.clear_window();
        }
        if !inputs.quantizer.saturation_test(q_out, self.mu) {
            self.clear_window();
            return Ok(());
        }
        let s0 = *self.switchfree_start.get_or_insert(t);
        self.capture_buffer.push(CaptureSample {
            t,
            q: q_out.clone(),
            mu: self.mu,
        });
        let tau = inputs.capture_window;
        if t - s0 >= tau * (1.0 - TIME_EPS) {
            self.stage = Stage::Capture;
        }
        Ok(())
    }

    /// Reconstructs `ξ` from the buffered window and sets `μ` to the
    /// capture bound (floored at `zoom_floor`); zoom-in starts here.
    pub fn capture(
        &mut self,
        plant: &SwitchedPlant,
        cert: &DesignCertificate,
        inputs: &DesignInputs,
        zoom_floor: f64,
    ) -> Result<ZoomUpdate, ControllerError> {
        self.expect(Stage::Capture)?;
        let tau = inputs.capture_window;
        let (first, last) = match (self.capture_buffer.first(), self.capture_buffer.last()) {
            (Some(f), Some(l)) => (f.t, l.t),
            _ => return Err(ControllerError::IncompleteWindow { covered: 0.0, tau }),
        };
        if last - first < tau * (1.0 - TIME_EPS) {
            return Err(ControllerError::IncompleteWindow {
                covered: last - first,
                tau,
            });
        }
        let mode = plant.mode(self.mode)?;
        let kernel = cert
            .capture
            .get(&self.mode)
            .ok_or(ControllerError::MissingKernel(self.mode))?;
        let samples: Vec<(f64, Vector)> = self
            .capture_buffer
            .iter()
            .map(|s| (s.t, s.q.clone()))
            .collect();
        let xi = reconstruct_state(mode, kernel, &samples)?;
        // zoom in force just before the window end
        let n = self.capture_buffer.len();
        let mu_minus = self.capture_buffer[n.saturating_sub(2)].mu;
        let m = inputs.quantizer.range();
        let delta = inputs.quantizer.error_bound();
        let bound = libm::sqrt(cert.lambda_p_max / cert.lambda_p_min) * cert.c_max / m
            * (xi.norm() + kernel.error_gain(tau) * delta * mu_minus);
        let before = self.mu;
        self.mu = bound.max(zoom_floor);
        self.xi = xi;
        self.stage = Stage::ZoomIn;
        self.period_anchor = last;
        self.period_index = 0;
        self.clear_window();
        Ok(ZoomUpdate {
            reason: UpdateReason::Capture,
            before,
            after: self.mu,
        })
    }

    /// Mode switch to `p_new`. Zoom-in scales `μ` by `√c_{new,old}` and
    /// jumps `ξ` with the plant; zoom-out restarts the capture window.
    pub fn on_switch(
        &mut self,
        plant: &SwitchedPlant,
        cert: &DesignCertificate,
        p_new: ModeId,
    ) -> Result<Option<ZoomUpdate>, ControllerError> {
        let p_old = self.mode;
        if p_new == p_old {
            return Ok(None);
        }
        match self.stage {
            Stage::ZoomIn => self.zoom_in_on_switch(plant, cert, p_new).map(Some),
            _ => {
                let r = plant.jump(p_new, p_old)?;
                self.xi = r * &self.xi;
                self.mode = p_new;
                self.stage = Stage::ZoomOut;
                self.clear_window();
                Ok(None)
            }
        }
    }

    pub fn zoom_in_on_switch(
        &mut self,
        plant: &SwitchedPlant,
        cert: &DesignCertificate,
        p_new: ModeId,
    ) -> Result<ZoomUpdate, ControllerError> {
        self.expect(Stage::ZoomIn)?;
        let p_old = self.mode;
        let c = cert
            .scaling_factor(p_new, p_old)
            .ok_or(ControllerError::MissingScaling {
                to: p_new,
                from: p_old,
            })?;
        let r = plant.jump(p_new, p_old)?;
        self.xi = r * &self.xi;
        self.mode = p_new;
        let before = self.mu;
        self.mu *= libm::sqrt(c);
        Ok(ZoomUpdate {
            reason: UpdateReason::Switch,
            before,
            after: self.mu,
        })
    }

    pub fn zoom_in_on_period_end(
        &mut self,
        cert: &DesignCertificate,
    ) -> Result<ZoomUpdate, ControllerError> {
        self.expect(Stage::ZoomIn)?;
        let before = self.mu;
        self.mu *= cert.omega;
        self.period_index += 1;
        Ok(ZoomUpdate {
            reason: UpdateReason::Period,
            before,
            after: self.mu,
        })
    }

    /// `(ξ̇, u)`; both vanish outside zoom-in.
    pub fn observer_derivative(
        &self,
        mode: &ModeDynamics,
        xi: &Vector,
        q_out: &Vector,
    ) -> (Vector, Vector) {
        if self.stage != Stage::ZoomIn {
            return (Vector::zeros(xi.len()), Vector::zeros(mode.input_dim()));
        }
        observer_field(mode, xi, q_out)
    }
}

/// `ξ̇ = (A+LC)ξ + Bu − L q`, `u = Kξ`.
pub fn observer_field(mode: &ModeDynamics, xi: &Vector, q_out: &Vector) -> (Vector, Vector) {
    let u = mode.k() * xi;
    let observer: Matrix = mode.observer_matrix();
    let dxi = observer * xi + mode.b() * &u - mode.l() * q_out;
    (dxi, u)
}
