//! Design certificate: Lyapunov matrices, level-set constants, switch
//! scaling factors, zoom-in period, minimum average dwell time and the
//! Lyapunov-stability margins derived from them.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::numerics::{self, Matrix, NumericsError, SymmetricPositiveDefinite};
use crate::plant::{DwellBound, ModeId, PlantError, SwitchedPlant};
use crate::quantizer::QuantizerConfig;

/// `T` is set this far above its infimum.
pub const PERIOD_MARGIN: f64 = 1e-6;
/// `δ` is this fraction of the tightest of its three upper bounds.
pub const DELTA_SHRINK: f64 = 0.99;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignInputs {
    /// `Q_p` per mode, each `2n × 2n`.
    pub weights: BTreeMap<ModeId, SymmetricPositiveDefinite>,
    pub kappa: f64,
    pub quantizer: QuantizerConfig,
    /// Capture window `τ`.
    pub capture_window: f64,
    /// Zoom-out period `τ̄`.
    pub zoom_out_period: f64,
    /// Zoom-out growth margin `χ`.
    pub zoom_out_margin: f64,
    pub dwell: DwellBound,
}

/// Which design inequality failed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    /// `M > 2Δ`
    RangeBelowTwiceError { range: f64, required: f64 },
    /// `M > √(λ̄_P/λ_P)·Θ·Δ·C_max`
    RangeBelowReconstructionLevel { range: f64, required: f64 },
    /// `√λ_P·M > √λ̄_P·Θ·Δ·(1+κ)·C_max`, equivalently `Ω < 1`
    LevelSetsNotNested { range: f64, required: f64, omega: f64 },
    /// `τ_a > log(c)/(2 log(1/Ω))·T`
    DwellTimeTooShort { tau_a: f64, tau_a_min: f64 },
}

impl Violation {
    /// Short identifier used in machine-readable output.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::RangeBelowTwiceError { .. } => "range_vs_error_bound",
            Violation::RangeBelowReconstructionLevel { .. } => "range_vs_reconstruction",
            Violation::LevelSetsNotNested { .. } => "level_set_nesting",
            Violation::DwellTimeTooShort { .. } => "average_dwell_time",
        }
    }

    /// Smallest `M` that would clear the violated range inequality.
    pub fn minimum_range(&self) -> Option<f64> {
        match self {
            Violation::RangeBelowTwiceError { required, .. }
            | Violation::RangeBelowReconstructionLevel { required, .. }
            | Violation::LevelSetsNotNested { required, .. } => Some(*required),
            Violation::DwellTimeTooShort { .. } => None,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RangeBelowTwiceError { range, required } => write!(
                f,
                "M > 2*Delta violated: M = {range}, need M > {required}"
            ),
            Violation::RangeBelowReconstructionLevel { range, required } => write!(
                f,
                "M > sqrt(lambda_P_max/lambda_P_min)*Theta*Delta*C_max violated: M = {range}, need M > {required}"
            ),
            Violation::LevelSetsNotNested {
                range,
                required,
                omega,
            } => write!(
                f,
                "sqrt(lambda_P_min)*M > sqrt(lambda_P_max)*Theta*Delta*(1+kappa)*C_max violated (Omega = {omega}): M = {range}, need M > {required}"
            ),
            Violation::DwellTimeTooShort { tau_a, tau_a_min } => write!(
                f,
                "tau_a > log(c)/(2 log(1/Omega))*T violated: tau_a = {tau_a}, need tau_a > {tau_a_min}"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DesignError {
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("mode {0}: no Q weight given")]
    MissingWeight(ModeId),
    #[error("mode {mode}: Q must be {expected}x{expected}")]
    WeightShape { mode: ModeId, expected: usize },
    #[error("Q given for unknown mode {0}")]
    StrayWeight(ModeId),
    #[error("{name} must be positive and finite, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("quantizer output dimension {quantizer} does not match plant output dimension {plant}")]
    QuantizerDimension { quantizer: usize, plant: usize },
    #[error("capture window tau = {tau} must be shorter than tau_a = {tau_a}")]
    CaptureWindowTooLong { tau: f64, tau_a: f64 },
    #[error("all observer gains vanish, so no finite zoom-in period exists")]
    ZeroInjection,
    #[error("infeasible design: {0}")]
    Infeasible(Violation),
}

/// Per-mode data for reconstructing the state from a capture window.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptureKernel {
    /// `W_p(τ)`
    pub gramian: SymmetricPositiveDefinite,
    pub gramian_inverse: Matrix,
    /// `e^{A_p τ}`
    pub propagator: Matrix,
    /// `Υ_p(τ)`
    pub response_bound: f64,
}

impl CaptureKernel {
    /// `2‖W⁻¹‖ τ Υ ‖e^{Aτ}‖`, the coefficient of `Δ·μ` in the capture zoom.
    pub fn error_gain(&self, tau: f64) -> f64 {
        2.0 * numerics::spectral_norm(&self.gramian_inverse)
            * tau
            * self.response_bound
            * numerics::spectral_norm(&self.propagator)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignCertificate {
    /// `P_p`
    pub lyapunov: BTreeMap<ModeId, SymmetricPositiveDefinite>,
    /// `λ̄_P`
    pub lambda_p_max: f64,
    /// `λ_P`
    pub lambda_p_min: f64,
    /// `λ_Q`
    pub lambda_q_min: f64,
    pub c_max: f64,
    pub theta: f64,
    /// `Γ = max ‖A_p‖`
    pub gamma: f64,
    /// `Λ = max(1, max ‖R‖)`
    pub jump_gain: f64,
    pub omega: f64,
    /// `c_{to,from}`, keyed `(to, from)`.
    pub scaling: BTreeMap<(ModeId, ModeId), f64>,
    pub c: f64,
    /// Right-hand side of the period condition; `T` must exceed it.
    pub period_infimum: f64,
    /// Zoom-in period `T`.
    pub period: f64,
    pub tau_a_min: f64,
    /// Number of capture windows that guarantee one free of switches.
    pub window_count: u64,
    pub capture: BTreeMap<ModeId, CaptureKernel>,
}

impl DesignCertificate {
    /// `R1(μ, ·)` threshold: `λ_P M² μ² / C_max²`.
    pub fn outer_level(&self, range: f64, mu: f64) -> f64 {
        self.lambda_p_min * range * range * mu * mu / (self.c_max * self.c_max)
    }

    /// `R2(μ, ·)` threshold: `λ̄_P (ΘΔ(1+κ))² μ²`.
    pub fn inner_level(&self, error_bound: f64, kappa: f64, mu: f64) -> f64 {
        let s = self.theta * error_bound * (1.0 + kappa) * mu;
        self.lambda_p_max * s * s
    }

    /// Guaranteed decrease rate of `V` between the two level sets.
    pub fn decrease_rate(&self, error_bound: f64, kappa: f64, mu: f64) -> f64 {
        let s = self.theta * error_bound * mu;
        self.lambda_q_min * kappa * (1.0 + kappa) * s * s
    }

    /// `Ω √(c^{T/τ_a})`, the per-period contraction of the zoom envelope.
    pub fn contraction(&self, tau_a: f64) -> f64 {
        self.omega * libm::pow(self.c, self.period / (2.0 * tau_a))
    }

    pub fn scaling_factor(&self, to: ModeId, from: ModeId) -> Option<f64> {
        self.scaling.get(&(to, from)).copied()
    }

    /// `c̲ = min(1, min c_{p2,p1})`
    pub fn min_scaling(&self) -> f64 {
        self.scaling.values().copied().fold(1.0, f64::min)
    }

    /// Range inequalities, then the dwell-time inequality for `inputs`.
    pub fn violations(&self, inputs: &DesignInputs) -> Vec<Violation> {
        let m = inputs.quantizer.range();
        let delta = inputs.quantizer.error_bound();
        let ratio = libm::sqrt(self.lambda_p_max / self.lambda_p_min);
        let mut out = Vec::new();
        if !(m > 2.0 * delta) {
            out.push(Violation::RangeBelowTwiceError {
                range: m,
                required: 2.0 * delta,
            });
        }
        let reconstruction = ratio * self.theta * delta * self.c_max;
        if !(m > reconstruction) {
            out.push(Violation::RangeBelowReconstructionLevel {
                range: m,
                required: reconstruction,
            });
        }
        let nested = reconstruction * (1.0 + inputs.kappa);
        if !(m > nested) {
            out.push(Violation::LevelSetsNotNested {
                range: m,
                required: nested,
                omega: self.omega,
            });
        }
        let tau_a = inputs.dwell.average_dwell_time();
        if out.is_empty() && !(tau_a > self.tau_a_min) {
            out.push(Violation::DwellTimeTooShort {
                tau_a,
                tau_a_min: self.tau_a_min,
            });
        }
        out
    }

    /// Fails on the first violated range inequality. The dwell-time
    /// inequality is left to [`DesignCertificate::ensure_dwell_time`] since
    /// `τ_a_min` is an output of the certificate.
    pub fn ensure_range(&self, inputs: &DesignInputs) -> Result<(), DesignError> {
        match self
            .violations(inputs)
            .into_iter()
            .find(|v| !matches!(v, Violation::DwellTimeTooShort { .. }))
        {
            Some(v) => Err(DesignError::Infeasible(v)),
            None => Ok(()),
        }
    }

    pub fn ensure_dwell_time(&self, tau_a: f64) -> Result<(), DesignError> {
        if tau_a > self.tau_a_min {
            Ok(())
        } else {
            Err(DesignError::Infeasible(Violation::DwellTimeTooShort {
                tau_a,
                tau_a_min: self.tau_a_min,
            }))
        }
    }
}

fn positive(name: &'static str, value: f64) -> Result<(), DesignError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(DesignError::BadParameter { name, value })
    }
}

fn validate(plant: &SwitchedPlant, inputs: &DesignInputs) -> Result<(), DesignError> {
    let n = plant.dims().state;
    for (id, _) in plant.modes() {
        let q = inputs.weights.get(&id).ok_or(DesignError::MissingWeight(id))?;
        if q.dim() != 2 * n {
            return Err(DesignError::WeightShape {
                mode: id,
                expected: 2 * n,
            });
        }
    }
    for id in inputs.weights.keys() {
        plant.mode(*id).map_err(|_| DesignError::StrayWeight(*id))?;
    }
    positive("kappa", inputs.kappa)?;
    positive("tau", inputs.capture_window)?;
    positive("tau_bar", inputs.zoom_out_period)?;
    positive("chi", inputs.zoom_out_margin)?;
    if inputs.quantizer.dim() != plant.dims().output {
        return Err(DesignError::QuantizerDimension {
            quantizer: inputs.quantizer.dim(),
            plant: plant.dims().output,
        });
    }
    let tau_a = inputs.dwell.average_dwell_time();
    if !(inputs.capture_window < tau_a) {
        return Err(DesignError::CaptureWindowTooLong {
            tau: inputs.capture_window,
            tau_a,
        });
    }
    plant.ensure_all_jumps()?;
    Ok(())
}

/// `Θ = 2 max_p ‖P_p [0; L_p]‖ / λ_Q`.
pub fn compute_theta(
    plant: &SwitchedPlant,
    lyapunov: &BTreeMap<ModeId, SymmetricPositiveDefinite>,
    lambda_q_min: f64,
) -> Result<f64, DesignError> {
    let mut worst: f64 = 0.0;
    for (id, mode) in plant.modes() {
        let p = lyapunov.get(&id).ok_or(PlantError::UnknownMode(id))?;
        worst = worst.max(numerics::spectral_norm(&(p.matrix() * mode.error_injection())));
    }
    Ok(2.0 * worst / lambda_q_min)
}

/// Smallest positive integer `N` with `N > τ_a/(τ_a-τ)·(N0 - τ/τ_a)`.
pub fn window_count(n0: f64, tau: f64, tau_a: f64) -> u64 {
    // same quantity, written so that N0 = 1 yields exactly 1
    let threshold = (tau_a * n0 - tau) / (tau_a - tau);
    if threshold < 1.0 {
        1
    } else {
        libm::floor(threshold) as u64 + 1
    }
}

/// Computes every certificate constant without rejecting infeasible
/// designs; an infeasible design shows up as `Ω ≥ 1`, a non-positive
/// period and a non-finite `τ_a_min`.
pub fn assess_design(
    plant: &SwitchedPlant,
    inputs: &DesignInputs,
) -> Result<DesignCertificate, DesignError> {
    validate(plant, inputs)?;

    let mut lyapunov = BTreeMap::new();
    for (id, mode) in plant.modes() {
        let q = &inputs.weights[&id];
        lyapunov.insert(id, numerics::solve_lyapunov(&mode.closed_loop_matrix(), q)?);
    }
    let lambda_p_max = lyapunov
        .values()
        .map(|p| p.max_eigenvalue())
        .fold(f64::NEG_INFINITY, f64::max);
    let lambda_p_min = lyapunov
        .values()
        .map(|p| p.min_eigenvalue())
        .fold(f64::INFINITY, f64::min);
    let lambda_q_min = inputs
        .weights
        .values()
        .map(|q| q.min_eigenvalue())
        .fold(f64::INFINITY, f64::min);
    let c_max = plant
        .modes()
        .map(|(_, m)| numerics::spectral_norm(m.c()))
        .fold(0.0, f64::max);
    let gamma = plant
        .modes()
        .map(|(_, m)| numerics::spectral_norm(m.a()))
        .fold(0.0, f64::max);
    let jump_gain = plant
        .jumps()
        .map(|(_, r)| numerics::spectral_norm(r))
        .fold(1.0, f64::max);

    let theta = compute_theta(plant, &lyapunov, lambda_q_min)?;
    if !(theta > 0.0) {
        return Err(DesignError::ZeroInjection);
    }

    let m = inputs.quantizer.range();
    let delta = inputs.quantizer.error_bound();
    let kappa = inputs.kappa;
    let omega =
        libm::sqrt(lambda_p_max / lambda_p_min) * theta * delta * (1.0 + kappa) * c_max / m;

    let outer = theta * delta * (1.0 + kappa) * c_max;
    let injected = theta * delta * c_max;
    let period_infimum = (lambda_p_min * m * m - lambda_p_max * outer * outer)
        / (lambda_q_min * kappa * (1.0 + kappa) * injected * injected);
    let period = (1.0 + PERIOD_MARGIN) * period_infimum;

    let mut scaling = BTreeMap::new();
    for (to, _) in plant.modes() {
        for (from, _) in plant.modes() {
            if to == from {
                continue;
            }
            let j = plant.closed_loop_jump(to, from)?;
            let c = numerics::min_scaling_factor(&lyapunov[&from], &lyapunov[&to], &j)?;
            scaling.insert((to, from), c);
        }
    }
    let c = scaling.values().copied().fold(1.0, f64::max);

    let tau_a_min = if omega < 1.0 && period > 0.0 {
        libm::log(c) / (2.0 * libm::log(1.0 / omega)) * period
    } else {
        f64::NAN
    };

    let tau = inputs.capture_window;
    let window = window_count(
        inputs.dwell.chatter_bound(),
        tau,
        inputs.dwell.average_dwell_time(),
    );

    let mut capture = BTreeMap::new();
    for (id, mode) in plant.modes() {
        let gramian = numerics::observability_gramian(mode.a(), mode.c(), tau)?;
        let gramian_inverse = gramian
            .matrix()
            .clone()
            .try_inverse()
            .ok_or(NumericsError::Singular)?;
        let propagator = numerics::matrix_exponential(mode.a(), tau)?;
        let response_bound = numerics::output_response_bound(mode.a(), mode.c(), tau)?;
        capture.insert(
            id,
            CaptureKernel {
                gramian,
                gramian_inverse,
                propagator,
                response_bound,
            },
        );
    }

    Ok(DesignCertificate {
        lyapunov,
        lambda_p_max,
        lambda_p_min,
        lambda_q_min,
        c_max,
        theta,
        gamma,
        jump_gain,
        omega,
        scaling,
        c,
        period_infimum,
        period,
        tau_a_min,
        window_count: window,
        capture,
    })
}

/// [`assess_design`] followed by the range inequalities.
pub fn compute_certificate(
    plant: &SwitchedPlant,
    inputs: &DesignInputs,
) -> Result<DesignCertificate, DesignError> {
    let cert = assess_design(plant, inputs)?;
    cert.ensure_range(inputs)?;
    Ok(cert)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityMargins {
    pub epsilon: f64,
    /// Zoom floor `α` applied at capture.
    pub alpha: f64,
    /// Upper bound `μ̄` on the zoom at capture.
    pub mu_bar: f64,
    /// Periods `m̄` after capture until the outer level set fits in the
    /// ε-ball.
    pub m_bar: u64,
    /// Lower bound `η` on the zoom before `t_ε`.
    pub eta: f64,
    /// May underflow to 0; see `log_delta`.
    pub delta: f64,
    /// Natural log of `delta`, computed without underflow.
    pub log_delta: f64,
    /// `N τ + m̄ T`, the horizon over which the dead zone keeps `u = 0`.
    pub quiet_horizon: f64,
}

/// Radius `δ` such that `|x(0)| < δ` keeps `|z(t)| < ε` for all `t`, when
/// the capture zoom is floored at `α`.
pub fn stability_margins(
    cert: &DesignCertificate,
    inputs: &DesignInputs,
    epsilon: f64,
    alpha: f64,
) -> Result<StabilityMargins, DesignError> {
    positive("epsilon", epsilon)?;
    positive("alpha", alpha)?;
    let tau_a = inputs.dwell.average_dwell_time();
    let n0 = inputs.dwell.chatter_bound();
    let rho = cert.contraction(tau_a);
    if !(rho < 1.0) || !(cert.period > 0.0) {
        return Err(DesignError::Infeasible(Violation::DwellTimeTooShort {
            tau_a,
            tau_a_min: cert.tau_a_min,
        }));
    }
    let m = inputs.quantizer.range();
    let delta_q = inputs.quantizer.error_bound();
    let dead_zone = inputs.quantizer.dead_zone();
    let tau = inputs.capture_window;
    let n_tau = cert.window_count as f64 * tau;
    let growth = libm::pow(cert.jump_gain, 1.0 / tau_a) * libm::exp(cert.gamma);
    let chatter = libm::pow(cert.jump_gain, n0);

    let worst_gain = cert
        .capture
        .values()
        .map(|k| {
            numerics::spectral_norm(&k.gramian_inverse)
                * k.response_bound
                * numerics::spectral_norm(&k.propagator)
        })
        .fold(0.0, f64::max);
    let mu_bar = alpha.max(
        2.0 * libm::sqrt(cert.lambda_p_max / cert.lambda_p_min)
            * delta_q
            * tau
            * cert.c_max
            * chatter
            * libm::pow(growth, (1.0 + inputs.zoom_out_margin) * n_tau)
            / m
            * worst_gain,
    );

    let ratio = libm::log(
        mu_bar * m * libm::pow(cert.c, 0.5 * (n0 + cert.period / tau_a)) / (epsilon * cert.c_max),
    ) / libm::log(1.0 / rho);
    let m_bar = if ratio < 1.0 {
        1
    } else {
        libm::floor(ratio) as u64 + 1
    };

    let eta = alpha
        * libm::pow(cert.omega, m_bar as f64)
        * libm::pow(
            cert.min_scaling(),
            0.5 * (n0 + m_bar as f64 * cert.period / tau_a),
        );

    let quiet_horizon = n_tau + m_bar as f64 * cert.period;
    // log-domain: the open-loop factors easily exceed the f64 range
    let log_growth = libm::log(cert.jump_gain) / tau_a + cert.gamma;
    let log_chatter = n0 * libm::log(cert.jump_gain);
    let log_short = log_chatter + log_growth * n_tau;
    let log_long = log_chatter + log_growth * quiet_horizon;
    let log_capture = libm::log(dead_zone / cert.c_max) - log_short;
    let log_zoom_in = libm::log(eta * dead_zone / cert.c_max) - log_long;
    let log_ball = libm::log(0.5 * epsilon) - log_long;
    let log_delta = libm::log(DELTA_SHRINK) + log_capture.min(log_zoom_in).min(log_ball);
    let delta = libm::exp(log_delta);

    Ok(StabilityMargins {
        epsilon,
        alpha,
        mu_bar,
        m_bar,
        eta,
        delta,
        log_delta,
        quiet_horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::ModeDynamics;
    use alloc::vec;

    fn m(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, cols, data)
    }

    fn single_mode_plant() -> SwitchedPlant {
        let mode = ModeDynamics::new(
            ModeId(1),
            m(2, 2, &[0.0, 1.0, -1.0, -0.5]),
            m(2, 1, &[0.0, 1.0]),
            m(1, 2, &[1.0, 0.0]),
            m(1, 2, &[-1.0, -1.0]),
            m(2, 1, &[-2.0, -1.0]),
        )
        .unwrap();
        SwitchedPlant::new(vec![(ModeId(1), mode)], vec![]).unwrap()
    }

    fn inputs(range: f64) -> DesignInputs {
        let mut weights = BTreeMap::new();
        weights.insert(ModeId(1), SymmetricPositiveDefinite::identity(4));
        DesignInputs {
            weights,
            kappa: 1.0,
            quantizer: QuantizerConfig::new(range, 0.01, None, 1).unwrap(),
            capture_window: 0.5,
            zoom_out_period: 1.0,
            zoom_out_margin: 0.1,
            dwell: DwellBound::new(1.0, 2.0).unwrap(),
        }
    }

    #[test]
    fn window_count_examples() {
        assert_eq!(window_count(1.0, 0.5, 2.0744), 2);
        assert_eq!(window_count(1.0, 0.1, 100.0), 2);
        assert_eq!(window_count(3.0, 0.5, 2.0), 4);
    }

    #[test]
    fn single_mode_has_unit_scaling() {
        let plant = single_mode_plant();
        let cert = compute_certificate(&plant, &inputs(0.2)).unwrap();
        assert_eq!(cert.c, 1.0);
        assert_eq!(cert.tau_a_min, 0.0);
        assert!(cert.omega < 1.0 && cert.period > 0.0);
        assert!(cert.period > cert.period_infimum);
    }

    #[test]
    fn theta_of_unit_lyapunov() {
        let plant = single_mode_plant();
        let mut p = BTreeMap::new();
        p.insert(ModeId(1), SymmetricPositiveDefinite::identity(4));
        // ‖[0; L]‖ = √5
        let theta = compute_theta(&plant, &p, 2.0).unwrap();
        assert!((theta - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn small_range_names_violated_condition() {
        let plant = single_mode_plant();
        let err = compute_certificate(&plant, &inputs(0.015)).unwrap_err();
        assert!(matches!(
            err,
            DesignError::Infeasible(Violation::RangeBelowTwiceError { .. })
        ));
        let cert = assess_design(&plant, &inputs(0.08)).unwrap();
        let needed = cert
            .violations(&inputs(0.08))
            .iter()
            .filter_map(Violation::minimum_range)
            .fold(0.0, f64::max);
        assert!(needed > 0.08);
        assert!(compute_certificate(&plant, &inputs(needed * 1.01)).is_ok());
    }

    #[test]
    fn capture_window_must_be_below_dwell_time() {
        let plant = single_mode_plant();
        let mut i = inputs(0.2);
        i.capture_window = 3.0;
        assert!(matches!(
            compute_certificate(&plant, &i),
            Err(DesignError::CaptureWindowTooLong { .. })
        ));
    }

    #[test]
    fn margins_for_huge_epsilon_use_one_period() {
        let plant = single_mode_plant();
        let i = inputs(0.2);
        let cert = compute_certificate(&plant, &i).unwrap();
        let margins = stability_margins(&cert, &i, 1e200, 1.0).unwrap();
        assert_eq!(margins.m_bar, 1);
        assert!(margins.delta > 0.0);
        assert!(margins.eta <= margins.alpha);
    }
}
