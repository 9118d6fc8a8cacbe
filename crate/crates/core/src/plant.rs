//! Switched linear plant, its gains and jump maps, and switching signals.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::{self, Matrix, NumericsError};

/// Relative singular-value threshold for the observability rank test.
pub const OBSERVABILITY_RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeId(pub u32);

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlantError {
    #[error("mode {mode}: {what}")]
    Shape { mode: ModeId, what: &'static str },
    #[error("mode {0}: matrices contain non-finite entries")]
    NonFinite(ModeId),
    #[error("mode {mode}: A+BK is not Hurwitz (spectral abscissa {abscissa:e})")]
    FeedbackNotHurwitz { mode: ModeId, abscissa: f64 },
    #[error("mode {mode}: A+LC is not Hurwitz (spectral abscissa {abscissa:e})")]
    ObserverNotHurwitz { mode: ModeId, abscissa: f64 },
    #[error("mode {mode}: (C, A) is not observable (rank {rank} < {n})")]
    NotObservable { mode: ModeId, rank: usize, n: usize },
    #[error("plant has no modes")]
    Empty,
    #[error("mode {0} is defined twice")]
    DuplicateMode(ModeId),
    #[error("unknown mode {0}")]
    UnknownMode(ModeId),
    #[error("no jump matrix for switch {from} -> {to}")]
    MissingJump { to: ModeId, from: ModeId },
    #[error("jump {from} -> {to}: {what}")]
    BadJump {
        to: ModeId,
        from: ModeId,
        what: &'static str,
    },
    #[error("switch {index}: {what}")]
    BadSwitch { index: usize, what: &'static str },
    #[error("interval end {t} must exceed start {s}")]
    EmptyInterval { s: f64, t: f64 },
    #[error("average dwell-time bound needs N0 >= 1 and tau_a > 0 (got N0 = {n0}, tau_a = {tau_a})")]
    BadDwellBound { n0: f64, tau_a: f64 },
    #[error("signal generation needs at least two modes")]
    TooFewModes,
    #[error("grid step must be positive, got {0}")]
    BadGrid(f64),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// One mode's `(A, B, C)` together with its feedback and observer gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeDynamics {
    a: Matrix,
    b: Matrix,
    c: Matrix,
    k: Matrix,
    l: Matrix,
}

impl ModeDynamics {
    /// Checks shapes, Hurwitzness of `A+BK` and `A+LC`, and observability.
    pub fn new(
        id: ModeId,
        a: Matrix,
        b: Matrix,
        c: Matrix,
        k: Matrix,
        l: Matrix,
    ) -> Result<Self, PlantError> {
        let shape = |what| PlantError::Shape { mode: id, what };
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(shape("A must be square and non-empty"));
        }
        let m = b.ncols();
        let p = c.nrows();
        if b.nrows() != n {
            return Err(shape("B must have n rows"));
        }
        if c.ncols() != n || p == 0 {
            return Err(shape("C must be p x n with p >= 1"));
        }
        if k.nrows() != m || k.ncols() != n {
            return Err(shape("K must be m x n"));
        }
        if l.nrows() != n || l.ncols() != p {
            return Err(shape("L must be n x p"));
        }
        if [&a, &b, &c, &k, &l]
            .iter()
            .any(|mat| mat.iter().any(|x| !x.is_finite()))
        {
            return Err(PlantError::NonFinite(id));
        }
        let dynamics = Self { a, b, c, k, l };
        let abscissa = numerics::spectral_abscissa(&dynamics.feedback_matrix());
        if !(abscissa < -numerics::HURWITZ_MARGIN) {
            return Err(PlantError::FeedbackNotHurwitz { mode: id, abscissa });
        }
        let abscissa = numerics::spectral_abscissa(&dynamics.observer_matrix());
        if !(abscissa < -numerics::HURWITZ_MARGIN) {
            return Err(PlantError::ObserverNotHurwitz { mode: id, abscissa });
        }
        let rank = numerics::numerical_rank(&dynamics.observability_matrix(), OBSERVABILITY_RANK_TOL);
        if rank < n {
            return Err(PlantError::NotObservable { mode: id, rank, n });
        }
        Ok(dynamics)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn c(&self) -> &Matrix {
        &self.c
    }
    pub fn k(&self) -> &Matrix {
        &self.k
    }
    pub fn l(&self) -> &Matrix {
        &self.l
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }
    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    /// `A + BK`
    pub fn feedback_matrix(&self) -> Matrix {
        &self.a + &self.b * &self.k
    }

    /// `A + LC`
    pub fn observer_matrix(&self) -> Matrix {
        &self.a + &self.l * &self.c
    }

    /// `[C; CA; ...; CA^{n-1}]`
    pub fn observability_matrix(&self) -> Matrix {
        let n = self.state_dim();
        let p = self.output_dim();
        let mut out = Matrix::zeros(n * p, n);
        let mut block = self.c.clone();
        for i in 0..n {
            out.view_mut((i * p, 0), (p, n)).copy_from(&block);
            block = &block * &self.a;
        }
        out
    }

    /// `F = [[A+BK, -BK], [0, A+LC]]` in the coordinates `z = (x, x - ξ)`.
    pub fn closed_loop_matrix(&self) -> Matrix {
        let n = self.state_dim();
        let bk = &self.b * &self.k;
        let mut f = Matrix::zeros(2 * n, 2 * n);
        f.view_mut((0, 0), (n, n)).copy_from(&(&self.a + &bk));
        f.view_mut((0, n), (n, n)).copy_from(&(-bk));
        f.view_mut((n, n), (n, n)).copy_from(&self.observer_matrix());
        f
    }

    /// `[0; L]`, the channel through which quantization error enters `z`.
    pub fn error_injection(&self) -> Matrix {
        let n = self.state_dim();
        let p = self.output_dim();
        let mut out = Matrix::zeros(2 * n, p);
        out.view_mut((n, 0), (n, p)).copy_from(&self.l);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub state: usize,
    pub input: usize,
    pub output: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchedPlant {
    modes: BTreeMap<ModeId, ModeDynamics>,
    jumps: BTreeMap<(ModeId, ModeId), Matrix>,
    dims: Dims,
}

impl SwitchedPlant {
    /// `jumps` is keyed by `(to, from)`, matching `R_{σ(t_k), σ(t_k^-)}`.
    pub fn new(
        modes: Vec<(ModeId, ModeDynamics)>,
        jumps: Vec<((ModeId, ModeId), Matrix)>,
    ) -> Result<Self, PlantError> {
        let first = modes.first().ok_or(PlantError::Empty)?;
        let dims = Dims {
            state: first.1.state_dim(),
            input: first.1.input_dim(),
            output: first.1.output_dim(),
        };
        let mut mode_map = BTreeMap::new();
        for (id, dynamics) in modes {
            if dynamics.state_dim() != dims.state
                || dynamics.input_dim() != dims.input
                || dynamics.output_dim() != dims.output
            {
                return Err(PlantError::Shape {
                    mode: id,
                    what: "dimensions differ from the other modes",
                });
            }
            if mode_map.insert(id, dynamics).is_some() {
                return Err(PlantError::DuplicateMode(id));
            }
        }
        let mut jump_map = BTreeMap::new();
        for ((to, from), r) in jumps {
            let bad = |what| PlantError::BadJump { to, from, what };
            if to == from {
                return Err(bad("source and target modes coincide"));
            }
            if !mode_map.contains_key(&to) {
                return Err(PlantError::UnknownMode(to));
            }
            if !mode_map.contains_key(&from) {
                return Err(PlantError::UnknownMode(from));
            }
            if r.nrows() != dims.state || r.ncols() != dims.state {
                return Err(bad("R must be n x n"));
            }
            if r.iter().any(|x| !x.is_finite()) {
                return Err(bad("R has non-finite entries"));
            }
            if jump_map.insert((to, from), r).is_some() {
                return Err(bad("defined twice"));
            }
        }
        Ok(Self {
            modes: mode_map,
            jumps: jump_map,
            dims,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn mode(&self, p: ModeId) -> Result<&ModeDynamics, PlantError> {
        self.modes.get(&p).ok_or(PlantError::UnknownMode(p))
    }

    pub fn modes(&self) -> impl Iterator<Item = (ModeId, &ModeDynamics)> {
        self.modes.iter().map(|(id, m)| (*id, m))
    }

    pub fn mode_ids(&self) -> Vec<ModeId> {
        self.modes.keys().copied().collect()
    }

    pub fn jumps(&self) -> impl Iterator<Item = ((ModeId, ModeId), &Matrix)> {
        self.jumps.iter().map(|(key, r)| (*key, r))
    }

    /// `R_{to, from}`
    pub fn jump(&self, to: ModeId, from: ModeId) -> Result<&Matrix, PlantError> {
        self.mode(to)?;
        self.mode(from)?;
        self.jumps
            .get(&(to, from))
            .ok_or(PlantError::MissingJump { to, from })
    }

    /// Every ordered pair of distinct modes must carry a jump matrix.
    pub fn ensure_all_jumps(&self) -> Result<(), PlantError> {
        for to in self.modes.keys() {
            for from in self.modes.keys() {
                if to != from {
                    self.jump(*to, *from)?;
                }
            }
        }
        Ok(())
    }

    pub fn closed_loop_matrix(&self, p: ModeId) -> Result<Matrix, PlantError> {
        Ok(self.mode(p)?.closed_loop_matrix())
    }

    /// `J = diag(R, R)` acting on `z = (x, x - ξ)`.
    pub fn closed_loop_jump(&self, to: ModeId, from: ModeId) -> Result<Matrix, PlantError> {
        if to == from {
            return Err(PlantError::BadJump {
                to,
                from,
                what: "source and target modes coincide",
            });
        }
        let r = self.jump(to, from)?;
        let n = self.dims.state;
        let mut j = Matrix::zeros(2 * n, 2 * n);
        j.view_mut((0, 0), (n, n)).copy_from(r);
        j.view_mut((n, n), (n, n)).copy_from(r);
        Ok(j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Switch {
    pub time: f64,
    pub mode: ModeId,
}

/// Right-continuous, piecewise-constant mode schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchingSignal {
    initial_mode: ModeId,
    switches: Vec<Switch>,
}

impl SwitchingSignal {
    pub fn new(initial_mode: ModeId, switches: Vec<Switch>) -> Result<Self, PlantError> {
        let mut previous_time = 0.0;
        let mut previous_mode = initial_mode;
        for (index, sw) in switches.iter().enumerate() {
            let bad = |what| PlantError::BadSwitch { index, what };
            if !sw.time.is_finite() || !(sw.time > 0.0) {
                return Err(bad("switch times must be finite and positive"));
            }
            if index > 0 && !(sw.time > previous_time) {
                return Err(bad("switch times must be strictly increasing"));
            }
            if sw.mode == previous_mode {
                return Err(bad("consecutive modes must differ"));
            }
            previous_time = sw.time;
            previous_mode = sw.mode;
        }
        Ok(Self {
            initial_mode,
            switches,
        })
    }

    pub fn constant(mode: ModeId) -> Self {
        Self {
            initial_mode: mode,
            switches: Vec::new(),
        }
    }

    pub fn initial_mode(&self) -> ModeId {
        self.initial_mode
    }

    pub fn switches(&self) -> &[Switch] {
        &self.switches
    }

    /// `σ(t)`; a switch at `t` is already in force.
    pub fn mode_at(&self, t: f64) -> ModeId {
        let idx = self.switches.partition_point(|sw| sw.time <= t);
        if idx == 0 {
            self.initial_mode
        } else {
            self.switches[idx - 1].mode
        }
    }

    /// `N_σ(t, s)`: switches in the half-open interval `(s, t]`.
    pub fn count_switches(&self, s: f64, t: f64) -> Result<usize, PlantError> {
        if !(t > s) {
            return Err(PlantError::EmptyInterval { s, t });
        }
        let upto_t = self.switches.partition_point(|sw| sw.time <= t);
        let upto_s = self.switches.partition_point(|sw| sw.time <= s);
        Ok(upto_t - upto_s)
    }

    /// Moves every switch to the nearest multiple of `h`.
    pub fn snapped_to_grid(&self, h: f64) -> Result<Self, PlantError> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(PlantError::BadGrid(h));
        }
        let switches = self
            .switches
            .iter()
            .map(|sw| Switch {
                time: grid_point(libm::round(sw.time / h), h),
                mode: sw.mode,
            })
            .collect();
        Self::new(self.initial_mode, switches)
    }

    /// Every mode the signal visits.
    pub fn visited_modes(&self) -> impl Iterator<Item = ModeId> + '_ {
        core::iter::once(self.initial_mode).chain(self.switches.iter().map(|sw| sw.mode))
    }
}

/// The average dwell-time constraint `N_σ(t,s) ≤ N0 + (t-s)/τ_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellBound {
    n0: f64,
    tau_a: f64,
}

impl DwellBound {
    pub fn new(n0: f64, tau_a: f64) -> Result<Self, PlantError> {
        if !(n0 >= 1.0) || !n0.is_finite() || !(tau_a > 0.0) || !tau_a.is_finite() {
            return Err(PlantError::BadDwellBound { n0, tau_a });
        }
        Ok(Self { n0, tau_a })
    }

    pub fn chatter_bound(&self) -> f64 {
        self.n0
    }

    pub fn average_dwell_time(&self) -> f64 {
        self.tau_a
    }

    pub fn allowed(&self, span: f64) -> f64 {
        self.n0 + span / self.tau_a
    }
}

/// A pair `(s, t)` with `N_σ(t, s) > N0 + (t - s)/τ_a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellViolation {
    pub s: f64,
    pub t: f64,
    pub count: usize,
    pub allowed: f64,
}

/// Checks the dwell bound over every pair of switches up to `horizon`. The
/// count is piecewise constant, so the tightest windows open just before one
/// switch and close on another.
pub fn verify_adt(
    signal: &SwitchingSignal,
    bound: &DwellBound,
    horizon: f64,
) -> Result<(), DwellViolation> {
    let times: Vec<f64> = signal
        .switches()
        .iter()
        .map(|sw| sw.time)
        .take_while(|t| *t <= horizon)
        .collect();
    for j in 0..times.len() {
        for i in 0..=j {
            let count = j - i + 1;
            let span = times[j] - times[i];
            let excess = count as f64 - bound.allowed(span);
            if excess > 0.0 {
                let room_before = if i == 0 {
                    times[0]
                } else {
                    times[i] - times[i - 1]
                };
                let eps = (0.5 * room_before).min(0.5 * excess * bound.tau_a);
                let s = times[i] - eps;
                return Err(DwellViolation {
                    s,
                    t: times[j],
                    count,
                    allowed: bound.allowed(times[j] - s),
                });
            }
        }
    }
    Ok(())
}

/// `k·h`, computed as `k / (1/h)` when `1/h` is an integer so that decimal
/// times such as 1.4 at `h = 1e-3` come out as the nearest double.
pub fn grid_point(k: f64, h: f64) -> f64 {
    let inv = libm::round(1.0 / h);
    if inv >= 1.0 && libm::fabs(inv * h - 1.0) < 1e-12 {
        k / inv
    } else {
        k * h
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignalGenerator {
    pub bound: DwellBound,
    pub horizon: f64,
    pub seed: u64,
    pub initial_mode: Option<ModeId>,
    /// When set, switch times are multiples of this step.
    pub grid: Option<f64>,
}

/// Draws a random signal on `modes` that satisfies `bound` by construction:
/// each candidate switch time is pushed past the earliest instant at which
/// no window ending on it would exceed the bound.
pub fn generate_adt_signal(
    modes: &[ModeId],
    spec: &SignalGenerator,
) -> Result<SwitchingSignal, PlantError> {
    if modes.len() < 2 {
        return Err(PlantError::TooFewModes);
    }
    if let Some(h) = spec.grid {
        if !(h > 0.0) || !h.is_finite() {
            return Err(PlantError::BadGrid(h));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let initial = match spec.initial_mode {
        Some(p) if modes.contains(&p) => p,
        Some(p) => return Err(PlantError::UnknownMode(p)),
        None => modes[rng.gen_range(0..modes.len())],
    };
    let tau_a = spec.bound.tau_a;
    let margin = 1e-9 * tau_a;
    let mut times: Vec<f64> = Vec::new();
    let mut switches = Vec::new();
    let mut current = initial;
    loop {
        let last = times.last().copied().unwrap_or(0.0);
        let mut candidate = last + tau_a * rng.gen_range(0.05..2.0);
        let j = times.len();
        for (i, t_i) in times.iter().enumerate() {
            let count = (j - i + 1) as f64;
            if count > spec.bound.n0 {
                candidate = candidate.max(t_i + tau_a * (count - spec.bound.n0) + margin);
            }
        }
        if let Some(h) = spec.grid {
            candidate = grid_point(libm::ceil(candidate / h), h);
        }
        if candidate > spec.horizon {
            break;
        }
        let others: Vec<ModeId> = modes.iter().copied().filter(|p| *p != current).collect();
        current = others[rng.gen_range(0..others.len())];
        times.push(candidate);
        switches.push(Switch {
            time: candidate,
            mode: current,
        });
    }
    SwitchingSignal::new(initial, switches)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sec5_signal() -> SwitchingSignal {
        SwitchingSignal::new(
            ModeId(1),
            vec![
                Switch { time: 3.5, mode: ModeId(2) },
                Switch { time: 7.0, mode: ModeId(1) },
                Switch { time: 20.0, mode: ModeId(2) },
            ],
        )
        .unwrap()
    }

    #[test]
    fn counts_on_half_open_interval() {
        let sig = sec5_signal();
        assert_eq!(sig.count_switches(0.0, 10.0).unwrap(), 2);
        assert_eq!(sig.count_switches(3.5, 7.0).unwrap(), 1);
        assert_eq!(sig.count_switches(3.4, 3.5).unwrap(), 1);
        assert!(sig.count_switches(2.0, 2.0).is_err());
        assert_eq!(SwitchingSignal::constant(ModeId(1)).count_switches(0.0, 5.0).unwrap(), 0);
    }

    #[test]
    fn mode_is_right_continuous() {
        let sig = sec5_signal();
        assert_eq!(sig.mode_at(3.499), ModeId(1));
        assert_eq!(sig.mode_at(3.5), ModeId(2));
        assert_eq!(sig.mode_at(100.0), ModeId(2));
    }

    #[test]
    fn rejects_malformed_signals() {
        let bad = |sw: Vec<Switch>| SwitchingSignal::new(ModeId(1), sw).is_err();
        assert!(bad(vec![Switch { time: 0.0, mode: ModeId(2) }]));
        assert!(bad(vec![Switch { time: 1.0, mode: ModeId(1) }]));
        assert!(bad(vec![
            Switch { time: 2.0, mode: ModeId(2) },
            Switch { time: 2.0, mode: ModeId(1) },
        ]));
    }

    #[test]
    fn adt_checks() {
        let bound = DwellBound::new(1.0, 2.0744).unwrap();
        assert!(verify_adt(&sec5_signal(), &bound, 40.0).is_ok());

        let dense = SwitchingSignal::new(
            ModeId(1),
            vec![
                Switch { time: 1.0, mode: ModeId(2) },
                Switch { time: 1.1, mode: ModeId(1) },
            ],
        )
        .unwrap();
        let bound = DwellBound::new(1.0, 10.0).unwrap();
        let v = verify_adt(&dense, &bound, 40.0).unwrap_err();
        assert!(v.s < 1.0 && v.t == 1.1);
        assert_eq!(dense.count_switches(v.s, v.t).unwrap(), v.count);
        assert!(v.count as f64 > v.allowed);

        assert!(verify_adt(&SwitchingSignal::constant(ModeId(3)), &bound, 1e6).is_ok());
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = SignalGenerator {
            bound: DwellBound::new(2.0, 1.5).unwrap(),
            horizon: 50.0,
            seed: 9,
            initial_mode: None,
            grid: Some(1e-3),
        };
        let modes = [ModeId(1), ModeId(2), ModeId(3)];
        let a = generate_adt_signal(&modes, &spec).unwrap();
        let b = generate_adt_signal(&modes, &spec).unwrap();
        assert_eq!(a, b);
        assert!(!a.switches().is_empty());
        assert_eq!(a.snapped_to_grid(1e-3).unwrap(), a);
    }

    #[test]
    fn zero_gains_are_rejected() {
        let z = Matrix::zeros(1, 1);
        let err = ModeDynamics::new(ModeId(1), z.clone(), z.clone(), z.clone(), z.clone(), z)
            .unwrap_err();
        assert!(matches!(err, PlantError::FeedbackNotHurwitz { .. }));
    }
}
