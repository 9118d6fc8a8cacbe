//! Checks shared by the acceptance target and the feasible-variant suite.
//! Each returns a one-line summary, `Err` when the property fails.

use std::collections::BTreeSet;
use std::time::Instant;

use super::*;
use qswitch_core::controller::UpdateReason;
use qswitch_core::numerics::{self, Matrix, Vector};
use qswitch_core::plant::{generate_adt_signal, verify_adt, DwellBound, SignalGenerator};
use qswitch_core::simulator::Outcome;
use qswitch_core::{
    assess_design, compute_certificate, monitor_invariants, simulate, stability_margins,
    DesignCertificate, Scenario, TrajectoryRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

pub const PUBLISHED: [(&str, f64); 4] = [
    ("T", 0.6025),
    ("Omega", 0.9063),
    ("c", 1.9867),
    ("tau_a_min", 2.0744),
];

pub fn certificate_values(inputs: &DesignInputs) -> Check {
    let start = Instant::now();
    let cert = assess_design(&example_plant(), inputs).map_err(|e| format!("design error: {e}"))?;
    let elapsed = start.elapsed().as_secs_f64();
    let got = [cert.period, cert.omega, cert.c, cert.tau_a_min];
    let mut parts = Vec::new();
    let mut ok = elapsed < 1.0;
    for ((name, want), g) in PUBLISHED.iter().zip(got) {
        let rel = ((g - want) / want).abs();
        ok &= rel <= 0.02;
        parts.push(format!("{name}={g:.4} (want {want}, rel err {rel:.3})"));
    }
    let line = format!("{}; {:.3} s", parts.join(", "), elapsed);
    if ok { Ok(line) } else { Err(line) }
}

fn feasible(inputs: &DesignInputs) -> Result<DesignCertificate, String> {
    let cert = compute_certificate(&example_plant(), inputs)
        .map_err(|e| format!("certificate rejected: {e}"))?;
    cert.ensure_dwell_time(inputs.dwell.average_dwell_time())
        .map_err(|e| format!("certificate rejected: {e}"))?;
    Ok(cert)
}

fn run(
    inputs: &DesignInputs,
    cert: &DesignCertificate,
    signal: qswitch_core::plant::SwitchingSignal,
    x0: Vector,
    h: f64,
    floor: f64,
) -> Result<TrajectoryRecord, String> {
    let sc = Scenario::new(example_plant(), inputs.clone(), signal, x0, 40.0, h)
        .and_then(|s| s.with_zoom_floor(floor))
        .map_err(|e| e.to_string())?;
    let rec = simulate(&sc, cert).map_err(|e| e.to_string())?;
    match rec.outcome {
        Outcome::Completed => Ok(rec),
        Outcome::Diverged { t, norm } => Err(format!("diverged at t = {t} (|z| = {norm:e})")),
    }
}

/// Euclidean norm that does not underflow for tiny entries.
fn scaled_norm(v: &Vector) -> f64 {
    let m = v.amax();
    if m == 0.0 { 0.0 } else { m * (v / m).norm() }
}

fn z_at(rec: &TrajectoryRecord, step: u64) -> f64 {
    rec.rows[step as usize].z().norm()
}

pub fn example_trajectory(inputs: &DesignInputs) -> Check {
    let start = Instant::now();
    let cert = feasible(inputs)?;
    let h = 1e-3;
    let rec = run(inputs, &cert, example_signal(), example_x0(), h, 0.0)?;
    let elapsed = start.elapsed().as_secs_f64();
    let capture = rec.capture_step.ok_or("no capture")?;
    let t_capture = capture as f64 * h;
    let mut problems = Vec::new();
    if (t_capture - 0.5).abs() > 0.5 * h {
        problems.push(format!("capture at {t_capture}"));
    }
    let mut rises = BTreeSet::new();
    for e in &rec.events {
        if let qswitch_core::simulator::EventKind::Zoom(z) = &e.kind {
            if e.step <= capture {
                continue;
            }
            if z.after > z.before {
                rises.insert(e.step);
            }
            if z.after < z.before && z.reason != UpdateReason::Period {
                problems.push(format!("mu decreased at t = {} by {}", e.t, z.reason));
            }
        }
    }
    let expected: BTreeSet<u64> = [3500, 7000, 20000].into_iter().collect();
    if rises != expected {
        let times: Vec<f64> = rises.iter().map(|k| *k as f64 * h).collect();
        problems.push(format!("mu rose at {times:?}"));
    }
    let ratio = z_at(&rec, rec.rows.len() as u64 - 1) / z_at(&rec, capture);
    if !(ratio <= 0.01) {
        problems.push(format!("|z(40)|/|z(0.5)| = {ratio:.3e}"));
    }
    if elapsed >= 10.0 {
        problems.push(format!("runtime {elapsed:.2} s"));
    }
    let line = format!(
        "capture t = {t_capture}, |z(40)|/|z(0.5)| = {ratio:.3e}, {elapsed:.2} s"
    );
    if problems.is_empty() { Ok(line) } else { Err(format!("{line}; {}", problems.join("; "))) }
}

pub fn invariance_suite(base: &DesignInputs) -> Check {
    let probe = assess_design(&example_plant(), base).map_err(|e| e.to_string())?;
    let tau_a = 1.2 * probe.tau_a_min;
    if !tau_a.is_finite() || !(tau_a > 0.0) {
        return Err(format!(
            "no minimum dwell time (Omega = {:.4}, T = {:.4})",
            probe.omega, probe.period
        ));
    }
    let n0 = base.dwell.chatter_bound();
    let mut inputs = base.clone();
    inputs.dwell = DwellBound::new(n0, tau_a).map_err(|e| e.to_string())?;
    let cert = feasible(&inputs)?;
    let h = 1e-3;
    let mut failures = Vec::new();
    for seed in 0..20u64 {
        let spec = SignalGenerator {
            bound: inputs.dwell,
            horizon: 40.0,
            seed,
            initial_mode: Some(P1),
            grid: Some(h),
        };
        let signal = generate_adt_signal(&[P1, P2], &spec).map_err(|e| e.to_string())?;
        if let Err(v) = verify_adt(&signal, &inputs.dwell, 40.0) {
            failures.push(format!("seed {seed}: signal breaks ADT {v:?}"));
            continue;
        }
        match run(&inputs, &cert, signal, example_x0(), h, 0.0) {
            Err(e) => failures.push(format!("seed {seed}: {e}")),
            Ok(rec) if rec.capture_step.is_none() => failures.push(format!("seed {seed}: no capture")),
            Ok(rec) => {
                let rep = monitor_invariants(&rec, &cert, &inputs);
                if !rep.outer_region.passed || !rep.zoom_envelope.passed {
                    failures.push(format!("seed {seed}: {:?}", rep.failing()));
                }
            }
        }
    }
    let line = format!("tau_a = {tau_a:.4}, N0 = {n0}, {} of 20 scenarios pass", 20 - failures.len());
    if failures.is_empty() { Ok(line) } else { Err(format!("{line}; {}", failures.join("; "))) }
}

pub fn lyapunov_suite(inputs: &DesignInputs) -> Check {
    let cert = feasible(inputs)?;
    let (epsilon, alpha) = (1.0, 1.0);
    let margins =
        stability_margins(&cert, inputs, epsilon, alpha).map_err(|e| format!("margins: {e}"))?;
    if !(margins.delta > 0.0) {
        return Err(format!("delta underflows: ln delta = {:.1}", margins.log_delta));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let dir = Vector::from_fn(2, |_, _| rng.gen_range(-1.0..1.0)).normalize();
        let x0 = dir * (margins.delta * rng.gen_range(0.0..1.0));
        let rec = run(inputs, &cert, example_signal(), x0, 1e-3, alpha)
            .map_err(|e| format!("start {i}: {e}"))?;
        let peak = rec.rows.iter().map(|r| scaled_norm(&r.z())).fold(0.0, f64::max);
        worst = worst.max(peak);
    }
    let line = format!(
        "delta = {:.3e} (ln {:.1}), m_bar = {}, max |z| = {worst:.3e} < {epsilon}",
        margins.delta, margins.log_delta, margins.m_bar
    );
    if worst < epsilon { Ok(line) } else { Err(line) }
}

pub fn grid_convergence(inputs: &DesignInputs) -> Check {
    let cert = feasible(inputs)?;
    let mut finals = Vec::new();
    for h in [1e-3, 5e-4] {
        let rec = run(inputs, &cert, example_signal(), example_x0(), h, 0.0)?;
        finals.push(rec.last().map(|r| r.z().norm()).unwrap_or(f64::NAN));
    }
    let rel = (finals[0] - finals[1]).abs() / finals[1];
    let line = format!(
        "|z(40)| = {:.6e} (h = 1e-3) vs {:.6e} (h = 5e-4), rel diff {rel:.3e}",
        finals[0], finals[1]
    );
    if rel < 0.01 { Ok(line) } else { Err(line) }
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> numerics::SymmetricPositiveDefinite {
    let b = random_matrix(rng, n, n);
    numerics::SymmetricPositiveDefinite::new(&b * b.transpose() + Matrix::identity(n, n) * 0.1)
        .unwrap()
}

pub fn numerics_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut lyap: f64 = 0.0;
    for i in 0..100 {
        let n = 2 + i % 5;
        let a = random_matrix(&mut rng, n, n) * 2.0;
        let f = &a - Matrix::identity(n, n) * (numerics::spectral_abscissa(&a) + rng.gen_range(0.2..1.5));
        let q = random_spd(&mut rng, n);
        let p = numerics::solve_lyapunov(&f, &q).map_err(|e| e.to_string())?;
        lyap = lyap.max(
            numerics::lyapunov_residual(&f, p.matrix(), q.matrix()) / numerics::spectral_norm(q.matrix()),
        );
    }

    let mut gram: f64 = 0.0;
    for mode in [mode1(), mode2()] {
        let w = numerics::observability_gramian(mode.a(), mode.c(), 0.5).map_err(|e| e.to_string())?;
        let panels = 10_000;
        let h = 0.5 / panels as f64;
        let step = numerics::matrix_exponential(mode.a(), h).map_err(|e| e.to_string())?;
        let ctc = mode.c().transpose() * mode.c();
        let mut e = Matrix::identity(2, 2);
        let mut acc = Matrix::zeros(2, 2);
        for k in 0..=panels {
            let wk = if k == 0 || k == panels { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += (e.transpose() * &ctc * &e) * wk;
            e = &e * &step;
        }
        acc *= h / 3.0;
        gram = gram.max(numerics::spectral_norm(&(w.matrix() - &acc)) / numerics::spectral_norm(&acc));
    }

    let mut scaling: f64 = 0.0;
    for i in 0..100 {
        let n = 2 + i % 4;
        let p1 = random_spd(&mut rng, n);
        let p2 = random_spd(&mut rng, n);
        let j = random_matrix(&mut rng, n, n);
        let eig = p1.matrix().clone().symmetric_eigen();
        let s = &eig.eigenvectors
            * Matrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
            * eig.eigenvectors.transpose();
        let pulled = &s * j.transpose() * p2.matrix() * &j * &s;
        let oracle = numerics::max_symmetric_eigenvalue(&numerics::symmetrize(&pulled)).max(0.0);
        let got = numerics::min_scaling_factor(&p1, &p2, &j).map_err(|e| e.to_string())?;
        scaling = scaling.max((got - oracle).abs() / oracle);
    }

    let mut semigroup: f64 = 0.0;
    for i in 0..100 {
        let n = 1 + i % 6;
        let a = random_matrix(&mut rng, n, n) * 1.5;
        let (s, t) = (rng.gen_range(0.0..2.0), rng.gen_range(0.0..2.0));
        let lhs = numerics::matrix_exponential(&a, s + t).map_err(|e| e.to_string())?;
        let rhs = numerics::matrix_exponential(&a, s).map_err(|e| e.to_string())?
            * numerics::matrix_exponential(&a, t).map_err(|e| e.to_string())?;
        semigroup = semigroup.max(numerics::spectral_norm(&(&lhs - &rhs)) / numerics::spectral_norm(&lhs));
    }

    let line = format!(
        "lyapunov {lyap:.2e} (<= 1e-10), gramian {gram:.2e} (<= 1e-8), scaling {scaling:.2e} (<= 1e-9), semigroup {semigroup:.2e} (<= 1e-9)"
    );
    if lyap <= 1e-10 && gram <= 1e-8 && scaling <= 1e-9 && semigroup <= 1e-9 {
        Ok(line)
    } else {
        Err(line)
    }
}

pub fn quantizer_properties() -> Check {
    use qswitch_core::QuantizerConfig;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let configs = [
        QuantizerConfig::new(10.0, 0.05, None, 1).unwrap(),
        QuantizerConfig::new(3.0, 0.2, None, 2).unwrap(),
        QuantizerConfig::new(1.0, 0.1, Some(0.1), 3).unwrap(),
    ];
    let ball = |rng: &mut ChaCha8Rng, dim: usize, lo: f64, hi: f64| loop {
        let d = Vector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0));
        let n = d.norm();
        if n > 1e-6 && n <= 1.0 {
            break d * (rng.gen_range(lo..hi) / n);
        }
    };
    let mut violations = [0usize; 4];
    let samples = 100_000;
    for i in 0..samples {
        let q = &configs[i % configs.len()];
        let y = ball(&mut rng, q.dim(), 0.0, q.range());
        if (q.quantize(&y).unwrap() - &y).norm() > q.error_bound() {
            violations[0] += 1;
        }
        let y = ball(&mut rng, q.dim(), q.range() * (1.0 + 1e-12), 100.0 * q.range());
        if !(q.quantize(&y).unwrap().norm() > q.range() - q.error_bound()) {
            violations[1] += 1;
        }
        let y = ball(&mut rng, q.dim(), 0.0, q.dead_zone());
        if q.quantize(&y).unwrap() != Vector::zeros(q.dim()) {
            violations[2] += 1;
        }
        let mu = 10f64.powf(rng.gen_range(-6.0..6.0));
        let y = ball(&mut rng, q.dim(), 0.0, q.range() * mu);
        let zoomed = q.zoomed_quantize(&y, mu).unwrap();
        if zoomed != q.quantize(&(&y / mu)).unwrap() * mu
            || (zoomed - &y).norm() > q.error_bound() * mu * (1.0 + 1e-12)
        {
            violations[3] += 1;
        }
    }
    let line = format!(
        "{samples} samples each; violations: error bound {}, saturation {}, dead zone {}, zoom scaling {}",
        violations[0], violations[1], violations[2], violations[3]
    );
    if violations.iter().all(|v| *v == 0) { Ok(line) } else { Err(line) }
}
