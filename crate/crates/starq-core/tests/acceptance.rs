//! Acceptance suite: one test per criterion, each printing a pass/fail
//! line with the measured values (visible with `--nocapture`). Run with
//!
//!     cargo test --release --test acceptance -- --test-threads=1 --nocapture
//!
//! Criteria marked "statistical" use fixed seeds and stated tolerances.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use starq_core::benchmark::{
    self, fit_decay, fit_quadratic, mqc_ghz_fidelity, qscore, MqcOptions, QScoreOptions, RbConfig,
    RbNoise,
};
use starq_core::calib;
use starq_core::device::paper_qpu;
use starq_core::gates::{wrap_angle, JCPhases, ManifoldPhases};
use starq_core::hamiltonian::{
    cz_conditional_phase, cz_population, effective_params_at, exact_half_splitting,
    five_level_propagator, propagator_conditional_phase, solve_cz_resonance,
    solve_move_resonance, zz_landscape, EffectiveCouplings, TWO_PI,
};
use starq_core::hilbert::HybridState;
use starq_core::noise::{
    ghz_budget, limit_cz, limit_move, BudgetMode, GhzBudgetOptions, LimitOptions,
};
use starq_core::sim::{Executor, NoiseSpec, SimOptions};
use starq_core::transpiler::{
    ghz_circuit, lower_cz, lower_cz_no_reuse, qaoa_circuit, resolve_phases, Circuit, Instr,
    PhaseMode,
};
use std::f64::consts::PI;

fn report(criterion: &str, pass: bool, detail: String) {
    println!("[{}] criterion {criterion}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_01_jc_ladder_two_step_population() {
    let dev = paper_qpu();
    let r = calib::jc_ladder(&dev, "QB3", "QB2", 2).unwrap();
    let expect = (2f64.sqrt() * PI / 2.0).sin().powi(2); // 0.6327
    let got = r.ladder_qubit_populations[0];
    report(
        "1 (JC ladder)",
        (got - expect).abs() < 0.005 && (expect - 0.6327).abs() < 5e-4,
        format!("two-step climb probability {got:.4} vs sin^2(sqrt2 pi/2) = {expect:.4}"),
    );
}

#[test]
fn criterion_02_sqrt_n_scaling() {
    let dev = paper_qpu();
    let eff = effective_params_at(&dev, "QB2", Some(4.22), Some(5.3)).unwrap();
    let mut worst = 0.0f64;
    for (i, g) in eff.g_ladder.iter().enumerate() {
        let n = (i + 1) as f64;
        worst = worst.max((g / eff.g_move - n.sqrt()).abs());
    }
    report(
        "2 (sqrt-n scaling)",
        worst < 1e-12 && eff.g_ladder.len() >= 4,
        format!("max |g_n/g_1 - sqrt(n)| = {worst:.2e} for n <= {}", eff.g_ladder.len()),
    );
}

#[test]
fn criterion_03_sw_vs_exact_splitting() {
    let dev = paper_qpu();
    let f_c = 5.2;
    // MOVE coupling at the dressed single-excitation crossing
    let fq_move = solve_move_resonance(&dev, "QB2", f_c).unwrap();
    let eff_m = effective_params_at(&dev, "QB2", Some(fq_move), Some(f_c)).unwrap();
    let half_m = exact_half_splitting(
        &dev,
        "QB2",
        f_c,
        [1, 0, 0],
        [0, 0, 1],
        (fq_move - 0.02, fq_move + 0.02),
        400,
    )
    .unwrap();
    let err_m = (eff_m.g_move.abs() - half_m).abs() / half_m;
    // CZ coupling at the |eg1>/|fg0> crossing
    let fq_cz = solve_cz_resonance(&dev, "QB2", f_c).unwrap();
    let eff_c = effective_params_at(&dev, "QB2", Some(fq_cz), Some(f_c)).unwrap();
    let half_c = exact_half_splitting(
        &dev,
        "QB2",
        f_c,
        [1, 0, 1],
        [2, 0, 0],
        (fq_cz - 0.03, fq_cz + 0.03),
        500,
    )
    .unwrap();
    let err_c = (eff_c.g_cz.abs() - half_c).abs() / half_c;
    report(
        "3 (SW vs exact)",
        err_m < 0.05 && err_c < 0.05,
        format!(
            "g_move {:.4} MHz vs exact {:.4} ({:.2}%), g_cz {:.4} vs {:.4} ({:.2}%)",
            eff_m.g_move_mhz().abs(),
            half_m / TWO_PI * 1e3,
            err_m * 100.0,
            eff_c.g_cz_mhz().abs(),
            half_c / TWO_PI * 1e3,
            err_c * 100.0
        ),
    );
}

#[test]
fn criterion_04_zz_landscape() {
    let dev = paper_qpu();
    let grid = zz_landscape(&dev, "QB2", (4.6, 6.5), (-0.35, 0.35), 101, 101);
    let max_abs =
        grid.iter().filter(|p| p.zeta_mhz.is_finite()).map(|p| p.zeta_mhz.abs()).fold(0.0, f64::max);
    let has_pos = grid.iter().any(|p| p.zeta_mhz > 0.01);
    let has_neg = grid.iter().any(|p| p.zeta_mhz < -0.01);
    report(
        "4 (ZZ landscape)",
        max_abs > 20.0 && has_pos && has_neg,
        format!("101x101 grid: max |zeta| = {max_abs:.2} MHz, zero contour = {}", has_pos && has_neg),
    );
}

#[test]
fn criterion_05_conditional_phase() {
    let dev = paper_qpu();
    // on-resonance full cycle gives pi
    let f_c = 5.2;
    let fq = solve_cz_resonance(&dev, "QB2", f_c).unwrap();
    let eff = effective_params_at(&dev, "QB2", Some(fq), Some(f_c)).unwrap();
    let t_cycle = TWO_PI / eff.omega_rabi;
    let on_res = wrap_angle(cz_conditional_phase(t_cycle, &eff) - PI).abs();
    // randomized draws against the five-level propagator
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 100 {
        let wq = TWO_PI * rng.gen_range(4.0..4.8);
        let aq = TWO_PI * rng.gen_range(-0.25..-0.15);
        let gcz = TWO_PI * rng.gen_range(0.004..0.02);
        let delta = aq + TWO_PI * rng.gen_range(-0.02..0.02);
        let om = ((delta - aq).powi(2) + 4.0 * gcz * gcz).sqrt();
        let t = rng.gen_range(5.0..250.0);
        if (om * t / 2.0).cos().abs() < 0.05 {
            continue;
        }
        let eff = EffectiveCouplings {
            omega_q: wq,
            omega_r: wq + delta,
            alpha_q: aq,
            g_move: 0.0,
            g_cz: gcz,
            g_ladder: vec![],
            delta,
            omega_rabi: om,
            delta_qc: 1.0,
            delta_rc: 1.0,
            sigma_qc: 1.0,
            sigma_rc: 1.0,
            dispersive_ratios: (0.0, 0.0),
        };
        let u = five_level_propagator(&eff, false, t);
        let p_err = (cz_population(t, &eff) - u[3][3].norm_sqr()).abs();
        let phi_err =
            wrap_angle(cz_conditional_phase(t, &eff) - propagator_conditional_phase(&eff, t)).abs();
        worst = worst.max(phi_err.max(p_err));
        checked += 1;
    }
    report(
        "5 (conditional phase)",
        on_res < 1e-3 && worst < 1e-2,
        format!("on-resonance |phi - pi| = {on_res:.2e}; worst propagator deviation {worst:.2e} over 100 draws"),
    );
}

#[test]
fn criterion_06_coherence_limit_averages() {
    let dev = paper_qpu();
    let opt = LimitOptions { thermal: false, zero_resonator_decay: false };
    let qs = dev.qubit_ids();
    let mm: f64 =
        qs.iter().map(|q| limit_move(&dev, q, opt).unwrap().1).sum::<f64>() / qs.len() as f64;
    let cz: f64 = qs.iter().map(|q| limit_cz(&dev, q, opt).unwrap()).sum::<f64>() / qs.len() as f64;
    report(
        "6 (coherence limits)",
        (mm - 0.993).abs() < 0.002 && (cz - 0.993).abs() < 0.003,
        format!("mean F_mm^c = {mm:.4} (0.993 +- 0.002), mean F_cz^c = {cz:.4} (0.993 +- 0.003)"),
    );
}

#[test]
fn criterion_07_ghz_budget() {
    let dev = paper_qpu();
    let limit = ghz_budget(&dev, "QB3", 6, &GhzBudgetOptions::default()).unwrap();
    let zeroed = ghz_budget(
        &dev,
        "QB3",
        6,
        &GhzBudgetOptions { zero_resonator_decay: true, ..Default::default() },
    )
    .unwrap();
    let measured = ghz_budget(
        &dev,
        "QB3",
        6,
        &GhzBudgetOptions { mode: BudgetMode::Measured, thermal: false, ..Default::default() },
    )
    .unwrap();
    let ok = (limit.total - 0.910).abs() < 0.010
        && (limit.total_with_readout - 0.842).abs() < 0.012
        && (measured.total - 0.85).abs() < 0.010
        && (zeroed.total_with_readout - 0.867).abs() < 0.010;
    report(
        "7 (GHZ budget)",
        ok,
        format!(
            "limit {:.4} (0.910+-0.010), readout {:.4} (0.842+-0.012), measured {:.4} (~0.85+-0.01), zero-resonator-decay {:.4} (0.867+-0.01)",
            limit.total, limit.total_with_readout, measured.total, zeroed.total_with_readout
        ),
    );
}

#[test]
fn criterion_08_ghz_mqc_simulation() {
    let dev = paper_qpu();
    // noiseless fidelity
    let ideal = mqc_ghz_fidelity(
        &dev,
        6,
        "QB3",
        &MqcOptions { shots: 4096, ..Default::default() },
    )
    .unwrap();
    // preset noise + readout, mitigated, 4096 trajectories
    let noisy = mqc_ghz_fidelity(
        &dev,
        6,
        "QB3",
        &MqcOptions {
            noise: NoiseSpec::Device { thermal: true },
            readout_errors: true,
            mitigate: true,
            shots: 4096,
            trajectories: 4096,
            seed: 7,
            phase_points: None,
        },
    )
    .unwrap();
    let ok = (ideal.fidelity - 1.0).abs() < 0.01
        && noisy.fidelity >= 0.80
        && noisy.fidelity <= 0.92;
    report(
        "8 (GHZ simulation)",
        ok,
        format!(
            "noiseless F = {:.4} (1.000 +- 0.01); mitigated noisy F = {:.4} in [0.80, 0.92]",
            ideal.fidelity, noisy.fidelity
        ),
    );
}

#[test]
fn criterion_09_rb_recovery() {
    let dev = paper_qpu();
    // depolarizing recovery within 3 sigma
    let p_inject = 0.02;
    let lambda = 1.0 - 4.0 * p_inject / 3.0;
    let cfg = RbConfig {
        m_list: vec![1, 4, 8, 16, 32, 64],
        n_seq: 40,
        shots: 200,
        noise: RbNoise::DepolarizingPerClifford(p_inject),
        seed: 11,
        move_theta: PI,
    };
    let data = benchmark::rb_1q(&dev, "QB3", 0, &cfg).unwrap();
    let fit = fit_decay(&data.points).unwrap();
    let sigma = fit.p_err[0].max(1e-4);
    let depol_ok = (fit.p[0] - lambda).abs() < 3.0 * sigma;
    // exchange-angle error: k^2-dominated loss growing with eps^2
    let mk_cfg = |eps: f64| RbConfig {
        m_list: vec![1, 2, 4, 8, 14],
        n_seq: 16,
        shots: 192,
        noise: RbNoise::None,
        seed: 5,
        move_theta: PI * (1.0 + eps),
    };
    let r1 = benchmark::irb_move(&dev, "QB2", &[1, 2, 3, 4], &mk_cfg(0.02)).unwrap();
    let r2 = benchmark::irb_move(&dev, "QB2", &[1, 2, 3, 4], &mk_cfg(0.05)).unwrap();
    let quad_ok = r1.quadratic.alpha > 0.0 && r2.quadratic.alpha > 2.0 * r1.quadratic.alpha;
    report(
        "9 (RB recovery)",
        depol_ok && quad_ok,
        format!(
            "fitted p = {:.4} vs injected {:.4} ({:.1} sigma); alpha(eps=0.02) = {:.2e}, alpha(eps=0.05) = {:.2e}",
            fit.p[0],
            lambda,
            (fit.p[0] - lambda).abs() / sigma,
            r1.quadratic.alpha,
            r2.quadratic.alpha
        ),
    );
}

#[test]
fn criterion_10_fit_model_transcription() {
    // synthetic data from the printed coefficients through the pipelines
    let (alpha_m, beta_m) = (4.6e-4, 6.1e-3);
    let ks: Vec<f64> = (1..=4).map(|k| k as f64).collect();
    let fs: Vec<f64> = ks.iter().map(|k| 1.0 - alpha_m * k * k - beta_m * k).collect();
    let f_mm = fit_quadratic(&ks, &fs, true).unwrap().eval(1.0);
    let (alpha_cz, beta_cz, gamma_m) = (7.32e-4, 1.01e-2, 0.989);
    let ls: Vec<f64> = (0..=5).map(|l| l as f64).collect();
    let fcs: Vec<f64> = ls.iter().map(|l| gamma_m - alpha_cz * l * l - beta_cz * l).collect();
    let fit = fit_quadratic(&ls, &fcs, false).unwrap();
    let f_cz = fit.eval(1.0) / fit.gamma;
    report(
        "10 (fit transcription)",
        (f_mm - 0.99344).abs() < 1e-4 && (f_cz - 0.98905).abs() < 1e-4,
        format!("F_mm = {f_mm:.5} (0.99344 +- 1e-4), F_cz = {f_cz:.5} (0.98905 +- 1e-4)"),
    );
}

#[test]
fn criterion_11_transpiler_counts() {
    let dev = paper_qpu();
    let ghz = ghz_circuit(&dev.qubit_ids(), "QB3", 6);
    let gc = ghz.native.counts();
    let lowered = lower_cz(&ghz.logical).unwrap().counts();
    // TFIM QAOA p = 3 on the six-qubit ring
    let qs = dev.qubit_ids();
    let ring: Vec<(usize, usize)> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
    let tfim = qaoa_circuit(&qs, &ring, &[0.3, 0.5, 0.7], &[0.2, 0.4, 0.6], None);
    let tc = lower_cz(&tfim).unwrap().counts();
    let naive = lower_cz_no_reuse(&tfim).unwrap().counts();
    let ok = gc.moves == 2
        && gc.czs == 5
        && lowered.moves == 2
        && lowered.czs == 5
        && tc.czs == 36
        && tc.moves == 36
        && naive.moves == 72;
    report(
        "11 (transpiler counts)",
        ok,
        format!(
            "GHZ(6): {} MOVE + {} CZ; TFIM p=3: {} CZ, {} MOVE after reuse (naive {} MOVE)",
            gc.moves, gc.czs, tc.czs, tc.moves, naive.moves
        ),
    );
}

#[test]
fn criterion_12_semantics_preservation() {
    let dev = paper_qpu();
    let qubits: Vec<String> = vec!["QB1".into(), "QB2".into(), "QB3".into()];
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = 1.0f64;
    for _ in 0..200 {
        // random logical circuit, depth <= 8 beyond the state preparation
        let mut logical = Circuit::new(qubits.clone());
        for q in &qubits {
            logical.push(Instr::Rot {
                q: q.clone(),
                angle: rng.gen_range(0.0..PI),
                phase: rng.gen_range(0.0..TWO_PI),
            });
        }
        for _ in 0..rng.gen_range(1..=8) {
            match rng.gen_range(0..3) {
                0 => {
                    let q = &qubits[rng.gen_range(0..3)];
                    logical.push(Instr::Rot {
                        q: q.clone(),
                        angle: rng.gen_range(-PI..PI),
                        phase: rng.gen_range(0.0..TWO_PI),
                    });
                }
                1 => {
                    let q = &qubits[rng.gen_range(0..3)];
                    logical.push(Instr::Vz { comp: q.clone(), angle: rng.gen_range(-PI..PI) });
                }
                _ => {
                    let a = rng.gen_range(0..3);
                    let b = (a + rng.gen_range(1..3)) % 3;
                    logical
                        .push(Instr::Cz { a: qubits[a].clone(), b: qubits[b].clone() });
                }
            }
        }
        // logical reference on a plain qubit register
        let mut reference = benchmark::logical::LogicalState::ground(3);
        for instr in &logical.instrs {
            match instr {
                Instr::Rot { q, angle, phase } => {
                    let qi = qubits.iter().position(|x| x == q).unwrap();
                    reference.rot(qi, *phase, *angle);
                }
                Instr::Vz { comp, angle } => {
                    let qi = qubits.iter().position(|x| x == comp).unwrap();
                    reference.vz(qi, *angle);
                }
                Instr::Cz { a, b } => {
                    let ai = qubits.iter().position(|x| x == a).unwrap();
                    let bi = qubits.iter().position(|x| x == b).unwrap();
                    reference.cz(ai, bi);
                }
                _ => {}
            }
        }
        // native execution
        let native = lower_cz(&logical).unwrap();
        let resolved = resolve_phases(&native, &dev, PhaseMode::FixedOnly).unwrap();
        let exec = Executor::new(&dev, &resolved.circuit).unwrap();
        let out = exec.run_trajectory(&resolved.circuit, &SimOptions::default(), 0).unwrap();
        // project onto the qubit register x resonator vacuum
        let mut overlap = C64::new(0.0, 0.0);
        let nr = dev.truncation + 1;
        for (z, ramp) in reference.amps.iter().enumerate() {
            let levels = [z >> 2 & 1, z >> 1 & 1, z & 1];
            let idx = ((levels[0] * 3 + levels[1]) * 3 + levels[2]) * nr;
            overlap += ramp.conj() * out.state.amplitudes[idx];
        }
        worst = worst.min(overlap.norm_sqr());
    }
    report(
        "12 (semantics preservation)",
        worst > 1.0 - 1e-9,
        format!("worst lowered-vs-logical fidelity over 200 random circuits: 1 - {:.2e}", 1.0 - worst),
    );
}

#[test]
fn criterion_13_populated_ramsey() {
    let dev = paper_qpu();
    let delta_mhz = 281.0;
    let delta = TWO_PI * delta_mhz * 1e-3;
    let delays: Vec<f64> = (0..160).map(|i| i as f64 * 0.11).collect();
    let mut phases = JCPhases::ideal_move();
    let (g2, z2) = (0.59, 0.775);
    phases.set_manifold(2, ManifoldPhases { gamma: g2, zeta: z2, chi: 0.3 });
    let r = calib::populated_ramsey(&dev, "QB3", "QB2", &delays, delta_mhz, &phases, 0.0, 0.0)
        .unwrap();
    let recover_ok = (r.gamma2 - g2).abs() < 1e-3 && (r.zeta2 - z2).abs() < 1e-3;
    // corrected circuit matches the ideal curve to 1e-9
    let (vphi, vphi_p) = (2.0 * r.zeta2, 2.0 * r.gamma2 + 2.0 * r.zeta2);
    let mut worst_correction = 0.0f64;
    for &t in &[0.7, 1.9, 4.2, 9.8] {
        let corrected =
            calib::populated_ramsey_point(&dev, Some("QB3"), "QB2", t, delta, &phases, vphi, vphi_p)
                .unwrap();
        let ideal = calib::populated_ramsey_point(
            &dev,
            Some("QB3"),
            "QB2",
            t,
            delta,
            &JCPhases::ideal_move(),
            0.0,
            0.0,
        )
        .unwrap();
        worst_correction = worst_correction.max((corrected - ideal).abs());
    }
    // n = 0 limit: standard Ramsey
    let mut worst_n0 = 0.0f64;
    for &t in &[0.0, 1.3, 2.9, 5.6] {
        let p = calib::populated_ramsey_point(
            &dev,
            None,
            "QB2",
            t,
            delta,
            &JCPhases::ideal_move(),
            0.0,
            0.0,
        )
        .unwrap();
        worst_n0 = worst_n0.max((p - 0.5 * (1.0 - (delta * t).cos())).abs());
    }
    report(
        "13 (populated Ramsey)",
        recover_ok && worst_correction < 1e-9 && worst_n0 < 1e-10,
        format!(
            "recovered gamma2 = {:.4} (true {g2}), zeta2 = {:.4} (true {z2}); corrected-vs-ideal {:.1e}; n=0 deviation {:.1e}",
            r.gamma2, r.zeta2, worst_correction, worst_n0
        ),
    );
}

#[test]
fn criterion_14_resonator_characterization() {
    let dev = paper_qpu();
    let delays_t1: Vec<f64> = (0..10).map(|i| 0.4 + i as f64 * 1.4).collect();
    let t1 = calib::cr_t1(&dev, "QB2", &delays_t1, 3000, 7).unwrap();
    let t1_ok = (t1.t1_us - 5.53).abs() / 5.53 < 0.05;
    let delays_t2: Vec<f64> = (0..64).map(|i| 0.05 + i as f64 * 0.35).collect();
    let t2 = calib::cr_ramsey(&dev, "QB2", &delays_t2, 280.0, 281.0, 1500, 3).unwrap();
    let t2_ok = (t2.t2_star_us - 10.9).abs() / 10.9 < 0.10;
    let delays_f: Vec<f64> = (0..48).map(|i| 0.05 + i as f64 * 0.11).collect();
    let grid: Vec<f64> = (0..11).map(|i| 277.0 + i as f64 * 0.8).collect();
    let fr = calib::cr_frequency(&dev, "QB2", &delays_f, &grid, 281.0, 600, 5).unwrap();
    let f_ok = (fr.detuning_mhz - 281.0).abs() < fr.bin_width_mhz;
    report(
        "14 (resonator characterization)",
        t1_ok && t2_ok && f_ok,
        format!(
            "T1 = {:.3} us (5.53 +- 5%), T2* = {:.3} us (10.9 +- 10%), detuning {:.3} MHz (281 +- {:.3})",
            t1.t1_us, t2.t2_star_us, fr.detuning_mhz, fr.bin_width_mhz
        ),
    );
}

#[test]
fn criterion_15_qscore() {
    let dev = paper_qpu();
    let opts = QScoreOptions { n_graphs: 60, shots: 2048, seed: 13, ..Default::default() };
    let r = qscore(&dev, 6, &opts).unwrap();
    report(
        "15 (Q-score)",
        r.beta > 0.2,
        format!("noiseless beta(6) = {:.4} +- {:.4} over 60 graphs (threshold 0.2)", r.beta, r.sem),
    );
}

#[test]
fn criterion_16_zne() {
    let dev = paper_qpu();
    let opts = benchmark::tfim::ZnePipelineOptions {
        lambdas: vec![1, 2, 3],
        trajectories: 3072,
        shots_per_trajectory: 64,
        seed: 11,
        p2: 8.3e-3,
        p1: 0.0,
    };
    let r = benchmark::zne_tfim(&dev, 1.0, &opts).unwrap();
    let e1 = r.energies[0].1;
    let shortfall = 1.0 - e1 / r.noiseless_energy;
    let recovery = (r.extrapolated.value - r.noiseless_energy).abs() / r.noiseless_energy.abs();
    report(
        "16 (ZNE)",
        (0.14..=0.26).contains(&shortfall) && recovery < 0.04,
        format!(
            "lambda=1 shortfall {:.1}% (~20%), extrapolated {:.4} vs noiseless {:.4} ({:.2}% error)",
            shortfall * 100.0,
            r.extrapolated.value,
            r.noiseless_energy,
            recovery * 100.0
        ),
    );
}

#[test]
fn criterion_17_determinism_across_worker_counts() {
    let dev = paper_qpu();
    // a trajectory-noise pipeline and a landscape grid, run under two
    // different worker pools, must produce byte-identical CSV bodies
    let run_all = || {
        let g = ghz_circuit(&dev.qubit_ids(), "QB3", 4);
        let resolved = resolve_phases(&g.native, &dev, PhaseMode::FixedOnly).unwrap();
        let exec = Executor::new(&dev, &resolved.circuit).unwrap();
        let opts = SimOptions {
            noise: NoiseSpec::Device { thermal: true },
            trajectories: 64,
            seed: 21,
            ..Default::default()
        };
        let pops: Vec<f64> = exec
            .run_ensemble(&resolved.circuit, &opts, |o, _| o.state.populations("QB3").unwrap()[1])
            .unwrap();
        let grid = zz_landscape(&dev, "QB2", (4.8, 6.0), (-0.3, 0.3), 13, 13);
        let mut body = String::new();
        for p in &pops {
            body.push_str(&format!("{p}\n"));
        }
        for p in &grid {
            body.push_str(&format!("{},{},{}\n", p.omega_c_ghz, p.delta_ghz, p.zeta_mhz));
        }
        body
    };
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let quad = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = single.install(run_all);
    let b = quad.install(run_all);
    report(
        "17 (determinism)",
        a == b,
        format!("CSV bodies identical across 1 and 4 workers ({} bytes)", a.len()),
    );
}
