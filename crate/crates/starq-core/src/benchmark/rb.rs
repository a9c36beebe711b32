//! Randomized-benchmarking harnesses: single-qubit reference RB,
//! interleaved double-MOVE RB, and two-qubit MOVE-lCZ-MOVE interleaved RB
//! with the group inverse taken from the Clifford tables.

use super::clifford::{C2Gate, CMat, Clifford1Q, Clifford2Q};
use super::fits::{fit_decay, fit_quadratic, rb_fidelity, FitError, QuadraticFidelityFit, RbPoint};
use crate::device::DeviceParams;
use crate::gates::{self, JCPhases};
use crate::hilbert::{HybridState, SubsystemLayout};
use crate::noise::{trajectory_seed, trajectory_step, NoiseChannel};
use crate::sim::{outcome_distribution, pauli, SimError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub enum RbNoise {
    None,
    /// Uniform non-identity Pauli with this probability after every
    /// Clifford (and nothing on the interleaved element).
    DepolarizingPerClifford(f64),
    /// T1 / T2* trajectory channels with per-gate durations.
    Device,
}

#[derive(Debug, Clone)]
pub struct RbConfig {
    pub m_list: Vec<usize>,
    pub n_seq: usize,
    pub shots: usize,
    pub noise: RbNoise,
    pub seed: u64,
    /// MOVE exchange angle (pi when calibrated).
    pub move_theta: f64,
}

impl RbConfig {
    /// Paper-style defaults: 60 random sequences at 256 repetitions for
    /// single-qubit RB.
    pub fn default_1q() -> Self {
        Self {
            m_list: vec![1, 2, 4, 8, 16, 32, 64, 128],
            n_seq: 60,
            shots: 256,
            noise: RbNoise::None,
            seed: 0,
            move_theta: PI,
        }
    }

    /// Two-qubit RB runs 30 random sequences.
    pub fn default_2q() -> Self {
        Self {
            m_list: vec![1, 2, 4, 8, 12, 20, 30],
            n_seq: 30,
            shots: 256,
            noise: RbNoise::None,
            seed: 0,
            move_theta: PI,
        }
    }
}

/// Survival data of one RB experiment (one k / l value).
#[derive(Debug, Clone)]
pub struct SurvivalData {
    pub points: Vec<RbPoint>,
}

struct RbEngine {
    layout: Arc<SubsystemLayout>,
    qubits: Vec<String>,
    n_max: usize,
    /// Durations (ns): tau_s, tau_m, tau_cz for the active pair.
    tau_s: f64,
    tau_m: f64,
    tau_cz: f64,
    channels: Vec<NoiseChannel>,
}

impl RbEngine {
    fn new(device: &DeviceParams, qubits: &[String]) -> Result<Self, SimError> {
        let refs: Vec<&str> = qubits.iter().map(String::as_str).collect();
        let layout = Arc::new(SubsystemLayout::qubits_and_resonator(&refs, device.truncation));
        let d0 = device.durations_of(&qubits[0])?;
        let (tau_m, tau_cz) = (d0.tau_m_ns, {
            let cz_q = qubits.last().unwrap();
            device.durations_of(cz_q)?.tau_cz_ns
        });
        let mut channels = Vec::new();
        for q in qubits.iter().map(String::as_str).chain(["CR"]) {
            channels.push(NoiseChannel::from_device(device, q, false)?);
        }
        Ok(Self {
            layout,
            qubits: qubits.to_vec(),
            n_max: device.truncation,
            tau_s: d0.tau_s_ns,
            tau_m,
            tau_cz,
            channels,
        })
    }

    fn chan(&self, comp: &str) -> &NoiseChannel {
        self.channels.iter().find(|c| c.component == comp).expect("channel")
    }

    fn apply_sqg(
        &self,
        state: &mut HybridState,
        qubit: usize,
        index: usize,
        noise: &RbNoise,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), SimError> {
        let d = Clifford1Q::get().decompositions[index];
        let q = &self.qubits[qubit];
        state.apply_in_place(&gates::rot(q, d.phase, d.angle))?;
        state.apply_in_place(&gates::vz(q, d.vz, 3))?;
        if matches!(noise, RbNoise::Device) {
            trajectory_step(state, std::slice::from_ref(self.chan(q)), self.tau_s, rng)?;
        }
        Ok(())
    }

    /// MOVE on the first (move) qubit, with the calibrated pair phase
    /// folded in at the closing move of each pair by the caller.
    fn apply_move(
        &self,
        state: &mut HybridState,
        theta: f64,
        noise: &RbNoise,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), SimError> {
        let q = &self.qubits[0];
        let phases = JCPhases::with_theta(theta);
        if matches!(noise, RbNoise::Device) {
            trajectory_step(state, std::slice::from_ref(self.chan(q)), self.tau_m / 2.0, rng)?;
        }
        state.apply_in_place(&gates::move_op(q, &phases, self.n_max))?;
        if matches!(noise, RbNoise::Device) {
            trajectory_step(state, std::slice::from_ref(self.chan("CR")), self.tau_m / 2.0, rng)?;
        }
        Ok(())
    }

    fn apply_cz_native(
        &self,
        state: &mut HybridState,
        noise: &RbNoise,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), SimError> {
        let cz_q = self.qubits.last().unwrap();
        state.apply_in_place(&gates::cz(cz_q, PI, 0.0, 0.0, &gates::CzModel::Ideal, self.n_max))?;
        if matches!(noise, RbNoise::Device) {
            for c in [cz_q.as_str(), "CR"] {
                trajectory_step(state, std::slice::from_ref(self.chan(c)), self.tau_cz, rng)?;
            }
        }
        Ok(())
    }

    /// Effective CZ between the move and cz qubit: MOVE, CZ(cz, CR),
    /// MOVE, VZ(pi) on the move qubit.
    fn apply_effective_cz(
        &self,
        state: &mut HybridState,
        theta: f64,
        noise: &RbNoise,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), SimError> {
        self.apply_move(state, theta, noise, rng)?;
        self.apply_cz_native(state, noise, rng)?;
        self.apply_move(state, theta, noise, rng)?;
        state.apply_in_place(&gates::vz(&self.qubits[0], PI, 3))?;
        Ok(())
    }

    fn depolarize(
        &self,
        state: &mut HybridState,
        p: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<(), SimError> {
        if rng.gen::<f64>() < p {
            // uniform non-identity Pauli over the register
            let n_paulis = 4usize.pow(self.qubits.len() as u32) - 1;
            let mut which = rng.gen_range(1..=n_paulis);
            for q in &self.qubits {
                let w = which % 4;
                which /= 4;
                if w > 0 {
                    state.apply_in_place(&pauli(q, w - 1))?;
                }
            }
        }
        Ok(())
    }
}

/// Ground-state survival of interleaved single-qubit RB on `qubit`:
/// `interleave_k` double MOVEs follow every Clifford (0 = reference).
pub fn rb_1q(
    device: &DeviceParams,
    qubit: &str,
    interleave_k: usize,
    cfg: &RbConfig,
) -> Result<SurvivalData, SimError> {
    let engine = RbEngine::new(device, &[qubit.to_string()])?;
    let c1 = Clifford1Q::get();
    let mut points = Vec::new();
    for &m in &cfg.m_list {
        let results: Vec<f64> = (0..cfg.n_seq as u64)
            .into_par_iter()
            .map(|seq| -> Result<f64, SimError> {
                let mut seq_rng = ChaCha8Rng::seed_from_u64(trajectory_seed(
                    cfg.seed ^ (interleave_k as u64) << 48 ^ (m as u64) << 24,
                    seq,
                ));
                let indices: Vec<usize> =
                    (0..m).map(|_| seq_rng.gen_range(0..24)).collect();
                let mut acc = CMat::eye(2);
                for &i in &indices {
                    acc = c1.matrices[i].mul(&acc);
                }
                // double MOVE pairs are identity in the calibrated model
                let inverse = c1.inverse[c1.lookup(&acc).expect("closure")];
                let mut survived = 0usize;
                for shot in 0..cfg.shots as u64 {
                    let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(
                        seq_rng.gen::<u64>() ^ 0xabcd,
                        shot,
                    ));
                    let mut state = HybridState::ground(engine.layout.clone());
                    for &i in &indices {
                        engine.apply_sqg(&mut state, 0, i, &cfg.noise, &mut rng)?;
                        if let RbNoise::DepolarizingPerClifford(p) = cfg.noise {
                            engine.depolarize(&mut state, p, &mut rng)?;
                        }
                        // the per-pair VZ corrections are frame bookkeeping:
                        // with no drive pulses between the MOVEs they fold
                        // into a single phase applied afterwards
                        for _ in 0..2 * interleave_k {
                            engine.apply_move(&mut state, cfg.move_theta, &cfg.noise, &mut rng)?;
                        }
                        if interleave_k > 0 {
                            state
                                .apply_in_place(&gates::vz(qubit, interleave_k as f64 * PI, 3))?;
                        }
                    }
                    engine.apply_sqg(&mut state, 0, inverse, &cfg.noise, &mut rng)?;
                    if let RbNoise::DepolarizingPerClifford(p) = cfg.noise {
                        engine.depolarize(&mut state, p, &mut rng)?;
                    }
                    let dist = outcome_distribution(&state, &engine.qubits);
                    if rng.gen::<f64>() < dist[0] {
                        survived += 1;
                    }
                }
                Ok(survived as f64 / cfg.shots as f64)
            })
            .collect::<Result<_, _>>()?;
        let mean = results.iter().sum::<f64>() / results.len() as f64;
        let var = results.iter().map(|r| (r - mean).powi(2)).sum::<f64>()
            / (results.len().max(2) - 1) as f64;
        points.push(RbPoint {
            m,
            k: interleave_k,
            mean,
            sem: (var / results.len() as f64).sqrt(),
        });
    }
    Ok(SurvivalData { points })
}

/// Two-qubit RB on (move_qubit, cz_qubit) with `interleave_l` CZ gates
/// inside a MOVE-lCZ-MOVE block after every Clifford; `interleave_l`
/// None runs the reference.
pub fn rb_2q(
    device: &DeviceParams,
    move_qubit: &str,
    cz_qubit: &str,
    interleave_l: Option<usize>,
    cfg: &RbConfig,
) -> Result<SurvivalData, SimError> {
    let engine = RbEngine::new(device, &[move_qubit.to_string(), cz_qubit.to_string()])?;
    let c2 = Clifford2Q::get();
    let k_tag = interleave_l.map(|l| l + 1).unwrap_or(0);
    let mut points = Vec::new();
    for &m in &cfg.m_list {
        let results: Vec<f64> = (0..cfg.n_seq as u64)
            .into_par_iter()
            .map(|seq| -> Result<f64, SimError> {
                let mut seq_rng = ChaCha8Rng::seed_from_u64(trajectory_seed(
                    cfg.seed ^ (k_tag as u64) << 48 ^ (m as u64) << 24 ^ 0x2222,
                    seq,
                ));
                let indices: Vec<usize> =
                    (0..m).map(|_| seq_rng.gen_range(0..11520)).collect();
                let mut acc = CMat::eye(4);
                let cz_mat = super::clifford::cz4();
                for &i in &indices {
                    acc = c2.matrices[i].mul(&acc);
                    if let Some(l) = interleave_l {
                        if l % 2 == 1 {
                            acc = cz_mat.mul(&acc);
                        }
                    }
                }
                let inverse = c2.inverse[c2.lookup(&acc).expect("closure")];
                let mut survived = 0usize;
                for shot in 0..cfg.shots as u64 {
                    let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(
                        seq_rng.gen::<u64>() ^ 0xdcba,
                        shot,
                    ));
                    let mut state = HybridState::ground(engine.layout.clone());
                    let run_c2 = |state: &mut HybridState,
                                      idx: usize,
                                      rng: &mut ChaCha8Rng|
                     -> Result<(), SimError> {
                        for g in &c2.decompositions[idx] {
                            match g {
                                C2Gate::Sqg { qubit, index } => {
                                    engine.apply_sqg(state, *qubit, *index, &cfg.noise, rng)?
                                }
                                C2Gate::Cz => engine.apply_effective_cz(
                                    state,
                                    cfg.move_theta,
                                    &cfg.noise,
                                    rng,
                                )?,
                            }
                        }
                        if let RbNoise::DepolarizingPerClifford(p) = cfg.noise {
                            engine.depolarize(state, p, rng)?;
                        }
                        Ok(())
                    };
                    for &i in &indices {
                        run_c2(&mut state, i, &mut rng)?;
                        if let Some(l) = interleave_l {
                            engine.apply_move(&mut state, cfg.move_theta, &cfg.noise, &mut rng)?;
                            for _ in 0..l {
                                engine.apply_cz_native(&mut state, &cfg.noise, &mut rng)?;
                            }
                            engine.apply_move(&mut state, cfg.move_theta, &cfg.noise, &mut rng)?;
                            state.apply_in_place(&gates::vz(move_qubit, PI, 3))?;
                        }
                    }
                    run_c2(&mut state, inverse, &mut rng)?;
                    let dist = outcome_distribution(&state, &engine.qubits);
                    if rng.gen::<f64>() < dist[0] {
                        survived += 1;
                    }
                }
                Ok(survived as f64 / cfg.shots as f64)
            })
            .collect::<Result<_, _>>()?;
        let mean = results.iter().sum::<f64>() / results.len() as f64;
        let var = results.iter().map(|r| (r - mean).powi(2)).sum::<f64>()
            / (results.len().max(2) - 1) as f64;
        points.push(RbPoint { m, k: k_tag, mean, sem: (var / results.len() as f64).sqrt() });
    }
    Ok(SurvivalData { points })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct IrbResult {
    /// Interleaved-gate fidelity per k (or l), from the depolarization
    /// ratio p_k / p_ref.
    pub per_k: Vec<(usize, f64)>,
    pub quadratic: QuadraticFidelityFit,
    /// f_m(1) for the double MOVE; f_cz(1)/gamma_m for the CZ.
    pub gate_fidelity: f64,
    pub reference_p: f64,
    pub all_points: Vec<RbPoint>,
}

/// Interleaved double-MOVE RB: reference decay plus k = 1..k_max
/// interleaved runs, quadratic model over k with gamma pinned to 1.
pub fn irb_move(
    device: &DeviceParams,
    qubit: &str,
    k_list: &[usize],
    cfg: &RbConfig,
) -> Result<IrbResult, SimError> {
    assert!(k_list.iter().all(|&k| k >= 1));
    let mut all_points = rb_1q(device, qubit, 0, cfg)?.points;
    for &k in k_list {
        all_points.extend(rb_1q(device, qubit, k, cfg)?.points);
    }
    irb_analysis(&all_points, k_list, 2, true).map_err(SimError::from)
}

/// MOVE-lCZ-MOVE interleaved two-qubit RB; gamma is free and the CZ
/// fidelity is f_cz(1)/gamma.
pub fn irb_move_lcz(
    device: &DeviceParams,
    move_qubit: &str,
    cz_qubit: &str,
    l_list: &[usize],
    cfg: &RbConfig,
) -> Result<IrbResult, SimError> {
    let mut all_points = rb_2q(device, move_qubit, cz_qubit, None, cfg)?.points;
    for &l in l_list {
        all_points.extend(rb_2q(device, move_qubit, cz_qubit, Some(l), cfg)?.points);
    }
    // points are tagged k = l + 1 so l = 0 stays distinct from the
    // reference; irb_analysis shifts the tags back to l for the fit
    let shifted: Vec<usize> = l_list.iter().map(|l| l + 1).collect();
    irb_analysis(&all_points, &shifted, 4, false).map_err(SimError::from)
}

impl From<FitError> for SimError {
    fn from(e: FitError) -> Self {
        SimError::Transpile(crate::transpiler::TranspileError::Parse {
            line: 0,
            msg: format!("fit failure: {e}"),
        })
    }
}

fn irb_analysis(
    all_points: &[RbPoint],
    k_list: &[usize],
    dim: usize,
    fix_gamma: bool,
) -> Result<IrbResult, FitError> {
    let fit = fit_decay(all_points)?;
    let mut ks: Vec<usize> = all_points.iter().map(|p| p.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let p_of = |k: usize| fit.p[ks.iter().position(|x| *x == k).unwrap()];
    let p_ref = p_of(0);
    let per_k: Vec<(usize, f64)> = k_list
        .iter()
        .map(|&k| (k, rb_fidelity(p_of(k) / p_ref, dim)))
        .collect();
    let kx: Vec<f64> = per_k
        .iter()
        .map(|(k, _)| if fix_gamma { *k as f64 } else { (*k as isize - 1) as f64 })
        .collect();
    let ky: Vec<f64> = per_k.iter().map(|(_, f)| *f).collect();
    let quadratic = fit_quadratic(&kx, &ky, fix_gamma)?;
    let gate_fidelity = if fix_gamma {
        quadratic.eval(1.0)
    } else {
        quadratic.eval(1.0) / quadratic.gamma
    };
    Ok(IrbResult {
        per_k: per_k
            .iter()
            .zip(&kx)
            .map(|((_, f), &x)| (x.max(0.0) as usize, *f))
            .collect(),
        quadratic,
        gate_fidelity,
        reference_p: p_ref,
        all_points: all_points.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::paper_qpu;

    #[test]
    fn noiseless_rb_survival_is_unity() {
        let dev = paper_qpu();
        let cfg = RbConfig {
            m_list: vec![1, 4, 10],
            n_seq: 8,
            shots: 24,
            noise: RbNoise::None,
            seed: 3,
            move_theta: PI,
        };
        for k in [0usize, 2] {
            let data = rb_1q(&dev, "QB2", k, &cfg).unwrap();
            for p in &data.points {
                assert!(p.mean > 0.999, "m = {}, k = {k}: survival {}", p.m, p.mean);
            }
        }
        let data = rb_2q(&dev, "QB2", "QB1", Some(1), &cfg).unwrap();
        for p in &data.points {
            assert!(p.mean > 0.999, "2q survival {}", p.mean);
        }
    }

    #[test]
    fn depolarizing_p_recovered_within_three_sigma() {
        let dev = paper_qpu();
        let p_inject = 0.02; // Pauli-error probability per Clifford
        let lambda = 1.0 - 4.0 * p_inject / 3.0;
        let cfg = RbConfig {
            m_list: vec![1, 4, 8, 16, 32, 64],
            n_seq: 40,
            shots: 200,
            noise: RbNoise::DepolarizingPerClifford(p_inject),
            seed: 11,
            move_theta: PI,
        };
        let data = rb_1q(&dev, "QB3", 0, &cfg).unwrap();
        let fit = fit_decay(&data.points).unwrap();
        let sigma = fit.p_err[0].max(1e-4);
        assert!(
            (fit.p[0] - lambda).abs() < 3.0 * sigma,
            "fitted {} vs injected {lambda} (sigma {sigma})",
            fit.p[0]
        );
    }

    #[test]
    fn exchange_angle_error_gives_quadratic_loss() {
        // theta = pi(1 + eps): the per-Clifford loss of the interleaved
        // block grows as k^2, so alpha dominates and scales with eps^2
        let dev = paper_qpu();
        let eps = 0.05;
        let cfg = RbConfig {
            m_list: vec![1, 2, 4, 8, 14],
            n_seq: 16,
            shots: 192,
            noise: RbNoise::None,
            seed: 5,
            move_theta: PI * (1.0 + eps),
        };
        let res = irb_move(&dev, "QB2", &[1, 2, 3, 4], &cfg).unwrap();
        assert!(res.quadratic.alpha > 0.0, "alpha = {}", res.quadratic.alpha);
        let cfg2 = RbConfig { move_theta: PI * (1.0 + 2.0 * eps), ..cfg };
        let res2 = irb_move(&dev, "QB2", &[1, 2, 3, 4], &cfg2).unwrap();
        assert!(
            res2.quadratic.alpha > 2.0 * res.quadratic.alpha,
            "alpha should grow ~quadratically with eps: {} vs {}",
            res2.quadratic.alpha,
            res.quadratic.alpha
        );
    }
}
