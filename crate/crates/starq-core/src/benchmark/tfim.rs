//! Transverse-field Ising model on the six-qubit ring: exact ground
//! state by dense diagonalization, QAOA ground-state preparation, energy
//! estimation from Z- and X-basis counts, and zero-noise extrapolation
//! with gate-level unitary folding.

use super::logical::LogicalState;
use crate::device::DeviceParams;
use crate::sim::{
    outcome_distribution, sample_from_distribution, Executor, NoiseSpec, SimError, SimOptions,
};
use crate::transpiler::{fold, lower_cz, qaoa_circuit, resolve_phases, Circuit, Instr, PhaseMode};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TfimError {
    #[error("simulation error: {0}")]
    Sim(#[from] SimError),
    #[error("need both measurement bases")]
    MissingBasis,
    #[error("need at least 3 noise factors for the exponential fit, got {0}")]
    TooFewFactors(usize),
}

pub fn ring_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

/// H = -g sum_j X_j - sum_ring Z_i Z_j as a dense matrix (bit 0 = most
/// significant), for the exact ground energy oracle.
pub fn exact_ground_energy(n: usize, g: f64) -> f64 {
    let dim = 1usize << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for z in 0..dim {
        let mut zz = 0.0;
        for (i, j) in ring_edges(n) {
            let (bi, bj) = (z >> (n - 1 - i) & 1, z >> (n - 1 - j) & 1);
            zz += if bi == bj { 1.0 } else { -1.0 };
        }
        h[(z, z)] = -zz;
        for q in 0..n {
            let flipped = z ^ 1 << (n - 1 - q);
            h[(z, flipped)] += -g;
        }
    }
    let eig = SymmetricEigen::new(h);
    eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Energy of a logical state under the ring TFIM.
fn logical_energy(st: &LogicalState, g: f64) -> f64 {
    let n = st.n;
    let probs = st.probabilities();
    let mut e = 0.0;
    for (z, p) in probs.iter().enumerate() {
        let mut zz = 0.0;
        for (i, j) in ring_edges(n) {
            let (bi, bj) = (z >> (n - 1 - i) & 1, z >> (n - 1 - j) & 1);
            zz += if bi == bj { 1.0 } else { -1.0 };
        }
        e += -zz * p;
    }
    // -g sum <X>: overlap with single-bit flips
    for q in 0..n {
        let bit = n - 1 - q;
        let mut x = 0.0;
        for z in 0..probs.len() {
            x += (st.amps[z].conj() * st.amps[z ^ 1 << bit]).re;
        }
        e += -g * x;
    }
    e
}

/// QAOA ansatz state on the logical register.
fn qaoa_state(n: usize, gammas: &[f64], betas: &[f64]) -> LogicalState {
    let mut st = LogicalState::plus(n);
    let edges = ring_edges(n);
    // per-bitstring ZZ sum for the cost phase e^{-i gamma sum ZZ}
    let zz_table: Vec<f64> = (0..1usize << n)
        .map(|z| {
            edges
                .iter()
                .map(|(i, j)| {
                    let (bi, bj) = (z >> (n - 1 - i) & 1, z >> (n - 1 - j) & 1);
                    if bi == bj {
                        1.0
                    } else {
                        -1.0
                    }
                })
                .sum()
        })
        .collect();
    for (gamma, beta) in gammas.iter().zip(betas) {
        st.phase_by_weight(*gamma, &zz_table);
        for q in 0..n {
            st.rot(q, 0.0, 2.0 * beta);
        }
    }
    st
}

/// Noise-free variational optimization of the p-layer QAOA angles by
/// Nelder-Mead from a few seeded starts.
pub fn optimize_tfim_angles(n: usize, g: f64, p: usize, seed: u64) -> (Vec<f64>, Vec<f64>, f64) {
    let objective = |x: &[f64]| {
        let (gs, bs) = x.split_at(p);
        logical_energy(&qaoa_state(n, gs, bs), g)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: (Vec<f64>, f64) = (vec![0.0; 2 * p], f64::INFINITY);
    for _ in 0..6 {
        let init: Vec<f64> = (0..2 * p).map(|_| rng.gen_range(0.05..0.6)).collect();
        let (x, v) = nelder_mead(&objective, &init, 600);
        if v < best.1 {
            best = (x, v);
        }
    }
    let (gs, bs) = best.0.split_at(p);
    (gs.to_vec(), bs.to_vec(), best.1)
}

/// Minimal Nelder-Mead simplex search.
pub fn nelder_mead(f: &dyn Fn(&[f64]) -> f64, init: &[f64], iters: usize) -> (Vec<f64>, f64) {
    let n = init.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((init.to_vec(), f(init)));
    for i in 0..n {
        let mut x = init.to_vec();
        x[i] += 0.15;
        let v = f(&x);
        simplex.push((x, v));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let centroid: Vec<f64> = (0..n)
            .map(|i| simplex[..n].iter().map(|(x, _)| x[i]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflect: Vec<f64> =
            (0..n).map(|i| centroid[i] + (centroid[i] - worst.0[i])).collect();
        let fr = f(&reflect);
        if fr < simplex[0].1 {
            let expand: Vec<f64> =
                (0..n).map(|i| centroid[i] + 2.0 * (centroid[i] - worst.0[i])).collect();
            let fe = f(&expand);
            simplex[n] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflect, fr);
        } else {
            let contract: Vec<f64> =
                (0..n).map(|i| centroid[i] + 0.5 * (worst.0[i] - centroid[i])).collect();
            let fc = f(&contract);
            if fc < worst.1 {
                simplex[n] = (contract, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> =
                        (0..n).map(|i| best[i] + 0.5 * (entry.0[i] - best[i])).collect();
                    let v = f(&x);
                    *entry = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    simplex[0].clone()
}

/// Native TFIM QAOA circuit (measurement excluded). The cost unitary
/// e^{-i gamma sum ZZ} maps onto RZZ(2 gamma) per ring edge.
pub fn tfim_native_circuit(qubits: &[String], gammas: &[f64], betas: &[f64]) -> Result<Circuit, SimError> {
    let edges = ring_edges(qubits.len());
    let logical = qaoa_circuit(qubits, &edges, gammas, betas, None);
    Ok(lower_cz(&logical)?)
}

/// Energy from Z-basis and X-basis count distributions over 2^n
/// outcomes: E = -g sum <X_j> - sum_ring <Z_i Z_j>.
pub fn tfim_energy(dist_z: &[f64], dist_x: &[f64], g: f64, n: usize) -> Result<f64, TfimError> {
    if dist_z.len() != 1 << n || dist_x.len() != 1 << n {
        return Err(TfimError::MissingBasis);
    }
    let mut zz = 0.0;
    for (z, p) in dist_z.iter().enumerate() {
        for (i, j) in ring_edges(n) {
            let (bi, bj) = (z >> (n - 1 - i) & 1, z >> (n - 1 - j) & 1);
            zz += p * if bi == bj { 1.0 } else { -1.0 };
        }
    }
    let mut x = 0.0;
    for (zk, p) in dist_x.iter().enumerate() {
        for q in 0..n {
            x += p * if zk >> (n - 1 - q) & 1 == 0 { 1.0 } else { -1.0 };
        }
    }
    Ok(-g * x - zz)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ZneModel {
    Exponential,
    LinearFallback,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ZneResult {
    pub value: f64,
    pub model: ZneModel,
    /// (offset c, amplitude a, base b) of v = c + a b^lambda.
    pub params: (f64, f64, f64),
}

/// Extrapolate v(lambda) = c + a b^lambda to lambda = 0 via a 1-D scan
/// over the base with linear least squares for (c, a); falls back to a
/// straight line when the exponential model degenerates.
pub fn zne(values: &[(f64, f64)]) -> Result<ZneResult, TfimError> {
    if values.len() < 3 {
        return Err(TfimError::TooFewFactors(values.len()));
    }
    let mut best: Option<(f64, f64, f64, f64)> = None; // (sse, c, a, b)
    for k in 1..990 {
        let b = k as f64 / 1000.0;
        // linear LS for c + a b^lambda
        let (mut s1, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(lam, v) in values {
            let x = b.powf(lam);
            s1 += 1.0;
            sx += x;
            sxx += x * x;
            sy += v;
            sxy += x * v;
        }
        let det = s1 * sxx - sx * sx;
        if det.abs() < 1e-12 {
            continue;
        }
        let c = (sxx * sy - sx * sxy) / det;
        let a = (s1 * sxy - sx * sy) / det;
        let sse: f64 =
            values.iter().map(|&(lam, v)| (v - c - a * b.powf(lam)).powi(2)).sum();
        if best.map(|(s, ..)| sse < s).unwrap_or(true) {
            best = Some((sse, c, a, b));
        }
    }
    // linear comparison fit
    let (mut s1, mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(lam, v) in values {
        s1 += 1.0;
        sx += lam;
        sxx += lam * lam;
        sy += v;
        sxy += lam * v;
    }
    let det = s1 * sxx - sx * sx;
    let lin = ((sxx * sy - sx * sxy) / det, (s1 * sxy - sx * sy) / det);
    let lin_sse: f64 = values.iter().map(|&(l, v)| (v - lin.0 - lin.1 * l).powi(2)).sum();
    match best {
        Some((sse, c, a, b)) if sse.is_finite() && sse <= lin_sse * 10.0 => Ok(ZneResult {
            value: c + a,
            model: ZneModel::Exponential,
            params: (c, a, b),
        }),
        _ => Ok(ZneResult {
            value: lin.0,
            model: ZneModel::LinearFallback,
            params: (lin.0, lin.1, 0.0),
        }),
    }
}

#[derive(Debug, Clone)]
pub struct ZnePipelineOptions {
    pub lambdas: Vec<usize>,
    pub trajectories: usize,
    pub shots_per_trajectory: usize,
    pub seed: u64,
    /// Two-site gate depolarizing probability at lambda = 1.
    pub p2: f64,
    pub p1: f64,
}

impl Default for ZnePipelineOptions {
    fn default() -> Self {
        Self {
            lambdas: vec![1, 2, 3],
            trajectories: 512,
            shots_per_trajectory: 64,
            seed: 0,
            p2: 8.3e-3,
            p1: 0.0,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ZnePipelineResult {
    pub energies: Vec<(f64, f64, f64)>, // (lambda, energy, sem)
    pub extrapolated: ZneResult,
    pub noiseless_energy: f64,
    pub exact_ground: f64,
}

/// Full ZNE pipeline: noiseless-optimized p = 3 QAOA circuit, folded at
/// each noise factor, executed under depolarizing gate noise, measured
/// in both bases, exponentially extrapolated to zero noise.
pub fn zne_tfim(
    device: &DeviceParams,
    g: f64,
    opts: &ZnePipelineOptions,
) -> Result<ZnePipelineResult, TfimError> {
    let qubits = device.qubit_ids();
    let n = qubits.len();
    let (gammas, betas, noiseless_energy) = optimize_tfim_angles(n, g, 3, opts.seed);
    let native = tfim_native_circuit(&qubits, &gammas, &betas)?;
    let resolved = resolve_phases(&native, device, PhaseMode::FixedOnly)
        .map_err(SimError::from)?
        .circuit;
    let mut energies = Vec::new();
    for &lambda in &opts.lambdas {
        let folded = fold(&resolved, lambda).map_err(SimError::from)?;
        let (e, sem) = measure_energy(device, &folded, &qubits, g, opts)?;
        energies.push((lambda as f64, e, sem));
    }
    let extrapolated = zne(&energies.iter().map(|&(l, e, _)| (l, e)).collect::<Vec<_>>())?;
    Ok(ZnePipelineResult {
        energies,
        extrapolated,
        noiseless_energy,
        exact_ground: exact_ground_energy(n, g),
    })
}

fn measure_energy(
    device: &DeviceParams,
    circuit: &Circuit,
    qubits: &[String],
    g: f64,
    opts: &ZnePipelineOptions,
) -> Result<(f64, f64), TfimError> {
    let n = qubits.len();
    let run_basis = |x_basis: bool, seed: u64| -> Result<Vec<f64>, TfimError> {
        let mut c = circuit.clone();
        if x_basis {
            for q in qubits {
                // map X onto Z: Ry(-pi/2)
                c.push(Instr::Rot { q: q.clone(), angle: -PI / 2.0, phase: PI / 2.0 });
            }
        }
        c.push(Instr::Measure { qs: qubits.to_vec() });
        let exec = Executor::new(device, &c)?;
        let sim = SimOptions {
            noise: NoiseSpec::Depolarizing { p1: opts.p1, p2: opts.p2 },
            seed,
            trajectories: opts.trajectories,
            ..Default::default()
        };
        let per_run: Vec<Vec<u64>> = exec.run_ensemble(&c, &sim, |outcome, rng| {
            let dist = outcome_distribution(&outcome.state, qubits);
            let mut counts = vec![0u64; dist.len()];
            for s in sample_from_distribution(&dist, opts.shots_per_trajectory, rng) {
                counts[s] += 1;
            }
            counts
        })?;
        let mut totals = vec![0.0f64; 1 << n];
        let mut grand = 0.0;
        for run in per_run {
            for (t, c) in totals.iter_mut().zip(run) {
                *t += c as f64;
                grand += c as f64;
            }
        }
        totals.iter_mut().for_each(|t| *t /= grand);
        Ok(totals)
    };
    let dist_z = run_basis(false, opts.seed ^ 0x10)?;
    let dist_x = run_basis(true, opts.seed ^ 0x20)?;
    let e = tfim_energy(&dist_z, &dist_x, g, n)?;
    // crude scale for the statistical error from the sample count
    let samples = (opts.trajectories * opts.shots_per_trajectory) as f64;
    let sem = (n as f64 * 2.0) / samples.sqrt();
    Ok((e, sem))
}
