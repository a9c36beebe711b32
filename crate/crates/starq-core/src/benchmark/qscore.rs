//! Q-score benchmark: depth-1 QAOA MaxCut on random Erdos-Renyi graphs,
//! with the angle pair found by a dense grid search on the noiseless
//! logical simulator and the payoff executed on the transpiled native
//! circuit. beta(n) measures the fraction of the optimality gap between
//! random guessing and the exact maximum cut.

use super::logical::LogicalState;
use crate::device::DeviceParams;
use crate::sim::{
    apply_readout_confusion, assignment_rows, outcome_distribution, sample_from_distribution,
    Executor, NoiseSpec, SimError, SimOptions,
};
use crate::transpiler::{lower_cz, qaoa_circuit, resolve_phases, Instr, PhaseMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct QScoreOptions {
    pub n_graphs: usize,
    pub shots: usize,
    pub noise: NoiseSpec,
    pub trajectories: usize,
    pub readout_errors: bool,
    pub seed: u64,
    /// Fix one vertex classically, fitting n = qubits + 1 problems.
    pub virtual_node: bool,
}

impl Default for QScoreOptions {
    fn default() -> Self {
        Self {
            n_graphs: 60,
            shots: 2048,
            noise: NoiseSpec::None,
            trajectories: 256,
            readout_errors: false,
            seed: 0,
            virtual_node: false,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct GraphRecord {
    pub graph_index: usize,
    pub n_edges: usize,
    pub c_opt: f64,
    pub mean_cut: f64,
    pub ratio: f64,
    pub gamma: f64,
    pub beta_angle: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct QScoreResult {
    pub n: usize,
    pub beta: f64,
    pub sem: f64,
    pub resampled_degenerate: usize,
    pub per_graph: Vec<GraphRecord>,
}

pub fn erdos_renyi(n: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < 0.5 {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Exact maximum cut by enumeration (n <= ~20).
pub fn maxcut_brute_force(n: usize, edges: &[(usize, usize)]) -> f64 {
    let mut best = 0usize;
    for z in 0..(1usize << n) {
        let cut = edges.iter().filter(|(i, j)| (z >> i ^ z >> j) & 1 == 1).count();
        best = best.max(cut);
    }
    best as f64
}

#[cfg(test)]
fn cut_table(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    // bitstring index convention: qubit 0 = most significant bit
    (0..1usize << n)
        .map(|z| {
            edges
                .iter()
                .filter(|(i, j)| (z >> (n - 1 - i) ^ z >> (n - 1 - j)) & 1 == 1)
                .count() as f64
        })
        .collect()
}

/// Expectation of the cut after one QAOA layer on the logical simulator.
fn qaoa_p1_expectation(n: usize, cuts: &[f64], gamma: f64, beta: f64) -> f64 {
    let mut st = LogicalState::plus(n);
    st.phase_by_weight(gamma, cuts);
    for q in 0..n {
        st.rot(q, 0.0, 2.0 * beta);
    }
    st.probabilities().iter().zip(cuts).map(|(p, c)| p * c).sum()
}

/// Dense 121 x 121 grid over one period with one local refinement.
pub fn qaoa_p1_angles(n: usize, cuts: &[f64]) -> (f64, f64, f64) {
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    let scan = |g_lo: f64, g_hi: f64, b_lo: f64, b_hi: f64, best: &mut (f64, f64, f64)| {
        let pts = 121usize;
        let evals: Vec<(f64, f64, f64)> = (0..pts * pts)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / pts, idx % pts);
                let g = g_lo + (g_hi - g_lo) * i as f64 / (pts - 1) as f64;
                let b = b_lo + (b_hi - b_lo) * j as f64 / (pts - 1) as f64;
                (g, b, qaoa_p1_expectation(n, cuts, g, b))
            })
            .collect();
        for (g, b, v) in evals {
            if v > best.2 {
                *best = (g, b, v);
            }
        }
    };
    scan(0.0, 2.0 * std::f64::consts::PI, 0.0, std::f64::consts::PI, &mut best);
    let dg = 2.0 * std::f64::consts::PI / 120.0;
    let db = std::f64::consts::PI / 120.0;
    let (g0, b0, _) = best;
    scan(g0 - dg, g0 + dg, b0 - db, b0 + db, &mut best);
    best
}

/// Run the Q-score protocol at problem size `n`.
pub fn qscore(device: &DeviceParams, n: usize, opts: &QScoreOptions) -> Result<QScoreResult, SimError> {
    let qubit_ids = device.qubit_ids();
    let hardware_n = if opts.virtual_node { n - 1 } else { n };
    assert!(
        hardware_n <= qubit_ids.len() && hardware_n >= 2,
        "problem size {n} does not fit {} qubits (virtual_node = {})",
        qubit_ids.len(),
        opts.virtual_node
    );
    let qubits: Vec<String> = qubit_ids[..hardware_n].to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut per_graph = Vec::with_capacity(opts.n_graphs);
    let mut resampled = 0usize;
    while per_graph.len() < opts.n_graphs {
        let edges = erdos_renyi(n, &mut rng);
        let c_opt = maxcut_brute_force(n, &edges);
        let half = edges.len() as f64 / 2.0;
        if c_opt - half < 1e-9 {
            // degenerate: random guessing is already optimal
            resampled += 1;
            continue;
        }
        // split edges into hardware-hardware and virtual-node terms
        let (hw_edges, virt_edges): (Vec<_>, Vec<_>) =
            edges.iter().partition(|(i, j)| *i < hardware_n && *j < hardware_n);
        // full-problem cut table on hardware bits; the virtual vertex is
        // classically fixed to partition side 0
        let cuts: Vec<f64> = (0..1usize << hardware_n)
            .map(|z| {
                let mut c = 0.0;
                for (i, j) in &hw_edges {
                    if (z >> (hardware_n - 1 - i) ^ z >> (hardware_n - 1 - j)) & 1 == 1 {
                        c += 1.0;
                    }
                }
                for (i, j) in &virt_edges {
                    let v = if *i < hardware_n { *i } else { *j };
                    if z >> (hardware_n - 1 - v) & 1 == 1 {
                        c += 1.0;
                    }
                }
                c
            })
            .collect();
        let (gamma, beta_angle, _) = qaoa_p1_angles(hardware_n, &cuts);
        // native execution: cost layer e^{-i gamma C}
        let hw_pairs: Vec<(usize, usize)> = hw_edges.clone();
        let mut weights = vec![0.0; hardware_n];
        for (i, j) in &virt_edges {
            let v = if *i < hardware_n { *i } else { *j };
            weights[v] += 1.0;
        }
        // e^{-i gamma (1 - Z_i Z_j)/2} = e^{+i gamma Z_i Z_j / 2} x phase:
        // rzz angle theta = -gamma, and VZ(-gamma w_v) for the virtual
        // local fields (both carried by the layer parameter -gamma/2)
        let logical =
            qaoa_circuit(&qubits, &hw_pairs, &[-gamma / 2.0], &[beta_angle], Some(&weights));
        let native = lower_cz(&logical)?;
        let resolved = resolve_phases(&native, device, PhaseMode::FixedOnly)?.circuit;
        let mut with_meas = resolved.clone();
        with_meas.push(Instr::Measure { qs: qubits.clone() });
        let exec = Executor::new(device, &with_meas)?;
        let noiseless = matches!(opts.noise, NoiseSpec::None);
        let runs = if noiseless { 1 } else { opts.trajectories.max(1) };
        let shots_per_run = (opts.shots + runs - 1) / runs;
        let sim = SimOptions {
            noise: opts.noise.clone(),
            seed: opts.seed ^ (per_graph.len() as u64) << 32,
            trajectories: runs,
            ..Default::default()
        };
        let rows = assignment_rows(device, &qubits);
        let cuts_ref = &cuts;
        let samples: Vec<(f64, usize)> = exec.run_ensemble(&with_meas, &sim, |outcome, rng| {
            let dist = outcome_distribution(&outcome.state, &qubits);
            let mut acc = 0.0;
            let mut count = 0usize;
            for s in sample_from_distribution(&dist, shots_per_run, rng) {
                let o =
                    if opts.readout_errors { apply_readout_confusion(s, &rows, rng) } else { s };
                acc += cuts_ref[o];
                count += 1;
            }
            (acc, count)
        })?;
        let (cut_sum, n_samp) =
            samples.iter().fold((0.0, 0usize), |(a, c), (x, k)| (a + x, c + k));
        let mean_cut = cut_sum / n_samp as f64;
        let ratio = (mean_cut - half) / (c_opt - half);
        per_graph.push(GraphRecord {
            graph_index: per_graph.len(),
            n_edges: edges.len(),
            c_opt,
            mean_cut,
            ratio,
            gamma,
            beta_angle,
        });
    }
    let beta = per_graph.iter().map(|g| g.ratio).sum::<f64>() / per_graph.len() as f64;
    let var = per_graph.iter().map(|g| (g.ratio - beta).powi(2)).sum::<f64>()
        / (per_graph.len().max(2) - 1) as f64;
    Ok(QScoreResult {
        n,
        beta,
        sem: (var / per_graph.len() as f64).sqrt(),
        resampled_degenerate: resampled,
        per_graph,
    })
}

/// The random-guess policy scores zero by construction.
pub fn random_guess_ratio(n: usize, edges: &[(usize, usize)], samples: usize, rng: &mut impl Rng) -> f64 {
    let c_opt = maxcut_brute_force(n, edges);
    let half = edges.len() as f64 / 2.0;
    if (c_opt - half).abs() < 1e-12 {
        return 0.0;
    }
    let mean: f64 = (0..samples)
        .map(|_| {
            let z: usize = rng.gen_range(0..1 << n);
            edges.iter().filter(|(i, j)| (z >> i ^ z >> j) & 1 == 1).count() as f64
        })
        .sum::<f64>()
        / samples as f64;
    (mean - half) / (c_opt - half)
}
