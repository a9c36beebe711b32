//! Readout-error mitigation: multiply raw counts by the tensor-product
//! inverse of the per-qubit assignment matrices. The result is a
//! quasi-distribution; small negative entries are reported rather than
//! silently clipped, with a clipped-and-renormalized variant alongside.

use crate::device::AssignmentMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MitigationError {
    #[error("assignment matrix of qubit {0} is singular")]
    Singular(usize),
    #[error("distribution length {0} is not 2^{1}")]
    BadShape(usize, usize),
}

#[derive(Debug, Clone)]
pub struct MitigatedDistribution {
    /// Inverse-corrected quasi-probabilities (may contain negatives).
    pub quasi: Vec<f64>,
    /// Negatives clipped to zero and renormalized.
    pub clipped: Vec<f64>,
    /// Total clipped negative weight.
    pub negative_mass: f64,
}

/// Apply the per-qubit inverse assignment matrices along each bit axis
/// of a 2^n distribution (qubit 0 = most significant bit).
pub fn mitigate_distribution(
    dist: &[f64],
    matrices: &[AssignmentMatrix],
) -> Result<MitigatedDistribution, MitigationError> {
    let n = matrices.len();
    if dist.len() != 1 << n {
        return Err(MitigationError::BadShape(dist.len(), n));
    }
    let mut quasi = dist.to_vec();
    for (q, m) in matrices.iter().enumerate() {
        let inv = m.inverse().ok_or(MitigationError::Singular(q))?;
        let bit = n - 1 - q;
        let mask = 1usize << bit;
        for i in 0..quasi.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (p0, p1) = (quasi[i], quasi[j]);
                // counts transform with the transposed inverse:
                // p_meas = A^T p_true (rows of A are P(j|i))
                quasi[i] = inv[0][0] * p0 + inv[1][0] * p1;
                quasi[j] = inv[0][1] * p0 + inv[1][1] * p1;
            }
        }
    }
    let negative_mass: f64 = quasi.iter().filter(|x| **x < 0.0).map(|x| -x).sum();
    let mut clipped: Vec<f64> = quasi.iter().map(|x| x.max(0.0)).collect();
    let norm: f64 = clipped.iter().sum();
    if norm > 0.0 {
        clipped.iter_mut().for_each(|x| *x /= norm);
    }
    Ok(MitigatedDistribution { quasi, clipped, negative_mass })
}

/// Forward model: push a true distribution through the assignment
/// matrices (the exact inverse of `mitigate_distribution`).
pub fn apply_assignment(dist: &[f64], matrices: &[AssignmentMatrix]) -> Vec<f64> {
    let n = matrices.len();
    assert_eq!(dist.len(), 1 << n);
    let mut out = dist.to_vec();
    for (q, m) in matrices.iter().enumerate() {
        let bit = n - 1 - q;
        let mask = 1usize << bit;
        for i in 0..out.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (p0, p1) = (out[i], out[j]);
                out[i] = m.0[0][0] * p0 + m.0[1][0] * p1;
                out[j] = m.0[0][1] * p0 + m.0[1][1] * p1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn identity_matrices_leave_counts_unchanged() {
        let ms = vec![AssignmentMatrix::from_fidelity(1.0); 3];
        let dist = vec![0.5, 0.0, 0.25, 0.0, 0.0, 0.125, 0.125, 0.0];
        let m = mitigate_distribution(&dist, &ms).unwrap();
        for (a, b) in m.quasi.iter().zip(&dist) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(m.negative_mass, 0.0);
    }

    #[test]
    fn forward_then_mitigate_recovers_truth() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let ms: Vec<AssignmentMatrix> =
            (0..4).map(|_| AssignmentMatrix::from_fidelity(rng.gen_range(0.9..0.995))).collect();
        let mut truth: Vec<f64> = (0..16).map(|_| rng.gen::<f64>()).collect();
        let norm: f64 = truth.iter().sum();
        truth.iter_mut().for_each(|x| *x /= norm);
        let measured = apply_assignment(&truth, &ms);
        let rec = mitigate_distribution(&measured, &ms).unwrap();
        for (a, b) in rec.quasi.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn half_fidelity_is_singular() {
        let ms = vec![AssignmentMatrix::from_fidelity(0.5)];
        let dist = vec![0.7, 0.3];
        assert!(matches!(
            mitigate_distribution(&dist, &ms),
            Err(MitigationError::Singular(0))
        ));
    }

    #[test]
    fn sampled_confusion_recovered_within_error() {
        // forward-sample a known distribution through the confusion,
        // mitigate the empirical counts, compare to truth
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let ms: Vec<AssignmentMatrix> = (0..2).map(|_| AssignmentMatrix::from_fidelity(0.95)).collect();
        let truth = [0.6, 0.1, 0.1, 0.2];
        let n_samples = 200_000usize;
        let mut counts = [0f64; 4];
        for _ in 0..n_samples {
            let r: f64 = rng.gen();
            let mut acc = 0.0;
            let mut z = 3;
            for (i, p) in truth.iter().enumerate() {
                acc += p;
                if r < acc {
                    z = i;
                    break;
                }
            }
            // apply confusion per bit
            let mut noisy = 0usize;
            for (q, m) in ms.iter().enumerate() {
                let bit = z >> (1 - q) & 1;
                let flip = if bit == 0 { m.0[0][1] } else { m.0[1][0] };
                let out = if rng.gen::<f64>() < flip { 1 - bit } else { bit };
                noisy = noisy << 1 | out;
            }
            counts[noisy] += 1.0;
        }
        counts.iter_mut().for_each(|c| *c /= n_samples as f64);
        let rec = mitigate_distribution(&counts, &ms).unwrap();
        for (a, b) in rec.quasi.iter().zip(&truth) {
            assert!((a - b).abs() < 0.01, "{a} vs {b}");
        }
    }
}
