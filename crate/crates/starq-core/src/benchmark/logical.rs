//! Plain qubit-register state vector, independent of the hybrid
//! qutrit-resonator representation. Serves as the reference oracle for
//! lowering-semantics checks and as the fast inner loop of the QAOA
//! angle searches.

use num_complex::Complex64 as C64;

#[derive(Debug, Clone)]
pub struct LogicalState {
    pub n: usize,
    pub amps: Vec<C64>,
}

impl LogicalState {
    pub fn ground(n: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        Self { n, amps }
    }

    pub fn plus(n: usize) -> Self {
        let v = C64::new(1.0 / ((1usize << n) as f64).sqrt(), 0.0);
        Self { n, amps: vec![v; 1 << n] }
    }

    /// Apply a 2x2 matrix (row-major [m00, m01, m10, m11]) on qubit `q`
    /// (qubit 0 = most significant bit).
    pub fn apply_1q(&mut self, q: usize, m: &[C64; 4]) {
        let bit = self.n - 1 - q;
        let mask = 1usize << bit;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0] * a0 + m[1] * a1;
                self.amps[j] = m[2] * a0 + m[3] * a1;
            }
        }
    }

    pub fn rot(&mut self, q: usize, axis_phase: f64, angle: f64) {
        let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
        let mi = C64::new(0.0, -1.0);
        self.apply_1q(
            q,
            &[
                C64::new(c, 0.0),
                mi * C64::new(0.0, -axis_phase).exp() * s,
                mi * C64::new(0.0, axis_phase).exp() * s,
                C64::new(c, 0.0),
            ],
        );
    }

    pub fn vz(&mut self, q: usize, angle: f64) {
        let ph = C64::new(0.0, angle).exp();
        let bit = self.n - 1 - q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i >> bit & 1 == 1 {
                *a *= ph;
            }
        }
    }

    pub fn cz(&mut self, a: usize, b: usize) {
        let (ba, bb) = (self.n - 1 - a, self.n - 1 - b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i >> ba & 1 == 1 && i >> bb & 1 == 1 {
                *amp = -*amp;
            }
        }
    }

    /// Diagonal phase e^{-i gamma w(z)} from a per-bitstring weight table.
    pub fn phase_by_weight(&mut self, gamma: f64, weights: &[f64]) {
        for (a, w) in self.amps.iter_mut().zip(weights) {
            *a *= C64::new(0.0, -gamma * w).exp();
        }
    }

    pub fn inner(&self, other: &LogicalState) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| b.conj() * a).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }
}
