//! Single- and two-qubit Clifford groups with native-gate decompositions,
//! canonical-form lookup for group inverses, and the class structure used
//! to synthesize two-qubit Cliffords over {SQG, CZ}.

use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// Small dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub n: usize,
    pub a: Vec<C64>,
}

impl CMat {
    pub fn eye(n: usize) -> Self {
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            a[i * n + i] = C64::new(1.0, 0.0);
        }
        Self { n, a }
    }

    pub fn at(&self, r: usize, c: usize) -> C64 {
        self.a[r * self.n + c]
    }

    pub fn mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let v = self.at(i, k);
                if v.norm_sqr() < 1e-24 {
                    continue;
                }
                for j in 0..n {
                    a[i * n + j] += v * rhs.at(k, j);
                }
            }
        }
        CMat { n, a }
    }

    pub fn dagger(&self) -> CMat {
        let n = self.n;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in 0..n {
                a[c * n + r] = self.at(r, c).conj();
            }
        }
        CMat { n, a }
    }

    pub fn kron(&self, rhs: &CMat) -> CMat {
        let n = self.n * rhs.n;
        let mut a = vec![C64::new(0.0, 0.0); n * n];
        for r1 in 0..self.n {
            for c1 in 0..self.n {
                let v = self.at(r1, c1);
                for r2 in 0..rhs.n {
                    for c2 in 0..rhs.n {
                        a[(r1 * rhs.n + r2) * n + (c1 * rhs.n + c2)] = v * rhs.at(r2, c2);
                    }
                }
            }
        }
        CMat { n, a }
    }

    /// Hashable canonical form modulo global phase: rotate the first
    /// sizable entry to the positive real axis, round to 1e-6.
    pub fn canonical_key(&self) -> Vec<(i64, i64)> {
        let pivot = self.a.iter().find(|x| x.norm() > 1e-6).copied().unwrap_or(C64::new(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        self.a
            .iter()
            .map(|x| {
                let y = x * phase;
                ((y.re * 1e6).round() as i64, (y.im * 1e6).round() as i64)
            })
            .collect()
    }

    pub fn approx_eq_up_to_phase(&self, other: &CMat, tol: f64) -> bool {
        let mut phase = None;
        for (x, y) in self.a.iter().zip(&other.a) {
            if x.norm() > 1e-6 && y.norm() > 1e-6 {
                phase = Some(y / x);
                break;
            }
        }
        let Some(ph) = phase else { return false };
        self.a.iter().zip(&other.a).all(|(x, y)| (x * ph - y).norm() < tol)
    }
}

pub fn rot2(axis_phase: f64, angle: f64) -> CMat {
    let (c, s) = ((angle / 2.0).cos(), (angle / 2.0).sin());
    let mi = C64::new(0.0, -1.0);
    CMat {
        n: 2,
        a: vec![
            C64::new(c, 0.0),
            mi * C64::new(0.0, -axis_phase).exp() * s,
            mi * C64::new(0.0, axis_phase).exp() * s,
            C64::new(c, 0.0),
        ],
    }
}

pub fn vz2(angle: f64) -> CMat {
    CMat {
        n: 2,
        a: vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, angle).exp(),
        ],
    }
}

pub fn cz4() -> CMat {
    let mut m = CMat::eye(4);
    m.a[15] = C64::new(-1.0, 0.0);
    m
}

/// PRX + trailing VZ realization of a single-qubit Clifford:
/// U = e^{i global} VZ(vz) PRX(angle, phase).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqgDecomposition {
    pub angle: f64,
    pub phase: f64,
    pub vz: f64,
}

impl SqgDecomposition {
    pub fn matrix(&self) -> CMat {
        vz2(self.vz).mul(&rot2(self.phase, self.angle))
    }
}

fn decompose_sqg(u: &CMat) -> SqgDecomposition {
    // VZ(b) PRX(theta, phi) = [[c, -i s e^{-i phi}], [-i s e^{i(phi+b)}, c e^{i b}]]
    let c = u.at(0, 0).norm();
    let s = u.at(1, 0).norm();
    let angle = 2.0 * s.atan2(c);
    let i = C64::new(0.0, 1.0);
    if s < 1e-9 {
        // diagonal: pure VZ
        let ph = u.at(0, 0).conj() / c;
        return SqgDecomposition { angle: 0.0, phase: 0.0, vz: (u.at(1, 1) * ph).arg() };
    }
    if c < 1e-9 {
        // anti-diagonal: theta = pi; fix the global phase so phi = 0
        let ph = -i * u.at(0, 1).conj() / s;
        return SqgDecomposition { angle: PI, phase: 0.0, vz: (i * u.at(1, 0) * ph).arg() };
    }
    let ph = u.at(0, 0).conj() / c;
    let m01 = u.at(0, 1) * ph;
    let m11 = u.at(1, 1) * ph;
    SqgDecomposition { angle, phase: -(i * m01).arg(), vz: m11.arg() }
}

/// The 24-element single-qubit Clifford group.
pub struct Clifford1Q {
    pub matrices: Vec<CMat>,
    pub decompositions: Vec<SqgDecomposition>,
    index: HashMap<Vec<(i64, i64)>, usize>,
    pub inverse: Vec<usize>,
}

impl Clifford1Q {
    pub fn get() -> &'static Clifford1Q {
        static CELL: OnceLock<Clifford1Q> = OnceLock::new();
        CELL.get_or_init(Self::build)
    }

    fn build() -> Self {
        let gens = [rot2(0.0, PI / 2.0), rot2(PI / 2.0, PI / 2.0)];
        let mut matrices = vec![CMat::eye(2)];
        let mut index = HashMap::new();
        index.insert(matrices[0].canonical_key(), 0usize);
        let mut frontier = vec![0usize];
        while let Some(i) = frontier.pop() {
            for g in &gens {
                let m = g.mul(&matrices[i]);
                let key = m.canonical_key();
                if !index.contains_key(&key) {
                    index.insert(key, matrices.len());
                    frontier.push(matrices.len());
                    matrices.push(m);
                }
            }
        }
        assert_eq!(matrices.len(), 24, "single-qubit Clifford group has 24 elements");
        let decompositions: Vec<SqgDecomposition> = matrices.iter().map(decompose_sqg).collect();
        for (m, d) in matrices.iter().zip(&decompositions) {
            assert!(d.matrix().approx_eq_up_to_phase(m, 1e-10), "decomposition mismatch");
        }
        let inverse = matrices
            .iter()
            .map(|m| *index.get(&m.dagger().canonical_key()).expect("inverse in group"))
            .collect();
        Self { matrices, decompositions, index, inverse }
    }

    pub fn lookup(&self, m: &CMat) -> Option<usize> {
        self.index.get(&m.canonical_key()).copied()
    }
}

/// One step of a two-qubit Clifford decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum C2Gate {
    /// Single-qubit Clifford (by 1Q group index) on qubit 0 or 1.
    Sqg { qubit: usize, index: usize },
    /// Effective CZ between the two qubits.
    Cz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum C2Class {
    SingleQubit,
    CnotLike,
    IswapLike,
    SwapLike,
}

pub struct Clifford2Q {
    pub matrices: Vec<CMat>,
    pub decompositions: Vec<Vec<C2Gate>>,
    pub classes: Vec<C2Class>,
    index: HashMap<Vec<(i64, i64)>, usize>,
    pub inverse: Vec<usize>,
}

impl Clifford2Q {
    pub fn get() -> &'static Clifford2Q {
        static CELL: OnceLock<Clifford2Q> = OnceLock::new();
        CELL.get_or_init(Self::build)
    }

    fn build() -> Self {
        let c1 = Clifford1Q::get();
        // the axis-cycling set S1 = {I, Rx90 Ry90, Ry-90 Rx-90}
        let s1_mats = [
            CMat::eye(2),
            rot2(0.0, PI / 2.0).mul(&rot2(PI / 2.0, PI / 2.0)),
            rot2(PI / 2.0, -PI / 2.0).mul(&rot2(0.0, -PI / 2.0)),
        ];
        let s1: Vec<usize> =
            s1_mats.iter().map(|m| c1.lookup(m).expect("S1 subset of C1")).collect();
        let y90 = c1.lookup(&rot2(PI / 2.0, PI / 2.0)).unwrap();
        let ym90 = c1.lookup(&rot2(PI / 2.0, -PI / 2.0)).unwrap();
        let xm90 = c1.lookup(&rot2(0.0, -PI / 2.0)).unwrap();

        let mut matrices = Vec::with_capacity(11520);
        let mut decompositions = Vec::with_capacity(11520);
        let mut classes = Vec::with_capacity(11520);
        let mut index: HashMap<Vec<(i64, i64)>, usize> = HashMap::with_capacity(11520);

        let mut add = |gates: Vec<C2Gate>, class: C2Class| {
            let mut m = CMat::eye(4);
            for g in &gates {
                let gm = match g {
                    C2Gate::Sqg { qubit: 0, index } => c1.matrices[*index].kron(&CMat::eye(2)),
                    C2Gate::Sqg { index, .. } => CMat::eye(2).kron(&c1.matrices[*index]),
                    C2Gate::Cz => cz4(),
                };
                m = gm.mul(&m);
            }
            let key = m.canonical_key();
            assert!(
                !index.contains_key(&key),
                "duplicate element in the two-qubit Clifford construction"
            );
            index.insert(key, matrices.len());
            matrices.push(m);
            decompositions.push(gates);
            classes.push(class);
        };

        for a in 0..24 {
            for b in 0..24 {
                let head =
                    vec![C2Gate::Sqg { qubit: 0, index: a }, C2Gate::Sqg { qubit: 1, index: b }];
                // single-qubit class
                add(head.clone(), C2Class::SingleQubit);
                // CNOT-like
                for &sa in &s1 {
                    for &sb in &s1 {
                        let mut g = head.clone();
                        g.push(C2Gate::Cz);
                        g.push(C2Gate::Sqg { qubit: 0, index: sa });
                        g.push(C2Gate::Sqg { qubit: 1, index: sb });
                        add(g, C2Class::CnotLike);
                    }
                }
                // iSWAP-like
                for &sa in &s1 {
                    for &sb in &s1 {
                        let mut g = head.clone();
                        g.push(C2Gate::Cz);
                        g.push(C2Gate::Sqg { qubit: 0, index: y90 });
                        g.push(C2Gate::Sqg { qubit: 1, index: xm90 });
                        g.push(C2Gate::Cz);
                        g.push(C2Gate::Sqg { qubit: 0, index: sa });
                        g.push(C2Gate::Sqg { qubit: 1, index: sb });
                        add(g, C2Class::IswapLike);
                    }
                }
                // SWAP-like
                let mut g = head.clone();
                g.push(C2Gate::Cz);
                g.push(C2Gate::Sqg { qubit: 0, index: ym90 });
                g.push(C2Gate::Sqg { qubit: 1, index: y90 });
                g.push(C2Gate::Cz);
                g.push(C2Gate::Sqg { qubit: 0, index: y90 });
                g.push(C2Gate::Sqg { qubit: 1, index: ym90 });
                g.push(C2Gate::Cz);
                g.push(C2Gate::Sqg { qubit: 1, index: y90 });
                add(g, C2Class::SwapLike);
            }
        }
        assert_eq!(matrices.len(), 11520, "two-qubit Clifford group has 11520 elements");
        let inverse = matrices
            .iter()
            .map(|m| *index.get(&m.dagger().canonical_key()).expect("inverse in group"))
            .collect();
        Self { matrices, decompositions, classes, index, inverse }
    }

    pub fn lookup(&self, m: &CMat) -> Option<usize> {
        self.index.get(&m.canonical_key()).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn one_qubit_group_order_and_inverses() {
        let c1 = Clifford1Q::get();
        assert_eq!(c1.matrices.len(), 24);
        for i in 0..24 {
            let prod = c1.matrices[i].mul(&c1.matrices[c1.inverse[i]]);
            assert!(prod.approx_eq_up_to_phase(&CMat::eye(2), 1e-10));
        }
        // full closure
        for i in 0..24 {
            for j in 0..24 {
                let prod = c1.matrices[i].mul(&c1.matrices[j]);
                assert!(c1.lookup(&prod).is_some());
            }
        }
    }

    #[test]
    fn decompositions_reproduce_matrices() {
        let c1 = Clifford1Q::get();
        for (m, d) in c1.matrices.iter().zip(&c1.decompositions) {
            assert!(d.matrix().approx_eq_up_to_phase(m, 1e-10));
        }
    }

    #[test]
    fn two_qubit_group_order_classes_inverses() {
        let c2 = Clifford2Q::get();
        assert_eq!(c2.matrices.len(), 11520);
        let count = |cl: C2Class| c2.classes.iter().filter(|c| **c == cl).count();
        assert_eq!(count(C2Class::SingleQubit), 576);
        assert_eq!(count(C2Class::CnotLike), 5184);
        assert_eq!(count(C2Class::IswapLike), 5184);
        assert_eq!(count(C2Class::SwapLike), 576);
        for i in (0..11520).step_by(97) {
            let prod = c2.matrices[i].mul(&c2.matrices[c2.inverse[i]]);
            assert!(prod.approx_eq_up_to_phase(&CMat::eye(4), 1e-9));
        }
    }

    #[test]
    fn two_qubit_closure_sampled() {
        let c2 = Clifford2Q::get();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..300 {
            let i = rng.gen_range(0..11520);
            let j = rng.gen_range(0..11520);
            let prod = c2.matrices[i].mul(&c2.matrices[j]);
            assert!(c2.lookup(&prod).is_some(), "closure violated at {i} x {j}");
        }
    }
}
