//! Hybrid Hilbert-space representation for states over three-level transmons
//! (qubits, couplers) and a truncated bosonic mode (the computational
//! resonator), plus the dense linear algebra used everywhere else.
//!
//! Basis indexing is row-major over the subsystem declaration order: the
//! first declared subsystem is the most significant index digit.

use num_complex::Complex64 as C64;
use std::sync::Arc;
use thiserror::Error;

/// Transmon levels used throughout: ground, excited, second excited.
pub const TRANSMON_LEVELS: usize = 3;

#[derive(Debug, Error)]
pub enum HilbertError {
    #[error("unknown subsystem id `{0}`")]
    UnknownSubsystem(String),
    #[error("duplicate subsystem id `{0}`")]
    DuplicateId(String),
    #[error("subsystem `{id}` has invalid dimension {dim} for its kind")]
    InvalidDim { id: String, dim: usize },
    #[error("operator dimension {op} does not match target dimension {target}")]
    DimensionMismatch { op: usize, target: usize },
    #[error("states have different layouts")]
    LayoutMismatch,
    #[error("operator flagged unitary fails U\u{2020}U = 1 (max deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("norm drifted to {0} after unitary application")]
    NormDrift(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsystemKind {
    Qubit,
    Coupler,
    Resonator,
}

#[derive(Debug, Clone)]
pub struct Subsystem {
    pub id: String,
    pub kind: SubsystemKind,
    pub dim: usize,
}

/// Ordered list of subsystems defining the tensor-product structure.
#[derive(Debug, Clone)]
pub struct SubsystemLayout {
    subsystems: Vec<Subsystem>,
    strides: Vec<usize>,
    dim: usize,
}

impl SubsystemLayout {
    pub fn new(subsystems: Vec<Subsystem>) -> Result<Self, HilbertError> {
        for (i, s) in subsystems.iter().enumerate() {
            let ok = match s.kind {
                SubsystemKind::Qubit | SubsystemKind::Coupler => s.dim == TRANSMON_LEVELS,
                SubsystemKind::Resonator => s.dim >= 2,
            };
            if !ok {
                return Err(HilbertError::InvalidDim { id: s.id.clone(), dim: s.dim });
            }
            if subsystems[..i].iter().any(|t| t.id == s.id) {
                return Err(HilbertError::DuplicateId(s.id.clone()));
            }
        }
        let mut strides = vec![1usize; subsystems.len()];
        for i in (0..subsystems.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * subsystems[i + 1].dim;
        }
        let dim = subsystems.iter().map(|s| s.dim).product::<usize>().max(1);
        Ok(Self { subsystems, strides, dim })
    }

    /// Convenience constructor: qubits (3 levels each) followed by the
    /// resonator truncated at `n_max` photons.
    pub fn qubits_and_resonator(qubit_ids: &[&str], n_max: usize) -> Self {
        let mut subs: Vec<Subsystem> = qubit_ids
            .iter()
            .map(|q| Subsystem { id: q.to_string(), kind: SubsystemKind::Qubit, dim: TRANSMON_LEVELS })
            .collect();
        subs.push(Subsystem { id: "CR".into(), kind: SubsystemKind::Resonator, dim: n_max + 1 });
        Self::new(subs).expect("valid layout")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn index_of(&self, id: &str) -> Result<usize, HilbertError> {
        self.subsystems
            .iter()
            .position(|s| s.id == id)
            .ok_or_else(|| HilbertError::UnknownSubsystem(id.to_string()))
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn subsystem_dim(&self, id: &str) -> Result<usize, HilbertError> {
        Ok(self.subsystems[self.index_of(id)?].dim)
    }

    /// Flat index of the basis state with the given per-subsystem levels.
    pub fn basis_index(&self, levels: &[usize]) -> usize {
        debug_assert_eq!(levels.len(), self.subsystems.len());
        levels.iter().zip(&self.strides).map(|(l, s)| l * s).sum()
    }

    /// Per-subsystem levels of a flat basis index.
    pub fn levels_of(&self, index: usize) -> Vec<usize> {
        self.strides.iter().zip(&self.subsystems).map(|(s, sub)| index / s % sub.dim).collect()
    }
}

/// Pure state on a [`SubsystemLayout`]. Layouts are shared read-only; the
/// amplitude vector is a single-writer value.
#[derive(Debug, Clone)]
pub struct HybridState {
    pub layout: Arc<SubsystemLayout>,
    pub amplitudes: Vec<C64>,
}

impl HybridState {
    /// All subsystems in their ground state.
    pub fn ground(layout: Arc<SubsystemLayout>) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); layout.dim()];
        amplitudes[0] = C64::new(1.0, 0.0);
        Self { layout, amplitudes }
    }

    pub fn basis(layout: Arc<SubsystemLayout>, levels: &[usize]) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); layout.dim()];
        amplitudes[layout.basis_index(levels)] = C64::new(1.0, 0.0);
        Self { layout, amplitudes }
    }

    pub fn from_amplitudes(layout: Arc<SubsystemLayout>, amplitudes: Vec<C64>) -> Self {
        assert_eq!(amplitudes.len(), layout.dim());
        Self { layout, amplitudes }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn renormalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            for a in &mut self.amplitudes {
                *a *= inv;
            }
        }
    }

    /// Apply `op` and return the transformed state. Unitary-flagged
    /// operators must preserve the norm; trajectory jump operators are
    /// renormalized instead.
    pub fn apply(&self, op: &Operator) -> Result<HybridState, HilbertError> {
        let mut out = self.clone();
        out.apply_in_place(op)?;
        Ok(out)
    }

    pub fn apply_in_place(&mut self, op: &Operator) -> Result<(), HilbertError> {
        op.apply_to(&mut self.amplitudes, &self.layout)?;
        if op.unitary {
            let n = self.norm();
            if (n - 1.0).abs() > 1e-9 {
                return Err(HilbertError::NormDrift(n));
            }
        } else {
            self.renormalize();
        }
        Ok(())
    }

    /// Marginal occupation probabilities of one subsystem.
    pub fn populations(&self, id: &str) -> Result<Vec<f64>, HilbertError> {
        let axis = self.layout.index_of(id)?;
        let d = self.layout.subsystems()[axis].dim;
        let stride = self.layout.stride(axis);
        let mut out = vec![0.0; d];
        for (i, a) in self.amplitudes.iter().enumerate() {
            out[i / stride % d] += a.norm_sqr();
        }
        Ok(out)
    }

    /// Joint probability of a full basis outcome (all subsystems).
    pub fn probability_of(&self, levels: &[usize]) -> f64 {
        self.amplitudes[self.layout.basis_index(levels)].norm_sqr()
    }

    /// |<target|self>|^2.
    pub fn fidelity(&self, target: &HybridState) -> Result<f64, HilbertError> {
        if self.layout.dim() != target.layout.dim()
            || self.layout.subsystems().len() != target.layout.subsystems().len()
        {
            return Err(HilbertError::LayoutMismatch);
        }
        let ov: C64 = target
            .amplitudes
            .iter()
            .zip(&self.amplitudes)
            .map(|(t, s)| t.conj() * s)
            .sum();
        Ok(ov.norm_sqr())
    }

    pub fn inner(&self, other: &HybridState) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| b.conj() * a).sum()
    }
}

/// Convenience free function mirroring the state method.
pub fn state_fidelity(state: &HybridState, target: &HybridState) -> Result<f64, HilbertError> {
    state.fidelity(target)
}

/// Dense operator acting on a subset of subsystems, identified by id.
#[derive(Debug, Clone)]
pub struct Operator {
    pub rows: usize,
    pub cols: usize,
    pub elems: Vec<C64>,
    pub targets: Vec<String>,
    pub unitary: bool,
}

impl Operator {
    /// Build a unitary-flagged operator; verifies U†U = 1 to 1e-10.
    pub fn unitary(targets: Vec<String>, elems: Vec<C64>) -> Result<Self, HilbertError> {
        let n = (elems.len() as f64).sqrt().round() as usize;
        assert_eq!(n * n, elems.len(), "operator matrix must be square");
        let op = Self { rows: n, cols: n, elems, targets, unitary: true };
        let dev = op.unitarity_deviation();
        if dev > 1e-10 {
            return Err(HilbertError::NotUnitary(dev));
        }
        Ok(op)
    }

    /// Build an explicitly non-unitary operator (trajectory jumps).
    pub fn non_unitary(targets: Vec<String>, elems: Vec<C64>) -> Self {
        let n = (elems.len() as f64).sqrt().round() as usize;
        assert_eq!(n * n, elems.len(), "operator matrix must be square");
        Self { rows: n, cols: n, elems, targets, unitary: false }
    }

    /// Unitary-flagged operator without the U†U verification, for gates
    /// whose construction is unitary by algebra (covered by the gate
    /// tests); hot loops skip the O(m^3) check.
    pub fn unitary_unchecked(targets: Vec<String>, elems: Vec<C64>) -> Self {
        let n = (elems.len() as f64).sqrt().round() as usize;
        assert_eq!(n * n, elems.len(), "operator matrix must be square");
        Self { rows: n, cols: n, elems, targets, unitary: true }
    }

    /// Precompute the contraction plan against a layout.
    pub fn compile(&self, layout: &SubsystemLayout) -> Result<CompiledOp, HilbertError> {
        let (axes, offsets) = self.local_offsets(layout)?;
        let mut nonzeros = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let e = self.elems[r * self.cols + c];
                if e.re != 0.0 || e.im != 0.0 {
                    nonzeros.push((r as u32, c as u32, e));
                }
            }
        }
        let outer_axes: Vec<usize> = (0..layout.len()).filter(|a| !axes.contains(a)).collect();
        let mut bases = Vec::with_capacity(layout.dim() / self.cols);
        let mut counter = vec![0usize; outer_axes.len()];
        for _ in 0..layout.dim() / self.cols {
            bases.push(
                counter.iter().zip(&outer_axes).map(|(c, a)| c * layout.stride(*a)).sum::<usize>(),
            );
            for (i, c) in counter.iter_mut().enumerate().rev() {
                *c += 1;
                if *c < layout.subsystems()[outer_axes[i]].dim {
                    break;
                }
                *c = 0;
            }
        }
        Ok(CompiledOp { m: self.cols, offsets, nonzeros, bases, unitary: self.unitary })
    }

    pub fn identity(targets: Vec<String>, dim: usize) -> Self {
        let mut elems = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            elems[i * dim + i] = C64::new(1.0, 0.0);
        }
        Self { rows: dim, cols: dim, elems, targets, unitary: true }
    }

    pub fn at(&self, r: usize, c: usize) -> C64 {
        self.elems[r * self.cols + c]
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.at(k, i).conj() * self.at(k, j);
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((acc - expect).norm());
            }
        }
        worst
    }

    /// Matrix product `self * rhs` (same targets).
    pub fn matmul(&self, rhs: &Operator) -> Operator {
        assert_eq!(self.cols, rhs.rows);
        let n = self.rows;
        let m = rhs.cols;
        let mut elems = vec![C64::new(0.0, 0.0); n * m];
        for i in 0..n {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..m {
                    elems[i * m + j] += a * rhs.at(k, j);
                }
            }
        }
        Operator {
            rows: n,
            cols: m,
            elems,
            targets: self.targets.clone(),
            unitary: self.unitary && rhs.unitary,
        }
    }

    pub fn dagger(&self) -> Operator {
        let mut elems = vec![C64::new(0.0, 0.0); self.elems.len()];
        for r in 0..self.rows {
            for c in 0..self.cols {
                elems[c * self.rows + r] = self.at(r, c).conj();
            }
        }
        Operator {
            rows: self.cols,
            cols: self.rows,
            elems,
            targets: self.targets.clone(),
            unitary: self.unitary,
        }
    }

    fn local_offsets(&self, layout: &SubsystemLayout) -> Result<(Vec<usize>, Vec<usize>), HilbertError> {
        let mut axes = Vec::with_capacity(self.targets.len());
        let mut m = 1usize;
        for t in &self.targets {
            let axis = layout.index_of(t)?;
            m *= layout.subsystems()[axis].dim;
            axes.push(axis);
        }
        if m != self.cols {
            return Err(HilbertError::DimensionMismatch { op: self.cols, target: m });
        }
        // offsets[l] = global offset of local basis state l (row-major over targets)
        let mut offsets = vec![0usize; m];
        for (l, off) in offsets.iter_mut().enumerate() {
            let mut rem = l;
            for &axis in axes.iter().rev() {
                let d = layout.subsystems()[axis].dim;
                *off += rem % d * layout.stride(axis);
                rem /= d;
            }
        }
        Ok((axes, offsets))
    }

    /// Contract the operator into a full-space amplitude vector. The
    /// native gates are sparse (block diagonal), so the contraction
    /// walks precomputed nonzero entries instead of the dense matrix.
    pub fn apply_to(&self, amps: &mut [C64], layout: &SubsystemLayout) -> Result<(), HilbertError> {
        let (axes, offsets) = self.local_offsets(layout)?;
        let m = self.cols;
        let total = layout.dim();
        let mut nonzeros: Vec<(u32, u32, C64)> = Vec::new();
        for r in 0..m {
            for c in 0..m {
                let e = self.elems[r * m + c];
                if e.re != 0.0 || e.im != 0.0 {
                    nonzeros.push((r as u32, c as u32, e));
                }
            }
        }
        let mut scratch = vec![C64::new(0.0, 0.0); m];
        // enumerate base indices where all target axes are at level 0
        let outer_axes: Vec<usize> = (0..layout.len()).filter(|a| !axes.contains(a)).collect();
        let n_outer = total / m;
        let mut counter = vec![0usize; outer_axes.len()];
        for _ in 0..n_outer {
            let base: usize =
                counter.iter().zip(&outer_axes).map(|(c, a)| c * layout.stride(*a)).sum();
            for s in scratch.iter_mut() {
                *s = C64::new(0.0, 0.0);
            }
            for &(r, c, v) in &nonzeros {
                scratch[r as usize] += v * amps[base + offsets[c as usize]];
            }
            for (l, off) in offsets.iter().enumerate() {
                amps[base + off] = scratch[l];
            }
            // increment outer counter
            for (i, c) in counter.iter_mut().enumerate().rev() {
                *c += 1;
                if *c < layout.subsystems()[outer_axes[i]].dim {
                    break;
                }
                *c = 0;
            }
        }
        Ok(())
    }
}

/// Precomputed contraction of one operator against one layout, reusable
/// across trajectories.
#[derive(Debug, Clone)]
pub struct CompiledOp {
    m: usize,
    offsets: Vec<usize>,
    nonzeros: Vec<(u32, u32, C64)>,
    bases: Vec<usize>,
    pub unitary: bool,
}

impl CompiledOp {
    pub fn apply(&self, amps: &mut [C64], scratch: &mut Vec<C64>) {
        scratch.resize(self.m, C64::new(0.0, 0.0));
        for &base in &self.bases {
            for s in scratch.iter_mut() {
                *s = C64::new(0.0, 0.0);
            }
            for &(r, c, v) in &self.nonzeros {
                scratch[r as usize] += v * amps[base + self.offsets[c as usize]];
            }
            for (l, off) in self.offsets.iter().enumerate() {
                amps[base + off] = scratch[l];
            }
        }
    }
}

/// Lift `op` to the full space by identity padding, respecting the
/// layout's subsystem ordering.
pub fn embed(op: &Operator, layout: &SubsystemLayout) -> Result<Operator, HilbertError> {
    let (_, offsets) = op.local_offsets(layout)?;
    let total = layout.dim();
    let m = op.cols;
    let mut elems = vec![C64::new(0.0, 0.0); total * total];
    let axes: Vec<usize> =
        op.targets.iter().map(|t| layout.index_of(t)).collect::<Result<_, _>>()?;
    let outer_axes: Vec<usize> = (0..layout.len()).filter(|a| !axes.contains(a)).collect();
    let n_outer = total / m;
    let mut counter = vec![0usize; outer_axes.len()];
    for _ in 0..n_outer {
        let base: usize = counter.iter().zip(&outer_axes).map(|(c, a)| c * layout.stride(*a)).sum();
        for (r, ro) in offsets.iter().enumerate() {
            for (c, co) in offsets.iter().enumerate() {
                elems[(base + ro) * total + (base + co)] = op.at(r, c);
            }
        }
        for (i, c) in counter.iter_mut().enumerate().rev() {
            *c += 1;
            if *c < layout.subsystems()[outer_axes[i]].dim {
                break;
            }
            *c = 0;
        }
    }
    let targets = layout.subsystems().iter().map(|s| s.id.clone()).collect();
    Ok(Operator { rows: total, cols: total, elems, targets, unitary: op.unitary })
}
