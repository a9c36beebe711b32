//! Benchmarking protocols for the star QPU: randomized benchmarking with
//! fidelity-model fitting, the multiple-quantum-coherences GHZ fidelity,
//! readout-error mitigation, Q-score, and TFIM zero-noise extrapolation.

pub mod clifford;
pub mod fits;
pub mod logical;
pub mod mitigation;
pub mod mqc;
pub mod qscore;
pub mod rb;
pub mod tfim;

pub use fits::{fit_decay, fit_quadratic, rb_fidelity, DecayFit, QuadraticFidelityFit, RbPoint};
pub use mitigation::{apply_assignment, mitigate_distribution, MitigatedDistribution};
pub use mqc::{mqc_ghz_fidelity, MqcOptions, MqcResult};
pub use qscore::{qscore, QScoreOptions, QScoreResult};
pub use rb::{irb_move, irb_move_lcz, rb_1q, rb_2q, IrbResult, RbConfig, RbNoise};
pub use tfim::{exact_ground_energy, tfim_energy, zne, zne_tfim, ZneResult};
