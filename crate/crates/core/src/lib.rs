//! Harmonic propagation from multiple sources through unbalanced
//! multi-phase radial feeders, with magnitude-based (THD, TPF) and
//! phase-aware (PHI) distortion indices.
//!
//! The numerics are generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below are what the CLI uses.

pub mod cli;
pub mod engine;
pub mod error;
pub mod format;
pub mod indices;
pub mod linalg;
pub mod network;
pub mod phasor;
pub mod scalar;
pub mod sweep;

pub use engine::{
    injection_currents, run_assessment, solve_fundamental, solve_harmonic_order, AssessmentConfig, PerOrderSolution,
    Quantity, ResultStore,
};
pub use error::{Error, Result};
pub use indices::{box_stats, phi, phi_with, thd, total_power_factor, BoxStats, IndexReport, PhiOptions};
pub use network::{load_network, parse_network, validate_topology, NetworkModel};
pub use phasor::{
    in_phase_component, in_quadrature_component, phasor_add, spectrum_rms, synthesize_waveform, HarmonicOrder,
    HarmonicSpectrum, PhaseId, Phasor,
};
pub use scalar::Scalar;
pub use sweep::{angle_sweep, compare_points, coupled_phase_study, index_report, Metric, SweepGrid, SweepSpec};

pub type Phasor64 = Phasor<f64>;
pub type Phasor32 = Phasor<f32>;
pub type Spectrum64 = HarmonicSpectrum<f64>;
pub type Spectrum32 = HarmonicSpectrum<f32>;
pub type Network64 = NetworkModel<f64>;
pub type Network32 = NetworkModel<f32>;
pub type Store64 = ResultStore<f64>;
pub type Solution64 = PerOrderSolution<f64>;
pub type Grid64 = SweepGrid<f64>;
