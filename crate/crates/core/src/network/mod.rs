//! Unbalanced multi-phase radial network: data model, file loader,
//! topology checks and per-order admittance assembly.

mod admittance;
mod file;
mod model;
mod topology;

pub use admittance::{admittance_at_order, scaled_impedance, AdmittanceMatrix, NodeIndex, PerUnit};
pub use file::{load_network, parse_network, NetworkFile};
pub use model::{
    Branch, Bus, HarmonicSource, Load, LoadModel, NetworkModel, SequenceRule, SourceComponent, SubstationEquivalent,
};
pub use topology::{traversal_order, validate_topology, Finding, FindingKind, Tree};
