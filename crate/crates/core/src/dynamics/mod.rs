//! Simulation of pseudo-gradient and port-Hamiltonian systems, dissipation
//! monitors, relaxation certificates and the conversion between the two
//! representations.

pub mod conversion;
pub mod integrator;
pub mod monitors;
pub mod relaxation;
pub mod systems;
pub mod trajectory;

pub use conversion::{
    check_passive_hessian_structure, compatibility_identities, ph_to_hessian_pseudo_gradient,
    AssumptionCheck, CompatibilityIdentities, Conversion, ConversionReport, PassiveStructureReport, PhSplit,
};
pub use integrator::{Method, Ode, StepControl};
pub use monitors::{dissipation_monitor, incremental_passivity_check, DissipationReport, IncrementalReport};
pub use relaxation::{
    certify_relaxation, classify_monotone_ph, relaxation_storage, MonotoneClassification, RelaxationBranch,
    RelaxationCertificate, RelaxationReport,
};
pub use systems::{
    simulate_hessian_pseudo_gradient, simulate_port_hamiltonian, simulate_pseudo_gradient,
    HessianPseudoGradientSystem, PhCheck, PortHamiltonianSystem, Potential, PseudoGradientSystem,
};
pub use trajectory::Trajectory;
