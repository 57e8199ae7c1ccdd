//! Worked physical models, linear fixtures, and the JSON model registry.

mod brayton_moser;
mod fixtures;
mod rc;
mod registry;
pub mod spec;
mod swing;

pub use brayton_moser::{bm_as_port_hamiltonian, bm_as_pseudo_gradient, bm_perturbed, BraytonMoserModel};
pub use fixtures::{fixture_library, gyrator, indefinite_g, scalar_relaxation, Fixture};
pub use rc::{rc_as_pseudo_gradient, Conductor, RcModel};
pub use registry::{builtin_specs, Registry, MODEL_PATH_VAR};
pub use spec::{parse_models, FieldSpec, LinearModel, Model, ModelSpec, ModelSystem, SystemSpec};
pub use swing::{swing_as_hessian_pseudo_gradient, swing_as_port_hamiltonian, swing_perturbed, SwingModel};
