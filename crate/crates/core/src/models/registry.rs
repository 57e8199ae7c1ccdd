//! Named models: the built-ins plus any JSON files listed in
//! `RECIPKIT_MODEL_PATH` (colon separated).

use super::brayton_moser::BraytonMoserModel;
use super::fixtures::fixture_library;
use super::rc::{Conductor, RcModel};
use super::spec::{
    parse_models, rows_from_matrix, DomainSpec, FieldSpec, HessianSpec, Model, ModelSpec, PortHamiltonianSpec,
    SplitSpec, SystemSpec,
};
use super::swing::SwingModel;
use crate::error::{Error, Result};
use crate::types::Matrix;

pub const MODEL_PATH_VAR: &str = "RECIPKIT_MODEL_PATH";

impl BraytonMoserModel {
    /// Co-energy description with storage `½IᵀLI + ½VᵀCV`.
    pub fn to_spec(&self, name: &str, description: &str) -> ModelSpec {
        let energy = Matrix::from_diagonal(&self.metric().diagonal().abs());
        ModelSpec {
            name: name.into(),
            description: description.into(),
            system: SystemSpec::HessianPseudoGradient(HessianSpec {
                domain: DomainSpec::from(&self.domain),
                input_domain: None,
                k: FieldSpec::quadratic(&self.metric()),
                potential: self.mixed_potential_spec(),
                input_matrix: Some(rows_from_matrix(&self.default_input())),
                inputs: None,
                sigma: None,
                storage: Some(FieldSpec::quadratic(&energy)),
            }),
        }
    }
}

impl SwingModel {
    fn blocks(&self) -> (usize, usize) {
        (self.nodes(), self.edges())
    }

    /// Co-energy description `x = (ω, π)` with the Hamiltonian as storage.
    pub fn to_spec(&self, name: &str, description: &str) -> ModelSpec {
        let (n, k) = self.blocks();
        let mut potential = Matrix::zeros(n + k, n + k);
        potential.view_mut((0, 0), (n, n)).copy_from(&self.a);
        potential.view_mut((0, n), (n, k)).copy_from(&self.d);
        potential.view_mut((n, 0), (k, n)).copy_from(&self.d.transpose());
        let gamma: Vec<f64> = self.gamma.iter().copied().collect();
        let inertia = FieldSpec::embed(0..n, FieldSpec::quadratic(&Matrix::from_diagonal(&self.m)));
        ModelSpec {
            name: name.into(),
            description: description.into(),
            system: SystemSpec::HessianPseudoGradient(HessianSpec {
                domain: DomainSpec::from(&self.coenergy_domain()),
                input_domain: None,
                k: FieldSpec::Sum {
                    fields: vec![inertia.clone(), FieldSpec::embed(n..n + k, FieldSpec::SwingConjugate { gamma: gamma.clone() })],
                },
                potential: FieldSpec::quadratic(&potential),
                input_matrix: Some(rows_from_matrix(&self.input_matrix())),
                inputs: None,
                sigma: None,
                storage: Some(FieldSpec::Sum {
                    fields: vec![inertia, FieldSpec::embed(n..n + k, FieldSpec::FlowStorage { gamma })],
                }),
            }),
        }
    }

    /// Energy description `z = (p, q)` with the conversion data attached.
    pub fn to_energy_spec(&self, name: &str, description: &str) -> ModelSpec {
        let (n, k) = self.blocks();
        let mut j = Matrix::zeros(n + k, n + k);
        j.view_mut((0, n), (n, k)).copy_from(&(-&self.d));
        j.view_mut((n, 0), (k, n)).copy_from(&self.d.transpose());
        let gamma: Vec<f64> = self.gamma.iter().copied().collect();
        let inv_m = Matrix::from_diagonal(&self.m.map(|m| 1.0 / m));
        let xdom = DomainSpec::from(&self.coenergy_domain());
        ModelSpec {
            name: name.into(),
            description: description.into(),
            system: SystemSpec::PortHamiltonian(PortHamiltonianSpec {
                domain: DomainSpec::from(&self.energy_domain()),
                input_domain: None,
                h: FieldSpec::Sum {
                    fields: vec![
                        FieldSpec::embed(0..n, FieldSpec::quadratic(&inv_m)),
                        FieldSpec::embed(n..n + k, FieldSpec::NegCos { gamma: gamma.clone() }),
                    ],
                },
                j: rows_from_matrix(&j),
                dissipation: Some(FieldSpec::embed(0..n, FieldSpec::quadratic(&self.a))),
                coenergy_domain: Some(xdom.clone()),
                g: rows_from_matrix(&self.input_matrix()),
                split: Some(SplitSpec {
                    n1: n,
                    h1: FieldSpec::quadratic(&inv_m),
                    h2: FieldSpec::NegCos { gamma },
                    p1: FieldSpec::quadratic(&self.a),
                    p2: FieldSpec::Constant { value: 0.0 },
                    pc: rows_from_matrix(&self.d),
                    g1: rows_from_matrix(&Matrix::identity(n, n)),
                    coenergy_domain: xdom,
                }),
            }),
        }
    }
}

impl RcModel {
    /// Co-energy description in node potentials with `σ = −I`.
    pub fn to_spec(&self, name: &str, description: &str) -> ModelSpec {
        let d = self.incidence();
        let potential = match self.conductor {
            Conductor::Tanh => FieldSpec::LogCosh { matrix: rows_from_matrix(&d), weights: None },
            Conductor::Linear => FieldSpec::quadratic(&(&d * d.transpose())),
        };
        ModelSpec {
            name: name.into(),
            description: description.into(),
            system: SystemSpec::HessianPseudoGradient(HessianSpec {
                domain: DomainSpec::from(&self.domain()),
                input_domain: Some(DomainSpec::from(&self.input_domain())),
                k: FieldSpec::CapacitorConjugate { beta: self.beta },
                potential,
                input_matrix: None,
                inputs: Some(self.terminals()),
                sigma: Some(vec![-1.0; self.terminals()]),
                storage: None,
            }),
        }
    }
}

pub fn builtin_specs() -> Vec<ModelSpec> {
    let mut specs = vec![
        BraytonMoserModel::rlc().to_spec(
            "brayton-moser",
            "series RLC circuit in mixed-potential form; constant metric diag(L, -C)",
        ),
        BraytonMoserModel::nonlinear().to_spec(
            "brayton-moser-nonlinear",
            "RLC circuit with cubic resistor and tanh conductor in mixed-potential form",
        ),
        SwingModel::two_node(1.0).to_spec(
            "swing",
            "two-node swing equations in frequencies and line flows; Hessian metric diag(M, -L(pi))",
        ),
        SwingModel::two_node(1.0).to_energy_spec(
            "swing-energy",
            "two-node swing equations in momenta and angles, port-Hamiltonian form with conversion data",
        ),
        RcModel::ladder().to_spec(
            "rc-relaxation",
            "two-capacitor RC ladder with quartic capacitors and tanh conductors; sigma = -I relaxation",
        ),
        RcModel::scalar_linear().to_spec(
            "rc-linear",
            "single linear capacitor and conductor driven by one terminal potential",
        ),
    ];
    specs.extend(fixture_library().into_iter().map(|f| f.spec));
    specs
}

#[derive(Debug, Clone)]
pub struct Registry {
    specs: Vec<ModelSpec>,
}

impl Registry {
    pub fn builtin() -> Self {
        Self { specs: builtin_specs() }
    }

    /// Built-ins plus every file in the colon-separated `path`. Empty
    /// entries are skipped.
    pub fn with_path(path: &str) -> Result<Self> {
        let mut reg = Self::builtin();
        for file in path.split(':').filter(|p| !p.is_empty()) {
            let text = std::fs::read_to_string(file)
                .map_err(|e| Error::Input(format!("cannot read model registry {file}: {e}")))?;
            reg.add(parse_models(&text)?)?;
        }
        Ok(reg)
    }

    /// Reads [`MODEL_PATH_VAR`]; unset means built-ins only.
    pub fn from_env() -> Result<Self> {
        Self::with_path(&std::env::var(MODEL_PATH_VAR).unwrap_or_default())
    }

    pub fn add(&mut self, specs: Vec<ModelSpec>) -> Result<()> {
        for spec in specs {
            if self.specs.iter().any(|s| s.name == spec.name) {
                return Err(Error::Input(format!("duplicate model name '{}'", spec.name)));
            }
            self.specs.push(spec);
        }
        Ok(())
    }

    pub fn specs(&self) -> &[ModelSpec] {
        &self.specs
    }

    pub fn names(&self) -> Vec<&str> {
        self.specs.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Result<Model> {
        self.specs
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Input(format!("unknown model '{name}'; see list-models")))?
            .build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{bm_as_pseudo_gradient, rc_as_pseudo_gradient, swing_as_hessian_pseudo_gradient, swing_as_port_hamiltonian, ModelSystem};
    use crate::types::Vector;
    use std::io::Write;

    #[test]
    fn builtins_build_and_are_unique() {
        let reg = Registry::builtin();
        let names = reg.names();
        for want in ["brayton-moser", "swing", "rc-relaxation", "scalar-relaxation", "gyrator", "indefinite-G"] {
            assert!(names.contains(&want), "{want}");
        }
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        for spec in reg.specs() {
            let model = spec.build().unwrap();
            assert!(!model.description.is_empty());
            // Every model survives a JSON round trip.
            let text = serde_json::to_string(spec).unwrap();
            assert_eq!(&parse_models(&text).unwrap()[0], spec);
        }
    }

    fn hessian(name: &str) -> crate::dynamics::HessianPseudoGradientSystem {
        match Registry::builtin().get(name).unwrap().system {
            ModelSystem::HessianPseudoGradient { system, .. } => system,
            _ => panic!("{name} is not a Hessian system"),
        }
    }

    fn same_dynamics(a: &crate::dynamics::HessianPseudoGradientSystem, b: &crate::dynamics::HessianPseudoGradientSystem) {
        for x in a.domain().shrink(0.9).low_discrepancy(20) {
            let u = Vector::from_element(a.nu(), 0.3);
            let fa = a.vector_field(&x, &u).unwrap();
            let fb = b.vector_field(&x, &u).unwrap();
            assert!((fa - fb).amax() < 1e-10);
            assert!((a.output(&x, &u) - b.output(&x, &u)).amax() < 1e-12);
        }
    }

    #[test]
    fn specs_match_direct_constructors() {
        same_dynamics(&hessian("brayton-moser"), &bm_as_pseudo_gradient(&BraytonMoserModel::rlc(), None).unwrap());
        same_dynamics(
            &hessian("brayton-moser-nonlinear"),
            &bm_as_pseudo_gradient(&BraytonMoserModel::nonlinear(), None).unwrap(),
        );
        same_dynamics(&hessian("swing"), &swing_as_hessian_pseudo_gradient(&SwingModel::two_node(1.0)).unwrap());
        same_dynamics(&hessian("rc-relaxation"), &rc_as_pseudo_gradient(&RcModel::ladder()).unwrap());
        same_dynamics(&hessian("rc-linear"), &rc_as_pseudo_gradient(&RcModel::scalar_linear()).unwrap());
        let ModelSystem::PortHamiltonian { system, split } = Registry::builtin().get("swing-energy").unwrap().system else {
            panic!()
        };
        assert!(split.is_some());
        let direct = swing_as_port_hamiltonian(&SwingModel::two_node(1.0)).unwrap();
        for z in system.domain().low_discrepancy(20) {
            let u = Vector::from_element(2, -0.2);
            assert!((system.vector_field(&z, &u) - direct.vector_field(&z, &u)).amax() < 1e-12);
        }
    }

    #[test]
    fn user_registry_files() {
        let dir = tempfile::tempdir().unwrap();
        let extra = dir.path().join("extra.json");
        let mut f = std::fs::File::create(&extra).unwrap();
        write!(f, r#"[{{"name": "lag2", "kind": "linear", "a": [[-2.0]], "b": [[1.0]], "c": [[1.0]]}}]"#).unwrap();
        let path = format!(":{}:", extra.display());
        let reg = Registry::with_path(&path).unwrap();
        assert!(reg.names().contains(&"lag2"));
        assert_eq!(Registry::with_path("").unwrap().names().len(), Registry::builtin().names().len());

        let dup = dir.path().join("dup.json");
        std::fs::write(&dup, r#"{"name": "swing", "kind": "linear", "a": [[-1.0]], "b": [[1.0]], "c": [[1.0]]}"#).unwrap();
        assert!(matches!(Registry::with_path(dup.to_str().unwrap()), Err(Error::Input(_))));
        assert!(matches!(Registry::with_path("/nonexistent/models.json"), Err(Error::Input(_))));
        assert!(matches!(Registry::builtin().get("nope"), Err(Error::Input(_))));
    }
}
