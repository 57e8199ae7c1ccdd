//! One function per subcommand. Each returns an [`Outcome`]; `run` wraps it
//! in the common report envelope and picks the exit status.

use std::collections::BTreeMap;
use std::fs;

use rand_chacha::ChaCha8Rng;
use recipkit::dynamics::{
    certify_relaxation, dissipation_monitor, ph_to_hessian_pseudo_gradient, simulate_hessian_pseudo_gradient,
    simulate_port_hamiltonian, Conversion, HessianPseudoGradientSystem, Ode, PortHamiltonianSystem, StepControl,
    Trajectory,
};
use recipkit::geometry::{
    christoffel_to_nested, external_reciprocity_test, hessian_christoffel, levi_civita, ExternalTestOptions, Nominal,
};
use recipkit::legendre::{make_legendre_pair, tabulate_conjugate, InitPolicy};
use recipkit::linalg::min_eigenvalue;
use recipkit::linear::{
    check_linear_reciprocity, compatible_storage_fixed_point, default_past_inputs, impulse_response_symmetry,
    kernel_invariance_check, lmi_residual, recover_metric_hankel_with, solve_dual_isomorphism,
    split_port_hamiltonian_form, to_pseudo_gradient, CompatibilityOptions, HankelOptions,
};
use recipkit::models::{parse_models, LinearModel, Model, ModelSystem, Registry};
use recipkit::nonlinear::{check_reciprocity_affine, check_reciprocity_hessian};
use recipkit::report::csv_table;
use recipkit::sampling::DEFAULT_SAMPLES;
use recipkit::{AffineSystem, Error, Matrix, MetricField, ScalarField, Signal, Vector};
use serde_json::{json, Value};

use crate::support::{
    emit, matrix_csv, matrix_json, random_input, random_points, rng, to_value, tolerances, vector_json, CliResult,
    Failure, Status,
};
use crate::{Command, RunOptions, Q0};

/// Extra seeded points appended to the deterministic sample set.
const RANDOM_SAMPLES: usize = 32;
const IMPULSE_TIMES: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];

struct Outcome {
    passed: bool,
    result: Value,
    files: Vec<(String, String)>,
}

impl Outcome {
    fn new(passed: bool, result: Value) -> Self {
        Self { passed, result, files: Vec::new() }
    }

    fn with_file(mut self, name: impl Into<String>, contents: String) -> Self {
        self.files.push((name.into(), contents));
        self
    }
}

struct Ctx<'a> {
    opts: &'a RunOptions,
    tol: BTreeMap<String, f64>,
    rng: ChaCha8Rng,
}

impl Ctx<'_> {
    fn tol(&self, key: &str) -> f64 {
        self.tol[key]
    }
}

fn default_tolerances(cmd: Command) -> &'static [(&'static str, f64)] {
    match cmd {
        Command::CheckReciprocity => &[("fd", 1e-6), ("impulse", 1e-9), ("reciprocity", 1e-9)],
        Command::CheckPassivity => &[("dissipation", 1e-4), ("lmi", 1e-8), ("relaxation", 1e-10)],
        Command::CompatibleQ => &[("compat", 1e-10), ("lmi", 1e-8), ("reciprocity", 1e-9)],
        Command::RecoverG => &[("hankel", 1e-4), ("quadrature", 1e-13), ("reciprocity", 1e-8), ("tail", 1e-10)],
        Command::Legendre => &[("biconjugation", 1e-8), ("hessian", 1e-6), ("round_trip", 1e-8)],
        Command::Christoffel => &[("christoffel", 1e-6), ("flatness", 1e-5)],
        Command::VariationalTest => &[("external", 1e-5)],
        Command::Simulate => &[("dissipation", 1e-4)],
        Command::CertifyRelaxation => &[("relaxation", 1e-10)],
        Command::ConvertPh => &[("compat", 1e-10), ("lmi", 1e-8), ("reciprocity", 1e-9), ("split", 1e-6)],
        Command::ListModels => &[],
    }
}

pub fn list_models() -> CliResult<Status> {
    let registry = Registry::from_env()?;
    let width = registry.names().iter().map(|n| n.len()).max().unwrap_or(0);
    for spec in registry.specs() {
        let description = spec.description.lines().next().unwrap_or("");
        println!("{:<width$}  {description}", spec.name);
    }
    Ok(Status::Ok)
}

pub fn run(cmd: Command, opts: &RunOptions) -> CliResult<Status> {
    let tol = tolerances(default_tolerances(cmd), &opts.tols)?;
    for (flag, v) in [("--horizon", opts.horizon), ("--step", opts.step)] {
        if let Some(v) = v {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Failure::input(format!("{flag} must be positive and finite, got {v}")));
            }
        }
    }
    let model = load_model(opts)?;
    let mut ctx = Ctx { opts, tol, rng: rng(opts.seed) };
    let outcome = match cmd {
        Command::CheckReciprocity => check_reciprocity(&model, &mut ctx),
        Command::CheckPassivity => check_passivity(&model, &mut ctx),
        Command::CompatibleQ => compatible_q(&model, &ctx),
        Command::RecoverG => recover_g(&model, &ctx),
        Command::Legendre => legendre(&model, &mut ctx),
        Command::Christoffel => christoffel(&model, &mut ctx),
        Command::VariationalTest => variational_test(&model, &mut ctx),
        Command::Simulate => simulate(&model, &mut ctx),
        Command::CertifyRelaxation => certify(&model, &ctx),
        Command::ConvertPh => convert_ph(&model, &ctx),
        Command::ListModels => unreachable!("list-models takes no model"),
    };
    let mut report = json!({
        "command": cmd.name(),
        "model": model.name,
        "kind": model.system.kind(),
        "seed": opts.seed,
        "tolerances": ctx.tol,
    });
    match outcome {
        Ok(out) => {
            let status = if out.passed { Status::Ok } else { Status::CheckFailed };
            report["passed"] = Value::from(out.passed);
            report["status"] = Value::from(status as u8);
            report["result"] = out.result;
            emit(opts.out.as_deref(), &report, &out.files)?;
            if status == Status::CheckFailed {
                eprintln!("recipkit: {} failed for model {:?}", cmd.name(), model.name);
            }
            Ok(status)
        }
        Err(failure) => {
            // Input errors leave no report; failed checks and numerical
            // failures still record what went wrong.
            if failure.status != Status::InputError {
                report["passed"] = Value::from(false);
                report["status"] = Value::from(failure.status as u8);
                report["error"] = Value::from(failure.message.clone());
                emit(opts.out.as_deref(), &report, &[])?;
            }
            Err(failure)
        }
    }
}

fn load_model(opts: &RunOptions) -> CliResult<Model> {
    match (&opts.input, &opts.model) {
        (Some(path), name) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
            let specs = parse_models(&text)?;
            let spec = match name {
                Some(name) => specs
                    .iter()
                    .find(|s| &s.name == name)
                    .ok_or_else(|| Failure::input(format!("{} has no model named {name:?}", path.display())))?,
                None if specs.len() == 1 => &specs[0],
                None => {
                    let names: Vec<&str> = specs.iter().map(|s| s.name.as_str()).collect();
                    return Err(Failure::input(format!(
                        "{} holds {} models {names:?}; pick one with --model",
                        path.display(),
                        specs.len()
                    )));
                }
            };
            Ok(spec.build()?)
        }
        (None, Some(name)) => Ok(Registry::from_env()?.get(name)?),
        (None, None) => Err(Failure::input("either --model or --input is required")),
    }
}

fn unsupported(cmd: &str, model: &Model, needs: &str) -> Failure {
    Failure::input(format!("{cmd} needs {needs}; model {:?} is of kind {}", model.name, model.system.kind()))
}

/// The model's metric, or for linear systems without one the metric
/// solved from the dual isomorphism.
fn linear_metric(lm: &LinearModel) -> CliResult<(Matrix, &'static str)> {
    match &lm.metric {
        Some(g) => Ok((g.clone(), "model")),
        None => Ok((solve_dual_isomorphism(&lm.sys, &lm.sigma)?, "dual isomorphism")),
    }
}

fn is_positive_definite(m: &Matrix) -> bool {
    min_eigenvalue(m) > 0.0
}

/// Starting storage matrix: `--q0 identity`, else the model's `q0`, else a
/// positive definite metric, else the identity.
fn initial_storage(lm: &LinearModel, g: Option<&Matrix>, flag: Option<Q0>) -> (Matrix, &'static str) {
    let n = lm.sys.n();
    if flag == Some(Q0::Identity) {
        return (Matrix::identity(n, n), "identity");
    }
    if let Some(q) = &lm.q0 {
        return (q.clone(), "model q0");
    }
    match g {
        Some(g) if is_positive_definite(g) => (g.clone(), "metric"),
        _ => (Matrix::identity(n, n), "identity"),
    }
}

fn compatibility_options(ctx: &Ctx) -> CompatibilityOptions {
    CompatibilityOptions {
        tol: ctx.tol("compat"),
        lmi_tol: ctx.tol("lmi"),
        reciprocity_tol: ctx.tol("reciprocity"),
        ..CompatibilityOptions::default()
    }
}

fn convert(model: &Model, cmd: &str) -> CliResult<Conversion> {
    match &model.system {
        ModelSystem::PortHamiltonian { system, split: Some(split) } => Ok(ph_to_hessian_pseudo_gradient(system, split)?),
        _ => Err(unsupported(cmd, model, "split data for the co-energy form")),
    }
}

/// The pseudo-gradient form of a model: Hessian models directly, split
/// port-Hamiltonian models through their conversion.
fn hessian_system(model: &Model, cmd: &str) -> CliResult<(HessianPseudoGradientSystem, &'static str)> {
    match &model.system {
        ModelSystem::HessianPseudoGradient { system, .. } => Ok((system.clone(), "model")),
        ModelSystem::PortHamiltonian { split: Some(_), .. } => Ok((convert(model, cmd)?.system, "converted co-energy form")),
        _ => Err(unsupported(cmd, model, "a hessian_pseudo_gradient model or a port_hamiltonian model with split data")),
    }
}

fn state_input_samples(sys: &HessianPseudoGradientSystem, ctx: &mut Ctx) -> Vec<(Vector, Vector)> {
    let nl = sys.to_nonlinear();
    let mut pairs = nl.sample_pairs(DEFAULT_SAMPLES);
    let xs = random_points(&mut ctx.rng, sys.domain(), 0.95, RANDOM_SAMPLES);
    let us = random_points(&mut ctx.rng, &sys.input_domain(), 1.0, RANDOM_SAMPLES);
    pairs.extend(xs.into_iter().zip(us));
    pairs
}

fn check_reciprocity(model: &Model, ctx: &mut Ctx) -> CliResult<Outcome> {
    match &model.system {
        ModelSystem::Linear(lm) => {
            let (g, source) = linear_metric(lm)?;
            let rec = check_linear_reciprocity(&lm.sys, &g, &lm.sigma, ctx.tol("reciprocity"))?;
            let imp = impulse_response_symmetry(&lm.sys, &lm.sigma, &IMPULSE_TIMES, ctx.tol("impulse"))?;
            Ok(Outcome::new(
                rec.reciprocal && imp.symmetric,
                json!({
                    "reciprocal": rec.reciprocal,
                    "residual": rec.residual,
                    "metric": matrix_json(&g),
                    "metric_source": source,
                    "impulse_symmetry": imp,
                    "impulse_times": IMPULSE_TIMES,
                }),
            ))
        }
        ModelSystem::Nonlinear { system, metric, sigma, .. } => {
            let mut samples = system.domain().low_discrepancy(DEFAULT_SAMPLES);
            samples.extend(random_points(&mut ctx.rng, system.domain(), 0.95, RANDOM_SAMPLES));
            let rep = check_reciprocity_affine(system, metric, sigma, &samples, ctx.tol("fd"))?;
            Ok(Outcome::new(rep.reciprocal, to_value(&rep)))
        }
        _ => {
            let (sys, form) = hessian_system(model, "check-reciprocity")?;
            let samples = state_input_samples(&sys, ctx);
            let rep = check_reciprocity_hessian(&sys.to_nonlinear(), &sys.k, &sys.sigma, &samples, ctx.tol("fd"))?;
            let mut result = to_value(&rep);
            result["form"] = Value::from(form);
            Ok(Outcome::new(rep.reciprocal, result))
        }
    }
}

/// Seeded start inside the middle half of the box, seeded input, and the
/// horizon and step from the flags.
fn run_setup(ctx: &mut Ctx, domain: &recipkit::BoxDomain, input_domain: &recipkit::BoxDomain) -> (Vector, Signal, Value, (f64, f64), StepControl) {
    let x0 = random_points(&mut ctx.rng, domain, 0.5, 1).remove(0);
    let (u, desc) = random_input(&mut ctx.rng, input_domain);
    let horizon = ctx.opts.horizon.unwrap_or(10.0);
    let step = ctx.opts.step.unwrap_or(1e-2);
    (x0, u, desc, (0.0, horizon), StepControl::new(step))
}

fn trajectory_summary(traj: &Trajectory, x0: &Vector, input: Value) -> Value {
    json!({
        "x0": vector_json(x0),
        "input": input,
        "samples": traj.len(),
        "final_time": traj.times.last().copied(),
        "final_state": vector_json(traj.final_state()),
    })
}

/// Storage for a Hessian model: the model's own, else the certified
/// relaxation storage.
fn hessian_storage(model: &Model, sys: &HessianPseudoGradientSystem, ctx: &Ctx) -> CliResult<(ScalarField, &'static str)> {
    if let ModelSystem::HessianPseudoGradient { storage: Some(s), .. } = &model.system {
        return Ok((s.clone(), "model"));
    }
    let cert = certify_relaxation(sys, &[], ctx.tol("relaxation"))?;
    if !cert.report.relaxation {
        return Err(Error::CheckFailed(format!(
            "no storage function: the model supplies none and relaxation certification fails (margin {:e})",
            cert.report.min_margin
        ))
        .into());
    }
    Ok((cert.storage, "relaxation certificate"))
}

fn check_passivity(model: &Model, ctx: &mut Ctx) -> CliResult<Outcome> {
    match &model.system {
        ModelSystem::Linear(lm) => {
            let g = linear_metric(lm).ok().map(|(g, _)| g);
            let (q, source) = initial_storage(lm, g.as_ref(), ctx.opts.q0);
            let lmi = lmi_residual(&lm.sys, &q, ctx.tol("lmi"))?;
            let kernel = kernel_invariance_check(&lm.sys, &q, ctx.tol("lmi"))?;
            Ok(Outcome::new(
                lmi.passive && kernel.a_invariant && kernel.in_ker_c,
                json!({
                    "storage": matrix_json(&q),
                    "storage_source": source,
                    "lmi": lmi,
                    "kernel": kernel,
                }),
            ))
        }
        ModelSystem::Nonlinear { .. } => Err(unsupported(
            "check-passivity",
            model,
            "a linear, hessian_pseudo_gradient or port_hamiltonian model",
        )),
        ModelSystem::HessianPseudoGradient { system, .. } => {
            let (storage, source) = hessian_storage(model, system, ctx)?;
            let (x0, u, desc, span, ctl) = run_setup(ctx, system.domain(), &system.input_domain());
            let traj = simulate_hessian_pseudo_gradient(system, &x0, &u, span, &ctl)?.with_storage(&storage);
            let rep = dissipation_monitor(&traj, &storage, ctx.tol("dissipation"));
            Ok(Outcome::new(
                rep.passive_along,
                json!({
                    "storage_source": source,
                    "dissipation": rep,
                    "trajectory": trajectory_summary(&traj, &x0, desc),
                }),
            )
            .with_file("trajectory.csv", traj.to_csv()))
        }
        ModelSystem::PortHamiltonian { system, .. } => {
            let structure = system.verify(&system.domain().low_discrepancy(DEFAULT_SAMPLES))?;
            let (z0, u, desc, span, ctl) = run_setup(ctx, system.domain(), &system.input_domain);
            let traj = simulate_port_hamiltonian(system, &z0, &u, span, &ctl)?;
            let rep = dissipation_monitor(&traj, &system.h, ctx.tol("dissipation"));
            let structural = structure.min_dissipation >= -ctx.tol("lmi");
            Ok(Outcome::new(
                rep.passive_along && structural,
                json!({
                    "storage_source": "Hamiltonian",
                    "structure": structure,
                    "dissipation": rep,
                    "trajectory": trajectory_summary(&traj, &z0, desc),
                }),
            )
            .with_file("trajectory.csv", traj.to_csv()))
        }
    }
}

fn linear_only<'m>(model: &'m Model, cmd: &str) -> CliResult<&'m LinearModel> {
    match &model.system {
        ModelSystem::Linear(lm) => Ok(lm),
        _ => Err(unsupported(cmd, model, "a linear model")),
    }
}

fn compatible_q(model: &Model, ctx: &Ctx) -> CliResult<Outcome> {
    let lm = linear_only(model, "compatible-q")?;
    let (g, g_source) = linear_metric(lm)?;
    let (q0, q0_source) = initial_storage(lm, Some(&g), ctx.opts.q0);
    let out = compatible_storage_fixed_point(&lm.sys, &g, &lm.sigma, &q0, &compatibility_options(ctx))?;
    let passed = out.compatibility_residual <= ctx.tol("compat") && out.lmi_min_eigenvalue >= -ctx.tol("lmi");
    let mut result = to_value(&out);
    result["q"] = matrix_json(&out.q);
    result["q0"] = matrix_json(&q0);
    result["q0_source"] = Value::from(q0_source);
    result["metric"] = matrix_json(&g);
    result["metric_source"] = Value::from(g_source);
    Ok(Outcome::new(passed, result).with_file("q.csv", matrix_csv(&out.q)))
}

fn recover_g(model: &Model, ctx: &Ctx) -> CliResult<Outcome> {
    let lm = linear_only(model, "recover-g")?;
    let defaults = HankelOptions::default();
    let opts = HankelOptions {
        horizon: ctx.opts.horizon.unwrap_or(defaults.horizon),
        tail_tol: ctx.tol("tail"),
        quadrature_tol: ctx.tol("quadrature"),
        ..defaults
    };
    let inputs = default_past_inputs(lm.sys.n(), lm.sys.m());
    let rec = recover_metric_hankel_with(&lm.sys, &lm.sigma, &opts, &inputs)?;
    let reciprocity = check_linear_reciprocity(&lm.sys, &rec.g, &lm.sigma, ctx.tol("reciprocity"))?;
    let error = lm.metric.as_ref().map(|g| (&rec.g - g).norm() / g.norm());
    let passed = reciprocity.reciprocal && error.is_none_or(|e| e <= ctx.tol("hankel"));
    let mut result = to_value(&rec);
    result["g"] = matrix_json(&rec.g);
    result["past_inputs"] = Value::from(inputs.len());
    result["reciprocity"] = to_value(&reciprocity);
    result["relative_error"] = error.map_or(Value::Null, Value::from);
    Ok(Outcome::new(passed, result).with_file("g.csv", matrix_csv(&rec.g)))
}

/// The convex-analysis generator of a model: `½xᵀGx` for linear models,
/// the metric generator `K` for Hessian ones, `H` for port-Hamiltonian ones.
fn generator(model: &Model, cmd: &str) -> CliResult<(ScalarField, &'static str)> {
    match &model.system {
        ModelSystem::Linear(lm) => {
            let (g, _) = linear_metric(lm)?;
            Ok((ScalarField::quadratic(g, lm.domain.clone()), "quadratic form of the metric"))
        }
        ModelSystem::Nonlinear { metric_generator: Some(k), .. } => Ok((k.clone(), "metric generator")),
        ModelSystem::Nonlinear { .. } => Err(unsupported(cmd, model, "a Hessian metric with a known generator")),
        ModelSystem::HessianPseudoGradient { system, .. } => Ok((system.k.clone(), "metric generator")),
        ModelSystem::PortHamiltonian { system, .. } => Ok((system.h.clone(), "Hamiltonian")),
    }
}

fn legendre(model: &Model, ctx: &mut Ctx) -> CliResult<Outcome> {
    let (k, source) = generator(model, "legendre")?;
    let pair = make_legendre_pair(&k, InitPolicy::WarmStart)?;
    let mut samples = k.domain().shrink(0.9).low_discrepancy(DEFAULT_SAMPLES);
    samples.extend(random_points(&mut ctx.rng, k.domain(), 0.9, RANDOM_SAMPLES));
    let check = pair.verify(&samples)?;
    let passed = check.round_trip <= ctx.tol("round_trip")
        && check.inverse_round_trip <= ctx.tol("round_trip")
        && check.biconjugation <= ctx.tol("biconjugation")
        && check.hessian_gap <= ctx.tol("hessian");
    let mut result = to_value(&check);
    result["generator"] = Value::from(source);
    result["conjugate_domain"] = json!({
        "lower": pair.kstar().domain().lower(),
        "upper": pair.kstar().domain().upper(),
    });
    let mut out = Outcome::new(passed, result);
    if k.dim() <= 2 {
        let mut headers: Vec<String> = (1..=k.dim()).map(|i| format!("z_{i}")).collect();
        headers.push("kstar".into());
        out = out.with_file("conjugate.csv", csv_table(&headers, &tabulate_conjugate(&pair, 21)));
    }
    Ok(out)
}

fn christoffel(model: &Model, ctx: &mut Ctx) -> CliResult<Outcome> {
    let (k, source) = generator(model, "christoffel")?;
    let n = k.dim();
    let mut samples = k.domain().shrink(0.9).low_discrepancy(50);
    samples.extend(random_points(&mut ctx.rng, k.domain(), 0.9, 8));
    let flat = recipkit::geometry::flatness_check(&k, &samples, ctx.tol("flatness"));
    let metric = MetricField::from_hessian(&k);
    let mut gap: f64 = 0.0;
    let mut rows = Vec::with_capacity(samples.len());
    for x in &samples {
        let hess = hessian_christoffel(&k, x)?;
        let lc = levi_civita(&metric, x)?;
        for (a, b) in hess.iter().zip(&lc) {
            gap = gap.max((a - b).amax());
        }
        let mut row: Vec<f64> = x.iter().copied().collect();
        for gk in &hess {
            row.extend(gk.transpose().iter().copied());
        }
        rows.push(row);
    }
    let mut headers: Vec<String> = (1..=n).map(|i| format!("x_{i}")).collect();
    for kk in 1..=n {
        for i in 1..=n {
            headers.extend((1..=n).map(|j| format!("gamma_{kk}_{i}_{j}")));
        }
    }
    let center = k.domain().center();
    let result = json!({
        "generator": source,
        "flatness": flat,
        "max_levi_civita_gap": gap,
        "points": samples.len(),
        "center": vector_json(&center),
        "gamma_at_center": christoffel_to_nested(&hessian_christoffel(&k, &center)?),
    });
    Ok(Outcome::new(gap <= ctx.tol("christoffel"), result).with_file("christoffel.csv", csv_table(&headers, &rows)))
}

fn affine_with_metric(model: &Model) -> CliResult<(AffineSystem, MetricField, bool)> {
    let cmd = "variational-test";
    Ok(match &model.system {
        ModelSystem::Linear(lm) => {
            let (g, _) = linear_metric(lm)?;
            let sys = lm.sys.to_affine(lm.domain.clone(), lm.input_domain.clone());
            (sys, MetricField::constant(g, lm.domain.clone()), lm.sigma.is_identity())
        }
        ModelSystem::Nonlinear { system, metric, sigma, .. } => (system.clone(), metric.clone(), sigma.is_identity()),
        _ => {
            let (sys, _) = hessian_system(model, cmd)?;
            (sys.to_affine()?, sys.metric(), sys.sigma.is_identity())
        }
    })
}

fn variational_test(model: &Model, ctx: &mut Ctx) -> CliResult<Outcome> {
    let (sys, metric, sigma_identity) = affine_with_metric(model)?;
    if !sigma_identity {
        return Err(unsupported("variational-test", model, "sigma = I (the dual system is driven by the same input)"));
    }
    let x0 = random_points(&mut ctx.rng, sys.domain(), 0.25, 1).remove(0);
    let nominal = Nominal { x0: x0.clone(), input: Signal::zero(sys.nu()) };
    let defaults = ExternalTestOptions::default();
    let opts = ExternalTestOptions {
        horizon: ctx.opts.horizon.unwrap_or(defaults.horizon),
        step: ctx.opts.step.unwrap_or(defaults.step),
        tol: ctx.tol("external"),
        ..defaults
    };
    let rep = external_reciprocity_test(&sys, &metric, &nominal, &[], &opts)?;
    let mut result = to_value(&rep);
    result["x0"] = vector_json(&x0);
    let mut out = Outcome::new(rep.matched, result);
    for p in &rep.probes {
        out = out.with_file(format!("probe_{}.csv", p.name), p.csv.clone());
    }
    Ok(out)
}

/// Integrates `ẋ = v(x, u(t))` and records `y = h(x, u)`.
fn integrate(
    v: &dyn Fn(&Vector, &Vector) -> Vector,
    h: &dyn Fn(&Vector, &Vector) -> Vector,
    domain: Option<&recipkit::BoxDomain>,
    x0: &Vector,
    u: &Signal,
    span: (f64, f64),
    ctl: &StepControl,
) -> CliResult<Trajectory> {
    let rhs = |t: f64, x: &Vector| v(x, &u.at(t));
    let ode = Ode { mass: None, rhs: &rhs, domain };
    let (times, states) = ode.solve(x0, span.0, span.1, ctl)?;
    let inputs: Vec<Vector> = times.iter().map(|t| u.at(*t)).collect();
    let outputs = states.iter().zip(&inputs).map(|(x, u)| h(x, u)).collect();
    Ok(Trajectory::new(times, states, inputs, outputs)?)
}

fn simulate(model: &Model, ctx: &mut Ctx) -> CliResult<Outcome> {
    let (traj, x0, desc, storage): (Trajectory, Vector, Value, Option<(ScalarField, &str)>) = match &model.system {
        ModelSystem::Linear(lm) => {
            let (x0, u, desc, span, ctl) = run_setup(ctx, &lm.domain, &lm.input_domain);
            let s = &lm.sys;
            let traj = integrate(&|x, u| s.vector_field(x, u), &|x, u| s.output(x, u), None, &x0, &u, span, &ctl)?;
            (traj, x0, desc, None)
        }
        ModelSystem::Nonlinear { system, .. } => {
            let (x0, u, desc, span, ctl) = run_setup(ctx, system.domain(), system.input_domain());
            let traj = integrate(
                &|x, u| system.vector_field(x, u),
                &|x, u| system.output_map(x) + system.feedthrough(x) * u,
                Some(system.domain()),
                &x0,
                &u,
                span,
                &ctl,
            )?;
            (traj, x0, desc, None)
        }
        ModelSystem::HessianPseudoGradient { system, storage } => {
            let (x0, u, desc, span, ctl) = run_setup(ctx, system.domain(), &system.input_domain());
            let traj = simulate_hessian_pseudo_gradient(system, &x0, &u, span, &ctl)?;
            (traj, x0, desc, storage.clone().map(|s| (s, "model")))
        }
        ModelSystem::PortHamiltonian { system, .. } => {
            let (z0, u, desc, span, ctl) = run_setup(ctx, system.domain(), &system.input_domain);
            let traj = simulate_port_hamiltonian(system, &z0, &u, span, &ctl)?;
            (traj, z0, desc, Some((system.h.clone(), "Hamiltonian")))
        }
    };
    let mut result = trajectory_summary(&traj, &x0, desc);
    let (traj, passed) = match storage {
        Some((s, source)) => {
            let traj = traj.with_storage(&s);
            let rep = dissipation_monitor(&traj, &s, ctx.tol("dissipation"));
            result["storage_source"] = Value::from(source);
            result["dissipation"] = to_value(&rep);
            (traj, rep.passive_along)
        }
        None => {
            result["storage_source"] = Value::Null;
            (traj, true)
        }
    };
    Ok(Outcome::new(passed, result).with_file("trajectory.csv", traj.to_csv()))
}

fn certify(model: &Model, ctx: &Ctx) -> CliResult<Outcome> {
    let (sys, form) = hessian_system(model, "certify-relaxation")?;
    let cert = match certify_relaxation(&sys, &[], ctx.tol("relaxation")) {
        Ok(c) => c,
        // A generator that is not convex rules out a relaxation system.
        Err(Error::NotPositiveDefinite(min_eig)) => {
            return Ok(Outcome::new(
                false,
                json!({
                    "relaxation": false,
                    "form": form,
                    "min_metric_eig": min_eig,
                    "reason": "the metric generator is not convex on the state box",
                }),
            ))
        }
        Err(e) => return Err(e.into()),
    };
    let mut result = to_value(&cert.report);
    result["form"] = Value::from(form);
    let mut out = Outcome::new(cert.report.relaxation, result);
    if cert.report.relaxation {
        let n = sys.nx();
        let mut headers: Vec<String> = (1..=n).map(|i| format!("x_{i}")).collect();
        headers.push("S".into());
        let rows: Vec<Vec<f64>> = sys
            .domain()
            .low_discrepancy(DEFAULT_SAMPLES)
            .iter()
            .map(|x| x.iter().copied().chain([cert.storage.value(x)]).collect())
            .collect();
        out = out.with_file("storage.csv", csv_table(&headers, &rows));
    }
    Ok(out)
}

fn convert_ph(model: &Model, ctx: &Ctx) -> CliResult<Outcome> {
    match &model.system {
        ModelSystem::Linear(lm) => {
            let (g, _) = linear_metric(lm)?;
            let (q0, _) = initial_storage(lm, Some(&g), ctx.opts.q0);
            let storage = compatible_storage_fixed_point(&lm.sys, &g, &lm.sigma, &q0, &compatibility_options(ctx))?;
            let pg = to_pseudo_gradient(&lm.sys, &g, &lm.sigma, ctx.tol("reciprocity"))?;
            let split = split_port_hamiltonian_form(&pg, &storage.q, ctx.tol("split"))?;
            let passed = split.j_skew_residual <= ctx.tol("split") && split.r_min_eigenvalue >= -ctx.tol("split");
            let mut result = to_value(&split);
            for (key, m) in [
                ("j", &split.j),
                ("r", &split.r),
                ("to_energy", &split.to_energy),
                ("from_energy", &split.from_energy),
                ("q", &storage.q),
            ] {
                result[key] = matrix_json(m);
            }
            Ok(Outcome::new(passed, result)
                .with_file("j.csv", matrix_csv(&split.j))
                .with_file("r.csv", matrix_csv(&split.r))
                .with_file("to_energy.csv", matrix_csv(&split.to_energy)))
        }
        ModelSystem::PortHamiltonian { system, .. } => {
            let conversion = convert(model, "convert-ph")?;
            let passed = conversion.report.assumptions.iter().all(|a| a.passed);
            let result = json!({
                "conversion": conversion.report,
                "structure": system.verify(&system.domain().low_discrepancy(DEFAULT_SAMPLES))?,
                "coenergy_dimension": conversion.system.nx(),
            });
            Ok(Outcome::new(passed, result).with_file("coordinates.csv", coordinates_csv(system)))
        }
        _ => Err(unsupported("convert-ph", model, "a linear model or a port_hamiltonian model with split data")),
    }
}

/// Energy samples `z` next to their co-energy images `x = ∇H(z)`.
fn coordinates_csv(sys: &PortHamiltonianSystem) -> String {
    let n = sys.nz();
    let mut headers: Vec<String> = (1..=n).map(|i| format!("z_{i}")).collect();
    headers.extend((1..=n).map(|i| format!("x_{i}")));
    let rows: Vec<Vec<f64>> = sys
        .domain()
        .low_discrepancy(50)
        .iter()
        .map(|z| z.iter().copied().chain(sys.h.gradient(z).iter().copied()).collect())
        .collect();
    csv_table(&headers, &rows)
}
