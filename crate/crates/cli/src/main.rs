use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod support;

#[derive(Parser, Debug)]
#[command(name = "recipkit", version, about = "Reciprocity, passivity and relaxation checks for dynamical systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: RunOptions,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Test the reciprocity identities of a system.
    CheckReciprocity,
    /// Check the dissipation inequality for a storage function.
    CheckPassivity,
    /// Iterate to the storage matrix compatible with the metric.
    CompatibleQ,
    /// Recover the metric of a stable linear system from input-output data.
    RecoverG,
    /// Legendre transform of the metric generator, with identity checks.
    Legendre,
    /// Christoffel symbols of the Hessian metric and a flatness test.
    Christoffel,
    /// Compare the variational system with its dual along a nominal trajectory.
    VariationalTest,
    /// Integrate the system from a seeded initial state and input.
    Simulate,
    /// Certify a Hessian pseudo-gradient system as a relaxation system.
    CertifyRelaxation,
    /// Split port-Hamiltonian form of a linear system, or the co-energy form of a split port-Hamiltonian model.
    ConvertPh,
    /// List the registered models.
    ListModels,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckReciprocity => "check-reciprocity",
            Command::CheckPassivity => "check-passivity",
            Command::CompatibleQ => "compatible-q",
            Command::RecoverG => "recover-g",
            Command::Legendre => "legendre",
            Command::Christoffel => "christoffel",
            Command::VariationalTest => "variational-test",
            Command::Simulate => "simulate",
            Command::CertifyRelaxation => "certify-relaxation",
            Command::ConvertPh => "convert-ph",
            Command::ListModels => "list-models",
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct RunOptions {
    /// Registered model name.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// JSON model description; with --model, selects that model from the file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Directory for report.json and CSV files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Tolerance override, e.g. --tol reciprocity=1e-8. Repeatable.
    #[arg(long = "tol", value_name = "KEY=VALUE", global = true)]
    pub tols: Vec<String>,
    /// Seed for initial states, inputs and extra sample points.
    #[arg(long, default_value_t = 0, global = true)]
    pub seed: u64,
    /// Simulation horizon, or the Hankel truncation horizon for recover-g.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    /// Integrator step.
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Initial storage matrix for compatible-q, check-passivity and convert-ph.
    #[arg(long, value_enum, global = true)]
    pub q0: Option<Q0>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Q0 {
    Identity,
    /// The model's own `q0`, else the metric when it is positive definite.
    Model,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::ListModels => commands::list_models(),
        cmd => commands::run(cmd, &cli.opts),
    };
    match result {
        Ok(status) => ExitCode::from(status as u8),
        Err(failure) => {
            eprintln!("recipkit: {}", failure.message);
            ExitCode::from(failure.status as u8)
        }
    }
}
