use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recipkit::models::spec::rows_from_matrix;
use recipkit::report::{csv_table, to_json, write_atomic};
use recipkit::{BoxDomain, Error, Matrix, Signal, Vector};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Status {
    Ok = 0,
    CheckFailed = 1,
    InputError = 2,
    NumericalFailure = 3,
}

#[derive(Debug)]
pub struct Failure {
    pub status: Status,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self { status: Status::InputError, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self { status: classify(&e), message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// Exit status for a library error: malformed or inadmissible input is 2,
/// a failed structural check is 1, solver trouble is 3.
pub fn classify(e: &Error) -> Status {
    match e {
        Error::Dimension(_)
        | Error::NotSquare { .. }
        | Error::NotSymmetric { .. }
        | Error::InvalidSignature(_)
        | Error::InvalidDomain(_)
        | Error::NotHurwitz { .. }
        | Error::Unsupported(_)
        | Error::Input(_) => Status::InputError,
        Error::NotReciprocal { .. }
        | Error::LmiViolated { .. }
        | Error::Incompatible(_)
        | Error::SignCondition(_)
        | Error::NotHessian { .. }
        | Error::CheckFailed(_)
        | Error::Assumption { .. } => Status::CheckFailed,
        Error::OutsideDomain { .. }
        | Error::Singular { .. }
        | Error::DegenerateMetric { .. }
        | Error::RankDeficient(_)
        | Error::TailBound { .. }
        | Error::NoConvergence { .. }
        | Error::NotPositiveDefinite(_)
        | Error::Newton(_)
        | Error::LeftDomain { .. } => Status::NumericalFailure,
    }
}

/// Effective tolerances of one command: its defaults overlaid with the
/// `--tol` overrides. Unknown keys and nonpositive values are input errors.
pub fn tolerances(defaults: &[(&str, f64)], given: &[String]) -> CliResult<BTreeMap<String, f64>> {
    let mut out: BTreeMap<String, f64> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for item in given {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Failure::input(format!("--tol expects KEY=VALUE, got {item:?}")))?;
        let key = key.trim();
        let slot = out.get_mut(key).ok_or_else(|| {
            let known: Vec<&str> = defaults.iter().map(|(k, _)| *k).collect();
            Failure::input(format!("unknown tolerance {key:?}; this command accepts {known:?}"))
        })?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("tolerance {key} is not a number: {value:?}")))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Failure::input(format!("tolerance {key} must be positive and finite, got {v}")));
        }
        *slot = v;
    }
    Ok(out)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform points in `domain` shrunk about its center by `factor`.
pub fn random_points(rng: &mut ChaCha8Rng, domain: &BoxDomain, factor: f64, count: usize) -> Vec<Vector> {
    let inner = domain.shrink(factor);
    (0..count)
        .map(|_| {
            Vector::from_iterator(
                inner.dim(),
                inner.lower().iter().zip(inner.upper()).map(|(l, u)| rng.random_range(*l..=*u)),
            )
        })
        .collect()
}

/// `u_j(t) = c_j + a_j sin(ω_j t)` with seeded amplitudes inside half the
/// input box and frequencies in `[0.5, 2]`.
pub fn random_input(rng: &mut ChaCha8Rng, input_domain: &BoxDomain) -> (Signal, Value) {
    let m = input_domain.dim();
    let center = input_domain.center();
    let half: Vec<f64> = input_domain.widths().iter().map(|w| 0.25 * w).collect();
    let amp: Vec<f64> = half.iter().map(|h| rng.random_range(-*h..=*h)).collect();
    let freq: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..=2.0)).collect();
    let description = serde_json::json!({
        "form": "u_j(t) = center_j + amplitude_j sin(frequency_j t)",
        "center": center.iter().copied().collect::<Vec<f64>>(),
        "amplitude": amp,
        "frequency": freq,
    });
    let signal = Signal::new(m, move |t| {
        Vector::from_iterator(m, (0..m).map(|j| center[j] + amp[j] * (freq[j] * t).sin()))
    });
    (signal, description)
}

pub fn matrix_json(m: &Matrix) -> Value {
    serde_json::to_value(rows_from_matrix(m)).expect("finite rows serialize")
}

pub fn vector_json(v: &Vector) -> Value {
    Value::from(v.iter().copied().collect::<Vec<f64>>())
}

pub fn matrix_csv(m: &Matrix) -> String {
    let headers: Vec<String> = (1..=m.ncols()).map(|j| format!("col_{j}")).collect();
    csv_table(&headers, &rows_from_matrix(m))
}

pub fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("reports serialize to JSON")
}

/// Prints the report and, with an output directory, writes it together
/// with the data files. Every file is written atomically.
pub fn emit(out: Option<&Path>, report: &Value, files: &[(String, String)]) -> CliResult<()> {
    let text = to_json(report).map_err(|e| Failure { status: Status::NumericalFailure, message: e.to_string() })?;
    print!("{text}");
    if let Some(dir) = out {
        let io = |e: std::io::Error| Failure::input(format!("cannot write to {}: {e}", dir.display()));
        fs::create_dir_all(dir).map_err(io)?;
        write_atomic(&dir.join("report.json"), text.as_bytes()).map_err(io)?;
        for (name, contents) in files {
            write_atomic(&dir.join(name), contents.as_bytes()).map_err(io)?;
        }
    }
    Ok(())
}
