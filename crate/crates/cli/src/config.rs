//! Experiment configuration: JSON schema and validation into core types.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use scarlab_core::classical::{ClassicalMap, SubmanifoldSpec};
use scarlab_core::lattice::{check_invariant_isotropic, is_hyperbolic, validate_symplectic, FixedPoint, IntMatrix, SymplecticMatrix, HYPERBOLIC_TOL};
use scarlab_core::quantum::HilbertSpace;
use scarlab_core::scarring::character_admissible;
use scarlab_core::trig::TrigPolynomial;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub freq: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianConfig {
    pub terms: Vec<Term>,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableConfig {
    pub label: String,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rank: f64,
    pub unitary: f64,
    pub egorov: f64,
    pub truncation: f64,
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension_d: usize,
    pub matrix_A: Vec<Vec<i64>>,
    pub lambda_basis: Vec<Vec<i64>>,
    pub xi_numerator: Vec<i64>,
    pub xi_denominator: i64,
    pub hamiltonian: HamiltonianConfig,
    pub observables: Vec<ObservableConfig>,
    pub N_values: Vec<usize>,
    pub time_average_T: usize,
    #[serde(default = "default_cutoff")]
    pub frequency_cutoff_M: f64,
    pub grid_points_per_axis: usize,
    pub tolerances: Tolerances,
    pub output_dir: String,
}

fn default_cutoff() -> f64 {
    2.0
}

/// A checked configuration with the derived mathematical objects.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub config: ExperimentConfig,
    /// SHA-256 of the configuration file bytes, lowercase hex.
    pub digest: String,
    pub a: SymplecticMatrix,
    pub spec: Option<SubmanifoldSpec>,
    /// `ε · Σ terms`.
    pub h: TrigPolynomial,
    pub observables: Vec<(String, TrigPolynomial)>,
    /// `N_values` without the values rejected for the fixed point.
    pub n_values: Vec<usize>,
    pub warnings: Vec<String>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{field}: {msg}"))
}

fn polynomial(field: &str, d: usize, terms: &[Term], scale: f64) -> Result<TrigPolynomial, CliError> {
    TrigPolynomial::from_terms(
        d,
        terms.iter().map(|t| (t.freq.clone(), Complex64::new(t.re * scale, t.im * scale))),
    )
    .map_err(|e| invalid(field, e))
}

pub fn load(path: &Path) -> Result<Experiment, CliError> {
    let bytes = std::fs::read(path).map_err(|e| invalid("config", format!("cannot read {}: {e}", path.display())))?;
    let config: ExperimentConfig =
        serde_json::from_slice(&bytes).map_err(|e| invalid("config", format!("parse error: {e}")))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    validate(config, digest)
}

pub fn validate(config: ExperimentConfig, digest: String) -> Result<Experiment, CliError> {
    let d = config.dimension_d;
    if d == 0 {
        return Err(invalid("dimension_d", "must be positive"));
    }
    let rows = &config.matrix_A;
    if rows.len() != 2 * d || rows.iter().any(|r| r.len() != 2 * d) {
        return Err(invalid("matrix_A", format!("must be {0}x{0}", 2 * d)));
    }
    let a = IntMatrix::from_rows(rows, 2 * d)
        .and_then(|m| validate_symplectic(&m))
        .map_err(|e| invalid("matrix_A", e))?;
    let mut warnings = Vec::new();
    if !is_hyperbolic(&a, HYPERBOLIC_TOL).hyperbolic {
        warnings.push("matrix_A is not hyperbolic".to_string());
    }
    if config.xi_numerator.len() != 2 * d {
        return Err(invalid("xi_numerator", format!("must have {} entries", 2 * d)));
    }
    let xi = FixedPoint::new(&a, &config.xi_numerator, config.xi_denominator).map_err(|e| invalid("xi_numerator", e))?;
    let spec = if config.lambda_basis.is_empty() {
        None
    } else {
        if config.lambda_basis.iter().any(|r| r.len() != 2 * d) {
            return Err(invalid("lambda_basis", format!("rows must have {} entries", 2 * d)));
        }
        let basis = IntMatrix::from_rows(&config.lambda_basis, 2 * d).map_err(|e| invalid("lambda_basis", e))?;
        let lattice = check_invariant_isotropic(&a, &basis).map_err(|e| invalid("lambda_basis", e))?;
        Some(SubmanifoldSpec::new(lattice, xi).map_err(|e| invalid("lambda_basis", e))?)
    };
    let h = polynomial("hamiltonian", d, &config.hamiltonian.terms, config.hamiltonian.epsilon)?;
    h.require_real(1e-12).map_err(|e| invalid("hamiltonian", e))?;
    let map = ClassicalMap::new(a.clone(), h.clone()).map_err(|e| invalid("hamiltonian", e))?;
    if let Some(spec) = &spec {
        map.check_lattice(&spec.lattice)
            .map_err(|e| invalid("hamiltonian", format!("H not supported in Λ^⊥ ({e})")))?;
    }
    if config.observables.is_empty() {
        return Err(invalid("observables", "at least one observable is required"));
    }
    let mut observables = Vec::new();
    for (i, o) in config.observables.iter().enumerate() {
        if observables.iter().any(|(l, _)| l == &o.label) {
            return Err(invalid(&format!("observables[{i}].label"), format!("duplicate label {}", o.label)));
        }
        observables.push((o.label.clone(), polynomial(&format!("observables[{i}]"), d, &o.terms, 1.0)?));
    }
    if config.N_values.is_empty() || config.N_values.iter().any(|&n| n < 2) {
        return Err(invalid("N_values", "must be a non-empty list of integers ≥ 2"));
    }
    let tol = &config.tolerances;
    for (name, v) in [("rank", tol.rank), ("unitary", tol.unitary), ("egorov", tol.egorov), ("truncation", tol.truncation)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(invalid(&format!("tolerances.{name}"), "must be positive and finite"));
        }
    }
    if !(config.frequency_cutoff_M >= 0.0 && config.frequency_cutoff_M.is_finite()) {
        return Err(invalid("frequency_cutoff_M", "must be non-negative"));
    }
    if config.grid_points_per_axis < 4 {
        return Err(invalid("grid_points_per_axis", "must be at least 4"));
    }
    let mut n_values = Vec::new();
    for &n in &config.N_values {
        if let Some(spec) = &spec {
            let space = HilbertSpace::new(n, d).map_err(|e| invalid("N_values", e))?;
            let adm = character_admissible(space, spec);
            if !adm.admissible {
                warnings.push(format!("N={n} skipped: character not admissible ({})", adm.diagnosis.join("; ")));
                continue;
            }
        }
        n_values.push(n);
    }
    Ok(Experiment {
        config,
        digest,
        a,
        spec,
        h,
        observables,
        n_values,
        warnings,
    })
}

impl Experiment {
    pub fn require_spec(&self) -> Result<&SubmanifoldSpec, CliError> {
        self.spec
            .as_ref()
            .ok_or_else(|| invalid("lambda_basis", "this subcommand needs a non-trivial invariant lattice"))
    }
}
