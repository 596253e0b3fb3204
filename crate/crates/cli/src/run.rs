//! Subcommand runners. Per-N work runs on a thread pool; results are merged
//! in `N` order and the manifest is written last.

use std::path::PathBuf;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use scarlab_core::classical::{time_average_l2_sq_mc, ClassicalMap};
use scarlab_core::egorov;
use scarlab_core::linalg;
use scarlab_core::propagator::{quantize_linear, quantize_perturbed};
use scarlab_core::quantum::{self, HilbertSpace};
use scarlab_core::scarring::{self, build_scar_subspace, RestrictedPropagator, ScarSubspace};
use scarlab_core::Error;

use crate::config::Experiment;
use crate::output::{self, freq_label, num, Manifest, Residual, Stage, Table};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Validate,
    Scar,
    Variance,
    Average,
    Egorov,
    Product,
    Spectrum,
    ClassicalCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Scar => "scar",
            Command::Variance => "variance",
            Command::Average => "average",
            Command::Egorov => "egorov",
            Command::Product => "product",
            Command::Spectrum => "spectrum",
            Command::ClassicalCheck => "classical-check",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub only_n: Option<usize>,
    pub threads: Option<usize>,
}

/// Largest full-space dimension for dense operators.
pub const DENSE_DIM_LIMIT: usize = 4096;
/// Largest full-space dimension for the dense cross-check of the fast path.
pub const CROSS_CHECK_DIM: usize = 512;
pub const AVERAGE_TOL: f64 = 1e-10;
pub const MC_SAMPLES: usize = 1000;
pub const CLASSICAL_SAMPLES: usize = 64;

/// Output of one `N`.
#[derive(Default)]
struct Slice {
    tables: Vec<Vec<Vec<String>>>,
    residuals: Vec<Residual>,
    warnings: Vec<String>,
    failures: Vec<String>,
    /// `(series, N, value)` for `plot_long.csv` and fitted summaries.
    series: Vec<(String, usize, f64)>,
    skipped: bool,
}

impl Slice {
    fn new(tables: usize) -> Self {
        Self {
            tables: vec![Vec::new(); tables],
            ..Default::default()
        }
    }

    fn point(&mut self, series: String, n: usize, value: f64) {
        self.series.push((series, n, value));
    }

    fn residual(&mut self, n: usize, name: &str, value: f64, limit: Option<f64>) {
        if let Some(limit) = limit {
            if !(value <= limit) {
                self.failures.push(format!("N={n}: {name} = {value:e} exceeds {limit:e}"));
            }
        }
        self.residuals.push(Residual {
            n,
            name: name.to_string(),
            value,
        });
    }
}

struct Runner<'a> {
    exp: &'a Experiment,
    manifest: Manifest,
    ns: Vec<usize>,
    pool: rayon::ThreadPool,
    series: Vec<(String, usize, f64)>,
}

impl<'a> Runner<'a> {
    fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let start = Instant::now();
        let out = f(self);
        self.manifest.stages.push(Stage {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    /// Runs `work` for every `N` in parallel and merges in order.
    fn sweep<F>(&mut self, tables: &mut [Table], work: F) -> Result<Vec<usize>, CliError>
    where
        F: Fn(usize, &mut Slice) -> Result<(), CliError> + Sync,
    {
        let count = tables.len();
        let ns = self.ns.clone();
        let results: Vec<Result<Slice, CliError>> = self.pool.install(|| {
            ns.par_iter()
                .map(|&n| {
                    let mut s = Slice::new(count);
                    work(n, &mut s)?;
                    Ok(s)
                })
                .collect()
        });
        let mut done = Vec::new();
        for (n, r) in ns.iter().zip(results) {
            let s = r?;
            for (t, rows) in tables.iter_mut().zip(s.tables) {
                t.rows.extend(rows);
            }
            self.manifest.residuals.extend(s.residuals);
            self.manifest.warnings.extend(s.warnings);
            self.manifest.tolerance_failures.extend(s.failures);
            self.series.extend(s.series);
            if !s.skipped {
                done.push(*n);
            }
        }
        Ok(done)
    }
}

/// Restricted propagator for one `N`, or `None` with a warning when the
/// linear part has no quantization at this `N`.
fn prepare(exp: &Experiment, n: usize, slice: &mut Slice) -> Result<Option<(ScarSubspace, RestrictedPropagator)>, CliError> {
    let spec = exp.require_spec()?;
    let tol = &exp.config.tolerances;
    let space = HilbertSpace::new(n, exp.config.dimension_d)?;
    let lin = match quantize_linear(&exp.a, space, tol.egorov) {
        Ok(l) => l,
        Err(Error::ParityObstruction { detail, .. }) => {
            slice.warnings.push(format!("N={n} skipped: no quantization of matrix_A ({detail})"));
            slice.skipped = true;
            return Ok(None);
        }
        Err(e) => return Err(e.into()),
    };
    let sub = build_scar_subspace(space, spec)?;
    slice.residual(n, "generator_residual", lin.max_residual(), Some(tol.egorov));
    slice.residual(n, "subspace_eigen_residual", sub.eigen_residual(), Some(tol.rank));
    slice.residual(n, "subspace_orthonormality", sub.orthonormality_defect(), Some(tol.rank));
    let r = scarring::restricted_propagator_fast(&sub, &lin.op, &exp.h)?;
    slice.residual(n, "restricted_unitarity", r.unitarity_defect, Some(tol.unitary));
    slice.residual(n, "invariance_defect", r.invariance_defect, Some(tol.unitary));
    slice.residual(n, "eigen_residual", r.eigen.residual, Some(tol.unitary));
    if space.dim() <= CROSS_CHECK_DIM {
        let bundle = quantize_perturbed(&exp.a, &exp.h, space, tol.egorov)?;
        let full = scarring::restricted_propagator_full(&sub, &bundle.u_total)?;
        slice.residual(n, "fast_vs_full", linalg::max_abs(&(&full.matrix - &r.matrix)), Some(tol.unitary));
    }
    Ok(Some((sub, r)))
}

fn dense_space(exp: &Experiment, n: usize, slice: &mut Slice) -> Result<Option<HilbertSpace>, CliError> {
    let space = HilbertSpace::new(n, exp.config.dimension_d)?;
    if space.dim() > DENSE_DIM_LIMIT {
        slice
            .warnings
            .push(format!("N={n} skipped: dense dimension {} exceeds {DENSE_DIM_LIMIT}", space.dim()));
        slice.skipped = true;
        return Ok(None);
    }
    Ok(Some(space))
}

pub fn run(cmd: Command, exp: &Experiment, opts: &RunOptions) -> Result<Manifest, CliError> {
    let ns: Vec<usize> = match opts.only_n {
        Some(n) => vec![n],
        None => exp.n_values.clone(),
    };
    let out = opts.out.clone().unwrap_or_else(|| PathBuf::from(&exp.config.output_dir));
    std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = opts.threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::Io(e.to_string()))?;
    let mut runner = Runner {
        exp,
        manifest: Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: cmd.name().to_string(),
            config_digest: exp.digest.clone(),
            warnings: exp.warnings.clone(),
            ..Default::default()
        },
        ns,
        pool,
        series: Vec::new(),
    };
    let mut tables = match cmd {
        Command::Validate => validate(&mut runner)?,
        Command::Scar => scar(&mut runner)?,
        Command::Variance => variance(&mut runner)?,
        Command::Average => average(&mut runner)?,
        Command::Egorov => egorov_cmd(&mut runner)?,
        Command::Product => product(&mut runner)?,
        Command::Spectrum => spectrum(&mut runner)?,
        Command::ClassicalCheck => classical_check(&mut runner)?,
    };
    if !runner.series.is_empty() {
        let mut plot = Table::new("plot_long.csv", PLOT_HEADER);
        for (name, n, v) in &runner.series {
            plot.push(vec![name.clone(), n.to_string(), num(*v)]);
        }
        tables.push(plot);
    }
    let mut manifest = runner.manifest;
    for t in tables.iter_mut() {
        manifest.files.push(output::write_table(&out, &exp.digest, t)?);
    }
    output::write_manifest(&out, &manifest)?;
    Ok(manifest)
}

fn validate(r: &mut Runner) -> Result<Vec<Table>, CliError> {
    let exp = r.exp;
    let done = r.stage("quantize", |r| {
        r.sweep(&mut [], |n, s| {
            let space = HilbertSpace::new(n, exp.config.dimension_d)?;
            match quantize_linear(&exp.a, space, exp.config.tolerances.egorov) {
                Ok(l) => s.residual(n, "generator_residual", l.max_residual(), Some(exp.config.tolerances.egorov)),
                Err(Error::ParityObstruction { detail, .. }) => {
                    s.warnings.push(format!("N={n}: no quantization of matrix_A ({detail})"));
                    s.skipped = true;
                }
                Err(e) => return Err(e.into()),
            }
            Ok(())
        })
    })?;
    r.manifest.n_values = done;
    if let Some(spec) = &exp.spec {
        r.manifest.summary.push(("lattice_rank".into(), spec.lattice.rank() as f64));
    }
    Ok(Vec::new())
}

const SPECTRUM_HEADER: &[&str] = &["N", "state_index", "eigenphase"];
const WIGNER_HEADER: &[&str] = &["N", "state_index", "eigenphase", "freq", "re", "im"];

fn observable_frequencies(exp: &Experiment) -> Vec<Vec<i64>> {
    let mut all: Vec<Vec<i64>> = exp.observables.iter().flat_map(|(_, f)| f.terms().map(|(n, _)| n.clone())).collect();
    all.sort();
    all.dedup();
    all
}

fn spectrum(r: &mut Runner) -> Result<Vec<Table>, CliError> {
    let exp = r.exp;
    let freqs = observable_frequencies(exp);
    let mut tables = [Table::new("spectrum.csv", SPECTRUM_HEADER), Table::new("wigner.csv", WIGNER_HEADER)];
    let done = r.stage("spectrum", |r| {
        r.sweep(&mut tables, |n, s| {
            if exp.spec.is_some() {
                let Some((sub, rp)) = prepare(exp, n, s)? else { return Ok(()) };
                for (i, p) in rp.eigen.phases.iter().enumerate() {
                    s.tables[0].push(vec![n.to_string(), i.to_string(), num(*p)]);
                }
                for row in scarring::wigner_table(&sub, &rp.eigen, &freqs) {
                    s.tables[1].push(wigner_row(n, row.state_index, row.eigenphase, &row.freq, row.value));
                }
                return Ok(());
            }
            let Some(space) = dense_space(exp, n, s)? else { return Ok(()) };
            let bundle = match quantize_perturbed(&exp.a, &exp.h, space, exp.config.tolerances.egorov) {
                Ok(b) => b,
                Err(Error::ParityObstruction { detail, .. }) => {
                    s.warnings.push(format!("N={n} skipped: no quantization of matrix_A ({detail})"));
                    s.skipped = true;
                    return Ok(());
                }
                Err(e) => return Err(e.into()),
            };
            s.residual(n, "unitarity_total", bundle.validation.unitarity_total, Some(exp.config.tolerances.unitary));
            let eig = linalg::unitary_eigen(&bundle.u_total)?;
            s.residual(n, "eigen_residual", eig.residual, Some(exp.config.tolerances.unitary));
            let scale = (space.dim() as f64).sqrt();
            for (i, p) in eig.phases.iter().enumerate() {
                s.tables[0].push(vec![n.to_string(), i.to_string(), num(*p)]);
                let psi: Vec<_> = eig.vectors.column(i).iter().map(|v| v * scale).collect();
                for f in &freqs {
                    let w = quantum::wigner_coefficient(space, f, &psi)?;
                    s.tables[1].push(wigner_row(n, i, *p, f, w));
                }
            }
            Ok(())
        })
    })?;
    r.manifest.n_values = done;
    Ok(tables.into())
}

fn wigner_row(n: usize, i: usize, phase: f64, f: &[i64], w: num_complex::Complex64) -> Vec<String> {
    vec![n.to_string(), i.to_string(), num(phase), freq_label(f), num(w.re), num(w.im)]
}

const SCAR_HEADER: &[&str] = &["N", "observable", "max_abs", "mean_abs", "cf_over_n_bound"];
const PLOT_HEADER: &[&str] = &["series", "N", "value"];

fn scar(r: &mut Runner) -> Result<Vec<Table>, CliError> {
    let exp = r.exp;
    let spec = exp.require_spec()?;
    let mut constants = Vec::new();
    for (label, f) in &exp.observables {
        let c = scarring::scarring_constant(f, spec)
            .map_err(|e| CliError::Validation(format!("observable {label}: {e}")))?;
        constants.push(c);
    }
    let mut tables = [Table::new("scarring.csv", SCAR_HEADER)];
    let done = r.stage("scarring", |r| {
        r.sweep(&mut tables, |n, s| {
            let Some((sub, rp)) = prepare(exp, n, s)? else { return Ok(()) };
            for ((label, f), &c) in exp.observables.iter().zip(&constants) {
                let p = scarring::scarring_point(&sub, &rp.eigen, f, c);
                s.tables[0].push(vec![n.to_string(), label.clone(), num(p.max_abs), num(p.mean_abs), num(p.bound)]);
                s.point(format!("max_abs:{label}"), n, p.max_abs);
                s.point(format!("bound:{label}"), n, p.bound);
            }
            Ok(())
        })
    })?;
    r.manifest.n_values = done;
    for ((label, f), &c) in exp.observables.iter().zip(&constants) {
        let points: Vec<scarring::ScarringPoint> = series_values(&r.series, &format!("max_abs:{label}"))
            .into_iter()
            .map(|(n, max_abs)| scarring::ScarringPoint {
                n,
                max_abs,
                mean_abs: f64::NAN,
                bound: c / n as f64,
            })
            .collect();
        let sweep = scarring::summarize_scarring(f, c, points)?;
        r.manifest.summary.push((format!("c_f:{label}"), c));
        r.manifest.summary.push((format!("slope:{label}"), sweep.slope));
        if !sweep.bound_holds {
            r.manifest
                .tolerance_failures
                .push(format!("observable {label}: max |W| exceeds C_f/N"));
        }
    }
    Ok(tables.into())
}

fn series_values(series: &[(String, usize, f64)], name: &str) -> Vec<(usize, f64)> {
    series.iter().filter(|(s, _, _)| s == name).map(|(_, n, v)| (*n, *v)).collect()
}

/// Log-log slope of a series, `NaN` when undefined.
fn series_slope(series: &[(String, usize, f64)], name: &str) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) = series_values(series, name).into_iter().map(|(n, v)| (n as f64, v)).unzip();
    if xs.len() < 2 || ys.iter().any(|&y| !(y > 0.0)) {
        return f64::NAN;
    }
    linalg::log_log_slope(&xs, &ys).unwrap_or(f64::NAN)
}

const VARIANCE_HEADER: &[&str] = &["N", "observable", "sigma2", "ft_l2_bound", "density_fraction", "M"];

fn variance(r: &mut Runner) -> Result<Vec<Table>, CliError> {
    let exp = r.exp;
    let spec = exp.require_spec()?;
    let cutoff = exp.config.frequency_cutoff_M;
    let ft = r.stage("time_average", |_| -> Result<Vec<f64>, CliError> {
        let map = ClassicalMap::new(exp.a.clone(), exp.h.clone())?;
        exp.observables
            .iter()
            .enumerate()
            .map(|(k, (_, f))| {
                let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
                let (mean, _) = time_average_l2_sq_mc(f, &map, spec, exp.config.time_average_T, MC_SAMPLES, &mut rng)?;
                Ok(mean)
            })
            .collect()
    })?;
    let mut tables = [Table::new("variance.csv", VARIANCE_HEADER)];
    let done = r.stage("variance", |r| {
        r.sweep(&mut tables, |n, s| {
            let Some((sub, rp)) = prepare(exp, n, s)? else { return Ok(()) };
            let density = scarring::density_one_report(&sub, &rp.eigen, spec, cutoff);
            if density.fraction > density.bound {
                s.failures.push(format!(
                    "N={n}: exceptional fraction {} exceeds Chebyshev bound {}",
                    density.fraction, density.bound
                ));
            }
            s.point("density_fraction".into(), n, density.fraction);
            s.point("density_bound".into(), n, density.bound);
            for ((label, f), bound) in exp.observables.iter().zip(&ft) {
                let sigma2 = scarring::quantum_variance(&sub, &rp.eigen, spec, f);
                s.tables[0].push(vec![
                    n.to_string(),
                    label.clone(),
                    num(sigma2),
                    num(*bound),
                    num(density.fraction),
                    num(cutoff),
                ]);
                s.point(format!("sigma2:{label}"), n, sigma2);
            }
            Ok(())
        })
    })?;
    r.manifest.n_values = done;
    for (label, _) in &exp.observables {
        let slope = series_slope(&r.series, &format!("sigma2:{label}"));
        r.manifest.summary.push((format!("slope:{label}"), slope));
    }
    Ok(tables.into())
}

const AVERAGE_HEADER: &[&str] = &["N", "freq", "avg_re", "avg_im", "exact_re", "exact_im", "resonant_flag"];

/// All frequencies with `‖n‖∞ ≤ radius`, in lexicographic order.
fn box_frequencies(d: usize, radius: i64) -> Vec<Vec<i64>> {
    let width = (2 * radius + 1) as usize;
    (0..width.pow(2 * d as u32))
        .map(|code| {
            let mut c = code;
            let mut v = vec![0i64; 2 * d];
            for slot in v.iter_mut().rev() {
                *slot = (c % width) as i64 - radius;
                c /= width;
            }
            v
        })
        .collect()
}

fn average(r: &mut Runner) -> Result<Vec<Table>, CliError> {
    let exp = r.exp;
    let spec = exp.require_spec()?;
    let perp = scarlab_core::lattice::lambda_perp(&spec.lattice)?;
    let freqs = box_frequencies(exp.config.dimension_d, exp.config.frequency_cutoff_M.floor() as i64);
    let mut tables = [Table::new("average.csv", AVERAGE_HEADER)];
    let done = r.stage("average", |r| {
        r.sweep(&mut tables, |n, s| {
            let space = HilbertSpace::new(n, exp.config.dimension_d)?;
            let sub = build_scar_subspace(space, spec)?;
            let mut worst: f64 = 0.0;
            let mut resonant = Vec::new();
            for f in &freqs {
                let a = scarring::average_wigner_with(&sub, spec, &perp, f)?;
                if a.resonant {
                    resonant.push(freq_label(f));
                } else {
                    worst = worst.max((a.average - a.exact).norm());
                }
                s.tables[0].push(vec![
                    n.to_string(),
                    freq_label(f),
                    num(a.average.re),
                    num(a.average.im),
                    num(a.exact.re),
                    num(a.exact.im),
                    u8::from(a.resonant).to_string(),
                ]);
            }
            if !resonant.is_empty() {
                s.warnings.push(format!("N={n}: resonant frequencies excluded: {}", resonant.join(" ")));
            }
            s.residual(n, "average_deviation", worst, Some(AVERAGE_TOL));
            Ok(())
        })
    })?;
    r.manifest.n_values = done;
    Ok(tables.into())
}

const EGOROV_HEADER: &[&str] = &["N", "t", "residual", "bound"];
const EGOROV_TIME: f64 = 1.0;
const DERIVATIVE_STEP: f64 = 1e-4;

fn egorov_cmd(r: &mut Runner) -> Result<Vec<Table>, CliError> {
    let exp = r.exp;
    let (_, f) = &exp.observables[0];
    let g = &exp.h;
    let grid = exp.config.grid_points_per_axis;
    let trunc = exp.config.tolerances.truncation;
    let (constants, pushed) = r.stage("pushforward", |_| -> Result<_, CliError> {
        let c = egorov::egorov_constants(f, g, EGOROV_TIME, grid, trunc)?;
        let p = scarlab_core::classical::flow_pushforward(f, g, EGOROV_TIME, grid, trunc)?;
        Ok((c, p.poly))
    })?;
    r.manifest.summary.push(("c_fg_t".into(), constants.c_fg_t));
    let mut tables = [Table::new("egorov.csv", EGOROV_HEADER)];
    let done = r.stage("egorov", |r| {
        r.sweep(&mut tables, |n, s| {
            let Some(space) = dense_space(exp, n, s)? else { return Ok(()) };
            let row = egorov::egorov_row(f, g, &pushed, EGOROV_TIME, n, &constants)?;
            if row.residual > row.bound {
                s.failures.push(format!("N={n}: Egorov residual {} exceeds bound {}", row.residual, row.bound));
            }
            let check = egorov::derivative_check(g, space, DERIVATIVE_STEP)?;
            s.residual(n, "propagator_derivative", check.error, Some(check.tolerance));
            s.tables[0].push(vec![n.to_string(), num(EGOROV_TIME), num(row.residual), num(row.bound)]);
            s.point("egorov_residual".into(), n, row.residual);
            s.point("egorov_bound".into(), n, row.bound);
            Ok(())
        })
    })?;
    r.manifest.n_values = done;
    let slope = series_slope(&r.series, "egorov_residual");
    r.manifest.summary.push(("slope:egorov_residual".into(), slope));
    Ok(tables.into())
}

const PRODUCT_HEADER: &[&str] = &["N", "f", "g", "defect"];
const EXACT_PRODUCT: f64 = 1e-12;

fn product(r: &mut Runner) -> Result<Vec<Table>, CliError> {
    let exp = r.exp;
    let mut tables = [Table::new("product.csv", PRODUCT_HEADER)];
    let done = r.stage("product", |r| {
        r.sweep(&mut tables, |n, s| {
            let Some(space) = dense_space(exp, n, s)? else { return Ok(()) };
            for (lf, f) in &exp.observables {
                for (lg, g) in &exp.observables {
                    let defect = quantum::product_defect(space, f, g)?;
                    s.tables[0].push(vec![n.to_string(), lf.clone(), lg.clone(), num(defect)]);
                    s.point(format!("product:{lf}*{lg}"), n, defect);
                }
            }
            Ok(())
        })
    })?;
    r.manifest.n_values = done;
    for (lf, _) in &exp.observables {
        for (lg, _) in &exp.observables {
            let name = format!("product:{lf}*{lg}");
            let values = series_values(&r.series, &name);
            if values.iter().all(|&(_, v)| v <= EXACT_PRODUCT) {
                r.manifest.warnings.push(format!("{name}: defect at round-off for every N, no slope fitted"));
                continue;
            }
            let slope = series_slope(&r.series, &name);
            r.manifest.summary.push((format!("slope:{name}"), slope));
        }
    }
    Ok(tables.into())
}

const CLASSICAL_HEADER: &[&str] = &["sample", "membership_defect", "energy_drift", "inverse_error"];
const MEMBERSHIP_TOL: f64 = 1e-8;
const ENERGY_TOL: f64 = 1e-9;

fn torus_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = (a - b).rem_euclid(1.0);
            d.min(1.0 - d)
        })
        .fold(0.0, f64::max)
}

fn classical_check(r: &mut Runner) -> Result<Vec<Table>, CliError> {
    use rand::Rng;
    let exp = r.exp;
    let mut table = Table::new("classical.csv", CLASSICAL_HEADER);
    r.stage("classical", |r| -> Result<(), CliError> {
        let map = ClassicalMap::new(exp.a.clone(), exp.h.clone())?;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (mut worst_m, mut worst_e, mut worst_i) = (0.0f64, 0.0f64, 0.0f64);
        for k in 0..CLASSICAL_SAMPLES {
            let x: Vec<f64> = match &exp.spec {
                Some(spec) => spec.sample(&mut rng),
                None => (0..2 * exp.config.dimension_d).map(|_| rng.gen::<f64>()).collect(),
            };
            let y = map.apply(&x)?;
            let membership = exp.spec.as_ref().map_or(0.0, |spec| spec.membership_defect(&y));
            let flowed = map.flow(&x, 1.0)?;
            let energy = (exp.h.evaluate(&flowed) - exp.h.evaluate(&x)).norm();
            let back = map.apply_inverse(&y)?;
            let inverse = torus_distance(&back, &x);
            worst_m = worst_m.max(membership);
            worst_e = worst_e.max(energy);
            worst_i = worst_i.max(inverse);
            table.push(vec![k.to_string(), num(membership), num(energy), num(inverse)]);
        }
        for (name, v, limit) in [
            ("membership_defect", worst_m, MEMBERSHIP_TOL),
            ("energy_drift", worst_e, ENERGY_TOL),
            ("inverse_error", worst_i, ENERGY_TOL),
        ] {
            r.manifest.summary.push((name.to_string(), v));
            if v > limit {
                r.manifest.tolerance_failures.push(format!("{name} = {v:e} exceeds {limit:e}"));
            }
        }
        Ok(())
    })?;
    Ok(vec![table])
}
