//! Semiclassical error terms: the bracket/commutator gap of the Weyl
//! quantization and the `O(1/N²)` Egorov residual of Hamiltonian propagators.
//!
//! Conventions: `gap(f, g) = Op({g, f}) − [2πiN Op(g), Op(f)]` and
//! `U_N(φ_g^t) = exp(2πiN t Op(g))`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::classical::flow_pushforward;
use crate::error::{Error, Result};
use crate::lattice::omega;
use crate::linalg::{self, CMatrix};
use crate::quantum::{self, HilbertSpace};
use crate::trig::TrigPolynomial;

/// Largest grid used for the sup-norm diagnostic.
const SUP_GRID_POINTS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevConstant {
    /// `Σ_n (4π²‖n‖²)^{d+2} |f̂(n)|`, an upper bound for `‖(−Δ)^{d+2} f‖_∞`.
    pub bound: f64,
    /// `max |(−Δ)^{d+2} f|` over a uniform grid.
    pub grid_estimate: f64,
}

fn laplacian_power(f: &TrigPolynomial) -> Result<TrigPolynomial> {
    let d = f.d();
    TrigPolynomial::from_terms(
        d,
        f.terms().map(|(n, c)| {
            let norm_sq: f64 = n.iter().map(|&x| (x * x) as f64).sum();
            (n.clone(), c * (4.0 * PI * PI * norm_sq).powi(d as i32 + 2))
        }),
    )
}

pub fn sobolev_constant(f: &TrigPolynomial) -> Result<SobolevConstant> {
    let lf = laplacian_power(f)?;
    let bound = lf.l1_norm();
    let dims = 2 * f.d();
    let per_axis = ((SUP_GRID_POINTS as f64).powf(1.0 / dims as f64).floor() as usize).clamp(2, 64);
    let total = per_axis.pow(dims as u32);
    let mut grid_estimate: f64 = 0.0;
    let mut x = vec![0.0; dims];
    for code in 0..total {
        let mut c = code;
        for slot in x.iter_mut() {
            *slot = (c % per_axis) as f64 / per_axis as f64;
            c /= per_axis;
        }
        grid_estimate = grid_estimate.max(lf.evaluate(&x).norm());
    }
    Ok(SobolevConstant { bound, grid_estimate })
}

/// Box half-width of the explicit part of the lattice sum.
pub const LATTICE_SUM_CUTOFF: i64 = 50;

/// `C = (Σ_{n ∈ Z^{2d}∖0} (2π‖n‖)^{−(2d+1)})²`: the sum over `‖n‖∞ ≤ 50`
/// plus the integral of the summand outside the inscribed ball, which
/// dominates the remaining lattice points.
pub fn lattice_constant(d: usize) -> f64 {
    let k = 2 * d;
    let l = LATTICE_SUM_CUTOFF;
    // counts[r] = #{n ∈ [−L, L]^j : ‖n‖² = r}, built one coordinate at a time
    let mut counts = vec![1u64];
    for _ in 0..k {
        let mut next = vec![0u64; counts.len() + (l * l) as usize];
        for (r, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for v in -l..=l {
                next[r + (v * v) as usize] += c;
            }
        }
        counts = next;
    }
    let exponent = (k + 1) as f64;
    let mut sum = 0.0;
    for (r, &c) in counts.iter().enumerate().skip(1) {
        if c > 0 {
            sum += c as f64 * (2.0 * PI * (r as f64).sqrt()).powf(-exponent);
        }
    }
    // sphere area S_{k−1} = 2π^{k/2} / Γ(k/2), with k/2 = d an integer
    let factorial: f64 = (1..d).map(|i| i as f64).product();
    let sphere = 2.0 * PI.powi(d as i32) / factorial;
    let inner = l as f64 - 0.5 * (k as f64).sqrt();
    let tail = sphere / ((2.0 * PI).powf(exponent) * inner);
    (sum + tail).powi(2)
}

/// Signed coefficient `c` with `gap(e_m, e_n) = c · Op(e_{m+n})`, where
/// `ω = ω(n, m)`: `c = 4πN sin(πω/N) − 4π²ω`.
pub fn predicted_gap_coefficient(m: &[i64], n: &[i64], big_n: usize) -> f64 {
    let w = omega(n, m) as f64;
    let nn = big_n as f64;
    4.0 * PI * nn * (PI * w / nn).sin() - 4.0 * PI * PI * w
}

/// `‖Op({g, f}) − [2πiN Op(g), Op(f)]‖` for dense quantizations.
pub fn measured_gap(space: HilbertSpace, f: &TrigPolynomial, g: &TrigPolynomial) -> Result<f64> {
    let bracket = g.poisson_bracket(f)?;
    let opf = quantum::quantize_observable(space, f)?;
    let opg = quantum::quantize_observable(space, g)?;
    let scale = Complex64::new(0.0, 2.0 * PI * space.n() as f64);
    let commutator = (&opg * &opf - &opf * &opg) * scale;
    Ok(linalg::operator_norm(&(quantum::quantize_observable(space, &bracket)? - commutator)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementaryGap {
    pub predicted: f64,
    pub measured: f64,
    /// `4π³ ‖m‖³ ‖n‖³ / N²` with Euclidean norms.
    pub pair_bound: f64,
}

pub fn bracket_commutator_gap_elementary(m: &[i64], n: &[i64], space: HilbertSpace) -> Result<ElementaryGap> {
    let d = space.d();
    let one = Complex64::new(1.0, 0.0);
    let f = TrigPolynomial::monomial(d, m.to_vec(), one)?;
    let g = TrigPolynomial::monomial(d, n.to_vec(), one)?;
    let norm = |v: &[i64]| v.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
    let nn = space.n() as f64;
    Ok(ElementaryGap {
        predicted: predicted_gap_coefficient(m, n, space.n()),
        measured: measured_gap(space, &f, &g)?,
        pair_bound: 4.0 * PI.powi(3) * norm(m).powi(3) * norm(n).powi(3) / (nn * nn),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolynomialGap {
    pub measured: f64,
    pub bound: f64,
}

/// Measured gap against `C c_g c_f / N²`.
pub fn bracket_commutator_gap_poly(f: &TrigPolynomial, g: &TrigPolynomial, space: HilbertSpace) -> Result<PolynomialGap> {
    f.require_real(1e-12)?;
    g.require_real(1e-12)?;
    let nn = space.n() as f64;
    let bound = lattice_constant(space.d()) * sobolev_constant(g)?.bound * sobolev_constant(f)?.bound / (nn * nn);
    Ok(PolynomialGap {
        measured: measured_gap(space, f, g)?,
        bound,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EgorovConstants {
    pub c_f: f64,
    pub c_g: f64,
    pub lattice: f64,
    /// `C · c_g · max_s c_{f∘φ^s}` over the sampled times.
    pub c_fg_t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EgorovRow {
    pub n: usize,
    pub residual: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EgorovSweep {
    pub t: f64,
    pub constants: EgorovConstants,
    pub rows: Vec<EgorovRow>,
    /// Least-squares slope of `log residual` against `log N`.
    pub slope: f64,
}

/// Time samples per unit time for the supremum inside `C_{f,g}(t)`.
const SUP_TIME_SAMPLES: usize = 4;

/// `exp(2πiN t Op(g))`.
pub fn hamiltonian_propagator(g: &TrigPolynomial, space: HilbertSpace, t: f64) -> Result<CMatrix> {
    g.require_real(1e-12)?;
    let op = quantum::quantize_observable(space, g)?;
    Ok(linalg::hermitian_exp_i(&op, 2.0 * PI * space.n() as f64 * t))
}

pub fn egorov_constants(f: &TrigPolynomial, g: &TrigPolynomial, t: f64, grid: usize, trunc: f64) -> Result<EgorovConstants> {
    let c_f = sobolev_constant(f)?.bound;
    let c_g = sobolev_constant(g)?.bound;
    let lattice = lattice_constant(f.d());
    let steps = ((t.abs() * SUP_TIME_SAMPLES as f64).ceil() as usize).max(1);
    let mut sup = c_f;
    for i in 1..=steps {
        let s = t * i as f64 / steps as f64;
        let push = flow_pushforward(f, g, s, grid, trunc)?;
        sup = sup.max(sobolev_constant(&push.poly)?.bound);
    }
    Ok(EgorovConstants {
        c_f,
        c_g,
        lattice,
        c_fg_t: lattice * c_g * sup,
    })
}

/// Residual `‖U* Op(f) U − Op(f∘φ_g^t)‖` and bound `t C_{f,g}(t) / N²` per `N`.
pub fn egorov_sweep(
    f: &TrigPolynomial,
    g: &TrigPolynomial,
    t: f64,
    n_values: &[usize],
    grid: usize,
    trunc: f64,
) -> Result<EgorovSweep> {
    if f.d() != g.d() {
        return Err(Error::Dimension("observable and Hamiltonian differ in d".into()));
    }
    let constants = egorov_constants(f, g, t, grid, trunc)?;
    let push = flow_pushforward(f, g, t, grid, trunc)?;
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        rows.push(egorov_row(f, g, &push.poly, t, n, &constants)?);
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.residual).collect();
    let slope = if rows.len() >= 2 && ys.iter().all(|&y| y > 0.0) {
        linalg::log_log_slope(&xs, &ys)?
    } else {
        f64::NAN
    };
    Ok(EgorovSweep {
        t,
        constants,
        rows,
        slope,
    })
}

/// One row of [`egorov_sweep`] given the pushed-forward observable.
pub fn egorov_row(
    f: &TrigPolynomial,
    g: &TrigPolynomial,
    pushed: &TrigPolynomial,
    t: f64,
    n: usize,
    constants: &EgorovConstants,
) -> Result<EgorovRow> {
    let space = HilbertSpace::new(n, f.d())?;
    let u = hamiltonian_propagator(g, space, t)?;
    let lhs = u.adjoint() * quantum::quantize_observable(space, f)? * &u;
    let residual = linalg::operator_norm(&(lhs - quantum::quantize_observable(space, pushed)?));
    let nn = n as f64;
    Ok(EgorovRow {
        n,
        residual,
        bound: t.abs() * constants.c_fg_t / (nn * nn),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativeCheck {
    /// `‖(U(dt) − I)/dt − 2πiN Op(g)‖`.
    pub error: f64,
    /// Taylor remainder `dt θ²/2` with `θ = 2πN ‖Op(g)‖`, plus round-off slack.
    pub tolerance: f64,
}

const DERIVATIVE_ROUNDOFF: f64 = 1e-13;

pub fn derivative_check(g: &TrigPolynomial, space: HilbertSpace, dt: f64) -> Result<DerivativeCheck> {
    let op = quantum::quantize_observable(space, g)?;
    let u = linalg::hermitian_exp_i(&op, 2.0 * PI * space.n() as f64 * dt);
    let id = CMatrix::identity(space.dim(), space.dim());
    let generator = &op * Complex64::new(0.0, 2.0 * PI * space.n() as f64);
    let diff = (u - id) / Complex64::new(dt, 0.0) - generator;
    let theta = 2.0 * PI * space.n() as f64 * linalg::operator_norm(&op);
    Ok(DerivativeCheck {
        error: linalg::operator_norm(&diff),
        tolerance: 0.5 * dt * theta * theta + DERIVATIVE_ROUNDOFF * theta.max(1.0) / dt,
    })
}
