//! Classical side: Hamiltonian flows on the torus, the perturbed map
//! `Φ = A ∘ φ_H`, Fourier coefficients of pushforwards, and averages over the
//! invariant subtori `X_ξ`.
//!
//! The flow is `ṗ_j = ∂H/∂q_j`, `q̇_j = −∂H/∂p_j`, so that
//! `d/dt (f ∘ φ^t) = {f ∘ φ^t, H}` for the bracket of [`TrigPolynomial::poisson_bracket`].
//! With this orientation `exp(2πiN Op(H))* Op(f) exp(2πiN Op(H))` tracks
//! `Op(f ∘ φ_H)` to second order in `1/N`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::lattice::{
    intmat, omega, FixedPoint, IntMatrix, IsotropicLattice, RepresentativeSystem, SymplecticMatrix,
};
use crate::trig::TrigPolynomial;

#[derive(Clone, Copy, Debug)]
pub struct IntegratorSettings {
    pub atol: f64,
    pub max_steps: usize,
    pub min_step: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            atol: 1e-12,
            max_steps: 1_000_000,
            min_step: 1e-13,
        }
    }
}

/// `Φ = A ∘ φ_H¹` with `H` already scaled by the perturbation strength.
#[derive(Clone, Debug)]
pub struct ClassicalMap {
    pub a: SymplecticMatrix,
    pub h: TrigPolynomial,
    pub settings: IntegratorSettings,
}

impl ClassicalMap {
    pub fn new(a: SymplecticMatrix, h: TrigPolynomial) -> Result<Self> {
        if a.d() != h.d() {
            return Err(Error::Dimension(format!(
                "matrix on d={}, Hamiltonian on d={}",
                a.d(),
                h.d()
            )));
        }
        h.require_real(1e-12)?;
        Ok(Self {
            a,
            h,
            settings: IntegratorSettings::default(),
        })
    }

    pub fn d(&self) -> usize {
        self.a.d()
    }

    /// Rejects Hamiltonians with frequencies outside `Λ^⊥`.
    pub fn check_lattice(&self, lattice: &IsotropicLattice) -> Result<()> {
        for (m, _) in self.h.terms() {
            for i in 0..lattice.rank() {
                let w = omega(lattice.basis().row(i), m);
                if w != 0 {
                    return Err(Error::Validation(format!(
                        "Hamiltonian frequency {m:?} is not in Λ^⊥: ω({:?}, ·) = {w}",
                        lattice.basis().row(i)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn flow(&self, x0: &[f64], t: f64) -> Result<Vec<f64>> {
        hamiltonian_flow(&self.h, x0, t, &self.settings)
    }

    /// `Φ(x) = A φ_H¹(x) mod 1`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.a.act_on_point(&self.flow(x, 1.0)?))
    }

    /// `Φ⁻¹(x) = φ_H^{−1}(A⁻¹ x)`.
    pub fn apply_inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.flow(&self.a.inverse().act_on_point(x), -1.0)
    }

    pub fn iterate(&self, x: &[f64], t: usize) -> Result<Vec<f64>> {
        let mut cur = x.to_vec();
        for _ in 0..t {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }
}

pub fn poisson_bracket(f: &TrigPolynomial, g: &TrigPolynomial) -> Result<TrigPolynomial> {
    f.poisson_bracket(g)
}

fn vector_field(h: &TrigPolynomial, x: &[f64]) -> Vec<f64> {
    let d = h.d();
    let g = h.gradient(x);
    let mut v = vec![0.0; 2 * d];
    for j in 0..d {
        v[j] = g[d + j];
        v[d + j] = -g[j];
    }
    v
}

// Dormand–Prince 5(4) tableau
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// `φ_H^t(x0) mod 1` by adaptive Dormand–Prince integration.
pub fn hamiltonian_flow(h: &TrigPolynomial, x0: &[f64], t: f64, settings: &IntegratorSettings) -> Result<Vec<f64>> {
    if x0.len() != 2 * h.d() {
        return Err(Error::Dimension(format!(
            "point has {} coordinates, expected {}",
            x0.len(),
            2 * h.d()
        )));
    }
    let wrap = |x: Vec<f64>| x.into_iter().map(|v| v.rem_euclid(1.0) % 1.0).collect::<Vec<f64>>();
    if h.terms().all(|(n, _)| n.iter().all(|&v| v == 0)) || t == 0.0 {
        return Ok(wrap(x0.to_vec()));
    }
    let n = x0.len();
    let dir = t.signum();
    let total = t.abs();
    let mut y = x0.to_vec();
    let mut s = 0.0;
    let mut step = (0.05 / (1.0 + h.l1_norm() * h.max_frequency() as f64)).min(total);
    let mut k = vec![vec![0.0; n]; 7];
    k[0] = vector_field(h, &y);
    let mut steps = 0usize;
    while s < total {
        if steps >= settings.max_steps {
            return Err(Error::Integration(format!("exceeded {} steps", settings.max_steps)));
        }
        steps += 1;
        let hs = step.min(total - s);
        let hd = dir * hs;
        for i in 1..7 {
            let yi: Vec<f64> = (0..n)
                .map(|c| y[c] + hd * (0..i).map(|j| A[i][j] * k[j][c]).sum::<f64>())
                .collect();
            k[i] = vector_field(h, &yi);
        }
        let y5: Vec<f64> = (0..n)
            .map(|c| y[c] + hd * (0..7).map(|j| B5[j] * k[j][c]).sum::<f64>())
            .collect();
        let err = (0..n)
            .map(|c| (hd * (0..7).map(|j| (B5[j] - B4[j]) * k[j][c]).sum::<f64>()).abs())
            .fold(0.0, f64::max)
            / settings.atol;
        if err <= 1.0 {
            s += hs;
            y = y5;
            // first-same-as-last: the seventh stage is the derivative at the new point
            k[0] = k[6].clone();
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        step = hs * factor;
        if step < settings.min_step && s < total {
            return Err(Error::Integration(format!(
                "step size underflow ({step:e}) at time {s}"
            )));
        }
    }
    Ok(wrap(y))
}

/// Coefficients of `g` sampled on the uniform `G^{2d}` grid.
#[derive(Clone, Debug)]
pub struct Pushforward {
    pub poly: TrigPolynomial,
    /// `Σ |ĝ(n)|` over frequencies with some `|n_i| ≥ G/4`.
    pub aliasing: f64,
}

/// Fourier coefficients of `x ↦ f(map(x))` from samples on the grid, with
/// coefficients below `trunc` discarded.
pub fn sample_coefficients<M>(f: &TrigPolynomial, grid: usize, trunc: f64, map: M) -> Result<Pushforward>
where
    M: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if grid < 4 || !grid.is_power_of_two() {
        return Err(Error::Validation(format!("grid size {grid} must be a power of two ≥ 4")));
    }
    let d = f.d();
    let axes = 2 * d;
    let total = grid
        .checked_pow(axes as u32)
        .filter(|&t| t <= 1 << 24)
        .ok_or_else(|| Error::CostCap(format!("grid {grid}^{axes} is too large")))?;
    let mut data = vec![Complex64::default(); total];
    let mut x = vec![0.0; axes];
    for (idx, slot) in data.iter_mut().enumerate() {
        let mut r = idx;
        for c in (0..axes).rev() {
            x[c] = (r % grid) as f64 / grid as f64;
            r /= grid;
        }
        *slot = f.evaluate(&map(&x)?);
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(grid);
    let mut line = vec![Complex64::default(); grid];
    for axis in 0..axes {
        let stride = grid.pow((axes - 1 - axis) as u32);
        for start in 0..total {
            if (start / stride) % grid != 0 {
                continue;
            }
            for (j, slot) in line.iter_mut().enumerate() {
                *slot = data[start + j * stride];
            }
            fft.process(&mut line);
            for (j, v) in line.iter().enumerate() {
                data[start + j * stride] = *v;
            }
        }
    }
    let scale = 1.0 / total as f64;
    let half = grid as i64 / 2;
    let quarter = grid as i64 / 4;
    let mut poly = TrigPolynomial::zero(d);
    let mut aliasing = 0.0;
    for (idx, v) in data.iter().enumerate() {
        let c = v * scale;
        let mut r = idx;
        let mut n = vec![0i64; axes];
        for slot in n.iter_mut().rev() {
            let j = (r % grid) as i64;
            *slot = if j < half { j } else { j - grid as i64 };
            r /= grid;
        }
        if n.iter().any(|v| v.abs() >= quarter) {
            aliasing += c.norm();
        }
        if c.norm() >= trunc {
            poly.add_term(n, c)?;
        }
    }
    if aliasing > 100.0 * trunc {
        return Err(Error::Resolution {
            aliasing,
            limit: 100.0 * trunc,
        });
    }
    Ok(Pushforward { poly, aliasing })
}

/// Coefficients of `f ∘ Φ^t`.
pub fn pushforward_coefficients(
    f: &TrigPolynomial,
    map: &ClassicalMap,
    t: usize,
    grid: usize,
    trunc: f64,
) -> Result<Pushforward> {
    if t == 0 {
        return Ok(Pushforward {
            poly: f.truncate(trunc),
            aliasing: 0.0,
        });
    }
    sample_coefficients(f, grid, trunc, |x| map.iterate(x, t))
}

/// Coefficients of `f ∘ φ_H^t` for real `t`.
pub fn flow_pushforward(
    f: &TrigPolynomial,
    h: &TrigPolynomial,
    t: f64,
    grid: usize,
    trunc: f64,
) -> Result<Pushforward> {
    let settings = IntegratorSettings::default();
    sample_coefficients(f, grid, trunc, |x| hamiltonian_flow(h, x, t, &settings))
}

/// Exact `f ∘ A^t` by relabeling `n ↦ nA^t`.
pub fn linear_pushforward(f: &TrigPolynomial, a: &SymplecticMatrix, t: usize) -> Result<TrigPolynomial> {
    let mut g = f.clone();
    for _ in 0..t {
        g = g.compose_linear(a)?;
    }
    Ok(g)
}

/// `(1/(T+1)) Σ_{t=0}^{T} f ∘ Φ^t` at coefficient level.
pub fn time_average(f: &TrigPolynomial, map: &ClassicalMap, big_t: usize, grid: usize, trunc: f64) -> Result<TrigPolynomial> {
    let mut acc = TrigPolynomial::zero(f.d());
    for t in 0..=big_t {
        acc = acc.add(&pushforward_coefficients(f, map, t, grid, trunc)?.poly)?;
    }
    Ok(acc.scale(Complex64::new(1.0 / (big_t + 1) as f64, 0.0)))
}

/// `X_ξ = {x : e_n(x) = e_n(ξ) ∀ n ∈ Λ}` with the data needed to integrate on it.
#[derive(Clone, Debug)]
pub struct SubmanifoldSpec {
    pub lattice: IsotropicLattice,
    pub xi: FixedPoint,
    pub reps: RepresentativeSystem,
    /// Rows form a Z-basis of `W ∩ Z^{2d}`, `W = Λ^{annihilator}`.
    pub tangent: IntMatrix,
}

impl SubmanifoldSpec {
    pub fn new(lattice: IsotropicLattice, xi: FixedPoint) -> Result<Self> {
        let reps = RepresentativeSystem::new(&lattice)?;
        let tangent = intmat::integer_kernel(lattice.basis())?;
        Ok(Self {
            lattice,
            xi,
            reps,
            tangent,
        })
    }

    pub fn dimension(&self) -> usize {
        self.tangent.rows()
    }

    /// `ξ + Σ u_j ω_j mod 1`; uniform `u ∈ [0,1)^k` gives the Haar measure.
    pub fn point(&self, u: &[f64]) -> Vec<f64> {
        let xi = self.xi.to_f64();
        (0..xi.len())
            .map(|c| {
                let s: f64 = u.iter().enumerate().map(|(j, uj)| uj * self.tangent[(j, c)] as f64).sum();
                (xi[c] + s).rem_euclid(1.0)
            })
            .collect()
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let u: Vec<f64> = (0..self.dimension()).map(|_| rng.gen::<f64>()).collect();
        self.point(&u)
    }

    /// `max_i |e_{n_i}(x) − e_{n_i}(ξ)|` over the lattice basis.
    pub fn membership_defect(&self, x: &[f64]) -> f64 {
        (0..self.lattice.rank())
            .map(|i| {
                let n = self.lattice.basis().row(i);
                let val = Complex64::from_polar(
                    1.0,
                    2.0 * std::f64::consts::PI * n.iter().zip(x).map(|(&a, b)| a as f64 * b).sum::<f64>(),
                );
                (val - self.xi.character(n)).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// `∫_{X_ξ} f = Σ_{m∈Λ} f̂(m) e_m(ξ)`.
pub fn submanifold_average(f: &TrigPolynomial, spec: &SubmanifoldSpec) -> Complex64 {
    f.terms()
        .filter(|(m, _)| spec.lattice.contains(m))
        .map(|(m, c)| c * spec.xi.character(m))
        .sum()
}

/// `f♯(n) = Σ_{m∈Λ} f̂(n+m) e_m(ξ)` keyed by class representative `n`.
pub fn sharp_coefficients(f: &TrigPolynomial, spec: &SubmanifoldSpec) -> BTreeMap<Vec<i64>, Complex64> {
    let mut out: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
    for (k, c) in f.terms() {
        let (n, m) = spec.reps.canonical_split(k);
        *out.entry(n).or_default() += c * spec.xi.character(&m);
    }
    out
}

/// `‖f‖²_{L²(X_ξ)} = Σ_n |f♯(n)|²`.
pub fn restricted_l2_norm_sq(f: &TrigPolynomial, spec: &SubmanifoldSpec) -> f64 {
    sharp_coefficients(f, spec).values().map(|c| c.norm_sqr()).sum()
}

/// Mean and standard error of samples `g(x)` for `x` uniform on `X_ξ`.
pub fn monte_carlo<R, G>(spec: &SubmanifoldSpec, samples: usize, rng: &mut R, mut g: G) -> Result<(Complex64, f64)>
where
    R: Rng,
    G: FnMut(&[f64]) -> Result<Complex64>,
{
    if samples < 2 {
        return Err(Error::Precondition("Monte Carlo needs at least two samples".into()));
    }
    let mut values = Vec::with_capacity(samples);
    for _ in 0..samples {
        values.push(g(&spec.sample(rng))?);
    }
    let mean: Complex64 = values.iter().sum::<Complex64>() / samples as f64;
    let var = values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / (samples - 1) as f64;
    Ok((mean, (var / samples as f64).sqrt()))
}

/// Monte Carlo estimate of `‖f^T‖²_{L²(X_ξ)}` with its standard error, by
/// averaging `f` along orbits of uniformly sampled points of `X_ξ`.
pub fn time_average_l2_sq_mc<R: Rng>(
    f: &TrigPolynomial,
    map: &ClassicalMap,
    spec: &SubmanifoldSpec,
    big_t: usize,
    samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    let (mean, err) = monte_carlo(spec, samples, rng, |x| {
        let mut cur = x.to_vec();
        let mut acc = f.evaluate(&cur);
        for _ in 0..big_t {
            cur = map.apply(&cur)?;
            acc += f.evaluate(&cur);
        }
        Ok(Complex64::new((acc / (big_t + 1) as f64).norm_sqr(), 0.0))
    })?;
    Ok((mean.re, err))
}

/// `|(1/T) Σ_{t<T} f(Φ^t x0) − reference|`.
pub fn birkhoff_diagnostic(map: &ClassicalMap, f: &TrigPolynomial, x0: &[f64], big_t: usize, reference: Complex64) -> Result<f64> {
    if big_t == 0 {
        return Err(Error::Precondition("Birkhoff average over zero steps".into()));
    }
    let mut cur = x0.to_vec();
    let mut acc = Complex64::default();
    for _ in 0..big_t {
        acc += f.evaluate(&cur);
        cur = map.apply(&cur)?;
    }
    Ok((acc / big_t as f64 - reference).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{check_invariant_isotropic, validate_symplectic};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sym(rows: &[&[i64]]) -> SymplecticMatrix {
        let v: Vec<Vec<i64>> = rows.iter().map(|r| r.to_vec()).collect();
        validate_symplectic(&IntMatrix::from_rows(&v, v.len()).unwrap()).unwrap()
    }

    fn one(d: usize) -> TrigPolynomial {
        TrigPolynomial::constant(d, Complex64::new(1.0, 0.0))
    }

    fn exp_n(n: &[i64]) -> TrigPolynomial {
        TrigPolynomial::monomial(n.len() / 2, n.to_vec(), Complex64::new(1.0, 0.0)).unwrap()
    }

    fn block() -> SymplecticMatrix {
        sym(&[&[2, 1, 0, 0], &[1, 1, 0, 0], &[0, 0, 1, -1], &[0, 0, -1, 2]])
    }

    /// Λ = span{e_{p1}} for A = I on T⁴ with ξ = (1/2, 0, 0, 1/3).
    fn flat_spec() -> SubmanifoldSpec {
        let id = validate_symplectic(&IntMatrix::identity(4)).unwrap();
        let lat = check_invariant_isotropic(&id, &IntMatrix::from_rows(&[vec![1, 0, 0, 0]], 4).unwrap()).unwrap();
        let xi = FixedPoint::new(&id, &[3, 0, 0, 2], 6).unwrap();
        SubmanifoldSpec::new(lat, xi).unwrap()
    }

    #[test]
    fn bracket_examples() {
        let b = poisson_bracket(&exp_n(&[1, 0]), &exp_n(&[0, 1])).unwrap();
        let expected = -4.0 * PI * PI;
        assert!((b.coefficient(&[1, 1]) - Complex64::new(expected, 0.0)).norm() < 1e-12);
        assert_eq!(b.len(), 1);
        let f = TrigPolynomial::cosine(1, &[1, 2], 0.3).unwrap();
        assert!(poisson_bracket(&f, &f).unwrap().is_empty());
    }

    #[test]
    fn flow_trivial_and_shear() {
        let zero = TrigPolynomial::zero(1);
        let s = IntegratorSettings::default();
        assert_eq!(hamiltonian_flow(&zero, &[0.25, 0.5], 3.0, &s).unwrap(), vec![0.25, 0.5]);
        let h = TrigPolynomial::cosine(1, &[1, 0], 0.05).unwrap();
        for &(p0, q0, t) in &[(0.1, 0.2, 1.0), (0.37, 0.9, 2.5), (0.8, 0.05, -1.5)] {
            let out = hamiltonian_flow(&h, &[p0, q0], t, &s).unwrap();
            let dh = -0.05 * 2.0 * PI * (2.0 * PI * p0).sin();
            let q = (q0 - t * dh).rem_euclid(1.0);
            assert!((out[0] - p0).abs() < 1e-12);
            let dq = (out[1] - q).abs();
            assert!(dq.min(1.0 - dq) < 1e-10, "{out:?} vs {q}");
        }
    }

    #[test]
    fn energy_is_conserved() {
        let h = TrigPolynomial::cosine(1, &[0, 1], 0.05)
            .unwrap()
            .add(&TrigPolynomial::cosine(1, &[1, 1], 0.03).unwrap())
            .unwrap();
        let s = IntegratorSettings::default();
        let x0 = [0.3, 0.7];
        let e0 = h.evaluate(&x0).re;
        for t in [1.0, 5.0, 10.0] {
            let x = hamiltonian_flow(&h, &x0, t, &s).unwrap();
            assert!((h.evaluate(&x).re - e0).abs() < 1e-9);
        }
    }

    #[test]
    fn bracket_generates_flow_derivative() {
        // d/dt f(φ^t x) at t = 0 equals {f, H}(x)
        let h = TrigPolynomial::cosine(1, &[1, 1], 0.05).unwrap();
        let f = TrigPolynomial::sine(1, &[2, -1], 1.0).unwrap();
        let s = IntegratorSettings::default();
        let x = [0.21, 0.63];
        let dt = 1e-4;
        let fwd = f.evaluate(&hamiltonian_flow(&h, &x, dt, &s).unwrap()).re;
        let bwd = f.evaluate(&hamiltonian_flow(&h, &x, -dt, &s).unwrap()).re;
        let derivative = (fwd - bwd) / (2.0 * dt);
        let bracket = f.poisson_bracket(&h).unwrap().evaluate(&x).re;
        assert!((derivative - bracket).abs() < 1e-6, "{derivative} vs {bracket}");
    }

    #[test]
    fn perturbed_map_basics() {
        let cat = sym(&[&[2, 1], &[3, 2]]);
        let linear = ClassicalMap::new(cat.clone(), TrigPolynomial::zero(1)).unwrap();
        let x = [0.3, 0.45];
        let y = linear.apply(&x).unwrap();
        assert_eq!(y, cat.act_on_point(&x));
        let h = TrigPolynomial::cosine(1, &[0, 1], 0.05).unwrap();
        let map = ClassicalMap::new(cat, h).unwrap();
        let back = map.apply_inverse(&map.apply(&x).unwrap()).unwrap();
        for (a, b) in back.iter().zip(&x) {
            let d = (a - b).abs();
            assert!(d.min(1.0 - d) < 1e-9);
        }
    }

    #[test]
    fn submanifold_is_invariant() {
        let a = block();
        let lat = check_invariant_isotropic(&a, &IntMatrix::from_rows(&[vec![1, 0, 0, 0], vec![0, 1, 0, 0]], 4).unwrap()).unwrap();
        let h = TrigPolynomial::cosine(2, &[1, 0, 0, 0], 0.05)
            .unwrap()
            .add(&TrigPolynomial::cosine(2, &[1, 1, 0, 0], 0.03).unwrap())
            .unwrap();
        let map = ClassicalMap::new(a.clone(), h).unwrap();
        map.check_lattice(&lat).unwrap();
        let bad = ClassicalMap::new(a.clone(), TrigPolynomial::cosine(2, &[0, 0, 1, 0], 0.1).unwrap()).unwrap();
        assert!(bad.check_lattice(&lat).is_err());
        let spec = SubmanifoldSpec::new(lat, FixedPoint::origin(&a).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x = spec.sample(&mut rng);
            assert!(spec.membership_defect(&x) < 1e-12);
            let mut y = x.clone();
            for _ in 0..10 {
                y = map.apply(&y).unwrap();
            }
            assert!(spec.membership_defect(&y) < 1e-8);
        }
    }

    #[test]
    fn pushforward_identity_and_relabeling() {
        let cat = sym(&[&[2, 1], &[1, 1]]);
        let map = ClassicalMap::new(cat.clone(), TrigPolynomial::zero(1)).unwrap();
        let f = TrigPolynomial::cosine(1, &[0, 1], 1.0).unwrap();
        let p0 = pushforward_coefficients(&f, &map, 0, 16, 1e-10).unwrap();
        assert_eq!(p0.poly, f);
        for t in 1..=2 {
            let p = pushforward_coefficients(&f, &map, t, 32, 1e-10).unwrap();
            let exact = linear_pushforward(&f, &cat, t).unwrap();
            assert_eq!(p.poly.len(), exact.len());
            for (n, c) in exact.terms() {
                assert!((p.poly.coefficient(n) - c).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn shear_pushforward_is_resolution_independent() {
        let h = TrigPolynomial::cosine(1, &[1, 0], 0.05).unwrap();
        let f = exp_n(&[0, 1]);
        let coarse = flow_pushforward(&f, &h, 1.0, 64, 1e-12).unwrap();
        let fine = flow_pushforward(&f, &h, 1.0, 128, 1e-12).unwrap();
        for (n, c) in fine.poly.terms() {
            assert!((coarse.poly.coefficient(n) - c).norm() <= 1e-8, "{n:?}");
        }
        // ĝ(k, 1) = J_k(0.2π²) up to sign for f ∘ φ = e(q + 0.1π sin 2πp)
        let j0 = 0.238_951_993_679_893_7;
        assert!((fine.poly.coefficient(&[0, 1]).norm() - j0).abs() < 1e-10);
        assert!(matches!(
            flow_pushforward(&f, &h, 1.0, 32, 1e-12),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn coarse_grid_reports_aliasing() {
        let cat = sym(&[&[2, 1], &[1, 1]]);
        let map = ClassicalMap::new(cat, TrigPolynomial::zero(1)).unwrap();
        let f = TrigPolynomial::cosine(1, &[0, 1], 1.0).unwrap();
        assert!(matches!(
            pushforward_coefficients(&f, &map, 3, 8, 1e-10),
            Err(Error::Resolution { .. })
        ));
    }

    #[test]
    fn averages_on_subtorus() {
        let spec = flat_spec();
        assert!((submanifold_average(&one(2), &spec) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(submanifold_average(&exp_n(&[0, 1, 0, 0]), &spec).norm() < 1e-15);
        let inside = submanifold_average(&exp_n(&[3, 0, 0, 0]), &spec);
        assert!((inside - Complex64::new(-1.0, 0.0)).norm() < 1e-15);

        let f = TrigPolynomial::cosine(2, &[1, 0, 0, 0], 0.7)
            .unwrap()
            .add(&TrigPolynomial::cosine(2, &[0, 0, 1, 0], 0.4).unwrap())
            .unwrap();
        let exact = submanifold_average(&f, &spec);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mean, err) = monte_carlo(&spec, 100_000, &mut rng, |x| Ok(f.evaluate(x))).unwrap();
        assert!((mean - exact).norm() <= 3.0 * err + 1e-12, "{mean} vs {exact} ± {err}");
    }

    #[test]
    fn sharp_examples() {
        let spec = flat_spec();
        let m = [2, 0, 0, 0];
        let em_xi = spec.xi.character(&m);
        let f = exp_n(&m).sub(&TrigPolynomial::constant(2, em_xi)).unwrap();
        assert!(sharp_coefficients(&f, &spec).values().all(|c| c.norm() < 1e-14));

        let n = [0, 1, 2, 0];
        let nm = [2, 1, 2, 0];
        let g = exp_n(&nm).sub(&exp_n(&n).scale(em_xi)).unwrap();
        assert!(sharp_coefficients(&g, &spec).values().all(|c| c.norm() < 1e-14));

        let s = sharp_coefficients(&exp_n(&n), &spec);
        assert_eq!(s.len(), 1);
        assert!((s[&n.to_vec()] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn restricted_norms() {
        let spec = flat_spec();
        assert!((restricted_l2_norm_sq(&one(2), &spec) - 1.0).abs() < 1e-15);
        assert!((restricted_l2_norm_sq(&exp_n(&[0, 1, 0, 0]), &spec) - 1.0).abs() < 1e-15);
        let f = TrigPolynomial::cosine(2, &[1, 1, 0, 0], 0.8)
            .unwrap()
            .add(&TrigPolynomial::cosine(2, &[0, 1, 0, 0], 0.5).unwrap())
            .unwrap();
        let exact = restricted_l2_norm_sq(&f, &spec);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mean, err) = monte_carlo(&spec, 100_000, &mut rng, |x| Ok(Complex64::new(f.evaluate(x).norm_sqr(), 0.0))).unwrap();
        assert!((mean.re - exact).abs() <= 3.0 * err + 1e-12, "{} vs {exact} ± {err}", mean.re);
    }

    #[test]
    fn vanishing_sharp_means_vanishing_function() {
        let spec = flat_spec();
        let m = [1, 0, 0, 0];
        let n = [0, 1, 1, -1];
        let nm: Vec<i64> = n.iter().zip(&m).map(|(a, b)| a + b).collect();
        let f = exp_n(&nm).sub(&exp_n(&n).scale(spec.xi.character(&m))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            assert!(f.evaluate(&spec.sample(&mut rng)).norm() <= 1e-6 * f.l1_norm());
        }
    }

    #[test]
    fn time_average_examples() {
        let cat = sym(&[&[2, 1], &[1, 1]]);
        let map = ClassicalMap::new(cat, TrigPolynomial::zero(1)).unwrap();
        let f = exp_n(&[1, 0]);
        let t0 = time_average(&f, &map, 0, 16, 1e-10).unwrap();
        assert_eq!(t0, f);
        let t2 = time_average(&f, &map, 2, 32, 1e-10).unwrap();
        let norm_sq: f64 = t2.terms().map(|(_, c)| c.norm_sqr()).sum();
        assert!((norm_sq - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn birkhoff_constant_is_exact() {
        let cat = sym(&[&[2, 1], &[1, 1]]);
        let map = ClassicalMap::new(cat, TrigPolynomial::zero(1)).unwrap();
        let v = birkhoff_diagnostic(&map, &one(1), &[0.1, 0.2], 50, Complex64::new(1.0, 0.0)).unwrap();
        assert!(v < 1e-15);
    }
}
