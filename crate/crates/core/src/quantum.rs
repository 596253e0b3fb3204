//! The Hilbert space `L²((Z/NZ)^d)`, elementary Weyl operators and the
//! quantization of trigonometric polynomials.
//!
//! Basis index: `Q ∈ {0..N−1}^d` in row-major order, last coordinate fastest.
//! Inner product: `⟨φ, ψ⟩ = N^{−d} Σ_Q φ(Q) conj ψ(Q)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::omega;
use crate::linalg;
use crate::trig::TrigPolynomial;

pub type State = DVector<Complex64>;
pub type DenseOperator = DMatrix<Complex64>;

/// `e(k/q) = exp(2πik/q)` with the fraction reduced before conversion.
pub fn e_frac(k: i128, q: i128) -> Complex64 {
    let r = k.rem_euclid(q);
    if r == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if 2 * r == q {
        return Complex64::new(-1.0, 0.0);
    }
    if 4 * r == q {
        return Complex64::new(0.0, 1.0);
    }
    if 4 * r == 3 * q {
        return Complex64::new(0.0, -1.0);
    }
    Complex64::from_polar(1.0, 2.0 * PI * (r as f64 / q as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    n: usize,
    d: usize,
}

impl HilbertSpace {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::Validation(format!("need N ≥ 1 and d ≥ 1, got N={n}, d={d}")));
        }
        n.checked_pow(d as u32)
            .filter(|&dim| dim <= 1 << 28)
            .ok_or_else(|| Error::CostCap(format!("N^d = {n}^{d} is too large")))?;
        Ok(Self { n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn index(&self, q: &[i64]) -> usize {
        let n = self.n as i64;
        q.iter()
            .fold(0usize, |acc, &x| acc * self.n + x.rem_euclid(n) as usize)
    }

    pub fn coords(&self, mut idx: usize) -> Vec<i64> {
        let mut q = vec![0i64; self.d];
        for slot in q.iter_mut().rev() {
            *slot = (idx % self.n) as i64;
            idx /= self.n;
        }
        q
    }

    pub fn inner(&self, phi: &[Complex64], psi: &[Complex64]) -> Complex64 {
        let s: Complex64 = phi.iter().zip(psi).map(|(a, b)| a * b.conj()).sum();
        s / self.dim() as f64
    }

    pub fn norm(&self, psi: &[Complex64]) -> f64 {
        (psi.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.dim() as f64).sqrt()
    }

    pub fn normalize(&self, psi: &mut [Complex64]) -> Result<()> {
        let nrm = self.norm(psi);
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::Normalization(nrm));
        }
        psi.iter_mut().for_each(|z| *z /= nrm);
        Ok(())
    }

    /// `δ_Q` scaled to unit norm.
    pub fn basis_state(&self, q: &[i64]) -> State {
        let mut v = State::zeros(self.dim());
        v[self.index(q)] = Complex64::new((self.dim() as f64).sqrt(), 0.0);
        v
    }

    fn check_freq(&self, n: &[i64]) {
        assert_eq!(n.len(), 2 * self.d, "frequency length must be 2d");
    }
}

/// `Op_N(e_n)` stored as its shift `n₁ mod N` and phase data `n mod 2N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Elementary {
    space: HilbertSpace,
    freq: Vec<i64>,
    /// `n₁·n₂ mod 2N`
    base_phase: i64,
}

impl Elementary {
    pub fn new(space: HilbertSpace, n: &[i64]) -> Self {
        space.check_freq(n);
        let two_n = 2 * space.n as i64;
        let freq: Vec<i64> = n.iter().map(|x| x.rem_euclid(two_n)).collect();
        let d = space.d;
        // n₁·n₂ is taken from the reduced representative; shifting n by 2N
        // changes it by a multiple of 2N.
        let base_phase = (0..d)
            .map(|j| (freq[j] as i128 * freq[d + j] as i128).rem_euclid(two_n as i128) as i64)
            .sum::<i64>()
            .rem_euclid(two_n);
        Self {
            space,
            freq,
            base_phase,
        }
    }

    pub fn frequency(&self) -> &[i64] {
        &self.freq
    }

    /// Calls `visit(target, source, phase_index)` for every row `Q`, meaning
    /// `(Op ψ)(target) = e(phase_index / 2N) ψ(source)`.
    pub(crate) fn for_each_entry(&self, mut visit: impl FnMut(usize, usize, usize)) {
        let n = self.space.n;
        let d = self.space.d;
        let two_n = 2 * n;
        let mut q = vec![0usize; d];
        let mut src: Vec<usize> = (0..d).map(|j| self.freq[j] as usize % n).collect();
        let mut src_idx = src.iter().fold(0usize, |acc, &s| acc * n + s);
        let mut phase = self.base_phase as usize;
        let step: Vec<usize> = (0..d).map(|j| 2 * self.freq[d + j] as usize % two_n).collect();
        let strides: Vec<usize> = (0..d).map(|j| n.pow((d - 1 - j) as u32)).collect();
        for target in 0..self.space.dim() {
            visit(target, src_idx, phase);
            // odometer increment of q, keeping src and phase in sync
            for j in (0..d).rev() {
                q[j] += 1;
                phase = (phase + step[j]) % two_n;
                src[j] += 1;
                src_idx += strides[j];
                if src[j] == n {
                    src[j] = 0;
                    src_idx -= n * strides[j];
                }
                if q[j] < n {
                    break;
                }
                q[j] = 0;
                phase = (phase + two_n - (step[j] * n) % two_n) % two_n;
            }
        }
    }

    /// Per target row: the source index and the phase index `k` of `e(k/2N)`.
    pub fn entries(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.space.dim());
        self.for_each_entry(|_, s, k| out.push((s, k)));
        out
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn apply(&self, psi: &[Complex64]) -> State {
        let table = phase_table(self.space.n);
        let mut out = State::zeros(self.space.dim());
        self.for_each_entry(|t, s, k| out[t] = table[k] * psi[s]);
        out
    }

    /// `out += c · Op ψ`.
    pub fn apply_add(&self, c: Complex64, psi: &[Complex64], out: &mut [Complex64], table: &[Complex64]) {
        self.for_each_entry(|t, s, k| out[t] += c * table[k] * psi[s]);
    }

    /// `⟨Op ψ, ψ⟩` without allocating.
    pub fn expectation(&self, psi: &[Complex64]) -> Complex64 {
        let table = phase_table(self.space.n);
        let mut acc = Complex64::default();
        self.for_each_entry(|t, s, k| acc += table[k] * psi[s] * psi[t].conj());
        acc / self.space.dim() as f64
    }

    pub fn dense(&self) -> DenseOperator {
        let table = phase_table(self.space.n);
        let dim = self.space.dim();
        let mut m = DenseOperator::zeros(dim, dim);
        self.for_each_entry(|t, s, k| m[(t, s)] = table[k]);
        m
    }
}

/// `e(k/2N)` for `k = 0..2N`.
pub fn phase_table(n: usize) -> Vec<Complex64> {
    let two_n = 2 * n as i128;
    (0..two_n).map(|k| e_frac(k, two_n)).collect()
}

pub fn apply_elementary(space: HilbertSpace, n: &[i64], psi: &[Complex64]) -> State {
    Elementary::new(space, n).apply(psi)
}

/// `e(ω(m, n)/2N)`, so that `Op(e_m) Op(e_n) = phase · Op(e_{m+n})`.
pub fn compose_phase(m: &[i64], n: &[i64], big_n: usize) -> Complex64 {
    e_frac(omega(m, n) as i128, 2 * big_n as i128)
}

pub fn elementary_dense(space: HilbertSpace, n: &[i64]) -> DenseOperator {
    Elementary::new(space, n).dense()
}

/// `Op_N(f) = Σ f̂(n) Op_N(e_n)` as a dense matrix.
pub fn quantize_observable(space: HilbertSpace, f: &TrigPolynomial) -> Result<DenseOperator> {
    check_dim(space, f)?;
    let table = phase_table(space.n);
    let dim = space.dim();
    let mut m = DenseOperator::zeros(dim, dim);
    for (n, c) in f.terms() {
        Elementary::new(space, n).for_each_entry(|t, s, k| m[(t, s)] += c * table[k]);
    }
    Ok(m)
}

/// `Op_N(f) ψ` without forming the matrix.
pub fn apply_observable(space: HilbertSpace, f: &TrigPolynomial, psi: &[Complex64]) -> Result<State> {
    check_dim(space, f)?;
    let table = phase_table(space.n);
    let mut out = State::zeros(space.dim());
    for (n, c) in f.terms() {
        Elementary::new(space, n).apply_add(*c, psi, out.as_mut_slice(), &table);
    }
    Ok(out)
}

fn check_dim(space: HilbertSpace, f: &TrigPolynomial) -> Result<()> {
    if f.d() != space.d {
        return Err(Error::Dimension(format!(
            "polynomial on d={} quantized on d={}",
            f.d(),
            space.d
        )));
    }
    Ok(())
}

pub const WIGNER_NORM_TOL: f64 = 1e-10;

fn check_normalized(space: HilbertSpace, psi: &[Complex64]) -> Result<()> {
    let nrm = space.norm(psi);
    if (nrm - 1.0).abs() > WIGNER_NORM_TOL {
        return Err(Error::Normalization(nrm));
    }
    Ok(())
}

/// `W_ψ(e_n) = ⟨Op_N(e_n) ψ, ψ⟩`.
pub fn wigner_coefficient(space: HilbertSpace, n: &[i64], psi: &[Complex64]) -> Result<Complex64> {
    check_normalized(space, psi)?;
    Ok(Elementary::new(space, n).expectation(psi))
}

/// `W_ψ(f) = Σ f̂(n) W_ψ(e_n)`.
pub fn wigner_observable(space: HilbertSpace, f: &TrigPolynomial, psi: &[Complex64]) -> Result<Complex64> {
    check_normalized(space, psi)?;
    check_dim(space, f)?;
    Ok(f.terms()
        .map(|(n, c)| c * Elementary::new(space, n).expectation(psi))
        .sum())
}

pub fn operator_norm(op: &DenseOperator) -> f64 {
    linalg::operator_norm(op)
}

/// `‖Op(f)Op(g) − Op(fg)‖`.
pub fn product_defect(space: HilbertSpace, f: &TrigPolynomial, g: &TrigPolynomial) -> Result<f64> {
    let fg = f.mul(g)?;
    let lhs = quantize_observable(space, f)? * quantize_observable(space, g)?;
    Ok(operator_norm(&(lhs - quantize_observable(space, &fg)?)))
}
