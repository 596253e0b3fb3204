//! Joint eigenspaces `H_{N,ξ}` of the operators `Op_N(e_n)`, `n ∈ Λ`, the
//! propagator restricted to them, and eigenstate statistics.
//!
//! Basis vectors are built as `P e_Q` with `P` the product of the averaging
//! projectors of the lattice generators. Each `P e_Q` is supported on the orbit
//! of `Q` under the shifts `n_{i,1}`; distinct orbits give orthogonal vectors,
//! so the basis is stored sparsely with one owner per position.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::classical::{sharp_coefficients, submanifold_average, SubmanifoldSpec};
use crate::error::{Error, Result};
use crate::lattice::{lambda_perp, omega, IntMatrix, Rational};
use crate::linalg::{self, CMatrix, UnitaryEigen};
use crate::propagator::LinearPropagator;
use crate::quantum::{e_frac, phase_table, Elementary, HilbertSpace, State};
use crate::trig::TrigPolynomial;

const NO_OWNER: u32 = u32::MAX;

/// Exponents `c_i` of the eigenvalues `e(c_i)` of `Op(e_{n_i})`.
pub type Character = Vec<Rational>;

#[derive(Clone, Debug, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    /// Empty when admissible; otherwise names the failing generators.
    pub diagnosis: Vec<String>,
}

/// `e(N c_i)` must equal the scalar `(−1)^{N n₁·n₂}` of `Op(e_{n_i})^N`.
pub fn character_admissible_for(n_big: usize, basis: &IntMatrix, character: &Character) -> Admissibility {
    let d = basis.cols() / 2;
    let mut diagnosis = Vec::new();
    for (i, c) in character.iter().enumerate() {
        let n = basis.row(i);
        let n1n2: i128 = (0..d).map(|j| n[j] as i128 * n[d + j] as i128).sum();
        let big = n_big as i128;
        let excess = *c * Rational::from_integer(big) - Rational::new(big * n1n2, 2);
        if !excess.is_integer() {
            diagnosis.push(format!(
                "generator {n:?}: e(N·{c}) differs from (−1)^(N·{n1n2}) at N={n_big}"
            ));
        }
    }
    Admissibility {
        admissible: diagnosis.is_empty(),
        diagnosis,
    }
}

/// Character `c_i = n_i·ξ` of the fixed point.
pub fn fixed_point_character(spec: &SubmanifoldSpec) -> Character {
    (0..spec.lattice.rank())
        .map(|i| {
            let (k, q) = spec.xi.pairing(spec.lattice.basis().row(i));
            Rational::new(k as i128, q as i128)
        })
        .collect()
}

pub fn character_admissible(space: HilbertSpace, spec: &SubmanifoldSpec) -> Admissibility {
    character_admissible_for(space.n(), spec.lattice.basis(), &fixed_point_character(spec))
}

#[derive(Clone, Debug)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<Complex64>,
}

/// Orthonormal basis (paper inner product) of a joint eigenspace.
#[derive(Clone, Debug)]
pub struct ScarSubspace {
    pub space: HilbertSpace,
    pub basis: Vec<SparseVector>,
    pub lattice_basis: IntMatrix,
    pub character: Character,
    /// `trace P` evaluated from the trace formula for `Op(e_m)`.
    pub trace_dimension: f64,
    owner: Vec<u32>,
    coeff: Vec<Complex64>,
}

pub const RANK_TOL: f64 = 1e-8;

/// `H_{N,ξ}` for the fixed point and lattice of `spec`.
pub fn build_scar_subspace(space: HilbertSpace, spec: &SubmanifoldSpec) -> Result<ScarSubspace> {
    if spec.lattice.d() != space.d() {
        return Err(Error::Dimension(format!(
            "lattice on d={}, Hilbert space on d={}",
            spec.lattice.d(),
            space.d()
        )));
    }
    let adm = character_admissible(space, spec);
    if !adm.admissible {
        return Err(Error::Precondition(adm.diagnosis.join("; ")));
    }
    let sub = build_joint_eigenspace(space, spec.lattice.basis(), &fixed_point_character(spec))?;
    let expected = space.n().pow((space.d() - spec.lattice.rank()) as u32);
    if sub.dim() != expected {
        return Err(Error::Dimension(format!(
            "joint eigenspace has rank {} (trace {}), expected N^(d−d₀) = {expected}",
            sub.dim(),
            sub.trace_dimension
        )));
    }
    Ok(sub)
}

/// Joint eigenspace `{ψ : Op(e_{n_i})ψ = e(c_i)ψ}` for commuting `n_i`.
pub fn build_joint_eigenspace(space: HilbertSpace, lattice_basis: &IntMatrix, character: &Character) -> Result<ScarSubspace> {
    let d = space.d();
    let d0 = lattice_basis.rows();
    let n = space.n();
    let dim = space.dim();
    if character.len() != d0 || lattice_basis.cols() != 2 * d {
        return Err(Error::Dimension("character length must equal lattice rank".into()));
    }
    let adm = character_admissible_for(n, lattice_basis, character);
    if !adm.admissible {
        return Err(Error::Precondition(adm.diagnosis.join("; ")));
    }
    let terms = n.checked_pow(d0 as u32).ok_or(Error::Overflow("projector term count"))?;
    // every lattice combination m = Σ k_i n_i with k ∈ [0, N)^{d0}: its shift
    // m₁ mod N and the coefficient e(−Σ k_i c_i) e(m₁·m₂/2N)
    let two_n = 2 * n as i128;
    let mut shifts: Vec<Vec<i64>> = Vec::with_capacity(terms);
    let mut consts: Vec<Complex64> = Vec::with_capacity(terms);
    let mut q2: Vec<Vec<i64>> = Vec::with_capacity(terms);
    let mut trace = Complex64::default();
    let mut k = vec![0usize; d0];
    for _ in 0..terms {
        let mut m = vec![0i64; 2 * d];
        let mut phase = Rational::from_integer(0);
        for (i, &ki) in k.iter().enumerate() {
            for (slot, &v) in m.iter_mut().zip(lattice_basis.row(i)) {
                *slot += ki as i64 * v;
            }
            phase -= character[i] * Rational::from_integer(ki as i128);
        }
        let m1m2: i128 = (0..d).map(|j| m[j] as i128 * m[d + j] as i128).sum();
        let frac = phase + Rational::new(m1m2, two_n);
        let c = e_frac(*frac.numer(), *frac.denom());
        if m[..d].iter().all(|x| x.rem_euclid(n as i64) == 0) && m[d..].iter().all(|x| x.rem_euclid(n as i64) == 0) {
            trace += c;
        }
        shifts.push(m[..d].iter().map(|x| x.rem_euclid(n as i64)).collect());
        q2.push(m[d..].to_vec());
        consts.push(c);
        for slot in k.iter_mut() {
            *slot += 1;
            if *slot < n {
                break;
            }
            *slot = 0;
        }
    }
    let norm_factor = 1.0 / terms as f64;
    let mut owner = vec![NO_OWNER; dim];
    let mut coeff = vec![Complex64::default(); dim];
    let mut visited = vec![false; dim];
    let mut basis = Vec::new();
    let mut acc: BTreeMap<usize, Complex64> = BTreeMap::new();
    for start in 0..dim {
        if visited[start] {
            continue;
        }
        acc.clear();
        let q = space.coords(start);
        for t in 0..terms {
            // Op(e_m) δ_Q = e(m₁·m₂/2N) e(m₂·(Q − m₁)/N) δ_{Q − m₁}
            let target: Vec<i64> = q.iter().zip(&shifts[t]).map(|(a, b)| a - b).collect();
            let tidx = space.index(&target);
            let dot: i128 = q2[t]
                .iter()
                .zip(&target)
                .map(|(&a, &b)| a as i128 * b.rem_euclid(n as i64) as i128)
                .sum();
            let val = consts[t] * e_frac(2 * dot, two_n) * norm_factor;
            *acc.entry(tidx).or_default() += val;
            visited[tidx] = true;
        }
        let norm_sq: f64 = acc.values().map(|v| v.norm_sqr()).sum::<f64>() / dim as f64;
        // a projected basis vector has norm² = ⟨Pδ_Q, δ_Q⟩ ≥ 1/(N^d · orbit), far above rounding
        if norm_sq.sqrt() * (dim as f64).sqrt() <= RANK_TOL {
            continue;
        }
        let id = basis.len() as u32;
        let scale = 1.0 / norm_sq.sqrt();
        let mut vec = SparseVector {
            indices: Vec::with_capacity(acc.len()),
            values: Vec::with_capacity(acc.len()),
        };
        let mut entries: Vec<(usize, Complex64)> = acc.iter().map(|(&i, &v)| (i, v * scale)).collect();
        let mut lead: Vec<Complex64> = entries.iter().map(|e| e.1).collect();
        linalg::fix_phase_first(&mut lead, 1e-14);
        for (e, v) in entries.iter_mut().zip(lead) {
            e.1 = v;
        }
        for (i, v) in entries {
            if v.norm() == 0.0 {
                continue;
            }
            owner[i] = id;
            coeff[i] = v;
            vec.indices.push(i as u32);
            vec.values.push(v);
        }
        basis.push(vec);
    }
    Ok(ScarSubspace {
        space,
        basis,
        lattice_basis: lattice_basis.clone(),
        character: character.clone(),
        trace_dimension: trace.re * dim as f64 * norm_factor,
        owner,
        coeff,
    })
}

impl ScarSubspace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Basis column `j` as a dense vector.
    pub fn column(&self, j: usize) -> State {
        let mut v = State::zeros(self.space.dim());
        for (&i, &c) in self.basis[j].indices.iter().zip(&self.basis[j].values) {
            v[i as usize] = c;
        }
        v
    }

    /// `Σ_j c_j b_j`.
    pub fn lift(&self, c: &[Complex64]) -> State {
        let mut v = State::zeros(self.space.dim());
        for (j, cj) in c.iter().enumerate() {
            for (&i, &b) in self.basis[j].indices.iter().zip(&self.basis[j].values) {
                v[i as usize] += cj * b;
            }
        }
        v
    }

    /// Coordinates `⟨y, b_i⟩` and the norm of the component of `y` orthogonal
    /// to the subspace (both in the normalized inner product `N^{−d} Σ`).
    pub fn project(&self, y: &[Complex64]) -> (Vec<Complex64>, f64) {
        let mut c = vec![Complex64::default(); self.dim()];
        let scale = 1.0 / self.space.dim() as f64;
        for (t, v) in y.iter().enumerate() {
            let o = self.owner[t];
            if o != NO_OWNER {
                c[o as usize] += v * self.coeff[t].conj() * scale;
            }
        }
        let outside: f64 = y
            .iter()
            .enumerate()
            .map(|(t, v)| match self.owner[t] {
                NO_OWNER => v.norm_sqr(),
                o => (v - c[o as usize] * self.coeff[t]).norm_sqr(),
            })
            .sum();
        (c, (outside * scale).sqrt())
    }

    /// `B* Op(e_n) B` computed from the sparse supports.
    pub fn compress_elementary(&self, n: &[i64]) -> CMatrix {
        let el = Elementary::new(self.space, n);
        let table = phase_table(self.space.n());
        let scale = 1.0 / self.space.dim() as f64;
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        el.for_each_entry(|t, s, k| {
            let (row, col) = (self.owner[t], self.owner[s]);
            if row != NO_OWNER && col != NO_OWNER {
                m[(row as usize, col as usize)] += table[k] * self.coeff[s] * self.coeff[t].conj() * scale;
            }
        });
        m
    }

    /// `B* Op(f) B`.
    pub fn compress_observable(&self, f: &TrigPolynomial) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for (n, c) in f.terms() {
            m += self.compress_elementary(n) * *c;
        }
        m
    }

    /// Largest `‖Op(e_{n_i}) b − e(c_i) b‖` over generators and basis columns.
    pub fn eigen_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.lattice_basis.rows() {
            let n = self.lattice_basis.row(i);
            let c = self.character[i];
            let lambda = e_frac(*c.numer(), *c.denom());
            let el = Elementary::new(self.space, n);
            for j in 0..self.dim() {
                let b = self.column(j);
                let diff = el.apply(b.as_slice()) - &b * lambda;
                worst = worst.max(self.space.norm(diff.as_slice()));
            }
        }
        worst
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.dim() {
            let (c, out) = self.project(self.column(j).as_slice());
            worst = worst.max(out);
            for (i, ci) in c.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ci - target).norm());
            }
        }
        worst
    }

    /// `B* X B` for an operator given by its action, plus the invariance defect
    /// `max_j ‖(I − P) X b_j‖` as a cheap proxy (see [`invariance_defect`]).
    pub fn restrict<F>(&self, mut apply: F) -> Result<(CMatrix, f64)>
    where
        F: FnMut(&[Complex64]) -> Result<State>,
    {
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim, dim);
        let mut worst: f64 = 0.0;
        for j in 0..dim {
            let y = apply(self.column(j).as_slice())?;
            let (c, out) = self.project(y.as_slice());
            worst = worst.max(out);
            for (i, ci) in c.into_iter().enumerate() {
                m[(i, j)] = ci;
            }
        }
        Ok((m, worst))
    }
}

/// `‖(I − P) X P‖` in operator norm, with `X` given by its action.
pub fn invariance_defect<F>(sub: &ScarSubspace, mut apply: F) -> Result<f64>
where
    F: FnMut(&[Complex64]) -> Result<State>,
{
    let dim = sub.dim();
    let size = sub.space.dim();
    if dim == 0 {
        return Ok(0.0);
    }
    let scale = 1.0 / (size as f64).sqrt();
    let mut residual = CMatrix::zeros(size, dim);
    for j in 0..dim {
        let y = apply(sub.column(j).as_slice())?;
        let (c, _) = sub.project(y.as_slice());
        let inside = sub.lift(&c);
        for t in 0..size {
            // columns rescaled to Euclidean unit norm
            residual[(t, j)] = (y[t] - inside[t]) * scale;
        }
    }
    Ok(linalg::operator_norm(&residual))
}

/// The propagator restricted to the subspace with its eigendecomposition.
#[derive(Clone, Debug)]
pub struct RestrictedPropagator {
    pub matrix: CMatrix,
    pub eigen: UnitaryEigen,
    pub invariance_defect: f64,
    pub unitarity_defect: f64,
}

pub const INVARIANCE_TOL: f64 = 1e-8;

fn finish(matrix: CMatrix, defect: f64) -> Result<RestrictedPropagator> {
    if defect > INVARIANCE_TOL {
        return Err(Error::Internal(format!(
            "subspace is not invariant: defect {defect:e} > {INVARIANCE_TOL:e}"
        )));
    }
    let eigen = linalg::unitary_eigen(&matrix)?;
    Ok(RestrictedPropagator {
        unitarity_defect: linalg::unitarity_defect(&matrix),
        matrix,
        eigen,
        invariance_defect: defect,
    })
}

/// Fast path: `(B* U_A B) · exp(2πiN B* Op(H) B)`, never leaving the subspace
/// except for the matrix-free application of `U_A` to basis columns.
pub fn restricted_propagator_fast(
    sub: &ScarSubspace,
    linear: &LinearPropagator,
    h: &TrigPolynomial,
) -> Result<RestrictedPropagator> {
    let (ua, defect_a) = sub.restrict(|v| Ok(linear.apply(v)))?;
    let oph = sub.compress_observable(h);
    let uh = linalg::hermitian_exp_i(&oph, 2.0 * std::f64::consts::PI * sub.space.n() as f64);
    finish(ua * uh, defect_a)
}

/// Reference path: restrict a full-space propagator given as a dense matrix.
pub fn restricted_propagator_full(sub: &ScarSubspace, u_total: &CMatrix) -> Result<RestrictedPropagator> {
    let (m, defect) = sub.restrict(|v| Ok(u_total * State::from_column_slice(v)))?;
    finish(m, defect)
}

/// Eigenvector coefficient columns as vectors.
pub fn eigen_columns(eigen: &UnitaryEigen) -> Vec<Vec<Complex64>> {
    (0..eigen.vectors.ncols())
        .map(|j| eigen.vectors.column(j).iter().copied().collect())
        .collect()
}

fn quadratic_form(m: &CMatrix, c: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::default();
    for i in 0..c.len() {
        let mut row = Complex64::default();
        for j in 0..c.len() {
            row += m[(i, j)] * c[j];
        }
        acc += c[i].conj() * row;
    }
    acc
}

/// `⟨Op(e_n)ψ_i, ψ_i⟩` for every eigenstate `i`.
pub fn wigner_values(sub: &ScarSubspace, eigen: &UnitaryEigen, n: &[i64]) -> Vec<Complex64> {
    let m = sub.compress_elementary(n);
    let prod = &m * &eigen.vectors;
    (0..eigen.vectors.ncols())
        .map(|i| {
            eigen
                .vectors
                .column(i)
                .iter()
                .zip(prod.column(i).iter())
                .map(|(c, v)| c.conj() * v)
                .sum()
        })
        .collect()
}

/// `⟨Op(f)ψ_i, ψ_i⟩` for every eigenstate `i`.
pub fn wigner_observable_values(sub: &ScarSubspace, eigen: &UnitaryEigen, f: &TrigPolynomial) -> Vec<Complex64> {
    let m = sub.compress_observable(f);
    eigen_columns(eigen).iter().map(|c| quadratic_form(&m, c)).collect()
}

#[derive(Clone, Debug)]
pub struct WignerRow {
    pub state_index: usize,
    pub eigenphase: f64,
    pub freq: Vec<i64>,
    pub value: Complex64,
}

pub fn wigner_table(sub: &ScarSubspace, eigen: &UnitaryEigen, freqs: &[Vec<i64>]) -> Vec<WignerRow> {
    let per_freq: Vec<Vec<Complex64>> = freqs.iter().map(|n| wigner_values(sub, eigen, n)).collect();
    let mut rows = Vec::with_capacity(freqs.len() * sub.dim());
    for i in 0..eigen.phases.len() {
        for (n, vals) in freqs.iter().zip(&per_freq) {
            rows.push(WignerRow {
                state_index: i,
                eigenphase: eigen.phases[i],
                freq: n.clone(),
                value: vals[i],
            });
        }
    }
    rows
}

#[derive(Clone, Debug, PartialEq)]
pub struct AverageWigner {
    pub freq: Vec<i64>,
    /// `(1/dim) Σ_i W_i(e_n) = (1/dim) tr(P Op(e_n))`.
    pub average: Complex64,
    /// `e_n(ξ)` for `n ∈ Λ`, zero otherwise.
    pub exact: Complex64,
    /// No `m ∈ Λ` and no `k ∈ Λ^⊥` has `ω(n, ·) ≢ 0 mod N`, so the exact
    /// value is not forced to vanish.
    pub resonant: bool,
}

/// `(1/dim) tr` of the compression; independent of the eigenbasis.
pub fn average_wigner(sub: &ScarSubspace, spec: &SubmanifoldSpec, n: &[i64]) -> Result<AverageWigner> {
    average_wigner_with(sub, spec, &lambda_perp(&spec.lattice)?, n)
}

/// [`average_wigner`] with a precomputed basis of `Λ^⊥`.
pub fn average_wigner_with(sub: &ScarSubspace, spec: &SubmanifoldSpec, perp: &IntMatrix, n: &[i64]) -> Result<AverageWigner> {
    let m = sub.compress_elementary(n);
    let dim = sub.dim().max(1) as f64;
    let average = m.trace() / dim;
    if spec.lattice.contains(n) {
        return Ok(AverageWigner {
            freq: n.to_vec(),
            average,
            exact: spec.xi.character(n),
            resonant: false,
        });
    }
    let big = sub.space.n() as i64;
    let lattice_rows = (0..spec.lattice.rank()).map(|i| spec.lattice.basis().row(i));
    let perp_rows = (0..perp.rows()).map(|i| perp.row(i));
    let witnessed = lattice_rows
        .chain(perp_rows)
        .any(|k| omega(n, k).rem_euclid(big) != 0);
    Ok(AverageWigner {
        freq: n.to_vec(),
        average,
        exact: Complex64::default(),
        resonant: !witnessed,
    })
}

/// `σ²_N(f) = (1/dim) Σ_i |W_i(f) − ∫_{X_ξ} f|²`.
pub fn quantum_variance(sub: &ScarSubspace, eigen: &UnitaryEigen, spec: &SubmanifoldSpec, f: &TrigPolynomial) -> f64 {
    let mean = submanifold_average(f, spec);
    let vals = wigner_observable_values(sub, eigen, f);
    if vals.is_empty() {
        return 0.0;
    }
    vals.iter().map(|w| (w - mean).norm_sqr()).sum::<f64>() / vals.len() as f64
}

/// Nonzero integer vectors with Euclidean norm at most `radius`.
pub fn frequencies_within(d: usize, radius: f64) -> Vec<Vec<i64>> {
    let r = radius.floor() as i64;
    let width = (2 * r + 1) as usize;
    let total = width.pow((2 * d) as u32);
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut v = vec![0i64; 2 * d];
        for slot in v.iter_mut() {
            *slot = (c % width) as i64 - r;
            c /= width;
        }
        let norm_sq: i64 = v.iter().map(|x| x * x).sum();
        if norm_sq > 0 && (norm_sq as f64) <= radius * radius + 1e-9 {
            out.push(v);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityReport {
    /// Eigenstates with `|W_i(e_n)| ≥ √σ_N(n)` and `|W_i(e_n)| > 0` for some
    /// admissible `n`.
    pub exceptional: Vec<usize>,
    pub fraction: f64,
    /// `Σ_n σ_N(n)`, the Chebyshev bound on `fraction`.
    pub bound: f64,
    pub frequencies: usize,
}

/// Exceptional set over all `n ∉ Λ` with `‖n‖ ≤ radius`.
pub fn density_one_report(sub: &ScarSubspace, eigen: &UnitaryEigen, spec: &SubmanifoldSpec, radius: f64) -> DensityReport {
    let dim = eigen.phases.len();
    let mut flagged = vec![false; dim];
    let mut bound = 0.0;
    let mut count = 0;
    for n in frequencies_within(sub.space.d(), radius) {
        if spec.lattice.contains(&n) {
            continue;
        }
        count += 1;
        let vals = wigner_values(sub, eigen, &n);
        let sigma = (vals.iter().map(|w| w.norm_sqr()).sum::<f64>() / dim.max(1) as f64).sqrt();
        bound += sigma;
        let threshold = sigma.sqrt();
        for (i, w) in vals.iter().enumerate() {
            let a = w.norm();
            if a > 0.0 && a >= threshold {
                flagged[i] = true;
            }
        }
    }
    let exceptional: Vec<usize> = (0..dim).filter(|&i| flagged[i]).collect();
    DensityReport {
        fraction: exceptional.len() as f64 / dim.max(1) as f64,
        exceptional,
        bound,
        frequencies: count,
    }
}

/// Relative level at which `f♯` counts as identically zero.
pub const SHARP_ZERO_TOL: f64 = 1e-14;

/// `C_f = π Σ_k |f̂(k)| |ω(n, m)|` with `k = n + m` split by class
/// representative `n` and `m ∈ Λ`. Fails unless `f♯ ≡ 0`.
pub fn scarring_constant(f: &TrigPolynomial, spec: &SubmanifoldSpec) -> Result<f64> {
    let scale = f.l1_norm().max(f64::MIN_POSITIVE);
    let sharp = sharp_coefficients(f, spec);
    if let Some((n, c)) = sharp.iter().find(|(_, c)| c.norm() > SHARP_ZERO_TOL * scale) {
        return Err(Error::Precondition(format!(
            "observable does not vanish on the submanifold: f♯({n:?}) = {c}"
        )));
    }
    Ok(std::f64::consts::PI
        * f.terms()
            .map(|(k, c)| {
                let (n, m) = spec.reps.canonical_split(k);
                c.norm() * omega(&n, &m).unsigned_abs() as f64
            })
            .sum::<f64>())
}

/// Values of `max_i |W_i(f)|` at or below this multiple of `‖f̂‖₁` are zero
/// up to rounding.
pub const EXACT_ZERO_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ScarringPoint {
    pub n: usize,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScarringSweep {
    pub c_f: f64,
    pub points: Vec<ScarringPoint>,
    /// Least-squares slope of `log max_abs` against `log N` over the points
    /// above the exact-zero floor; `-∞` when fewer than two remain because the
    /// values vanish identically.
    pub slope: f64,
    pub bound_holds: bool,
}

pub fn scarring_point(sub: &ScarSubspace, eigen: &UnitaryEigen, f: &TrigPolynomial, c_f: f64) -> ScarringPoint {
    let vals = wigner_observable_values(sub, eigen, f);
    let abs: Vec<f64> = vals.iter().map(|w| w.norm()).collect();
    ScarringPoint {
        n: sub.space.n(),
        max_abs: abs.iter().copied().fold(0.0, f64::max),
        mean_abs: abs.iter().sum::<f64>() / abs.len().max(1) as f64,
        bound: c_f / sub.space.n() as f64,
    }
}

pub fn summarize_scarring(f: &TrigPolynomial, c_f: f64, points: Vec<ScarringPoint>) -> Result<ScarringSweep> {
    let floor = EXACT_ZERO_FLOOR * f.l1_norm();
    let bound_holds = points.iter().all(|p| p.max_abs <= p.bound + floor);
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.max_abs > floor)
        .map(|p| (p.n as f64, p.max_abs))
        .unzip();
    let slope = if xs.len() >= 2 {
        linalg::log_log_slope(&xs, &ys)?
    } else {
        f64::NEG_INFINITY
    };
    Ok(ScarringSweep {
        c_f,
        points,
        slope,
        bound_holds,
    })
}
