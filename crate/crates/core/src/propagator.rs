//! Quantum propagators: `U_N(A)` from the exact intertwining relation
//! `Op(e_g) U = U Op(e_{gA})`, `U_N(φ_H) = exp(2πiN Op(H))` and their product.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::SymplecticMatrix;
use crate::linalg::{self, CMatrix};
use crate::quantum::{self, e_frac, DenseOperator, Elementary, HilbertSpace, State};
use crate::trig::TrigPolynomial;

/// Largest `N^{2d}` accepted by the generic intertwiner solver.
pub const GENERIC_COST_CAP: usize = 65_536;
/// Largest dimension for which a full dense check of a propagator is run.
pub const DENSE_CHECK_LIMIT: usize = 1024;

/// A unitary `U_N(A)` stored in the cheapest exact form available.
#[derive(Clone, Debug)]
pub enum LinearPropagator {
    Dense {
        space: HilbertSpace,
        matrix: DenseOperator,
    },
    /// `(Uψ)(Q) = ψ(source[Q])`.
    Permutation {
        space: HilbertSpace,
        source: Vec<usize>,
    },
    /// Kronecker product over consecutive groups of position coordinates.
    Tensor {
        space: HilbertSpace,
        factors: Vec<LinearPropagator>,
    },
}

impl LinearPropagator {
    pub fn space(&self) -> HilbertSpace {
        match self {
            Self::Dense { space, .. } | Self::Permutation { space, .. } | Self::Tensor { space, .. } => *space,
        }
    }

    pub fn apply(&self, psi: &[Complex64]) -> State {
        match self {
            Self::Dense { matrix, .. } => matrix * State::from_column_slice(psi),
            Self::Permutation { source, .. } => State::from_iterator(psi.len(), source.iter().map(|&s| psi[s])),
            Self::Tensor { factors, .. } => {
                let mut cur = State::from_column_slice(psi);
                let dims: Vec<usize> = factors.iter().map(|f| f.space().dim()).collect();
                for (i, f) in factors.iter().enumerate() {
                    let inner: usize = dims[i + 1..].iter().product();
                    let outer: usize = dims[..i].iter().product();
                    let di = dims[i];
                    let mut buf = vec![Complex64::default(); di];
                    for o in 0..outer {
                        for r in 0..inner {
                            let base = o * di * inner + r;
                            for (x, slot) in buf.iter_mut().enumerate() {
                                *slot = cur[base + x * inner];
                            }
                            let out = f.apply(&buf);
                            for x in 0..di {
                                cur[base + x * inner] = out[x];
                            }
                        }
                    }
                }
                cur
            }
        }
    }

    /// `U* ψ`.
    pub fn apply_adjoint(&self, psi: &[Complex64]) -> State {
        match self {
            Self::Dense { matrix, .. } => matrix.adjoint() * State::from_column_slice(psi),
            Self::Permutation { source, .. } => {
                let mut out = State::zeros(psi.len());
                for (t, &s) in source.iter().enumerate() {
                    out[s] = psi[t];
                }
                out
            }
            Self::Tensor { space, factors } => {
                let adj: Vec<LinearPropagator> = factors
                    .iter()
                    .map(|f| LinearPropagator::Dense {
                        space: f.space(),
                        matrix: f.dense().adjoint(),
                    })
                    .collect();
                Self::Tensor {
                    space: *space,
                    factors: adj,
                }
                .apply(psi)
            }
        }
    }

    pub fn dense(&self) -> DenseOperator {
        match self {
            Self::Dense { matrix, .. } => matrix.clone(),
            Self::Permutation { space, source } => {
                let dim = space.dim();
                let mut m = DenseOperator::zeros(dim, dim);
                for (t, &s) in source.iter().enumerate() {
                    m[(t, s)] = Complex64::new(1.0, 0.0);
                }
                m
            }
            Self::Tensor { factors, .. } => factors
                .iter()
                .map(|f| f.dense())
                .reduce(|a, b| a.kronecker(&b))
                .expect("tensor has at least one factor"),
        }
    }
}

/// `U_N(A)` together with the evidence that it satisfies exact Egorov.
#[derive(Clone, Debug)]
pub struct QuantizedLinear {
    pub op: LinearPropagator,
    /// Residual per standard generator (ordered `p_1..p_d, q_1..q_d`).
    pub generator_residuals: Vec<f64>,
    /// Dimension of the solution space of the intertwining system, per factor.
    pub null_dimensions: Vec<usize>,
}

impl QuantizedLinear {
    pub fn max_residual(&self) -> f64 {
        self.generator_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Builds `U_N(A)`: tensor factors over uncoupled coordinate groups, a position
/// permutation for block-diagonal factors, and the exact intertwiner solver
/// otherwise. Every candidate is validated against the generators.
pub fn quantize_linear(a: &SymplecticMatrix, space: HilbertSpace, tol: f64) -> Result<QuantizedLinear> {
    check_space(a, space)?;
    let groups = coupled_groups(a);
    if groups.len() > 1 && groups_are_consecutive(&groups) {
        let mut factors = Vec::new();
        let mut residuals = vec![0.0; 2 * a.d()];
        let mut dims = Vec::new();
        for g in &groups {
            let sub = a.sub_block(g).ok_or_else(|| Error::Internal("coupling groups are not closed".into()))?;
            let sub_space = HilbertSpace::new(space.n(), g.len())?;
            let q = quantize_leaf(&sub, sub_space, tol)?;
            for (k, &j) in g.iter().enumerate() {
                residuals[j] = q.generator_residuals[k];
                residuals[a.d() + j] = q.generator_residuals[g.len() + k];
            }
            dims.extend(q.null_dimensions);
            factors.push(q.op);
        }
        return Ok(QuantizedLinear {
            op: LinearPropagator::Tensor { space, factors },
            generator_residuals: residuals,
            null_dimensions: dims,
        });
    }
    quantize_leaf(a, space, tol)
}

fn quantize_leaf(a: &SymplecticMatrix, space: HilbertSpace, tol: f64) -> Result<QuantizedLinear> {
    if let Some(source) = permutation_candidate(a, space) {
        let op = LinearPropagator::Permutation { space, source };
        let residuals = generator_residuals(&op, a)?;
        if residuals.iter().all(|&r| r <= tol) {
            return Ok(QuantizedLinear {
                op,
                generator_residuals: residuals,
                null_dimensions: vec![1],
            });
        }
    }
    let matrix = solve_intertwiner(a, space)?;
    let op = LinearPropagator::Dense { space, matrix };
    let residuals = generator_residuals(&op, a)?;
    if let Some(r) = residuals.iter().find(|&&r| r > tol) {
        return Err(Error::Internal(format!(
            "intertwiner fails generator validation: residual {r:e} > {tol:e}"
        )));
    }
    Ok(QuantizedLinear {
        op,
        generator_residuals: residuals,
        null_dimensions: vec![1],
    })
}

fn check_space(a: &SymplecticMatrix, space: HilbertSpace) -> Result<()> {
    if a.d() != space.d() {
        return Err(Error::Dimension(format!(
            "matrix acts on d={}, Hilbert space has d={}",
            a.d(),
            space.d()
        )));
    }
    Ok(())
}

/// Connected components of coordinate pairs `j ↔ (p_j, q_j)` coupled by `A`.
pub fn coupled_groups(a: &SymplecticMatrix) -> Vec<Vec<usize>> {
    let d = a.d();
    let m = a.matrix();
    let coupled = |j: usize, k: usize| {
        [j, d + j]
            .iter()
            .any(|&r| [k, d + k].iter().any(|&c| m[(r, c)] != 0 || m[(c, r)] != 0))
    };
    let mut label: Vec<Option<usize>> = vec![None; d];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for start in 0..d {
        if label[start].is_some() {
            continue;
        }
        let id = groups.len();
        let mut stack = vec![start];
        let mut members = Vec::new();
        label[start] = Some(id);
        while let Some(j) = stack.pop() {
            members.push(j);
            for k in 0..d {
                if label[k].is_none() && coupled(j, k) {
                    label[k] = Some(id);
                    stack.push(k);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }
    groups
}

fn groups_are_consecutive(groups: &[Vec<usize>]) -> bool {
    let flat: Vec<usize> = groups.iter().flatten().copied().collect();
    flat.iter().enumerate().all(|(i, &j)| i == j)
        && groups.iter().all(|g| g.windows(2).all(|w| w[1] == w[0] + 1))
}

/// For `A = diag(P, P^{−T})`, the source map of `(Uψ)(Q) = ψ(PᵀQ mod N)`.
fn permutation_candidate(a: &SymplecticMatrix, space: HilbertSpace) -> Option<Vec<usize>> {
    let d = a.d();
    let m = a.matrix();
    let block_diagonal = (0..d).all(|j| (0..d).all(|k| m[(j, d + k)] == 0 && m[(d + j, k)] == 0));
    if !block_diagonal {
        return None;
    }
    let source = (0..space.dim())
        .map(|t| {
            let q = space.coords(t);
            // (PᵀQ)_k = Σ_j P_jk Q_j
            let image: Vec<i64> = (0..d).map(|k| (0..d).map(|j| m[(j, k)] * q[j]).sum()).collect();
            space.index(&image)
        })
        .collect();
    Some(source)
}

fn unit(len: usize, i: usize) -> Vec<i64> {
    let mut v = vec![0; len];
    v[i] = 1;
    v
}

/// `‖U* Op(e_g) U − Op(e_{gA})‖` for each standard generator `g`.
pub fn generator_residuals(op: &LinearPropagator, a: &SymplecticMatrix) -> Result<Vec<f64>> {
    let d = a.d();
    (0..2 * d)
        .map(|i| frequency_residual(op, a, &unit(2 * d, i)))
        .collect()
}

/// `‖U* Op(e_n) U − Op(e_{nA})‖` computed exactly for permutations and
/// densely for small operators.
pub fn frequency_residual(op: &LinearPropagator, a: &SymplecticMatrix, n: &[i64]) -> Result<f64> {
    let space = op.space();
    let h = a.act_on_frequency(n);
    match op {
        LinearPropagator::Permutation { source, .. } => {
            // Op(e_n) U and U Op(e_{nA}) are both monomial; compare row by row.
            let eg = Elementary::new(space, n).entries();
            let eh = Elementary::new(space, &h).entries();
            let table = quantum::phase_table(space.n());
            let mut worst: f64 = 0.0;
            for t in 0..space.dim() {
                let (sg, kg) = eg[t];
                let (lhs_src, lhs_phase) = (source[sg], table[kg]);
                let (rhs_src, kh) = eh[source[t]];
                let diff = if lhs_src == rhs_src {
                    (lhs_phase - table[kh]).norm()
                } else {
                    2f64.sqrt()
                };
                worst = worst.max(diff);
            }
            Ok(worst)
        }
        _ if space.dim() <= DENSE_CHECK_LIMIT => {
            let u = op.dense();
            let lhs = u.adjoint() * quantum::elementary_dense(space, n) * &u;
            Ok(linalg::operator_norm(&(lhs - quantum::elementary_dense(space, &h))))
        }
        _ => Err(Error::CostCap(format!(
            "dense residual check at dimension {} exceeds {DENSE_CHECK_LIMIT}",
            space.dim()
        ))),
    }
}

/// Weighted union-find whose potentials are exponents `k` of `e(k/2N)`.
struct PhaseForest {
    parent: Vec<u32>,
    potential: Vec<u32>,
    broken: Vec<bool>,
    modulus: u32,
}

impl PhaseForest {
    fn new(size: usize, modulus: u32) -> Self {
        Self {
            parent: (0..size as u32).collect(),
            potential: vec![0; size],
            broken: vec![false; size],
            modulus,
        }
    }

    /// Root of `x` and `p` with `value(x) = e(p/2N) value(root)`.
    fn find(&mut self, x: usize) -> (usize, u32) {
        let mut path = Vec::new();
        let mut cur = x;
        while self.parent[cur] as usize != cur {
            path.push(cur);
            cur = self.parent[cur] as usize;
        }
        let root = cur;
        // compress from the node nearest the root outward
        let mut acc = 0u32;
        for &node in path.iter().rev() {
            acc = (acc + self.potential[node]) % self.modulus;
            self.potential[node] = acc;
            self.parent[node] = root as u32;
        }
        (root, if x == root { 0 } else { self.potential[x] })
    }

    /// Imposes `value(x) = e(k/2N) value(y)`.
    fn relate(&mut self, x: usize, y: usize, k: u32) {
        let (rx, px) = self.find(x);
        let (ry, py) = self.find(y);
        let m = self.modulus;
        // value(rx) = e((k + py − px)/2N) value(ry)
        let rel = (k + py + m - px) % m;
        if rx == ry {
            if rel != 0 {
                self.broken[rx] = true;
            }
            return;
        }
        self.parent[rx] = ry as u32;
        self.potential[rx] = rel;
        if self.broken[rx] {
            self.broken[ry] = true;
        }
    }
}

/// Exact solution of the intertwining system. Each constraint links two matrix
/// entries by a root of unity, so the solution space is spanned by the
/// consistent connected components of the constraint graph.
pub fn solve_intertwiner(a: &SymplecticMatrix, space: HilbertSpace) -> Result<DenseOperator> {
    let (components, values) = intertwiner_components(a, space)?;
    let dim = space.dim();
    let two_n = 2 * space.n() as u32;
    match components {
        0 => {
            return Err(Error::ParityObstruction {
                n: space.n(),
                detail: "the intertwining system has only the zero solution".into(),
            })
        }
        1 => {}
        k => {
            return Err(Error::Internal(format!(
                "intertwining solution space has dimension {k}"
            )))
        }
    }
    let count = values.iter().filter(|v| v.is_some()).count();
    let scale = (dim as f64 / count as f64).sqrt();
    let first = values.iter().flatten().next().copied().expect("one consistent component");
    let mut u = DenseOperator::zeros(dim, dim);
    for (x, v) in values.iter().enumerate() {
        if let Some(p) = v {
            let k = (*p as i128 - first as i128).rem_euclid(two_n as i128);
            u[(x / dim, x % dim)] = e_frac(k, two_n as i128) * scale;
        }
    }
    let defect = linalg::unitarity_defect(&u);
    if defect > 1e-10 {
        return Err(Error::Internal(format!(
            "normalized intertwiner is not unitary (defect {defect:e})"
        )));
    }
    Ok(u)
}

/// Exact dimension of the solution space of the intertwining system.
pub fn intertwiner_null_dimension(a: &SymplecticMatrix, space: HilbertSpace) -> Result<usize> {
    Ok(intertwiner_components(a, space)?.0)
}

/// Number of consistent components and the phase potential of every entry
/// lying in one.
fn intertwiner_components(a: &SymplecticMatrix, space: HilbertSpace) -> Result<(usize, Vec<Option<u32>>)> {
    check_space(a, space)?;
    let dim = space.dim();
    if dim.saturating_mul(dim) > GENERIC_COST_CAP {
        return Err(Error::CostCap(format!(
            "generic intertwiner at N^(2d) = {} exceeds {GENERIC_COST_CAP}",
            dim * dim
        )));
    }
    let two_n = 2 * space.n() as u32;
    let mut forest = PhaseForest::new(dim * dim, two_n);
    for i in 0..2 * a.d() {
        let g = unit(2 * a.d(), i);
        let h = a.act_on_frequency(&g);
        let eg = Elementary::new(space, &g).entries();
        let eh = Elementary::new(space, &h).entries();
        let mut inv_h = vec![0usize; dim];
        for (c, &(s, _)) in eh.iter().enumerate() {
            inv_h[s] = c;
        }
        for (row, &(sa, kga)) in eg.iter().enumerate() {
            for (b, &c) in inv_h.iter().enumerate() {
                // e(kg(a)) U[a+g₁, b] = e(kh(c)) U[a, c],  c + h₁ = b
                let kh = eh[c].1 as u32;
                let k = (kh + two_n - kga as u32) % two_n;
                forest.relate(sa * dim + b, row * dim + c, k);
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut values = vec![None; dim * dim];
    for (x, slot) in values.iter_mut().enumerate() {
        let (r, p) = forest.find(x);
        if !forest.broken[r] {
            if !roots.contains(&r) {
                roots.push(r);
            }
            *slot = Some(p);
        }
    }
    Ok((roots.len(), values))
}

/// Independent construction for small systems: stack the linear constraints,
/// take the numerical null space and project its element onto the unitaries.
/// Returns the null-space dimension and, when it is 1, the canonical unitary.
pub fn solve_intertwiner_svd(a: &SymplecticMatrix, space: HilbertSpace) -> Result<(usize, Option<DenseOperator>)> {
    check_space(a, space)?;
    let dim = space.dim();
    let vars = dim * dim;
    if vars > 1024 {
        return Err(Error::CostCap(format!("dense null-space solve with {vars} unknowns")));
    }
    let rows = 2 * a.d() * vars;
    let mut stacked = CMatrix::zeros(rows, vars);
    let id = CMatrix::identity(dim, dim);
    for i in 0..2 * a.d() {
        let g = unit(2 * a.d(), i);
        let h = a.act_on_frequency(&g);
        let og = quantum::elementary_dense(space, &g);
        let oh = quantum::elementary_dense(space, &h);
        // vec(Og U − U Oh) = (Og ⊗ I − I ⊗ Ohᵀ) vec_row(U)
        let c = og.kronecker(&id) - id.kronecker(&oh.transpose());
        stacked.view_mut((i * vars, 0), (vars, vars)).copy_from(&c);
    }
    let svd = stacked.svd(false, true);
    let sigma = &svd.singular_values;
    let v_t = svd.v_t.expect("requested");
    let cutoff = 1e-8 * sigma.max();
    let null: Vec<usize> = (0..vars).filter(|&j| sigma[j] <= cutoff).collect();
    if null.len() != 1 {
        return Ok((null.len(), None));
    }
    let v = v_t.row(null[0]).adjoint();
    let u0 = CMatrix::from_fn(dim, dim, |r, c| v[r * dim + c]);
    let svd = u0.svd(true, true);
    let (w, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let mut u = w * vt;
    // row-major scan for the first nonzero entry
    let lead = (0..dim)
        .flat_map(|r| (0..dim).map(move |c| (r, c)))
        .find(|&(r, c)| u[(r, c)].norm() > 1e-8);
    if let Some((r, c)) = lead {
        let z = u[(r, c)];
        u *= z.conj() / z.norm();
    }
    Ok((1, Some(u)))
}

/// `exp(2πiN Op_N(H))`.
pub fn quantize_hamiltonian(h: &TrigPolynomial, space: HilbertSpace) -> Result<DenseOperator> {
    h.require_real(1e-12)?;
    let op = quantum::quantize_observable(space, h)?;
    Ok(linalg::hermitian_exp_i(&op, 2.0 * PI * space.n() as f64))
}

#[derive(Clone, Debug)]
pub struct Validation {
    pub generator_residuals: Vec<f64>,
    pub unitarity_linear: f64,
    pub unitarity_hamiltonian: f64,
    pub unitarity_total: f64,
}

#[derive(Clone, Debug)]
pub struct PropagatorBundle {
    pub space: HilbertSpace,
    pub linear: LinearPropagator,
    pub u_linear: DenseOperator,
    pub u_hamiltonian: DenseOperator,
    pub u_total: DenseOperator,
    pub validation: Validation,
}

/// `U_N(Φ) = U_N(A) U_N(φ_H)` in dense form.
pub fn quantize_perturbed(
    a: &SymplecticMatrix,
    h: &TrigPolynomial,
    space: HilbertSpace,
    tol: f64,
) -> Result<PropagatorBundle> {
    let lin = quantize_linear(a, space, tol)?;
    let u_linear = lin.op.dense();
    let u_hamiltonian = quantize_hamiltonian(h, space)?;
    let u_total = &u_linear * &u_hamiltonian;
    let validation = Validation {
        generator_residuals: lin.generator_residuals.clone(),
        unitarity_linear: linalg::unitarity_defect(&u_linear),
        unitarity_hamiltonian: linalg::unitarity_defect(&u_hamiltonian),
        unitarity_total: linalg::unitarity_defect(&u_total),
    };
    Ok(PropagatorBundle {
        space,
        linear: lin.op,
        u_linear,
        u_hamiltonian,
        u_total,
        validation,
    })
}

/// `‖U* Op(f) U − Op(pushforward)‖`.
pub fn egorov_residual(
    u: &DenseOperator,
    space: HilbertSpace,
    f: &TrigPolynomial,
    pushforward: &TrigPolynomial,
) -> Result<f64> {
    let lhs = u.adjoint() * quantum::quantize_observable(space, f)? * u;
    Ok(linalg::operator_norm(&(lhs - quantum::quantize_observable(space, pushforward)?)))
}

/// Shared `U_N(A)` instances keyed by `(A, N)`.
#[derive(Default)]
pub struct PropagatorCache {
    entries: RwLock<HashMap<(SymplecticMatrix, usize), Arc<QuantizedLinear>>>,
}

impl PropagatorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_build(&self, a: &SymplecticMatrix, space: HilbertSpace, tol: f64) -> Result<Arc<QuantizedLinear>> {
        let key = (a.clone(), space.n());
        if let Some(hit) = self.entries.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let built = Arc::new(quantize_linear(a, space, tol)?);
        let mut guard = self.entries.write().expect("cache lock");
        Ok(Arc::clone(guard.entry(key).or_insert(built)))
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{validate_symplectic, IntMatrix};
    use crate::linalg::max_abs;

    fn sym(rows: &[&[i64]]) -> SymplecticMatrix {
        let v: Vec<Vec<i64>> = rows.iter().map(|r| r.to_vec()).collect();
        validate_symplectic(&IntMatrix::from_rows(&v, v.len()).unwrap()).unwrap()
    }

    fn cat() -> SymplecticMatrix {
        sym(&[&[2, 1], &[3, 2]])
    }

    fn block() -> SymplecticMatrix {
        sym(&[&[2, 1, 0, 0], &[1, 1, 0, 0], &[0, 0, 1, -1], &[0, 0, -1, 2]])
    }

    fn space(n: usize, d: usize) -> HilbertSpace {
        HilbertSpace::new(n, d).unwrap()
    }

    #[test]
    fn identity_matrix_gives_identity() {
        let a = sym(&[&[1, 0], &[0, 1]]);
        let u = quantize_linear(&a, space(7, 1), 1e-10).unwrap().op.dense();
        assert!(max_abs(&(u - DenseOperator::identity(7, 7))) < 1e-12);
    }

    #[test]
    fn cat_map_intertwiner_exists_for_all_small_n() {
        for n in 3..=32 {
            let q = quantize_linear(&cat(), space(n, 1), 1e-8).unwrap();
            assert_eq!(q.null_dimensions, vec![1]);
            assert!(q.max_residual() <= 1e-8, "N={n}: {}", q.max_residual());
        }
    }

    #[test]
    fn union_find_matches_dense_null_space() {
        for n in [3, 4, 5] {
            let sp = space(n, 1);
            let exact = solve_intertwiner(&cat(), sp).unwrap();
            let (dim, svd) = solve_intertwiner_svd(&cat(), sp).unwrap();
            assert_eq!(dim, 1);
            assert!(max_abs(&(exact - svd.unwrap())) < 1e-8, "N={n}");
        }
    }

    #[test]
    fn parity_obstruction_for_odd_n() {
        let a = sym(&[&[2, 1], &[1, 1]]);
        for n in [3, 5, 7] {
            assert!(matches!(
                solve_intertwiner(&a, space(n, 1)),
                Err(Error::ParityObstruction { .. })
            ));
            assert_eq!(solve_intertwiner_svd(&a, space(n, 1)).unwrap().0, 0);
        }
        for n in [4, 6] {
            assert!(quantize_linear(&a, space(n, 1), 1e-8).is_ok());
        }
    }

    #[test]
    fn permutation_matches_generic() {
        for n in [3, 4, 8] {
            let sp = space(n, 2);
            let q = quantize_linear(&block(), sp, 1e-10).unwrap();
            assert!(matches!(q.op, LinearPropagator::Permutation { .. }));
            let generic = solve_intertwiner(&block(), sp).unwrap();
            assert!(max_abs(&(q.op.dense() - generic)) < 1e-8, "N={n}");
        }
    }

    #[test]
    fn all_small_frequencies_follow_exact_egorov() {
        let a = block();
        let sp = space(5, 2);
        let q = quantize_linear(&a, sp, 1e-10).unwrap();
        let dense = LinearPropagator::Dense { space: sp, matrix: q.op.dense() };
        for x in -3i64..=3 {
            for y in -3i64..=3 {
                let n = [x, y, (x * y) % 4, x - y];
                assert!(frequency_residual(&q.op, &a, &n).unwrap() <= 1e-9);
                assert!(frequency_residual(&dense, &a, &n).unwrap() <= 1e-9);
            }
        }
        let c = cat();
        let q = quantize_linear(&c, space(9, 1), 1e-10).unwrap();
        for x in -3i64..=3 {
            for y in -3i64..=3 {
                assert!(frequency_residual(&q.op, &c, &[x, y]).unwrap() <= 1e-9);
            }
        }
    }

    #[test]
    fn tensor_product_over_summands() {
        let a = sym(&[
            &[2, 1, 0, 0, 0, 0],
            &[1, 1, 0, 0, 0, 0],
            &[0, 0, 2, 0, 0, 1],
            &[0, 0, 0, 1, -1, 0],
            &[0, 0, 0, -1, 2, 0],
            &[0, 0, 3, 0, 0, 2],
        ]);
        let sp = space(4, 3);
        let q = quantize_linear(&a, sp, 1e-10).unwrap();
        let LinearPropagator::Tensor { factors, .. } = &q.op else {
            panic!("expected a tensor factorization");
        };
        assert_eq!(factors.len(), 2);
        assert!(q.max_residual() <= 1e-10);
        let u = q.op.dense();
        assert!(linalg::unitarity_defect(&u) < 1e-12);
        for i in 0..6 {
            let g = unit(6, i);
            let lhs = u.adjoint() * quantum::elementary_dense(sp, &g) * &u;
            let rhs = quantum::elementary_dense(sp, &a.act_on_frequency(&g));
            assert!(max_abs(&(lhs - rhs)) < 1e-10);
        }
        let psi = State::from_fn(64, |i, _| Complex64::new((i as f64 * 0.37).sin(), (i as f64).cos()));
        assert!((q.op.apply(psi.as_slice()) - &u * &psi).norm() < 1e-12);
        assert!((q.op.apply_adjoint(psi.as_slice()) - u.adjoint() * &psi).norm() < 1e-12);
        // first nonzero entry in row-major order is real positive
        let lead = (0..64).flat_map(|r| (0..64).map(move |c| (r, c))).find(|&(r, c)| u[(r, c)].norm() > 1e-12).unwrap();
        assert!(u[lead].im.abs() < 1e-12 && u[lead].re > 0.0);
    }

    #[test]
    fn hamiltonian_trivial_cases() {
        let sp = space(6, 1);
        let zero = TrigPolynomial::zero(1);
        assert!(max_abs(&(quantize_hamiltonian(&zero, sp).unwrap() - DenseOperator::identity(6, 6))) < 1e-12);
        let c = 0.123;
        let constant = TrigPolynomial::constant(1, Complex64::new(c, 0.0));
        let u = quantize_hamiltonian(&constant, sp).unwrap();
        let expected = DenseOperator::identity(6, 6) * Complex64::from_polar(1.0, 2.0 * PI * 6.0 * c);
        assert!(max_abs(&(u - expected)) < 1e-12);
        let complex = TrigPolynomial::monomial(1, vec![1, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert!(matches!(quantize_hamiltonian(&complex, sp), Err(Error::Validation(_))));
    }

    #[test]
    fn hamiltonian_commutes_with_lattice_operators() {
        // Ĥ supported on frequencies with zero q-part in the first two pairs
        let sp = space(4, 2);
        let h = TrigPolynomial::cosine(2, &[1, 0, 0, 0], 0.05)
            .unwrap()
            .add(&TrigPolynomial::cosine(2, &[1, 1, 0, 0], 0.02).unwrap())
            .unwrap();
        let u = quantize_hamiltonian(&h, sp).unwrap();
        assert!(linalg::unitarity_defect(&u) < 1e-10);
        for n in [[1, 0, 0, 0], [0, 1, 0, 0], [2, -1, 0, 0]] {
            let op = quantum::elementary_dense(sp, &n);
            assert!(max_abs(&(&u * &op - &op * &u)) < 1e-10);
        }
    }

    #[test]
    fn bundle_and_exact_egorov() {
        let sp = space(8, 1);
        let a = cat();
        let zero = TrigPolynomial::zero(1);
        let b = quantize_perturbed(&a, &zero, sp, 1e-8).unwrap();
        assert!(max_abs(&(b.u_total.clone() - &b.u_linear)) < 1e-12);
        let f = TrigPolynomial::cosine(1, &[1, 2], 1.0).unwrap();
        let push = f.compose_linear(&a).unwrap();
        assert!(egorov_residual(&b.u_total, sp, &f, &push).unwrap() <= 1e-10);
        let one = TrigPolynomial::constant(1, Complex64::new(1.0, 0.0));
        assert!(egorov_residual(&b.u_total, sp, &one, &one).unwrap() < 1e-12);

        let id = sym(&[&[1, 0], &[0, 1]]);
        let h = TrigPolynomial::cosine(1, &[0, 1], 0.05).unwrap();
        let b = quantize_perturbed(&id, &h, sp, 1e-8).unwrap();
        assert!(max_abs(&(b.u_total.clone() - &b.u_hamiltonian)) < 1e-12);
        assert!(b.validation.unitarity_total < 1e-10);
    }

    #[test]
    fn cache_reuses_entries() {
        let cache = PropagatorCache::new();
        let sp = space(5, 1);
        let first = cache.get_or_build(&cat(), sp, 1e-8).unwrap();
        let second = cache.get_or_build(&cat(), sp, 1e-8).unwrap();
        assert!(Arc::ptr_eq(&first, &second));
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn generic_solver_refuses_large_systems() {
        let wide = sym(&[&[1, 0, 1, 0], &[0, 1, 0, 0], &[0, 0, 1, 0], &[0, 0, 0, 1]]);
        assert!(matches!(solve_intertwiner(&wide, space(17, 2)), Err(Error::CostCap(_))));
    }
}
