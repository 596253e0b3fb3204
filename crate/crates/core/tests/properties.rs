//! Randomized structural properties.

use num_complex::Complex64;
use proptest::prelude::*;

use scarlab_core::classical::{pushforward_coefficients, submanifold_average, ClassicalMap};
use scarlab_core::lattice::intmat::elementary_divisors;
use scarlab_core::lattice::{
    check_invariant_isotropic, is_saturated, saturate_lattice, symplectic_form, validate_symplectic, IntMatrix,
    RepresentativeSystem, SymplecticMatrix,
};
use scarlab_core::linalg::{self, CMatrix};
use scarlab_core::presets;
use scarlab_core::propagator::{frequency_residual, intertwiner_null_dimension, quantize_linear};
use scarlab_core::quantum::{
    compose_phase, elementary_dense, quantize_observable, wigner_observable, HilbertSpace,
};
use scarlab_core::scarring::{self, build_joint_eigenspace, build_scar_subspace, Character};
use scarlab_core::trig::TrigPolynomial;
use scarlab_core::lattice::Rational;

fn freq(d: usize, range: i64) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-range..=range, 2 * d)
}

fn poly(d: usize) -> impl Strategy<Value = TrigPolynomial> {
    prop::collection::vec((freq(d, 3), -1.0f64..1.0, -1.0f64..1.0), 1..4).prop_map(move |terms| {
        TrigPolynomial::from_terms(d, terms.into_iter().map(|(n, re, im)| (n, Complex64::new(re, im)))).unwrap()
    })
}

fn real_poly(d: usize) -> impl Strategy<Value = TrigPolynomial> {
    poly(d).prop_map(|p| p.add(&p.conj()).unwrap())
}

fn dense_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    linalg::max_abs(&(a - b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn symplectic_form_is_bilinear_and_antisymmetric(
        a in freq(2, 100), b in freq(2, 100), c in freq(2, 100), s in -20i64..20
    ) {
        let w = |x: &[i64], y: &[i64]| symplectic_form(x, y, 2).unwrap();
        prop_assert_eq!(w(&a, &b), -w(&b, &a));
        prop_assert_eq!(w(&a, &a), 0);
        let comb: Vec<i64> = a.iter().zip(&c).map(|(x, y)| s * x + y).collect();
        prop_assert_eq!(w(&comb, &b), s * w(&a, &b) + w(&c, &b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_and_power_laws(d in 1usize..=2, n in 3usize..=6, m in freq(2, 20), k in freq(2, 20), p in 0usize..12) {
        let sp = HilbertSpace::new(n, d).unwrap();
        let (m, k) = (&m[..2 * d], &k[..2 * d]);
        let sum: Vec<i64> = m.iter().zip(k).map(|(x, y)| x + y).collect();
        let lhs = elementary_dense(sp, m) * elementary_dense(sp, k);
        let rhs = elementary_dense(sp, &sum) * compose_phase(m, k, n);
        prop_assert!(dense_diff(&lhs, &rhs) <= 1e-12);
        let mut pow = CMatrix::identity(sp.dim(), sp.dim());
        for _ in 0..p {
            pow = pow * elementary_dense(sp, m);
        }
        let scaled: Vec<i64> = m.iter().map(|x| x * p as i64).collect();
        prop_assert!(dense_diff(&pow, &elementary_dense(sp, &scaled)) <= 1e-12);
    }

    #[test]
    fn adjoint_is_conjugate_symbol(f in poly(1), n in 3usize..=9) {
        let sp = HilbertSpace::new(n, 1).unwrap();
        let a = quantize_observable(sp, &f).unwrap().adjoint();
        let b = quantize_observable(sp, &f.conj()).unwrap();
        prop_assert!(dense_diff(&a, &b) <= 1e-12);
    }

    #[test]
    fn wigner_is_linear(f in poly(1), g in poly(1), alpha in -2.0f64..2.0, seed in 0u64..1000) {
        let sp = HilbertSpace::new(7, 1).unwrap();
        let mut psi: Vec<Complex64> = (0..7)
            .map(|i| Complex64::new(((seed + i) as f64).sin(), ((seed * 3 + i) as f64).cos()))
            .collect();
        sp.normalize(&mut psi).unwrap();
        let comb = f.scale(Complex64::new(alpha, 0.0)).add(&g).unwrap();
        let lhs = wigner_observable(sp, &comb, &psi).unwrap();
        let rhs = wigner_observable(sp, &f, &psi).unwrap() * alpha + wigner_observable(sp, &g, &psi).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12);
    }

    #[test]
    fn saturation_is_idempotent(rows in prop::collection::vec(freq(2, 6), 1..3)) {
        let m = IntMatrix::from_rows(&rows, 4).unwrap();
        prop_assume!(elementary_divisors(&m).map(|e| e.len() == rows.len()).unwrap_or(false));
        let sat = saturate_lattice(&m).unwrap();
        prop_assert!(is_saturated(&sat).unwrap());
        prop_assert!(elementary_divisors(&sat).unwrap().iter().all(|&e| e == 1));
        let again = saturate_lattice(&sat).unwrap();
        prop_assert_eq!(again, sat);
    }

    #[test]
    fn bracket_is_antisymmetric_and_satisfies_jacobi(f in poly(1), g in poly(1), h in poly(1)) {
        let fg = f.poisson_bracket(&g).unwrap();
        let gf = g.poisson_bracket(&f).unwrap();
        prop_assert!(fg.add(&gf).unwrap().l1_norm() <= 1e-9 * (1.0 + fg.l1_norm()));
        let j = f.poisson_bracket(&g.poisson_bracket(&h).unwrap()).unwrap()
            .add(&g.poisson_bracket(&h.poisson_bracket(&f).unwrap()).unwrap()).unwrap()
            .add(&h.poisson_bracket(&f.poisson_bracket(&g).unwrap()).unwrap()).unwrap();
        let scale = 1.0 + f.l1_norm() * g.l1_norm() * h.l1_norm() * 1e4;
        prop_assert!(j.l1_norm() <= 1e-10 * scale);
    }
}

fn slanted_lattice() -> (SymplecticMatrix, RepresentativeSystem, IntMatrix) {
    let a = validate_symplectic(&IntMatrix::identity(4)).unwrap();
    let basis = IntMatrix::from_rows(&[vec![1, 2, 0, 0]], 4).unwrap();
    let lattice = check_invariant_isotropic(&a, &basis).unwrap();
    (a, RepresentativeSystem::new(&lattice).unwrap(), basis)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10000))]

    #[test]
    fn representatives_split_exactly(k in freq(2, 50), shift in -5i64..5) {
        let (_, reps, basis) = slanted_lattice();
        prop_assume!(k.iter().any(|&x| x != 0));
        let (n, m) = reps.decompose(&k);
        let sum: Vec<i64> = n.iter().zip(&m).map(|(a, b)| a + b).collect();
        prop_assert_eq!(&sum, &k);
        let norm_sq: f64 = k.iter().map(|&x| (x * x) as f64).sum();
        let w = symplectic_form(&n, &m, 2).unwrap().abs() as f64;
        prop_assert!(w <= reps.c_sigma * norm_sq);
        let (cn, cm) = reps.canonical_split(&k);
        prop_assert_eq!(cn.iter().zip(&cm).map(|(a, b)| a + b).collect::<Vec<_>>(), k.clone());
        let moved: Vec<i64> = k.iter().zip(basis.row(0)).map(|(a, b)| a + shift * b).collect();
        prop_assert_eq!(reps.canonical_split(&moved).0, cn);
    }
}

fn sl2_word(word: &[bool]) -> SymplecticMatrix {
    let mut m = [[1i64, 0], [0, 1]];
    for &up in word {
        let g = if up { [[1, 1], [0, 1]] } else { [[1, 0], [1, 1]] };
        m = [
            [m[0][0] * g[0][0] + m[0][1] * g[1][0], m[0][0] * g[0][1] + m[0][1] * g[1][1]],
            [m[1][0] * g[0][0] + m[1][1] * g[1][0], m[1][0] * g[0][1] + m[1][1] * g[1][1]],
        ];
    }
    validate_symplectic(&IntMatrix::from_rows(&[m[0].to_vec(), m[1].to_vec()], 2).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn intertwiners_follow_exact_egorov(word in prop::collection::vec(any::<bool>(), 1..6), n in 2usize..=12) {
        let a = sl2_word(&word);
        let sp = HilbertSpace::new(n, 1).unwrap();
        let dim = intertwiner_null_dimension(&a, sp).unwrap();
        prop_assert!(dim <= 1);
        if dim == 1 {
            let q = quantize_linear(&a, sp, 1e-8).unwrap();
            for p in -3i64..=3 {
                for r in -3i64..=3 {
                    prop_assert!(frequency_residual(&q.op, &a, &[p, r]).unwrap() <= 1e-7);
                }
            }
        }
    }

    #[test]
    fn eigenspaces_are_shuttled(m in freq(2, 4), n in 2usize..=5) {
        let spec = presets::model_b(0.05).unwrap().spec.unwrap();
        let sp = HilbertSpace::new(n, 2).unwrap();
        let basis = spec.lattice.basis().clone();
        let zero: Character = vec![Rational::from_integer(0); 2];
        let p0 = build_joint_eigenspace(sp, &basis, &zero).unwrap();
        let moved: Character = (0..2)
            .map(|i| Rational::new(symplectic_form(basis.row(i), &m, 2).unwrap() as i128, n as i128))
            .collect();
        let pm = build_joint_eigenspace(sp, &basis, &moved).unwrap();
        let projector = |s: &scarring::ScarSubspace| {
            let mut p = CMatrix::zeros(sp.dim(), sp.dim());
            for j in 0..s.dim() {
                let c = s.column(j) * Complex64::new(1.0 / (sp.dim() as f64).sqrt(), 0.0);
                p += &c * c.adjoint();
            }
            p
        };
        let om = elementary_dense(sp, &m);
        let lhs = &om * projector(&p0) * om.adjoint();
        prop_assert!(linalg::operator_norm(&(lhs - projector(&pm))) <= 1e-9);
    }

    #[test]
    fn variance_of_a_single_state(f in real_poly(2), n in 2usize..=6) {
        let model = presets::model_b(0.05).unwrap();
        let spec = model.spec.unwrap();
        let sp = HilbertSpace::new(n, 2).unwrap();
        let sub = build_scar_subspace(sp, &spec).unwrap();
        let lin = quantize_linear(&model.a, sp, 1e-8).unwrap();
        let r = scarring::restricted_propagator_fast(&sub, &lin.op, &model.h).unwrap();
        let w = wigner_observable(sp, &f, sub.lift(&[r.eigen.vectors[(0, 0)]]).as_slice()).unwrap();
        let expected = (w - submanifold_average(&f, &spec)).norm_sqr();
        prop_assert!((scarring::quantum_variance(&sub, &r.eigen, &spec, &f) - expected).abs() <= 1e-12);
    }
}

#[test]
fn submanifold_measure_is_invariant() {
    let model = presets::model_b(0.01).unwrap();
    let spec = model.spec.clone().unwrap();
    let map = ClassicalMap::new(model.a.clone(), model.h.clone()).unwrap();
    let f = TrigPolynomial::cosine(2, &[1, 0, 0, 0], 1.0)
        .unwrap()
        .add(&TrigPolynomial::cosine(2, &[0, 1, 1, 0], 0.5).unwrap())
        .unwrap();
    let pushed = pushforward_coefficients(&f, &map, 1, 32, 1e-10).unwrap();
    let before = submanifold_average(&f, &spec);
    let after = submanifold_average(&pushed.poly, &spec);
    assert!((before - after).norm() <= 1e-8, "{before} vs {after}");
}
