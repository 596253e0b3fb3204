//! Cross-checks against independent reductions and closed forms.

use num_complex::Complex64;

use scarlab_core::egorov;
use scarlab_core::presets::{self, EPSILON};
use scarlab_core::propagator::{quantize_linear, quantize_perturbed};
use scarlab_core::quantum::HilbertSpace;
use scarlab_core::scarring::{self, build_scar_subspace};
use scarlab_core::trig::TrigPolynomial;

/// Circular distance between sorted phase lists.
fn phase_gap(a: &[f64], b: &[f64]) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut b = b.to_vec();
    let mut worst: f64 = 0.0;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .map(|(k, y)| {
                let r = (x - y).rem_euclid(tau);
                (k, r.min(tau - r))
            })
            .fold((0, f64::INFINITY), |acc, v| if v.1 < acc.1 { v } else { acc });
        worst = worst.max(d);
        b.remove(k);
    }
    worst
}

#[test]
fn model_c_scar_dynamics_reduce_to_the_one_dimensional_map() {
    let c = presets::model_c(EPSILON).unwrap();
    let spec = c.spec.as_ref().unwrap();
    let a = presets::model_a(EPSILON).unwrap().a;
    // p₁ acts trivially on the subspace, leaving cos 2πq + ½ cos 2πp on pair 3
    let h_eff = TrigPolynomial::cosine(1, &[0, 1], EPSILON)
        .unwrap()
        .add(&TrigPolynomial::cosine(1, &[1, 0], 0.5 * EPSILON).unwrap())
        .unwrap();
    for n in [5usize, 8, 11] {
        let sub = build_scar_subspace(HilbertSpace::new(n, 3).unwrap(), spec).unwrap();
        let lin = quantize_linear(&c.a, sub.space, 1e-8).unwrap();
        let r = scarring::restricted_propagator_fast(&sub, &lin.op, &c.h).unwrap();
        let reduced = quantize_perturbed(&a, &h_eff, HilbertSpace::new(n, 1).unwrap(), 1e-8).unwrap();
        let eig = scarlab_core::linalg::unitary_eigen(&reduced.u_total).unwrap();
        assert!(phase_gap(&r.eigen.phases, &eig.phases) < 1e-9, "N = {n}");
    }
}

#[test]
fn shear_flow_coefficients_are_bessel_values() {
    // cos 2πq under the flow of 0.05 cos 2πp: the zero-momentum coefficient
    // of e(q + 0.1π sin 2πp) is J₀(0.2π²)
    let f = TrigPolynomial::monomial(1, vec![0, 1], Complex64::new(1.0, 0.0)).unwrap();
    let g = TrigPolynomial::cosine(1, &[1, 0], 0.05).unwrap();
    let push = scarlab_core::classical::flow_pushforward(&f, &g, 1.0, 64, 1e-14).unwrap();
    let c = push.poly.coefficient(&[0, 1]);
    assert!((c.norm() - 0.238_951_993_679_893_7).abs() < 1e-10);
}

#[test]
fn elementary_gap_matches_closed_form() {
    // ω(n, m) = 1 at N = 4: 16π sin(π/4) − 4π²
    let g = egorov::bracket_commutator_gap_elementary(&[0, 1], &[1, 0], HilbertSpace::new(4, 1).unwrap()).unwrap();
    let pi = std::f64::consts::PI;
    let closed = (16.0 * pi * (pi / 4.0).sin() - 4.0 * pi * pi).abs();
    assert!((g.measured - closed).abs() < 1e-10);
    assert!((g.predicted.abs() - closed).abs() < 1e-12);
}

#[test]
fn block_model_wigner_function_is_a_delta_in_position() {
    // the constant state has W(e_n) = e(n₁·n₂/2N) when n₂ ≡ 0 and 0 otherwise
    let b = presets::model_b(EPSILON).unwrap();
    let spec = b.spec.as_ref().unwrap();
    let n = 6usize;
    let sub = build_scar_subspace(HilbertSpace::new(n, 2).unwrap(), spec).unwrap();
    let lin = quantize_linear(&b.a, sub.space, 1e-8).unwrap();
    let r = scarring::restricted_propagator_fast(&sub, &lin.op, &b.h).unwrap();
    for freq in [[1i64, 2, 6, 0], [3, 1, 6, 12], [0, 0, 1, 0], [2, 5, 0, 3]] {
        let w = scarring::wigner_values(&sub, &r.eigen, &freq)[0];
        let expected = if freq[2] % 6 == 0 && freq[3] % 6 == 0 {
            let k = (freq[0] * freq[2] + freq[1] * freq[3]) as f64;
            Complex64::from_polar(1.0, std::f64::consts::PI * k / n as f64)
        } else {
            Complex64::new(0.0, 0.0)
        };
        assert!((w - expected).norm() < 1e-13, "{freq:?}: {w}");
    }
}
