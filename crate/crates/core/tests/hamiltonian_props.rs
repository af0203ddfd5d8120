use proptest::prelude::*;
use ttrr::hamiltonian::build_second_quantized;
use ttrr::{Hamiltonian, SecondQuantizedSpec};

fn combine(
    a: &SecondQuantizedSpec,
    b: &SecondQuantizedSpec,
    alpha: f64,
    beta: f64,
) -> SecondQuantizedSpec {
    let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| alpha * p + beta * q).collect();
    SecondQuantizedSpec {
        n: a.n,
        t: mix(&a.t, &b.t),
        v: mix(&a.v, &b.v),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn assembly_is_linear(n in 1usize..=4, s1 in any::<u64>(), s2 in any::<u64>(), alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let a = SecondQuantizedSpec::random(n, s1);
        let b = SecondQuantizedSpec::random(n, s2);
        let ha = build_second_quantized(&a).unwrap();
        let hb = build_second_quantized(&b).unwrap();
        let hc = build_second_quantized(&combine(&a, &b, alpha, beta)).unwrap();
        let expected = ha.matrix() * alpha + hb.matrix() * beta;
        let scale = expected.amax().max(1.0);
        prop_assert!((hc.matrix() - expected).amax() <= 1e-12 * scale);
    }

    #[test]
    fn constructed_operators_are_exactly_symmetric(n in 1usize..=4, seed in any::<u64>()) {
        let h = build_second_quantized(&SecondQuantizedSpec::random(n, seed)).unwrap();
        prop_assert_eq!(h.matrix().transpose(), h.matrix().clone());
        let r = Hamiltonian::random_symmetric(7, seed);
        prop_assert_eq!(r.matrix().transpose(), r.matrix().clone());
    }
}

#[test]
fn asymmetric_input_is_rejected() {
    assert!(Hamiltonian::from_rows(&[&[1.0, 2.0], &[2.5, 1.0]]).is_err());
}

#[test]
fn random_matrices_are_reproducible() {
    assert_eq!(
        Hamiltonian::random_symmetric(5, 9),
        Hamiltonian::random_symmetric(5, 9)
    );
    assert_ne!(
        Hamiltonian::random_symmetric(5, 9),
        Hamiltonian::random_symmetric(5, 10)
    );
}
