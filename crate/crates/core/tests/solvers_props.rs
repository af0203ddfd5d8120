use proptest::prelude::*;
use ttrr::solvers::{als_run, dmrg_run, rayleigh_quotient, SolverConfig};
use ttrr::tt::{factorize, max_ranks, validate_ranks};
use ttrr::{Error, Hamiltonian, RankProfile, Shape};

fn profiles() -> Vec<(Vec<usize>, Vec<usize>)> {
    vec![
        (vec![2, 2], vec![1]),
        (vec![2, 2, 2], vec![1, 1]),
        (vec![2, 2, 2], vec![2, 2]),
        (vec![3, 2, 2], vec![2, 1]),
        (vec![2, 2, 2, 2], vec![1, 2, 1]),
    ]
}

fn profile_strategy() -> impl Strategy<Value = (Shape, RankProfile)> {
    prop::sample::select(profiles()).prop_map(|(k, r)| {
        let k = Shape::new(k).unwrap();
        let r = validate_ranks(&k, &RankProfile::new(r).unwrap()).unwrap();
        (k, r)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn als_energy_never_increases((k, r) in profile_strategy(), seed in any::<u64>()) {
        let h = Hamiltonian::random_symmetric(k.size(), seed);
        let res = als_run(&h, &k, &r, &SolverConfig::default().with_seed(seed)).unwrap();
        for w in res.local_energies.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10, "{} then {}", w[0], w[1]);
        }
        if res.converged {
            prop_assert!(res.stationarity < 1e-7, "stationarity {}", res.stationarity);
        }
    }

    #[test]
    fn energy_survives_reorthogonalization((k, r) in profile_strategy(), seed in any::<u64>()) {
        let h = Hamiltonian::random_symmetric(k.size(), seed);
        let res = als_run(&h, &k, &r, &SolverConfig::default().with_seed(seed)).unwrap();
        for site in 0..k.order() {
            let moved = res.train.orthogonalize(site).unwrap();
            let e = rayleigh_quotient(&h, &moved.decompress()).unwrap();
            prop_assert!((e - res.energy).abs() < 1e-12 * res.energy.abs().max(1.0));
        }
    }

    #[test]
    fn solver_output_has_a_chart_or_a_clear_error((k, r) in profile_strategy(), seed in any::<u64>()) {
        let h = Hamiltonian::random_symmetric(k.size(), seed);
        let res = dmrg_run(&h, &k, &r, &SolverConfig::default().with_seed(seed)).unwrap();
        let psi = res.train.decompress();
        match factorize(&psi, &r) {
            Ok(g) => {
                let back = g.decompress();
                prop_assert!(back.max_abs_diff(&psi) < 1e-8);
            }
            Err(Error::SingularLeadingRows { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }

    #[test]
    fn full_rank_solvers_find_the_ground_state(k in prop::sample::select(vec![vec![2, 2], vec![2, 2, 2], vec![3, 2]]), seed in any::<u64>()) {
        let k = Shape::new(k).unwrap();
        let r = max_ranks(&k);
        let h = Hamiltonian::random_symmetric(k.size(), seed);
        let lmin = h.eigenvalues()[0];
        let cfg = SolverConfig::default().with_seed(seed);
        let als = als_run(&h, &k, &r, &cfg).unwrap();
        let dmrg = dmrg_run(&h, &k, &r, &cfg).unwrap();
        prop_assert!((als.energy - lmin).abs() < 1e-8, "als {} vs {}", als.energy, lmin);
        prop_assert!((dmrg.energy - lmin).abs() < 1e-8, "dmrg {} vs {}", dmrg.energy, lmin);
    }
}
