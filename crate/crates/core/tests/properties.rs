//! Randomized invariants across modules.

use proptest::prelude::*;
use qkim::classical::{build_generator, propagate_probability};
use qkim::hamiltonians::{build_h_tau, build_h_tau_generic, heisenberg_split};
use qkim::linalg::{eigvalsh, multiset_max_diff};
use qkim::model::{equilibrium_distribution, Boundary, ModelParams, SpinConfig, TauSector};
use qkim::quantum::{build_lindbladian, decompose, reassemble, DensityMatrix, LindbladPropagator, VectorizedState, C64};
use qkim::rates::{check_detailed_balance, GlauberRates};

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::Periodic), Just(Boundary::Open)]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn detailed_balance_holds(n in 3usize..9, g in 0.0f64..0.99, d in -1.0f64..=1.0, b in boundary()) {
        let p = ModelParams::new(n, g, d).unwrap().with_boundary(b);
        let rep = check_detailed_balance(&GlauberRates, &p).unwrap();
        prop_assert!(rep.holds);
        prop_assert!(rep.max_violation < 1e-12);
    }

    #[test]
    fn sector_hamiltonians_match_generic_rates(
        n in 3usize..8, g in 0.0f64..0.99, d in -1.0f64..=1.0, bits in any::<u64>(), b in boundary(),
    ) {
        let p = ModelParams::new(n, g, d).unwrap().with_boundary(b);
        let tau = TauSector::from_bits(bits & ((1 << n) - 1), n).unwrap();
        let closed = build_h_tau(&tau, &p).unwrap().matrix;
        let generic = build_h_tau_generic(&GlauberRates, &tau, &p).unwrap().matrix;
        prop_assert!(closed.max_abs_diff(&generic) < 1e-10);
        prop_assert!(closed.symmetry_defect() < 1e-14);
        prop_assert!(eigvalsh(&closed).unwrap()[0] > -1e-10);
    }

    #[test]
    fn generator_conserves_probability(n in 3usize..8, g in 0.0f64..0.99, d in -1.0f64..=1.0, t in 0.0f64..20.0) {
        let p = ModelParams::new(n, g, d).unwrap();
        let l = build_generator(&GlauberRates, &p).unwrap();
        prop_assert!(l.column_sum_defect() < 1e-13);
        let mut p0 = vec![0.0; 1 << n];
        p0[0] = 1.0;
        let pt = propagate_probability(&l, &p0, t).unwrap();
        prop_assert!((pt.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(pt.iter().all(|&x| x > -1e-12));
        let eq = equilibrium_distribution(&p).unwrap();
        let stay = propagate_probability(&l, &eq, t).unwrap();
        prop_assert!(stay.iter().zip(&eq).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn lindbladian_never_mixes_sectors(n in 2usize..5, g in 0.0f64..1.0, d in -1.0f64..=1.0) {
        let p = ModelParams::new(n.max(3), g, d).unwrap();
        prop_assert_eq!(build_lindbladian(&GlauberRates, &p).unwrap().cross_sector_entries(), 0);
    }

    #[test]
    fn density_evolution_stays_physical(seed in any::<u64>(), g in 0.0f64..0.95, d in -0.9f64..0.9, t in 0.0f64..5.0) {
        let n = 3;
        let p = ModelParams::new(n, g, d).unwrap();
        // random pure state
        let mut x = seed;
        let mut next = || { x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5 };
        let psi: Vec<C64> = (0..8).map(|_| C64::new(next(), next())).collect();
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        let rho0 = DensityMatrix::pure(n, &psi).unwrap();
        let rho = LindbladPropagator::new(&p, 1).unwrap().evolve(&rho0, t).unwrap();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(rho.hermiticity_defect() < 1e-12);
        prop_assert!(rho.min_eigenvalue().unwrap() > -1e-10);
    }

    #[test]
    fn sector_decomposition_round_trips(n in 1usize..5, seed in any::<u64>()) {
        let d = 1usize << n;
        let data: Vec<C64> = (0..d * d).map(|k| C64::new(((seed ^ k as u64) % 97) as f64, (k % 5) as f64)).collect();
        let v = VectorizedState { n_sites: n, data };
        let back = reassemble(&decompose(&v), n).unwrap();
        prop_assert_eq!(back, v);
    }

    #[test]
    fn configurations_print_and_parse(n in 1usize..40, bits in any::<u64>()) {
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let c = SpinConfig::new(bits & mask, n).unwrap();
        prop_assert_eq!(c.to_string().parse::<SpinConfig>().unwrap(), c);
        let t = TauSector::from_bits(bits & mask, n).unwrap();
        prop_assert_eq!(t.to_string().parse::<TauSector>().unwrap(), t);
    }

    #[test]
    fn params_json_round_trip(n in 1usize..30, g in 0.0f64..=1.0, d in -1.0f64..=1.0, b in boundary(), rate in 0.1f64..10.0) {
        let p = ModelParams::new(n, g, d).unwrap().with_boundary(b).with_rate_scale(rate).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        prop_assert_eq!(serde_json::from_str::<ModelParams>(&text).unwrap(), p);
    }

    #[test]
    fn heisenberg_blocks_partition_the_chain(n in 3usize..16, bits in any::<u64>()) {
        let tau = TauSector::from_bits(bits & ((1 << n) - 1), n).unwrap();
        let d = heisenberg_split(&tau).unwrap();
        let mut seen: Vec<usize> = d.blocks.iter().flatten().copied().chain(d.isolated_sites.iter().copied()).collect();
        seen.sort();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
    }
}

#[test]
fn global_flip_of_tau_leaves_the_spectrum_unchanged() {
    let p = ModelParams::new(6, 0.6, 0.3).unwrap();
    for bits in [0b000101u64, 0b011001, 0b110000] {
        let a = eigvalsh(&build_h_tau(&TauSector::from_bits(bits, 6).unwrap(), &p).unwrap().matrix).unwrap();
        let b = eigvalsh(&build_h_tau(&TauSector::from_bits(bits ^ 0b111111, 6).unwrap(), &p).unwrap().matrix).unwrap();
        assert!(multiset_max_diff(&a, &b).unwrap() < 1e-10);
    }
}
