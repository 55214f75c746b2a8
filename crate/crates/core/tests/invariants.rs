use proptest::prelude::*;
use qperc_core::hamiltonian::{CouplingModel, Hamiltonian};
use qperc_core::lattice::{Lattice, LatticeSpec, Site};
use qperc_core::observables::{bound_fraction, intensities, ipr};
use qperc_core::propagator::{chebyshev_evolve, delta_state, norm_sq, DenseEngine};
use qperc_core::{export, Lattice64};

fn model() -> CouplingModel<f64> {
    CouplingModel::from_ratio(0.45, 0.15, 15.0).unwrap()
}

proptest! {
    #[test]
    fn neighbor_relation_symmetric_on_random_specs(
        rows in 2usize..12,
        cols in 2usize..12,
    ) {
        let spec = LatticeSpec::<f64>::new(rows, cols, 15.0);
        for i in 0..spec.n_sites() {
            let a = spec.site_at(i);
            prop_assert!(spec.nn_sites(a).count() <= 3);
            prop_assert!(spec.nnn_sites(a).count() <= 6);
            for b in spec.nn_sites(a) {
                prop_assert!(spec.nn_sites(b).any(|x| x == a));
                prop_assert!((spec.distance(a, b) - 15.0).abs() < 1e-9);
            }
            for b in spec.nnn_sites(a) {
                prop_assert!(spec.nnn_sites(b).any(|x| x == a));
                prop_assert!((spec.distance(a, b) - 15.0 * 3f64.sqrt()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn occupancy_nested_in_p(
        seed in any::<u64>(),
        p_lo in 0.0f64..1.0,
        p_hi in 0.0f64..1.0,
    ) {
        let (p_lo, p_hi) = if p_lo <= p_hi { (p_lo, p_hi) } else { (p_hi, p_lo) };
        let spec = LatticeSpec::new(9, 9, 15.0);
        let lo = Lattice64::generate_unconditioned(spec, p_lo, seed).unwrap();
        let hi = Lattice64::generate_unconditioned(spec, p_hi, seed).unwrap();
        for (a, b) in lo.occupied().iter().zip(hi.occupied()) {
            prop_assert!(!a | b);
        }
    }

    #[test]
    fn ipr_bounds_and_scale_invariance(
        raw in proptest::collection::vec(1e-8f64..1.0, 1..60),
        scale in 1e-3f64..1e3,
    ) {
        let n = raw.len() as f64;
        let v = ipr(&raw).unwrap();
        prop_assert!(v >= 1.0 / n - 1e-12);
        prop_assert!(v <= 1.0 + 1e-12);
        let scaled: Vec<f64> = raw.iter().map(|x| x * scale).collect();
        let vs = ipr(&scaled).unwrap();
        prop_assert!((v - vs).abs() < 1e-9 * v.max(vs));
    }

    #[test]
    fn bound_fraction_monotone_in_half_width(
        seed in any::<u64>(),
        p in 0.4f64..1.0,
    ) {
        let spec = LatticeSpec::new(20, 20, 15.0);
        let lat = Lattice64::generate(spec, p, seed).unwrap();
        let sites: Vec<Site> = lat.occupied_sites().collect();
        let intensity: Vec<f64> = sites
            .iter()
            .enumerate()
            .map(|(k, _)| ((k * 2654435761) % 97) as f64 + 1.0)
            .collect();
        let mut prev = f64::INFINITY;
        for half in 1..=10usize {
            let f = bound_fraction(&lat, &sites, &intensity, half).unwrap();
            prop_assert!(f <= prev + 1e-15);
            prop_assert!((0.0..=1.0).contains(&f));
            prev = f;
        }
    }

    #[test]
    fn lattice_json_round_trips(
        seed in any::<u64>(),
        p in 0.0f64..=1.0,
        rows in 2usize..8,
        cols in 2usize..8,
    ) {
        let lat = Lattice64::generate(LatticeSpec::new(rows, cols, 15.0), p, seed).unwrap();
        let mut buf = Vec::new();
        export::write_lattice_json(&mut buf, &lat).unwrap();
        let back: Lattice<f64> = export::read_lattice_json(&buf[..]).unwrap();
        prop_assert_eq!(lat, back);
    }

    #[test]
    fn grid_mask_round_trips(
        seed in any::<u64>(),
        p in 0.2f64..=1.0,
    ) {
        let lat = Lattice64::generate(LatticeSpec::new(6, 7, 15.0), p, seed).unwrap();
        let mut buf = Vec::new();
        export::write_grid(&mut buf, &lat).unwrap();
        let back: Lattice<f64> = export::read_grid(&buf[..], 15.0).unwrap();
        prop_assert_eq!(back.occupied(), lat.occupied());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn unitary_evolution_on_random_lattices(
        seed in any::<u64>(),
        p in 0.3f64..=1.0,
        z in 0.1f64..12.0,
    ) {
        let lat = Lattice64::generate(LatticeSpec::new(7, 7, 15.0), p, seed).unwrap();
        let h = Hamiltonian::build(&lat, &model()).unwrap();
        let inj = h.dense_index_of(&lat, lat.injection()).unwrap();
        let psi0 = delta_state::<f64>(h.dim(), inj);
        let cheb = chebyshev_evolve(&h, &psi0, z, 1e-12).unwrap();
        prop_assert!((norm_sq(&cheb) - 1.0).abs() < 1e-11);
        let dense = DenseEngine::new(&h).evolve(&psi0, z);
        let err: f64 = dense
            .iter()
            .zip(&cheb)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        prop_assert!(err < 1e-9, "engines disagree by {}", err);
        let total: f64 = intensities(&cheb).iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-11);
    }
}
