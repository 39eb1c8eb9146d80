use coten::ansatz::{
    build_urbm_site_tensor, rbm_mapping_deviation, urbm_mapping_deviation, Couplings,
    RbmParameters, UrbmParameters1D,
};
use coten::comps::{
    comps_log_amplitude, connected_zz_correlators, energy_density, energy_expectation,
    magnetization, Axis, TracePath, UniformRingMps,
};
use coten::lattice::{
    ed_ground_state, exact_ising_ground_energy, IsingChainSpec, SpinConfiguration,
};
use coten::scaling::{extract_nstar, fit_descriptive_exponent, fit_power_law, PowerLawFit};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn tensor_entries(chi: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 2 * chi * chi)
}

fn dense_ring() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (2usize..=4).prop_flat_map(|chi| (Just(chi), tensor_entries(chi)))
}

fn urbm_params(layers: usize) -> impl Strategy<Value = UrbmParameters1D> {
    prop::collection::vec(-1.0..1.0f64, 2 * layers + 1)
        .prop_map(move |v| UrbmParameters1D::from_vector(layers, &v).unwrap())
}

/// `⟨ψ|H|ψ⟩ / (N⟨ψ|ψ⟩)` from every amplitude of the ring.
fn brute_force_energy(mps: &UniformRingMps, lambda: f64) -> f64 {
    let n = mps.n_sites();
    let psi: Vec<f64> = SpinConfiguration::all(n)
        .map(|c| comps_log_amplitude(mps, &c).unwrap().value())
        .collect();
    let norm: f64 = psi.iter().map(|p| p * p).sum();
    let mut e = 0.0;
    for (bits, p) in psi.iter().enumerate() {
        let c = SpinConfiguration::from_bits(n, bits as u64);
        let zz: f64 = (0..n)
            .map(|j| f64::from(c.get(j) * c.get((j + 1) % n)))
            .sum();
        e -= zz * p * p;
        for j in 0..n {
            e -= lambda * p * psi[bits ^ (1 << j)];
        }
    }
    e / (norm * n as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rescaling_leaves_observables_unchanged(
        (chi, entries) in dense_ring(),
        n in 3usize..80,
        c in 0.05..20.0f64,
        lambda in 0.0..2.0f64,
    ) {
        let mps = UniformRingMps::from_entries(chi, &entries, n).unwrap();
        let scaled = UniformRingMps::new(mps.tensor().scaled(c), n).unwrap();
        let e = energy_density(&mps, lambda).unwrap();
        prop_assert!(rel(energy_density(&scaled, lambda).unwrap(), e) <= 1e-10);
        for axis in [Axis::X, Axis::Z] {
            let (m, ms) = (magnetization(&mps, axis).unwrap(), magnetization(&scaled, axis).unwrap());
            prop_assert!((m - ms).abs() <= 1e-10 * m.abs().max(1e-4), "{m} {ms}");
        }
        // Connected values subtract O(1) terms; tiny ones are compared on that scale.
        let r_max = (n - 1).min(10);
        let (g, gs) = (
            connected_zz_correlators(&mps, r_max).unwrap(),
            connected_zz_correlators(&scaled, r_max).unwrap(),
        );
        for (a, b) in g.iter().zip(&gs) {
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-4), "{a} {b}");
        }
    }

    #[test]
    fn energy_never_falls_below_the_exact_ground_state(
        (chi, entries) in dense_ring(),
        n in 3usize..120,
        lambda in 0.0..2.0f64,
    ) {
        let mps = UniformRingMps::from_entries(chi, &entries, n).unwrap();
        let exact = exact_ising_ground_energy(&IsingChainSpec::new(n, lambda).unwrap());
        prop_assert!(energy_density(&mps, lambda).unwrap() >= exact.energy_density - 1e-12);
    }

    #[test]
    fn transfer_energy_matches_exhaustive_sum(
        (chi, entries) in dense_ring(),
        n in 3usize..=10,
        lambda in 0.0..2.0f64,
    ) {
        let mps = UniformRingMps::from_entries(chi, &entries, n).unwrap();
        let direct = brute_force_energy(&mps, lambda);
        prop_assert!(rel(energy_density(&mps, lambda).unwrap(), direct) <= 1e-10);
    }

    #[test]
    fn squaring_and_sequential_powers_agree(
        (chi, entries) in dense_ring(),
        n in 3usize..=400,
        lambda in 0.0..2.0f64,
    ) {
        let mps = UniformRingMps::from_entries(chi, &entries, n).unwrap();
        let a = energy_expectation(&mps, lambda, TracePath::Squaring).unwrap();
        let b = energy_expectation(&mps, lambda, TracePath::Sequential).unwrap();
        prop_assert!(rel(a.value, b.value) <= 1e-10, "{} {}", a.value, b.value);
    }

    #[test]
    fn urbm_chain_equals_hidden_sum(
        (_layers, params) in (1usize..=2).prop_flat_map(|l| (Just(l), urbm_params(l))),
        n in 3usize..=8,
    ) {
        prop_assert!(urbm_mapping_deviation(&params, n).unwrap() <= 1e-10);
    }

    #[test]
    fn rbm_chain_equals_closed_form(
        (n, m, v) in (3usize..=6, 1usize..=6).prop_flat_map(|(n, m)| {
            (Just(n), Just(m), prop::collection::vec(-1.0..1.0f64, n + m + n * m))
        }),
    ) {
        let couplings = DMatrix::from_column_slice(m, n, &v[n + m..]);
        let params = RbmParameters::new(
            n,
            v[..n].to_vec(),
            v[n..n + m].to_vec(),
            Couplings::Full(couplings),
        ).unwrap();
        prop_assert!(rbm_mapping_deviation(&params).unwrap() <= 1e-12);
    }

    #[test]
    fn cyclic_shift_leaves_amplitudes_unchanged(
        params in urbm_params(2),
        n in 3usize..=12,
        bits in any::<u64>(),
        k in 0usize..12,
    ) {
        let mps = UniformRingMps::new(build_urbm_site_tensor(&params).unwrap(), n).unwrap();
        let c = SpinConfiguration::from_bits(n, bits);
        let a = comps_log_amplitude(&mps, &c).unwrap();
        let b = comps_log_amplitude(&mps, &c.shifted(k)).unwrap();
        prop_assert!(b.relative_deviation(&a) <= 1e-12);
    }

    #[test]
    fn power_law_fit_ignores_point_order(
        b in 1e-9..1e-6f64,
        c in 0.5..3.0f64,
        swaps in prop::collection::vec((0usize..6, 0usize..6), 1..6),
    ) {
        let mut pts: Vec<(f64, f64)> =
            [10.0, 20.0, 40.0, 60.0, 100.0, 150.0].iter().map(|&n| (n, 1e-7 + b * f64::powf(n, c))).collect();
        let reference = fit_power_law(&pts).unwrap();
        for (i, j) in swaps {
            pts.swap(i, j);
        }
        prop_assert_eq!(fit_power_law(&pts).unwrap(), reference);
    }

    #[test]
    fn lower_goals_never_raise_nstar(
        a in -1e-6..1e-6f64,
        b in 1e-10..1e-6f64,
        c in 0.2..4.0f64,
        g1 in 1e-5..1e-3f64,
        shrink in 0.01..1.0f64,
    ) {
        let fit = PowerLawFit {
            a,
            b,
            c,
            std_errors: [0.0; 3],
            covariance: [[0.0; 3]; 3],
            residual_norm: 0.0,
            n_points: 4,
            n_min: 10.0,
            n_max: 200.0,
        };
        let g2 = g1 * shrink;
        if let (Ok(hi), Ok(lo)) = (extract_nstar(&fit, g1), extract_nstar(&fit, g2)) {
            prop_assert!(lo.value <= hi.value);
        }
    }

    #[test]
    fn exponent_of_exact_power_law_is_exact(
        gamma in 0.5..5.0f64,
        pre in 0.1..10.0f64,
    ) {
        let pts: Vec<(f64, f64)> = [4.0, 8.0, 16.0, 32.0].iter().map(|&x| (x, pre * f64::powf(x, gamma))).collect();
        let r = fit_descriptive_exponent(&pts, 1e-5).unwrap();
        prop_assert!((r.exponent - gamma).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn exact_correlator_is_reflection_symmetric(n in 4usize..=12, lambda in 0.1..2.0f64) {
        let ed = ed_ground_state(&IsingChainSpec::new(n, lambda).unwrap()).unwrap();
        for r in 1..n {
            let (a, b) = (ed.zz_correlator[r - 1], ed.zz_correlator[n - r - 1]);
            prop_assert!((a - b).abs() <= 1e-10, "r={r}: {a} {b}");
        }
    }

    #[test]
    fn ground_energy_decreases_with_field(n in 3usize..=40, lo in 0.0..2.0f64, step in 0.0..1.0f64) {
        let e = |l: f64| exact_ising_ground_energy(&IsingChainSpec::new(n, l).unwrap()).energy_density;
        prop_assert!(e(lo + step) <= e(lo) + 1e-14);
    }
}
