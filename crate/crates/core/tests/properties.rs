use num_complex::Complex64;
use proptest::prelude::*;

use sawtooth_ed::basis::{domain_wall_state, ph_complement, FockState, SectorBasis};
use sawtooth_ed::entanglement::{entanglement_entropy, reduced_density_matrix, Side};
use sawtooth_ed::evolve::{
    diagonal_ensemble_average, diagonalize, krylov_evolve, KrylovOptions, Trajectory,
};
use sawtooth_ed::hamiltonian::{build_hamiltonian, InteractionConvention, ModelParams};
use sawtooth_ed::localization::build_phi_loc;
use sawtooth_ed::spectral_stats::{
    alpha_indicator, brody_fit, histogram, r_statistic, DEFAULT_BIN_WIDTH, DEFAULT_S_MAX,
};

fn coupling() -> impl Strategy<Value = f64> {
    prop_oneof![-2.0..-0.05f64, 0.05..2.0f64]
}

fn convention() -> impl Strategy<Value = InteractionConvention> {
    prop_oneof![Just(InteractionConvention::Plain), Just(InteractionConvention::Symmetrized)]
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalized(v: Vec<Complex64>) -> Vec<Complex64> {
    let n = norm(&v);
    v.into_iter().map(|z| z / n).collect()
}

fn random_state(dim: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), dim)
        .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
        .prop_map(|v| normalized(v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rank_unrank_round_trip(half in 1usize..=14, raw in any::<u64>()) {
        let sites = 2 * half;
        let b = SectorBasis::with_max_sites(sites, half, 28).unwrap();
        let index = (raw % b.dim() as u64) as usize;
        let s = b.unrank(index).unwrap();
        prop_assert_eq!(s.particle_count() as usize, half);
        prop_assert_eq!(b.rank(s).unwrap(), index);
    }

    #[test]
    fn complement_is_an_involution(half in 1usize..=10, raw in any::<u64>()) {
        let sites = 2 * half;
        let b = SectorBasis::half_filled(sites).unwrap();
        let s = b.state((raw % b.dim() as u64) as usize);
        let c = ph_complement(s, sites);
        prop_assert_eq!(c.particle_count(), s.particle_count());
        prop_assert_eq!(c.bits() & s.bits(), 0);
        prop_assert_eq!(ph_complement(c, sites), s);
    }

    #[test]
    fn hamiltonian_is_symmetric_and_conserves_number(
        half in 2usize..=4, j in coupling(), jp in coupling(), v in coupling(), conv in convention()
    ) {
        let sites = 2 * half;
        let basis = SectorBasis::half_filled(sites).unwrap();
        let h = build_hamiltonian(&ModelParams::new(sites, j, jp, v).unwrap(), &basis, conv).unwrap();
        for &(r, c, x) in h.offdiag() {
            prop_assert_eq!(h.get(r, c), h.get(c, r));
            prop_assert_eq!(h.get(r, c), x);
            let (a, b) = (basis.state(r), basis.state(c));
            prop_assert_eq!(a.particle_count(), b.particle_count());
            prop_assert_eq!((a.bits() ^ b.bits()).count_ones(), 2);
        }
    }

    #[test]
    fn propagation_is_unitary_and_reversible(
        j in coupling(), jp in coupling(), conv in convention(), t in 0.1..30.0f64
    ) {
        let basis = SectorBasis::half_filled(8).unwrap();
        let h = build_hamiltonian(&ModelParams::new(8, j, jp, 1.0).unwrap(), &basis, conv).unwrap();
        let spec = diagonalize(&h).unwrap();
        let dw = basis.basis_vector(domain_wall_state(8).unwrap()).unwrap();
        let e0 = h.expectation(&dw).unwrap();
        let traj = Trajectory::new(&spec, &dw).unwrap();
        let psi0: Vec<Complex64> = dw.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let opts = KrylovOptions::default();
        let kry = krylov_evolve(&h, &psi0, t, &opts).unwrap();
        for psi in [traj.state(t), kry.clone()] {
            prop_assert!((norm(&psi) - 1.0).abs() < 1e-12);
            let e = h.expectation_complex(&psi).unwrap();
            prop_assert!((e - e0).abs() <= 1e-10 * e0.abs().max(1.0));
        }
        let back = krylov_evolve(&h, &kry, -t, &opts).unwrap();
        let err = back.iter().zip(&psi0).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-9, "round trip error {}", err);
        prop_assert!((traj.return_probability(t) - traj.return_probability(-t)).abs() < 1e-14);
    }

    #[test]
    fn diagonal_ensemble_energy_is_initial_energy(j in coupling(), jp in coupling(), conv in convention()) {
        let basis = SectorBasis::half_filled(8).unwrap();
        let h = build_hamiltonian(&ModelParams::new(8, j, jp, 1.0).unwrap(), &basis, conv).unwrap();
        let spec = diagonalize(&h).unwrap();
        let dw = basis.basis_vector(domain_wall_state(8).unwrap()).unwrap();
        let de = diagonal_ensemble_average(&spec, &dw, &h).unwrap();
        prop_assert!((de - h.expectation(&dw).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn phi_loc_is_normalized_and_complement_symmetric(
        sites in prop_oneof![Just(6usize), Just(10)], j in coupling(), jp in coupling()
    ) {
        let basis = SectorBasis::half_filled(sites).unwrap();
        let phi = build_phi_loc(&ModelParams::new(sites, j, jp, 1.0).unwrap(), &basis).unwrap();
        let n2: f64 = phi.vector.iter().map(|x| x * x).sum();
        prop_assert!((n2 - 1.0).abs() < 1e-12);
        let nonzero = phi.vector.iter().filter(|x| **x != 0.0).count();
        let expected = if phi.c2 == 0.0 && phi.c3 == 0.0 { 2 } else { 6 };
        prop_assert_eq!(nonzero, expected);
        for i in 0..basis.dim() {
            let c = basis.rank(ph_complement(basis.state(i), sites)).unwrap();
            prop_assert_eq!(phi.vector[i], phi.vector[c]);
        }
    }

    #[test]
    fn gap_ratio_is_bounded(a in -10.0..10.0f64, d1 in 1e-6..5.0f64, d2 in 1e-6..5.0f64) {
        let r = r_statistic(&[a, a + d1, a + d1 + d2]).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.mean));
        prop_assert_eq!(r.count, 1);
    }

    #[test]
    fn gap_ratio_is_affine_invariant(
        gaps in prop::collection::vec(1e-3..3.0f64, 10..200), scale in 1e-3..1e3f64, shift in -1e3..1e3f64
    ) {
        let mut e = 0.0;
        let levels: Vec<f64> = gaps.iter().map(|g| { e += g; e }).collect();
        let moved: Vec<f64> = levels.iter().map(|x| scale * x + shift).collect();
        let a = r_statistic(&levels).unwrap().mean;
        let b = r_statistic(&moved).unwrap().mean;
        prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
    }

    #[test]
    fn alpha_is_non_negative(spacings in prop::collection::vec(0.0..6.0f64, 1..500)) {
        let h = histogram(&spacings, DEFAULT_BIN_WIDTH, DEFAULT_S_MAX).unwrap();
        prop_assert!(alpha_indicator(&h) >= 0.0);
    }

    #[test]
    fn brody_fit_ignores_scale(
        spacings in prop::collection::vec(0.01..4.0f64, 150..400), scale in 0.01..100.0f64
    ) {
        let a = brody_fit(&spacings).unwrap().beta;
        let scaled: Vec<f64> = spacings.iter().map(|s| s * scale).collect();
        let b = brody_fit(&scaled).unwrap().beta;
        prop_assert!((a - b).abs() < 1e-4, "{} vs {}", a, b);
    }

    #[test]
    fn entropy_is_symmetric_and_bounded(psi in random_state(70), cut in 1usize..8, phase in 0.0..6.3f64) {
        let basis = SectorBasis::half_filled(8).unwrap();
        let left = entanglement_entropy(&reduced_density_matrix(&basis, &psi, cut, Side::Left).unwrap());
        let right = entanglement_entropy(&reduced_density_matrix(&basis, &psi, cut, Side::Right).unwrap());
        prop_assert!((left - right).abs() < 1e-10);
        prop_assert!(left >= 0.0 && left <= 4.0 * std::f64::consts::LN_2 + 1e-12);
        let rotated: Vec<Complex64> = psi.iter().map(|z| z * Complex64::from_polar(1.0, phase)).collect();
        let turned = entanglement_entropy(&reduced_density_matrix(&basis, &rotated, cut, Side::Left).unwrap());
        prop_assert!((left - turned).abs() < 1e-10);
    }
}

#[test]
fn rank_round_trip_is_exhaustive_up_to_sixteen_sites() {
    for sites in (2..=16).step_by(2) {
        for particles in 0..=sites {
            let b = SectorBasis::new(sites, particles).unwrap();
            let mut seen = 0usize;
            for bits in 0u64..1 << sites {
                if bits.count_ones() as usize != particles {
                    continue;
                }
                let s = FockState::new(bits);
                let i = b.rank(s).unwrap();
                assert_eq!(i, seen, "ranks follow integer order");
                assert_eq!(b.unrank(i).unwrap(), s);
                seen += 1;
            }
            assert_eq!(seen, b.dim());
        }
    }
}
