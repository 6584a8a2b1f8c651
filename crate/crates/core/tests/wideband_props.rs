mod common;

use proptest::prelude::*;
use twinshift_core::design::design_analog_for_kind;
use twinshift_core::linalg::hermitian_eigen_desc;
use twinshift_core::{
    analog_objective, design_link, design_wideband, jensen_sides, optimal_fully_digital, sample_wideband_channel,
    Architecture, ArrayGeometry, CMat, LinkSetup, NetworkKind, WidebandDesignInput,
};

fn wideband(subcarriers: usize, seed: u64) -> Vec<CMat> {
    let tx = ArrayGeometry::half_wavelength(4, 4).unwrap();
    let rx = ArrayGeometry::half_wavelength(2, 2).unwrap();
    sample_wideband_channel(&tx, &rx, 4, subcarriers, 8, &mut common::rng(seed))
        .unwrap()
        .per_subcarrier
}

#[test]
fn single_subcarrier_matches_narrowband_objective() {
    let setup = LinkSetup::new(2, 4);
    for seed in 0..20 {
        let h = wideband(1, seed).remove(0);
        let fd = optimal_fully_digital(&h, 2).unwrap();
        let target = fd.combiner.adjoint() * &h;
        let input = WidebandDesignInput::new(vec![target.clone()], 2).unwrap();
        let init = common::gaussian(16, 4, &mut common::rng(seed + 100));
        for kind in [NetworkKind::Dynamic, NetworkKind::Interlaced, NetworkKind::UniformHigh] {
            let narrow = design_analog_for_kind(&target, &init, kind, &setup, &mut common::rng(0)).unwrap();
            let wide = design_analog_for_kind(&input.effective_target(), &init, kind, &setup, &mut common::rng(0)).unwrap();
            let a = analog_objective(&target, &narrow.matrix);
            let b = analog_objective(&target, &wide.matrix);
            assert!((a - b).abs() < 1e-8, "seed {seed} {kind:?}: {a} vs {b}");
        }
    }
}

#[test]
fn single_subcarrier_full_design_matches_narrowband_rate() {
    let setup = LinkSetup::new(2, 2);
    for seed in 0..20 {
        let h = wideband(1, seed).remove(0);
        for arch in [Architecture::FullDigital, Architecture::Hybrid(NetworkKind::Dynamic)] {
            let narrow = design_link(&h, arch, &setup, &mut common::rng(0)).unwrap();
            let wide = design_wideband(std::slice::from_ref(&h), arch, &setup, &mut common::rng(0)).unwrap();
            let a = narrow.rate(&h, 10.0, 1.0).unwrap();
            let b = wide.average_rate(std::slice::from_ref(&h), 10.0, 1.0).unwrap();
            assert!((a - b).abs() < 1e-8, "seed {seed} {}: {a} vs {b}", arch.label());
        }
    }
}

#[test]
fn flat_channel_attains_equality() {
    let h = wideband(1, 5).remove(0);
    let fd = optimal_fully_digital(&h, 2).unwrap();
    let target = fd.combiner.adjoint() * &h;
    let input = WidebandDesignInput::new(vec![target.clone(); 6], 2).unwrap();
    let f = common::gaussian(16, 2, &mut common::rng(6));
    let (avg, bound) = jensen_sides(&input, &f, 0.3).unwrap();
    assert!((avg - bound).abs() < 1e-10);
    let oracle = common::rate(&target, &CMat::identity(2, 2), &f, 0.3);
    assert!((avg - oracle).abs() < 1e-9);
}

#[test]
fn designed_wideband_rate_below_bound() {
    let setup = LinkSetup::new(2, 4);
    for seed in 0..10 {
        let channels = wideband(16, seed);
        let d = design_wideband(&channels, Architecture::Hybrid(NetworkKind::Dynamic), &setup, &mut common::rng(0)).unwrap();
        let f = &d.f_rf * &d.digital[0];
        let (avg, bound) = jensen_sides(&d.input, &f, 10.0 / 2.0).unwrap();
        assert!(avg <= bound + 1e-9);
        let analog = d.analog.as_ref().unwrap();
        assert!(analog.modulus_defect() < 1e-12 && analog.grid_defect() < 1e-12);
    }
}

proptest! {
    #![proptest_config(common::no_persist(32))]

    #[test]
    fn jensen_bound_for_random_precoders(seed in any::<u64>(), p in 1usize..12, scale in 0.01f64..20.0) {
        let mut rng = common::rng(seed);
        let targets: Vec<CMat> = (0..p).map(|_| common::gaussian(2, 8, &mut rng)).collect();
        let input = WidebandDesignInput::new(targets, 2).unwrap();
        let (values, _) = hermitian_eigen_desc(&input.average);
        prop_assert!(values.iter().all(|&v| v >= -1e-12));
        let f = common::gaussian(8, 3, &mut rng);
        let (avg, bound) = jensen_sides(&input, &f, scale).unwrap();
        prop_assert!(avg <= bound + 1e-9 * bound.abs().max(1.0));
    }
}
