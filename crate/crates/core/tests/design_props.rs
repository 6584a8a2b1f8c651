mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use twinshift_core::design::{design_analog_dynamic_traced, design_analog_fixed_traced, initial_analog};
use twinshift_core::{
    analog_objective, build_fixed_pattern, compute_column_state, design_analog_dynamic, design_analog_fixed,
    design_digital, design_link, optimal_fully_digital, phi_max, sample_channel, Architecture, ArrayGeometry, CMat,
    DesignOptions, HighHalf, LinkSetup, NetworkKind, QuantizerSpec, Resolution,
};

fn q(bits: u32) -> QuantizerSpec {
    QuantizerSpec::new(bits).unwrap()
}

fn desk_channel(seed: u64) -> CMat {
    let tx = ArrayGeometry::half_wavelength(4, 4).unwrap();
    let rx = ArrayGeometry::half_wavelength(4, 2).unwrap();
    sample_channel(&tx, &rx, 4, &mut common::rng(seed)).unwrap().matrix
}

#[test]
fn fully_digital_matches_gram_eigenpairs() {
    let mut rng = common::rng(1);
    let h = common::gaussian(4, 8, &mut rng);
    let fd = optimal_fully_digital(&h, 2).unwrap();
    let gram = h.adjoint() * &h;
    let pairs = common::top_eigenpairs(&gram, 2);
    for (k, (lambda, _)) in pairs.iter().enumerate() {
        let s = fd.singular_values[k];
        assert!((s * s - lambda).abs() / lambda < 1e-6, "{k}: {} vs {lambda}", s * s);
        let hv = &h * fd.precoder.column(k);
        let su = fd.combiner.column(k) * Complex64::new(s, 0.0);
        assert!((hv - su).norm() < 1e-10);
    }
    let wtw = fd.combiner.adjoint() * &fd.combiner;
    assert!(common::max_diff(&wtw, &CMat::identity(2, 2)) < 1e-10);
}

#[test]
fn phi_max_beats_random_probes() {
    let mut rng = common::rng(2);
    for _ in 0..50 {
        let a = common::gaussian(6, 6, &mut rng);
        let g = &a * a.adjoint();
        let col: Vec<Complex64> = common::gaussian(6, 1, &mut rng).iter().copied().collect();
        let i = rng.random_range(0..6);
        let objective = |phase: f64| {
            let mut v = CMat::from_column_slice(6, 1, &col);
            v[(i, 0)] = Complex64::from_polar(col[i].norm(), phase);
            (v.adjoint() * &g * &v)[(0, 0)].re
        };
        let best = objective(phi_max(&g, &col, i));
        for _ in 0..64 {
            let p = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            assert!(best >= objective(p) - 1e-10);
        }
    }
}

#[test]
fn dynamic_outperforms_fixed_patterns_on_average() {
    let setup = LinkSetup::new(4, 4);
    let (mut dynamic, mut interlaced, mut horizontal) = (0.0, 0.0, 0.0);
    for t in 0..100 {
        let h = desk_channel(500 + t);
        let fd = optimal_fully_digital(&h, 4).unwrap();
        let target = fd.combiner.adjoint() * &h;
        let init = initial_analog(&h, 4).unwrap();
        let hi = setup.resolutions.high;
        let lo = setup.resolutions.low;
        let opts = DesignOptions::default();
        dynamic += analog_objective(&target, &design_analog_dynamic(&target, &init, hi, lo, &opts).unwrap().matrix);
        for (kind, acc) in [(NetworkKind::Interlaced, &mut interlaced), (NetworkKind::Horizontal, &mut horizontal)] {
            let pattern = build_fixed_pattern(kind, 16, 4, HighHalf::Leading, &mut common::rng(0)).unwrap();
            *acc += analog_objective(&target, &design_analog_fixed(&target, &init, &pattern, hi, lo, &opts).unwrap().matrix);
        }
    }
    println!("mean objective: dynamic {:.4} interlaced {:.4} horizontal {:.4}", dynamic / 100.0, interlaced / 100.0, horizontal / 100.0);
    assert!(interlaced <= dynamic);
    assert!(horizontal <= dynamic);
}

#[test]
fn designs_are_deterministic() {
    let h = desk_channel(77);
    let setup = LinkSetup::new(4, 4);
    for arch in Architecture::ALL {
        let a = design_link(&h, arch, &setup, &mut common::rng(5)).unwrap();
        let b = design_link(&h, arch, &setup, &mut common::rng(5)).unwrap();
        assert_eq!(a.f_rf, b.f_rf);
        assert_eq!(a.f_bb, b.f_bb);
    }
}

#[test]
fn column_state_residual_small() {
    let mut rng = common::rng(9);
    for _ in 0..50 {
        let target = common::gaussian(2, 8, &mut rng);
        let f = CMat::from_fn(8, 4, |_, _| Complex64::from_polar(8f64.sqrt().recip(), rng.random_range(0.0..6.3)));
        let j = rng.random_range(0..4);
        let s = compute_column_state(&target, &f, j, &DesignOptions::default()).unwrap();
        let x = &target * &f;
        let full = common::det(&(&x * x.adjoint())).re.log2();
        let col = f.column(j).into_owned();
        let quad = (col.adjoint() * &s.g * &col)[(0, 0)].re;
        let split = common::det(&s.c).re.log2() + (1.0 + quad).log2();
        assert!((full - split).abs() < 1e-4);
        assert!(common::max_diff(&s.g, &s.g.adjoint()) < 1e-10);
    }
}

fn arb_kind() -> impl Strategy<Value = NetworkKind> {
    prop::sample::select(NetworkKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(common::no_persist(32))]

    #[test]
    fn designed_links_satisfy_hardware_constraints(seed in any::<u64>(), kind in arb_kind(), hi in 2u32..5, lo in 1u32..3) {
        let h = desk_channel(seed);
        let mut setup = LinkSetup::new(2, 4);
        setup.resolutions = twinshift_core::ResolutionSet::new(hi, 2, lo).unwrap();
        let link = design_link(&h, Architecture::Hybrid(kind), &setup, &mut common::rng(seed ^ 1)).unwrap();
        let analog = link.analog.as_ref().unwrap();
        prop_assert!(analog.modulus_defect() < 1e-12);
        prop_assert!(analog.grid_defect() < 1e-12);
        prop_assert!((common::fro2(&link.precoder()) - 2.0).abs() < 1e-9);
        if kind.is_twin() {
            prop_assert!(analog.pattern.is_twin_balanced());
        }
        if kind == NetworkKind::Dynamic {
            prop_assert!(analog.pattern.is_column_balanced());
        }
        let rate = link.rate(&h, 10.0, 1.0).unwrap();
        let oracle = common::rate_general(&h, &link.f_rf, &link.f_bb, &link.combiner, 10.0, 1.0);
        prop_assert!((rate - oracle).abs() < 1e-9);
    }

    #[test]
    fn greedy_rounds_take_the_closest_candidate(seed in any::<u64>()) {
        let h = desk_channel(seed);
        let fd = optimal_fully_digital(&h, 4).unwrap();
        let target = fd.combiner.adjoint() * &h;
        let init = initial_analog(&h, 4).unwrap();
        let (p, picks) = design_analog_dynamic_traced(&target, &init, q(3), q(1), &DesignOptions::default()).unwrap();
        prop_assert_eq!(picks.len(), 64);
        for k in &picks {
            prop_assert!(k.error <= k.runner_up_error);
            prop_assert_eq!(p.pattern.get(k.row, k.col), k.resolution);
        }
        let (fixed, _) = design_analog_fixed_traced(&target, &init, &p.pattern, q(3), q(1), &DesignOptions::default()).unwrap();
        prop_assert_eq!(fixed.matrix, p.matrix);
    }

    #[test]
    fn digital_stage_normalizes_power(seed in any::<u64>(), streams in 1usize..4) {
        let mut rng = common::rng(seed);
        let h = common::gaussian(4, 8, &mut rng);
        let fd = optimal_fully_digital(&h, streams).unwrap();
        let f_rf = common::gaussian(8, 4, &mut rng);
        let d = design_digital(&h, &fd.combiner, &f_rf, streams).unwrap();
        prop_assert!((common::fro2(&(&f_rf * &d.matrix)) - streams as f64).abs() < 1e-9);
    }
}

#[test]
fn low_entries_follow_pattern_quantizer() {
    let h = desk_channel(31);
    let fd = optimal_fully_digital(&h, 4).unwrap();
    let target = fd.combiner.adjoint() * &h;
    let init = initial_analog(&h, 4).unwrap();
    let p = design_analog_dynamic(&target, &init, q(3), q(1), &DesignOptions::default()).unwrap();
    for j in 0..4 {
        for i in p.pattern.rows_with(j, Resolution::Low) {
            assert!(q(1).grid_distance(p.matrix[(i, j)].arg()) < 1e-12);
        }
    }
}
