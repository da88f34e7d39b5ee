use gemmsim::oracle::{check_case, grid, interpret, Matrix};
use gemmsim::{
    channel_volumes, default_tiles, microkernel_menu, naive_gemm, run_oracle, CalibrationProfile,
    ComponentId, Error, GemmShape, MicroKernel, TileConfig, Variant,
};
use proptest::prelude::*;

fn shape(m: usize, n: usize, k: usize) -> GemmShape {
    GemmShape::new(m, n, k).unwrap()
}

#[test]
fn grid_of_reduced_capacities_agrees() {
    let p = CalibrationProfile::gap8();
    let cases = grid(&p, 150, 48, 2024).unwrap();
    assert_eq!(cases.len(), 150);
    for case in &cases {
        let outcome = check_case(&p, case).unwrap();
        assert!(outcome.correct, "wrong product: {case:?}");
        assert!(
            outcome.mismatches.is_empty(),
            "{case:?}: {:?}",
            outcome.mismatches
        );
    }
}

#[test]
fn grid_exercises_partial_blocks() {
    let p = CalibrationProfile::gap8();
    let cases = grid(&p, 100, 48, 1).unwrap();
    let partial = |d: usize, s: usize| d > s && !d.is_multiple_of(s);
    assert!(cases.iter().any(|c| partial(c.shape.m, c.tiles.mc)));
    assert!(cases.iter().any(|c| partial(c.shape.n, c.tiles.nc)));
    assert!(cases.iter().any(|c| partial(c.shape.k, c.tiles.kc)));
    assert!(cases.iter().any(|c| c.shape.m % 4 != 0));
    for v in Variant::ALL {
        assert!(cases.iter().filter(|c| c.variant == v).count() >= 33);
    }
}

#[test]
fn grid_is_deterministic() {
    let p = CalibrationProfile::gap8();
    assert_eq!(grid(&p, 30, 24, 7).unwrap(), grid(&p, 30, 24, 7).unwrap());
    assert_ne!(grid(&p, 30, 24, 7).unwrap(), grid(&p, 30, 24, 8).unwrap());
}

#[test]
fn all_loops_partial_b3c2a0() {
    let p = CalibrationProfile::gap8();
    let (s, mk, t) = (
        shape(12, 20, 8),
        MicroKernel::new(4, 4),
        TileConfig::new(8, 12, 8),
    );
    let r = run_oracle(Variant::B3C2A0, s, mk, t, &p, 3).unwrap();
    assert!(r.correct);
    assert_eq!(
        r.counters,
        channel_volumes(Variant::B3C2A0, s, mk, t).unwrap()
    );
}

#[test]
fn capacity_overflow_is_a_hard_error() {
    // Valid against GAP8 capacities but run with a 4-byte L1.
    let tiny = CalibrationProfile::gap8().with_capacities(4, 1 << 19);
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    let a = Matrix::random(8, 8, &mut rng);
    let err = interpret(
        Variant::B3A2C0,
        MicroKernel::new(4, 4),
        TileConfig::new(8, 8, 8),
        &tiny,
        &a,
        &a,
        &a,
    )
    .unwrap_err();
    match err {
        Error::CapacityOverflow { buffer, .. } => assert_eq!(buffer, "Br"),
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn gap8_capacities_single_block() {
    let p = CalibrationProfile::gap8();
    let s = shape(37, 45, 29);
    for v in Variant::ALL {
        for mk in microkernel_menu(v, &p) {
            let t = default_tiles(v, s, mk, &p).unwrap();
            let r = run_oracle(v, s, mk, t, &p, 5).unwrap();
            assert!(r.correct, "{v} {mk}");
            assert_eq!(
                r.counters,
                channel_volumes(v, s, mk, t).unwrap(),
                "{v} {mk}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn interpreter_matches_closed_forms(
        vi in 0usize..3, m in 1usize..40, n in 1usize..40, k in 1usize..40,
        ki in 0usize..64, l1 in 1usize..24, l2 in 1usize..24, seed in any::<u64>(),
    ) {
        let v = Variant::ALL[vi];
        let base = CalibrationProfile::gap8();
        let menu = microkernel_menu(v, &base);
        let mk = menu[ki % menu.len()];
        let cap_l1 = l1 * mk.first.max(mk.second);
        let p = base.with_capacities(cap_l1, cap_l1 * l2);
        let s = shape(m, n, k);
        let t = match default_tiles(v, s, mk, &p) {
            Ok(t) => t,
            Err(Error::Infeasible { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        let r = run_oracle(v, s, mk, t, &p, seed).unwrap();
        prop_assert!(r.correct);
        prop_assert_eq!(r.elements_checked, m * n);
        prop_assert_eq!(r.counters.differences(&channel_volumes(v, s, mk, t).unwrap()), vec![]);
    }

    #[test]
    fn equal_seeds_equal_results(vi in 0usize..3, m in 1usize..20, n in 1usize..20, k in 1usize..20, seed in any::<u64>()) {
        let v = Variant::ALL[vi];
        let p = CalibrationProfile::gap8();
        let s = shape(m, n, k);
        let mk = MicroKernel::new(4, 4);
        let t = default_tiles(v, s, mk, &p).unwrap();
        prop_assert_eq!(run_oracle(v, s, mk, t, &p, seed).unwrap(), run_oracle(v, s, mk, t, &p, seed).unwrap());
    }

    #[test]
    fn any_tiling_is_correct(
        vi in 0usize..3, m in 1usize..30, n in 1usize..30, k in 1usize..30,
        mcf in 1usize..8, ncf in 1usize..8, kcf in 1usize..8,
    ) {
        // Hand-chosen tiles (not the default policy), valid by construction.
        let v = Variant::ALL[vi];
        let p = CalibrationProfile::gap8();
        let mk = MicroKernel::new(4, 8);
        let (mr, second) = (mk.first, mk.second);
        let round = |d: usize, f: usize, step: usize| (f * step).min(d);
        let t = match v {
            Variant::B3A2C0 => TileConfig::new(round(m, mcf, mr), round(n, ncf, second), kcf * 3),
            _ => TileConfig::new(round(m, mcf, mr), ncf * 5, round(k, kcf, second)),
        };
        let s = shape(m, n, k);
        prop_assume!(gemmsim::validate_config(v, s, mk, t, &p).is_ok());
        let r = run_oracle(v, s, mk, t, &p, 1).unwrap();
        prop_assert!(r.correct);
        prop_assert_eq!(r.counters, channel_volumes(v, s, mk, t).unwrap());
    }
}

#[test]
fn naive_gemm_accumulates_into_c() {
    let a = Matrix::from_rows(&[&[1, 2], &[3, 4]]);
    let b = Matrix::from_rows(&[&[5, 6], &[7, 8]]);
    let c = Matrix::from_rows(&[&[1, 1], &[1, 1]]);
    assert_eq!(
        naive_gemm(&a, &b, &c).unwrap(),
        Matrix::from_rows(&[&[20, 23], &[44, 51]])
    );
}

#[test]
fn stream_volumes_reflect_kernel_shape() {
    let p = CalibrationProfile::gap8();
    let s = shape(24, 24, 24);
    let t = TileConfig::new(24, 24, 24);
    let narrow = run_oracle(Variant::B3A2C0, s, MicroKernel::new(4, 4), t, &p, 0).unwrap();
    let wide = run_oracle(Variant::B3A2C0, s, MicroKernel::new(4, 24), t, &p, 0).unwrap();
    // Ac is streamed once per nr-wide column sliver.
    assert_eq!(
        narrow.counters.volume(ComponentId::StreamL2),
        6 * wide.counters.volume(ComponentId::StreamL2)
    );
}
