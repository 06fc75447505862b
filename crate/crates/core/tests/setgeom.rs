use fgl_core::lattice::{ball_mask, measure, CellSet, Lattice};
use fgl_core::nonlocal::{build_kernel, Region};
use fgl_core::setgeom::*;
use fgl_core::Error;
use proptest::prelude::*;

fn lat2(half: i64) -> Lattice {
    Lattice::centered(2, 1.0, half).unwrap()
}

fn rect(l: &Lattice, lo: [i64; 2], hi: [i64; 2]) -> CellSet {
    CellSet::index_box(l, lo, hi)
}

#[test]
fn interaction_basics() {
    let l = lat2(8);
    let k = build_kernel(&l, 0.3, 4, 1e-7).unwrap();
    let a = rect(&l, [-3, -3], [0, 1]);
    let d = rect(&l, [1, -2], [4, 3]);
    let empty = CellSet::empty(&l);
    assert_eq!(l_interaction(&k, &empty, Region::cells(&d)).unwrap(), 0.0);
    let ad = l_interaction(&k, &a, Region::cells(&d)).unwrap();
    let da = l_interaction(&k, &d, Region::cells(&a)).unwrap();
    assert!(ad > 0.0);
    assert!((ad - da).abs() <= 1e-13 * ad);
    let brute: f64 = a.iter().flat_map(|i| d.iter().map(move |j| (i, j))).map(|(i, j)| k.weight(i, j)).sum();
    assert!((ad - brute).abs() <= 1e-12 * ad);
    let a1 = rect(&l, [-3, -3], [-1, 1]);
    let a2 = rect(&l, [-1, -3], [0, 1]);
    let sum = l_interaction(&k, &a1, Region::cells(&d)).unwrap() + l_interaction(&k, &a2, Region::cells(&d)).unwrap();
    assert!((sum - ad).abs() <= 1e-13 * ad);
    let ext = l_interaction(&k, &a, Region::with_exterior(&d)).unwrap();
    assert!(ext > ad);
    let over = rect(&l, [-1, -1], [2, 2]);
    assert!(matches!(l_interaction(&k, &a, Region::cells(&over)), Err(Error::Overlap { .. })));
}

#[test]
fn interaction_matches_closed_form_in_one_dimension() {
    // ∫_0^1 ∫_2^3 (y - x)^{-3/2} dy dx = 8√2 - 4√3 - 4
    let exact = 8.0 * 2f64.sqrt() - 4.0 * 3f64.sqrt() - 4.0;
    for h in [1.0, 0.25] {
        let l = Lattice::new(1, h, &[-8], &[16]).unwrap();
        // All pair offsets stay within the near radius, so every weight is an exact cell-pair integral.
        let k = build_kernel(&l, 0.25, 12, 1e-9).unwrap();
        let m = (1.0 / h) as i64;
        let a = CellSet::index_box(&l, [0, 0], [m, 1]);
        let d = CellSet::index_box(&l, [2 * m, 0], [3 * m, 1]);
        let got = l_interaction(&k, &a, Region::cells(&d)).unwrap();
        assert!((got - exact).abs() < 0.005 * exact, "h = {h}: {got} vs {exact}");
    }
}

#[test]
fn shadows() {
    let l = lat2(6);
    let b = rect(&l, [0, 0], [2, 3]);
    assert_eq!(project_measure(&b, 0).unwrap(), 3.0);
    assert_eq!(project_measure(&b, 1).unwrap(), 2.0);
    assert_eq!(project_measure(&CellSet::empty(&l), 0).unwrap(), 0.0);
    let mut shape = rect(&l, [0, 0], [2, 1]);
    shape.insert(l.index([0, 1]).unwrap());
    assert_eq!(project_measure(&shape, 0).unwrap(), 2.0);
    assert_eq!(project_measure(&shape, 1).unwrap(), 2.0);
    assert!(project_measure(&shape, 2).is_err());
    let fine = Lattice::centered(2, 0.5, 6).unwrap();
    assert_eq!(project_measure(&rect(&fine, [0, 0], [2, 3]), 0).unwrap(), 1.5);
}

#[test]
fn loomis_whitney_cases() {
    let l = lat2(6);
    let r = check_loomis_whitney(&rect(&l, [0, 0], [2, 3])).unwrap();
    assert!(r.holds && r.equality && r.best_holds);
    assert_eq!((r.lhs, r.rhs), (6, 6));
    let mut shape = rect(&l, [0, 0], [2, 1]);
    shape.insert(l.index([0, 1]).unwrap());
    let r = check_loomis_whitney(&shape).unwrap();
    assert_eq!((r.lhs, r.rhs), (3, 4));
    assert!(r.holds && !r.equality);
    for (w, hgt) in [(1, 1), (5, 5), (3, 7), (12, 1)] {
        let r = check_loomis_whitney(&rect(&l, [-6, -6], [-6 + w, -6 + hgt])).unwrap();
        assert!(r.equality);
    }
    assert!(check_loomis_whitney(&CellSet::empty(&l)).is_err());
    let l1 = Lattice::centered(1, 1.0, 5).unwrap();
    let r = check_loomis_whitney(&CellSet::index_box(&l1, [0, 0], [3, 1])).unwrap();
    assert!(r.holds && r.equality);
}

#[test]
fn loomis_whitney_random_corpus() {
    let l = lat2(16);
    let params = CorpusParams { cases: 100, max_side: 12, margin: 0, target: CellTarget::AtMost(400), seed: 9, ..Default::default() };
    let (sets, manifest) = generate_sets(&l, &params).unwrap();
    assert_eq!(manifest.cases.len(), 100);
    for s in &sets {
        assert!(s.count() <= 400 && s.count() > 0);
        let r = check_loomis_whitney(s).unwrap();
        assert!(r.holds && r.best_holds, "{r:?}");
    }
}

#[test]
fn corpus_is_reproducible_and_respects_constraints() {
    let l = lat2(12);
    let params = CorpusParams { cases: 20, seed: 4, margin: 3, b_fraction_max: 0.3, ..Default::default() };
    let (p1, m1) = generate_pairs(&l, &params).unwrap();
    let (p2, m2) = generate_pairs(&l, &params).unwrap();
    assert_eq!(m1, m2);
    assert_eq!(p1, p2);
    for (a, b) in &p1 {
        assert_eq!(a.overlap_count(b).unwrap(), 0);
        assert!(b.count() as f64 <= 0.3 * a.count() as f64);
        for i in a.union(b).unwrap().iter() {
            let g = l.global(i);
            assert!(g[0] >= -9 && g[0] < 9 && g[1] >= -9 && g[1] < 9);
        }
    }
    let exact = CorpusParams { cases: 10, target: CellTarget::Exactly(57), ..Default::default() };
    let (sets, _) = generate_sets(&l, &exact).unwrap();
    assert!(sets.iter().all(|s| s.count() == 57));
    let json = serde_json::to_string(&m1).unwrap();
    assert!(json.contains("\"seed\":4"));
    let bad = CorpusParams { margin: 12, ..Default::default() };
    assert!(generate_sets(&l, &bad).is_err());
}

#[test]
fn gmt_regimes() {
    let l = lat2(12);
    let k = build_kernel(&l, 0.25, 4, 1e-7).unwrap();
    let a = rect(&l, [-4, -4], [4, 4]);
    let empty = CellSet::empty(&l);
    let r = check_gmt(&k, &a, &empty, 0.05).unwrap();
    assert_eq!(r.regime, GmtRegime::SmallB);
    assert!((r.bound - 64f64.powf(0.75)).abs() < 1e-12);
    assert!(r.ratio.is_finite() && r.ratio > 0.0);
    let big_b = rect(&l, [4, -4], [8, 4]);
    let r = check_gmt(&k, &a, &big_b, 0.05).unwrap();
    assert_eq!(r.regime, GmtRegime::LargeB);
    assert!((r.bound - 64f64.powf(0.75) * 0.5f64.powf(-0.25)).abs() < 1e-12);
    assert!(r.ratio > 0.0);
    assert!(check_gmt(&k, &empty, &a, 0.05).is_err());
    assert!(matches!(check_gmt(&k, &a, &a, 0.05), Err(Error::Overlap { .. })));
    for s in [0.5, 0.75] {
        let k = build_kernel(&l, s, 4, 1e-7).unwrap();
        let r = check_gmt(&k, &a, &empty, 0.05).unwrap();
        assert!(r.b_floored && r.ratio > 0.0 && r.ratio.is_finite());
        let thin = rect(&l, [4, 0], [5, 2]);
        let r = check_gmt(&k, &a, &thin, 0.05).unwrap();
        assert!(!r.b_floored && r.regime == GmtRegime::SmallB && r.ratio > 0.0);
    }
}

#[test]
fn gmt_ratio_is_resolution_stable_for_small_s() {
    let l = lat2(10);
    let a = rect(&l, [-4, -3], [3, 4]);
    let b = rect(&l, [3, 0], [4, 1]);
    let k = build_kernel(&l, 0.25, 4, 1e-7).unwrap();
    let coarse = check_gmt(&k, &a, &b, 0.05).unwrap();
    let fine_l = l.refined(2).unwrap();
    let kf = build_kernel(&fine_l, 0.25, 4, 1e-7).unwrap();
    let fine = check_gmt(&kf, &a.refined(2).unwrap(), &b.refined(2).unwrap(), 0.05).unwrap();
    assert_eq!(fine.measure_a, coarse.measure_a);
    assert!((fine.ratio / coarse.ratio - 1.0).abs() < 0.05, "{} vs {}", coarse.ratio, fine.ratio);
}

#[test]
fn gmt_random_pairs_small_b() {
    let l = lat2(16);
    let k = build_kernel(&l, 0.25, 4, 1e-7).unwrap();
    let params = CorpusParams { cases: 50, seed: 21, margin: 3, b_fraction_max: 0.05, ..Default::default() };
    let (pairs, _) = generate_pairs(&l, &params).unwrap();
    let min = pairs
        .iter()
        .map(|(a, b)| check_gmt(&k, a, b, 0.05).unwrap())
        .inspect(|r| assert_eq!(r.regime, GmtRegime::SmallB))
        .map(|r| r.ratio)
        .fold(f64::INFINITY, f64::min);
    assert!(min > 0.0 && min.is_finite());
}

#[test]
fn gmt_local_cube() {
    let l = lat2(10);
    let q = rect(&l, [-8, -8], [8, 8]);
    let a = rect(&l, [-8, -8], [-1, 8]);
    let d = rect(&l, [1, -8], [8, 8]);
    let k = build_kernel(&l, 0.75, 4, 1e-7).unwrap();
    let r = check_gmt_local(&k, &a, &d, &q, 0.25).unwrap();
    let brute: f64 = a.iter().flat_map(|i| d.iter().map(move |j| (i, j))).map(|(i, j)| k.weight(i, j)).sum();
    assert!((r.l - brute).abs() <= 1e-12 * brute);
    assert_eq!(r.measure_b, 32.0);
    assert!((r.bound - 256f64.powf(0.25) * 8f64.powf(0.5)).abs() < 1e-12);
    assert!(r.ratio > 0.0);
    // One-column gap: larger bound, still a positive ratio.
    let d1 = rect(&l, [0, -8], [8, 8]);
    let r1 = check_gmt_local(&k, &a, &d1, &q, 0.25).unwrap();
    assert!(r1.bound > r.bound && r1.l.is_finite() && r1.ratio > 0.0);
    // No gap: |B| floored at one cell.
    let a0 = rect(&l, [-8, -8], [0, 8]);
    let r0 = check_gmt_local(&k, &a0, &d1, &q, 0.25).unwrap();
    assert!(r0.b_floored && r0.measure_b_used == 1.0 && r0.ratio > 0.0);
    let small = rect(&l, [1, -8], [2, -7]);
    match check_gmt_local(&k, &a, &small, &q, 0.25) {
        Err(Error::Precondition(m)) => assert!(m.contains("|D|"), "{m}"),
        other => panic!("{other:?}"),
    }
    let kh = build_kernel(&l, 0.5, 4, 1e-7).unwrap();
    let rh = check_gmt_local(&kh, &a, &d, &q, 0.25).unwrap();
    assert!((rh.bound - 256f64.powf(0.5) * 8f64.ln()).abs() < 1e-12);
    let kl = build_kernel(&l, 0.25, 4, 1e-7).unwrap();
    assert!(check_gmt_local(&kl, &a, &d, &q, 0.25).is_err());
}

#[test]
fn sobolev_point_bound_closed_form() {
    let h = 1.0 / 64.0;
    let l = Lattice::centered(1, h, 256).unwrap();
    let k = build_kernel(&l, 0.25, 4, 1e-9).unwrap();
    let e = CellSet::index_box(&l, [-64, 0], [64, 1]);
    assert_eq!(measure(&e), 2.0);
    let x = l.index([0, 0]).unwrap();
    let p = sobolev_set_bound(&k, &e, x).unwrap();
    assert!((p.lhs - 4.0).abs() < 0.01 * 4.0, "{}", p.lhs);
    assert!((p.constant - p.lhs * 2f64.powf(0.5)).abs() < 1e-12);
    let bigger = CellSet::index_box(&l, [-80, 0], [70, 1]);
    assert!(sobolev_set_bound(&k, &bigger, x).unwrap().lhs <= p.lhs);
    assert!(sobolev_set_bound(&k, &CellSet::empty(&l), x).is_err());
    let f = CellSet::index_box(&l, [-8, 0], [8, 1]);
    let (total, c) = sobolev_integrated(&k, &e, &f).unwrap();
    let pts = sobolev_set_bounds(&k, &e, &f).unwrap();
    let direct: f64 = pts.iter().map(|(_, p)| p.lhs * h).sum();
    assert!((total - direct).abs() < 1e-12 * total);
    assert!((c - total * 2f64.sqrt() / 0.25).abs() < 1e-12 * c);
}

#[test]
fn centered_ball_is_extremal_among_equal_measure_sets() {
    let l = lat2(12);
    let k = build_kernel(&l, 0.25, 4, 1e-7).unwrap();
    let ball = ball_mask(&l, [0.5, 0.5], 4.0).unwrap();
    let x = l.index([0, 0]).unwrap();
    let at_ball = sobolev_set_bound(&k, &ball, x).unwrap().constant;
    let params = CorpusParams { cases: 20, seed: 2, margin: 3, target: CellTarget::Exactly(ball.count()), ..Default::default() };
    let (sets, _) = generate_sets(&l, &params).unwrap();
    for e in &sets {
        let best = sobolev_set_bounds(&k, e, e).unwrap().into_iter().map(|(_, p)| p.constant).fold(f64::INFINITY, f64::min);
        assert!(at_ball <= best * 1.05, "{at_ball} vs {best}");
    }
}

#[test]
fn ell_scale_cases() {
    assert_eq!(ell_scale(123.0, 0.7, 2).unwrap(), 1.0);
    assert!((ell_scale(16.0, 0.25, 2).unwrap() - 2.0).abs() < 1e-15);
    assert!((ell_scale(std::f64::consts::E, 0.5, 1).unwrap() - 1.0).abs() < 1e-15);
    assert!(ell_scale(1.0, 0.5, 2).is_err());
    assert!(ell_scale(0.0, 0.3, 2).is_err());
    assert!(ell_scale(2.0, 1.0, 2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shadows_monotone_and_lw_holds(bits in proptest::collection::vec(any::<bool>(), 100), extra in 0usize..100) {
        let l = Lattice::centered(2, 1.0, 5).unwrap();
        let small = CellSet::from_members(&l, bits).unwrap();
        let mut big = small.clone();
        big.insert(extra);
        for axis in 0..2 {
            prop_assert!(project_measure(&small, axis).unwrap() <= project_measure(&big, axis).unwrap());
        }
        let r = check_loomis_whitney(&big).unwrap();
        prop_assert!(r.holds && r.best_holds);
    }

    #[test]
    fn interaction_additive_and_symmetric(bits in proptest::collection::vec(0u8..3, 64)) {
        let l = Lattice::centered(2, 1.0, 4).unwrap();
        let k = build_kernel(&l, 0.6, 3, 1e-6).unwrap();
        let a1 = CellSet::from_fn(&l, |i| bits[i] == 0 && i % 2 == 0);
        let a2 = CellSet::from_fn(&l, |i| bits[i] == 0 && i % 2 == 1);
        let d = CellSet::from_fn(&l, |i| bits[i] == 1);
        let a = a1.union(&a2).unwrap();
        let whole = l_interaction(&k, &a, Region::with_exterior(&d)).unwrap();
        let parts = l_interaction(&k, &a1, Region::with_exterior(&d)).unwrap() + l_interaction(&k, &a2, Region::with_exterior(&d)).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.max(1e-300));
        let ad = l_interaction(&k, &a, Region::cells(&d)).unwrap();
        let da = l_interaction(&k, &d, Region::cells(&a)).unwrap();
        prop_assert!((ad - da).abs() <= 1e-12 * ad.max(1e-300));
        prop_assert!(ad >= 0.0);
    }
}
