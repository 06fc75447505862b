use fgl_core::lattice::{ball_mask, psi_field, CellSet, ExteriorData, Lattice, SampledExterior, ScalarField};
use fgl_core::nonlocal::{
    build_kernel, energy_e, energy_f_eps, energy_j_eps, f_eps_factor, frac_laplacian, gagliardo_k, interaction_u,
    potential_term, KernelTable, Region,
};
use fgl_core::potential::DoubleWell;
use fgl_core::quad::{integrate, integrate_with_breaks, QuadConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lat1(h: f64, half: i64) -> Lattice {
    Lattice::centered(1, h, half).unwrap()
}

fn halfspace() -> ExteriorData {
    ExteriorData::HalfspaceSign { axis: 0, threshold: 0.0 }
}

fn random_field(l: Lattice, ext: ExteriorData, seed: u64) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = (0..l.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    ScalarField::new(l, v, ext).unwrap()
}

#[test]
fn kernel_offsets_symmetric() {
    let l = Lattice::centered(2, 0.5, 6).unwrap();
    for &s in &[0.25, 0.5, 0.8] {
        let k = build_kernel(&l, s, 4, 1e-6).unwrap();
        for d0 in -11..=11 {
            for d1 in -11..=11 {
                let w = k.weight_offset([d0, d1]);
                assert_eq!(w, k.weight_offset([-d0, -d1]));
                if (d0, d1) == (0, 0) {
                    assert_eq!(w, 0.0);
                } else {
                    assert!(w > 0.0);
                }
            }
        }
    }
}

#[test]
fn far_offset_uses_midpoint_value() {
    let l = lat1(1.0, 60);
    let k = build_kernel(&l, 0.25, 4, 1e-6).unwrap();
    assert!((k.weight_offset([100, 0]) - 1e-3).abs() < 1e-15);
}

#[test]
fn offset_one_closed_forms() {
    // Cell pair rule, s = 1/4: int_0^1 int_1^2 |x-y|^{-3/2} = 8 - 4 sqrt 2.
    let l = lat1(1.0, 8);
    let k = build_kernel(&l, 0.25, 4, 1e-6).unwrap();
    assert!((k.weight_offset([1, 0]) - (8.0 - 4.0 * 2f64.sqrt())).abs() < 1e-12);
    // The s = 1/2 cell-pair integral diverges at offset 1; the collocation rule
    // gives int_{1/2}^{3/2} y^{-2} dy = 4/3.
    let k = build_kernel(&l, 0.5, 4, 1e-6).unwrap();
    assert!((k.weight_offset([1, 0]) - 4.0 / 3.0).abs() < 1e-14);
    // Spacing scales weights by h^{n-2s}.
    let k2 = build_kernel(&lat1(0.25, 8), 0.25, 4, 1e-6).unwrap();
    assert!((k2.weight_offset([3, 0]) / build_kernel(&l, 0.25, 4, 1e-6).unwrap().weight_offset([3, 0]) - 0.5).abs() < 1e-14);
}

#[test]
fn near_far_switch_is_continuous_to_second_order() {
    // Midpoint and exact pair integrals differ by O(d^-2) relative.
    for &(dim, s) in &[(1usize, 0.25), (1, 0.75), (2, 0.25), (2, 0.75)] {
        let l = Lattice::centered(dim, 1.0, 12).unwrap();
        for nr in [4usize, 8] {
            let k = build_kernel(&l, s, nr, 1e-8).unwrap();
            let near = k.weight_offset([nr as i64, 0]);
            let far = (nr as f64).powf(-(dim as f64 + 2.0 * s));
            let e = dim as f64 + 2.0 * s;
            // Leading term e(e+1)/(12 d^2) for cell pairs, half that for collocation.
            let bound = e * (e + 1.0) / (6.0 * (nr * nr) as f64);
            assert!((near / far - 1.0).abs() < bound, "dim {dim} s {s} nr {nr}: {near} vs {far}");
        }
    }
}

/// Cartesian nested quadrature of the tent-weighted kernel, breaking at the
/// singular point and at the tent kinks.
fn tent_oracle(d: [f64; 2], s: f64) -> f64 {
    let tent = |t: f64| (1.0 - t.abs()).max(0.0);
    let cfg = QuadConfig { rel_tol: 1e-9, abs_tol: 1e-13, max_panels: 2000 };
    let mut bx = vec![d[0] - 1.0, d[0], d[0] + 1.0];
    let mut by = vec![d[1] - 1.0, d[1], d[1] + 1.0];
    for b in [&mut bx, &mut by] {
        if b[0] < 0.0 && b[2] > 0.0 && !b.contains(&0.0) {
            b.push(0.0);
        }
        b.sort_by(f64::total_cmp);
    }
    integrate_with_breaks(
        |z1| {
            integrate_with_breaks(|z0| tent(z0 - d[0]) * tent(z1 - d[1]) * (z0 * z0 + z1 * z1).powf(-1.0 - s), &bx, cfg)
                .value
        },
        &by,
        cfg,
    )
    .value
}

#[test]
fn two_d_cell_pair_weights_match_cartesian_oracle() {
    let s = 0.25;
    let l = Lattice::centered(2, 1.0, 6).unwrap();
    let k = build_kernel(&l, s, 4, 1e-8).unwrap();
    for d in [[1i64, 0], [1, 1], [2, 1], [3, 3]] {
        let w = k.weight_offset(d);
        let o = tent_oracle([d[0] as f64, d[1] as f64], s);
        assert!((w - o).abs() < 1e-6 * o, "{d:?}: {w} vs {o}");
    }
}

#[test]
fn two_d_collocation_weight_matches_polar_oracle() {
    // int over [1/2, 3/2] x [-1/2, 1/2] of |z|^{-2-2s}, integrated in polar form.
    let s = 0.75;
    let l = Lattice::centered(2, 1.0, 6).unwrap();
    let k = build_kernel(&l, s, 4, 1e-8).unwrap();
    let th0 = (0.5f64).atan2(1.5);
    let th1 = (0.5f64).atan2(0.5);
    let radial = |th: f64| {
        let (c, sn) = (th.cos(), th.sin().abs());
        let r_in = 0.5 / c;
        let r_out = (1.5 / c).min(0.5 / sn.max(1e-300));
        if r_out <= r_in {
            0.0
        } else {
            (r_in.powf(-2.0 * s) - r_out.powf(-2.0 * s)) / (2.0 * s)
        }
    };
    let cfg = QuadConfig { rel_tol: 1e-12, abs_tol: 1e-15, max_panels: 10000 };
    let o = 2.0 * integrate_with_breaks(radial, &[0.0, th0, th1], cfg).value;
    let w = k.weight_offset([1, 0]);
    assert!((w - o).abs() < 1e-7 * o, "{w} vs {o}");
}

#[test]
fn constant_field_has_zero_energy() {
    let l = Lattice::centered(2, 1.0, 5).unwrap();
    let k = build_kernel(&l, 0.3, 4, 1e-6).unwrap();
    let u = ScalarField::constant(l, 1.0).unwrap();
    let full = CellSet::full(&l);
    assert_eq!(gagliardo_k(&k, &u, &full).unwrap(), 0.0);
    assert_eq!(energy_e(&k, &DoubleWell::default(), &u, &full).unwrap(), 0.0);
    let fl = frac_laplacian(&k, &u, &full.indices()).unwrap();
    assert!(fl.iter().all(|&v| v == 0.0));
}

#[test]
fn two_cell_configuration_matches_analytic_value() {
    // Omega = [-1,0) u [0,1) with values (-1, +1), +1 everywhere else. Only the
    // cell [-1,0) differs from its surroundings, so
    // K = 4 int_{-1}^0 int_{R \ [-1,0)} |x-y|^{-3/2} dy dx = 4 * 2 * 2 * int_0^1 x^{-1/2} dx = 32.
    let s = 0.25;
    let l = lat1(1.0, 8);
    let k = build_kernel(&l, s, 4, 1e-8).unwrap();
    let mut v = vec![1.0; l.len()];
    let a = l.cell_of([-0.5, 0.0]).unwrap();
    v[a] = -1.0;
    let u = ScalarField::new(l, v, ExteriorData::Constant(1.0)).unwrap();
    let omega = CellSet::from_fn(&l, |i| i == a || i == a + 1);
    let kv = gagliardo_k(&k, &u, &omega).unwrap();
    // Numerical route: the inner integral is ((x+1)^{-2s} + (-x)^{-2s})/(2s);
    // both halves integrate to the same quadrature in the distance variable.
    let half = integrate(|t: f64| t.powf(-2.0 * s) / (2.0 * s), 0.0, 1.0, QuadConfig::rel(1e-12)).value;
    let oracle = 4.0 * 2.0 * half;
    assert!((oracle - 32.0).abs() < 1e-6, "{oracle}");
    assert!((kv - oracle).abs() < 5e-3 * oracle, "{kv} vs {oracle}");
}

#[test]
fn energy_dominates_each_term() {
    let l = Lattice::centered(2, 1.0, 6).unwrap();
    let k = build_kernel(&l, 0.4, 4, 1e-6).unwrap();
    let u = random_field(l, ExteriorData::Constant(-1.0), 3);
    let omega = ball_mask(&l, [0.0, 0.0], 4.0).unwrap();
    let pot = DoubleWell::default();
    let e = energy_e(&k, &pot, &u, &omega).unwrap();
    let kk = gagliardo_k(&k, &u, &omega).unwrap();
    let p = potential_term(&pot, &u, &omega).unwrap();
    assert!(e >= kk && e >= p && kk > 0.0 && p > 0.0);
    assert!((e - kk - p).abs() <= 1e-12 * e);
}

#[test]
fn f_eps_factors() {
    assert!((f_eps_factor(0.25, 0.5).unwrap() - 2f64.sqrt()).abs() < 1e-14);
    assert!((f_eps_factor(0.5, 0.5).unwrap() - 1.0 / (0.5 * 2f64.ln())).abs() < 1e-14);
    assert!((f_eps_factor(0.5, 0.5).unwrap() - 2.885_390_081_777_926_8).abs() < 1e-12);
    assert_eq!(f_eps_factor(0.75, 0.5).unwrap(), 2.0);
    assert!(f_eps_factor(0.5, 1.0).is_err());
    assert!(f_eps_factor(0.25, 0.0).is_err());
    assert!(f_eps_factor(0.25, -1.0).is_err());
    let l = lat1(1.0, 6);
    let pot = DoubleWell::default();
    for &s in &[0.3, 0.7] {
        let k = build_kernel(&l, s, 4, 1e-6).unwrap();
        let u = random_field(l, halfspace(), 9);
        let omega = ball_mask(&l, [0.0, 0.0], 3.0).unwrap();
        let e = energy_e(&k, &pot, &u, &omega).unwrap();
        assert_eq!(energy_j_eps(&k, &pot, &u, &omega, 1.0).unwrap(), e);
        assert_eq!(energy_f_eps(&k, &pot, &u, &omega, 1.0).unwrap(), e);
    }
}

#[test]
fn psi_energy_grows_like_r_to_the_one_minus_2s() {
    let s = 0.25;
    let pot = DoubleWell::default();
    let mut pts = Vec::new();
    for r in [20.0, 40.0, 80.0] {
        let l = Lattice::covering_ball(1, 0.5, r + 2.0, 8).unwrap();
        let k = build_kernel(&l, s, 4, 1e-6).unwrap();
        let psi = psi_field(&l, r).unwrap();
        let omega = ball_mask(&l, [0.0, 0.0], r + 2.0).unwrap();
        pts.push((r.ln(), energy_e(&k, &pot, &psi, &omega).unwrap().ln()));
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!((slope - 0.5).abs() <= 0.15, "slope {slope}");
}

#[test]
fn negation_symmetry() {
    let l = lat1(0.5, 12);
    let k = build_kernel(&l, 0.35, 4, 1e-6).unwrap();
    let vals: Vec<f64> = l.centers().map(|c| (c[0] / 4.0).clamp(-1.0, 1.0) * 0.8).collect();
    let sl = lat1(0.5, 16);
    let ext = ExteriorData::Sampled(
        SampledExterior::new(sl, sl.centers().map(|c| (c[0] / 7.0).tanh()).collect(), 7.5, 1.0).unwrap(),
    );
    let u = ScalarField::new(l, vals, ext).unwrap();
    // The sampled data sits entirely outside a box of half-width 6 except near
    // the boundary; the tail beyond sees the constant +1.
    let omega = ball_mask(&l, [0.0, 0.0], 4.0).unwrap();
    let big = Lattice::centered(1, 0.5, 20).unwrap();
    let kb = build_kernel(&big, 0.35, 4, 1e-6).unwrap();
    let ub = ScalarField::from_exterior(big, u.exterior().clone()).unwrap();
    let ob = ball_mask(&big, [0.0, 0.0], 4.0).unwrap();
    let a = gagliardo_k(&kb, &ub, &ob).unwrap();
    let b = gagliardo_k(&kb, &ub.negated().unwrap(), &ob).unwrap();
    assert!((a - b).abs() <= 1e-13 * a);
    let c = gagliardo_k(&k, &u.with_values(u.values().to_vec()).unwrap(), &omega);
    assert!(c.is_err(), "sampled data not constant beyond the box must be rejected");
}

#[test]
fn interaction_symmetry_and_decomposition() {
    let l = Lattice::centered(2, 1.0, 7).unwrap();
    for &s in &[0.25, 0.75] {
        let k = build_kernel(&l, s, 4, 1e-6).unwrap();
        let u = random_field(l, ExteriorData::HalfspaceSign { axis: 1, threshold: 0.5 }, 11);
        let omega = ball_mask(&l, [0.5, 0.0], 5.0).unwrap();
        let rest = omega.complement();
        let a = CellSet::index_box(&l, [-7, -7], [0, 7]);
        let b = CellSet::index_box(&l, [0, -3], [5, 5]);
        let ab = interaction_u(&k, &u, Region::cells(&a), Region::cells(&b)).unwrap();
        let ba = interaction_u(&k, &u, Region::cells(&b), Region::cells(&a)).unwrap();
        assert!((ab - ba).abs() <= 1e-12 * ab);
        let oo = interaction_u(&k, &u, Region::cells(&omega), Region::cells(&omega)).unwrap();
        let oc = interaction_u(&k, &u, Region::cells(&omega), Region::with_exterior(&rest)).unwrap();
        let co = interaction_u(&k, &u, Region::with_exterior(&rest), Region::cells(&omega)).unwrap();
        assert_eq!(oc, co);
        let kk = gagliardo_k(&k, &u, &omega).unwrap();
        assert!((0.5 * oo + oc - kk).abs() <= 1e-12 * kk);
        assert!(interaction_u(&k, &u, Region::with_exterior(&a), Region::with_exterior(&b)).is_err());
    }
}

#[test]
fn interaction_vanishes_for_constant_data() {
    let l = Lattice::centered(2, 1.0, 5).unwrap();
    let k = build_kernel(&l, 0.6, 4, 1e-6).unwrap();
    let u = ScalarField::constant(l, -0.3).unwrap();
    let a = CellSet::index_box(&l, [-5, -5], [0, 0]);
    let b = a.complement();
    assert_eq!(interaction_u(&k, &u, Region::cells(&a), Region::with_exterior(&b)).unwrap(), 0.0);
}

#[test]
fn frac_laplacian_odd_field_is_antisymmetric() {
    let l = lat1(1.0, 10);
    let k = build_kernel(&l, 0.4, 4, 1e-6).unwrap();
    let vals: Vec<f64> = l.centers().map(|c| (c[0] / 3.0).tanh()).collect();
    let u = ScalarField::new(l, vals, halfspace()).unwrap();
    let (a, b) = (l.cell_of([-0.5, 0.0]).unwrap(), l.cell_of([0.5, 0.0]).unwrap());
    let fl = frac_laplacian(&k, &u, &[a, b]).unwrap();
    assert!((fl[0] + fl[1]).abs() < 1e-12 * fl[1].abs());
}

#[test]
fn frac_laplacian_of_sign_matches_principal_value() {
    // u = sign(x), s = 1/2, x = 1/2: the principal value integral is
    // int_{-inf}^0 2 / (1/2 - y)^2 dy, evaluated by quadrature on t = 1/2 - y.
    let l = lat1(1.0, 32);
    let k = build_kernel(&l, 0.5, 4, 1e-6).unwrap();
    let u = ScalarField::from_exterior(l, halfspace()).unwrap();
    let i = l.cell_of([0.5, 0.0]).unwrap();
    let fl = frac_laplacian(&k, &u, &[i]).unwrap()[0];
    let cfg = QuadConfig::rel(1e-12);
    let near = integrate(|t: f64| 2.0 / (t * t), 0.5, 1e3, cfg).value;
    let oracle = near + 2.0 / 1e3;
    assert!((fl - oracle).abs() < 1e-2 * oracle, "{fl} vs {oracle}");
}

#[test]
fn refinement_changes_smooth_profile_energy_little() {
    let s = 0.3;
    let mut ks = Vec::new();
    for h in [0.5, 0.25] {
        let l = Lattice::centered(1, h, (16.0 / h) as i64).unwrap();
        let k = build_kernel(&l, s, 4, 1e-6).unwrap();
        let vals: Vec<f64> = l.centers().map(|c| (c[0] / 2.0).tanh()).collect();
        let u = ScalarField::new(l, vals, halfspace()).unwrap();
        let omega = ball_mask(&l, [0.0, 0.0], 12.0).unwrap();
        ks.push(gagliardo_k(&k, &u, &omega).unwrap());
    }
    assert!((ks[0] - ks[1]).abs() < 0.05 * ks[1], "{ks:?}");
}

#[test]
fn kernel_cache_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let l = Lattice::centered(2, 0.5, 5).unwrap();
    let k = fgl_core::nonlocal::load_or_build_kernel(dir.path(), &l, 0.3, 4, 1e-6).unwrap();
    let path = fgl_core::nonlocal::cache_path(dir.path(), &l, 0.3, 4, 1e-6);
    assert!(path.exists());
    let k2 = fgl_core::nonlocal::load_kernel(&path, &l, 0.3, 4, 1e-6).unwrap();
    assert_eq!(k.unit_near(), k2.unit_near());
    assert_eq!(k.weight_offset([3, 2]), k2.weight_offset([3, 2]));
    assert!(fgl_core::nonlocal::load_kernel(&path, &l, 0.31, 4, 1e-6).is_err());
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'X';
    std::fs::write(&path, &bytes).unwrap();
    assert!(fgl_core::nonlocal::load_kernel(&path, &l, 0.3, 4, 1e-6).is_err());
}

fn kernel_2d(s: f64) -> KernelTable {
    build_kernel(&Lattice::centered(2, 1.0, 5).unwrap(), s, 4, 1e-6).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn k_is_monotone_in_the_domain(seed in 0u64..1000, s in 0.1f64..0.9) {
        let k = kernel_2d(s);
        let l = *k.lattice();
        let u = random_field(l, ExteriorData::Constant(1.0), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let big = CellSet::from_fn(&l, |_| rng.gen_bool(0.6));
        let small = CellSet::from_fn(&l, |i| big.contains(i) && rng.gen_bool(0.5));
        let a = gagliardo_k(&k, &u, &small).unwrap();
        let b = gagliardo_k(&k, &u, &big).unwrap();
        prop_assert!(a <= b * (1.0 + 1e-12));
    }

    #[test]
    fn k_scales_quadratically(seed in 0u64..1000, lambda in -1.0f64..1.0) {
        let k = kernel_2d(0.45);
        let l = *k.lattice();
        let u = random_field(l, ExteriorData::Constant(0.0), seed);
        let scaled = u.with_values(u.values().iter().map(|v| lambda * v).collect()).unwrap();
        let omega = ball_mask(&l, [0.0, 0.0], 4.0).unwrap();
        let a = gagliardo_k(&k, &u, &omega).unwrap();
        let b = gagliardo_k(&k, &scaled, &omega).unwrap();
        prop_assert!((b - lambda * lambda * a).abs() <= 1e-12 * a);
    }

    #[test]
    fn frac_laplacian_is_half_the_gradient(seed in 0u64..1000, s in 0.1f64..0.9) {
        let k = kernel_2d(s);
        let l = *k.lattice();
        let u = random_field(l, ExteriorData::HalfspaceSign { axis: 0, threshold: -0.5 }, seed);
        let omega = ball_mask(&l, [0.0, 0.0], 4.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 7);
        let delta: Vec<f64> = (0..l.len()).map(|i| if omega.contains(i) { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
        // K is quadratic, so the central difference is exact up to round-off.
        // Base point scaled into the open box so the shifted fields stay admissible.
        let t = 1e-3;
        let u0 = u.with_values(u.values().iter().map(|v| 0.9 * v).collect()).unwrap();
        let fl0 = frac_laplacian(&k, &u0, &omega.indices()).unwrap();
        let pred0 = 2.0 * omega.iter().zip(&fl0).map(|(i, f)| delta[i] * f).sum::<f64>();
        let mv = |sign: f64| {
            let v: Vec<f64> = u0.values().iter().zip(&delta).map(|(a, d)| a + sign * t * d).collect();
            gagliardo_k(&k, &u0.with_values(v).unwrap(), &omega).unwrap()
        };
        let fd = (mv(1.0) - mv(-1.0)) / (2.0 * t);
        prop_assert!((fd - pred0).abs() <= 1e-8 * pred0.abs().max(1e-3), "{} vs {}", fd, pred0);
    }
}
