use peristatic::geometry::circle_box_area;
use peristatic::weights::{weight_paac, WeightRule};
use peristatic::{
    build_weights, validate_weights, BoxDomain, Kernel, Lattice, Rect, Vec2, WeightScheme,
    WeightTable,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn monte_carlo(center: Vec2, r: f64, rect: &Rect, samples: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hits = (0..samples)
        .filter(|_| {
            let p = Vec2::new(
                rng.gen_range(rect.min.x..rect.max.x),
                rng.gen_range(rect.min.y..rect.max.y),
            );
            (p - center).norm_sq() < r * r
        })
        .count();
    let n = samples as f64;
    let p = hits as f64 / n;
    // Zero or full hit counts still carry one sample of uncertainty.
    let q = p.clamp(1.0 / n, 1.0 - 1.0 / n);
    let sigma = rect.area() * (q * (1.0 - q) / n).sqrt();
    (p * rect.area(), sigma)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn area_matches_sampling(cx in -1.0..1.0f64, cy in -1.0..1.0f64, r in 0.05..1.5f64,
                             x0 in -1.0..1.0f64, y0 in -1.0..1.0f64, w in 0.01..1.0f64, h in 0.01..1.0f64,
                             seed in any::<u64>()) {
        let rect = Rect::new(Vec2::new(x0, y0), Vec2::new(w, h));
        let c = Vec2::new(cx, cy);
        let exact = circle_box_area(c, r, &rect);
        let (est, sigma) = monte_carlo(c, r, &rect, 100_000, seed);
        prop_assert!(exact >= 0.0 && exact <= rect.area() * (1.0 + 1e-12));
        prop_assert!((exact - est).abs() <= 5.0 * sigma + 1e-12, "exact {} est {} sigma {}", exact, est, sigma);
    }

    #[test]
    fn area_is_additive_under_splitting(cx in -1.0..1.0f64, cy in -1.0..1.0f64, r in 0.05..1.5f64,
                                        x0 in -1.0..1.0f64, y0 in -1.0..1.0f64, w in 0.01..1.0f64, h in 0.01..1.0f64,
                                        t in 0.0..1.0f64) {
        let rect = Rect::new(Vec2::new(x0, y0), Vec2::new(w, h));
        let left = Rect::new(rect.min, Vec2::new(t * w, h));
        let right = Rect::new(Vec2::new(x0 + t * w, y0), Vec2::new((1.0 - t) * w, h));
        let c = Vec2::new(cx, cy);
        let whole = circle_box_area(c, r, &rect);
        let parts = circle_box_area(c, r, &left) + circle_box_area(c, r, &right);
        prop_assert!((whole - parts).abs() <= 1e-12 * (1.0 + whole));
    }

    #[test]
    fn area_is_mirror_symmetric(cx in -1.0..1.0f64, cy in -1.0..1.0f64, r in 0.05..1.5f64,
                                x0 in -1.0..1.0f64, y0 in -1.0..1.0f64, w in 0.01..1.0f64, h in 0.01..1.0f64) {
        let rect = Rect::new(Vec2::new(x0, y0), Vec2::new(w, h));
        let mirrored = Rect::new(Vec2::new(-x0 - w, y0), Vec2::new(w, h));
        let a = circle_box_area(Vec2::new(cx, cy), r, &rect);
        let b = circle_box_area(Vec2::new(-cx, cy), r, &mirrored);
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn paac_weights_are_pair_symmetric(dp in -6i64..=6, dq in -6i64..=6, ratio in 2.0..6.0f64) {
        prop_assume!(dp != 0 || dq != 0);
        let kappa = 0.01;
        let delta = ratio * kappa;
        let lat = Lattice::new(BoxDomain::new(Vec2::ZERO, Vec2::new(0.2, 0.2)).unwrap(), kappa).unwrap();
        let table = build_weights(&lat, &Kernel::inverse_distance(delta).unwrap(), WeightScheme::Paac).unwrap();
        let i = lat.index(10, 10);
        let j = lat.offset(i, dp, dq).unwrap();
        prop_assert_eq!(table.weight(i, j), table.weight(j, i));
        prop_assert!((0.0..=1.0).contains(&table.weight(i, j)));
        let direct = weight_paac(lat.midpoint(i), &lat.cell_rect(j), delta);
        prop_assert!((table.weight(i, j) - direct).abs() <= 1e-12);
    }
}

#[test]
fn quarter_disc_is_exact() {
    for r in [0.1, 0.37, 1.0] {
        let a = circle_box_area(
            Vec2::new(1.0, -2.0),
            r,
            &Rect::new(Vec2::new(1.0, -2.0), Vec2::new(1.0, 1.0)),
        );
        assert!(
            (a - std::f64::consts::PI * r * r / 4.0).abs() <= 1e-12,
            "{r}"
        );
    }
}

#[test]
fn weights_are_translation_invariant_in_the_interior() {
    let lat = Lattice::new(
        BoxDomain::new(Vec2::new(3.0, -1.0), Vec2::new(0.5, 0.5)).unwrap(),
        0.02,
    )
    .unwrap();
    let table = build_weights(
        &lat,
        &Kernel::inverse_distance(0.07).unwrap(),
        WeightScheme::Paac,
    )
    .unwrap();
    let (a, b) = (lat.index(8, 8), lat.index(15, 12));
    let row_a: Vec<_> = table
        .row(a)
        .into_iter()
        .map(|(j, w)| (lat.coords(j), w))
        .collect();
    let row_b: Vec<_> = table
        .row(b)
        .into_iter()
        .map(|(j, w)| (lat.coords(j), w))
        .collect();
    assert_eq!(row_a.len(), row_b.len());
    for (((pa, qa), wa), ((pb, qb), wb)) in row_a.iter().zip(&row_b) {
        assert_eq!((*pb as i64 - *pa as i64, *qb as i64 - *qa as i64), (7, 4));
        assert_eq!(wa, wb);
    }
}

#[test]
fn paac_has_fractional_annulus_and_fa_does_not() {
    let lat = Lattice::new(
        BoxDomain::new(Vec2::ZERO, Vec2::new(2.0, 1.0)).unwrap(),
        1.0 / 40.0,
    )
    .unwrap();
    let k = Kernel::inverse_distance(0.05).unwrap();
    let fa = build_weights(&lat, &k, WeightScheme::Fa).unwrap();
    let paac = build_weights(&lat, &k, WeightScheme::Paac).unwrap();
    let i = lat.index(40, 20);
    assert!(fa.row(i).iter().all(|&(_, w)| w == 1.0));
    assert!(paac.row(i).iter().any(|&(_, w)| w > 0.0 && w < 1.0));
    // PAAC integrates the disc area exactly
    let area: f64 =
        paac.row(i).iter().map(|&(_, w)| w).sum::<f64>() * lat.cell_volume() + lat.cell_volume();
    assert!((area - std::f64::consts::PI * 0.05 * 0.05).abs() <= 1e-14);
}

#[test]
fn custom_csv_with_violation_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let lat = Lattice::new(
        BoxDomain::new(Vec2::ZERO, Vec2::new(0.3, 0.3)).unwrap(),
        0.1,
    )
    .unwrap();
    let path = dir.path().join("w.csv");
    std::fs::write(&path, "i,j,w\n0,1,1\n1,0,0.5\n").unwrap();
    let t = WeightTable::read_csv(&lat, 0.13, &path).unwrap();
    let v = validate_weights(&t, &lat);
    assert!(v.iter().any(|v| v.rule == WeightRule::Symmetric));
    std::fs::write(&path, "i,j,w\n0,1,2\n").unwrap();
    let bad = WeightTable::read_csv(&lat, 0.13, &path);
    let range = bad.map(|t| {
        validate_weights(&t, &lat)
            .iter()
            .any(|v| v.rule == WeightRule::Range)
    });
    assert!(range.unwrap_or(true));
}
