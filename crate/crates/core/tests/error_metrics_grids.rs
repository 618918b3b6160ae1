use peristatic::check::{l2_diff_on_refinement, random_unit_square_field};
use peristatic::{l2_diff, l2_norm, BoxDomain, Lattice, PiecewiseConstantField, Vec2};
use proptest::prelude::*;

#[test]
fn cross_grid_difference_matches_common_refinement() {
    for seed in 0..20 {
        let f = random_unit_square_field(0.5, 2 * seed).unwrap();
        let g = random_unit_square_field(1.0 / 3.0, 2 * seed + 1).unwrap();
        let a = l2_diff(&f, &g).unwrap();
        let b = l2_diff_on_refinement(&f, &g, 1.0 / 6.0).unwrap();
        assert!((a - b).abs() <= 1e-12 * b, "{a} {b}");
        assert_eq!(a, l2_diff(&g, &f).unwrap());
    }
}

#[test]
fn nested_grids_agree_with_refinement_too() {
    let f = random_unit_square_field(0.25, 5).unwrap();
    let g = random_unit_square_field(0.125, 6).unwrap();
    let a = l2_diff(&f, &g).unwrap();
    assert!((a - l2_diff_on_refinement(&f, &g, 0.125).unwrap()).abs() <= 1e-12 * a);
}

#[test]
fn difference_to_zero_is_the_norm() {
    let f = random_unit_square_field(1.0 / 7.0, 3).unwrap();
    let zero =
        PiecewiseConstantField::from_fn(&Lattice::new(f.domain, 0.5).unwrap(), |_| Vec2::ZERO);
    assert!((l2_diff(&f, &zero).unwrap() - l2_norm(&f)).abs() <= 1e-14);
}

#[test]
fn other_domains_are_rejected() {
    let f = random_unit_square_field(0.5, 1).unwrap();
    let lat = Lattice::new(
        BoxDomain::new(Vec2::ZERO, Vec2::new(1.0, 2.0)).unwrap(),
        0.5,
    )
    .unwrap();
    let g = PiecewiseConstantField::from_fn(&lat, |_| Vec2::ZERO);
    assert!(l2_diff(&f, &g).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn triangle_inequality(na in 1usize..9, nb in 1usize..9, nc in 1usize..9, seed in any::<u32>()) {
        let s = u64::from(seed) * 3;
        let a = random_unit_square_field(1.0 / na as f64, s).unwrap();
        let b = random_unit_square_field(1.0 / nb as f64, s + 1).unwrap();
        let c = random_unit_square_field(1.0 / nc as f64, s + 2).unwrap();
        let ab = l2_diff(&a, &b).unwrap();
        let bc = l2_diff(&b, &c).unwrap();
        let ac = l2_diff(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!(l2_diff(&a, &a).unwrap() == 0.0);
    }
}
