use peristatic::check::{one_point_errors, refinement_lattice, REFINEMENT_J, REFINEMENT_M};
use peristatic::oracle::{oracle_i1, oracle_i2, relative_block_error, QuadratureRule};
use peristatic::{Error, Kernel};

#[test]
fn one_point_blocks_converge_under_refinement() {
    let errs = one_point_errors(4).unwrap();
    for w in errs.windows(2) {
        assert!(w[1].1 < w[0].1 && w[1].2 < w[0].2, "{errs:?}");
    }
    // the observed ratio per halving is close to 4
    let ratio = errs[2].1 / errs[3].1;
    assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");
}

#[test]
fn oracle_is_self_consistent() {
    let kernel = Kernel::inverse_distance(0.05).unwrap();
    let (lat, i) = refinement_lattice(1).unwrap();
    let j = lat
        .offset(i, 2 * REFINEMENT_J.0, 2 * REFINEMENT_J.1)
        .unwrap();
    let m = lat
        .offset(i, 2 * REFINEMENT_M.0, 2 * REFINEMENT_M.1)
        .unwrap();
    let (a, b) = (
        QuadratureRule::gauss_legendre(6),
        QuadratureRule::gauss_legendre(12),
    );
    let d1 = relative_block_error(
        &oracle_i1(&lat, &kernel, i, j, 1.0, &a).unwrap(),
        &oracle_i1(&lat, &kernel, i, j, 1.0, &b).unwrap(),
    );
    let d2 = relative_block_error(
        &oracle_i2(&lat, &kernel, i, j, m, 1.0, &a).unwrap(),
        &oracle_i2(&lat, &kernel, i, j, m, 1.0, &b).unwrap(),
    );
    assert!(d1 <= 1e-10 && d2 <= 1e-10, "{d1:e} {d2:e}");
}

#[test]
fn cutoff_and_adjacent_cells_are_refused() {
    let kernel = Kernel::inverse_distance(0.05).unwrap();
    let (lat, i) = refinement_lattice(0).unwrap();
    let rule = QuadratureRule::gauss_legendre(4);
    let adjacent = lat.offset(i, 1, 1).unwrap();
    let straddling = lat.offset(i, 9, 0).unwrap();
    assert!(matches!(
        oracle_i1(&lat, &kernel, i, adjacent, 1.0, &rule),
        Err(Error::PairNotSmooth { .. })
    ));
    assert!(matches!(
        oracle_i1(&lat, &kernel, i, straddling, 1.0, &rule),
        Err(Error::PairNotSmooth { .. })
    ));
    let j = lat.offset(i, 4, 2).unwrap();
    let next_to_j = lat.offset(i, 5, 3).unwrap();
    assert!(matches!(
        oracle_i2(&lat, &kernel, i, j, next_to_j, 1.0, &rule),
        Err(Error::TripleNotSmooth { .. })
    ));
}
