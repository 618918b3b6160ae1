use peristatic::check::{
    desk_model, matrix_free_columns, max_relative_deviation, null_space_ratio, random_vector,
    DeskMaterial,
};
use peristatic::operator::{assemble_dense, assemble_dense_bond_only, MatrixFreeOperator};
use peristatic::par::with_threads;
use peristatic::WeightScheme;

const SCHEMES: [WeightScheme; 2] = [WeightScheme::Fa, WeightScheme::Paac];

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn dense_matrix_is_symmetric() {
    for scheme in SCHEMES {
        for material in DeskMaterial::ALL {
            let d = assemble_dense(&desk_model(6, 3, scheme, material).unwrap()).unwrap();
            let n = d.dim();
            for r in 0..n {
                for c in 0..r {
                    let (a, b) = (d.get(r, c), d.get(c, r));
                    assert!(
                        (a - b).abs() <= 1e-13 * d.max_abs(),
                        "{scheme} {material} ({r},{c})"
                    );
                }
            }
        }
    }
}

#[test]
fn matrix_free_matches_dense() {
    for (nx, ny) in [(4, 2), (6, 3), (10, 5)] {
        for scheme in SCHEMES {
            for material in DeskMaterial::ALL {
                let model = desk_model(nx, ny, scheme, material).unwrap();
                let dense = assemble_dense(&model).unwrap();
                let cols = matrix_free_columns(&MatrixFreeOperator::new(model)).unwrap();
                let dev = max_relative_deviation(&dense, &cols);
                assert!(dev <= 1e-12, "{nx}x{ny} {scheme} {material}: {dev:e}");
            }
        }
    }
}

#[test]
fn quadratic_form_is_twice_the_energy() {
    for scheme in SCHEMES {
        for material in DeskMaterial::ALL {
            let op = MatrixFreeOperator::new(desk_model(10, 5, scheme, material).unwrap());
            for seed in 0..10 {
                let u = random_vector(op.dim(), seed);
                let q = dot(&u, &op.apply(&u).unwrap());
                let e = op.energy(&u).unwrap();
                assert!(
                    (q - 2.0 * e).abs() <= 1e-12 * q.abs(),
                    "{scheme} {material}: {q} vs {}",
                    2.0 * e
                );
                assert!(e > 0.0);
            }
        }
    }
}

#[test]
fn energy_density_is_nonnegative_for_positive_bulk() {
    let op =
        MatrixFreeOperator::new(desk_model(10, 5, WeightScheme::Paac, DeskMaterial::Bar).unwrap());
    for seed in 0..5 {
        let u = random_vector(op.dim(), 100 + seed);
        assert!(op.energy_density(&u).unwrap().iter().all(|&w| w >= 0.0));
    }
}

#[test]
fn rigid_motions_are_in_the_kernel() {
    for scheme in SCHEMES {
        for material in DeskMaterial::ALL {
            let r = null_space_ratio(&desk_model(10, 5, scheme, material).unwrap()).unwrap();
            assert!(r <= 1e-9, "{scheme} {material}: {r:e}");
        }
    }
}

#[test]
fn split_terms_sum_to_the_product() {
    for scheme in SCHEMES {
        for material in DeskMaterial::ALL {
            let op = MatrixFreeOperator::new(desk_model(7, 4, scheme, material).unwrap());
            let u = random_vector(op.dim(), 3);
            let full = op.apply(&u).unwrap();
            let split = op.apply_split(&u).unwrap();
            let scale = full.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in full.iter().zip(split.total()) {
                assert!((a - b).abs() <= 1e-12 * scale, "{scheme} {material}");
            }
            if material == DeskMaterial::BondBased {
                assert!(split
                    .own
                    .iter()
                    .chain(&split.neighbor)
                    .chain(&split.third)
                    .all(|&v| v == 0.0));
            }
        }
    }
}

#[test]
fn bond_based_material_drops_state_terms_exactly() {
    for scheme in SCHEMES {
        let model = desk_model(6, 3, scheme, DeskMaterial::BondBased).unwrap();
        assert!(model.material.tau_num.iter().all(|&t| t == 0.0));
        assert_eq!(
            assemble_dense(&model).unwrap(),
            assemble_dense_bond_only(&model).unwrap()
        );
        let op = MatrixFreeOperator::new(model);
        let u = random_vector(op.dim(), 9);
        assert_eq!(op.apply(&u).unwrap(), op.apply_bond_only(&u).unwrap());
    }
}

#[test]
fn state_terms_matter_for_the_bar() {
    let model = desk_model(6, 3, WeightScheme::Paac, DeskMaterial::Bar).unwrap();
    assert_ne!(
        assemble_dense(&model).unwrap(),
        assemble_dense_bond_only(&model).unwrap()
    );
}

#[test]
fn diagonal_blocks_match_dense() {
    for scheme in SCHEMES {
        let model = desk_model(6, 3, scheme, DeskMaterial::Inclusion).unwrap();
        let dense = assemble_dense(&model).unwrap();
        let op = MatrixFreeOperator::new(model);
        for i in 0..op.len() {
            let (a, b) = (op.diagonal_block(i), dense.block(i, i));
            for r in 0..2 {
                for c in 0..2 {
                    assert!((a[r][c] - b[r][c]).abs() <= 1e-12 * dense.max_abs());
                }
            }
        }
    }
}

#[test]
fn dilatation_sums_vanish_on_full_stencils() {
    for scheme in SCHEMES {
        let op = MatrixFreeOperator::new(desk_model(12, 12, scheme, DeskMaterial::Bar).unwrap());
        let lat = op.lattice();
        let i = lat.index(6, 6);
        let g = op.g()[i];
        let corner = op.g()[lat.index(0, 0)];
        assert!(g.norm() <= 1e-12 * corner.norm(), "{scheme}: {g:?}");
    }
}

#[test]
fn products_do_not_depend_on_thread_count() {
    let op = MatrixFreeOperator::new(
        desk_model(40, 20, WeightScheme::Paac, DeskMaterial::Inclusion).unwrap(),
    );
    let u = random_vector(op.dim(), 11);
    let one = with_threads(Some(1), || (op.apply(&u).unwrap(), op.energy(&u).unwrap()));
    let four = with_threads(Some(4), || (op.apply(&u).unwrap(), op.energy(&u).unwrap()));
    assert_eq!(one.0, four.0);
    assert_eq!(one.1.to_bits(), four.1.to_bits());
}

#[test]
fn dense_assembly_refuses_large_lattices() {
    let model = desk_model(120, 60, WeightScheme::Fa, DeskMaterial::Bar).unwrap();
    assert!(matches!(
        assemble_dense(&model),
        Err(peristatic::Error::TooLargeForDense { .. })
    ));
}
