//! Cross-check the matrix-free operator on a small lattice: dense assembly,
//! the energy identity, rigid motions and the four-term split.

use peristatic::check::{
    desk_model, matrix_free_columns, max_relative_deviation, null_space_ratio, random_vector,
    DeskMaterial,
};
use peristatic::operator::assemble_dense;
use peristatic::{MatrixFreeOperator, WeightScheme};

fn main() -> peristatic::Result<()> {
    let model = desk_model(10, 5, WeightScheme::Paac, DeskMaterial::Inclusion)?;
    let dense = assemble_dense(&model)?;
    println!(
        "null-space residual ratio {:.3e}",
        null_space_ratio(&model)?
    );
    let op = MatrixFreeOperator::new(model);
    println!(
        "dense vs matrix-free {:.3e}",
        max_relative_deviation(&dense, &matrix_free_columns(&op)?)
    );

    let u = random_vector(op.dim(), 1);
    let bu = op.apply(&u)?;
    let quad: f64 = u.iter().zip(&bu).map(|(a, b)| a * b).sum();
    println!("u.Bu = {quad:.12e}, 2 E(u) = {:.12e}", 2.0 * op.energy(&u)?);

    let split = op.apply_split(&u)?;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    println!(
        "|bond| {:.3e}  |own| {:.3e}  |neighbour| {:.3e}  |third| {:.3e}",
        norm(&split.bond),
        norm(&split.own),
        norm(&split.neighbor),
        norm(&split.third)
    );
    Ok(())
}
