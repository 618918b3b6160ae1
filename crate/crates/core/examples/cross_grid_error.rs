//! Exact L2 distance between piecewise-constant fields on unrelated grids.

use peristatic::{l2_diff, l2_norm, BoxDomain, Lattice, PiecewiseConstantField, Vec2};

fn main() -> peristatic::Result<()> {
    let domain = BoxDomain::new(Vec2::ZERO, Vec2::new(1.0, 1.0))?;
    let f = |x: Vec2| Vec2::new((3.0 * x.x).sin(), x.x * x.y);
    let fine = PiecewiseConstantField::from_fn(&Lattice::new(domain, 1.0 / 210.0)?, f);
    println!("|f_fine| = {:.6}", l2_norm(&fine));
    for n in [3, 5, 7, 11, 13] {
        let coarse = PiecewiseConstantField::from_fn(&Lattice::new(domain, 1.0 / n as f64)?, f);
        println!(
            "n = {n:>2}: |f_n - f_fine| = {:.6e}",
            l2_diff(&coarse, &fine)?
        );
    }
    Ok(())
}
