//! Build a lattice, compare FA and PAAC weights around one node, and validate
//! both tables.

use peristatic::{build_weights, validate_weights, BoxDomain, Kernel, Lattice, Vec2, WeightScheme};

fn main() -> peristatic::Result<()> {
    let lattice = Lattice::new(BoxDomain::new(Vec2::ZERO, Vec2::new(2.0, 1.0))?, 1.0 / 40.0)?;
    let kernel = Kernel::inverse_distance(0.05)?;
    let (nx, ny) = lattice.counts();
    println!(
        "{nx} x {ny} cells, volume {:.3e} each",
        lattice.cell_volume()
    );

    let i = lattice.index(40, 20);
    for scheme in [WeightScheme::Fa, WeightScheme::Paac] {
        let table = build_weights(&lattice, &kernel, scheme)?;
        let row = table.row(i);
        let area: f64 = row.iter().map(|&(_, w)| w).sum::<f64>() * lattice.cell_volume()
            + lattice.cell_volume();
        println!(
            "{scheme:>4}: {} neighbours, covered area {area:.6} (disc {:.6}), violations {}",
            row.len(),
            std::f64::consts::PI * 0.05 * 0.05,
            validate_weights(&table, &lattice).len()
        );
        for (j, w) in row.iter().filter(|&&(_, w)| w < 1.0) {
            let (p, q) = lattice.coords(*j);
            println!(
                "      partial cell offset ({:+}, {:+}) w = {w:.6}",
                p as i64 - 40,
                q as i64 - 20
            );
        }
    }
    Ok(())
}
