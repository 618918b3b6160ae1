//! One-point cell integrals against tensor Gauss–Legendre quadrature as the
//! cells shrink around a fixed bond.

use peristatic::check::one_point_errors;

fn main() -> peristatic::Result<()> {
    println!("{:>10} {:>12} {:>12}", "kappa", "I1 error", "I2 error");
    let errs = one_point_errors(5)?;
    for (kappa, e1, e2) in &errs {
        println!("{kappa:>10.3e} {e1:>12.4e} {e2:>12.4e}");
    }
    for w in errs.windows(2) {
        println!(
            "observed order {:.3} / {:.3}",
            (w[0].1 / w[1].1).log2(),
            (w[0].2 / w[1].2).log2()
        );
    }
    Ok(())
}
