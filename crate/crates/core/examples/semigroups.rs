//! Apply the Dirichlet heat semigroup and the boundary Poisson evolution to a bump on
//! a small grid, and print their sup norms.

use std::sync::Arc;

use dynbc::grid::{BoundaryField, Field, HalfSpaceGrid};
use dynbc::kernels::Dim;
use dynbc::semigroups::{s1_apply, s1_apply_dxn, s2_apply, S1Op, S2Op};

fn main() -> dynbc::Result<()> {
    let grid = Arc::new(HalfSpaceGrid::uniform(Dim::new(2)?, 6.0, 6.0, 97, 97)?);
    let phi = Field::from_fn(&grid, |x, y| (-(x * x) - (y - 1.0).powi(2)).exp())?;
    let psi = BoundaryField::from_fn(&grid, |x| 1.0 / (1.0 + x * x))?;
    println!("‖φ‖ = {:.6}  ‖ψ‖ = {:.6}", phi.sup(), psi.sup());

    println!("\n{:>8} {:>12} {:>14} {:>12}", "τ", "‖S1 φ‖", "‖∂_N S1 φ‖", "‖S2 ψ‖");
    for tau in [0.01, 0.05, 0.2, 1.0] {
        let s1 = S1Op::new(&grid, tau)?;
        let u = s1_apply(&s1, &phi)?;
        let du = s1_apply_dxn(&s1, &phi)?;
        let w = s2_apply(&S2Op::new(&grid, tau)?, &psi)?;
        println!("{tau:>8} {:>12.6} {:>14.6} {:>12.6}", u.sup(), du.sup(), w.sup());
    }
    Ok(())
}
