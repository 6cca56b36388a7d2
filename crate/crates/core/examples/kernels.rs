//! Evaluate the pointwise kernels and print a few of their identities.

use dynbc::kernels::{
    dirichlet_heat_kernel, dirichlet_kernel_dxn, gauss_kernel, normalization_constant, poisson_cap_mass_3d,
    poisson_dyn_kernel, poisson_tail_2d, KernelPoint,
};

fn main() -> dynbc::Result<()> {
    for n in 2..=5 {
        println!("c_{n} = {:.15}", normalization_constant(n)?);
    }

    let t = 0.3;
    println!("\nGauss kernel in d = 1 at z = 0.5, t = {t}: {:.6e}", gauss_kernel(1, &[0.5], t)?);
    for y_n in [0.1, 0.5, 1.0] {
        let p = KernelPoint::new(vec![0.2, 0.3], vec![0.0, y_n], t)?;
        println!(
            "Dirichlet kernel at x = (0.2, 0.3), y = (0, {y_n}): {:.6e}, normal derivative {:.6e}",
            dirichlet_heat_kernel(&p)?,
            dirichlet_kernel_dxn(&p)?
        );
    }

    // the Poisson-type kernel at σ = x_N + t has unit mass; its tails are explicit
    for sigma in [0.01, 0.1, 1.0] {
        let p2 = poisson_dyn_kernel(&[0.0], 0.0, sigma)?;
        let p3 = poisson_dyn_kernel(&[0.0, 0.0], 0.0, sigma)?;
        println!(
            "σ = {sigma:<5} P(0) N=2 {p2:>10.4e}  N=3 {p3:>10.4e}  mass beyond 1: N=2 {:.4e}  N=3 {:.4e}",
            2.0 * poisson_tail_2d(1.0, sigma),
            poisson_cap_mass_3d(1.0, sigma)
        );
    }
    Ok(())
}
