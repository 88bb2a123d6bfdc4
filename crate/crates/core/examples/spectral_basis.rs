//! Sine basis on (0, 1): projecting a function, evaluating it back on the
//! collocation grid, and fractional powers of the Dirichlet Laplacian.

use fracwave::spectral::{EigenBasis, SineTransform, SpectralField};

fn main() -> fracwave::Result<()> {
    let modes = 32;
    let basis = EigenBasis::new(modes)?;
    let transform = SineTransform::with_default_points(modes)?;

    // x(1 - x) has coefficients 2√2 (1 - (-1)^j) / (jπ)³ against √2 sin(jπx).
    let u = transform.project_fn(|x| x * (1.0 - x))?;
    for j in 1..=5 {
        let exact = 2.0 * std::f64::consts::SQRT_2 * (1.0 - (-1f64).powi(j as i32))
            / (j as f64 * std::f64::consts::PI).powi(3);
        println!(
            "u_{j} = {:+.6e}  (series {:+.6e})",
            u.coeffs()[j - 1],
            exact
        );
    }

    let values = transform.evaluate(&u)?;
    let back = transform.project(&values)?;
    println!("round-trip error: {:.2e}", (&back - &u).norm());

    for nu in [0.0, 0.5, 1.0] {
        println!("|u|_(H^{nu}) = {:.6}", basis.sobolev_norm(&u, nu)?);
    }

    let e3 = SpectralField::single_mode(modes, 3, 1.0)?;
    let lifted = basis.apply_fractional(&e3, 0.8)?;
    println!(
        "A^0.4 e_3 = {:.4} e_3, λ_3^0.4 = {:.4}",
        lifted.coeffs()[2],
        basis.eigenvalue(3).powf(0.4)
    );
    Ok(())
}
