//! Hyperspherical coordinates and the transport map Ĵ(e)Ĵ(q)ᵀ, compared with
//! the rotation estimator's R.
//!
//! In two dimensions they coincide. In higher dimensions they agree only when
//! e and q differ in the first angle alone.

use rotvq::geom::{cart_to_hypersph, hypersph_to_cart, rotation_between, transport_rotation, DegeneracyGuard};

fn gap(e: &[f64], q: &[f64]) -> rotvq::Result<f64> {
    let t = transport_rotation(q, e, 1e-9)?;
    let r = rotation_between(e, q, DegeneracyGuard::default())?.to_matrix()?;
    t.max_abs_diff(&r.transpose())
}

fn main() -> rotvq::Result<()> {
    let x = [0.3, -1.2, 0.8, 0.5];
    let p = cart_to_hypersph(&x, 1e-12)?;
    println!("x = {x:?}\nr = {:.4}, thetas = {:?}\nback = {:?}", p.r, p.thetas, hypersph_to_cart(&p));

    println!("d=2 generic pair:        max |T - Rᵀ| = {:.2e}", gap(&[1.0, 0.4], &[-0.3, 0.9])?);
    println!(
        "d=3 first angle only:    max |T - Rᵀ| = {:.2e}",
        gap(&[0.6, 0.64, 0.48], &[-0.28, 0.768, 0.576])?
    );
    println!("d=3 generic pair:        max |T - Rᵀ| = {:.2e}", gap(&[1.0, 0.2, -0.5], &[0.3, 1.1, 0.4])?);
    Ok(())
}
