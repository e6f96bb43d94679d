//! Builds the rotation that carries an encoder output onto its code vector
//! and shows what it does to a gradient.

use rotvq::geom::{angle_between, rotation_between, DegeneracyGuard};

fn main() -> rotvq::Result<()> {
    let e = [1.0, 0.2, -0.5];
    let q = [0.3, 1.1, 0.4];
    let op = rotation_between(&e, &q, DegeneracyGuard::default())?;

    let r = op.to_matrix()?;
    println!("lambda = {:.4}", op.lambda);
    println!("lambda R e = {:?}", op.apply(&e)?);
    println!("q          = {q:?}");
    println!("|RᵀR - I|  = {:.2e}, det R = {:.6}", r.orthogonality_error()?, r.determinant()?);

    let g = [0.0, -1.0, 0.5];
    let back = op.apply_transpose(&g)?;
    println!("grad at q = {g:?}");
    println!("grad at e = {back:?}");
    println!(
        "angle(grad, q) = {:.4}, angle(back, e) = {:.4}",
        angle_between(&g, &q)?,
        angle_between(&back, &e)?
    );
    Ok(())
}
