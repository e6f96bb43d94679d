//! Rotation and reflection operators, angles, and hyperspherical frames.
//!
//! The rotation taking `e` to `q` is the product of two Householder
//! reflections, `R = (I - 2 q̂q̂ᵀ)(I - 2 rrᵀ)` with `r` the unit half-vector
//! between `ê` and `q̂`, which simplifies to `R = I - 2rrᵀ + 2q̂êᵀ`. It is
//! applied with two dot products and two axpy updates, so it costs `O(d)` time
//! and memory regardless of dimension.

use crate::error::{check_dims, check_finite, Error, Result};
use crate::linalg::{axpy, cosine, dot, norm, Matrix};

/// Thresholds below which a [`RotationOp`] is marked degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegeneracyGuard {
    /// Minimum norm for `e` and `q`.
    pub norm_eps: f64,
    /// Minimum `|ê + q̂|`; smaller means `e` and `q` are near-antipodal and
    /// the rotation plane is ambiguous.
    pub antipodal_eps: f64,
}

impl Default for DegeneracyGuard {
    fn default() -> Self {
        Self {
            norm_eps: 1e-12,
            antipodal_eps: 1e-7,
        }
    }
}

impl DegeneracyGuard {
    /// One threshold for both checks.
    pub fn uniform(eps: f64) -> Self {
        Self {
            norm_eps: eps,
            antipodal_eps: eps,
        }
    }
}

/// The rotation-and-rescale `λR` aligning `e` with `q`, stored as the three
/// unit vectors that define it.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationOp {
    pub e_hat: Vec<f64>,
    pub q_hat: Vec<f64>,
    pub r: Vec<f64>,
    /// `|q| / |e|`
    pub lambda: f64,
    pub degenerate: bool,
}

/// Builds the rotation taking `e` onto `q`.
///
/// Never fails for finite, equal-length inputs: near-zero norms and
/// near-antipodal pairs produce an op with `degenerate` set, and every apply
/// method on such an op returns [`Error::DegenerateRotation`].
pub fn rotation_between(e: &[f64], q: &[f64], guard: DegeneracyGuard) -> Result<RotationOp> {
    check_dims(e.len(), q.len())?;
    if e.is_empty() {
        return Err(Error::Empty);
    }
    check_finite(e)?;
    check_finite(q)?;

    let d = e.len();
    let ne = norm(e);
    let nq = norm(q);
    if ne < guard.norm_eps || nq < guard.norm_eps {
        return Ok(RotationOp {
            e_hat: vec![0.0; d],
            q_hat: vec![0.0; d],
            r: vec![0.0; d],
            lambda: if ne > 0.0 { nq / ne } else { 1.0 },
            degenerate: true,
        });
    }
    let e_hat: Vec<f64> = e.iter().map(|v| v / ne).collect();
    let q_hat: Vec<f64> = q.iter().map(|v| v / nq).collect();
    let mut r: Vec<f64> = e_hat.iter().zip(&q_hat).map(|(a, b)| a + b).collect();
    let nr = norm(&r);
    let degenerate = nr < guard.antipodal_eps;
    if degenerate {
        r.iter_mut().for_each(|v| *v = 0.0);
    } else {
        r.iter_mut().for_each(|v| *v /= nr);
    }
    Ok(RotationOp {
        e_hat,
        q_hat,
        r,
        lambda: nq / ne,
        degenerate,
    })
}

impl RotationOp {
    pub fn dim(&self) -> usize {
        self.r.len()
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if self.degenerate {
            return Err(Error::DegenerateRotation);
        }
        check_dims(self.dim(), v.len())
    }

    /// `R v` without the `λ` factor.
    pub fn rotate(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        let rv = dot(&self.r, v);
        let ev = dot(&self.e_hat, v);
        let mut out = v.to_vec();
        axpy(-2.0 * rv, &self.r, &mut out);
        axpy(2.0 * ev, &self.q_hat, &mut out);
        Ok(out)
    }

    /// `Rᵀ g` without the `λ` factor. Preserves `|g|`.
    pub fn rotate_transpose(&self, g: &[f64]) -> Result<Vec<f64>> {
        self.check(g)?;
        let rg = dot(&self.r, g);
        let qg = dot(&self.q_hat, g);
        let mut out = g.to_vec();
        axpy(-2.0 * rg, &self.r, &mut out);
        axpy(2.0 * qg, &self.e_hat, &mut out);
        Ok(out)
    }

    /// `λ R v`; maps `e` to `q`.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.rotate(v)?;
        out.iter_mut().for_each(|x| *x *= self.lambda);
        Ok(out)
    }

    /// `λ Rᵀ g`, the rotation estimator's backward map.
    pub fn apply_transpose(&self, g: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.rotate_transpose(g)?;
        out.iter_mut().for_each(|x| *x *= self.lambda);
        Ok(out)
    }

    /// Dense `R` (no `λ`), built column by column from [`Self::rotate`].
    /// Quadratic in `d`; meant for verification on small dimensions.
    pub fn to_matrix(&self) -> Result<Matrix> {
        let d = self.dim();
        let mut m = Matrix::zeros(d, d);
        let mut basis = vec![0.0; d];
        for j in 0..d {
            basis[j] = 1.0;
            let col = self.rotate(&basis)?;
            m.set_column(j, &col);
            basis[j] = 0.0;
        }
        Ok(m)
    }
}

/// Convenience wrapper for [`rotation_between`] followed by [`RotationOp::apply`].
pub fn apply_rotation(op: &RotationOp, v: &[f64]) -> Result<Vec<f64>> {
    op.apply(v)
}

/// Convenience wrapper for [`RotationOp::apply_transpose`].
pub fn apply_rotation_transpose(op: &RotationOp, g: &[f64]) -> Result<Vec<f64>> {
    op.apply_transpose(g)
}

/// A single Householder reflection `I - 2rrᵀ` whose mirror sends the direction
/// of `e` to the direction of `q`.
///
/// `r` is built from the unit vectors, `r = (ê - q̂)/|ê - q̂|`, so `ê` maps to
/// `q̂` exactly even when `|e| ≠ |q|`; for equal norms this is the same as
/// `(e - q)/|e - q|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionOp {
    pub r: Vec<f64>,
    /// `|q| / |e|`
    pub lambda: f64,
}

impl ReflectionOp {
    pub fn between(e: &[f64], q: &[f64], eps: f64) -> Result<Self> {
        check_dims(e.len(), q.len())?;
        check_finite(e)?;
        check_finite(q)?;
        let ne = norm(e);
        let nq = norm(q);
        if ne < eps || nq < eps {
            return Err(Error::ZeroNorm);
        }
        let mut r: Vec<f64> = e.iter().zip(q).map(|(a, b)| a / ne - b / nq).collect();
        let nr = norm(&r);
        if nr < eps {
            return Err(Error::DegenerateReflection);
        }
        r.iter_mut().for_each(|v| *v /= nr);
        Ok(Self { r, lambda: nq / ne })
    }

    /// `(I - 2rrᵀ) v`; symmetric, so it is its own transpose.
    pub fn reflect(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.r.len(), v.len())?;
        let rv = dot(&self.r, v);
        let mut out = v.to_vec();
        axpy(-2.0 * rv, &self.r, &mut out);
        Ok(out)
    }
}

/// Reflects `v` across the hyperplane orthogonal to `ê - q̂`.
pub fn reflection_apply(e: &[f64], q: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    ReflectionOp::between(e, q, 1e-12)?.reflect(v)
}

/// Angle in `[0, π]` between `a` and `b`.
pub fn angle_between(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dims(a.len(), b.len())?;
    check_finite(a)?;
    check_finite(b)?;
    cosine(a, b).map(f64::acos).ok_or(Error::ZeroNorm)
}

/// Cosine of the angle between `e + shift` and `q + shift`, by direct dot
/// product.
pub fn shifted_cosine(e: &[f64], q: &[f64], shift: &[f64]) -> Result<f64> {
    check_dims(e.len(), q.len())?;
    check_dims(e.len(), shift.len())?;
    let es: Vec<f64> = e.iter().zip(shift).map(|(a, b)| a + b).collect();
    let qs: Vec<f64> = q.iter().zip(shift).map(|(a, b)| a + b).collect();
    cosine(&es, &qs).ok_or(Error::ZeroNorm)
}

/// The same quantity through the law of cosines, using only the unshifted
/// norms, the unshifted angle, and the shifted norms.
pub fn shifted_cosine_law(e: &[f64], q: &[f64], shift: &[f64]) -> Result<f64> {
    check_dims(e.len(), q.len())?;
    check_dims(e.len(), shift.len())?;
    let ne = norm(e);
    let nq = norm(q);
    let cos_theta = cosine(e, q).ok_or(Error::ZeroNorm)?;
    let nes = norm(&e.iter().zip(shift).map(|(a, b)| a + b).collect::<Vec<_>>());
    let nqs = norm(&q.iter().zip(shift).map(|(a, b)| a + b).collect::<Vec<_>>());
    if nes == 0.0 || nqs == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let num = nq * nq + ne * ne - 2.0 * nq * ne * cos_theta - nqs * nqs - nes * nes;
    Ok((num / (-2.0 * nqs * nes)).clamp(-1.0, 1.0))
}

/// A point in hyperspherical coordinates.
///
/// `x₁ = r cos θ₁`, `x₂ = r sin θ₁ cos θ₂`, …, `x_d = r sin θ₁ ⋯ sin θ_{d-1}`,
/// with `θ₁..θ_{d-2} ∈ [0, π]` and `θ_{d-1} ∈ (-π, π]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HypersphPoint {
    pub r: f64,
    pub thetas: Vec<f64>,
}

impl HypersphPoint {
    pub fn dim(&self) -> usize {
        self.thetas.len() + 1
    }
}

// atan2 that returns the canonical 0 when both arguments are zero (of either sign).
fn canonical_atan2(y: f64, x: f64) -> f64 {
    if y == 0.0 && x == 0.0 {
        0.0
    } else {
        y.atan2(x)
    }
}

pub fn cart_to_hypersph(x: &[f64], eps: f64) -> Result<HypersphPoint> {
    let d = x.len();
    if d < 2 {
        return Err(Error::InvalidParameter(
            "hyperspherical coordinates need d >= 2".into(),
        ));
    }
    check_finite(x)?;
    let r = norm(x);
    if r < eps {
        return Err(Error::ZeroNorm);
    }
    // tail[i] = |(x_i, ..., x_{d-1})|, accumulated from the end.
    let mut tail = vec![0.0; d + 1];
    for i in (0..d).rev() {
        tail[i] = (tail[i + 1] * tail[i + 1] + x[i] * x[i]).sqrt();
    }
    let mut thetas = Vec::with_capacity(d - 1);
    for i in 0..d - 2 {
        thetas.push(canonical_atan2(tail[i + 1], x[i]));
    }
    thetas.push(canonical_atan2(x[d - 1], x[d - 2]));
    Ok(HypersphPoint { r, thetas })
}

pub fn hypersph_to_cart(p: &HypersphPoint) -> Vec<f64> {
    let d = p.dim();
    let mut x = Vec::with_capacity(d);
    let mut s = p.r;
    for th in &p.thetas {
        x.push(s * th.cos());
        s *= th.sin();
    }
    x.push(s);
    x
}

/// The Jacobian of the hyperspherical-to-Cartesian map with each column
/// rescaled to unit length: column 0 is `∂x/∂r`, column `i` is
/// `∂x/∂θ_i / |∂x/∂θ_i|`. The result is a rotation.
pub fn normalized_jacobian(p: &HypersphPoint, eps: f64) -> Result<Matrix> {
    let d = p.dim();
    if d < 2 {
        return Err(Error::InvalidParameter(
            "hyperspherical coordinates need d >= 2".into(),
        ));
    }
    if p.r < eps {
        return Err(Error::ZeroNorm);
    }
    for (i, th) in p.thetas.iter().take(d - 2).enumerate() {
        if th.sin().abs() < eps {
            return Err(Error::SingularLatitude { index: i + 1 });
        }
    }

    let sines: Vec<f64> = p.thetas.iter().map(|t| t.sin()).collect();
    let cosines: Vec<f64> = p.thetas.iter().map(|t| t.cos()).collect();
    // Unit-radius Cartesian components: u_k = ∏_{j<k} sin θ_j · (cos θ_k | 1).
    let unit = |k: usize, diff: Option<usize>| -> f64 {
        let mut v = 1.0;
        let upto = k.min(d - 1);
        for j in 0..upto {
            v *= if diff == Some(j) { cosines[j] } else { sines[j] };
        }
        if k < d - 1 {
            v *= if diff == Some(k) { -sines[k] } else { cosines[k] };
        }
        v
    };

    let mut jac = Matrix::zeros(d, d);
    for k in 0..d {
        jac[(k, 0)] = unit(k, None);
    }
    for i in 0..d - 1 {
        // |∂x/∂θ_i| / r = ∏_{j<i} sin θ_j
        let scale: f64 = sines[..i].iter().product();
        for k in 0..d {
            // ∂x_k/∂θ_i vanishes when θ_i does not appear in x_k
            let v = if i > k { 0.0 } else { unit(k, Some(i)) };
            jac[(k, i + 1)] = v / scale;
        }
    }
    Ok(jac)
}

/// The frame-to-frame rotation `Ĵ(e) Ĵ(q)ᵀ`, which carries a vector expressed
/// in the Cartesian frame at `q` to the vector with the same normalized
/// hyperspherical components at `e`.
pub fn transport_rotation(q: &[f64], e: &[f64], eps: f64) -> Result<Matrix> {
    check_dims(q.len(), e.len())?;
    let jq = normalized_jacobian(&cart_to_hypersph(q, eps)?, eps)?;
    let je = normalized_jacobian(&cart_to_hypersph(e, eps)?, eps)?;
    je.matmul(&jq.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    fn op(e: &[f64], q: &[f64]) -> RotationOp {
        rotation_between(e, q, DegeneracyGuard::default()).unwrap()
    }

    #[test]
    fn quarter_turn_with_rescale() {
        let o = op(&[1.0, 0.0], &[0.0, 2.0]);
        assert!(close(&o.r, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2], 1e-15));
        assert_eq!(o.lambda, 2.0);
        assert!(close(&o.apply(&[1.0, 0.0]).unwrap(), &[0.0, 2.0], 1e-15));
    }

    #[test]
    fn identical_vectors_give_identity() {
        let o = op(&[3.0, 4.0], &[3.0, 4.0]);
        assert!(close(&o.r, &o.e_hat, 1e-15));
        assert_eq!(o.lambda, 1.0);
        assert!(close(&o.apply(&[3.0, 4.0]).unwrap(), &[3.0, 4.0], 1e-14));
        assert!(close(&o.apply(&[-1.0, 7.0]).unwrap(), &[-1.0, 7.0], 1e-14));
    }

    #[test]
    fn matches_two_reflection_product_in_3d() {
        let e = [1.0, 0.0, 0.0];
        let q = [0.0, 3.0, 4.0];
        let o = op(&e, &q);
        // (I - 2 q̂q̂ᵀ)(I - 2 rrᵀ) by explicit entries
        let qh = [0.0, 0.6, 0.8];
        let s = [1.0, 0.6, 0.8];
        let ns = (1.0f64 + 0.36 + 0.64).sqrt();
        let r: Vec<f64> = s.iter().map(|v| v / ns).collect();
        let mut h1 = [[0.0; 3]; 3];
        let mut h2 = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                h1[i][j] = id - 2.0 * qh[i] * qh[j];
                h2[i][j] = id - 2.0 * r[i] * r[j];
            }
        }
        let mut rm = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    rm[i][j] += h1[i][k] * h2[k][j];
                }
            }
        }
        let dense = o.to_matrix().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((dense[(i, j)] - rm[i][j]).abs() < 1e-12);
            }
        }
        assert!(close(&o.apply(&e).unwrap(), &q, 1e-10));
    }

    #[test]
    fn apply_examples() {
        let o = op(&[1.0, 0.0], &[0.0, 1.0]);
        assert!(close(&o.apply(&[1.0, 0.0]).unwrap(), &[0.0, 1.0], 1e-15));
        // +90° rotation: (0,1) -> (-1,0)
        assert!(close(&o.apply(&[0.0, 1.0]).unwrap(), &[-1.0, 0.0], 1e-15));
        assert_eq!(o.apply(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn transpose_examples() {
        let o = op(&[1.0, 0.0], &[0.0, 1.0]);
        assert!(close(&o.rotate_transpose(&[0.0, 1.0]).unwrap(), &[1.0, 0.0], 1e-15));
        assert!(close(&o.rotate_transpose(&[1.0, 0.0]).unwrap(), &[0.0, -1.0], 1e-15));
        let o3 = op(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]);
        assert!(close(&o3.rotate_transpose(&[0.0, 0.0, 2.5]).unwrap(), &[0.0, 0.0, 2.5], 1e-15));
    }

    #[test]
    fn degenerate_cases_flagged() {
        let g = DegeneracyGuard::default();
        assert!(rotation_between(&[1.0, 0.0], &[-1.0, 0.0], g).unwrap().degenerate);
        assert!(rotation_between(&[0.0, 0.0], &[1.0, 0.0], g).unwrap().degenerate);
        assert!(rotation_between(&[1.0, 0.0], &[1e-13, 0.0], g).unwrap().degenerate);
        let o = rotation_between(&[1.0, 1e-9], &[-1.0, 0.0], g).unwrap();
        assert!(o.degenerate);
        assert!(matches!(o.apply(&[1.0, 0.0]), Err(Error::DegenerateRotation)));
    }

    #[test]
    fn rotation_input_errors() {
        let g = DegeneracyGuard::default();
        assert!(matches!(
            rotation_between(&[1.0, 0.0], &[1.0, 0.0, 0.0], g),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            rotation_between(&[f64::NAN, 0.0], &[1.0, 0.0], g),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn reflection_examples() {
        let e = [1.0, 0.0];
        let q = [0.0, 1.0];
        assert!(close(&reflection_apply(&e, &q, &e).unwrap(), &[0.0, 1.0], 1e-15));
        // r = (1,-1)/√2 fixes (1,1)
        assert!(close(&reflection_apply(&e, &q, &[1.0, 1.0]).unwrap(), &[1.0, 1.0], 1e-15));
        assert!(matches!(
            reflection_apply(&e, &e, &e),
            Err(Error::DegenerateReflection)
        ));
    }

    #[test]
    fn angles() {
        assert!((angle_between(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(angle_between(&[2.0, 3.0], &[2.0, 3.0]).unwrap(), 0.0);
        assert!((angle_between(&[1.0, 0.0], &[-1.0, 1.0]).unwrap() - 0.75 * PI).abs() < 1e-15);
        assert!(matches!(angle_between(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroNorm)));
    }

    #[test]
    fn shifted_cosine_examples() {
        let e = [1.0, 2.0];
        let q = [-0.5, 1.0];
        let c0 = shifted_cosine(&e, &q, &[0.0, 0.0]).unwrap();
        assert!((c0 - angle_between(&e, &q).unwrap().cos()).abs() < 1e-15);
        let far = shifted_cosine(&[1.0, 0.0], &[0.0, 1.0], &[1e6, 1e6]).unwrap();
        assert!((far - 1.0).abs() < 1e-6);
        let law = shifted_cosine_law(&e, &q, &[0.3, -0.2]).unwrap();
        let direct = shifted_cosine(&e, &q, &[0.3, -0.2]).unwrap();
        assert!((law - direct).abs() < 1e-12);
    }

    #[test]
    fn hypersph_examples() {
        let p = cart_to_hypersph(&[1.0, 0.0, 0.0], 1e-12).unwrap();
        assert_eq!(p.r, 1.0);
        assert_eq!(p.thetas, vec![0.0, 0.0]);
        let p = cart_to_hypersph(&[0.0, 0.0, 1.0], 1e-12).unwrap();
        assert!((p.thetas[0] - FRAC_PI_2).abs() < 1e-15);
        assert!((p.thetas[1] - FRAC_PI_2).abs() < 1e-15);
        // negative zero still lands on the canonical angle
        let p = cart_to_hypersph(&[1.0, -0.0, -0.0], 1e-12).unwrap();
        assert_eq!(p.thetas, vec![0.0, 0.0]);
        assert!(matches!(cart_to_hypersph(&[0.0, 0.0], 1e-12), Err(Error::ZeroNorm)));
        let back = hypersph_to_cart(&cart_to_hypersph(&[0.3, -1.0, 2.0, -0.1], 1e-12).unwrap());
        assert!(close(&back, &[0.3, -1.0, 2.0, -0.1], 1e-14));
    }

    #[test]
    fn planar_jacobian() {
        let j = normalized_jacobian(&HypersphPoint { r: 2.0, thetas: vec![0.0] }, 1e-12).unwrap();
        assert!(j.max_abs_diff(&Matrix::identity(2)).unwrap() < 1e-15);
        let t = 0.7f64;
        let j = normalized_jacobian(&HypersphPoint { r: 0.5, thetas: vec![t] }, 1e-12).unwrap();
        let want = Matrix::from_rows(&[[t.cos(), -t.sin()], [t.sin(), t.cos()]]).unwrap();
        assert!(j.max_abs_diff(&want).unwrap() < 1e-15);
    }

    #[test]
    fn singular_latitude_rejected() {
        let p = HypersphPoint { r: 1.0, thetas: vec![0.0, 0.3] };
        assert!(matches!(
            normalized_jacobian(&p, 1e-9),
            Err(Error::SingularLatitude { index: 1 })
        ));
    }

    #[test]
    fn planar_transport() {
        let t = transport_rotation(&[1.0, 0.0], &[0.0, 1.0], 1e-12).unwrap();
        let want = Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]]).unwrap();
        assert!(t.max_abs_diff(&want).unwrap() < 1e-15);
        let q = [0.4, -1.3, 0.8];
        let t = transport_rotation(&q, &q, 1e-12).unwrap();
        assert!(t.max_abs_diff(&Matrix::identity(3)).unwrap() < 1e-14);
    }
}
