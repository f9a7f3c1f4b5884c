//! Poincaré-disk geometry: Möbius isometries, hyperbolic distances and
//! midpoints, and the complex-orthogonal matrix exponential used for
//! parallel transport.
//!
//! All constructions here use the curvature −1 normalization of the disk;
//! geodesics, midpoints and isometries do not change under the constant
//! rescaling that produces the curvature −1/6 metric used elsewhere.

use nalgebra::Matrix3;
use num_complex::Complex64;

pub type C64 = Complex64;

/// Orientation-preserving isometry of the unit disk, stored as a unit-determinant
/// SU(1,1) matrix: z ↦ (a z + b) / (conj(b) z + conj(a)) with |a|² − |b|² = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub a: C64,
    pub b: C64,
}

impl Mobius {
    pub fn identity() -> Self {
        Mobius {
            a: C64::new(1.0, 0.0),
            b: C64::new(0.0, 0.0),
        }
    }

    /// Rotation about the origin by `phi` radians.
    pub fn rotation(phi: f64) -> Self {
        // e^{i phi} z  =  (e^{i phi/2} z + 0) / (0 + e^{-i phi/2})
        Mobius {
            a: C64::from_polar(1.0, phi / 2.0),
            b: C64::new(0.0, 0.0),
        }
    }

    /// The isometry moving `c` to the origin: z ↦ (z − c)/(1 − conj(c) z).
    pub fn center_at(c: C64) -> Self {
        let norm = (1.0 - c.norm_sqr()).sqrt();
        Mobius {
            a: C64::new(1.0 / norm, 0.0),
            b: -c / norm,
        }
    }

    pub fn apply(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }

    /// Complex derivative at `z`; its argument is the frame rotation angle
    /// induced on conformal orthonormal frames.
    pub fn derivative(&self, z: C64) -> C64 {
        let d = self.b.conj() * z + self.a.conj();
        1.0 / (d * d)
    }

    pub fn inverse(&self) -> Self {
        Mobius {
            a: self.a.conj(),
            b: -self.b,
        }
    }

    /// Composition acting as self ∘ other (apply `other` first).
    pub fn compose(&self, other: &Mobius) -> Self {
        // SU(1,1) matrix product [[a,b],[conj b, conj a]].
        Mobius {
            a: self.a * other.a + self.b * other.b.conj(),
            b: self.a * other.b + self.b * other.a.conj(),
        }
    }

    /// The unique orientation-preserving disk isometry with z1 ↦ w1 and
    /// z2 ↦ w2.  Requires d(z1,z2) = d(w1,w2); asserts this to 1e-12.
    pub fn from_two_points(z1: C64, z2: C64, w1: C64, w2: C64) -> Self {
        let to_z = Mobius::center_at(z1);
        let to_w = Mobius::center_at(w1);
        let p = to_z.apply(z2);
        let q = to_w.apply(w2);
        debug_assert!(
            (p.norm() - q.norm()).abs() < 1e-12,
            "point pairs are not isometric: |p|={} |q|={}",
            p.norm(),
            q.norm()
        );
        let rot = Mobius::rotation(q.arg() - p.arg());
        to_w.inverse().compose(&rot).compose(&to_z)
    }

    /// Fixed-scale fingerprint for dedup keys (the SU(1,1) entries up to
    /// the overall ± sign ambiguity).
    pub fn key(&self) -> [i64; 4] {
        let s = if self.a.re < 0.0 || (self.a.re == 0.0 && self.a.im < 0.0) {
            -1.0
        } else {
            1.0
        };
        let q = |x: f64| (s * x * 1e9).round() as i64;
        [q(self.a.re), q(self.a.im), q(self.b.re), q(self.b.im)]
    }
}

/// Hyperbolic distance between two disk points (curvature −1).
pub fn hyp_distance(z: C64, w: C64) -> f64 {
    let num = (z - w).norm_sqr();
    let den = (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr());
    // d = arcosh(1 + 2 |z-w|² / ((1-|z|²)(1-|w|²)))
    let x = 1.0 + 2.0 * num / den;
    (x + (x * x - 1.0).max(0.0).sqrt()).ln()
}

/// Hyperbolic midpoint of the geodesic segment [z, w].
pub fn hyp_midpoint(z: C64, w: C64) -> C64 {
    let to_origin = Mobius::center_at(z);
    let p = to_origin.apply(w);
    let r = p.norm();
    if r < 1e-300 {
        return z;
    }
    // |p| = tanh(d/2); the half-distance point is at tanh(d/4) in the same direction.
    let half = (r.atanh() / 2.0).tanh();
    to_origin.inverse().apply(p * (half / r))
}

/// Euclidean projection of `p` onto the geodesic through `a` and `b`
/// (a circle orthogonal to the unit circle, or a diameter).
pub fn project_to_geodesic(p: C64, a: C64, b: C64) -> C64 {
    // Orthogonality to the unit circle: |c|² − r² = 1 with center c.
    // Two-point conditions give 2 a·c = |a|² + 1 and 2 b·c = |b|² + 1.
    let det = 4.0 * (a.re * b.im - a.im * b.re);
    if det.abs() < 1e-12 {
        // Diameter through the origin: project onto the line through a, b.
        let dir = b - a;
        let n = dir.norm();
        if n < 1e-300 {
            return p;
        }
        let d = dir / n;
        let t = p.re * d.re + p.im * d.im;
        return d * t;
    }
    let (ra, rb) = (a.norm_sqr() + 1.0, b.norm_sqr() + 1.0);
    let cx = (ra * 2.0 * b.im - rb * 2.0 * a.im) / det;
    let cy = (rb * 2.0 * a.re - ra * 2.0 * b.re) / det;
    let c = C64::new(cx, cy);
    let r = (c.norm_sqr() - 1.0).max(0.0).sqrt();
    let d = p - c;
    let n = d.norm();
    if n < 1e-300 {
        return p;
    }
    c + d / n * r
}

/// Matrix exponential of a complex antisymmetric 3×3 matrix by the Rodrigues
/// formula with the complex rotation angle φ = sqrt(k·k) (ℂ-bilinear).
/// The result is exactly complex-orthogonal up to round-off.
pub fn expm_so3c(k: &Matrix3<C64>) -> Matrix3<C64> {
    // Axis components from the antisymmetric matrix: K = [k]_x.
    let k1 = k[(2, 1)];
    let k2 = k[(0, 2)];
    let k3 = k[(1, 0)];
    let phi2 = k1 * k1 + k2 * k2 + k3 * k3;
    let phi = phi2.sqrt();
    // sin φ / φ and (1 − cos φ)/φ² with series fallback near 0.
    let (c1, c2) = if phi.norm() < 1e-4 {
        (
            C64::new(1.0, 0.0) - phi2 / 6.0 + phi2 * phi2 / 120.0,
            C64::new(0.5, 0.0) - phi2 / 24.0 + phi2 * phi2 / 720.0,
        )
    } else {
        (phi.sin() / phi, (C64::new(1.0, 0.0) - phi.cos()) / phi2)
    };
    Matrix3::identity() + k * c1 + k * k * c2
}

/// Frobenius norm of A − I.
pub fn dist_to_identity(u: &Matrix3<C64>) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let d = u[(i, j)] - if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            s += d.norm_sqr();
        }
    }
    s.sqrt()
}

/// Frobenius norm of UᵀU − I: membership residual for SO(3,ℂ) in an
/// orthonormal gauge (ᵀ is the plain transpose, not conjugate).
pub fn so3c_residual(u: &Matrix3<C64>) -> f64 {
    let g = u.transpose() * u;
    let det = u.determinant() - C64::new(1.0, 0.0);
    (dist_to_identity(&g).powi(2) + det.norm_sqr()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mobius_composition_and_inverse() {
        let g = Mobius::rotation(0.37).compose(&Mobius::center_at(C64::new(-0.15, 0.22)));
        let (z1, z2) = (C64::new(0.1, 0.2), C64::new(-0.3, 0.1));
        let m1 = Mobius::from_two_points(z1, z2, g.apply(z1), g.apply(z2));
        let m2 = Mobius::rotation(0.7).compose(&Mobius::center_at(C64::new(0.3, -0.2)));
        let z = C64::new(0.12, -0.55);
        let lhs = m1.apply(m2.apply(z));
        let rhs = m1.compose(&m2).apply(z);
        assert_relative_eq!(lhs.re, rhs.re, epsilon = 1e-13);
        assert_relative_eq!(lhs.im, rhs.im, epsilon = 1e-13);
        let back = m1.inverse().apply(m1.apply(z));
        assert_relative_eq!(back.re, z.re, epsilon = 1e-13);
        assert_relative_eq!(back.im, z.im, epsilon = 1e-13);
    }

    #[test]
    fn two_point_map_hits_targets() {
        let z1 = C64::new(0.5, 0.0);
        let z2 = C64::new(0.5, 0.2);
        let rot = Mobius::rotation(1.1).compose(&Mobius::center_at(C64::new(-0.2, 0.4)));
        let w1 = rot.apply(z1);
        let w2 = rot.apply(z2);
        let m = Mobius::from_two_points(z1, z2, w1, w2);
        assert!((m.apply(z1) - w1).norm() < 1e-13);
        assert!((m.apply(z2) - w2).norm() < 1e-13);
    }

    #[test]
    fn midpoint_is_equidistant_and_equivariant() {
        let z = C64::new(0.3, 0.4);
        let w = C64::new(-0.5, 0.1);
        let m = hyp_midpoint(z, w);
        assert_relative_eq!(hyp_distance(z, m), hyp_distance(m, w), epsilon = 1e-12);
        let g = Mobius::rotation(-0.9).compose(&Mobius::center_at(C64::new(0.1, 0.3)));
        let m2 = hyp_midpoint(g.apply(z), g.apply(w));
        assert!((g.apply(m) - m2).norm() < 1e-12);
    }

    #[test]
    fn expm_is_complex_orthogonal() {
        let mut k = Matrix3::zeros();
        k[(0, 1)] = C64::new(0.3, -0.5);
        k[(1, 0)] = -k[(0, 1)];
        k[(0, 2)] = C64::new(-0.2, 0.1);
        k[(2, 0)] = -k[(0, 2)];
        k[(1, 2)] = C64::new(0.7, 0.25);
        k[(2, 1)] = -k[(1, 2)];
        let u = expm_so3c(&k);
        assert!(so3c_residual(&u) < 1e-12);
        // exp(K) exp(-K) = I
        let v = expm_so3c(&(-k));
        assert!(dist_to_identity(&(u * v)) < 1e-12);
    }
}
