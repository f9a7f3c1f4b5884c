//! Pointwise derivative estimates by weighted least-squares fits over the
//! two-ring vertex patches.  A quadratic model gives chart gradients with
//! O(h²) and Hessians with O(h) consistency on smooth fields.

use crate::field::{rotate_comps, FrameTensor};
use crate::mesh::SurfaceMesh;
use nalgebra::{DMatrix, DVector};

/// Chart-coordinate 2-jet of a scalar channel at a vertex (value omitted).
#[derive(Debug, Clone, Copy, Default)]
pub struct Jet2 {
    pub grad: [f64; 2],
    /// Chart Hessian [f_xx, f_xy, f_yy].
    pub hess: [f64; 3],
}

/// Pseudo-inverse rows of the weighted quadratic design matrix at one
/// vertex; multiplying by sampled value-differences yields the jet.
pub struct JetStencil {
    /// 5 × n_samples matrix; rows are (gx, gy, hxx, hxy, hyy) in scaled units.
    coeff: DMatrix<f64>,
    scale: f64,
    quadratic: bool,
}

impl JetStencil {
    pub fn build(deltas: &[[f64; 2]]) -> JetStencil {
        let n = deltas.len();
        let scale = (deltas.iter().map(|d| (d[0] * d[0] + d[1] * d[1]).sqrt()).sum::<f64>()
            / n.max(1) as f64)
            .max(1e-300);
        let quadratic = n >= 6;
        let ncoef = if quadratic { 5 } else { 2 };
        let mut x = DMatrix::zeros(n, ncoef);
        let mut w = DVector::zeros(n);
        for (j, d) in deltas.iter().enumerate() {
            let (dx, dy) = (d[0] / scale, d[1] / scale);
            x[(j, 0)] = dx;
            x[(j, 1)] = dy;
            if quadratic {
                x[(j, 2)] = 0.5 * dx * dx;
                x[(j, 3)] = dx * dy;
                x[(j, 4)] = 0.5 * dy * dy;
            }
            w[j] = 1.0 / (dx * dx + dy * dy).max(1e-12);
        }
        // (XᵀWX)⁻¹ XᵀW with a tiny Tikhonov term for near-degenerate stencils.
        let mut xtw = x.transpose();
        for j in 0..n {
            for k in 0..ncoef {
                xtw[(k, j)] *= w[j];
            }
        }
        let mut normal = &xtw * &x;
        for k in 0..ncoef {
            normal[(k, k)] += 1e-12;
        }
        let inv = normal
            .try_inverse()
            .expect("jet normal equations are singular");
        JetStencil {
            coeff: inv * xtw,
            scale,
            quadratic,
        }
    }

    /// Pseudo-inverse coefficients of the chart gradient component `a`
    /// (0 = x, 1 = y) applied to sampled value differences, in chart units.
    pub fn gradient_row(&self, a: usize) -> Vec<f64> {
        (0..self.coeff.ncols())
            .map(|j| self.coeff[(a, j)] / self.scale)
            .collect()
    }

    pub fn apply(&self, diffs: &[f64]) -> Jet2 {
        let v = DVector::from_column_slice(diffs);
        let beta = &self.coeff * v;
        let s = self.scale;
        if self.quadratic {
            Jet2 {
                grad: [beta[0] / s, beta[1] / s],
                hess: [beta[2] / (s * s), beta[3] / (s * s), beta[4] / (s * s)],
            }
        } else {
            Jet2 {
                grad: [beta[0] / s, beta[1] / s],
                hess: [0.0; 3],
            }
        }
    }
}

/// Chart gradients of a scalar field at every quotient vertex.
pub fn scalar_gradients(mesh: &SurfaceMesh, values: &[f64]) -> Vec<[f64; 2]> {
    (0..mesh.n_vertices())
        .map(|i| scalar_jet(mesh, i, values).grad)
        .collect()
}

pub fn scalar_jet(mesh: &SurfaceMesh, i: usize, values: &[f64]) -> Jet2 {
    let patch = mesh.patch(i);
    let deltas: Vec<[f64; 2]> = patch.samples.iter().map(|s| s.dz).collect();
    let stencil = JetStencil::build(&deltas);
    let diffs: Vec<f64> = patch
        .samples
        .iter()
        .map(|s| values[s.class] - values[i])
        .collect();
    stencil.apply(&diffs)
}

/// Per-channel 2-jets of a frame tensor at vertex `i`.  Neighbor components
/// are rotated into the center chart before fitting, so the fitted functions
/// are the tensor's components in the center's conformal frame field.
pub fn tensor_jets(mesh: &SurfaceMesh, i: usize, field: &FrameTensor) -> Vec<Jet2> {
    let patch = mesh.patch(i);
    let w = field.width();
    let deltas: Vec<[f64; 2]> = patch.samples.iter().map(|s| s.dz).collect();
    let stencil = JetStencil::build(&deltas);
    let mut rotated = vec![vec![0.0; patch.samples.len()]; w];
    let mut buf = vec![0.0; w];
    for (j, s) in patch.samples.iter().enumerate() {
        rotate_comps(field.rank, field.comps(s.class), s.angle, &mut buf);
        for k in 0..w {
            rotated[k][j] = buf[k] - field.comps(i)[k];
        }
    }
    (0..w).map(|k| stencil.apply(&rotated[k])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::SurfaceMesh;

    #[test]
    fn quadratic_jet_recovers_polynomial() {
        // f(x,y) = 3x − 2y + x² + 0.5xy − y² on the disk chart.
        let mesh = SurfaceMesh::disk(0.5, 5).unwrap();
        let f: Vec<f64> = (0..mesh.n_vertices())
            .map(|i| {
                let z = mesh.vertex_position(i);
                3.0 * z.re - 2.0 * z.im + z.re * z.re + 0.5 * z.re * z.im - z.im * z.im
            })
            .collect();
        for i in 0..mesh.n_vertices() {
            if mesh.is_boundary_class(i) {
                continue;
            }
            let z = mesh.vertex_position(i);
            let jet = scalar_jet(&mesh, i, &f);
            let gx = 3.0 + 2.0 * z.re + 0.5 * z.im;
            let gy = -2.0 + 0.5 * z.re - 2.0 * z.im;
            assert!((jet.grad[0] - gx).abs() < 1e-10, "gx {} vs {}", jet.grad[0], gx);
            assert!((jet.grad[1] - gy).abs() < 1e-10);
            assert!((jet.hess[0] - 2.0).abs() < 1e-9);
            assert!((jet.hess[1] - 0.5).abs() < 1e-9);
            assert!((jet.hess[2] + 2.0).abs() < 1e-9);
        }
    }
}
