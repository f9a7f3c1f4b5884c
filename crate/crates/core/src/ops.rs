//! Discrete differential operators: covariant derivatives in conformal
//! frames, the FEM Laplace–Beltrami operator, and the assembled-operator
//! container with eigensolve and kernel-dimension interfaces.

use crate::error::{GermLabError, Result};
use crate::field::{FrameTensor, OneFormField, ScalarField};
use crate::jets::{scalar_jet, tensor_jets};
use crate::mesh::SurfaceMesh;
use crate::metric::{MetricField, MetricRep};
use nalgebra::DMatrix;

/// Row-compressed sparse matrix (symmetric layouts are not assumed).
#[derive(Debug, Clone)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> SparseMatrix {
        SparseMatrix {
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if v == 0.0 {
            return;
        }
        let row = &mut self.rows[i];
        if let Some(e) = row.iter_mut().find(|(c, _)| *c == j) {
            e.1 += v;
        } else {
            row.push((j, v));
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        for (i, row) in self.rows.iter().enumerate() {
            let mut s = 0.0;
            for &(j, v) in row {
                s += v * x[j];
            }
            y[i] = s;
        }
        y
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v;
            }
        }
        m
    }

    pub fn matmul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut out = SparseMatrix::zeros(self.nrows, other.ncols);
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
            for &(k, v) in row {
                for &(j, w) in &other.rows[k] {
                    *acc.entry(j).or_insert(0.0) += v * w;
                }
            }
            out.rows[i] = acc.into_iter().collect();
        }
        out
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut out = self.clone();
        for row in out.rows.iter_mut() {
            for e in row.iter_mut() {
                e.1 *= s;
            }
        }
        out
    }
}

/// The covariant derivative on rank-r frame tensors as an assembled matrix
/// from (2^r·V) to (2^{r+1}·V) components.  Component layout: column
/// class·2^r + idx, row class·2^{r+1} + (a << r | idx), matching
/// [`covariant_derivative`] exactly.
pub fn derivative_matrix(
    mesh: &SurfaceMesh,
    metric: &MetricField,
    rank: usize,
) -> Result<SparseMatrix> {
    if !metric.is_conformal() {
        return Err(GermLabError::InvalidArgument(
            "covariant derivatives require a conformal metric".into(),
        ));
    }
    let n = mesh.n_vertices();
    let w = 1usize << rank;
    let mut out = SparseMatrix::zeros(2 * w * n, w * n);
    let mut rot = vec![0.0; w];
    for i in 0..n {
        let lam = metric.lambda(i);
        let sqrt_lam = lam.sqrt();
        let dll = metric.dlog_lambda(i);
        let (rx, ry) = (0.5 * dll[0], 0.5 * dll[1]);
        let omega = [ry / sqrt_lam, -rx / sqrt_lam];
        let patch = mesh.patch(i);
        let deltas: Vec<[f64; 2]> = patch.samples.iter().map(|s| s.dz).collect();
        let stencil = crate::jets::JetStencil::build(&deltas);
        // Rows 0 and 1 of the stencil are the chart gradient coefficients.
        for a in 0..2 {
            let coeffs = stencil.gradient_row(a);
            for (j, s) in patch.samples.iter().enumerate() {
                // Sampled channel value = (R(angle)^{⊗r} T(class))_idx.
                for src in 0..w {
                    let mut basis = vec![0.0; w];
                    basis[src] = 1.0;
                    crate::field::rotate_comps(rank, &basis, s.angle, &mut rot);
                    for idx in 0..w {
                        if rot[idx] != 0.0 {
                            out.add(
                                i * 2 * w + ((a << rank) | idx),
                                s.class * w + src,
                                coeffs[j] * rot[idx] / sqrt_lam,
                            );
                        }
                    }
                }
                // Jet differences subtract the center value.
                for idx in 0..w {
                    out.add(
                        i * 2 * w + ((a << rank) | idx),
                        i * w + idx,
                        -coeffs[j] / sqrt_lam,
                    );
                }
            }
            // Spin-connection correction on each tensor slot.
            for idx in 0..w {
                for slot in 0..rank {
                    let bit = 1 << (rank - 1 - slot);
                    let sign = if idx & bit != 0 { 1.0 } else { -1.0 };
                    out.add(
                        i * 2 * w + ((a << rank) | idx),
                        i * w + (idx ^ bit),
                        -omega[a] * sign,
                    );
                }
            }
        }
    }
    Ok(out)
}

/// Conformally invariant P1 stiffness matrix: K_ij = ∫ ∇φ_i · ∇φ_j dA for
/// any metric in the chart's conformal class.  Positive semidefinite with
/// constants in the kernel on a closed mesh.
pub fn cotan_stiffness(mesh: &SurfaceMesh) -> SparseMatrix {
    let n = mesh.n_vertices();
    let mut k = SparseMatrix::zeros(n, n);
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles[t];
        let p: Vec<[f64; 2]> = tri
            .iter()
            .map(|&v| {
                let z = mesh.domain_position(v);
                [z.re, z.im]
            })
            .collect();
        let area2 = mesh.tri_area2(t);
        // Chart gradients of the linear basis functions.
        let mut grads = [[0.0; 2]; 3];
        for a in 0..3 {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            grads[a] = [(p[b][1] - p[c][1]) / area2, (p[c][0] - p[b][0]) / area2];
        }
        for a in 0..3 {
            for b in 0..3 {
                let val = 0.5 * area2 * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                k.add(mesh.class_of(tri[a]), mesh.class_of(tri[b]), val);
            }
        }
    }
    k
}

/// Levi–Civita covariant derivative of a frame tensor for a conformal
/// metric; output rank is input rank + 1 with the derivative index first:
/// out[A][B...] = (d_A T)_{B...}.
pub fn covariant_derivative(
    mesh: &SurfaceMesh,
    metric: &MetricField,
    field: &FrameTensor,
) -> Result<FrameTensor> {
    if !metric.is_conformal() {
        return Err(GermLabError::InvalidArgument(
            "covariant derivatives require a conformal metric".into(),
        ));
    }
    let n = mesh.n_vertices();
    if field.n != n {
        return Err(GermLabError::MeshMismatch {
            left: field.n,
            right: n,
        });
    }
    let rank = field.rank;
    let w = field.width();
    let mut out = FrameTensor::zeros(rank + 1, n);
    for i in 0..n {
        let lam = metric.lambda(i);
        let sqrt_lam = lam.sqrt();
        let dll = metric.dlog_lambda(i);
        // Spin connection in frame components: Ω_A = Ω(e_A) with
        // Ω = ρ_y dx − ρ_x dy and ρ = ½ log λ.
        let (rx, ry) = (0.5 * dll[0], 0.5 * dll[1]);
        let omega = [ry / sqrt_lam, -rx / sqrt_lam];
        let jets = tensor_jets(mesh, i, field);
        let comps = field.comps(i);
        let dst = out.comps_mut(i);
        for a in 0..2 {
            for idx in 0..w {
                // e_A applied to the component function.
                let mut val = jets[idx].grad[a] / sqrt_lam;
                // Connection correction on each tensor slot:
                // −Ω_A ε_{CB} T_{...C...} for the slot holding B.
                for slot in 0..rank {
                    let bit = 1 << (rank - 1 - slot);
                    let b = (idx & bit) != 0;
                    // ε_{CB}: for b = 0 the C = 1 term enters with ε_{10} = −1,
                    // for b = 1 the C = 0 term enters with ε_{01} = +1.
                    let flipped = idx ^ bit;
                    let sign = if b { 1.0 } else { -1.0 };
                    val -= omega[a] * sign * comps[flipped];
                }
                dst[(a << rank) | idx] = val;
            }
        }
    }
    Ok(out)
}

/// Covariant Hessian of a scalar for a conformal metric, in frame
/// components [f_11, f_12, f_22]; uses the quadratic-fit chart Hessian.
pub fn covariant_hessian(
    mesh: &SurfaceMesh,
    metric: &MetricField,
    f: &ScalarField,
) -> Result<Vec<[f64; 3]>> {
    if !metric.is_conformal() {
        return Err(GermLabError::InvalidArgument(
            "covariant derivatives require a conformal metric".into(),
        ));
    }
    let n = mesh.n_vertices();
    let mut out = vec![[0.0; 3]; n];
    for i in 0..n {
        let jet = scalar_jet(mesh, i, &f.0);
        let lam = metric.lambda(i);
        let dll = metric.dlog_lambda(i);
        let (rx, ry) = (0.5 * dll[0], 0.5 * dll[1]);
        let (fx, fy) = (jet.grad[0], jet.grad[1]);
        let dot = rx * fx + ry * fy;
        out[i] = [
            (jet.hess[0] - 2.0 * rx * fx + dot) / lam,
            (jet.hess[1] - rx * fy - ry * fx) / lam,
            (jet.hess[2] - 2.0 * ry * fy + dot) / lam,
        ];
    }
    Ok(out)
}

/// Frame gradient of a scalar: (d_A f) = λ^{-1/2} ∂_A f.
pub fn gradient(mesh: &SurfaceMesh, metric: &MetricField, f: &ScalarField) -> Result<OneFormField> {
    if !metric.is_conformal() {
        return Err(GermLabError::InvalidArgument(
            "covariant derivatives require a conformal metric".into(),
        ));
    }
    let n = mesh.n_vertices();
    let mut out = vec![[0.0; 2]; n];
    for i in 0..n {
        let jet = scalar_jet(mesh, i, &f.0);
        let s = metric.lambda(i).sqrt();
        out[i] = [jet.grad[0] / s, jet.grad[1] / s];
    }
    Ok(OneFormField(out))
}

/// Assembled linear operator with mass weights on both sides, providing the
/// symmetric-eigensolve and kernel-dimension interfaces.
pub struct SparseOperator {
    pub name: String,
    pub matrix: DMatrix<f64>,
    pub mass_out: Vec<f64>,
    pub mass_in: Vec<f64>,
}

impl SparseOperator {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(x);
        (&self.matrix * v).iter().copied().collect()
    }

    /// Eigenvalues and eigenvectors of the generalized symmetric problem
    /// A x = θ M x, ascending.  A must be symmetric w.r.t. the mass inner
    /// product (entrywise symmetry of M·A is asserted).
    pub fn sym_eigs(&self) -> Result<(Vec<f64>, DMatrix<f64>)> {
        let n = self.matrix.nrows();
        if n != self.matrix.ncols() {
            return Err(GermLabError::Eigensolve("operator is not square".into()));
        }
        let d: Vec<f64> = self.mass_out.iter().map(|m| m.sqrt()).collect();
        let mut b = self.matrix.clone();
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] *= d[i] / d[j];
            }
        }
        // Symmetrize round-off only.
        let bs = (&b + b.transpose()) * 0.5;
        let asym = (&b - b.transpose()).norm() / b.norm().max(1e-300);
        if asym > 1e-8 {
            return Err(GermLabError::Eigensolve(format!(
                "operator {} is not mass-symmetric (relative asymmetry {asym:.3e})",
                self.name
            )));
        }
        let eig = bs.symmetric_eigen();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let vals: Vec<f64> = idx.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vecs = DMatrix::zeros(n, n);
        for (col, &k) in idx.iter().enumerate() {
            for i in 0..n {
                vecs[(i, col)] = eig.eigenvectors[(i, k)] / d[i];
            }
        }
        Ok((vals, vecs))
    }

    /// Singular values in the mass-weighted norms, ascending.
    pub fn singular_values(&self) -> Vec<f64> {
        weighted_singular_values(&self.matrix, &self.mass_out, &self.mass_in)
    }

    /// Numerical kernel dimension by spectral-gap detection.
    pub fn kernel_dim(&self, max_dim: usize) -> KernelReport {
        let sv = self.singular_values();
        kernel_dim_by_gap(&sv, max_dim)
    }
}

pub fn weighted_singular_values(a: &DMatrix<f64>, w_out: &[f64], w_in: &[f64]) -> Vec<f64> {
    let mut b = a.clone();
    for i in 0..b.nrows() {
        let wo = w_out[i].sqrt();
        for j in 0..b.ncols() {
            b[(i, j)] *= wo / w_in[j].sqrt();
        }
    }
    let mut sv: Vec<f64> = b.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| a.total_cmp(b));
    sv
}

#[derive(Debug, Clone)]
pub struct KernelReport {
    pub dim: usize,
    /// Ratio σ_{dim} / σ_{dim−1} across the detected gap (∞ for exact zeros).
    pub gap: f64,
    pub smallest: Vec<f64>,
}

/// Count near-kernel singular values by the largest relative gap among the
/// first `max_dim` values; exact zeros (below 1e−12 σ_max) always count.
pub fn kernel_dim_by_gap(sigmas_ascending: &[f64], max_dim: usize) -> KernelReport {
    let n = sigmas_ascending.len();
    let smax = sigmas_ascending.last().copied().unwrap_or(0.0).max(1e-300);
    let tiny = 1e-12 * smax;
    let exact = sigmas_ascending.iter().take_while(|&&s| s < tiny).count();
    let mut dim = exact;
    let mut best_gap = if exact > 0 { f64::INFINITY } else { 0.0 };
    // Candidate kernel values must sit well below the bulk of the spectrum.
    let ceiling = 0.1 * smax;
    for k in exact.max(1)..=max_dim.min(n.saturating_sub(1)) {
        let lo = sigmas_ascending[k - 1].max(tiny);
        let hi = sigmas_ascending[k];
        if sigmas_ascending[k - 1] > ceiling {
            break;
        }
        let gap = hi / lo;
        if gap > best_gap && gap > 30.0 {
            best_gap = gap;
            dim = k;
        }
    }
    KernelReport {
        dim,
        gap: best_gap,
        smallest: sigmas_ascending.iter().take(max_dim + 2).copied().collect(),
    }
}

/// Count an approximate kernel by the largest consecutive ratio among the
/// first `max_dim` singular values; returns 0 when no ratio reaches
/// `min_gap`.  Used for discretized kernels whose singular values vanish
/// only as the mesh refines (validate counts across a refinement).
pub fn near_kernel_dim_by_ratio(sigmas_ascending: &[f64], max_dim: usize, min_gap: f64) -> (usize, f64) {
    let n = sigmas_ascending.len();
    let mut dim = 0;
    let mut best = 0.0f64;
    for k in 1..=max_dim.min(n.saturating_sub(1)) {
        let lo = sigmas_ascending[k - 1].max(1e-300);
        let ratio = sigmas_ascending[k] / lo;
        if ratio > best {
            best = ratio;
            dim = k;
        }
    }
    if best < min_gap {
        (0, best)
    } else {
        (dim, best)
    }
}

/// The Laplace–Beltrami operator Δ (non-positive convention, constants in
/// its kernel on closed meshes) as a SparseOperator: Δ = −M⁻¹K.
pub fn laplacian(mesh: &SurfaceMesh, metric: &MetricField) -> Result<SparseOperator> {
    match &metric.rep {
        MetricRep::Conformal { .. } => {}
        MetricRep::General(_) => {
            return Err(GermLabError::InvalidArgument(
                "laplacian currently requires a conformal metric".into(),
            ))
        }
    }
    let k = cotan_stiffness(mesh).to_dense();
    let n = mesh.n_vertices();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = -k[(i, j)] / metric.mass(i);
        }
    }
    Ok(SparseOperator {
        name: "laplace_beltrami".into(),
        matrix: a,
        mass_out: metric.masses().to_vec(),
        mass_in: metric.masses().to_vec(),
    })
}
