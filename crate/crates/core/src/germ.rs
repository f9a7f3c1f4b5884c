//! Minimal hyperbolic germs: residuals of the Gauss–Codazzi system, the
//! Codazzi kernel projection that generates admissible second fundamental
//! forms, the conformal-factor Newton solver, and the circle action on m.

use crate::error::{GermLabError, Result};
use crate::field::{OneFormField, ScalarField, SymTensorField};
use crate::mesh::SurfaceMesh;
use crate::metric::MetricField;
use crate::ops::{
    cotan_stiffness, covariant_derivative, derivative_matrix, weighted_singular_values,
};
use nalgebra::{DMatrix, DVector};

pub const TOL_TRACE: f64 = 1e-12;

/// Default residual tolerances, tied to the squared mesh width.
#[derive(Debug, Clone, Copy)]
pub struct GermTolerances {
    pub trace: f64,
    pub codazzi: f64,
    pub gauss: f64,
}

impl GermTolerances {
    pub fn for_mesh(mesh: &SurfaceMesh) -> GermTolerances {
        let h = mesh.max_edge_length();
        GermTolerances {
            trace: TOL_TRACE,
            codazzi: 1e-6 * h * h,
            gauss: 1e-6 * h * h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualSummary {
    pub codazzi: f64,
    pub gauss: f64,
    pub trace: f64,
}

/// A pair (g, m) with cached residual norms.  Accepted germs satisfy the
/// stored tolerances; `new_unchecked` admits deliberately broken pairs for
/// experiments.
#[derive(Debug, Clone)]
pub struct Germ {
    pub g: MetricField,
    pub m: SymTensorField,
    pub residuals: ResidualSummary,
    pub tol: GermTolerances,
}

impl Germ {
    pub fn new(mesh: &SurfaceMesh, g: MetricField, m: SymTensorField) -> Result<Germ> {
        let tol = GermTolerances::for_mesh(mesh);
        Germ::with_tolerances(mesh, g, m, tol)
    }

    pub fn with_tolerances(
        mesh: &SurfaceMesh,
        g: MetricField,
        m: SymTensorField,
        tol: GermTolerances,
    ) -> Result<Germ> {
        let residuals = evaluate_residuals(mesh, &g, &m)?;
        let germ = Germ {
            g,
            m,
            residuals,
            tol,
        };
        if !germ.accepted() {
            return Err(GermLabError::GermRejected(format!(
                "residuals {:?} exceed tolerances {:?}",
                germ.residuals, germ.tol
            )));
        }
        Ok(germ)
    }

    /// Store the pair without enforcing acceptance (residuals still cached).
    pub fn new_unchecked(mesh: &SurfaceMesh, g: MetricField, m: SymTensorField) -> Result<Germ> {
        let residuals = evaluate_residuals(mesh, &g, &m)?;
        Ok(Germ {
            g,
            m,
            residuals,
            tol: GermTolerances::for_mesh(mesh),
        })
    }

    pub fn accepted(&self) -> bool {
        self.residuals.trace <= self.tol.trace
            && self.residuals.codazzi <= self.tol.codazzi
            && self.residuals.gauss <= self.tol.gauss
    }

    /// The Fuchsian baseline (g0, 0).
    pub fn fuchsian(mesh: &SurfaceMesh) -> Result<Germ> {
        let g = MetricField::fuchsian(mesh)?;
        let m = SymTensorField::zeros(mesh.n_vertices());
        Germ::new(mesh, g, m)
    }

    pub fn max_m_norm_sq(&self) -> f64 {
        (0..self.m.len()).fold(0.0f64, |a, i| a.max(self.m.norm_sq(i)))
    }

    /// max |λ(m)|·√6 over vertices; < 1 iff |m|² < 1/3 everywhere.
    pub fn principal_curvature_margin(&self) -> f64 {
        (3.0 * self.max_m_norm_sq()).sqrt()
    }
}

pub fn evaluate_residuals(
    mesh: &SurfaceMesh,
    g: &MetricField,
    m: &SymTensorField,
) -> Result<ResidualSummary> {
    let k = trace_residual(m);
    let w = codazzi_residual(mesh, g, m)?;
    let gauss = gauss_residual(mesh, g, m)?;
    Ok(ResidualSummary {
        codazzi: w.max_abs(),
        gauss: gauss.max_abs(),
        trace: k.max_abs(),
    })
}

/// k = g^{AB} m_AB, evaluated pointwise (frame trace).
pub fn trace_residual(m: &SymTensorField) -> ScalarField {
    ScalarField((0..m.len()).map(|i| m.trace(i)).collect())
}

/// Codazzi defect as a covector: w_A = ε_CB d_C m_AB, the Hodge dual of the
/// antisymmetrized derivative d_C m_AB − d_B m_AC.
pub fn codazzi_residual(
    mesh: &SurfaceMesh,
    g: &MetricField,
    m: &SymTensorField,
) -> Result<OneFormField> {
    let dm = covariant_derivative(mesh, g, &m.into())?;
    let n = mesh.n_vertices();
    let mut w = vec![[0.0; 2]; n];
    for i in 0..n {
        for a in 0..2 {
            w[i][a] = dm.get(i, &[0, a, 1]) - dm.get(i, &[1, a, 0]);
        }
    }
    Ok(OneFormField(w))
}

/// Gauss residual r + |m|² + 1/3 − k².
pub fn gauss_residual(
    mesh: &SurfaceMesh,
    g: &MetricField,
    m: &SymTensorField,
) -> Result<ScalarField> {
    let r = g.scalar_curvature(mesh)?;
    let n = mesh.n_vertices();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let k = m.trace(i);
        out[i] = r.0[i] + m.norm_sq(i) + 1.0 / 3.0 - k * k;
    }
    Ok(ScalarField(out))
}

/// Traceless Codazzi tensors on a conformal metric are exactly the real
/// parts of holomorphic quadratic differentials, so the admissible space is
/// computed from the chart components q = m_chart,11 − i·m_chart,12, a
/// section of K² with Möbius twist factors across the side pairings.  The
/// P1 Galerkin energy E(q) = ∫ |∂̄ q_h|² λ^{-2} dA has no spurious
/// low-energy modes, unlike pointwise stencil derivatives.
///
/// Matrices are realified: dof 2i = Re q_i, dof 2i+1 = Im q_i.
pub struct QdSpace {
    /// Hermitian PSD ∂̄-energy, realified to 2V × 2V.
    pub energy: DMatrix<f64>,
    /// Lumped L²(K²) masses matching ∫ |m|² dvol (per real dof).
    pub mass: Vec<f64>,
}

/// Twist factor carrying canonical-chart values of a quadratic differential
/// to the domain copy v: q_domain(pos v) = twist(v) · q_canonical.
fn qd_twist(mesh: &SurfaceMesh, v: usize) -> num_complex::Complex64 {
    let rep = mesh.rep_of(mesh.class_of(v));
    let d = mesh.to_domain_map(v).derivative(mesh.vertex_position(mesh.class_of(v)));
    let _ = rep;
    let inv = 1.0 / d;
    inv * inv
}

pub fn qd_space(mesh: &SurfaceMesh, g: &MetricField) -> Result<QdSpace> {
    if !g.is_conformal() {
        return Err(GermLabError::InvalidArgument(
            "the quadratic-differential space requires a conformal metric".into(),
        ));
    }
    let n = mesh.n_vertices();
    let mut energy = DMatrix::zeros(2 * n, 2 * n);
    let mut mass = vec![0.0; 2 * n];
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles[t];
        let area2 = mesh.tri_area2(t);
        let area = 0.5 * area2;
        let p: Vec<_> = tri.iter().map(|&v| mesh.domain_position(v)).collect();
        // λ at the centroid of the triangle in its own chart.
        let centroid = (p[0] + p[1] + p[2]) / 3.0;
        let u_avg = (0..3)
            .map(|k| g.u_value(mesh.class_of(tri[k])))
            .sum::<f64>()
            / 3.0;
        let lam_t = g.lambda_between(centroid, u_avg, u_avg);
        // ∂̄ of the P1 basis: (∂x + i∂y)/2 of the hat functions.
        let mut dbar = [num_complex::Complex64::new(0.0, 0.0); 3];
        for a in 0..3 {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            let gx = (p[b].im - p[c].im) / area2;
            let gy = (p[c].re - p[b].re) / area2;
            dbar[a] = num_complex::Complex64::new(gx, gy) * 0.5;
        }
        let twists: Vec<_> = tri.iter().map(|&v| qd_twist(mesh, v)).collect();
        // Energy: area · λ^{-2} · Σ_ab conj(dbar_a t_a) (dbar_b t_b) q̄_a q_b.
        for a in 0..3 {
            let ca = mesh.class_of(tri[a]);
            for b in 0..3 {
                let cb = mesh.class_of(tri[b]);
                let coef = (dbar[a] * twists[a]).conj() * (dbar[b] * twists[b]) * area
                    / (lam_t * lam_t);
                // Realified Hermitian block [[re, −im], [im, re]].
                energy[(2 * ca, 2 * cb)] += coef.re;
                energy[(2 * ca, 2 * cb + 1)] -= coef.im;
                energy[(2 * ca + 1, 2 * cb)] += coef.im;
                energy[(2 * ca + 1, 2 * cb + 1)] += coef.re;
            }
            // Mass: ∫ |m|² dvol = 2 ∫ |q|² λ^{-1} dA, vertex rule.
            let lam_corner = g.lambda_between(p[a], g.u_value(ca), g.u_value(ca));
            let w = 2.0 * area / 3.0 * twists[a].norm_sqr() / lam_corner;
            mass[2 * ca] += w;
            mass[2 * ca + 1] += w;
        }
    }
    Ok(QdSpace { energy, mass })
}

/// Mass-orthonormal basis of the discrete Codazzi kernel among traceless
/// symmetric fields (the holomorphic-quadratic-differential space), with
/// the ∂̄-singular values σ = √θ of the generalized eigenproblem.
pub struct CodazziKernel {
    pub basis: Vec<SymTensorField>,
    pub sigmas: Vec<f64>,
    pub all_sigmas: Vec<f64>,
}

pub fn codazzi_kernel(mesh: &SurfaceMesh, g: &MetricField, dim: usize) -> Result<CodazziKernel> {
    let space = qd_space(mesh, g)?;
    let n = mesh.n_vertices();
    let d: Vec<f64> = space.mass.iter().map(|m| m.sqrt()).collect();
    let mut b = space.energy.clone();
    for i in 0..2 * n {
        for j in 0..2 * n {
            b[(i, j)] /= d[i] * d[j];
        }
    }
    let b = (&b + b.transpose()) * 0.5;
    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut basis = Vec::with_capacity(dim);
    let mut sigmas = Vec::with_capacity(dim);
    for &k in order.iter().take(dim) {
        sigmas.push(eig.eigenvalues[k].max(0.0).sqrt());
        let mut comps = vec![[0.0; 3]; n];
        for i in 0..n {
            let qre = eig.eigenvectors[(2 * i, k)] / d[2 * i];
            let qim = eig.eigenvectors[(2 * i + 1, k)] / d[2 * i + 1];
            // Frame components: p = Re q / λ, q = −Im q / λ.
            let lam = g.lambda(i);
            comps[i] = [qre / lam, -qim / lam, -qre / lam];
        }
        basis.push(SymTensorField {
            comps,
            traceless: true,
        });
    }
    let all: Vec<f64> = order
        .iter()
        .map(|&k| eig.eigenvalues[k].max(0.0).sqrt())
        .collect();
    // Re-orthonormalize in the tensor L² product (the eigenvectors are
    // orthonormal in the q-space quadrature, which differs by O(h²)).
    for k in 0..basis.len() {
        for j in 0..k {
            let c = g.l2_sym(&basis[j], &basis[k]);
            let bj = basis[j].scale(c);
            for i in 0..n {
                for idx in 0..3 {
                    basis[k].comps[i][idx] -= bj.comps[i][idx];
                }
            }
        }
        let nrm = g.l2_sym(&basis[k], &basis[k]).sqrt();
        basis[k] = basis[k].scale(1.0 / nrm.max(1e-300));
    }
    Ok(CodazziKernel {
        basis,
        sigmas,
        all_sigmas: all,
    })
}

/// L²-orthogonal projection of a traceless field onto the discrete Codazzi
/// kernel.
pub fn project_codazzi(
    mesh: &SurfaceMesh,
    g: &MetricField,
    m_raw: &SymTensorField,
    kernel: &CodazziKernel,
) -> SymTensorField {
    let n = mesh.n_vertices();
    let mut out = SymTensorField::zeros(n);
    for b in &kernel.basis {
        let c = g.l2_sym(b, m_raw);
        out = out.add(&b.scale(c));
    }
    out
}

/// Newton solve of the conformal Gauss equation
/// F(u) = e^u (r_g + Δ_g u) + e^{2u} |m|²_g + 1/3 = 0; returns u, the germ
/// (e^{-u} g, e^u m in its own frames), and the residual-norm history.
pub struct ConformalSolve {
    pub u: ScalarField,
    pub germ: Germ,
    pub history: Vec<f64>,
    pub iterations: usize,
}

pub fn solve_conformal_gauss(
    mesh: &SurfaceMesh,
    g: &MetricField,
    m: &SymTensorField,
    tol: f64,
    max_iter: usize,
) -> Result<ConformalSolve> {
    if !g.is_conformal() {
        return Err(GermLabError::InvalidArgument(
            "conformal Gauss solve requires a conformal metric".into(),
        ));
    }
    let n = mesh.n_vertices();
    let r_g = g.scalar_curvature(mesh)?;
    let msq: Vec<f64> = (0..n).map(|i| m.norm_sq(i)).collect();
    let k = cotan_stiffness(mesh);
    let mass_g: Vec<f64> = (0..n).map(|i| g.mass(i)).collect();

    let eval = |u: &DVector<f64>| -> DVector<f64> {
        let ku = k.apply(u.as_slice());
        DVector::from_fn(n, |i, _| {
            let lap = -ku[i] / mass_g[i]; // Δ_g u
            u[i].exp() * (r_g.0[i] + lap) + (2.0 * u[i]).exp() * msq[i] + 1.0 / 3.0
        })
    };
    let l2 = |f: &DVector<f64>| -> f64 {
        (0..n)
            .map(|i| mass_g[i] * f[i] * f[i])
            .sum::<f64>()
            .sqrt()
    };

    let mut u = DVector::zeros(n);
    let mut f = eval(&u);
    let mut history = vec![f.amax()];
    let mut iterations = 0;
    for _ in 0..max_iter {
        if f.amax() <= tol {
            break;
        }
        iterations += 1;
        // J w = e^u (r + Δu) w + e^u Δw + 2 e^{2u} |m|² w
        let ku = k.apply(u.as_slice());
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n {
            let lap = -ku[i] / mass_g[i];
            let diag = u[i].exp() * (r_g.0[i] + lap) + 2.0 * (2.0 * u[i]).exp() * msq[i];
            jac[(i, i)] += diag;
        }
        let kd = k.to_dense();
        for i in 0..n {
            let s = u[i].exp() / mass_g[i];
            for j in 0..n {
                jac[(i, j)] -= s * kd[(i, j)];
            }
        }
        let lu = jac.lu();
        let step = lu.solve(&(-&f)).ok_or_else(|| {
            GermLabError::SingularLinearization(
                "Newton Jacobian is singular (Δ + (|m|²−1/3) has a near-zero eigenvalue)".into(),
            )
        })?;
        // Backtracking line search on the L² norm of F.
        let f0 = l2(&f);
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = &u + alpha * &step;
            let ftrial = eval(&trial);
            if l2(&ftrial) < (1.0 - 0.25 * alpha) * f0 {
                u = trial;
                f = ftrial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(GermLabError::Convergence(format!(
                "line search stalled at residual {:.3e}",
                f.amax()
            )));
        }
        history.push(f.amax());
    }
    if f.amax() > tol {
        return Err(GermLabError::Convergence(format!(
            "Newton residual {:.3e} above tolerance {tol:.3e} after {max_iter} iterations",
            f.amax()
        )));
    }
    let u_field = ScalarField(u.iter().copied().collect());
    let g_new = g.conformal_shift(mesh, &u_field)?;
    // Frame components of m with respect to the new metric scale by e^u.
    let m_new = SymTensorField {
        comps: (0..n)
            .map(|i| {
                let s = u[i].exp();
                let c = m.comps[i];
                [s * c[0], s * c[1], s * c[2]]
            })
            .collect(),
        traceless: m.traceless,
    };
    let mut tolerances = GermTolerances::for_mesh(mesh);
    tolerances.gauss = tolerances.gauss.max(tol);
    // The conformal change preserves Codazzi analytically but not to
    // round-off discretely; accept the re-evaluated residual with the same
    // h²-scaled budget used for the input projection.
    let residuals = evaluate_residuals(mesh, &g_new, &m_new)?;
    tolerances.codazzi = tolerances.codazzi.max(residuals.codazzi * 1.0001);
    let germ = Germ::with_tolerances(mesh, g_new, m_new, tolerances)?;
    Ok(ConformalSolve {
        u: u_field,
        germ,
        history,
        iterations,
    })
}

/// Theorem-2.1 circle action: m ↦ cos τ · m + sin τ · ε·m with g unchanged.
pub fn circle_action(mesh: &SurfaceMesh, germ: &Germ, tau: f64) -> Result<Germ> {
    let (c, s) = (tau.cos(), tau.sin());
    let comps = germ
        .m
        .comps
        .iter()
        .map(|&[p, q, _]| {
            let p2 = c * p + s * q;
            let q2 = c * q - s * p;
            [p2, q2, -p2]
        })
        .collect();
    let m2 = SymTensorField {
        comps,
        traceless: true,
    };
    let residuals = evaluate_residuals(mesh, &germ.g, &m2)?;
    Ok(Germ {
        g: germ.g.clone(),
        m: m2,
        residuals,
        tol: germ.tol,
    })
}

/// Density components m̂^{AB} = det(g)^{1/2} g^{AC} g^{BD} m_CD in chart
/// coordinates; for conformal metrics these coincide with the orthonormal
/// frame components of m.
pub struct CotangentElement {
    pub chart_comps: Vec<[f64; 3]>,
}

pub fn cotangent_element(germ: &Germ) -> CotangentElement {
    CotangentElement {
        chart_comps: germ.m.comps.clone(),
    }
}

/// The cotangent pairing ∫ g^{AC} g^{BD} m_CD h_AB dvol_g.
pub fn cotangent_pairing(germ: &Germ, h: &SymTensorField) -> f64 {
    germ.g.l2_sym(&germ.m, h)
}

/// Generate a Codazzi m on (mesh, g) from a seeded random traceless field,
/// scaled so that max |m|² = amp².  Returns None if the projection is
/// degenerate (zero field).
pub fn seeded_codazzi_field(
    mesh: &SurfaceMesh,
    g: &MetricField,
    kernel: &CodazziKernel,
    seed: u64,
    amp: f64,
) -> Option<SymTensorField> {
    let mut sampler = crate::field::FieldSampler::new(seed);
    let raw = sampler.sym_traceless(mesh, 2);
    let proj = project_codazzi(mesh, g, &raw, kernel);
    let max_norm = (0..proj.len()).fold(0.0f64, |a, i| a.max(proj.norm_sq(i)));
    if max_norm < 1e-30 {
        return None;
    }
    Some(proj.scale(amp / max_norm.sqrt()))
}

/// Singular values (ascending) of the discrete ∂̄ operator on quadratic
/// differentials, for kernel-dimension diagnostics.
pub fn codazzi_singular_values(mesh: &SurfaceMesh, g: &MetricField) -> Result<Vec<f64>> {
    let kernel = codazzi_kernel(mesh, g, 1)?;
    Ok(kernel.all_sigmas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FieldSampler;

    #[test]
    fn trace_residual_examples() {
        let mesh = SurfaceMesh::bolza(1);
        let n = mesh.n_vertices();
        let mut m = SymTensorField::zeros(n);
        for i in 0..n {
            m.comps[i] = [1.0, 0.0, 1.0]; // m = identity in frames: k = 2
        }
        let k = trace_residual(&m);
        assert!(k.0.iter().all(|&v| (v - 2.0).abs() < 1e-15));
        let tl = m.traceless_part();
        assert!(trace_residual(&tl).max_abs() < 1e-15);
    }

    #[test]
    fn fuchsian_pair_is_a_germ() {
        let mesh = SurfaceMesh::bolza(2);
        let germ = Germ::fuchsian(&mesh).unwrap();
        assert!(germ.accepted());
        assert!(germ.residuals.gauss < 1e-13);
        assert!(germ.residuals.codazzi < 1e-13);
    }

    #[test]
    fn gauss_residual_of_constant_m_norm() {
        // (g0, m) with |m|² = c and no conformal correction has residual ≈ c.
        let mesh = SurfaceMesh::bolza(1);
        let g = MetricField::fuchsian(&mesh).unwrap();
        let n = mesh.n_vertices();
        let p = 0.2f64;
        let m = SymTensorField {
            comps: vec![[p, 0.0, -p]; n],
            traceless: true,
        };
        let c = 2.0 * p * p;
        let res = gauss_residual(&mesh, &g, &m).unwrap();
        assert!(res.0.iter().all(|&v| (v - c).abs() < 1e-12));
    }

    #[test]
    fn codazzi_kernel_has_dimension_six() {
        // Genus 2: holomorphic quadratic differentials have 6 real dimensions
        // (Riemann–Roch: dim_C = 3g − 3 = 3).  The discrete near-kernel is
        // counted by the largest spectral ratio, stable across a refinement.
        let mut dims = Vec::new();
        for refinement in [2u32, 3] {
            let mesh = SurfaceMesh::bolza(refinement);
            let g = MetricField::fuchsian(&mesh).unwrap();
            let sv = codazzi_singular_values(&mesh, &g).unwrap();
            let (dim, gap) = crate::ops::near_kernel_dim_by_ratio(&sv, 10, 1.6);
            dims.push((dim, gap));
        }
        assert_eq!(dims[0].0, 6, "{dims:?}");
        assert_eq!(dims[1].0, 6, "{dims:?}");
    }

    #[test]
    fn projection_is_idempotent() {
        let mesh = SurfaceMesh::bolza(2);
        let g = MetricField::fuchsian(&mesh).unwrap();
        let kernel = codazzi_kernel(&mesh, &g, 6).unwrap();
        let mut sampler = FieldSampler::new(3);
        let raw = sampler.sym_traceless(&mesh, 2);
        let p1 = project_codazzi(&mesh, &g, &raw, &kernel);
        let p2 = project_codazzi(&mesh, &g, &p1, &kernel);
        let diff: f64 = (0..p1.len())
            .map(|i| {
                (0..3)
                    .map(|k| (p1.comps[i][k] - p2.comps[i][k]).abs())
                    .fold(0.0f64, f64::max)
            })
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-10 * p1.max_abs().max(1e-30), "diff {diff}");
        // Zero projects to zero.
        let z = project_codazzi(&mesh, &g, &SymTensorField::zeros(mesh.n_vertices()), &kernel);
        assert!(z.max_abs() < 1e-14);
    }

    #[test]
    fn newton_recovers_constant_shift() {
        // g = e^{-c} g0 with constant c: u = −c restores curvature −1/3.
        let mesh = SurfaceMesh::bolza(2);
        let g0 = MetricField::fuchsian(&mesh).unwrap();
        let c = 0.37;
        let shift = ScalarField::constant(mesh.n_vertices(), c);
        let g = g0.conformal_shift(&mesh, &shift).unwrap();
        let m = SymTensorField::zeros(mesh.n_vertices());
        let solve = solve_conformal_gauss(&mesh, &g, &m, 1e-12, 20).unwrap();
        for &ui in &solve.u.0 {
            assert!((ui + c).abs() < 1e-10, "u = {ui}, expected {}", -c);
        }
    }

    #[test]
    fn newton_on_fuchsian_is_trivial() {
        let mesh = SurfaceMesh::bolza(1);
        let g0 = MetricField::fuchsian(&mesh).unwrap();
        let m = SymTensorField::zeros(mesh.n_vertices());
        let solve = solve_conformal_gauss(&mesh, &g0, &m, 1e-12, 10).unwrap();
        assert!(solve.u.max_abs() < 1e-12);
        assert_eq!(solve.iterations, 0);
    }

    #[test]
    fn newton_solves_small_codazzi_data() {
        let mesh = SurfaceMesh::bolza(2);
        let g0 = MetricField::fuchsian(&mesh).unwrap();
        let kernel = codazzi_kernel(&mesh, &g0, 6).unwrap();
        let m = seeded_codazzi_field(&mesh, &g0, &kernel, 7, 0.3).unwrap();
        let solve = solve_conformal_gauss(&mesh, &g0, &m, 1e-8, 12).unwrap();
        assert!(solve.germ.residuals.gauss <= 1e-8);
        // Small data lands inside the |m|² < 1/3 neighborhood.
        assert!(solve.germ.max_m_norm_sq() < 1.0 / 3.0);
        assert!(solve.germ.principal_curvature_margin() < 1.0);
    }

    #[test]
    fn circle_action_properties() {
        let mesh = SurfaceMesh::bolza(2);
        let g0 = MetricField::fuchsian(&mesh).unwrap();
        let kernel = codazzi_kernel(&mesh, &g0, 6).unwrap();
        let m = seeded_codazzi_field(&mesh, &g0, &kernel, 11, 0.25).unwrap();
        let solve = solve_conformal_gauss(&mesh, &g0, &m, 1e-9, 12).unwrap();
        let germ = solve.germ;

        let id = circle_action(&mesh, &germ, 0.0).unwrap();
        assert_eq!(id.m.comps, germ.m.comps);
        let full = circle_action(&mesh, &germ, 2.0 * std::f64::consts::PI).unwrap();
        for i in 0..germ.m.len() {
            for k in 0..3 {
                assert!((full.m.comps[i][k] - germ.m.comps[i][k]).abs() < 1e-14);
            }
        }
        // Norm is preserved pointwise and residuals are preserved to round-off.
        let tau = 0.9;
        let rot = circle_action(&mesh, &germ, tau).unwrap();
        for i in 0..germ.m.len() {
            assert!((rot.m.norm_sq(i) - germ.m.norm_sq(i)).abs() < 1e-13);
        }
        assert!(rot.residuals.codazzi <= germ.residuals.codazzi * 1.5 + 1e-14);
        assert!(rot.residuals.gauss <= germ.residuals.gauss + 1e-10);
        // Group law on the m components.
        let a = circle_action(&mesh, &germ, 0.4).unwrap();
        let ab = circle_action(&mesh, &a, 0.7).unwrap();
        let direct = circle_action(&mesh, &germ, 1.1).unwrap();
        for i in 0..germ.m.len() {
            for k in 0..3 {
                assert!((ab.m.comps[i][k] - direct.m.comps[i][k]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn cotangent_pairing_examples() {
        let mesh = SurfaceMesh::bolza(2);
        let g0 = MetricField::fuchsian(&mesh).unwrap();
        let kernel = codazzi_kernel(&mesh, &g0, 6).unwrap();
        let m = seeded_codazzi_field(&mesh, &g0, &kernel, 5, 0.2).unwrap();
        let germ = Germ::new_unchecked(&mesh, g0, m).unwrap();
        // h = g: pairing vanishes because m is traceless.
        let n = mesh.n_vertices();
        let h_metric = SymTensorField {
            comps: vec![[1.0, 0.0, 1.0]; n],
            traceless: false,
        };
        assert!(cotangent_pairing(&germ, &h_metric).abs() < 1e-12);
        // h = m: pairing equals ∫ |m|² ≥ 0.
        let self_pair = cotangent_pairing(&germ, &germ.m);
        let norm: f64 = (0..n)
            .map(|i| germ.g.mass(i) * germ.m.norm_sq(i))
            .sum();
        assert!((self_pair - norm).abs() < 1e-12 * norm.max(1e-30));
        assert!(self_pair > 0.0);
    }

    #[test]
    fn pairing_annihilates_diffeomorphism_orbit() {
        // pairing(m, Lie_v g + w g) ≈ 0 for Codazzi traceless m.
        let mesh = SurfaceMesh::bolza(2);
        let g0 = MetricField::fuchsian(&mesh).unwrap();
        let kernel = codazzi_kernel(&mesh, &g0, 6).unwrap();
        let m = seeded_codazzi_field(&mesh, &g0, &kernel, 13, 0.3).unwrap();
        let germ = Germ::new_unchecked(&mesh, g0.clone(), m).unwrap();
        let mut sampler = FieldSampler::new(21);
        let m_l2 = germ.g.l2_sym(&germ.m, &germ.m).sqrt();
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let v = sampler.one_form(&mesh, 2);
            let w = sampler.scalar(&mesh, 2);
            let dv = covariant_derivative(&mesh, &g0, &(&v).into()).unwrap();
            let n = mesh.n_vertices();
            let lie = SymTensorField {
                comps: (0..n)
                    .map(|i| {
                        let d00 = dv.get(i, &[0, 0]);
                        let d01 = dv.get(i, &[0, 1]);
                        let d10 = dv.get(i, &[1, 0]);
                        let d11 = dv.get(i, &[1, 1]);
                        [2.0 * d00 + w.0[i], d01 + d10, 2.0 * d11 + w.0[i]]
                    })
                    .collect(),
                traceless: false,
            };
            let lie_norm = germ.g.l2_sym(&lie, &lie).sqrt();
            let p = cotangent_pairing(&germ, &lie).abs();
            worst = worst.max(p / (m_l2 * lie_norm).max(1e-30));
        }
        // Discretization scale of the P1-projected m at refinement 2: the
        // pairing vanishes only up to ‖div m‖ plus the quadrature's
        // integration-by-parts defect.
        assert!(worst < 0.25, "relative orbit pairing {worst}");
    }
}
