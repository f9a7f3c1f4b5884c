//! Riemannian metrics on mesh charts.
//!
//! Every metric that carries spatial differential operators in this crate is
//! conformal in the disk chart, written as g = e^{-u} λ_base δ with an
//! analytic base factor and a per-vertex deviation u.  This makes the
//! discrete conformal calculus exact: the FEM stiffness is conformally
//! invariant in 2D and the lumped vertex masses scale by e^{-u}, so
//! Δ_{e^{-u} g} = e^{u} Δ_g holds at the matrix level.  A general per-vertex
//! SPD representation is kept for chart experiments and for PL (angle
//! defect) curvature.

use crate::error::{GermLabError, Result};
use crate::field::{check_same_mesh, ScalarField, SymTensorField};
use crate::geom::C64;
use crate::mesh::{MeshKind, SurfaceMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConformalBase {
    /// λ_base(z) = scale · 24 / (1 − |z|²)²; scale = 1 is the Fuchsian
    /// normalization with Gauss curvature −1/6 (scalar curvature −1/3).
    Hyperbolic { scale: f64 },
    /// λ_base(z) = scale (flat chart metric).
    Euclidean { scale: f64 },
}

impl ConformalBase {
    pub fn lambda(&self, z: C64) -> f64 {
        match self {
            ConformalBase::Hyperbolic { scale } => {
                let d = 1.0 - z.norm_sqr();
                scale * 24.0 / (d * d)
            }
            ConformalBase::Euclidean { scale } => *scale,
        }
    }

    pub fn dlog_lambda(&self, z: C64) -> [f64; 2] {
        match self {
            ConformalBase::Hyperbolic { .. } => {
                let d = 1.0 - z.norm_sqr();
                [4.0 * z.re / d, 4.0 * z.im / d]
            }
            ConformalBase::Euclidean { .. } => [0.0, 0.0],
        }
    }

    /// Scalar curvature r = 2K of the base metric (constant).
    pub fn scalar_curvature(&self) -> f64 {
        match self {
            ConformalBase::Hyperbolic { scale } => -1.0 / (3.0 * scale),
            ConformalBase::Euclidean { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub enum MetricRep {
    /// g = e^{-u} · λ_base · δ in chart coordinates.
    Conformal { base: ConformalBase, u: ScalarField },
    /// Chart components [g11, g12, g22] per quotient vertex.
    General(Vec<[f64; 3]>),
}

#[derive(Debug, Clone)]
pub struct MetricField {
    pub rep: MetricRep,
    n: usize,
    /// Conformal factor at each canonical vertex position (conformal rep).
    lambda: Vec<f64>,
    /// Lumped vertex masses ∫ φ_i dvol_g (corner quadrature rule).
    mass: Vec<f64>,
    /// Base-metric masses (conformal rep; mass = e^{-u} · mass_base).
    mass_base: Vec<f64>,
    /// Chart gradient of log λ at canonical positions (conformal rep);
    /// the u part is fitted from the mesh patches.
    dlog_lambda: Vec<[f64; 2]>,
}

impl MetricField {
    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn is_conformal(&self) -> bool {
        matches!(self.rep, MetricRep::Conformal { .. })
    }

    /// The hyperbolic metric with scalar curvature −1/3: λ(z) = 24/(1−|z|²)².
    pub fn fuchsian(mesh: &SurfaceMesh) -> Result<MetricField> {
        for v in 0..mesh.n_domain_vertices() {
            let z = mesh.domain_position(v);
            if z.norm() >= 1.0 {
                return Err(GermLabError::OutsideDisk([z.re, z.im]));
            }
        }
        MetricField::conformal(
            mesh,
            ConformalBase::Hyperbolic { scale: 1.0 },
            ScalarField::zeros(mesh.n_vertices()),
        )
    }

    /// Flat chart metric δ_AB (disk experiments).
    pub fn flat(mesh: &SurfaceMesh) -> Result<MetricField> {
        MetricField::conformal(
            mesh,
            ConformalBase::Euclidean { scale: 1.0 },
            ScalarField::zeros(mesh.n_vertices()),
        )
    }

    pub fn conformal(
        mesh: &SurfaceMesh,
        base: ConformalBase,
        u: ScalarField,
    ) -> Result<MetricField> {
        check_same_mesh(u.len(), mesh)?;
        let n = mesh.n_vertices();
        let mut metric = MetricField {
            rep: MetricRep::Conformal { base, u },
            n,
            lambda: vec![0.0; n],
            mass: vec![0.0; n],
            mass_base: vec![0.0; n],
            dlog_lambda: vec![[0.0; 2]; n],
        };
        metric.rebuild_caches(mesh)?;
        Ok(metric)
    }

    pub fn general(mesh: &SurfaceMesh, g: Vec<[f64; 3]>) -> Result<MetricField> {
        check_same_mesh(g.len(), mesh)?;
        for (i, &[a, b, c]) in g.iter().enumerate() {
            if a <= 0.0 || a * c - b * b <= 0.0 {
                return Err(GermLabError::SingularMetric {
                    vertex: i,
                    detail: format!("g = [{a}, {b}, {c}] is not positive definite"),
                });
            }
        }
        let n = mesh.n_vertices();
        let mut metric = MetricField {
            rep: MetricRep::General(g),
            n,
            lambda: vec![0.0; n],
            mass: vec![0.0; n],
            mass_base: vec![0.0; n],
            dlog_lambda: vec![[0.0; 2]; n],
        };
        metric.rebuild_caches(mesh)?;
        Ok(metric)
    }

    /// Replace g by e^{-w} g (conformal representation only).
    pub fn conformal_shift(&self, mesh: &SurfaceMesh, w: &ScalarField) -> Result<MetricField> {
        match &self.rep {
            MetricRep::Conformal { base, u } => {
                let u2 = ScalarField(u.0.iter().zip(&w.0).map(|(a, b)| a + b).collect());
                MetricField::conformal(mesh, *base, u2)
            }
            MetricRep::General(_) => Err(GermLabError::InvalidArgument(
                "conformal_shift requires a conformal metric".into(),
            )),
        }
    }

    fn rebuild_caches(&mut self, mesh: &SurfaceMesh) -> Result<()> {
        let n = self.n;
        match &self.rep {
            MetricRep::Conformal { base, u } => {
                for i in 0..n {
                    let z = mesh.vertex_position(i);
                    self.lambda[i] = (-u.0[i]).exp() * base.lambda(z);
                }
                // Lumped masses M_i = ∫ φ_i λ_base dA per chart triangle with
                // recursive midpoint quadrature (λ_base varies strongly near
                // the rim); the e^{-u_i} factor stays outside so the masses
                // scale exactly under conformal shifts.
                let mut mass_base = vec![0.0; n];
                let eye = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
                for t in 0..mesh.n_triangles() {
                    let tri = mesh.triangles[t];
                    let p = [
                        mesh.domain_position(tri[0]),
                        mesh.domain_position(tri[1]),
                        mesh.domain_position(tri[2]),
                    ];
                    let mut contrib = [0.0; 3];
                    base_hat_integrals(base, p, eye, 3, &mut contrib);
                    for k in 0..3 {
                        mass_base[mesh.class_of(tri[k])] += contrib[k];
                    }
                }
                for i in 0..n {
                    self.mass_base[i] = mass_base[i];
                    self.mass[i] = (-u.0[i]).exp() * mass_base[i];
                }
                // Chart gradient of log λ = dlog λ_base − ∇u (u fitted below
                // by the jets module; filled in lazily by ops when needed).
                let du = crate::jets::scalar_gradients(mesh, &u.0);
                for i in 0..n {
                    let b = base.dlog_lambda(mesh.vertex_position(i));
                    self.dlog_lambda[i] = [b[0] - du[i][0], b[1] - du[i][1]];
                }
            }
            MetricRep::General(g) => {
                for i in 0..n {
                    let [a, b, c] = g[i];
                    self.lambda[i] = (a * c - b * b).sqrt(); // √det, used for masses
                }
                let mut mass = vec![0.0; n];
                for t in 0..mesh.n_triangles() {
                    let a2 = mesh.tri_area2(t);
                    for k in 0..3 {
                        let c = mesh.class_of(mesh.triangles[t][k]);
                        mass[c] += a2 / 6.0 * self.lambda[c];
                    }
                }
                self.mass = mass;
            }
        }
        Ok(())
    }

    /// Conformal factor at the canonical position of a quotient vertex.
    pub fn lambda(&self, i: usize) -> f64 {
        match &self.rep {
            MetricRep::Conformal { .. } => self.lambda[i],
            MetricRep::General(_) => panic!("lambda() requires a conformal metric"),
        }
    }

    /// Conformal factor at an arbitrary chart point, interpolating u from the
    /// two endpoint classes of the segment it lies on.
    pub fn lambda_between(&self, z: C64, ui: f64, uj: f64) -> f64 {
        match &self.rep {
            MetricRep::Conformal { base, .. } => (-(0.5 * (ui + uj))).exp() * base.lambda(z),
            MetricRep::General(_) => panic!("lambda_between requires a conformal metric"),
        }
    }

    pub fn u_value(&self, i: usize) -> f64 {
        match &self.rep {
            MetricRep::Conformal { u, .. } => u.0[i],
            MetricRep::General(_) => 0.0,
        }
    }

    pub fn dlog_lambda(&self, i: usize) -> [f64; 2] {
        self.dlog_lambda[i]
    }

    /// Lumped mass (dual-cell dvol weight) of a quotient vertex.
    pub fn mass(&self, i: usize) -> f64 {
        self.mass[i]
    }

    pub fn mass_base(&self, i: usize) -> f64 {
        self.mass_base[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn total_area(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Chart components [g11, g12, g22] at a quotient vertex.
    pub fn chart_matrix(&self, i: usize) -> [f64; 3] {
        match &self.rep {
            MetricRep::Conformal { .. } => [self.lambda[i], 0.0, self.lambda[i]],
            MetricRep::General(g) => g[i],
        }
    }

    /// Metric length of a chart edge between domain vertices (midpoint rule).
    pub fn edge_length(&self, mesh: &SurfaceMesh, u: usize, v: usize) -> f64 {
        let zu = mesh.domain_position(u);
        let zv = mesh.domain_position(v);
        match &self.rep {
            MetricRep::Conformal { .. } => {
                let lam = self.lambda_between(
                    0.5 * (zu + zv),
                    self.u_value(mesh.class_of(u)),
                    self.u_value(mesh.class_of(v)),
                );
                lam.sqrt() * (zv - zu).norm()
            }
            MetricRep::General(g) => {
                let gi = g[mesh.class_of(u)];
                let gj = g[mesh.class_of(v)];
                let gm = [
                    0.5 * (gi[0] + gj[0]),
                    0.5 * (gi[1] + gj[1]),
                    0.5 * (gi[2] + gj[2]),
                ];
                let d = zv - zu;
                (gm[0] * d.re * d.re + 2.0 * gm[1] * d.re * d.im + gm[2] * d.im * d.im)
                    .max(0.0)
                    .sqrt()
            }
        }
    }

    /// ∫ f dvol_g by the lumped vertex rule.
    pub fn integrate(&self, f: &ScalarField) -> f64 {
        f.0.iter().zip(&self.mass).map(|(a, b)| a * b).sum()
    }

    /// L² inner product of two symmetric tensors (frame contraction).
    pub fn l2_sym(&self, a: &SymTensorField, b: &SymTensorField) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let x = a.comps[i];
            let y = b.comps[i];
            s += self.mass[i] * (x[0] * y[0] + 2.0 * x[1] * y[1] + x[2] * y[2]);
        }
        s
    }

    /// Scalar curvature r = 2K.  Conformal metrics use the exact conformal
    /// change of the base curvature, r = e^u (r_base + Δ_base u); general
    /// metrics use PL angle defects.
    pub fn scalar_curvature(&self, mesh: &SurfaceMesh) -> Result<ScalarField> {
        match &self.rep {
            MetricRep::Conformal { base, u } => {
                let r0 = base.scalar_curvature();
                if u.max_abs() == 0.0 {
                    return Ok(ScalarField::constant(self.n, r0));
                }
                let stiff = crate::ops::cotan_stiffness(mesh);
                let ku = stiff.apply(&u.0);
                let mut r = vec![0.0; self.n];
                for i in 0..self.n {
                    // Δ_base u = −K u / mass_base.
                    let lap = -ku[i] / self.mass_base[i];
                    r[i] = u.0[i].exp() * (r0 + lap);
                }
                Ok(ScalarField(r))
            }
            MetricRep::General(_) => Ok(self.angle_defect_curvature(mesh)),
        }
    }

    /// PL scalar curvature from angle defects of metric edge lengths.
    /// Interior vertices only; boundary vertices of a disk chart get 0.
    pub fn angle_defect_curvature(&self, mesh: &SurfaceMesh) -> ScalarField {
        let n = self.n;
        let mut angle_sum = vec![0.0; n];
        for t in 0..mesh.n_triangles() {
            let tri = mesh.triangles[t];
            let l: Vec<f64> = (0..3)
                .map(|k| self.edge_length(mesh, tri[(k + 1) % 3], tri[(k + 2) % 3]))
                .collect();
            for k in 0..3 {
                // Angle at corner k is opposite edge k.
                let (a, b, c) = (l[k], l[(k + 1) % 3], l[(k + 2) % 3]);
                let cosang = ((b * b + c * c - a * a) / (2.0 * b * c)).clamp(-1.0, 1.0);
                angle_sum[mesh.class_of(tri[k])] += cosang.acos();
            }
        }
        let mut r = vec![0.0; n];
        for i in 0..n {
            let full = if mesh.kind == MeshKind::Disk && mesh.is_boundary_class(i) {
                continue;
            } else {
                2.0 * std::f64::consts::PI
            };
            r[i] = 2.0 * (full - angle_sum[i]) / self.mass[i];
        }
        ScalarField(r)
    }
}

/// ∫_T φ_k λ_base dA for the three hat functions of a chart triangle, by
/// recursive 4-way midpoint quadrature; `bary[j]` holds the barycentric
/// coordinates of corner j with respect to the original triangle.
fn base_hat_integrals(
    base: &ConformalBase,
    corners: [C64; 3],
    bary: [[f64; 3]; 3],
    depth: u32,
    out: &mut [f64; 3],
) {
    if depth == 0 {
        let area = 0.5
            * ((corners[1] - corners[0]).re * (corners[2] - corners[0]).im
                - (corners[1] - corners[0]).im * (corners[2] - corners[0]).re);
        let centroid = (corners[0] + corners[1] + corners[2]) / 3.0;
        let lam = base.lambda(centroid);
        for k in 0..3 {
            let phi = (bary[0][k] + bary[1][k] + bary[2][k]) / 3.0;
            out[k] += area * lam * phi;
        }
        return;
    }
    let mid = |a: usize, b: usize| 0.5 * (corners[a] + corners[b]);
    let midb = |a: usize, b: usize| {
        [
            0.5 * (bary[a][0] + bary[b][0]),
            0.5 * (bary[a][1] + bary[b][1]),
            0.5 * (bary[a][2] + bary[b][2]),
        ]
    };
    let (m01, m12, m20) = (mid(0, 1), mid(1, 2), mid(2, 0));
    let (b01, b12, b20) = (midb(0, 1), midb(1, 2), midb(2, 0));
    base_hat_integrals(base, [corners[0], m01, m20], [bary[0], b01, b20], depth - 1, out);
    base_hat_integrals(base, [corners[1], m12, m01], [bary[1], b12, b01], depth - 1, out);
    base_hat_integrals(base, [corners[2], m20, m12], [bary[2], b20, b12], depth - 1, out);
    base_hat_integrals(base, [m01, m12, m20], [b01, b12, b20], depth - 1, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fuchsian_lambda_at_origin_is_24() {
        let mesh = SurfaceMesh::bolza(1);
        let g = MetricField::fuchsian(&mesh).unwrap();
        // Class of the octagon center (domain vertex 0).
        let c = mesh.class_of(0);
        assert_relative_eq!(g.lambda(c), 24.0, epsilon = 1e-12);
    }

    #[test]
    fn fuchsian_curvature_is_exact() {
        let mesh = SurfaceMesh::bolza(2);
        let g = MetricField::fuchsian(&mesh).unwrap();
        let r = g.scalar_curvature(&mesh).unwrap();
        for &v in &r.0 {
            assert_relative_eq!(v, -1.0 / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn constant_scaling_scales_curvature() {
        let mesh = SurfaceMesh::bolza(1);
        let c = 2.5;
        let g = MetricField::conformal(
            &mesh,
            ConformalBase::Hyperbolic { scale: c },
            ScalarField::zeros(mesh.n_vertices()),
        )
        .unwrap();
        let r = g.scalar_curvature(&mesh).unwrap();
        for &v in &r.0 {
            assert_relative_eq!(v, -1.0 / 3.0 / c, epsilon = 1e-13);
        }
    }

    #[test]
    fn bolza_area_approaches_24_pi() {
        // Gauss–Bonnet: area = 2πχ/K = 24π for K = −1/6, χ = −2.
        let exact = 24.0 * std::f64::consts::PI;
        let mut errs = Vec::new();
        for refinement in 1..4 {
            let mesh = SurfaceMesh::bolza(refinement);
            let g = MetricField::fuchsian(&mesh).unwrap();
            errs.push((g.total_area() - exact).abs() / exact);
        }
        // The floor is the chord-versus-geodesic boundary sliver, O(h²).
        assert!(errs[2] < 0.02, "area error {:?}", errs);
        assert!(errs[1] < 0.35 * errs[0] && errs[2] < 0.35 * errs[1], "{errs:?}");
    }

    #[test]
    fn flat_disk_angle_defect_is_zero_inside() {
        let mesh = SurfaceMesh::disk(0.5, 4).unwrap();
        let g = MetricField::flat(&mesh).unwrap();
        let r = g.angle_defect_curvature(&mesh);
        for i in 0..mesh.n_vertices() {
            if !mesh.is_boundary_class(i) {
                assert!(r.0[i].abs() < 1e-10, "interior defect {}", r.0[i]);
            }
        }
    }

    #[test]
    fn integrate_is_linear() {
        let mesh = SurfaceMesh::bolza(1);
        let g = MetricField::fuchsian(&mesh).unwrap();
        let n = mesh.n_vertices();
        let f1 = ScalarField((0..n).map(|i| (i as f64).sin()).collect());
        let f2 = ScalarField((0..n).map(|i| (i as f64 * 0.7).cos()).collect());
        let combo = ScalarField(
            f1.0.iter()
                .zip(&f2.0)
                .map(|(a, b)| 2.0 * a - 3.0 * b)
                .collect(),
        );
        let lhs = g.integrate(&combo);
        let rhs = 2.0 * g.integrate(&f1) - 3.0 * g.integrate(&f2);
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12 * lhs.abs().max(1.0));
    }
}
