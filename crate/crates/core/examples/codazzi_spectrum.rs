use germlab::field::FieldSampler;
use germlab::germ::{codazzi_kernel, codazzi_residual, project_codazzi};
use germlab::mesh::SurfaceMesh;
use germlab::metric::MetricField;

fn main() {
    for refinement in [1u32, 2, 3] {
        let mesh = SurfaceMesh::bolza(refinement);
        let g = MetricField::fuchsian(&mesh).unwrap();
        let kernel = codazzi_kernel(&mesh, &g, 6).unwrap();
        let sv = &kernel.all_sigmas;
        let head: Vec<String> = sv.iter().take(8).map(|s| format!("{:.3e}", s)).collect();
        // Pointwise frame-residual of each basis element (jet route).
        let mut worst_rel = 0.0f64;
        for b in &kernel.basis {
            let w = codazzi_residual(&mesh, &g, b).unwrap();
            let rel = w.max_abs() / b.max_abs();
            worst_rel = worst_rel.max(rel);
        }
        // And of a projected random field scaled to amp 0.316 (|m|^2 max ~ 0.1)
        let mut sampler = FieldSampler::new(7);
        let raw = sampler.sym_traceless(&mesh, 2);
        let proj = project_codazzi(&mesh, &g, &raw, &kernel);
        let amp = (0..proj.len()).fold(0.0f64, |a, i| a.max(proj.norm_sq(i))).sqrt();
        let scaled = proj.scale(0.316 / amp);
        let w = codazzi_residual(&mesh, &g, &scaled).unwrap();
        println!(
            "ref {} V={}: sv {:?} | basis jet-resid rel {:.3e} | amp-0.316 resid {:.3e}",
            refinement, mesh.n_vertices(), head, worst_rel, w.max_abs()
        );
    }
}
