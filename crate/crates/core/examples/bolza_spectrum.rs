use germlab::mesh::SurfaceMesh;
use germlab::metric::MetricField;
use germlab::ops::laplacian;

fn main() {
    // Known Bolza eigenvalues (curvature −1): 0, 3.8389(x3), 5.3536(x4), 8.2496(x2)
    // With curvature −1/6 they divide by 6: 0, 0.6398, 0.8923, 1.3749.
    for refinement in [1u32, 2, 3] {
        let mesh = SurfaceMesh::bolza(refinement);
        let g = MetricField::fuchsian(&mesh).unwrap();
        let lap = laplacian(&mesh, &g).unwrap();
        let (vals, _) = lap.sym_eigs().unwrap();
        let n = vals.len();
        let small: Vec<String> = (0..10.min(n))
            .map(|k| format!("{:.4}", -vals[n - 1 - k]))
            .collect();
        println!("ref {}: smallest of -Δ: {:?}", refinement, small);
    }
}
