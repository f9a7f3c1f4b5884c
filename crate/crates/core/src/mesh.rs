//! Triangulated surfaces: a closed genus-2 mesh built from the regular
//! hyperbolic octagon in the Poincaré disk, and local disk charts.
//!
//! The closed mesh stores a fundamental-domain triangulation together with
//! side pairings.  Identified boundary vertices are merged into quotient
//! "classes"; every domain copy of a class carries the disk isometry that
//! moves the canonical representative to the copy, so tensor data can be
//! transported across the seams by pure frame rotations (all metrics in this
//! crate are conformal in the disk chart).

use crate::error::GermLabError;
use crate::geom::{hyp_distance, hyp_midpoint, project_to_geodesic, Mobius, C64};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    /// Regular-octagon fundamental domain with side word a b a⁻¹ b⁻¹ c d c⁻¹ d⁻¹.
    ClosedGenus2,
    /// Simply-connected chart with boundary markers, no identifications.
    Disk,
}

/// One glued pair of boundary edges.  `map` is the disk isometry with
/// map(pos(partner[k])) = pos(edge[k]) for k = 0, 1; `frame_rotation` is
/// arg map′ at the partner edge's hyperbolic midpoint.
#[derive(Debug, Clone)]
pub struct EdgePairing {
    pub edge: [usize; 2],
    pub partner: [usize; 2],
    pub map: Mobius,
    pub frame_rotation: f64,
}

/// Neighbor sample in the canonical chart of a quotient vertex: the source
/// class, the chart displacement from the center, and the rotation that
/// carries the source vertex's frame components into this chart.
#[derive(Debug, Clone, Copy)]
pub struct PatchSample {
    pub class: usize,
    pub dz: [f64; 2],
    pub angle: f64,
    /// Graph distance from the patch center (1 or 2).
    pub ring: u8,
}

#[derive(Debug, Clone)]
pub struct VertexPatch {
    pub samples: Vec<PatchSample>,
}

#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub kind: MeshKind,
    /// Chart positions of the domain vertices (inside the unit disk).
    pub positions: Vec<[f64; 2]>,
    /// Positively oriented triangles over domain vertex indices.
    pub triangles: Vec<[usize; 3]>,
    pub identifications: Vec<EdgePairing>,
    /// Domain-vertex boundary markers (nonempty only for disk charts).
    pub boundary: Vec<bool>,
    pub refinement_level: u32,
    /// Domain vertex -> quotient class.
    class_of: Vec<usize>,
    /// Quotient class -> canonical domain vertex.
    class_rep: Vec<usize>,
    /// Domain vertex v -> isometry taking pos(rep(class(v))) to pos(v).
    to_domain: Vec<Mobius>,
    patches: Vec<VertexPatch>,
}

fn pos_c(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

fn quant(z: C64) -> (i64, i64) {
    ((z.re * 1e9).round() as i64, (z.im * 1e9).round() as i64)
}

impl SurfaceMesh {
    pub fn n_domain_vertices(&self) -> usize {
        self.positions.len()
    }

    /// Number of quotient vertices (degrees of freedom for fields).
    pub fn n_vertices(&self) -> usize {
        self.class_rep.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn class_of(&self, domain_vertex: usize) -> usize {
        self.class_of[domain_vertex]
    }

    pub fn rep_of(&self, class: usize) -> usize {
        self.class_rep[class]
    }

    /// Chart position of a quotient vertex's canonical representative.
    pub fn vertex_position(&self, class: usize) -> C64 {
        pos_c(self.positions[self.class_rep[class]])
    }

    pub fn domain_position(&self, v: usize) -> C64 {
        pos_c(self.positions[v])
    }

    /// Isometry taking the canonical chart position of class(v) to pos(v).
    pub fn to_domain_map(&self, v: usize) -> &Mobius {
        &self.to_domain[v]
    }

    /// Frame rotation from the canonical frame of class(v) to the chart
    /// frame at the domain copy v.
    pub fn domain_frame_angle(&self, v: usize) -> f64 {
        let rep = self.class_rep[self.class_of[v]];
        self.to_domain[v]
            .derivative(pos_c(self.positions[rep]))
            .arg()
    }

    pub fn patch(&self, class: usize) -> &VertexPatch {
        &self.patches[class]
    }

    /// True if the quotient vertex lies on a disk-chart boundary.
    pub fn is_boundary_class(&self, class: usize) -> bool {
        self.boundary[self.class_rep[class]]
    }

    /// Quotient edge count (paired boundary edges counted once).
    pub fn n_edges(&self) -> usize {
        let mut edges = BTreeSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        edges.len() - self.identifications.len()
    }

    /// Euler characteristic V − E + F of the quotient complex.
    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_triangles() as i64
    }

    /// Doubled Euclidean chart area of a triangle (positive by construction).
    pub fn tri_area2(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.positions[a], self.positions[b], self.positions[c]);
        (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])
    }

    /// Longest edge in the hyperbolic metric of curvature −1/6.
    pub fn max_edge_length(&self) -> f64 {
        let scale = 6f64.sqrt();
        let mut h = 0.0f64;
        for t in &self.triangles {
            for k in 0..3 {
                let d = hyp_distance(
                    pos_c(self.positions[t[k]]),
                    pos_c(self.positions[t[(k + 1) % 3]]),
                );
                h = h.max(scale * d);
            }
        }
        h
    }

    /// Transform for a path "jump" between two identified domain copies:
    /// the isometry taking pos(u) to pos(v).  None if not identified.
    pub fn jump_map(&self, u: usize, v: usize) -> Option<Mobius> {
        if u == v || self.class_of[u] != self.class_of[v] {
            return None;
        }
        Some(self.to_domain[v].compose(&self.to_domain[u].inverse()))
    }

    fn assert_positive_orientation(&self) {
        for t in 0..self.triangles.len() {
            assert!(
                self.tri_area2(t) > 0.0,
                "triangle {} is not positively oriented",
                t
            );
        }
    }

    /// Closed genus-2 mesh: regular hyperbolic octagon, fan-triangulated and
    /// midpoint-refined `refinement` times.
    pub fn bolza(refinement: u32) -> SurfaceMesh {
        // Vertices of the regular octagon with interior angle π/4 sit at
        // Euclidean radius 2^(-1/4) in the disk.
        let r = 2f64.powf(-0.25);
        let mut positions = vec![[0.0, 0.0]];
        for k in 0..8 {
            let th = std::f64::consts::PI / 4.0 * k as f64;
            positions.push([r * th.cos(), r * th.sin()]);
        }
        let corner = |k: usize| 1 + (k % 8);
        let triangles: Vec<[usize; 3]> = (0..8).map(|k| [0, corner(k), corner(k + 1)]).collect();

        // Side word a b a⁻¹ b⁻¹ c d c⁻¹ d⁻¹ read counterclockwise:
        // side k runs from corner k to corner k+1.
        let side_pairs: [(usize, usize); 4] = [(0, 2), (1, 3), (4, 6), (5, 7)];
        let mut identifications = Vec::new();
        for &(s, sp) in &side_pairs {
            // Side s is the forward letter, side sp the inverse letter; the
            // gluing reverses direction: start of sp ~ end of s.
            let edge = [corner(s), corner(s + 1)];
            let partner = [corner(sp + 1), corner(sp)];
            let map = Mobius::from_two_points(
                pos_c(positions[partner[0]]),
                pos_c(positions[partner[1]]),
                pos_c(positions[edge[0]]),
                pos_c(positions[edge[1]]),
            );
            identifications.push(EdgePairing {
                edge,
                partner,
                map,
                frame_rotation: 0.0,
            });
        }

        let boundary = vec![false; positions.len()];
        let mut mesh = SurfaceMesh::assemble(
            MeshKind::ClosedGenus2,
            positions,
            triangles,
            identifications,
            boundary,
            0,
        );
        for _ in 0..refinement {
            mesh = mesh.refined().smoothed(6);
        }
        mesh
    }

    /// Disk chart of the given Euclidean radius with `resolution` concentric
    /// rings; ring k carries 6k vertices.
    pub fn disk(radius: f64, resolution: u32) -> Result<SurfaceMesh, GermLabError> {
        if !(radius > 0.0 && radius < 1.0) {
            return Err(GermLabError::InvalidArgument(format!(
                "disk radius must lie in (0,1), got {radius}"
            )));
        }
        if resolution < 1 {
            return Err(GermLabError::InvalidArgument(
                "disk resolution must be at least 1".into(),
            ));
        }
        let n = resolution as usize;
        let mut positions = vec![[0.0, 0.0]];
        let mut rings: Vec<Vec<usize>> = vec![vec![0]];
        for k in 1..=n {
            let m = 6 * k;
            let rk = radius * k as f64 / n as f64;
            let mut ring = Vec::with_capacity(m);
            for j in 0..m {
                let th = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
                ring.push(positions.len());
                positions.push([rk * th.cos(), rk * th.sin()]);
            }
            rings.push(ring);
        }
        let mut triangles = Vec::new();
        let angle = |positions: &Vec<[f64; 2]>, v: usize| -> f64 {
            let p = positions[v];
            p[1].atan2(p[0]).rem_euclid(2.0 * std::f64::consts::PI)
        };
        // Innermost fan.
        let r1 = &rings[1];
        for j in 0..r1.len() {
            triangles.push([0, r1[j], r1[(j + 1) % r1.len()]]);
        }
        // Stitch band k-1 -> k by walking both rings in angle order.
        for k in 2..=n {
            let inner = &rings[k - 1];
            let outer = &rings[k];
            let (a, b) = (inner.len(), outer.len());
            let (mut i, mut j) = (0usize, 0usize);
            while i < a || j < b {
                let adv_outer = if j >= b {
                    false
                } else if i >= a {
                    true
                } else {
                    // Advance the ring whose next vertex trails in angle.
                    let na = if i + 1 <= a {
                        angle(&positions, inner[(i + 1) % a]).max(
                            if i + 1 == a { 2.0 * std::f64::consts::PI } else { 0.0 },
                        )
                    } else {
                        f64::INFINITY
                    };
                    let nb = if j + 1 <= b {
                        angle(&positions, outer[(j + 1) % b]).max(
                            if j + 1 == b { 2.0 * std::f64::consts::PI } else { 0.0 },
                        )
                    } else {
                        f64::INFINITY
                    };
                    nb <= na
                };
                if adv_outer {
                    triangles.push([outer[j % b], outer[(j + 1) % b], inner[i % a]]);
                    j += 1;
                } else {
                    triangles.push([inner[i % a], outer[j % b], inner[(i + 1) % a]]);
                    i += 1;
                }
            }
        }
        let mut boundary = vec![false; positions.len()];
        for &v in &rings[n] {
            boundary[v] = true;
        }
        // Fix any stitching orientation slips.
        for t in triangles.iter_mut() {
            let (pa, pb, pc) = (positions[t[0]], positions[t[1]], positions[t[2]]);
            let area2 = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]);
            if area2 < 0.0 {
                t.swap(1, 2);
            }
        }
        Ok(SurfaceMesh::assemble(
            MeshKind::Disk,
            positions,
            triangles,
            Vec::new(),
            boundary,
            resolution,
        ))
    }

    fn assemble(
        kind: MeshKind,
        positions: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        mut identifications: Vec<EdgePairing>,
        boundary: Vec<bool>,
        refinement_level: u32,
    ) -> SurfaceMesh {
        let n = positions.len();
        // Union-find over domain vertices carrying chart transforms:
        // link[v] = (parent, map taking pos(parent) to pos(v)).
        let mut parent: Vec<usize> = (0..n).collect();
        let mut to_child: Vec<Mobius> = vec![Mobius::identity(); n];
        fn find(parent: &mut Vec<usize>, to_child: &mut Vec<Mobius>, v: usize) -> (usize, Mobius) {
            if parent[v] == v {
                return (v, to_child[v]);
            }
            let (root, mp) = find(parent, to_child, parent[v]);
            let combined = to_child[v].compose(&mp);
            parent[v] = root;
            to_child[v] = combined;
            (root, combined)
        }
        for pairing in &identifications {
            for k in 0..2 {
                let u = pairing.edge[k];
                let v = pairing.partner[k];
                // pairing.map moves pos(v) to pos(u).
                let (ru, tu) = find(&mut parent, &mut to_child, u);
                let (rv, tv) = find(&mut parent, &mut to_child, v);
                if ru != rv {
                    // pos(rv) = tv^{-1}(map^{-1}(tu(pos(ru))))
                    parent[rv] = ru;
                    to_child[rv] = tv
                        .inverse()
                        .compose(&pairing.map.inverse())
                        .compose(&tu);
                }
            }
        }
        // Canonical representative: smallest domain index in each orbit.
        let mut smallest: BTreeMap<usize, usize> = BTreeMap::new();
        for v in 0..n {
            let (root, _) = find(&mut parent, &mut to_child, v);
            let e = smallest.entry(root).or_insert(v);
            if v < *e {
                *e = v;
            }
        }
        let mut class_rep: Vec<usize> = smallest.values().copied().collect();
        class_rep.sort_unstable();
        let class_index: BTreeMap<usize, usize> =
            class_rep.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let mut class_of = vec![0usize; n];
        let mut to_domain = vec![Mobius::identity(); n];
        for v in 0..n {
            let (root, tv) = find(&mut parent, &mut to_child, v);
            let rep = smallest[&root];
            class_of[v] = class_index[&rep];
            // tv maps pos(root) -> pos(v); rebase to the canonical rep.
            let (_, trep) = find(&mut parent, &mut to_child, rep);
            to_domain[v] = tv.compose(&trep.inverse());
            debug_assert!(
                (to_domain[v].apply(pos_c(positions[rep])) - pos_c(positions[v])).norm() < 1e-9,
                "quotient transform mismatch at domain vertex {v}"
            );
        }
        // Record the frame rotation of each pairing at its edge midpoint.
        for pairing in identifications.iter_mut() {
            let mid = hyp_midpoint(
                pos_c(positions[pairing.partner[0]]),
                pos_c(positions[pairing.partner[1]]),
            );
            pairing.frame_rotation = pairing.map.derivative(mid).arg();
        }

        let mut mesh = SurfaceMesh {
            kind,
            positions,
            triangles,
            identifications,
            boundary,
            refinement_level,
            class_of,
            class_rep,
            to_domain,
            patches: Vec::new(),
        };
        mesh.assert_positive_orientation();
        mesh.build_patches();
        mesh
    }

    /// One 4-to-1 midpoint subdivision (hyperbolic midpoints, so paired
    /// boundary edges subdivide consistently under the gluing isometries).
    pub fn refined(&self) -> SurfaceMesh {
        let mut positions = self.positions.clone();
        let mut midpoint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut boundary = self.boundary.clone();
        let mut get_mid = |u: usize, v: usize, positions: &mut Vec<[f64; 2]>,
                           boundary: &mut Vec<bool>|
         -> usize {
            let key = (u.min(v), u.max(v));
            if let Some(&m) = midpoint.get(&key) {
                return m;
            }
            let m = hyp_midpoint(pos_c(positions[u]), pos_c(positions[v]));
            let idx = positions.len();
            positions.push([m.re, m.im]);
            boundary.push(boundary[u] && boundary[v]);
            midpoint.insert(key, idx);
            idx
        };
        let mut triangles = Vec::with_capacity(self.triangles.len() * 4);
        for t in &self.triangles {
            let [a, b, c] = *t;
            let mab = get_mid(a, b, &mut positions, &mut boundary);
            let mbc = get_mid(b, c, &mut positions, &mut boundary);
            let mca = get_mid(c, a, &mut positions, &mut boundary);
            triangles.push([a, mab, mca]);
            triangles.push([b, mbc, mab]);
            triangles.push([c, mca, mbc]);
            triangles.push([mab, mbc, mca]);
        }
        let mut identifications = Vec::with_capacity(self.identifications.len() * 2);
        for p in &self.identifications {
            let me = *midpoint
                .get(&(p.edge[0].min(p.edge[1]), p.edge[0].max(p.edge[1])))
                .expect("paired edge not subdivided");
            let mp = *midpoint
                .get(&(
                    p.partner[0].min(p.partner[1]),
                    p.partner[0].max(p.partner[1]),
                ))
                .expect("paired partner edge not subdivided");
            debug_assert!(
                (p.map.apply(pos_c(positions[mp])) - pos_c(positions[me])).norm() < 1e-9,
                "side pairing does not respect hyperbolic midpoints"
            );
            identifications.push(EdgePairing {
                edge: [p.edge[0], me],
                partner: [p.partner[0], mp],
                map: p.map,
                frame_rotation: 0.0,
            });
            identifications.push(EdgePairing {
                edge: [me, p.edge[1]],
                partner: [mp, p.partner[1]],
                map: p.map,
                frame_rotation: 0.0,
            });
        }
        SurfaceMesh::assemble(
            self.kind,
            positions,
            triangles,
            identifications,
            boundary,
            self.refinement_level + 1,
        )
    }

    /// Laplacian smoothing in the hyperbolic metric.  Interior vertices move
    /// toward the patch centroid; boundary vertices slide along their
    /// geodesic side; octagon corners stay fixed.  Identified copies follow
    /// their canonical representative through the pairing isometries, so the
    /// side pairings remain exact.
    pub fn smoothed(&self, iterations: usize) -> SurfaceMesh {
        let mut positions = self.positions.clone();
        // Classify quotient classes: movable interior, side-sliding, fixed.
        let n_classes = self.class_rep.len();
        let mut copies: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
        for v in 0..positions.len() {
            copies[self.class_of[v]].push(v);
        }
        // Geodesic side through each boundary vertex (for sliding).
        let mut side_of: Vec<Option<(C64, C64)>> = vec![None; n_classes];
        let mut fixed: Vec<bool> = vec![false; n_classes];
        for c in 0..n_classes {
            if copies[c].len() > 2 {
                fixed[c] = true; // octagon corner class
            }
        }
        for p in &self.identifications {
            for &v in p.edge.iter().chain(p.partner.iter()) {
                let c = self.class_of[v];
                if fixed[c] {
                    continue;
                }
                if v == self.class_rep[c] {
                    side_of[c] = Some((
                        pos_c(self.positions[p.edge[0]]),
                        pos_c(self.positions[p.edge[1]]),
                    ));
                    if !p.edge.contains(&v) {
                        side_of[c] = Some((
                            pos_c(self.positions[p.partner[0]]),
                            pos_c(self.positions[p.partner[1]]),
                        ));
                    }
                }
            }
        }
        for c in 0..n_classes {
            if self.boundary[self.class_rep[c]] {
                fixed[c] = true; // disk-chart boundary stays put
            }
        }

        let mut mesh = self.clone();
        for _ in 0..iterations {
            let mut new_canon: Vec<C64> = (0..n_classes)
                .map(|c| pos_c(positions[self.class_rep[c]]))
                .collect();
            for c in 0..n_classes {
                if fixed[c] {
                    continue;
                }
                let z0 = pos_c(positions[self.class_rep[c]]);
                // Tangent-space average of ring-1 neighbors (log map at z0).
                let center = Mobius::center_at(z0);
                let mut acc = C64::new(0.0, 0.0);
                let mut count = 0.0;
                for s in mesh.patches[c].samples.iter().filter(|s| s.ring == 1) {
                    let zeta = z0 + C64::new(s.dz[0], s.dz[1]);
                    let w = center.apply(zeta);
                    let r = w.norm();
                    if r > 1e-14 {
                        acc += w / r * 2.0 * r.atanh();
                    }
                    count += 1.0;
                }
                if count == 0.0 {
                    continue;
                }
                let step = acc / count * 0.5;
                let d = step.norm();
                let target = center
                    .inverse()
                    .apply(if d > 1e-14 { step / d * (d / 2.0).tanh() } else { step });
                new_canon[c] = match side_of[c] {
                    None => target,
                    Some((a, b)) => project_to_geodesic(target, a, b),
                };
            }
            // Propagate to all domain copies and check orientation.
            let mut trial = positions.clone();
            for c in 0..n_classes {
                for &v in &copies[c] {
                    let img = self.to_domain[v].apply(new_canon[c]);
                    trial[v] = [img.re, img.im];
                }
            }
            let ok = self.triangles.iter().all(|t| {
                let (pa, pb, pc) = (trial[t[0]], trial[t[1]], trial[t[2]]);
                (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0]) > 0.0
            });
            if !ok {
                break;
            }
            positions = trial;
            mesh = SurfaceMesh::assemble(
                self.kind,
                positions.clone(),
                self.triangles.clone(),
                self.identifications.clone(),
                self.boundary.clone(),
                self.refinement_level,
            );
        }
        mesh
    }

    /// Two-ring neighbor patches in each quotient vertex's canonical chart.
    fn build_patches(&mut self) {
        // Domain-edge -> triangles, and pairing lookup in both directions.
        let mut edge_tris: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edge_tris.entry((a.min(b), a.max(b))).or_default().push(ti);
            }
        }
        // sorted edge -> (sorted partner edge, map taking partner positions here)
        let mut pair_lookup: BTreeMap<(usize, usize), ((usize, usize), Mobius)> = BTreeMap::new();
        for p in &self.identifications {
            let e = (p.edge[0].min(p.edge[1]), p.edge[0].max(p.edge[1]));
            let q = (
                p.partner[0].min(p.partner[1]),
                p.partner[0].max(p.partner[1]),
            );
            pair_lookup.insert(e, (q, p.map));
            pair_lookup.insert(q, (e, p.map.inverse()));
        }

        let mut patches = Vec::with_capacity(self.class_rep.len());
        for class in 0..self.class_rep.len() {
            let rep = self.class_rep[class];
            let z0 = pos_c(self.positions[rep]);
            // Seed with the triangles around every domain copy of the class,
            // pulled back into the canonical chart.
            let mut queue: VecDeque<(usize, Mobius, u8)> = VecDeque::new();
            let mut visited: BTreeSet<(usize, [i64; 4])> = BTreeSet::new();
            for (ti, t) in self.triangles.iter().enumerate() {
                for k in 0..3 {
                    if self.class_of[t[k]] == class {
                        let pull = self.to_domain[t[k]].inverse();
                        if visited.insert((ti, pull.key())) {
                            queue.push_back((ti, pull, 0));
                        }
                    }
                }
            }
            let mut samples: BTreeMap<(usize, (i64, i64)), PatchSample> = BTreeMap::new();
            while let Some((ti, pull, depth)) = queue.pop_front() {
                let t = self.triangles[ti];
                for k in 0..3 {
                    let v = t[k];
                    let zeta = pull.apply(pos_c(self.positions[v]));
                    let dz = zeta - z0;
                    if dz.norm() < 1e-12 {
                        continue; // the patch center itself
                    }
                    // Rotation from v's canonical frame into this chart.
                    let chain = pull.compose(&self.to_domain[v]);
                    let vrep = pos_c(self.positions[self.class_rep[self.class_of[v]]]);
                    let angle = chain.derivative(vrep).arg();
                    let ring = depth + 1;
                    let key = (self.class_of[v], quant(zeta));
                    samples
                        .entry(key)
                        .and_modify(|s| s.ring = s.ring.min(ring))
                        .or_insert(PatchSample {
                            class: self.class_of[v],
                            dz: [dz.re, dz.im],
                            angle,
                            ring,
                        });
                }
                if depth >= 1 {
                    continue;
                }
                // Expand across the three edges.
                for k in 0..3 {
                    let (a, b) = (t[k], t[(k + 1) % 3]);
                    let key = (a.min(b), a.max(b));
                    for &tn in &edge_tris[&key] {
                        if tn != ti && visited.insert((tn, pull.key())) {
                            queue.push_back((tn, pull, depth + 1));
                        }
                    }
                    if let Some((pkey, map_here)) = pair_lookup.get(&key) {
                        let pull2 = pull.compose(map_here);
                        for &tn in &edge_tris[pkey] {
                            if visited.insert((tn, pull2.key())) {
                                queue.push_back((tn, pull2, depth + 1));
                            }
                        }
                    }
                }
            }
            patches.push(VertexPatch {
                samples: samples.into_values().collect(),
            });
        }
        self.patches = patches;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bolza_base_counts() {
        // Desk count at refinement 0: the glued fan has V=2, E=12, F=8.
        let mesh = SurfaceMesh::bolza(0);
        assert_eq!(mesh.n_vertices(), 2);
        assert_eq!(mesh.n_edges(), 12);
        assert_eq!(mesh.n_triangles(), 8);
        assert_eq!(mesh.euler_characteristic(), -2);
    }

    #[test]
    fn bolza_chi_preserved_under_refinement() {
        for r in 0..3 {
            let mesh = SurfaceMesh::bolza(r);
            assert_eq!(mesh.euler_characteristic(), -2, "refinement {r}");
        }
    }

    #[test]
    fn bolza_pairings_are_involutions() {
        let mesh = SurfaceMesh::bolza(2);
        // Every boundary edge appears in exactly one pairing, on one side.
        let mut seen = BTreeSet::new();
        for p in &mesh.identifications {
            let e = (p.edge[0].min(p.edge[1]), p.edge[0].max(p.edge[1]));
            let q = (
                p.partner[0].min(p.partner[1]),
                p.partner[0].max(p.partner[1]),
            );
            assert!(seen.insert(e), "edge paired twice");
            assert!(seen.insert(q), "partner edge paired twice");
            assert_ne!(e, q);
            // Map really carries partner endpoints onto edge endpoints.
            for k in 0..2 {
                let img = p.map.apply(mesh.domain_position(p.partner[k]));
                assert!((img - mesh.domain_position(p.edge[k])).norm() < 1e-12);
            }
        }
        // All boundary edges of the domain are covered.
        let mut edge_count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for t in &mesh.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        let boundary_edges: Vec<_> = edge_count
            .iter()
            .filter(|(_, &c)| c == 1)
            .map(|(&e, _)| e)
            .collect();
        assert_eq!(boundary_edges.len(), seen.len());
        for e in boundary_edges {
            assert!(seen.contains(&e));
        }
    }

    #[test]
    fn bolza_corner_class_is_single_vertex() {
        let mesh = SurfaceMesh::bolza(0);
        // All eight octagon corners glue to one point.
        let classes: BTreeSet<usize> = (1..9).map(|v| mesh.class_of(v)).collect();
        assert_eq!(classes.len(), 1);
    }

    #[test]
    fn jump_round_trip_is_identity() {
        let mesh = SurfaceMesh::bolza(1);
        for p in &mesh.identifications {
            for k in 0..2 {
                let u = p.partner[k];
                let v = p.edge[k];
                if u == v {
                    continue;
                }
                let fwd = mesh.jump_map(u, v).expect("identified");
                let back = mesh.jump_map(v, u).expect("identified");
                let z = mesh.domain_position(u);
                let round = back.apply(fwd.apply(z));
                assert!((round - z).norm() < 1e-12);
                assert!((fwd.apply(z) - mesh.domain_position(v)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn disk_counts_and_radius() {
        let mesh = SurfaceMesh::disk(0.5, 4).unwrap();
        assert_eq!(mesh.euler_characteristic(), 1);
        let mesh9 = SurfaceMesh::disk(0.9, 3).unwrap();
        for p in &mesh9.positions {
            assert!((p[0] * p[0] + p[1] * p[1]).sqrt() <= 0.9 + 1e-12);
        }
        assert!(SurfaceMesh::disk(1.2, 3).is_err());
        assert!(SurfaceMesh::disk(0.5, 0).is_err());
    }

    #[test]
    fn disk_edges_halve_when_resolution_doubles() {
        let coarse = SurfaceMesh::disk(0.5, 4).unwrap();
        let fine = SurfaceMesh::disk(0.5, 8).unwrap();
        let ratio = coarse.max_edge_length() / fine.max_edge_length();
        assert!((ratio - 2.0).abs() < 0.35, "ratio {ratio}");
    }

    #[test]
    fn patches_have_enough_samples_for_quadratic_fits() {
        let mesh = SurfaceMesh::bolza(2);
        for c in 0..mesh.n_vertices() {
            assert!(
                mesh.patch(c).samples.len() >= 9,
                "class {c} has only {} samples",
                mesh.patch(c).samples.len()
            );
        }
    }

    #[test]
    fn refinement_quarters_triangles() {
        let m1 = SurfaceMesh::bolza(1);
        let m2 = SurfaceMesh::bolza(2);
        assert_eq!(m2.n_triangles(), 4 * m1.n_triangles());
    }
}
