//! Per-vertex fields in local orthonormal frame components, plus the rank-r
//! frame-tensor container used by the derivative estimators.

use crate::error::{GermLabError, Result};
use crate::geom::C64;
use crate::mesh::SurfaceMesh;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField(pub Vec<f64>);

/// Covector field; components in the local orthonormal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct OneFormField(pub Vec<[f64; 2]>);

/// Symmetric 2-tensor field; frame components [T11, T12, T22].
#[derive(Clone, Debug, PartialEq)]
pub struct SymTensorField {
    pub comps: Vec<[f64; 3]>,
    pub traceless: bool,
}

/// Complex section of E = (T*Σ ⊕ ℝ) ⊗ ℂ: components (η_1, η_2, η_3).
#[derive(Clone, Debug, PartialEq)]
pub struct SectionE(pub Vec<[C64; 3]>);

/// E-valued 1-form: `comps[i][a]` is the E-vector in frame direction a.
#[derive(Clone, Debug, PartialEq)]
pub struct EValuedOneForm(pub Vec<[[C64; 3]; 2]>);

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        ScalarField(vec![0.0; n])
    }
    pub fn constant(n: usize, c: f64) -> Self {
        ScalarField(vec![c; n])
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
    }
}

impl OneFormField {
    pub fn zeros(n: usize) -> Self {
        OneFormField(vec![[0.0; 2]; n])
    }
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .fold(0.0f64, |a, v| a.max(v[0].abs()).max(v[1].abs()))
    }
}

impl SymTensorField {
    pub fn zeros(n: usize) -> Self {
        SymTensorField {
            comps: vec![[0.0; 3]; n],
            traceless: true,
        }
    }
    pub fn len(&self) -> usize {
        self.comps.len()
    }
    pub fn trace(&self, i: usize) -> f64 {
        self.comps[i][0] + self.comps[i][2]
    }
    /// Pointwise squared norm |T|² = T_AB T_AB in an orthonormal frame.
    pub fn norm_sq(&self, i: usize) -> f64 {
        let [a, b, c] = self.comps[i];
        a * a + 2.0 * b * b + c * c
    }
    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .fold(0.0f64, |a, v| a.max(v[0].abs()).max(v[1].abs()).max(v[2].abs()))
    }
    /// Remove the trace pointwise.
    pub fn traceless_part(&self) -> SymTensorField {
        let comps = self
            .comps
            .iter()
            .map(|&[a, b, c]| {
                let t = (a + c) / 2.0;
                [a - t, b, c - t]
            })
            .collect();
        SymTensorField {
            comps,
            traceless: true,
        }
    }
    pub fn scale(&self, s: f64) -> SymTensorField {
        SymTensorField {
            comps: self
                .comps
                .iter()
                .map(|&[a, b, c]| [s * a, s * b, s * c])
                .collect(),
            traceless: self.traceless,
        }
    }
    pub fn add(&self, other: &SymTensorField) -> SymTensorField {
        SymTensorField {
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(x, y)| [x[0] + y[0], x[1] + y[1], x[2] + y[2]])
                .collect(),
            traceless: self.traceless && other.traceless,
        }
    }
}

pub fn check_same_mesh(len: usize, mesh: &SurfaceMesh) -> Result<()> {
    if len != mesh.n_vertices() {
        return Err(GermLabError::MeshMismatch {
            left: len,
            right: mesh.n_vertices(),
        });
    }
    Ok(())
}

/// Dense rank-r tensor field over quotient vertices, 2^r frame components
/// per vertex stored row-major over binary multi-indices.
#[derive(Clone, Debug)]
pub struct FrameTensor {
    pub rank: usize,
    pub n: usize,
    pub data: Vec<f64>,
}

impl FrameTensor {
    pub fn zeros(rank: usize, n: usize) -> Self {
        FrameTensor {
            rank,
            n,
            data: vec![0.0; n << rank],
        }
    }
    pub fn width(&self) -> usize {
        1 << self.rank
    }
    pub fn comps(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }
    pub fn comps_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.width();
        &mut self.data[i * w..(i + 1) * w]
    }
    /// Component by index list, e.g. &[0,1] for T_{12}.
    pub fn get(&self, i: usize, idx: &[usize]) -> f64 {
        self.comps(i)[pack_index(idx)]
    }
    pub fn set(&mut self, i: usize, idx: &[usize], v: f64) {
        let k = pack_index(idx);
        self.comps_mut(i)[k] = v;
    }
}

pub fn pack_index(idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &k| (acc << 1) | (k & 1))
}

/// Rotate rank-r frame components by R(φ) applied to every index:
/// out_{A...} = R_{AB}...  in_{B...}.
pub fn rotate_comps(rank: usize, comps: &[f64], phi: f64, out: &mut [f64]) {
    let (c, s) = (phi.cos(), phi.sin());
    let w = 1 << rank;
    debug_assert_eq!(comps.len(), w);
    let mut cur = comps.to_vec();
    let mut next = vec![0.0; w];
    // Apply the rotation one index at a time.
    for axis in 0..rank {
        let stride = 1 << (rank - 1 - axis);
        for base in 0..w {
            if base & stride != 0 {
                continue;
            }
            let lo = cur[base];
            let hi = cur[base | stride];
            // new_0 = c*old_0 - s*old_1 ; new_1 = s*old_0 + c*old_1
            next[base] = c * lo - s * hi;
            next[base | stride] = s * lo + c * hi;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    out.copy_from_slice(&cur);
}

impl From<&ScalarField> for FrameTensor {
    fn from(f: &ScalarField) -> FrameTensor {
        FrameTensor {
            rank: 0,
            n: f.0.len(),
            data: f.0.clone(),
        }
    }
}

impl From<&OneFormField> for FrameTensor {
    fn from(f: &OneFormField) -> FrameTensor {
        let mut t = FrameTensor::zeros(1, f.0.len());
        for (i, v) in f.0.iter().enumerate() {
            t.comps_mut(i).copy_from_slice(v);
        }
        t
    }
}

impl From<&SymTensorField> for FrameTensor {
    fn from(f: &SymTensorField) -> FrameTensor {
        let mut t = FrameTensor::zeros(2, f.comps.len());
        for (i, &[a, b, c]) in f.comps.iter().enumerate() {
            t.comps_mut(i).copy_from_slice(&[a, b, b, c]);
        }
        t
    }
}

impl FrameTensor {
    pub fn to_one_form(&self) -> OneFormField {
        assert_eq!(self.rank, 1);
        OneFormField((0..self.n).map(|i| [self.comps(i)[0], self.comps(i)[1]]).collect())
    }
    pub fn to_sym(&self, traceless: bool) -> SymTensorField {
        assert_eq!(self.rank, 2);
        SymTensorField {
            comps: (0..self.n)
                .map(|i| {
                    let c = self.comps(i);
                    [c[0], 0.5 * (c[1] + c[2]), c[3]]
                })
                .collect(),
            traceless,
        }
    }
}

/// Deterministic pseudo-random fields, smoothed so they are resolvable on
/// the mesh.  Smoothing averages neighbor values transported into each
/// vertex's frame, so tensor fields stay well-defined on the quotient.
pub struct FieldSampler {
    rng: ChaCha8Rng,
}

impl FieldSampler {
    pub fn new(seed: u64) -> Self {
        FieldSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn scalar(&mut self, mesh: &SurfaceMesh, passes: usize) -> ScalarField {
        let raw = FrameTensor {
            rank: 0,
            n: mesh.n_vertices(),
            data: (0..mesh.n_vertices())
                .map(|_| self.rng.gen_range(-1.0..1.0))
                .collect(),
        };
        ScalarField(smooth(mesh, raw, passes).data)
    }

    pub fn one_form(&mut self, mesh: &SurfaceMesh, passes: usize) -> OneFormField {
        let mut raw = FrameTensor::zeros(1, mesh.n_vertices());
        for x in raw.data.iter_mut() {
            *x = self.rng.gen_range(-1.0..1.0);
        }
        smooth(mesh, raw, passes).to_one_form()
    }

    pub fn sym_traceless(&mut self, mesh: &SurfaceMesh, passes: usize) -> SymTensorField {
        let mut raw = FrameTensor::zeros(2, mesh.n_vertices());
        for i in 0..mesh.n_vertices() {
            let p = self.rng.gen_range(-1.0..1.0);
            let q = self.rng.gen_range(-1.0..1.0);
            raw.comps_mut(i).copy_from_slice(&[p, q, q, -p]);
        }
        smooth(mesh, raw, passes).to_sym(true)
    }
}

fn smooth(mesh: &SurfaceMesh, mut field: FrameTensor, passes: usize) -> FrameTensor {
    let w = field.width();
    for _ in 0..passes {
        let mut next = field.clone();
        for i in 0..mesh.n_vertices() {
            let mut acc = vec![0.0; w];
            let mut count = 0.0f64;
            let mut rot = vec![0.0; w];
            for s in mesh
                .patch(i)
                .samples
                .iter()
                .filter(|s| s.ring == 1)
            {
                rotate_comps(field.rank, field.comps(s.class), s.angle, &mut rot);
                for k in 0..w {
                    acc[k] += rot[k];
                }
                count += 1.0;
            }
            let dst = next.comps_mut(i);
            for k in 0..w {
                dst[k] = 0.5 * field.comps(i)[k] + 0.5 * acc[k] / count.max(1.0);
            }
        }
        field = next;
    }
    field
}
