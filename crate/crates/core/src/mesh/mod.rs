//! UV-mapped triangle meshes: validation, vertex normals and adjacency.

mod adjacency;
mod obj;

pub use adjacency::Adjacency;
pub use obj::{parse_obj, write_obj};

use crate::error::MeshError;
use crate::linalg::{Vec2, Vec3};
use crate::scalar::Real;

/// Faces with area at or below this (model units²) are dropped at validation.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MeshDiagnostics {
    /// Original indices of triangles dropped as degenerate.
    pub dropped_triangles: Vec<usize>,
    /// Vertices without a usable incident face; their normal is the zero vector.
    pub zero_normal_vertices: Vec<usize>,
    /// OBJ directives that were skipped.
    pub ignored_directives: usize,
}

/// Indexed triangle mesh with per-corner UV coordinates.
#[derive(Debug, Clone)]
pub struct Mesh<T> {
    pub positions: Vec<Vec3<T>>,
    pub triangles: Vec<[usize; 3]>,
    pub uv_coords: Vec<Vec2<T>>,
    /// Parallel to `triangles`: uv index of each corner.
    pub triangle_uvs: Vec<[usize; 3]>,
    pub vertex_normals: Vec<Vec3<T>>,
    pub diagnostics: MeshDiagnostics,
}

impl<T: Real> Mesh<T> {
    /// Validates the index data, drops degenerate triangles and derives vertex normals.
    pub fn new(
        positions: Vec<Vec3<T>>,
        triangles: Vec<[usize; 3]>,
        uv_coords: Vec<Vec2<T>>,
        triangle_uvs: Vec<[usize; 3]>,
    ) -> Result<Self, MeshError> {
        if triangles.len() != triangle_uvs.len() {
            return Err(MeshError::UvTriangleCount {
                triangles: triangles.len(),
                triangle_uvs: triangle_uvs.len(),
            });
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite()) {
            return Err(MeshError::NonFinite { what: "position", index: i });
        }
        if let Some(i) = uv_coords.iter().position(|p| !p.is_finite()) {
            return Err(MeshError::NonFinite { what: "uv", index: i });
        }
        for (t, (tri, tuv)) in triangles.iter().zip(&triangle_uvs).enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= positions.len()) {
                return Err(MeshError::PositionIndex { triangle: t, index, count: positions.len() });
            }
            if let Some(&index) = tuv.iter().find(|&&i| i >= uv_coords.len()) {
                return Err(MeshError::UvIndex { triangle: t, index, count: uv_coords.len() });
            }
        }

        let threshold = T::lit(DEGENERATE_AREA);
        let mut kept_tris = Vec::with_capacity(triangles.len());
        let mut kept_uvs = Vec::with_capacity(triangles.len());
        let mut dropped = Vec::new();
        for (t, (tri, tuv)) in triangles.into_iter().zip(triangle_uvs).enumerate() {
            let [a, b, c] = tri.map(|i| positions[i]);
            let area = (b - a).cross(c - a).norm() * T::lit(0.5);
            let repeated = tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2];
            if repeated || !(area > threshold) {
                dropped.push(t);
            } else {
                kept_tris.push(tri);
                kept_uvs.push(tuv);
            }
        }
        if !dropped.is_empty() {
            log::warn!("dropped {} degenerate triangle(s)", dropped.len());
        }
        if kept_tris.is_empty() {
            return Err(MeshError::Empty);
        }

        let mut mesh = Mesh {
            positions,
            triangles: kept_tris,
            uv_coords,
            triangle_uvs: kept_uvs,
            vertex_normals: Vec::new(),
            diagnostics: MeshDiagnostics { dropped_triangles: dropped, ..Default::default() },
        };
        let (normals, zero) = compute_vertex_normals(&mesh);
        if !zero.is_empty() {
            log::warn!("{} vertices have no incident face; normal set to zero", zero.len());
        }
        mesh.vertex_normals = normals;
        mesh.diagnostics.zero_normal_vertices = zero;
        Ok(mesh)
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn face_positions(&self, f: usize) -> [Vec3<T>; 3] {
        self.triangles[f].map(|i| self.positions[i])
    }

    pub fn face_uvs(&self, f: usize) -> [Vec2<T>; 3] {
        self.triangle_uvs[f].map(|i| self.uv_coords[i])
    }

    /// Area-scaled normal `(b - a) × (c - a) / 2`.
    pub fn face_area_normal(&self, f: usize) -> Vec3<T> {
        let [a, b, c] = self.face_positions(f);
        (b - a).cross(c - a) * T::lit(0.5)
    }

    pub fn face_normal(&self, f: usize) -> Vec3<T> {
        self.face_area_normal(f).normalized().unwrap_or_else(Vec3::zero)
    }

    pub fn bounding_box(&self) -> (Vec3<T>, Vec3<T>) {
        let first = self.positions.first().copied().unwrap_or_else(Vec3::zero);
        self.positions
            .iter()
            .fold((first, first), |(lo, hi), &p| (lo.min_elem(p), hi.max_elem(p)))
    }

    pub fn bounding_box_diagonal(&self) -> T {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    pub fn total_area(&self) -> T {
        (0..self.face_count()).map(|f| self.face_area_normal(f).norm()).sum()
    }

    /// Mirrors the texture v axis (`v ← 1 − v`).
    pub fn flip_v(&mut self) {
        for uv in &mut self.uv_coords {
            uv.y = T::one() - uv.y;
        }
    }

    /// Applies `p ← rotation · p · scale + translation` and re-derives normals.
    pub fn transformed(&self, rotation: &crate::linalg::Mat3<T>, scale: T, translation: Vec3<T>) -> Self {
        let positions = self
            .positions
            .iter()
            .map(|&p| rotation.mul_vec(p) * scale + translation)
            .collect();
        Mesh::new(positions, self.triangles.clone(), self.uv_coords.clone(), self.triangle_uvs.clone())
            .expect("rigid transform preserves validity")
    }
}

/// Angle-weighted vertex normals.
///
/// Each vertex sums its incident face normals weighted by the corner angle.
/// Contributions are summed in an order keyed by the sorted vertex triple of
/// each face, so the result does not depend on triangle order. Returns the
/// normals and the vertices left without a normal.
pub fn compute_vertex_normals<T: Real>(mesh: &Mesh<T>) -> (Vec<Vec3<T>>, Vec<usize>) {
    let n = mesh.positions.len();
    let mut contributions: Vec<Vec<([usize; 3], Vec3<T>)>> = vec![Vec::new(); n];
    for (f, tri) in mesh.triangles.iter().enumerate() {
        let Some(normal) = mesh.face_area_normal(f).normalized() else {
            continue;
        };
        let mut key = *tri;
        key.sort_unstable();
        for k in 0..3 {
            let v = tri[k];
            let p = mesh.positions[v];
            let e1 = mesh.positions[tri[(k + 1) % 3]] - p;
            let e2 = mesh.positions[tri[(k + 2) % 3]] - p;
            let angle = e1.cross(e2).norm().atan2(e1.dot(e2));
            contributions[v].push((key, normal * angle));
        }
    }
    let mut zero = Vec::new();
    let normals = contributions
        .into_iter()
        .enumerate()
        .map(|(v, mut list)| {
            list.sort_by_key(|a| a.0);
            let sum = list.iter().fold(Vec3::zero(), |acc, (_, c)| acc + *c);
            match sum.normalized() {
                Some(nrm) if sum.norm() > T::lit(1e-12) => nrm,
                _ => {
                    zero.push(v);
                    Vec3::zero()
                }
            }
        })
        .collect();
    (normals, zero)
}
