//! Mirror-symmetry analysis: PCA plane, reflection, closest-point queries and
//! uv mirror pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::linalg::{symmetric_eigen3, Mat3, Vec2, Vec3};
use crate::mesh::{Adjacency, Mesh};
use crate::scalar::Real;

/// Eigenvalue ratio `λ1/λ2` above which the plane is reported as ambiguous.
pub const AMBIGUOUS_RATIO: f64 = 0.99;
/// Default pair residual limit as a fraction of the bounding-box diagonal.
pub const DEFAULT_RESIDUAL_FRACTION: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryPlane<T> {
    pub centroid: Vec3<T>,
    pub normal: Vec3<T>,
    /// Ascending covariance eigenvalues.
    pub eigenvalues: [T; 3],
    /// The two smallest eigenvalues are nearly equal, so the normal is poorly determined.
    pub ambiguous: bool,
}

impl<T: Real> SymmetryPlane<T> {
    pub fn new(centroid: Vec3<T>, normal: Vec3<T>) -> Option<Self> {
        Some(SymmetryPlane { centroid, normal: normal.normalized()?, eigenvalues: [T::zero(); 3], ambiguous: false })
    }

    pub fn signed_distance(&self, p: Vec3<T>) -> T {
        (p - self.centroid).dot(self.normal)
    }
}

/// Fits the symmetry plane as the direction of least variance of the vertex positions.
pub fn estimate_symmetry_plane<T: Real>(mesh: &Mesh<T>) -> Result<SymmetryPlane<T>, GeometryError> {
    let pts = &mesh.positions;
    if pts.len() < 4 {
        return Err(GeometryError::InvalidInput(format!(
            "symmetry plane needs at least 4 vertices, got {}",
            pts.len()
        )));
    }
    let n = T::from_usize_lossy(pts.len());
    let centroid = pts.iter().fold(Vec3::zero(), |acc, &p| acc + p) / n;
    let mut cov = Mat3::<T>::zero();
    for &p in pts {
        let d = (p - centroid).to_array();
        for i in 0..3 {
            for j in 0..3 {
                cov.m[i][j] += d[i] * d[j];
            }
        }
    }
    for row in cov.m.iter_mut() {
        for x in row.iter_mut() {
            *x /= n;
        }
    }
    let (eigenvalues, vecs) = symmetric_eigen3(&cov);
    let mut normal = vecs[0]
        .normalized()
        .ok_or_else(|| GeometryError::InvalidInput("degenerate covariance".into()))?;
    let a = normal.to_array();
    let big = (0..3).fold(0, |best, i| if a[i].abs() > a[best].abs() { i } else { best });
    if a[big] < T::zero() {
        normal = -normal;
    }
    let ambiguous = !(eigenvalues[1] > T::zero()) || eigenvalues[0] / eigenvalues[1] > T::lit(AMBIGUOUS_RATIO);
    if ambiguous {
        log::warn!(
            "symmetry plane is ambiguous: eigenvalues {:?}",
            eigenvalues.map(|e| e.to_f64_lossy())
        );
    }
    Ok(SymmetryPlane { centroid, normal, eigenvalues, ambiguous })
}

/// `p − 2((p − c)·n) n`.
pub fn reflect_point<T: Real>(p: Vec3<T>, plane: &SymmetryPlane<T>) -> Vec3<T> {
    p - plane.normal * (T::lit(2.0) * plane.signed_distance(p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint<T> {
    pub face: usize,
    pub bary: [T; 3],
    pub point: Vec3<T>,
    pub distance: T,
    /// Squared distance as computed (the exact comparison key).
    pub distance_sq: T,
}

/// Closest point on triangle `abc` to `p` with its barycentric coordinates.
pub fn closest_point_on_triangle<T: Real>(p: Vec3<T>, a: Vec3<T>, b: Vec3<T>, c: Vec3<T>) -> (Vec3<T>, [T; 3]) {
    let zero = T::zero();
    let one = T::one();
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= zero && d2 <= zero {
        return (a, [one, zero, zero]);
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= zero && d4 <= d3 {
        return (b, [zero, one, zero]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= zero && d1 >= zero && d3 <= zero {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [one - v, v, zero]);
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= zero && d5 <= d6 {
        return (c, [zero, zero, one]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= zero && d2 >= zero && d6 <= zero {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [one - w, zero, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= zero && (d4 - d3) >= zero && (d5 - d6) >= zero {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [zero, one - w, w]);
    }
    let denom = one / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [one - v - w, v, w])
}

fn face_query<T: Real>(mesh: &Mesh<T>, f: usize, p: Vec3<T>) -> ClosestPoint<T> {
    let [a, b, c] = mesh.face_positions(f);
    let (point, bary) = closest_point_on_triangle(p, a, b, c);
    let distance_sq = (point - p).norm_squared();
    ClosestPoint { face: f, bary, point, distance: distance_sq.sqrt(), distance_sq }
}

fn better<T: Real>(cand: &ClosestPoint<T>, best: &Option<ClosestPoint<T>>) -> bool {
    match best {
        None => true,
        Some(b) => cand.distance_sq < b.distance_sq || (cand.distance_sq == b.distance_sq && cand.face < b.face),
    }
}

/// Scans every triangle. Ties go to the lowest face index.
pub fn closest_point_brute_force<T: Real>(mesh: &Mesh<T>, p: Vec3<T>) -> Option<ClosestPoint<T>> {
    let mut best = None;
    for f in 0..mesh.face_count() {
        let c = face_query(mesh, f, p);
        if better(&c, &best) {
            best = Some(c);
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
struct Aabb<T> {
    lo: Vec3<T>,
    hi: Vec3<T>,
}

impl<T: Real> Aabb<T> {
    fn distance_sq(&self, p: Vec3<T>) -> T {
        let d = |x: T, lo: T, hi: T| {
            if x < lo {
                lo - x
            } else if x > hi {
                x - hi
            } else {
                T::zero()
            }
        };
        let dx = d(p.x, self.lo.x, self.hi.x);
        let dy = d(p.y, self.lo.y, self.hi.y);
        let dz = d(p.z, self.lo.z, self.hi.z);
        dx * dx + dy * dy + dz * dz
    }
}

#[derive(Debug, Clone)]
enum Node<T> {
    Leaf { bounds: Aabb<T>, start: usize, end: usize },
    Inner { bounds: Aabb<T>, left: usize, right: usize },
}

impl<T: Real> Node<T> {
    fn bounds(&self) -> &Aabb<T> {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

const LEAF_SIZE: usize = 4;

/// Axis-aligned bounding-volume tree over a mesh's triangles.
///
/// Queries return exactly what [`closest_point_brute_force`] returns,
/// including the lowest-index tie-break.
#[derive(Debug, Clone)]
pub struct MeshBvh<T> {
    nodes: Vec<Node<T>>,
    faces: Vec<usize>,
}

impl<T: Real> MeshBvh<T> {
    pub fn build(mesh: &Mesh<T>) -> Self {
        let mut faces: Vec<usize> = (0..mesh.face_count()).collect();
        let boxes: Vec<Aabb<T>> = (0..mesh.face_count())
            .map(|f| {
                let [a, b, c] = mesh.face_positions(f);
                Aabb { lo: a.min_elem(b).min_elem(c), hi: a.max_elem(b).max_elem(c) }
            })
            .collect();
        let mut nodes = Vec::new();
        if !faces.is_empty() {
            let n = faces.len();
            Self::build_node(&mut nodes, &mut faces, &boxes, 0, n);
        }
        MeshBvh { nodes, faces }
    }

    fn build_node(nodes: &mut Vec<Node<T>>, faces: &mut [usize], boxes: &[Aabb<T>], start: usize, end: usize) -> usize {
        let mut bounds = boxes[faces[start]];
        for &f in &faces[start + 1..end] {
            bounds.lo = bounds.lo.min_elem(boxes[f].lo);
            bounds.hi = bounds.hi.max_elem(boxes[f].hi);
        }
        let id = nodes.len();
        if end - start <= LEAF_SIZE {
            nodes.push(Node::Leaf { bounds, start, end });
            return id;
        }
        nodes.push(Node::Leaf { bounds, start, end });
        let ext = (bounds.hi - bounds.lo).to_array();
        let axis = (0..3).fold(0, |best, i| if ext[i] > ext[best] { i } else { best });
        let key = |f: usize| {
            let b = &boxes[f];
            (b.lo.to_array()[axis] + b.hi.to_array()[axis]).to_f64_lossy()
        };
        let mid = (start + end) / 2;
        faces[start..end].select_nth_unstable_by(mid - start, |&x, &y| key(x).total_cmp(&key(y)).then(x.cmp(&y)));
        let left = Self::build_node(nodes, faces, boxes, start, mid);
        let right = Self::build_node(nodes, faces, boxes, mid, end);
        nodes[id] = Node::Inner { bounds, left, right };
        id
    }

    pub fn closest_point(&self, mesh: &Mesh<T>, p: Vec3<T>) -> Option<ClosestPoint<T>> {
        if self.nodes.is_empty() {
            return None;
        }
        let slack = T::one() + T::lit(1e-9);
        let mut best: Option<ClosestPoint<T>> = None;
        let mut stack = vec![(0usize, self.nodes[0].bounds().distance_sq(p))];
        while let Some((id, box_d2)) = stack.pop() {
            if let Some(b) = &best {
                if box_d2 > b.distance_sq * slack {
                    continue;
                }
            }
            match &self.nodes[id] {
                Node::Leaf { start, end, .. } => {
                    for &f in &self.faces[*start..*end] {
                        let c = face_query(mesh, f, p);
                        if better(&c, &best) {
                            best = Some(c);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bounds().distance_sq(p);
                    let dr = self.nodes[*right].bounds().distance_sq(p);
                    // push the farther child first so the nearer one is searched first
                    if dl <= dr {
                        stack.push((*right, dr));
                        stack.push((*left, dl));
                    } else {
                        stack.push((*left, dl));
                        stack.push((*right, dr));
                    }
                }
            }
        }
        best
    }
}

/// Globally nearest surface point (builds a tree; reuse [`MeshBvh`] for many queries).
pub fn closest_point_on_mesh<T: Real>(mesh: &Mesh<T>, p: Vec3<T>) -> Option<ClosestPoint<T>> {
    MeshBvh::build(mesh).closest_point(mesh, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorPair<T> {
    pub uv: Vec2<T>,
    pub uv_mirror: Vec2<T>,
    pub residual: T,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MirrorDiagnostics {
    /// Vertices strictly on the positive side of the plane.
    pub candidates: usize,
    /// Candidates dropped for exceeding the residual limit.
    pub filtered: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MirrorPairSet<T> {
    pub pairs: Vec<MirrorPair<T>>,
    pub diagnostics: MirrorDiagnostics,
}

pub fn default_max_residual<T: Real>(mesh: &Mesh<T>) -> T {
    mesh.bounding_box_diagonal() * T::lit(DEFAULT_RESIDUAL_FRACTION)
}

/// Pairs each positive-side vertex's uv with the uv of its reflection's surface projection.
///
/// A vertex with several uv copies contributes one pair per copy.
pub fn mirror_pairs<T: Real>(
    mesh: &Mesh<T>,
    adj: &Adjacency,
    plane: &SymmetryPlane<T>,
    max_residual: T,
) -> MirrorPairSet<T> {
    let bvh = MeshBvh::build(mesh);
    let candidates: Vec<usize> =
        (0..mesh.vertex_count()).filter(|&v| plane.signed_distance(mesh.positions[v]) > T::zero()).collect();
    let matches: Vec<Option<(usize, Vec2<T>, T)>> = candidates
        .par_iter()
        .map(|&v| {
            let q = reflect_point(mesh.positions[v], plane);
            let hit = bvh.closest_point(mesh, q)?;
            if !(hit.distance <= max_residual) {
                return None;
            }
            let uvs = mesh.face_uvs(hit.face);
            let uv = uvs[0] * hit.bary[0] + uvs[1] * hit.bary[1] + uvs[2] * hit.bary[2];
            Some((v, uv, hit.distance))
        })
        .collect();
    let mut pairs = Vec::new();
    let mut filtered = 0;
    for m in matches {
        let Some((v, uv_mirror, residual)) = m else {
            filtered += 1;
            continue;
        };
        for &k in &adj.vertex_to_uv_indices[v] {
            pairs.push(MirrorPair { uv: mesh.uv_coords[k], uv_mirror, residual });
        }
    }
    MirrorPairSet { pairs, diagnostics: MirrorDiagnostics { candidates: candidates.len(), filtered } }
}
