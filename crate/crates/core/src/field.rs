//! Projection of per-vertex tangent directions into a UV-space direction field.
//!
//! For each vertex the curvature direction is projected onto the tangent
//! plane, stepped a short distance inside the flattened one-ring, located in
//! an incident triangle by barycentric coordinates and mapped through that
//! triangle's uv coordinates. The resulting uv displacement, normalized, is the
//! direction attached to every uv copy of the vertex. A smoothing pass fills
//! vertices where the trace failed and then averages neighboring directions.

use rayon::prelude::*;

use crate::atlas::barycentric_coords;
use crate::curvature::{CurvatureData, Which};
use crate::linalg::{Vec2, Vec3};
use crate::mesh::{Adjacency, Mesh};
use crate::scalar::Real;

/// Containment tolerance on barycentric coordinates for traced points.
pub const TRACE_INSIDE_EPS: f64 = 1e-6;
/// Anchors farther apart than this in uv are never smoothing neighbors.
pub const SAME_CHART_UV_DISTANCE: f64 = 0.25;

/// Result of [`project_to_tangent`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentProjection<T> {
    pub vector: Vec3<T>,
    /// Set when the input was (numerically) parallel to the normal.
    pub degenerate: bool,
}

/// Removes the normal component: `d − (d·n) n`.
pub fn project_to_tangent<T: Real>(d: Vec3<T>, n: Vec3<T>) -> TangentProjection<T> {
    let vector = d - n * d.dot(n);
    TangentProjection { vector, degenerate: vector.norm() < T::lit(1e-9) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStatus {
    Hit,
    Miss,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceResult<T> {
    pub status: TraceStatus,
    /// Containing incident triangle (set on hit).
    pub face: Option<usize>,
    pub bary: [T; 3],
    /// uv of the traced end point.
    pub uv_end: Vec2<T>,
    /// uv of the source vertex's corner in `face`.
    pub uv_orig: Vec2<T>,
}

impl<T: Real> TraceResult<T> {
    fn failed(status: TraceStatus) -> Self {
        TraceResult {
            status,
            face: None,
            bary: [T::zero(); 3],
            uv_end: Vec2::zero(),
            uv_orig: Vec2::zero(),
        }
    }

    /// uv displacement of the trace (hit only).
    pub fn displacement(&self) -> Option<Vec2<T>> {
        (self.status == TraceStatus::Hit).then(|| self.uv_end - self.uv_orig)
    }
}

/// Traces the tangent vector `d_tan` from `vertex` into its flattened one-ring.
///
/// The step is `d_tan / λ` with `λ = ‖d_tan‖ / (0.5 · shortest incident edge)`,
/// so the end point always lies at half the shortest incident edge length.
/// The one-ring is flattened by orthogonal projection onto the tangent plane of
/// the vertex normal, which keeps shared edges shared so the flattened fan has
/// no gaps. The first incident triangle (by face index) containing the end
/// point is reported.
pub fn trace_to_uv<T: Real>(mesh: &Mesh<T>, adj: &Adjacency, vertex: usize, d_tan: Vec3<T>) -> TraceResult<T> {
    let faces = &adj.vertex_to_faces[vertex];
    let n = mesh.vertex_normals[vertex];
    let d_len = d_tan.norm();
    if faces.is_empty() || n.norm_squared() == T::zero() || !(d_len >= T::lit(1e-9)) {
        return TraceResult::failed(TraceStatus::Degenerate);
    }
    let origin = mesh.positions[vertex];
    let shortest = faces
        .iter()
        .flat_map(|&f| mesh.triangles[f])
        .filter(|&q| q != vertex)
        .map(|q| mesh.positions[q].distance(origin))
        .fold(T::infinity(), T::min);
    let lambda = d_len / (T::lit(0.5) * shortest);
    let step = d_tan / lambda;
    let e1 = n.any_orthogonal();
    let e2 = n.cross(e1);
    let target = Vec2::new(step.dot(e1), step.dot(e2));
    let eps = T::lit(TRACE_INSIDE_EPS);

    let mut any_valid_face = false;
    for &f in faces {
        let tri = mesh.triangles[f];
        let flat = tri.map(|q| {
            let r = mesh.positions[q] - origin;
            Vec2::new(r.dot(e1), r.dot(e2))
        });
        let Ok(bary) = barycentric_coords(target, flat) else { continue };
        any_valid_face = true;
        if bary.iter().all(|&b| b >= -eps) {
            let uvs = mesh.face_uvs(f);
            let corner = tri.iter().position(|&q| q == vertex).expect("incident face");
            return TraceResult {
                status: TraceStatus::Hit,
                face: Some(f),
                bary,
                uv_end: uvs[0] * bary[0] + uvs[1] * bary[1] + uvs[2] * bary[2],
                uv_orig: uvs[corner],
            };
        }
    }
    TraceResult::failed(if any_valid_face { TraceStatus::Miss } else { TraceStatus::Degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor<T> {
    pub uv: Vec2<T>,
    pub dir: Vec2<T>,
    pub source_vertex: usize,
    pub uv_index: usize,
    pub valid: bool,
}

/// Per-anchor uv directions; one anchor per (vertex, uv index) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct UVVectorField<T> {
    pub anchors: Vec<Anchor<T>>,
}

impl<T: Real> UVVectorField<T> {
    pub fn valid_count(&self) -> usize {
        self.anchors.iter().filter(|a| a.valid).count()
    }
}

/// uv direction of the tangent vector at `vertex`, traced both ways.
///
/// The chart-local displacements of the forward and backward traces are
/// differenced, which equals the single forward displacement wherever the uv
/// map is affine and makes the result odd in `d_tan`.
fn uv_direction<T: Real>(mesh: &Mesh<T>, adj: &Adjacency, vertex: usize, d_tan: Vec3<T>) -> Option<Vec2<T>> {
    let fwd = trace_to_uv(mesh, adj, vertex, d_tan).displacement();
    let bwd = trace_to_uv(mesh, adj, vertex, -d_tan).displacement();
    let combined = match (fwd, bwd) {
        (Some(f), Some(b)) => f - b,
        (Some(f), None) => f,
        (None, Some(b)) => -b,
        (None, None) => return None,
    };
    let dir = combined.normalized()?;
    (combined.norm() > T::lit(1e-12)).then_some(dir)
}

/// Builds the uv field from the minimum or maximum principal directions.
pub fn build_uv_field<T: Real>(
    mesh: &Mesh<T>,
    adj: &Adjacency,
    curvature: &CurvatureData<T>,
    which: Which,
) -> UVVectorField<T> {
    let dirs = curvature.directions(which);
    let per_vertex: Vec<Option<Vec2<T>>> = (0..mesh.vertex_count())
        .into_par_iter()
        .map(|v| {
            let proj = project_to_tangent(dirs[v], mesh.vertex_normals[v]);
            if proj.degenerate {
                return None;
            }
            uv_direction(mesh, adj, v, proj.vector)
        })
        .collect();
    let mut anchors = Vec::new();
    for (v, dir) in per_vertex.into_iter().enumerate() {
        for &k in &adj.vertex_to_uv_indices[v] {
            anchors.push(Anchor {
                uv: mesh.uv_coords[k],
                dir: dir.unwrap_or_else(Vec2::zero),
                source_vertex: v,
                uv_index: k,
                valid: dir.is_some(),
            });
        }
    }
    UVVectorField { anchors }
}

/// Smoothing neighbors of each anchor: anchors of one-ring vertices on the same chart.
pub fn anchor_neighbors<T: Real>(field: &UVVectorField<T>, adj: &Adjacency) -> Vec<Vec<usize>> {
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); adj.vertex_count()];
    for (i, a) in field.anchors.iter().enumerate() {
        if a.source_vertex < by_vertex.len() {
            by_vertex[a.source_vertex].push(i);
        }
    }
    let limit = T::lit(SAME_CHART_UV_DISTANCE);
    field
        .anchors
        .iter()
        .map(|a| {
            let mut out: Vec<usize> = adj
                .vertex_one_ring
                .get(a.source_vertex)
                .into_iter()
                .flatten()
                .flat_map(|&u| by_vertex[u].iter().copied())
                .filter(|&j| (field.anchors[j].uv - a.uv).norm() < limit)
                .collect();
            out.sort_unstable();
            out
        })
        .collect()
}

/// Sum of `dirs`, each flipped into the half-plane of `reference`.
fn aligned_sum<T: Real>(reference: Vec2<T>, dirs: impl Iterator<Item = Vec2<T>>) -> Vec2<T> {
    dirs.fold(Vec2::zero(), |acc, d| if d.dot(reference) < T::zero() { acc - d } else { acc + d })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SmoothDiagnostics {
    pub filled: usize,
    /// Anchors still invalid after in-filling saturated.
    pub unresolved: usize,
}

/// Fills invalid anchors from valid neighbors, then runs `iterations` rounds of
/// sign-aligned neighbor averaging. Updates are synchronous (Jacobi).
pub fn smooth_uv_field<T: Real>(
    field: &UVVectorField<T>,
    adj: &Adjacency,
    iterations: usize,
) -> (UVVectorField<T>, SmoothDiagnostics) {
    let neighbors = anchor_neighbors(field, adj);
    let mut anchors = field.anchors.clone();
    let mut diag = SmoothDiagnostics::default();

    loop {
        let updates: Vec<(usize, Vec2<T>)> = (0..anchors.len())
            .filter(|&i| !anchors[i].valid)
            .filter_map(|i| {
                let valid: Vec<Vec2<T>> =
                    neighbors[i].iter().filter(|&&j| anchors[j].valid).map(|&j| anchors[j].dir).collect();
                let first = *valid.first()?;
                aligned_sum(first, valid.into_iter()).normalized().map(|d| (i, d))
            })
            .collect();
        if updates.is_empty() {
            break;
        }
        diag.filled += updates.len();
        for (i, d) in updates {
            anchors[i].dir = d;
            anchors[i].valid = true;
        }
    }
    diag.unresolved = anchors.iter().filter(|a| !a.valid).count();
    if diag.unresolved > 0 {
        log::warn!("uv field: {} anchors could not be filled", diag.unresolved);
    }

    for _ in 0..iterations {
        let next: Vec<Vec2<T>> = (0..anchors.len())
            .map(|i| {
                let a = &anchors[i];
                if !a.valid {
                    return a.dir;
                }
                let sum = aligned_sum(
                    a.dir,
                    neighbors[i].iter().filter(|&&j| anchors[j].valid).map(|&j| anchors[j].dir),
                );
                match sum.normalized() {
                    Some(d) if sum.norm() > T::lit(1e-12) => d,
                    _ => a.dir,
                }
            })
            .collect();
        for (a, d) in anchors.iter_mut().zip(next) {
            a.dir = d;
        }
    }
    (UVVectorField { anchors }, diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::principal_curvatures;
    use crate::primitives;

    fn v3(x: f64, y: f64, z: f64) -> Vec3<f64> {
        Vec3::new(x, y, z)
    }

    #[test]
    fn tangent_projection_cases() {
        let n = v3(0.0, 0.0, 1.0);
        let p = project_to_tangent(v3(0.3, -0.2, 0.0), n);
        assert_eq!(p.vector, v3(0.3, -0.2, 0.0));
        assert!(!p.degenerate);
        let p = project_to_tangent(n, n);
        assert_eq!(p.vector, Vec3::zero());
        assert!(p.degenerate);
        assert_eq!(project_to_tangent(v3(1.0, 1.0, 0.0), n).vector, v3(1.0, 1.0, 0.0));
        let tilted = v3(1.0, 2.0, 2.0).normalized().unwrap();
        let q = project_to_tangent(v3(0.5, -1.0, 3.0), tilted);
        assert!(q.vector.dot(tilted).abs() < 1e-9);
    }

    fn grid() -> (Mesh<f64>, Adjacency) {
        let m = primitives::flat_grid::<f64>(6, 1.0);
        let adj = Adjacency::build(&m);
        (m, adj)
    }

    #[test]
    fn planar_trace_is_parallel() {
        let (m, adj) = grid();
        let v = 3 * 7 + 3; // interior
        let r = trace_to_uv(&m, &adj, v, v3(1e-3, 0.0, 0.0));
        assert_eq!(r.status, TraceStatus::Hit);
        let d = r.uv_end - r.uv_orig;
        assert!(d.y.abs() < 1e-3 * d.norm() && d.x > 0.0);
        assert!(adj.vertex_to_faces[v].contains(&r.face.unwrap()));
        // end point lies at half the shortest incident edge (1/12 in uv for a unit grid)
        assert!((d.norm() - 0.5 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn trace_along_edge_has_zero_coordinate() {
        let (m, adj) = grid();
        let v = 3 * 7 + 3;
        let r = trace_to_uv(&m, &adj, v, v3(0.0, 1.0, 0.0));
        assert_eq!(r.status, TraceStatus::Hit);
        assert!(r.bary.iter().any(|b| b.abs() < 1e-6));
    }

    #[test]
    fn boundary_trace_off_surface_misses() {
        let (m, adj) = grid();
        assert_eq!(trace_to_uv(&m, &adj, 3, v3(0.0, -1.0, 0.0)).status, TraceStatus::Miss);
        assert_eq!(trace_to_uv(&m, &adj, 3, Vec3::zero()).status, TraceStatus::Degenerate);
    }

    #[test]
    fn planar_field_matches_global_direction() {
        let (m, adj) = grid();
        let c = CurvatureData::uniform_directions(m.vertex_count(), v3(1.0, 0.0, 0.0), v3(0.0, 1.0, 0.0));
        let f = build_uv_field(&m, &adj, &c, Which::Min);
        assert_eq!(f.valid_count(), f.anchors.len());
        for a in &f.anchors {
            assert!((a.dir.x.abs() - 1.0).abs() < 1e-3 && a.dir.y.abs() < 1e-3);
        }
    }

    #[test]
    fn affine_uv_map_oracle() {
        // uv = A·(x, y) + b on a skewed planar grid; expected dir = normalize(A d)
        let a = [[0.6, 0.25], [-0.1, 0.4]];
        let base = primitives::flat_grid::<f64>(8, 1.0);
        let uv: Vec<Vec2<f64>> = base
            .positions
            .iter()
            .map(|p| Vec2::new(0.1 + a[0][0] * p.x + a[0][1] * p.y, 0.2 + a[1][0] * p.x + a[1][1] * p.y))
            .collect();
        let m = Mesh::new(base.positions.clone(), base.triangles.clone(), uv, base.triangles.clone()).unwrap();
        let adj = Adjacency::build(&m);
        let d = v3(0.8, -0.6, 0.0);
        let c = CurvatureData::uniform_directions(m.vertex_count(), d, v3(0.6, 0.8, 0.0));
        let f = build_uv_field(&m, &adj, &c, Which::Min);
        let want = Vec2::new(a[0][0] * d.x + a[0][1] * d.y, a[1][0] * d.x + a[1][1] * d.y).normalized().unwrap();
        // only grid corners can lose both traces
        assert!(f.valid_count() + 4 >= f.anchors.len());
        for anchor in f.anchors.iter().filter(|a| a.valid) {
            assert!((anchor.dir - want).norm() < 1e-3, "{:?} vs {:?}", anchor.dir, want);
        }
    }

    #[test]
    fn sphere_field_mostly_valid_and_seams_replicated() {
        let m = primitives::icosphere::<f64>(3);
        let adj = Adjacency::build(&m);
        let c = principal_curvatures(&m, &adj, 3).unwrap();
        let f = build_uv_field(&m, &adj, &c, Which::Min);
        assert!(f.valid_count() as f64 >= 0.95 * f.anchors.len() as f64);
        for v in 0..m.vertex_count() {
            let copies: Vec<_> = f.anchors.iter().filter(|a| a.source_vertex == v).collect();
            assert_eq!(copies.len(), adj.vertex_to_uv_indices[v].len());
            for c in &copies {
                assert_eq!(c.dir, copies[0].dir);
            }
        }
        for a in f.anchors.iter().filter(|a| a.valid) {
            assert!((a.dir.norm() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn field_is_sign_covariant() {
        let m = primitives::height_field::<f64>(12, 12, (-1.0, 1.0), (-1.0, 1.0), |x, y| 0.4 * x * x - 0.2 * y * y);
        let adj = Adjacency::build(&m);
        let c = principal_curvatures(&m, &adj, 3).unwrap();
        let mut neg = c.clone();
        neg.dir_min.iter_mut().for_each(|d| *d = -*d);
        let f = build_uv_field(&m, &adj, &c, Which::Min);
        let g = build_uv_field(&m, &adj, &neg, Which::Min);
        for (a, b) in f.anchors.iter().zip(&g.anchors) {
            assert_eq!(a.valid, b.valid);
            if a.valid {
                assert!((a.dir + b.dir).norm() < 1e-6);
            }
        }
    }

    fn four_cycle(dirs: [Vec2<f64>; 4], valid: [bool; 4]) -> (UVVectorField<f64>, Adjacency) {
        let adj = Adjacency {
            vertex_to_faces: vec![Vec::new(); 4],
            vertex_one_ring: vec![vec![1, 3], vec![0, 2], vec![1, 3], vec![0, 2]],
            vertex_to_uv_indices: (0..4).map(|i| vec![i]).collect(),
        };
        let uvs = [(0.4, 0.4), (0.5, 0.4), (0.5, 0.5), (0.4, 0.5)];
        let anchors = (0..4)
            .map(|i| Anchor {
                uv: Vec2::new(uvs[i].0, uvs[i].1),
                dir: dirs[i],
                source_vertex: i,
                uv_index: i,
                valid: valid[i],
            })
            .collect();
        (UVVectorField { anchors }, adj)
    }

    #[test]
    fn smoothing_fixed_point_and_sign_alignment() {
        let e = Vec2::new(1.0, 0.0);
        let (f, adj) = four_cycle([e; 4], [true; 4]);
        let (s, _) = smooth_uv_field(&f, &adj, 10);
        assert_eq!(s, f);

        // alternating ±(1,0): each anchor's neighbors are both the opposite sign;
        // sign alignment flips them back, so the mean stays on the ±x axis
        let (f, adj) = four_cycle([e, -e, e, -e], [true; 4]);
        let (s, _) = smooth_uv_field(&f, &adj, 1);
        for a in &s.anchors {
            assert!((a.dir.x.abs() - 1.0).abs() < 1e-6 && a.dir.y.abs() < 1e-6);
        }
    }

    #[test]
    fn smoothing_fills_invalid_anchor() {
        let up = Vec2::new(0.0, 1.0);
        let (f, adj) = four_cycle([Vec2::zero(), up, up, up], [false, true, true, true]);
        let (s, diag) = smooth_uv_field(&f, &adj, 0);
        assert!(s.anchors[0].valid);
        assert!((s.anchors[0].dir - up).norm() < 1e-12);
        assert_eq!(diag.filled, 1);
        assert_eq!(diag.unresolved, 0);
    }

    #[test]
    fn isolated_invalid_anchor_stays_invalid() {
        let up = Vec2::new(0.0, 1.0);
        let (mut f, adj) = four_cycle([Vec2::zero(), up, up, up], [false, true, true, true]);
        // move anchor 0 onto another chart: no neighbors within the uv limit
        f.anchors[0].uv = Vec2::new(0.95, 0.95);
        let (s, diag) = smooth_uv_field(&f, &adj, 3);
        assert!(!s.anchors[0].valid);
        assert_eq!(diag.unresolved, 1);
        assert!(s.valid_count() >= f.valid_count());
    }

    #[test]
    fn smoothing_keeps_unit_dirs_on_sphere() {
        let m = primitives::icosphere::<f64>(2);
        let adj = Adjacency::build(&m);
        let c = principal_curvatures(&m, &adj, 3).unwrap();
        let f = build_uv_field(&m, &adj, &c, Which::Max);
        let (s, _) = smooth_uv_field(&f, &adj, 5);
        assert!(s.valid_count() >= f.valid_count());
        for a in s.anchors.iter().filter(|a| a.valid) {
            assert!((a.dir.norm() - 1.0).abs() < 1e-6);
        }
    }
}
