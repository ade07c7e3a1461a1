//! Principal curvatures by local quadric fitting, and scalar-field normalization.
//!
//! At each vertex the k-ring neighborhood is expressed in a tangent frame
//! `(e1, e2, n)` and the height function `z = a x² + b xy + c y²` is fitted by
//! least squares. The shape operator of that quadric at the origin is
//! `-[[2a, b], [b, 2c]]`; its eigenpairs are the principal curvatures and
//! directions. Curvature is positive where the surface bends away from the
//! normal, so a unit sphere with outward normals has `k = 1`.

use rayon::prelude::*;

use crate::atlas::RangeTag;
use crate::error::GeometryError;
use crate::linalg::{solve3, symmetric_eigen2, Vec3};
use crate::mesh::{Adjacency, Mesh};
use crate::scalar::Real;

pub const DEFAULT_RADIUS_RINGS: usize = 3;
pub const DEFAULT_CLIP: f64 = 0.02;
/// Minimum neighborhood size for a quadric fit.
pub const MIN_FIT_NEIGHBORS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Min,
    Max,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurvatureDiagnostics {
    /// Vertices whose fit failed and were filled from their one-ring.
    pub infilled: Vec<usize>,
    /// Vertices that could not be filled (no valid neighbor reachable).
    pub unresolved: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct CurvatureData<T> {
    pub k_min: Vec<T>,
    pub k_max: Vec<T>,
    pub dir_min: Vec<Vec3<T>>,
    pub dir_max: Vec<Vec3<T>>,
    pub mean_h: Vec<T>,
    pub diagnostics: CurvatureDiagnostics,
}

impl<T: Real> CurvatureData<T> {
    pub fn directions(&self, which: Which) -> &[Vec3<T>] {
        match which {
            Which::Min => &self.dir_min,
            Which::Max => &self.dir_max,
        }
    }

    /// Curvature data with the same principal directions at every vertex and zero curvature.
    pub fn uniform_directions(n: usize, dir_min: Vec3<T>, dir_max: Vec3<T>) -> Self {
        CurvatureData {
            k_min: vec![T::zero(); n],
            k_max: vec![T::zero(); n],
            dir_min: vec![dir_min; n],
            dir_max: vec![dir_max; n],
            mean_h: vec![T::zero(); n],
            diagnostics: CurvatureDiagnostics::default(),
        }
    }
}

struct Fit<T> {
    k_min: T,
    k_max: T,
    dir_min: Vec3<T>,
    dir_max: Vec3<T>,
}

fn fit_vertex<T: Real>(mesh: &Mesh<T>, adj: &Adjacency, v: usize, rings: usize) -> Option<Fit<T>> {
    let n = mesh.vertex_normals[v];
    if n.norm_squared() == T::zero() {
        return None;
    }
    let neighbors = adj.k_ring(v, rings);
    if neighbors.len() < MIN_FIT_NEIGHBORS {
        return None;
    }
    let e1 = n.any_orthogonal();
    let e2 = n.cross(e1);
    let origin = mesh.positions[v];
    // normal equations for [x², xy, y²] · [a, b, c] = z
    let mut ata = [[T::zero(); 3]; 3];
    let mut atz = [T::zero(); 3];
    for &q in &neighbors {
        let d = mesh.positions[q] - origin;
        let (x, y, z) = (d.dot(e1), d.dot(e2), d.dot(n));
        let row = [x * x, x * y, y * y];
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atz[i] += row[i] * z;
        }
    }
    let [a, b, c] = solve3(ata, atz)?;
    let two = T::lit(2.0);
    let (lo, hi, d_lo, d_hi) = symmetric_eigen2(-two * a, -b, -two * c);
    let to3 = |d: crate::linalg::Vec2<T>| e1 * d.x + e2 * d.y;
    Some(Fit { k_min: lo, k_max: hi, dir_min: to3(d_lo), dir_max: to3(d_hi) })
}

/// Per-vertex principal curvatures and directions.
///
/// Vertices with fewer than [`MIN_FIT_NEIGHBORS`] neighbors within
/// `radius_rings` (or a singular fit) are filled by averaging their valid
/// one-ring neighbors and reported in the diagnostics.
pub fn principal_curvatures<T: Real>(
    mesh: &Mesh<T>,
    adj: &Adjacency,
    radius_rings: usize,
) -> Result<CurvatureData<T>, GeometryError> {
    if radius_rings < 2 {
        return Err(GeometryError::InvalidInput(format!(
            "radius_rings must be at least 2, got {radius_rings}"
        )));
    }
    let n = mesh.vertex_count();
    let fits: Vec<Option<Fit<T>>> = (0..n)
        .into_par_iter()
        .map(|v| fit_vertex(mesh, adj, v, radius_rings))
        .collect();

    let mut valid: Vec<bool> = fits.iter().map(Option::is_some).collect();
    let mut k_min = vec![T::zero(); n];
    let mut k_max = vec![T::zero(); n];
    let mut dir_min = vec![Vec3::zero(); n];
    let mut dir_max = vec![Vec3::zero(); n];
    for (v, fit) in fits.into_iter().enumerate() {
        if let Some(f) = fit {
            k_min[v] = f.k_min;
            k_max[v] = f.k_max;
            dir_min[v] = f.dir_min;
            dir_max[v] = f.dir_max;
        }
    }

    let mut diagnostics = CurvatureDiagnostics::default();
    loop {
        let mut updates = Vec::new();
        for v in (0..n).filter(|&v| !valid[v]) {
            let good: Vec<usize> = adj.vertex_one_ring[v].iter().copied().filter(|&u| valid[u]).collect();
            if good.is_empty() {
                continue;
            }
            let count = T::from_usize_lossy(good.len());
            let kmin = good.iter().map(|&u| k_min[u]).sum::<T>() / count;
            let kmax = good.iter().map(|&u| k_max[u]).sum::<T>() / count;
            let reference = dir_min[good[0]];
            let mut d = good.iter().fold(Vec3::zero(), |acc, &u| {
                let du = dir_min[u];
                if du.dot(reference) < T::zero() {
                    acc - du
                } else {
                    acc + du
                }
            });
            let nrm = mesh.vertex_normals[v];
            let frame_fallback = if nrm.norm_squared() > T::zero() { nrm.any_orthogonal() } else { reference };
            if nrm.norm_squared() > T::zero() {
                d = d - nrm * d.dot(nrm);
            }
            let dmin = d.normalized().unwrap_or(frame_fallback);
            let dmax = if nrm.norm_squared() > T::zero() {
                nrm.cross(dmin)
            } else {
                dir_max[good[0]]
            };
            updates.push((v, kmin.min(kmax), kmin.max(kmax), dmin, dmax));
        }
        if updates.is_empty() {
            break;
        }
        for (v, kmin, kmax, dmin, dmax) in updates {
            k_min[v] = kmin;
            k_max[v] = kmax;
            dir_min[v] = dmin;
            dir_max[v] = dmax;
            valid[v] = true;
            diagnostics.infilled.push(v);
        }
    }
    for v in (0..n).filter(|&v| !valid[v]) {
        diagnostics.unresolved.push(v);
        let nrm = mesh.vertex_normals[v];
        if nrm.norm_squared() > T::zero() {
            dir_min[v] = nrm.any_orthogonal();
            dir_max[v] = nrm.cross(dir_min[v]);
        }
    }
    diagnostics.infilled.sort_unstable();
    if !diagnostics.infilled.is_empty() {
        log::info!("curvature: {} vertices filled from neighbors", diagnostics.infilled.len());
    }
    if !diagnostics.unresolved.is_empty() {
        log::warn!("curvature: {} vertices unresolved", diagnostics.unresolved.len());
    }

    let half = T::lit(0.5);
    let mean_h = k_min.iter().zip(&k_max).map(|(&a, &b)| (a + b) * half).collect();
    Ok(CurvatureData { k_min, k_max, dir_min, dir_max, mean_h, diagnostics })
}

/// Linear-interpolated quantile of sorted data.
fn quantile<T: Real>(sorted: &[T], q: f64) -> T {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// Percentile-clips `values` at `[p, 1 - p]` and maps the clipped range affinely
/// onto `[0, 1]` (`Unit`) or `[-1, 1]` (`SignedUnit`). Constant input maps to the
/// midpoint. `Raw` returns the values unchanged.
pub fn normalize_scalar_field<T: Real>(
    values: &[T],
    target: RangeTag,
    clip_percentile: f64,
) -> Result<Vec<T>, GeometryError> {
    if values.is_empty() {
        return Err(GeometryError::InvalidInput("no values to normalize".into()));
    }
    if !(0.0..=0.1).contains(&clip_percentile) {
        return Err(GeometryError::InvalidInput(format!(
            "clip percentile {clip_percentile} outside [0, 0.1]"
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(GeometryError::InvalidInput("non-finite value".into()));
    }
    if target == RangeTag::Raw {
        return Ok(values.to_vec());
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let lo = quantile(&sorted, clip_percentile);
    let hi = quantile(&sorted, 1.0 - clip_percentile);
    let (out_lo, out_hi) = match target {
        RangeTag::SignedUnit => (-T::one(), T::one()),
        _ => (T::zero(), T::one()),
    };
    let half = T::lit(0.5);
    if !(hi > lo) {
        return Ok(vec![(out_lo + out_hi) * half; values.len()]);
    }
    let span = hi - lo;
    Ok(values
        .iter()
        .map(|&x| {
            let t = (x.max(lo).min(hi) - lo) / span;
            out_lo + (out_hi - out_lo) * t
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat3;
    use crate::primitives;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn curv(mesh: &Mesh<f64>, rings: usize) -> CurvatureData<f64> {
        principal_curvatures(mesh, &Adjacency::build(mesh), rings).unwrap()
    }

    fn check_invariants(mesh: &Mesh<f64>, c: &CurvatureData<f64>) {
        for v in 0..mesh.vertex_count() {
            assert!(c.k_min[v] <= c.k_max[v]);
            let n = mesh.vertex_normals[v];
            assert!(c.dir_min[v].dot(n).abs() < 1e-3);
            assert!(c.dir_max[v].dot(n).abs() < 1e-3);
            assert!(c.dir_min[v].dot(c.dir_max[v]).abs() < 1e-2);
            assert_eq!(c.mean_h[v], (c.k_min[v] + c.k_max[v]) / 2.0);
        }
    }

    #[test]
    fn unit_sphere_mean_curvature_is_one() {
        let m = primitives::icosphere::<f64>(3);
        let c = curv(&m, 3);
        check_invariants(&m, &c);
        let mean = c.mean_h.iter().sum::<f64>() / c.mean_h.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "mean H {mean}");
    }

    #[test]
    fn flat_grid_has_zero_curvature() {
        let m = primitives::flat_grid::<f64>(10, 1.0);
        let c = curv(&m, 2);
        assert!(c.k_min.iter().chain(&c.k_max).all(|k| k.abs() < 1e-6));
    }

    #[test]
    fn cylinder_curvatures() {
        let m = primitives::cylinder::<f64>(0.5, 2.0, 48, 24);
        let c = curv(&m, 3);
        check_invariants(&m, &c);
        let axis = Vec3::new(0.0, 0.0, 1.0);
        for v in 0..m.vertex_count() {
            if m.positions[v].z.abs() > 0.4 {
                continue;
            }
            assert!((c.k_max[v] - 2.0).abs() < 0.2, "k_max {}", c.k_max[v]);
            assert!(c.k_min[v].abs() < 0.1);
            let ang = c.dir_min[v].dot(axis).abs().min(1.0).acos().to_degrees();
            assert!(ang < 5.0, "dir_min off axis by {ang}°");
        }
    }

    #[test]
    fn rings_below_two_rejected() {
        let m = primitives::flat_grid::<f64>(3, 1.0);
        assert!(principal_curvatures(&m, &Adjacency::build(&m), 1).is_err());
    }

    #[test]
    fn sparse_vertices_are_filled() {
        // the corners of a small grid have too few 2-ring neighbors
        let m = primitives::height_field::<f64>(2, 2, (0.0, 1.0), (0.0, 1.0), |x, y| x * x + 0.5 * y * y);
        let c = curv(&m, 2);
        assert!(c.diagnostics.unresolved.is_empty());
        assert_eq!(c.dir_min.iter().filter(|d| (d.norm() - 1.0).abs() < 1e-9).count(), m.vertex_count());
    }

    fn saddle() -> Mesh<f64> {
        primitives::height_field(16, 16, (-1.0, 1.0), (-1.0, 1.0), |x, y| 0.3 * x * x - 0.1 * y * y + 0.05 * x * y)
    }

    #[test]
    fn rigid_motion_invariance() {
        let m = saddle();
        let c = curv(&m, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let axis = Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            .normalized()
            .unwrap();
        let rot = Mat3::rotation_between(Vec3::new(0.0, 0.0, 1.0), axis);
        let moved = m.transformed(&rot, 1.0, Vec3::new(0.3, -2.0, 5.0));
        let c2 = curv(&moved, 3);
        for v in 0..m.vertex_count() {
            let scale = c.k_max[v].abs().max(c.k_min[v].abs()).max(1e-3);
            assert!((c.k_min[v] - c2.k_min[v]).abs() < 1e-4 * scale);
            assert!((c.k_max[v] - c2.k_max[v]).abs() < 1e-4 * scale);
            if (c.k_max[v] - c.k_min[v]).abs() > 1e-2 {
                let rotated = rot.mul_vec(c.dir_min[v]);
                let ang = rotated.dot(c2.dir_min[v]).abs().min(1.0).acos().to_degrees();
                assert!(ang < 1.0, "vertex {v} direction moved {ang}°");
            }
        }
    }

    #[test]
    fn scaling_scales_curvature_inversely() {
        let m = saddle();
        let c = curv(&m, 3);
        let s = 2.5;
        let c2 = curv(&m.transformed(&Mat3::identity(), s, Vec3::zero()), 3);
        for v in 0..m.vertex_count() {
            for (a, b) in [(c.k_min[v], c2.k_min[v]), (c.k_max[v], c2.k_max[v])] {
                assert!((a / s - b).abs() <= 1e-3 * (a.abs() / s).max(1e-9));
            }
        }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_scalar_field(&[7.0; 5], RangeTag::Unit, 0.02).unwrap(), vec![0.5; 5]);
        assert_eq!(
            normalize_scalar_field(&[-2.0, 0.0, 2.0], RangeTag::SignedUnit, 0.0).unwrap(),
            vec![-1.0, 0.0, 1.0]
        );
        assert!(normalize_scalar_field::<f64>(&[], RangeTag::Unit, 0.0).is_err());
        assert!(normalize_scalar_field(&[1.0], RangeTag::Unit, 0.2).is_err());
    }

    #[test]
    fn normalize_gaussian_hits_exact_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f64> = (0..1000)
            .map(|_| {
                // Box–Muller
                let (u1, u2): (f64, f64) = (rng.random::<f64>().max(1e-300), rng.random());
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
            .collect();
        let out = normalize_scalar_field(&values, RangeTag::SignedUnit, 0.02).unwrap();
        let min = out.iter().cloned().fold(f64::MAX, f64::min);
        let max = out.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(min, -1.0);
        assert_eq!(max, 1.0);
        // rank-order oracle: sorting by input never reverses output order
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        for w in idx.windows(2) {
            assert!(out[w[0]] <= out[w[1]]);
        }
        // about 2% of samples clip on each side
        let clipped = out.iter().filter(|&&x| x == -1.0).count();
        assert!((15..=25).contains(&clipped), "{clipped}");
    }

    proptest! {
        #[test]
        fn normalize_is_monotone(values in proptest::collection::vec(-100.0f64..100.0, 2..200), p in 0.0f64..0.1) {
            let out = normalize_scalar_field(&values, RangeTag::Unit, p).unwrap();
            for i in 0..values.len() {
                prop_assert!((0.0..=1.0).contains(&out[i]));
                for j in 0..values.len() {
                    if values[i] < values[j] {
                        prop_assert!(out[i] <= out[j]);
                    }
                }
            }
        }
    }
}
