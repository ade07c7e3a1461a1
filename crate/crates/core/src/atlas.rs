//! UV-space rasters and baking of per-vertex scalars.
//!
//! Raster convention: row 0 is the top image row; texel `(col, row)` sits at
//! `uv = (col / (W − 1), 1 − row / (H − 1))`, so the corner texels lie exactly
//! on the uv square's corners. The same mapping drives bilinear sampling.

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::linalg::Vec2;
use crate::mesh::{Adjacency, Mesh};
use crate::scalar::Real;

/// Inside tolerance on barycentric coordinates for texel membership.
///
/// Raised to `64·ε` for types where that is larger, so `f32` bakes keep the
/// border texels that sit exactly on a uv edge.
pub const INSIDE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeTag {
    Unit,
    SignedUnit,
    Raw,
}

impl std::str::FromStr for RangeTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "unit" => Ok(RangeTag::Unit),
            "signed_unit" => Ok(RangeTag::SignedUnit),
            "raw" => Ok(RangeTag::Raw),
            other => Err(format!("unknown range `{other}` (unit, signed_unit, raw)")),
        }
    }
}

impl RangeTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RangeTag::Unit => "unit",
            RangeTag::SignedUnit => "signed_unit",
            RangeTag::Raw => "raw",
        }
    }
}

/// Single-channel UV-space raster with per-texel contribution counts.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap<T> {
    pub width: usize,
    pub height: usize,
    /// Row-major from the top row; uncovered texels hold 0.
    pub values: Vec<T>,
    pub coverage: Vec<u32>,
    pub range: RangeTag,
}

impl<T: Real> ScalarMap<T> {
    pub fn new(width: usize, height: usize, range: RangeTag) -> Self {
        ScalarMap {
            width,
            height,
            values: vec![T::zero(); width * height],
            coverage: vec![0; width * height],
            range,
        }
    }

    /// Map with every texel covered once by `value`.
    pub fn filled(width: usize, height: usize, value: T, range: RangeTag) -> Self {
        ScalarMap {
            width,
            height,
            values: vec![value; width * height],
            coverage: vec![1; width * height],
            range,
        }
    }

    pub fn get(&self, col: usize, row: usize) -> T {
        self.values[row * self.width + col]
    }

    pub fn covered_count(&self) -> usize {
        self.coverage.iter().filter(|&&c| c > 0).count()
    }

    /// Copy with uncovered texels filled from covered 4-neighbors (one pass).
    /// For previews only; coverage is left unchanged.
    pub fn dilated(&self) -> Self {
        let mut out = self.clone();
        for row in 0..self.height {
            for col in 0..self.width {
                let i = row * self.width + col;
                if self.coverage[i] > 0 {
                    continue;
                }
                let mut sum = T::zero();
                let mut n = 0usize;
                let neighbors = [
                    (col.wrapping_sub(1), row),
                    (col + 1, row),
                    (col, row.wrapping_sub(1)),
                    (col, row + 1),
                ];
                for (c, r) in neighbors {
                    if c < self.width && r < self.height && self.coverage[r * self.width + c] > 0 {
                        sum += self.values[r * self.width + c];
                        n += 1;
                    }
                }
                if n > 0 {
                    out.values[i] = sum / T::from_usize_lossy(n);
                }
            }
        }
        out
    }
}

/// uv position of a texel under the raster convention.
pub fn texel_uv<T: Real>(col: usize, row: usize, width: usize, height: usize) -> Vec2<T> {
    let u = T::from_usize_lossy(col) / T::from_usize_lossy(width - 1);
    let v = T::one() - T::from_usize_lossy(row) / T::from_usize_lossy(height - 1);
    Vec2::new(u, v)
}

/// Continuous texel-space position `(x, row)` of a uv point.
pub fn uv_to_texel<T: Real>(uv: Vec2<T>, width: usize, height: usize) -> (T, T) {
    (
        uv.x * T::from_usize_lossy(width - 1),
        (T::one() - uv.y) * T::from_usize_lossy(height - 1),
    )
}

/// Barycentric coordinates of `p` with respect to triangle `tri`.
pub fn barycentric_coords<T: Real>(p: Vec2<T>, tri: [Vec2<T>; 3]) -> Result<[T; 3], GeometryError> {
    let [a, b, c] = tri;
    let e1 = b - a;
    let e2 = c - a;
    let det = e1.perp_dot(e2);
    if det == T::zero() || !det.is_finite() {
        return Err(GeometryError::DegenerateTriangle);
    }
    let d = p - a;
    let b2 = d.perp_dot(e2) / det;
    let b3 = e1.perp_dot(d) / det;
    Ok([T::one() - b2 - b3, b2, b3])
}

fn inside<T: Real>(bary: &[T; 3], eps: T) -> bool {
    bary.iter().all(|&b| b >= -eps)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BakeDiagnostics {
    pub skipped_degenerate_uv: usize,
}

/// Rasterizes per-vertex `values` into UV space by barycentric interpolation.
///
/// Every texel whose center passes the inside test for a uv triangle receives
/// that triangle's interpolated value; overlapping contributions are averaged.
/// Triangles are processed in index order so per-texel sums are deterministic.
pub fn bake_vertex_scalar<T: Real>(
    mesh: &Mesh<T>,
    values: &[T],
    width: usize,
    height: usize,
    range: RangeTag,
) -> Result<(ScalarMap<T>, BakeDiagnostics), GeometryError> {
    if values.len() != mesh.vertex_count() {
        return Err(GeometryError::InvalidInput(format!(
            "{} values for {} vertices",
            values.len(),
            mesh.vertex_count()
        )));
    }
    if width < 4 || height < 4 {
        return Err(GeometryError::InvalidInput(format!("bake size {width}x{height} below 4x4")));
    }
    let mut sums = vec![T::zero(); width * height];
    let mut coverage = vec![0u32; width * height];
    let mut diag = BakeDiagnostics::default();
    let eps = T::lit(INSIDE_EPS).max(T::epsilon() * T::lit(64.0));
    for f in 0..mesh.face_count() {
        let uvs = mesh.face_uvs(f);
        let vals = mesh.triangles[f].map(|v| values[v]);
        if barycentric_coords(uvs[0], uvs).is_err() {
            diag.skipped_degenerate_uv += 1;
            continue;
        }
        let Some((c0, c1, r0, r1)) = texel_bbox(&uvs, width, height) else { continue };
        for row in r0..=r1 {
            for col in c0..=c1 {
                let p = texel_uv(col, row, width, height);
                let bary = barycentric_coords(p, uvs).expect("checked non-degenerate");
                if inside(&bary, eps) {
                    let i = row * width + col;
                    sums[i] += bary[0] * vals[0] + bary[1] * vals[1] + bary[2] * vals[2];
                    coverage[i] += 1;
                }
            }
        }
    }
    if diag.skipped_degenerate_uv > 0 {
        log::warn!("bake: skipped {} zero-area uv triangle(s)", diag.skipped_degenerate_uv);
    }
    for (s, &c) in sums.iter_mut().zip(&coverage) {
        if c > 0 {
            *s /= T::from_usize_lossy(c as usize);
        }
    }
    Ok((ScalarMap { width, height, values: sums, coverage, range }, diag))
}

/// Inclusive texel bounding box `(col0, col1, row0, row1)` of a uv triangle, padded by one texel.
fn texel_bbox<T: Real>(uvs: &[Vec2<T>; 3], width: usize, height: usize) -> Option<(usize, usize, usize, usize)> {
    let pts = uvs.map(|uv| uv_to_texel(uv, width, height));
    let xmin = pts.iter().map(|p| p.0).fold(T::infinity(), T::min);
    let xmax = pts.iter().map(|p| p.0).fold(T::neg_infinity(), T::max);
    let ymin = pts.iter().map(|p| p.1).fold(T::infinity(), T::min);
    let ymax = pts.iter().map(|p| p.1).fold(T::neg_infinity(), T::max);
    let clamp = |x: T, n: usize| -> Option<usize> {
        let f = x.to_f64_lossy();
        if f.is_nan() {
            None
        } else {
            Some(f.max(0.0).min((n - 1) as f64) as usize)
        }
    };
    let c0 = clamp(xmin.floor() - T::one(), width)?;
    let c1 = clamp(xmax.ceil() + T::one(), width)?;
    let r0 = clamp(ymin.floor() - T::one(), height)?;
    let r1 = clamp(ymax.ceil() + T::one(), height)?;
    if xmax < T::lit(-1.0) || ymax < T::lit(-1.0) {
        return None;
    }
    Some((c0, c1, r0, r1))
}

/// One uv attachment of a vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VertexTexel<T> {
    pub uv_index: usize,
    pub uv: Vec2<T>,
    /// Nearest texel `(col, row)`.
    pub texel: (usize, usize),
}

/// For each vertex, one entry per distinct uv index it uses.
pub fn vertex_uv_texels<T: Real>(
    mesh: &Mesh<T>,
    adj: &Adjacency,
    width: usize,
    height: usize,
) -> Vec<Vec<VertexTexel<T>>> {
    adj.vertex_to_uv_indices
        .iter()
        .map(|indices| {
            indices
                .iter()
                .map(|&k| {
                    let uv = mesh.uv_coords[k];
                    let (x, y) = uv_to_texel(uv, width, height);
                    let col = x.round().to_f64_lossy().clamp(0.0, (width - 1) as f64) as usize;
                    let row = y.round().to_f64_lossy().clamp(0.0, (height - 1) as f64) as usize;
                    VertexTexel { uv_index: k, uv, texel: (col, row) }
                })
                .collect()
        })
        .collect()
}
