//! File formats: PNG textures, raw float32 rasters with JSON sidecars, JSONL
//! fields and mirror pairs, CSV traces, and debug overlays.
//!
//! Functions named `encode_*` / `decode_*` work on bytes; callers decide how
//! and when to write (the CLI writes atomically).

use std::io::Cursor;
use std::path::{Path, PathBuf};

use image::{ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};

use crate::atlas::{uv_to_texel, RangeTag, ScalarMap};
use crate::error::IoError;
use crate::field::{Anchor, UVVectorField};
use crate::linalg::Vec2;
use crate::mesh::{parse_obj, Mesh};
use crate::optimize::TraceEntry;
use crate::rewards::RewardSpec;
use crate::scalar::{round_sig9, Real};
use crate::symmetry::{MirrorDiagnostics, MirrorPair, MirrorPairSet};
use crate::texture::{GradientMap, Texture};

pub fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

fn format_err(path: &Path, message: impl Into<String>) -> IoError {
    IoError::Format { path: path.display().to_string(), message: message.into() }
}

/// Reads an OBJ file; `flip_v` replaces every `v` with `1 − v`.
pub fn load_mesh<T: Real>(path: &Path, flip_v: bool) -> Result<Mesh<T>, IoError> {
    let bytes = read_file(path)?;
    let mut mesh = parse_obj(&bytes).map_err(|e| format_err(path, e.to_string()))?;
    if flip_v {
        mesh.flip_v();
    }
    Ok(mesh)
}

fn to_u8<T: Real>(x: T) -> u8 {
    let v = (x.to_f64_lossy() * 255.0 + 0.5).floor();
    if v.is_nan() {
        0
    } else {
        v.clamp(0.0, 255.0) as u8
    }
}

/// 8-bit RGB PNG; values are scaled by 255 and rounded half-up.
pub fn encode_texture_png<T: Real>(tex: &Texture<T>) -> Result<Vec<u8>, IoError> {
    let data: Vec<u8> = tex.rgb.iter().map(|&x| to_u8(x)).collect();
    encode_rgb8(tex.width, tex.height, data)
}

fn encode_rgb8(width: usize, height: usize, data: Vec<u8>) -> Result<Vec<u8>, IoError> {
    let img = RgbImage::from_raw(width as u32, height as u32, data).expect("buffer matches dimensions");
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn decode_texture_png<T: Real>(bytes: &[u8]) -> Result<Texture<T>, IoError> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_rgb8();
    let (w, h) = img.dimensions();
    let inv = T::lit(1.0 / 255.0);
    Ok(Texture {
        width: w as usize,
        height: h as usize,
        rgb: img.into_raw().into_iter().map(|b| T::from_usize_lossy(b as usize) * inv).collect(),
    })
}

pub fn load_texture<T: Real>(path: &Path) -> Result<Texture<T>, IoError> {
    let bytes = read_file(path)?;
    decode_texture_png(&bytes).map_err(|e| format_err(path, e.to_string()))
}

/// JSON sidecar describing a raw float32 raster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterHeader {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub range: RangeTag,
}

/// Sidecar path for a raw raster: same stem, `.json` extension.
pub fn sidecar_path(raw: &Path) -> PathBuf {
    raw.with_extension("json")
}

/// Coverage companion of a baked map: same stem, `.coverage` extension (u32 LE).
pub fn coverage_path(raw: &Path) -> PathBuf {
    raw.with_extension("coverage")
}

pub fn preview_path(raw: &Path) -> PathBuf {
    raw.with_extension("png")
}

/// Little-endian float32, in the given (row-major, top row first) order.
pub fn encode_raw_f32<T: Real>(values: &[T]) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * 4);
    for v in values {
        out.extend_from_slice(&(v.to_f64_lossy() as f32).to_le_bytes());
    }
    out
}

pub fn decode_raw_f32<T: Real>(bytes: &[u8]) -> Option<Vec<T>> {
    if !bytes.len().is_multiple_of(4) {
        return None;
    }
    Some(
        bytes
            .chunks_exact(4)
            .map(|c| T::lit(f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64))
            .collect(),
    )
}

pub fn encode_coverage(coverage: &[u32]) -> Vec<u8> {
    coverage.iter().flat_map(|c| c.to_le_bytes()).collect()
}

pub fn encode_header(header: &RasterHeader) -> Vec<u8> {
    let mut s = serde_json::to_string(header).expect("header serializes");
    s.push('\n');
    s.into_bytes()
}

fn preview_bounds<T: Real>(range: RangeTag, values: impl Iterator<Item = T>) -> (f64, f64) {
    match range {
        RangeTag::Unit => (0.0, 1.0),
        RangeTag::SignedUnit => (-1.0, 1.0),
        RangeTag::Raw => {
            let (lo, hi) = values
                .map(|v| v.to_f64_lossy())
                .filter(|v| v.is_finite())
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if lo < hi {
                (lo, hi)
            } else {
                (lo.min(0.0), lo.min(0.0) + 1.0)
            }
        }
    }
}

fn affine_u8(v: f64, lo: f64, hi: f64) -> u8 {
    to_u8((v - lo) / (hi - lo))
}

/// Grayscale preview: the declared range maps affinely onto `[0, 255]`.
pub fn encode_scalar_preview<T: Real>(map: &ScalarMap<T>) -> Result<Vec<u8>, IoError> {
    let covered = map.values.iter().zip(&map.coverage).filter(|(_, &c)| c > 0).map(|(v, _)| *v);
    let (lo, hi) = preview_bounds(map.range, covered);
    let data = map
        .values
        .iter()
        .flat_map(|v| {
            let g = affine_u8(v.to_f64_lossy(), lo, hi);
            [g, g, g]
        })
        .collect();
    encode_rgb8(map.width, map.height, data)
}

/// Gradient preview: each channel scaled by the largest magnitude, 0 at mid-gray.
pub fn encode_gradient_preview<T: Real>(grad: &GradientMap<T>) -> Result<Vec<u8>, IoError> {
    let m = grad.max_abs().to_f64_lossy();
    let m = if m > 0.0 { m } else { 1.0 };
    let data = grad.drgb.iter().map(|g| affine_u8(g.to_f64_lossy(), -m, m)).collect();
    encode_rgb8(grad.width, grad.height, data)
}

/// Reads a raw raster and its sidecar; the value count must match the header.
pub fn load_raster<T: Real>(raw: &Path) -> Result<(RasterHeader, Vec<T>), IoError> {
    let side = sidecar_path(raw);
    let header: RasterHeader =
        serde_json::from_slice(&read_file(&side)?).map_err(|e| format_err(&side, e.to_string()))?;
    let values = decode_raw_f32(&read_file(raw)?).ok_or_else(|| format_err(raw, "length is not a multiple of 4"))?;
    if values.len() != header.width * header.height * header.channels {
        return Err(format_err(
            raw,
            format!("{} values, sidecar says {}x{}x{}", values.len(), header.width, header.height, header.channels),
        ));
    }
    Ok((header, values))
}

/// Loads a baked single-channel map with its coverage companion.
pub fn load_scalar_map<T: Real>(raw: &Path) -> Result<ScalarMap<T>, IoError> {
    let (header, values) = load_raster(raw)?;
    if header.channels != 1 {
        return Err(format_err(raw, format!("expected 1 channel, found {}", header.channels)));
    }
    let cov_path = coverage_path(raw);
    let cov_bytes = read_file(&cov_path)?;
    if cov_bytes.len() != values.len() * 4 {
        return Err(format_err(&cov_path, "coverage size does not match the raster"));
    }
    let coverage = cov_bytes.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    Ok(ScalarMap { width: header.width, height: header.height, values, coverage, range: header.range })
}

fn r9<T: Real>(x: T) -> f64 {
    round_sig9(x.to_f64_lossy())
}

#[derive(Serialize, Deserialize)]
struct AnchorRecord {
    uv: [f64; 2],
    dir: [f64; 2],
    vertex: usize,
    uv_index: usize,
    valid: bool,
}

pub fn encode_field_jsonl<T: Real>(field: &UVVectorField<T>) -> Vec<u8> {
    let mut out = String::new();
    for a in &field.anchors {
        let rec = AnchorRecord {
            uv: [r9(a.uv.x), r9(a.uv.y)],
            dir: [r9(a.dir.x), r9(a.dir.y)],
            vertex: a.source_vertex,
            uv_index: a.uv_index,
            valid: a.valid,
        };
        out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        out.push('\n');
    }
    out.into_bytes()
}

fn jsonl_lines<'a>(path: &'a Path, bytes: &'a [u8]) -> Result<impl Iterator<Item = (usize, &'a str)>, IoError> {
    let text = std::str::from_utf8(bytes).map_err(|_| format_err(path, "not UTF-8"))?;
    Ok(text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| (i + 1, l)))
}

pub fn load_field<T: Real>(path: &Path) -> Result<UVVectorField<T>, IoError> {
    let bytes = read_file(path)?;
    let mut anchors = Vec::new();
    for (line, text) in jsonl_lines(path, &bytes)? {
        let r: AnchorRecord =
            serde_json::from_str(text).map_err(|e| format_err(path, format!("line {line}: {e}")))?;
        anchors.push(Anchor {
            uv: Vec2::new(T::lit(r.uv[0]), T::lit(r.uv[1])),
            dir: Vec2::new(T::lit(r.dir[0]), T::lit(r.dir[1])),
            source_vertex: r.vertex,
            uv_index: r.uv_index,
            valid: r.valid,
        });
    }
    Ok(UVVectorField { anchors })
}

#[derive(Serialize, Deserialize)]
struct PairRecord {
    uv: [f64; 2],
    uv_mirror: [f64; 2],
    residual: f64,
}

pub fn encode_pairs_jsonl<T: Real>(pairs: &MirrorPairSet<T>) -> Vec<u8> {
    let mut out = String::new();
    for p in &pairs.pairs {
        let rec = PairRecord {
            uv: [r9(p.uv.x), r9(p.uv.y)],
            uv_mirror: [r9(p.uv_mirror.x), r9(p.uv_mirror.y)],
            residual: r9(p.residual),
        };
        out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn load_pairs<T: Real>(path: &Path) -> Result<MirrorPairSet<T>, IoError> {
    let bytes = read_file(path)?;
    let mut pairs = Vec::new();
    for (line, text) in jsonl_lines(path, &bytes)? {
        let r: PairRecord = serde_json::from_str(text).map_err(|e| format_err(path, format!("line {line}: {e}")))?;
        pairs.push(MirrorPair {
            uv: Vec2::new(T::lit(r.uv[0]), T::lit(r.uv[1])),
            uv_mirror: Vec2::new(T::lit(r.uv_mirror[0]), T::lit(r.uv_mirror[1])),
            residual: T::lit(r.residual),
        });
    }
    let n = pairs.len();
    Ok(MirrorPairSet { pairs, diagnostics: MirrorDiagnostics { candidates: n, filtered: 0 } })
}

pub fn load_spec(path: &Path) -> Result<RewardSpec, IoError> {
    let bytes = read_file(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|_| format_err(path, "not UTF-8"))?;
    RewardSpec::from_json(text).map_err(|e| format_err(path, e))
}

/// CSV with columns `step,value,<term>...,grad_max_abs`; term columns are `kind#index`.
pub fn encode_trace_csv<T: Real>(spec: &RewardSpec, entries: &[TraceEntry<T>]) -> Vec<u8> {
    let mut out = String::from("step,value");
    for (i, t) in spec.terms.iter().enumerate() {
        out.push_str(&format!(",{}#{i}", t.kind.as_str()));
    }
    out.push_str(",grad_max_abs\n");
    for e in entries {
        out.push_str(&format!("{},{}", e.step, r9(e.value)));
        for v in &e.per_term {
            out.push_str(&format!(",{}", r9(*v)));
        }
        out.push_str(&format!(",{}\n", r9(e.grad_max_abs)));
    }
    out.into_bytes()
}

/// Background for field overlays: covered texels mid-gray, the rest black.
pub fn coverage_background(width: usize, height: usize, coverage: &[u32]) -> RgbImage {
    let mut img = RgbImage::new(width as u32, height as u32);
    for (i, &c) in coverage.iter().enumerate() {
        if c > 0 {
            img.put_pixel((i % width) as u32, (i / width) as u32, image::Rgb([96, 96, 96]));
        }
    }
    img
}

pub fn texture_background<T: Real>(tex: &Texture<T>) -> RgbImage {
    let data = tex.rgb.iter().map(|&x| to_u8(x)).collect();
    RgbImage::from_raw(tex.width as u32, tex.height as u32, data).expect("buffer matches dimensions")
}

/// Draws each valid anchor as a red segment of `length` pixels centered on its uv.
pub fn draw_field_overlay<T: Real>(img: &mut RgbImage, field: &UVVectorField<T>, length: f64) -> Result<Vec<u8>, IoError> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    for a in field.anchors.iter().filter(|a| a.valid) {
        let (cx, cy) = uv_to_texel(a.uv, w, h);
        let (cx, cy) = (cx.to_f64_lossy(), cy.to_f64_lossy());
        // texel rows grow downward, uv v grows upward
        let (dx, dy) = (a.dir.x.to_f64_lossy(), -a.dir.y.to_f64_lossy());
        let n = (length.ceil() as usize).max(1) * 2;
        for s in 0..=n {
            let t = (s as f64 / n as f64 - 0.5) * length;
            let (x, y) = ((cx + t * dx).round(), (cy + t * dy).round());
            if x >= 0.0 && y >= 0.0 && (x as usize) < w && (y as usize) < h {
                img.put_pixel(x as u32, y as u32, image::Rgb([255, 0, 0]));
            }
        }
    }
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_is_exact_on_8bit_values() {
        let tex = Texture::<f64>::from_fn(5, 3, |c, r| {
            [c as f64 * 51.0 / 255.0, r as f64 * 100.0 / 255.0, ((c * 7 + r * 3) % 256) as f64 / 255.0]
        });
        let back: Texture<f64> = decode_texture_png(&encode_texture_png(&tex).unwrap()).unwrap();
        assert_eq!((back.width, back.height), (5, 3));
        for (a, b) in tex.rgb.iter().zip(&back.rgb) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn png_rounds_half_up() {
        let tex = Texture::<f64>::filled(1, 1, [0.5 / 255.0, 1.5 / 255.0, 0.49 / 255.0]);
        let back: Texture<f64> = decode_texture_png(&encode_texture_png(&tex).unwrap()).unwrap();
        assert_eq!(back.rgb.iter().map(|x| (x * 255.0).round() as u8).collect::<Vec<_>>(), vec![1, 2, 0]);
    }

    #[test]
    fn raster_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let raw = dir.path().join("m.raw");
        let mut map = ScalarMap::<f64>::new(4, 4, RangeTag::SignedUnit);
        for i in 0..16 {
            map.values[i] = (i as f64 - 8.0) / 8.0;
            map.coverage[i] = (i % 3) as u32;
        }
        std::fs::write(&raw, encode_raw_f32(&map.values)).unwrap();
        std::fs::write(sidecar_path(&raw), encode_header(&RasterHeader { width: 4, height: 4, channels: 1, range: map.range })).unwrap();
        std::fs::write(coverage_path(&raw), encode_coverage(&map.coverage)).unwrap();
        let back: ScalarMap<f64> = load_scalar_map(&raw).unwrap();
        assert_eq!(back, map);
        let side = std::fs::read_to_string(sidecar_path(&raw)).unwrap();
        assert_eq!(side.trim(), r#"{"width":4,"height":4,"channels":1,"range":"signed_unit"}"#);
    }

    #[test]
    fn jsonl_round_trips() {
        let field = UVVectorField {
            anchors: vec![
                Anchor { uv: Vec2::new(0.25, 0.5), dir: Vec2::new(0.6, 0.8), source_vertex: 3, uv_index: 7, valid: true },
                Anchor { uv: Vec2::new(1.0, 0.0), dir: Vec2::zero(), source_vertex: 4, uv_index: 8, valid: false },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.jsonl");
        std::fs::write(&p, encode_field_jsonl(&field)).unwrap();
        assert_eq!(load_field::<f64>(&p).unwrap(), field);

        let pairs = MirrorPairSet {
            pairs: vec![MirrorPair { uv: Vec2::new(0.1, 0.2), uv_mirror: Vec2::new(0.9, 0.2), residual: 0.0 }],
            diagnostics: MirrorDiagnostics { candidates: 1, filtered: 0 },
        };
        std::fs::write(&p, encode_pairs_jsonl(&pairs)).unwrap();
        assert_eq!(load_pairs::<f64>(&p).unwrap(), pairs);
    }

    #[test]
    fn missing_file_error_names_path() {
        let err = load_mesh::<f64>(Path::new("/nonexistent/thing.obj"), false).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/thing.obj"));
    }

    #[test]
    fn trace_csv_layout() {
        let spec = RewardSpec::single(crate::rewards::TermKind::Colorfulness);
        let e = TraceEntry { step: 0, value: 0.5f64, per_term: vec![0.5], grad_max_abs: 1.0 / 3.0 };
        let csv = String::from_utf8(encode_trace_csv(&spec, &[e])).unwrap();
        assert_eq!(csv, "step,value,colorfulness#0,grad_max_abs\n0,0.5,0.5,0.333333333\n");
    }
}
