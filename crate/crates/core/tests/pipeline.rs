use texreward::atlas::{bake_vertex_scalar, RangeTag};
use texreward::curvature::{normalize_scalar_field, principal_curvatures, Which};
use texreward::field::{build_uv_field, smooth_uv_field};
use texreward::io;
use texreward::mesh::{write_obj, Adjacency, Mesh};
use texreward::optimize::{optimize_texture, OptConfig};
use texreward::primitives;
use texreward::rewards::{evaluate, RewardContext, RewardSpec, RewardTerm, TermKind};
use texreward::symmetry::{default_max_residual, estimate_symmetry_plane, mirror_pairs};
use texreward::texture::Texture;
use texreward::Real;

fn surface<T: Real>() -> Mesh<T> {
    primitives::height_field(12, 18, (-0.5, 0.5), (-2.0, 2.0), |x, y| {
        0.8 * (1.5 * y).cos() + 0.2 * (std::f64::consts::PI * x).cos()
    })
}

fn spec() -> RewardSpec {
    RewardSpec {
        terms: vec![
            RewardTerm::new(TermKind::Alignment, 1.0),
            RewardTerm::new(TermKind::Emphasis, 0.5),
            RewardTerm::new(TermKind::Symmetry, 1.0),
            RewardTerm::new(TermKind::Colorization, 0.7),
            RewardTerm::new(TermKind::Colorfulness, 0.3),
        ],
    }
}

/// Mesh to reward value through every preprocessing stage.
fn full_reward<T: Real>(size: usize, steps: usize) -> (f64, f64) {
    let mesh = surface::<T>();
    let adj = Adjacency::build(&mesh);
    let curv = principal_curvatures(&mesh, &adj, 3).unwrap();
    let field = smooth_uv_field(&build_uv_field(&mesh, &adj, &curv, Which::Min), &adj, 3).0;
    let unit_v = normalize_scalar_field(&curv.mean_h, RangeTag::Unit, 0.02).unwrap();
    let signed_v = normalize_scalar_field(&curv.mean_h, RangeTag::SignedUnit, 0.02).unwrap();
    let unit = bake_vertex_scalar(&mesh, &unit_v, size, size, RangeTag::Unit).unwrap().0;
    let signed = bake_vertex_scalar(&mesh, &signed_v, size, size, RangeTag::SignedUnit).unwrap().0;
    let plane = estimate_symmetry_plane(&mesh).unwrap();
    let pairs = mirror_pairs(&mesh, &adj, &plane, default_max_residual(&mesh));
    let ctx = RewardContext {
        field: Some(&field),
        curvature_unit: Some(&unit),
        curvature_signed: Some(&signed),
        pairs: Some(&pairs),
    };
    let init = Texture::<T>::noise(size, size, 11);
    let before = evaluate(&spec(), &init, &ctx).unwrap().value;
    let cfg = OptConfig { learning_rate: 0.05, steps, log_every: steps.max(1), ..Default::default() };
    let trace = optimize_texture(&init, &spec(), &ctx, &cfg).unwrap();
    let after = evaluate(&spec(), &trace.final_texture, &ctx).unwrap().value;
    (before.to_f64_lossy(), after.to_f64_lossy())
}

#[test]
fn full_spec_ascent_raises_reward() {
    let (before, after) = full_reward::<f64>(16, 30);
    assert!(after > before, "{before} -> {after}");
}

#[test]
fn single_precision_tracks_double() {
    let (b64, _) = full_reward::<f64>(16, 0);
    let (b32, _) = full_reward::<f32>(16, 0);
    assert!((b64 - b32).abs() < 1e-3 * b64.abs().max(1.0), "{b64} vs {b32}");
}

#[test]
fn disk_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = surface::<f64>();
    let obj = dir.path().join("m.obj");
    std::fs::write(&obj, write_obj(&mesh)).unwrap();
    let back = io::load_mesh::<f64>(&obj, false).unwrap();
    assert_eq!(back.vertex_count(), mesh.vertex_count());
    assert_eq!(back.face_count(), mesh.face_count());

    let adj = Adjacency::build(&mesh);
    let curv = principal_curvatures(&mesh, &adj, 3).unwrap();
    let v = normalize_scalar_field(&curv.mean_h, RangeTag::Unit, 0.02).unwrap();
    let map = bake_vertex_scalar(&mesh, &v, 20, 12, RangeTag::Unit).unwrap().0;
    let raw = dir.path().join("c.raw");
    std::fs::write(&raw, io::encode_raw_f32(&map.values)).unwrap();
    let header = io::RasterHeader { width: 20, height: 12, channels: 1, range: RangeTag::Unit };
    std::fs::write(io::sidecar_path(&raw), io::encode_header(&header)).unwrap();
    std::fs::write(io::coverage_path(&raw), io::encode_coverage(&map.coverage)).unwrap();
    let loaded = io::load_scalar_map::<f64>(&raw).unwrap();
    assert_eq!(loaded.coverage, map.coverage);
    for (a, b) in loaded.values.iter().zip(&map.values) {
        assert!((a - b).abs() < 1e-6);
    }

    let field = build_uv_field(&mesh, &adj, &curv, Which::Max);
    let jsonl = dir.path().join("f.jsonl");
    std::fs::write(&jsonl, io::encode_field_jsonl(&field)).unwrap();
    let f2 = io::load_field::<f64>(&jsonl).unwrap();
    assert_eq!(f2.anchors.len(), field.anchors.len());
    assert_eq!(f2.valid_count(), field.valid_count());

    let tex = Texture::<f64>::noise(9, 7, 2);
    let png = dir.path().join("t.png");
    std::fs::write(&png, io::encode_texture_png(&tex).unwrap()).unwrap();
    let t2 = io::load_texture::<f64>(&png).unwrap();
    for (a, b) in t2.rgb.iter().zip(&tex.rgb) {
        assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
    }
}
