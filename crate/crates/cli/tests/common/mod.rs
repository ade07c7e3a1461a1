#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use texreward::io::encode_texture_png;
use texreward::mesh::{write_obj, Mesh};
use texreward::primitives;
use texreward::texture::Texture;

pub fn texreward(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_texreward"))
        .args(args)
        .env("TEXREWARD_THREADS", "2")
        .output()
        .expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn ok(out: &Output) {
    assert_eq!(code(out), 0, "stderr: {}", stderr(out));
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

pub fn write_mesh(dir: &Path, name: &str, mesh: &Mesh<f64>) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, write_obj(mesh)).unwrap();
    path
}

pub fn write_texture(dir: &Path, name: &str, tex: &Texture<f64>) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, encode_texture_png(tex).unwrap()).unwrap();
    path
}

pub fn write_spec(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

pub fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

/// Mirror-symmetric about x = 0; uv u ↦ 1 − u under the reflection.
pub fn symmetric_surface() -> Mesh<f64> {
    primitives::height_field(16, 24, (-0.5, 0.5), (-2.0, 2.0), |x, y| {
        0.8 * (1.5 * y).cos() + 0.2 * (std::f64::consts::PI * x).cos()
    })
}

pub const FULL_SPEC: &str = r#"{"terms": [
    {"kind": "alignment", "weight": 1.0},
    {"kind": "emphasis", "weight": 0.5},
    {"kind": "symmetry", "weight": 1.0},
    {"kind": "colorization", "weight": 0.7},
    {"kind": "colorfulness", "weight": 0.3}
]}"#;
