//! Wavefront OBJ subset: `v`, `vt` and triangular `f` records with `v/vt[/vn]` corners.

use std::fmt::Write as _;
use std::str::FromStr;

use super::Mesh;
use crate::error::ObjError;
use crate::linalg::{Vec2, Vec3};
use crate::scalar::Real;

/// Parses OBJ text into a validated [`Mesh`].
///
/// `vn` records are ignored; normals are always recomputed. Unknown
/// directives are skipped and counted in `diagnostics.ignored_directives`.
pub fn parse_obj<T: Real>(bytes: &[u8]) -> Result<Mesh<T>, ObjError> {
    let text = std::str::from_utf8(bytes).map_err(|_| ObjError::Encoding)?;
    let mut positions = Vec::new();
    let mut uvs = Vec::new();
    let mut tris = Vec::new();
    let mut tri_uvs = Vec::new();
    let mut ignored = 0usize;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = content.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        match tag {
            "v" => {
                let [x, y, z] = floats::<3>(&mut tokens, line, "v")?;
                positions.push(Vec3::new(T::lit(x), T::lit(y), T::lit(z)));
            }
            "vt" => {
                let [u, v] = floats::<2>(&mut tokens, line, "vt")?;
                uvs.push(Vec2::new(T::lit(u), T::lit(v)));
            }
            "vn" => {}
            "f" => {
                let corners: Vec<&str> = tokens.collect();
                if corners.len() != 3 {
                    if corners.len() < 3 {
                        return Err(malformed(line, "face needs at least three corners"));
                    }
                    return Err(ObjError::UnsupportedFace { line, corners: corners.len() });
                }
                let mut tri = [0usize; 3];
                let mut tuv = [0usize; 3];
                for (k, corner) in corners.iter().enumerate() {
                    let mut parts = corner.split('/');
                    let v = parts.next().unwrap_or("");
                    let vt = parts.next().unwrap_or("");
                    tri[k] = resolve(v, positions.len(), line)?;
                    if vt.is_empty() {
                        return Err(ObjError::MissingUv { line });
                    }
                    tuv[k] = resolve(vt, uvs.len(), line)?;
                }
                tris.push(tri);
                tri_uvs.push(tuv);
            }
            _ => ignored += 1,
        }
    }
    if ignored > 0 {
        log::warn!("ignored {ignored} unsupported OBJ directive(s)");
    }
    let mut mesh = Mesh::new(positions, tris, uvs, tri_uvs)?;
    mesh.diagnostics.ignored_directives = ignored;
    Ok(mesh)
}

/// Serializes positions, uvs and faces with 9 significant digits.
pub fn write_obj<T: Real>(mesh: &Mesh<T>) -> String {
    let mut s = String::new();
    let f = |x: T| format!("{:.8e}", x.to_f64_lossy());
    for p in &mesh.positions {
        let _ = writeln!(s, "v {} {} {}", f(p.x), f(p.y), f(p.z));
    }
    for uv in &mesh.uv_coords {
        let _ = writeln!(s, "vt {} {}", f(uv.x), f(uv.y));
    }
    for (t, tu) in mesh.triangles.iter().zip(&mesh.triangle_uvs) {
        let _ = writeln!(
            s,
            "f {}/{} {}/{} {}/{}",
            t[0] + 1,
            tu[0] + 1,
            t[1] + 1,
            tu[1] + 1,
            t[2] + 1,
            tu[2] + 1
        );
    }
    s
}

fn malformed(line: usize, message: impl Into<String>) -> ObjError {
    ObjError::Malformed { line, message: message.into() }
}

fn floats<'a, const N: usize>(
    tokens: &mut impl Iterator<Item = &'a str>,
    line: usize,
    tag: &str,
) -> Result<[f64; N], ObjError> {
    let mut out = [0.0; N];
    for slot in out.iter_mut() {
        let tok = tokens
            .next()
            .ok_or_else(|| malformed(line, format!("`{tag}` needs {N} coordinates")))?;
        *slot = f64::from_str(tok)
            .map_err(|_| malformed(line, format!("invalid number `{tok}`")))?;
    }
    Ok(out)
}

/// Converts a 1-based (or negative relative) OBJ index into a 0-based one.
fn resolve(tok: &str, count: usize, line: usize) -> Result<usize, ObjError> {
    let idx: i64 = tok
        .parse()
        .map_err(|_| malformed(line, format!("invalid index `{tok}`")))?;
    let resolved = match idx {
        0 => None,
        i if i > 0 => Some(i as usize - 1),
        i => count.checked_sub(i.unsigned_abs() as usize),
    };
    match resolved {
        Some(r) if r < count => Ok(r),
        _ => Err(malformed(line, format!("index {idx} out of range ({count} defined)"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primitives;
    use proptest::prelude::*;

    const TRI: &str = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf 1/1 2/2 3/3\n";

    #[test]
    fn smallest_valid_mesh() {
        let m: Mesh<f64> = parse_obj(TRI.as_bytes()).unwrap();
        assert_eq!(m.positions.len(), 3);
        assert_eq!(m.triangles.len(), 1);
        assert_eq!(m.triangle_uvs, vec![[0, 1, 2]]);
    }

    #[test]
    fn normals_and_comments_ignored() {
        let src = "# header\no thing\nv 0 0 0\nv 1 0 0\nv 0 1 0 # trailing\nvt 0 0\nvt 1 0\nvt 0 1\nvn 0 0 -1\nusemtl x\nf 1/1/1 2/2/1 3/3/1\n";
        let m: Mesh<f64> = parse_obj(src.as_bytes()).unwrap();
        assert_eq!(m.diagnostics.ignored_directives, 2);
        assert!((m.vertex_normals[0].z - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negative_indices_resolve_relative() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nf -3/-3 -2/-2 -1/-1\n";
        let m: Mesh<f64> = parse_obj(src.as_bytes()).unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn missing_uv_rejected() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
        assert!(matches!(parse_obj::<f64>(src.as_bytes()), Err(ObjError::MissingUv { line: 4 })));
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1//1 2//1 3//1\n";
        assert!(matches!(parse_obj::<f64>(src.as_bytes()), Err(ObjError::MissingUv { line: 5 })));
    }

    #[test]
    fn quads_rejected() {
        let src = format!("{TRI}v 1 1 0\nvt 1 1\nf 1/1 2/2 4/4 3/3\n");
        assert!(matches!(
            parse_obj::<f64>(src.as_bytes()),
            Err(ObjError::UnsupportedFace { line: 10, corners: 4 })
        ));
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let src = "v 0 0 0\nv 1 zero 0\n";
        match parse_obj::<f64>(src.as_bytes()) {
            Err(ObjError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf 1/1 2/1 9/1\n";
        assert!(matches!(parse_obj::<f64>(src.as_bytes()), Err(ObjError::Malformed { line: 5, .. })));
    }

    #[test]
    fn icosphere_counts() {
        let obj = write_obj(&primitives::icosphere::<f64>(3));
        let m: Mesh<f64> = parse_obj(obj.as_bytes()).unwrap();
        assert_eq!(m.positions.len(), 642);
        assert_eq!(m.triangles.len(), 1280);
    }

    proptest! {
        #[test]
        fn round_trip_nine_digits(coords in proptest::collection::vec(-1.0e3f64..1.0e3, 9), uvs in proptest::collection::vec(0.0f64..1.0, 6)) {
            let r = |x: f64| crate::scalar::round_sig9(x);
            let p: Vec<_> = coords.chunks(3).map(|c| Vec3::new(r(c[0]), r(c[1]), r(c[2]))).collect();
            let a = (p[1] - p[0]).cross(p[2] - p[0]).norm();
            prop_assume!(a > 1e-6);
            let uv: Vec<_> = uvs.chunks(2).map(|c| Vec2::new(r(c[0]), r(c[1]))).collect();
            let m = Mesh::new(p, vec![[0, 1, 2]], uv, vec![[0, 1, 2]]).unwrap();
            let back: Mesh<f64> = parse_obj(write_obj(&m).as_bytes()).unwrap();
            prop_assert_eq!(back.positions, m.positions);
            prop_assert_eq!(back.uv_coords, m.uv_coords);
        }
    }
}
