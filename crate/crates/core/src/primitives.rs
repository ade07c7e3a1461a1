//! Procedural UV-mapped test meshes.

use std::collections::HashMap;

use crate::linalg::{Vec2, Vec3};
use crate::mesh::Mesh;
use crate::scalar::Real;

fn build<T: Real>(
    positions: Vec<[f64; 3]>,
    triangles: Vec<[usize; 3]>,
    uvs: Vec<[f64; 2]>,
    triangle_uvs: Vec<[usize; 3]>,
) -> Mesh<T> {
    Mesh::new(
        positions.into_iter().map(|p| Vec3::new(T::lit(p[0]), T::lit(p[1]), T::lit(p[2]))).collect(),
        triangles,
        uvs.into_iter().map(|u| Vec2::new(T::lit(u[0]), T::lit(u[1]))).collect(),
        triangle_uvs,
    )
    .expect("procedural mesh is valid")
}

/// Unit square in the z = 0 plane, counter-clockwise seen from +z, uv = (x, y).
pub fn unit_quad<T: Real>() -> Mesh<T> {
    let p = vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]];
    let uv = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let t = vec![[0, 1, 2], [0, 2, 3]];
    build(p, t.clone(), uv, t)
}

/// Height field over `[x0, x1] × [y0, y1]` with `nx × ny` quads.
///
/// uv is the normalized (x, y) position, so the uv map is an affine image of the plane.
pub fn height_field<T: Real>(
    nx: usize,
    ny: usize,
    x_range: (f64, f64),
    y_range: (f64, f64),
    height: impl Fn(f64, f64) -> f64,
) -> Mesh<T> {
    let mut p = Vec::new();
    let mut uv = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let s = i as f64 / nx as f64;
            let t = j as f64 / ny as f64;
            let x = x_range.0 + s * (x_range.1 - x_range.0);
            let y = y_range.0 + t * (y_range.1 - y_range.0);
            p.push([x, y, height(x, y)]);
            uv.push([s, t]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut tris = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    build(p, tris.clone(), uv, tris)
}

/// Flat grid in the z = 0 plane spanning `[0, size]²`.
pub fn flat_grid<T: Real>(n: usize, size: f64) -> Mesh<T> {
    height_field(n, n, (0.0, size), (0.0, size), |_, _| 0.0)
}

/// Open cylinder of the given radius around the z axis, `z ∈ [-h/2, h/2]`.
///
/// The uv seam at angle 0 duplicates one column of uv coordinates.
pub fn cylinder<T: Real>(radius: f64, height: f64, around: usize, along: usize) -> Mesh<T> {
    let mut p = Vec::new();
    let mut uv = Vec::new();
    for j in 0..=along {
        let t = j as f64 / along as f64;
        let z = -0.5 * height + t * height;
        for i in 0..around {
            let a = std::f64::consts::TAU * i as f64 / around as f64;
            p.push([radius * a.cos(), radius * a.sin(), z]);
        }
        for i in 0..=around {
            uv.push([i as f64 / around as f64, t]);
        }
    }
    let pid = |i: usize, j: usize| j * around + (i % around);
    let uid = |i: usize, j: usize| j * (around + 1) + i;
    let mut tris = Vec::new();
    let mut tuv = Vec::new();
    for j in 0..along {
        for i in 0..around {
            tris.push([pid(i, j), pid(i + 1, j), pid(i + 1, j + 1)]);
            tuv.push([uid(i, j), uid(i + 1, j), uid(i + 1, j + 1)]);
            tris.push([pid(i, j), pid(i + 1, j + 1), pid(i, j + 1)]);
            tuv.push([uid(i, j), uid(i + 1, j + 1), uid(i, j + 1)]);
        }
    }
    build(p, tris, uv, tuv)
}

/// Unit icosphere with `subdivisions` rounds of 4-way splitting and an
/// equirectangular uv atlas.
///
/// Triangles straddling the longitude seam get duplicated uv coordinates, so
/// seam vertices own two uv indices. `u` is rescaled so the atlas fits `[0, 1]`.
pub fn icosphere<T: Real>(subdivisions: u32) -> Mesh<T> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let unit = |v: [f64; 3]| {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    };
    verts.iter_mut().for_each(|v| *v = unit(*v));
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let (p, q) = (verts[a], verts[b]);
                verts.push(unit([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0]));
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }

    let base_uv: Vec<[f64; 2]> = verts
        .iter()
        .map(|p| {
            let u = 0.5 + p[0].atan2(p[2]) / std::f64::consts::TAU;
            let v = 0.5 + p[1].clamp(-1.0, 1.0).asin() / std::f64::consts::PI;
            [u, v]
        })
        .collect();
    let mut uvs = base_uv.clone();
    let mut shifted: HashMap<usize, usize> = HashMap::new();
    let mut tri_uvs = Vec::with_capacity(faces.len());
    for f in &faces {
        let us = f.map(|i| base_uv[i][0]);
        let span = us.iter().cloned().fold(f64::MIN, f64::max) - us.iter().cloned().fold(f64::MAX, f64::min);
        if span > 0.5 {
            tri_uvs.push(f.map(|i| {
                if base_uv[i][0] < 0.5 {
                    *shifted.entry(i).or_insert_with(|| {
                        uvs.push([base_uv[i][0] + 1.0, base_uv[i][1]]);
                        uvs.len() - 1
                    })
                } else {
                    i
                }
            }));
        } else {
            tri_uvs.push(*f);
        }
    }
    let max_u = uvs.iter().map(|u| u[0]).fold(1.0, f64::max);
    for uv in &mut uvs {
        uv[0] /= max_u;
    }
    build(verts, faces, uvs, tri_uvs)
}

/// Axis-aligned box centered at the origin with the given edge lengths.
pub fn cuboid<T: Real>(size: [f64; 3]) -> Mesh<T> {
    let h = size.map(|s| s / 2.0);
    let mut p = Vec::new();
    for k in 0..8 {
        p.push([
            if k & 1 == 0 { -h[0] } else { h[0] },
            if k & 2 == 0 { -h[1] } else { h[1] },
            if k & 4 == 0 { -h[2] } else { h[2] },
        ]);
    }
    // outward quads (a, b, c, d) counter-clockwise seen from outside
    let quads = [
        [0, 2, 3, 1], // -z
        [4, 5, 7, 6], // +z
        [0, 1, 5, 4], // -y
        [2, 6, 7, 3], // +y
        [0, 4, 6, 2], // -x
        [1, 3, 7, 5], // +x
    ];
    let mut tris = Vec::new();
    let mut uv = Vec::new();
    let mut tuv = Vec::new();
    for (qi, q) in quads.iter().enumerate() {
        let (ox, oy) = ((qi % 3) as f64 / 3.0, (qi / 3) as f64 / 2.0);
        let base = uv.len();
        for c in [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] {
            uv.push([ox + (0.02 + 0.96 * c[0]) / 3.0, oy + (0.02 + 0.96 * c[1]) / 2.0]);
        }
        tris.push([q[0], q[1], q[2]]);
        tuv.push([base, base + 1, base + 2]);
        tris.push([q[0], q[2], q[3]]);
        tuv.push([base, base + 2, base + 3]);
    }
    build(p, tris, uv, tuv)
}

/// Regular tetrahedron inscribed in the unit sphere.
pub fn tetrahedron<T: Real>() -> Mesh<T> {
    let s = 1.0 / 3f64.sqrt();
    let p = vec![[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]];
    let tris = vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]];
    let uv = vec![[0.1, 0.1], [0.9, 0.1], [0.5, 0.9], [0.5, 0.4]];
    build(p, tris.clone(), uv, tris)
}
