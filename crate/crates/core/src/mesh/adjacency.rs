use super::Mesh;

/// Vertex incidence maps derived from a mesh.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Adjacency {
    /// Incident triangles per vertex, ascending.
    pub vertex_to_faces: Vec<Vec<usize>>,
    /// Edge-connected neighbors per vertex, ascending.
    pub vertex_one_ring: Vec<Vec<usize>>,
    /// Distinct uv indices per vertex in first-use order (more than one across seams).
    pub vertex_to_uv_indices: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn build<T>(mesh: &Mesh<T>) -> Self {
        let n = mesh.positions.len();
        let mut faces = vec![Vec::new(); n];
        let mut ring = vec![Vec::new(); n];
        let mut uvs: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (f, (tri, tuv)) in mesh.triangles.iter().zip(&mesh.triangle_uvs).enumerate() {
            for k in 0..3 {
                let v = tri[k];
                faces[v].push(f);
                ring[v].push(tri[(k + 1) % 3]);
                ring[v].push(tri[(k + 2) % 3]);
                if !uvs[v].contains(&tuv[k]) {
                    uvs[v].push(tuv[k]);
                }
            }
        }
        for r in &mut ring {
            r.sort_unstable();
            r.dedup();
        }
        Adjacency { vertex_to_faces: faces, vertex_one_ring: ring, vertex_to_uv_indices: uvs }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_to_faces.len()
    }

    /// Vertices within `rings` edge hops of `v`, excluding `v`, in BFS order.
    pub fn k_ring(&self, v: usize, rings: usize) -> Vec<usize> {
        let mut seen = vec![v];
        let mut frontier = vec![v];
        let mut out = Vec::new();
        for _ in 0..rings {
            let mut next = Vec::new();
            for &u in &frontier {
                for &w in &self.vertex_one_ring[u] {
                    if !seen.contains(&w) {
                        seen.push(w);
                        next.push(w);
                        out.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{Vec2, Vec3};
    use crate::primitives;
    use proptest::prelude::*;

    #[test]
    fn quad_shared_vertices_have_two_faces() {
        let m = primitives::unit_quad::<f64>();
        let adj = Adjacency::build(&m);
        let [a, _, c] = m.triangles[0];
        assert_eq!(adj.vertex_to_faces[a].len(), 2);
        assert_eq!(adj.vertex_to_faces[c].len(), 2);
    }

    #[test]
    fn icosphere_rings_are_closed_cycles() {
        let m = primitives::icosphere::<f64>(3);
        let adj = Adjacency::build(&m);
        for v in 0..m.vertex_count() {
            let ring = &adj.vertex_one_ring[v];
            assert!(ring.len() == 5 || ring.len() == 6, "vertex {v} ring {}", ring.len());
            // every ring member has exactly two neighbors inside the ring, and the
            // ring is connected: walk it once
            for &u in ring {
                let inside = adj.vertex_one_ring[u].iter().filter(|w| ring.contains(w)).count();
                assert_eq!(inside, 2);
            }
            let mut prev = ring[0];
            let mut cur = *adj.vertex_one_ring[prev].iter().find(|w| ring.contains(w)).unwrap();
            let mut steps = 1;
            while cur != ring[0] {
                let next = *adj.vertex_one_ring[cur]
                    .iter()
                    .find(|&&w| ring.contains(&w) && w != prev)
                    .unwrap();
                prev = cur;
                cur = next;
                steps += 1;
                assert!(steps <= ring.len());
            }
            assert_eq!(steps, ring.len());
        }
    }

    #[test]
    fn seam_vertex_collects_both_uvs() {
        let m = Mesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(-1.0, 0.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![Vec2::new(0.1, 0.1), Vec2::new(0.5, 0.1), Vec2::new(0.1, 0.5), Vec2::new(0.9, 0.1), Vec2::new(0.9, 0.5), Vec2::new(0.6, 0.1)],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let adj = Adjacency::build(&m);
        assert_eq!(adj.vertex_to_uv_indices[0], vec![0, 3]);
        assert_eq!(adj.vertex_to_uv_indices[1], vec![1]);
    }

    #[test]
    fn k_ring_grows() {
        let m = primitives::icosphere::<f64>(2);
        let adj = Adjacency::build(&m);
        let r1 = adj.k_ring(0, 1);
        let r2 = adj.k_ring(0, 2);
        assert_eq!(r1.len(), adj.vertex_one_ring[0].len());
        assert!(r2.len() > r1.len());
        assert!(!r2.contains(&0));
    }

    proptest! {
        #[test]
        fn one_ring_is_symmetric(n in 4usize..30, seeds in proptest::collection::vec((0usize..1000, 0usize..1000, 0usize..1000), 1..60)) {
            // random triangle soup over n jittered points; degenerate picks are dropped by validation
            let positions: Vec<Vec3<f64>> = (0..n)
                .map(|i| {
                    let t = i as f64;
                    Vec3::new(t.sin() * 3.0, (t * 1.7).cos() * 2.0, (t * 0.37).sin() + t * 0.01)
                })
                .collect();
            let tris: Vec<[usize; 3]> = seeds
                .iter()
                .map(|&(a, b, c)| [a % n, b % n, c % n])
                .filter(|t| t[0] != t[1] && t[1] != t[2] && t[0] != t[2])
                .collect();
            prop_assume!(!tris.is_empty());
            let uvs = tris.clone();
            let uv_coords = vec![Vec2::new(0.5, 0.5); n];
            let Ok(m) = Mesh::new(positions, tris, uv_coords, uvs) else { return Ok(()); };
            let adj = Adjacency::build(&m);
            for (i, ring) in adj.vertex_one_ring.iter().enumerate() {
                for &j in ring {
                    prop_assert!(adj.vertex_one_ring[j].contains(&i));
                }
            }
            for tri in &m.triangles {
                for &v in tri {
                    prop_assert!(!adj.vertex_to_uv_indices[v].is_empty());
                }
            }
        }
    }
}
