//! Fixed-size vectors and matrices used by the geometry modules.

use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Vec2<T> {
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn perp_dot(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > T::zero() && n.is_finite()).then(|| self / n)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn cast<U: Real>(self) -> Vec2<U> {
        Vec2::new(U::lit(self.x.to_f64_lossy()), U::lit(self.y.to_f64_lossy()))
    }
}

impl<T: Real> Vec3<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn from_array(a: [T; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm_squared(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.norm_squared().sqrt()
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > T::zero() && n.is_finite()).then(|| self / n)
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    pub fn min_elem(self, o: Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max_elem(self, o: Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Some unit vector orthogonal to `self` (which must be non-zero).
    pub fn any_orthogonal(self) -> Self {
        let a = Vec3::new(self.x.abs(), self.y.abs(), self.z.abs());
        let axis = if a.x <= a.y && a.x <= a.z {
            Vec3::new(T::one(), T::zero(), T::zero())
        } else if a.y <= a.z {
            Vec3::new(T::zero(), T::one(), T::zero())
        } else {
            Vec3::new(T::zero(), T::zero(), T::one())
        };
        let v = self.cross(axis);
        v / v.norm()
    }

    pub fn cast<U: Real>(self) -> Vec3<U> {
        Vec3::new(
            U::lit(self.x.to_f64_lossy()),
            U::lit(self.y.to_f64_lossy()),
            U::lit(self.z.to_f64_lossy()),
        )
    }
}

macro_rules! impl_vec_ops {
    ($V:ident { $($f:ident),+ }) => {
        impl<T: Real> Add for $V<T> {
            type Output = Self;
            fn add(self, o: Self) -> Self { Self { $($f: self.$f + o.$f),+ } }
        }
        impl<T: Real> Sub for $V<T> {
            type Output = Self;
            fn sub(self, o: Self) -> Self { Self { $($f: self.$f - o.$f),+ } }
        }
        impl<T: Real> Neg for $V<T> {
            type Output = Self;
            fn neg(self) -> Self { Self { $($f: -self.$f),+ } }
        }
        impl<T: Real> Mul<T> for $V<T> {
            type Output = Self;
            fn mul(self, s: T) -> Self { Self { $($f: self.$f * s),+ } }
        }
        impl<T: Real> Div<T> for $V<T> {
            type Output = Self;
            fn div(self, s: T) -> Self { Self { $($f: self.$f / s),+ } }
        }
        impl<T: Real> AddAssign for $V<T> {
            fn add_assign(&mut self, o: Self) { $(self.$f += o.$f;)+ }
        }
        impl<T: Real> SubAssign for $V<T> {
            fn sub_assign(&mut self, o: Self) { $(self.$f -= o.$f;)+ }
        }
    };
}

impl_vec_ops!(Vec2 { x, y });
impl_vec_ops!(Vec3 { x, y, z });

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat3<T> {
    pub m: [[T; 3]; 3],
}

impl<T: Real> Mat3<T> {
    pub fn zero() -> Self {
        Self { m: [[T::zero(); 3]; 3] }
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.m[i][i] = T::one();
        }
        m
    }

    pub fn from_columns(c0: Vec3<T>, c1: Vec3<T>, c2: Vec3<T>) -> Self {
        Self {
            m: [[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]],
        }
    }

    pub fn column(&self, j: usize) -> Vec3<T> {
        Vec3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                t.m[i][j] = self.m[j][i];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: Vec3<T>) -> Vec3<T> {
        let r = |i: usize| self.m[i][0] * v.x + self.m[i][1] * v.y + self.m[i][2] * v.z;
        Vec3::new(r(0), r(1), r(2))
    }

    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut p = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                p.m[i][j] = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        p
    }

    pub fn determinant(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Rotation taking unit vector `from` onto unit vector `to` (Rodrigues).
    pub fn rotation_between(from: Vec3<T>, to: Vec3<T>) -> Self {
        let c = from.dot(to);
        let axis = from.cross(to);
        let s = axis.norm();
        if s <= T::lit(1e-15) {
            if c > T::zero() {
                return Self::identity();
            }
            // half turn about any axis orthogonal to `from`
            let a = from.any_orthogonal();
            let mut r = Self::identity();
            let two = T::lit(2.0);
            let av = a.to_array();
            for i in 0..3 {
                for j in 0..3 {
                    r.m[i][j] = two * av[i] * av[j] - if i == j { T::one() } else { T::zero() };
                }
            }
            return r;
        }
        let k = axis / s;
        let kx = Self {
            m: [
                [T::zero(), -k.z, k.y],
                [k.z, T::zero(), -k.x],
                [-k.y, k.x, T::zero()],
            ],
        };
        let kx2 = kx.mul_mat(&kx);
        let mut r = Self::identity();
        for i in 0..3 {
            for j in 0..3 {
                r.m[i][j] += s * kx.m[i][j] + (T::one() - c) * kx2.m[i][j];
            }
        }
        r
    }
}

impl<T> Index<(usize, usize)> for Mat3<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.m[i][j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat3<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.m[i][j]
    }
}

/// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order with the matching unit eigenvectors.
pub fn symmetric_eigen3<T: Real>(a: &Mat3<T>) -> ([T; 3], [Vec3<T>; 3]) {
    let mut m = a.m;
    let mut v = Mat3::<T>::identity().m;
    for _sweep in 0..64 {
        let off = m[0][1].abs() + m[0][2].abs() + m[1][2].abs();
        let diag = m[0][0].abs() + m[1][1].abs() + m[2][2].abs();
        if off <= T::epsilon() * T::lit(1e-3) * diag || off == T::zero() {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if m[p][q] == T::zero() {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (T::lit(2.0) * m[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
            let c = T::one() / (t * t + T::one()).sqrt();
            let s = t * c;
            for k in 0..3 {
                let mkp = m[k][p];
                let mkq = m[k][q];
                m[k][p] = c * mkp - s * mkq;
                m[k][q] = s * mkp + c * mkq;
            }
            for k in 0..3 {
                let mpk = m[p][k];
                let mqk = m[q][k];
                m[p][k] = c * mpk - s * mqk;
                m[q][k] = s * mpk + c * mqk;
            }
            for row in v.iter_mut() {
                let vkp = row[p];
                let vkq = row[q];
                row[p] = c * vkp - s * vkq;
                row[q] = s * vkp + c * vkq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m[i][i].partial_cmp(&m[j][j]).unwrap_or(std::cmp::Ordering::Equal));
    let vals = order.map(|i| m[i][i]);
    let vecs = order.map(|j| Vec3::new(v[0][j], v[1][j], v[2][j]));
    (vals, vecs)
}

/// Eigen-decomposition of the symmetric 2x2 matrix `[[a, b], [b, c]]`.
///
/// Returns `(lo, hi, dir_lo, dir_hi)` with unit, mutually orthogonal directions.
pub fn symmetric_eigen2<T: Real>(a: T, b: T, c: T) -> (T, T, Vec2<T>, Vec2<T>) {
    let half = T::lit(0.5);
    let mean = (a + c) * half;
    let r = ((a - c) * half).hypot(b);
    let lo = mean - r;
    let hi = mean + r;
    if r <= T::epsilon() * (mean.abs() + T::one()) {
        return (lo, hi, Vec2::new(T::one(), T::zero()), Vec2::new(T::zero(), T::one()));
    }
    // eigenvector of `hi`: pick the better-conditioned of the two row forms
    let d_hi = if a >= c {
        Vec2::new(hi - c, b)
    } else {
        Vec2::new(b, hi - a)
    };
    let d_hi = d_hi.normalized().unwrap_or(Vec2::new(T::one(), T::zero()));
    let d_lo = Vec2::new(-d_hi.y, d_hi.x);
    (lo, hi, d_lo, d_hi)
}

/// Solves the 3x3 linear system `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve3<T: Real>(a: [[T; 3]; 3], b: [T; 3]) -> Option<[T; 3]> {
    let mut m = [[T::zero(); 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(T::zero(), |acc, x| acc.max(x.abs()));
    if scale == T::zero() {
        return None;
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        if m[piv][col].abs() <= scale * T::epsilon() * T::lit(16.0) {
            return None;
        }
        m.swap(col, piv);
        for row in 0..3 {
            if row != col {
                let f = m[row][col] / m[col][col];
                for k in col..4 {
                    let t = m[col][k];
                    m[row][k] -= f * t;
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen3_diagonal_and_rotated() {
        let a = Mat3 { m: [[4.0f64, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.25]] };
        let (vals, vecs) = symmetric_eigen3(&a);
        assert_eq!(vals, [0.25, 1.0, 4.0]);
        assert!((vecs[0].z.abs() - 1.0).abs() < 1e-15);

        let r = Mat3::rotation_between(
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 2.0, 3.0).normalized().unwrap(),
        );
        let b = r.mul_mat(&a).mul_mat(&r.transpose());
        let (vals, vecs) = symmetric_eigen3(&b);
        for (k, want) in [0.25, 1.0, 4.0].iter().enumerate() {
            assert!((vals[k] - want).abs() < 1e-12);
            let av = b.mul_vec(vecs[k]);
            assert!((av - vecs[k] * vals[k]).norm() < 1e-12);
        }
        assert!(vecs[0].dot(vecs[1]).abs() < 1e-12);
    }

    #[test]
    fn eigen2_orders_and_orthogonal() {
        let (lo, hi, dlo, dhi) = symmetric_eigen2(1.0f64, 2.0, -3.0);
        assert!(lo <= hi);
        assert!(dlo.dot(dhi).abs() < 1e-15);
        // A d = lambda d
        let apply = |d: Vec2<f64>| Vec2::new(d.x + 2.0 * d.y, 2.0 * d.x - 3.0 * d.y);
        assert!((apply(dhi) - dhi * hi).norm() < 1e-12);
        assert!((apply(dlo) - dlo * lo).norm() < 1e-12);
    }

    #[test]
    fn solve3_matches_known_solution() {
        let a = [[2.0f64, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        let x = solve3(a, [3.0, 5.0, 5.0]).unwrap();
        for (xi, want) in x.iter().zip([1.0, 1.0, 1.0]) {
            assert!((xi - want).abs() < 1e-14);
        }
        assert!(solve3([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 0.0, 1.0]], [1.0, 2.0, 3.0]).is_none());
    }

    #[test]
    fn rotation_between_maps_vectors() {
        let from = Vec3::new(0.0f64, 0.0, 1.0);
        for to in [Vec3::new(0.0, 0.0, -1.0), Vec3::new(0.6, 0.0, 0.8), from] {
            let r = Mat3::rotation_between(from, to);
            assert!((r.mul_vec(from) - to).norm() < 1e-14);
            assert!((r.determinant() - 1.0).abs() < 1e-14);
        }
    }
}
