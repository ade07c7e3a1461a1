//! RGB textures and the differentiable image primitives the rewards share.
//!
//! Every forward function here has a matching backward that scatters an
//! upstream gradient onto texels. Backwards accumulate into a caller-owned
//! [`GradientMap`] in a fixed order, so results are bit-reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::atlas::uv_to_texel;
use crate::linalg::Vec2;
use crate::scalar::Real;

pub const LUMA: [f64; 3] = [0.299, 0.587, 0.114];
/// Softening inside the gradient-magnitude square root.
pub const GMAG_EPS: f64 = 1e-8;

/// H×W×3 image, row-major from the top row, channels interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Texture<T> {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<T>,
}

/// Gradient of a scalar with respect to every texel channel.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMap<T> {
    pub width: usize,
    pub height: usize,
    pub drgb: Vec<T>,
}

impl<T: Real> Texture<T> {
    pub fn filled(width: usize, height: usize, rgb: [T; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Texture { width, height, rgb: data }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [T; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for row in 0..height {
            for col in 0..width {
                data.extend_from_slice(&f(col, row));
            }
        }
        Texture { width, height, rgb: data }
    }

    /// Uniform noise in `[0, 1]` from a seeded ChaCha stream.
    pub fn noise(width: usize, height: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rgb = (0..width * height * 3).map(|_| T::lit(rng.random::<f64>())).collect();
        Texture { width, height, rgb }
    }

    pub fn texel_count(&self) -> usize {
        self.width * self.height
    }

    #[inline]
    pub fn index(&self, col: usize, row: usize) -> usize {
        (row * self.width + col) * 3
    }

    pub fn get(&self, col: usize, row: usize) -> [T; 3] {
        let i = self.index(col, row);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    pub fn set(&mut self, col: usize, row: usize, rgb: [T; 3]) {
        let i = self.index(col, row);
        self.rgb[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn clamp_unit(&mut self) {
        for x in &mut self.rgb {
            *x = x.max(T::zero()).min(T::one());
        }
    }

    pub fn luminance(&self) -> Vec<T> {
        let w = LUMA.map(T::lit);
        self.rgb.chunks_exact(3).map(|c| c[0] * w[0] + c[1] * w[1] + c[2] * w[2]).collect()
    }

    pub fn zero_gradient(&self) -> GradientMap<T> {
        GradientMap::zeros(self.width, self.height)
    }
}

impl<T: Real> GradientMap<T> {
    pub fn zeros(width: usize, height: usize) -> Self {
        GradientMap { width, height, drgb: vec![T::zero(); width * height * 3] }
    }

    pub fn max_abs(&self) -> T {
        self.drgb.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.drgb.iter().all(|x| x.is_finite())
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &Self, scale: T) {
        for (a, b) in self.drgb.iter_mut().zip(&other.drgb) {
            *a += *b * scale;
        }
    }

    pub fn scale(&mut self, s: T) {
        for a in &mut self.drgb {
            *a *= s;
        }
    }
}

/// The four texels and weights behind one bilinear sample.
#[derive(Debug, Clone, Copy)]
pub struct BilinearStencil<T> {
    /// Texel indices (`row * W + col`).
    pub texels: [usize; 4],
    pub weights: [T; 4],
}

impl<T: Real> BilinearStencil<T> {
    /// Stencil for `uv`, clamped to the texture square. Requires `W, H ≥ 2`.
    pub fn new(uv: Vec2<T>, width: usize, height: usize) -> Self {
        let uv = Vec2::new(uv.x.max(T::zero()).min(T::one()), uv.y.max(T::zero()).min(T::one()));
        let (x, y) = uv_to_texel(uv, width, height);
        // uv → texel round-off must not pull an exact texel center onto its neighbor
        let snap = |t: T| {
            let r = t.round();
            if (t - r).abs() <= T::lit(1e-9) { r } else { t }
        };
        let (x, y) = (snap(x), snap(y));
        let x0 =x.floor().to_f64_lossy().clamp(0.0, (width - 2) as f64) as usize;
        let y0 = y.floor().to_f64_lossy().clamp(0.0, (height - 2) as f64) as usize;
        let fx = x - T::from_usize_lossy(x0);
        let fy = y - T::from_usize_lossy(y0);
        let one = T::one();
        BilinearStencil {
            texels: [y0 * width + x0, y0 * width + x0 + 1, (y0 + 1) * width + x0, (y0 + 1) * width + x0 + 1],
            weights: [(one - fx) * (one - fy), fx * (one - fy), (one - fx) * fy, fx * fy],
        }
    }

    /// Interpolates a per-texel scalar field.
    pub fn sample(&self, field: &[T]) -> T {
        (0..4).map(|k| field[self.texels[k]] * self.weights[k]).sum()
    }

    /// Scatters `upstream` into a per-texel scalar gradient.
    pub fn scatter(&self, grad: &mut [T], upstream: T) {
        for k in 0..4 {
            grad[self.texels[k]] += upstream * self.weights[k];
        }
    }
}

/// Bilinear RGB sample at `uv` (clamped-edge addressing).
pub fn bilinear_sample<T: Real>(tex: &Texture<T>, uv: Vec2<T>) -> [T; 3] {
    let st = BilinearStencil::new(uv, tex.width, tex.height);
    let mut out = [T::zero(); 3];
    for k in 0..4 {
        let i = st.texels[k] * 3;
        for (c, o) in out.iter_mut().enumerate() {
            *o += tex.rgb[i + c] * st.weights[k];
        }
    }
    out
}

/// Backward of [`bilinear_sample`]: adds `upstream` (∂loss/∂sample) to `grad`.
pub fn bilinear_backward<T: Real>(grad: &mut GradientMap<T>, uv: Vec2<T>, upstream: [T; 3]) {
    let st = BilinearStencil::new(uv, grad.width, grad.height);
    for k in 0..4 {
        let i = st.texels[k] * 3;
        for (c, u) in upstream.iter().enumerate() {
            grad.drgb[i + c] += *u * st.weights[k];
        }
    }
}

/// Per-texel derivatives of a texture.
#[derive(Debug, Clone)]
pub struct TextureGradient<T> {
    pub width: usize,
    pub height: usize,
    /// Per-channel central differences along columns, `(T[c+1] − T[c−1]) / 2`, interleaved RGB.
    pub dx: Vec<T>,
    /// Per-channel central differences along rows (downward), interleaved RGB.
    pub dy: Vec<T>,
    /// `sqrt(Σ_ch dx² + dy² + ε²)` per texel.
    pub gmag: Vec<T>,
    /// Luminance derivative with respect to `u`.
    pub gx: Vec<T>,
    /// Luminance derivative with respect to `v` (upward).
    pub gy: Vec<T>,
}

/// Central differences with replicate borders: neighbor indices along one axis.
#[inline]
fn neighbors(i: usize, n: usize) -> (usize, usize) {
    (i.saturating_sub(1), (i + 1).min(n - 1))
}

/// Texture derivatives: all-channel gradient magnitude and the luminance gradient vector.
///
/// `gmag` is in per-texel units. `(gx, gy)` are scaled to uv units
/// (`∂L/∂u = (W − 1)·∂L/∂col`, `∂L/∂v = −(H − 1)·∂L/∂row`) so they can be
/// compared with uv-space directions.
pub fn texture_gradient<T: Real>(tex: &Texture<T>) -> TextureGradient<T> {
    let (w, h) = (tex.width, tex.height);
    let half = T::lit(0.5);
    let eps2 = T::lit(GMAG_EPS * GMAG_EPS);
    let luma = LUMA.map(T::lit);
    let su = T::from_usize_lossy(w - 1);
    let sv = T::from_usize_lossy(h - 1);
    let mut dx = vec![T::zero(); w * h * 3];
    let mut dy = vec![T::zero(); w * h * 3];
    let mut gmag = vec![T::zero(); w * h];
    let mut gx = vec![T::zero(); w * h];
    let mut gy = vec![T::zero(); w * h];
    for row in 0..h {
        let (up, down) = neighbors(row, h);
        for col in 0..w {
            let (left, right) = neighbors(col, w);
            let p = row * w + col;
            let mut s = eps2;
            let mut lx = T::zero();
            let mut ly = T::zero();
            for c in 0..3 {
                let ddx = (tex.rgb[(row * w + right) * 3 + c] - tex.rgb[(row * w + left) * 3 + c]) * half;
                let ddy = (tex.rgb[(down * w + col) * 3 + c] - tex.rgb[(up * w + col) * 3 + c]) * half;
                dx[p * 3 + c] = ddx;
                dy[p * 3 + c] = ddy;
                s += ddx * ddx + ddy * ddy;
                lx += luma[c] * ddx;
                ly += luma[c] * ddy;
            }
            gmag[p] = s.sqrt();
            gx[p] = lx * su;
            gy[p] = -ly * sv;
        }
    }
    TextureGradient { width: w, height: h, dx, dy, gmag, gx, gy }
}

/// Backward of the per-texel central-difference stencil for one channel pair.
///
/// `up_dx[p*3+c]`, `up_dy[p*3+c]` are upstream gradients with respect to
/// `dx` and `dy`; the result is added to `grad`.
pub fn difference_backward<T: Real>(grad: &mut GradientMap<T>, up_dx: &[T], up_dy: &[T]) {
    let (w, h) = (grad.width, grad.height);
    let half = T::lit(0.5);
    for row in 0..h {
        let (up, down) = neighbors(row, h);
        for col in 0..w {
            let (left, right) = neighbors(col, w);
            let p = row * w + col;
            for c in 0..3 {
                let gxv = up_dx[p * 3 + c] * half;
                grad.drgb[(row * w + right) * 3 + c] += gxv;
                grad.drgb[(row * w + left) * 3 + c] -= gxv;
                let gyv = up_dy[p * 3 + c] * half;
                grad.drgb[(down * w + col) * 3 + c] += gyv;
                grad.drgb[(up * w + col) * 3 + c] -= gyv;
            }
        }
    }
}

/// Backward of `gmag`: `upstream[p]` is ∂loss/∂gmag at texel `p`.
pub fn gmag_backward<T: Real>(grad: &mut GradientMap<T>, tg: &TextureGradient<T>, upstream: &[T]) {
    let n = tg.width * tg.height;
    let mut up_dx = vec![T::zero(); n * 3];
    let mut up_dy = vec![T::zero(); n * 3];
    for p in 0..n {
        if upstream[p] == T::zero() {
            continue;
        }
        let s = upstream[p] / tg.gmag[p];
        for c in 0..3 {
            up_dx[p * 3 + c] = s * tg.dx[p * 3 + c];
            up_dy[p * 3 + c] = s * tg.dy[p * 3 + c];
        }
    }
    difference_backward(grad, &up_dx, &up_dy);
}

/// Backward of the luminance gradient: `up_gx[p]`, `up_gy[p]` are ∂loss/∂gx, ∂loss/∂gy.
pub fn luminance_gradient_backward<T: Real>(grad: &mut GradientMap<T>, up_gx: &[T], up_gy: &[T]) {
    let (w, h) = (grad.width, grad.height);
    let luma = LUMA.map(T::lit);
    let su = T::from_usize_lossy(w - 1);
    let sv = T::from_usize_lossy(h - 1);
    let mut up_dx = vec![T::zero(); w * h * 3];
    let mut up_dy = vec![T::zero(); w * h * 3];
    for p in 0..w * h {
        for c in 0..3 {
            up_dx[p * 3 + c] = up_gx[p] * su * luma[c];
            up_dy[p * 3 + c] = -up_gy[p] * sv * luma[c];
        }
    }
    difference_backward(grad, &up_dx, &up_dy);
}

/// Opponent-channel statistics behind the colorfulness score.
#[derive(Debug, Clone, Copy)]
pub struct ColorStats<T> {
    pub mean_rg: T,
    pub mean_yb: T,
    pub std_rg: T,
    pub std_yb: T,
}

pub fn color_stats<T: Real>(tex: &Texture<T>) -> ColorStats<T> {
    let n = T::from_usize_lossy(tex.texel_count());
    let half = T::lit(0.5);
    let rg = |c: &[T]| c[0] - c[1];
    let yb = |c: &[T]| (c[0] + c[1]) * half - c[2];
    let mean_rg = tex.rgb.chunks_exact(3).map(rg).sum::<T>() / n;
    let mean_yb = tex.rgb.chunks_exact(3).map(yb).sum::<T>() / n;
    let var_rg = tex.rgb.chunks_exact(3).map(|c| (rg(c) - mean_rg).powi(2)).sum::<T>() / n;
    let var_yb = tex.rgb.chunks_exact(3).map(|c| (yb(c) - mean_yb).powi(2)).sum::<T>() / n;
    ColorStats { mean_rg, mean_yb, std_rg: var_rg.sqrt(), std_yb: var_yb.sqrt() }
}

/// `σ_rg + σ_yb + 0.3 (|μ_rg| + |μ_yb|)` with population standard deviations,
/// where `rg = R − G` and `yb = (R + G)/2 − B`.
pub fn colorfulness<T: Real>(tex: &Texture<T>) -> T {
    let s = color_stats(tex);
    s.std_rg + s.std_yb + T::lit(0.3) * (s.mean_rg.abs() + s.mean_yb.abs())
}

/// Adds `scale · ∂colorfulness/∂texture` to `grad`.
///
/// Uses subgradient 0 for `|μ|` at `μ = 0` and for `σ` at `σ = 0`.
pub fn colorfulness_backward<T: Real>(tex: &Texture<T>, grad: &mut GradientMap<T>, scale: T) {
    let s = color_stats(tex);
    let n = T::from_usize_lossy(tex.texel_count());
    let half = T::lit(0.5);
    let sign = |x: T| if x > T::zero() { T::one() } else if x < T::zero() { -T::one() } else { T::zero() };
    let k = T::lit(0.3);
    let d_mu_rg = k * sign(s.mean_rg) / n;
    let d_mu_yb = k * sign(s.mean_yb) / n;
    let inv_rg = if s.std_rg > T::zero() { T::one() / (n * s.std_rg) } else { T::zero() };
    let inv_yb = if s.std_yb > T::zero() { T::one() / (n * s.std_yb) } else { T::zero() };
    for (c, g) in tex.rgb.chunks_exact(3).zip(grad.drgb.chunks_exact_mut(3)) {
        let rg = c[0] - c[1];
        let yb = (c[0] + c[1]) * half - c[2];
        let d_rg = (rg - s.mean_rg) * inv_rg + d_mu_rg;
        let d_yb = (yb - s.mean_yb) * inv_yb + d_mu_yb;
        g[0] += scale * (d_rg + half * d_yb);
        g[1] += scale * (-d_rg + half * d_yb);
        g[2] += scale * (-d_yb);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Central finite differences of `f` over every texel channel.
    fn finite_diff(tex: &Texture<f64>, eps: f64, f: impl Fn(&Texture<f64>) -> f64) -> Vec<f64> {
        let mut t = tex.clone();
        (0..tex.rgb.len())
            .map(|i| {
                let x = t.rgb[i];
                t.rgb[i] = x + eps;
                let fp = f(&t);
                t.rgb[i] = x - eps;
                let fm = f(&t);
                t.rgb[i] = x;
                (fp - fm) / (2.0 * eps)
            })
            .collect()
    }

    fn assert_grad_close(analytic: &[f64], numeric: &[f64], rel: f64) {
        for (i, (a, n)) in analytic.iter().zip(numeric).enumerate() {
            if a.abs() > 1e-8 {
                assert!((a - n).abs() <= rel * a.abs(), "entry {i}: analytic {a} numeric {n}");
            } else {
                assert!((a - n).abs() < 1e-8, "entry {i}: analytic {a} numeric {n}");
            }
        }
    }

    #[test]
    fn bilinear_exact_texel_and_midpoint() {
        let tex = Texture::<f64>::noise(5, 4, 1);
        assert_eq!(bilinear_sample(&tex, crate::atlas::texel_uv(2, 1, 5, 4)), tex.get(2, 1));
        let a = crate::atlas::texel_uv::<f64>(2, 1, 5, 4);
        let b = crate::atlas::texel_uv::<f64>(3, 1, 5, 4);
        let mid = bilinear_sample(&tex, (a + b) * 0.5);
        for c in 0..3 {
            assert!((mid[c] - 0.5 * (tex.get(2, 1)[c] + tex.get(3, 1)[c])).abs() < 1e-15);
        }
        // outside the square clamps to the edge
        assert_eq!(bilinear_sample(&tex, Vec2::new(-0.5, 2.0)), tex.get(0, 0));
    }

    #[test]
    fn bilinear_backward_matches_finite_differences() {
        let tex = Texture::<f64>::noise(6, 5, 2);
        let uv = Vec2::new(0.37, 0.61);
        let up = [0.3, -1.2, 0.7];
        let mut g = tex.zero_gradient();
        bilinear_backward(&mut g, uv, up);
        let num = finite_diff(&tex, 1e-4, |t| {
            let s = bilinear_sample(t, uv);
            s[0] * up[0] + s[1] * up[1] + s[2] * up[2]
        });
        let max_err = g.drgb.iter().zip(&num).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(max_err < 1e-6);
        assert_eq!(g.drgb.iter().filter(|x| **x != 0.0).count(), 12);
    }

    proptest! {
        #[test]
        fn bilinear_is_lipschitz(u in 0.0f64..1.0, v in 0.0f64..1.0, du in -0.05f64..0.05, dv in -0.05f64..0.05) {
            let tex = Texture::<f64>::noise(7, 6, 5);
            let a = bilinear_sample(&tex, Vec2::new(u, v));
            let b = bilinear_sample(&tex, Vec2::new((u + du).clamp(0.0, 1.0), (v + dv).clamp(0.0, 1.0)));
            // max adjacent-texel difference bounds the slope in texel units
            let mut max_diff: f64 = 0.0;
            for row in 0..6 { for col in 0..7 { for c in 0..3 {
                if col + 1 < 7 { max_diff = max_diff.max((tex.get(col + 1, row)[c] - tex.get(col, row)[c]).abs()); }
                if row + 1 < 6 { max_diff = max_diff.max((tex.get(col, row + 1)[c] - tex.get(col, row)[c]).abs()); }
            }}}
            let bound = max_diff * (6.0 * du.abs() + 5.0 * dv.abs()) + 1e-12;
            for c in 0..3 {
                prop_assert!((a[c] - b[c]).abs() <= bound);
            }
        }
    }

    #[test]
    fn constant_texture_has_no_gradient() {
        let tg = texture_gradient(&Texture::<f64>::filled(6, 6, [0.3, 0.5, 0.9]));
        assert!(tg.gmag.iter().all(|g| g.abs() <= GMAG_EPS));
        assert!(tg.gx.iter().chain(&tg.gy).all(|g| *g == 0.0));
    }

    #[test]
    fn ramp_gradient_magnitude() {
        let w = 9;
        let tex = Texture::<f64>::from_fn(w, 5, |c, _| [c as f64 / (w - 1) as f64, 0.0, 0.0]);
        let tg = texture_gradient(&tex);
        for row in 0..5 {
            for col in 1..w - 1 {
                assert!((tg.gmag[row * w + col] - 1.0 / (w - 1) as f64).abs() < 1e-9);
            }
        }
        // luminance gradient in uv units: dL/du = 0.299
        assert!((tg.gx[2 * w + 4] - 0.299).abs() < 1e-12);
        assert!(tg.gy[2 * w + 4].abs() < 1e-15);
    }

    #[test]
    fn upward_v_gives_positive_gy() {
        // brighter toward the top row = increasing v
        let tex = Texture::<f64>::from_fn(5, 5, |_, r| {
            let x = 1.0 - r as f64 / 4.0;
            [x, x, x]
        });
        let tg = texture_gradient(&tex);
        assert!((tg.gy[12] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gmag_backward_matches_finite_differences() {
        let tex = Texture::<f64>::noise(8, 8, 11);
        let tg = texture_gradient(&tex);
        let mut g = tex.zero_gradient();
        gmag_backward(&mut g, &tg, &vec![1.0; 64]);
        let num = finite_diff(&tex, 1e-4, |t| texture_gradient(t).gmag.iter().sum());
        assert_grad_close(&g.drgb, &num, 1e-4);
    }

    #[test]
    fn luminance_gradient_backward_matches_finite_differences() {
        let tex = Texture::<f64>::noise(7, 6, 12);
        let wx: Vec<f64> = (0..42).map(|i| (i as f64).sin()).collect();
        let wy: Vec<f64> = (0..42).map(|i| (i as f64 * 0.7).cos()).collect();
        let mut g = tex.zero_gradient();
        luminance_gradient_backward(&mut g, &wx, &wy);
        let num = finite_diff(&tex, 1e-4, |t| {
            let tg = texture_gradient(t);
            (0..42).map(|p| tg.gx[p] * wx[p] + tg.gy[p] * wy[p]).sum()
        });
        assert_grad_close(&g.drgb, &num, 1e-4);
    }

    #[test]
    fn gradient_is_translation_equivariant_inside() {
        let tex = Texture::<f64>::noise(10, 10, 4);
        let shifted = Texture::from_fn(10, 10, |c, r| tex.get((c + 1).min(9), r));
        let a = texture_gradient(&tex);
        let b = texture_gradient(&shifted);
        for r in 1..9 {
            for c in 1..7 {
                assert_eq!(b.gmag[r * 10 + c], a.gmag[r * 10 + c + 1]);
            }
        }
    }

    #[test]
    fn colorfulness_examples() {
        assert_eq!(colorfulness(&Texture::<f64>::filled(4, 4, [0.4, 0.4, 0.4])), 0.0);
        // uniform red: sigma = 0, mu_rg = 1, mu_yb = 0.5
        let red = colorfulness(&Texture::<f64>::filled(4, 4, [1.0, 0.0, 0.0]));
        assert!((red - 0.45).abs() < 1e-15);
        let checker = Texture::<f64>::from_fn(4, 4, |c, r| if (c + r) % 2 == 0 { [1.0; 3] } else { [0.0; 3] });
        assert_eq!(colorfulness(&checker), 0.0);
    }

    #[test]
    fn colorfulness_backward_matches_finite_differences() {
        for seed in 0..3 {
            let tex = Texture::<f64>::noise(8, 8, 100 + seed);
            let mut g = tex.zero_gradient();
            colorfulness_backward(&tex, &mut g, 1.0);
            let num = finite_diff(&tex, 1e-4, colorfulness);
            assert_grad_close(&g.drgb, &num, 1e-4);
        }
    }

    #[test]
    fn colorfulness_is_permutation_invariant() {
        let tex = Texture::<f64>::noise(6, 6, 9);
        let mut perm = tex.clone();
        let n = perm.texel_count();
        for i in 0..n / 2 {
            let (a, b) = (i * 3, (n - 1 - i) * 3);
            for c in 0..3 {
                perm.rgb.swap(a + c, b + c);
            }
        }
        assert!((colorfulness(&tex) - colorfulness(&perm)).abs() < 1e-14);
    }
}
