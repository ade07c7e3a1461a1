//! View-direction cosine and the generate / refine / keep partition of a view.
//!
//! Hard masks: `generate = 1[c < 0.1]`, `refine = 1[v > v_old]·¬generate`,
//! `keep = ¬generate·¬refine`. Soft masks replace each indicator with a
//! sigmoid of steepness `k`:
//!
//! ```text
//! m_generate = 1 − σ_k(c − 0.1)
//! m_refine   = σ_k(v − v_old) · (1 − m_generate)
//! m_keep     = (1 − m_generate) · (1 − m_refine)
//! ```
//!
//! The soft masks sum to `1 + σ_k(v − v_old)·m_g·(1 − m_g)`, which is 1 away
//! from the coverage threshold and tends to the hard partition as `k` grows.

use rayon::prelude::*;

use crate::linalg::Vec3;
use crate::scalar::{logistic, Real};

/// Coverage below this counts as never painted.
pub const COVERAGE_THRESHOLD: f64 = 0.1;
pub const DEFAULT_STEEPNESS: f64 = 100.0;

/// Per-pixel render buffers for one view.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewBuffers<T> {
    pub width: usize,
    pub height: usize,
    pub normals: Vec<Vec3<T>>,
    /// `false` marks background pixels.
    pub foreground: Vec<bool>,
    /// Coverage count `c`.
    pub cnt: Vec<T>,
    /// Current view cosine `v`.
    pub viewcos: Vec<T>,
    /// Cached best view cosine `v_old`.
    pub viewcos_cache: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskTriple<T> {
    pub generate: Vec<T>,
    pub refine: Vec<T>,
    pub keep: Vec<T>,
}

/// Cosine between the reversed line of sight and the normal: +1 when the
/// surface squarely faces the camera. Background pixels get 0.
pub fn view_cos<T: Real>(normals: &[Vec3<T>], foreground: &[bool], view_dir: Vec3<T>) -> Vec<T> {
    normals
        .par_iter()
        .zip(foreground.par_iter())
        .map(|(&n, &fg)| {
            let len = n.norm();
            if fg && len > T::zero() {
                -view_dir.dot(n) / len
            } else {
                T::zero()
            }
        })
        .collect()
}

/// Soft masks for one texel (foreground).
pub fn soft_mask_values<T: Real>(c: T, v: T, v_old: T, k: T) -> (T, T, T) {
    let one = T::one();
    let g = one - logistic(k * (c - T::lit(COVERAGE_THRESHOLD)));
    let r = logistic(k * (v - v_old)) * (one - g);
    (g, r, (one - g) * (one - r))
}

pub fn soft_masks<T: Real>(buffers: &ViewBuffers<T>, k: T) -> MaskTriple<T> {
    let n = buffers.width * buffers.height;
    let vals: Vec<(T, T, T)> = (0..n)
        .into_par_iter()
        .map(|i| {
            if buffers.foreground[i] {
                soft_mask_values(buffers.cnt[i], buffers.viewcos[i], buffers.viewcos_cache[i], k)
            } else {
                (T::zero(), T::zero(), T::one())
            }
        })
        .collect();
    MaskTriple {
        generate: vals.iter().map(|v| v.0).collect(),
        refine: vals.iter().map(|v| v.1).collect(),
        keep: vals.iter().map(|v| v.2).collect(),
    }
}

/// Indicator masks; every texel lands in exactly one of the three.
pub fn hard_masks<T: Real>(buffers: &ViewBuffers<T>) -> MaskTriple<T> {
    let n = buffers.width * buffers.height;
    let mut out = MaskTriple { generate: vec![T::zero(); n], refine: vec![T::zero(); n], keep: vec![T::zero(); n] };
    for i in 0..n {
        let slot = if !buffers.foreground[i] {
            &mut out.keep
        } else if buffers.cnt[i] < T::lit(COVERAGE_THRESHOLD) {
            &mut out.generate
        } else if buffers.viewcos[i] > buffers.viewcos_cache[i] {
            &mut out.refine
        } else {
            &mut out.keep
        };
        slot[i] = T::one();
    }
    out
}
