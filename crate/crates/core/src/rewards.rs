//! Differentiable texture rewards and their weighted combination.
//!
//! Each term returns its value and the exact gradient with respect to every
//! texel channel. [`evaluate`] sums weighted terms from a [`RewardSpec`].

use serde::{Deserialize, Serialize};

use crate::atlas::{RangeTag, ScalarMap};
use crate::error::RewardError;
use crate::field::UVVectorField;
use crate::linalg::Vec2;
use crate::scalar::{logistic, Real};
use crate::symmetry::MirrorPairSet;
use crate::texture::{
    colorfulness, colorfulness_backward, gmag_backward, luminance_gradient_backward, texture_gradient,
    BilinearStencil, GradientMap, Texture, TextureGradient,
};

/// Anchors whose raw luminance gradient is shorter than this contribute 0 to alignment.
pub const MIN_GRADIENT_NORM: f64 = 1e-6;
/// Softening in the alignment gradient normalization.
pub const ALIGN_EPS: f64 = 1e-8;
pub const DEFAULT_ALPHA_M: f64 = 1.0;
pub const DEFAULT_ALPHA_C: f64 = 0.05;
pub const DEFAULT_ALPHA_SYM: f64 = 1.0;
pub const DEFAULT_ALPHA_COLOR: f64 = 0.05;
pub const DEFAULT_THRESHOLD: f64 = 0.0;
pub const DEFAULT_STEEPNESS: f64 = 50.0;

/// `cos 25°`.
pub fn default_alignment_threshold() -> f64 {
    25f64.to_radians().cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Alignment,
    Emphasis,
    Symmetry,
    Colorization,
    Colorfulness,
}

impl TermKind {
    pub const ALL: [TermKind; 5] =
        [TermKind::Alignment, TermKind::Emphasis, TermKind::Symmetry, TermKind::Colorization, TermKind::Colorfulness];

    pub fn as_str(self) -> &'static str {
        match self {
            TermKind::Alignment => "alignment",
            TermKind::Emphasis => "emphasis",
            TermKind::Symmetry => "symmetry",
            TermKind::Colorization => "colorization",
            TermKind::Colorfulness => "colorfulness",
        }
    }
}

/// Per-kind parameters; unset fields take the documented defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_sym: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_color: Option<f64>,
    /// Colorization curvature threshold `T`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Colorization sigmoid steepness `k_c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steepness: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardTerm {
    pub kind: TermKind,
    pub weight: f64,
    #[serde(default)]
    pub params: TermParams,
}

impl RewardTerm {
    pub fn new(kind: TermKind, weight: f64) -> Self {
        RewardTerm { kind, weight, params: TermParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSpec {
    pub terms: Vec<RewardTerm>,
}

impl RewardSpec {
    pub fn single(kind: TermKind) -> Self {
        RewardSpec { terms: vec![RewardTerm::new(kind, 1.0)] }
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let spec: RewardSpec = serde_json::from_str(text).map_err(|e| e.to_string())?;
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), RewardError> {
        if self.terms.is_empty() {
            return Err(RewardError::NoTerms);
        }
        for t in &self.terms {
            let kind = t.kind.as_str();
            let bad = |message: String| Err(RewardError::InvalidParam { kind, message });
            if !t.weight.is_finite() {
                return bad(format!("weight {} is not finite", t.weight));
            }
            let p = &t.params;
            for (name, v) in [("alpha_m", p.alpha_m), ("alpha_c", p.alpha_c), ("alpha_sym", p.alpha_sym), ("alpha_color", p.alpha_color)] {
                if let Some(v) = v {
                    if !v.is_finite() {
                        return bad(format!("{name} = {v} is not finite"));
                    }
                }
            }
            if let Some(th) = p.threshold {
                if !(-1.0..=1.0).contains(&th) {
                    return bad(format!("threshold {th} outside [-1, 1]"));
                }
            }
            if let Some(k) = p.steepness {
                if !(k > 0.0 && k.is_finite()) {
                    return bad(format!("steepness {k} must be positive"));
                }
            }
        }
        Ok(())
    }

    pub fn kinds(&self) -> impl Iterator<Item = TermKind> + '_ {
        self.terms.iter().map(|t| t.kind)
    }
}

/// Value and texture gradient of one term.
#[derive(Debug, Clone, PartialEq)]
pub struct TermResult<T> {
    pub value: T,
    pub gradient: GradientMap<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RewardResult<T> {
    pub value: T,
    /// Unweighted term values, parallel to the spec's terms.
    pub per_term: Vec<T>,
    pub gradient: GradientMap<T>,
}

/// Geometry inputs the terms draw on. Only the ones a spec needs must be set.
#[derive(Debug, Clone, Default)]
pub struct RewardContext<'a, T> {
    pub field: Option<&'a UVVectorField<T>>,
    /// Normalized mean curvature in `[0, 1]` (emphasis).
    pub curvature_unit: Option<&'a ScalarMap<T>>,
    /// Normalized mean curvature in `[-1, 1]` (colorization).
    pub curvature_signed: Option<&'a ScalarMap<T>>,
    pub pairs: Option<&'a MirrorPairSet<T>>,
}

fn check_gradient_size<T>(tex: &Texture<T>) -> Result<(), RewardError> {
    if tex.width < 3 || tex.height < 3 {
        return Err(RewardError::TextureTooSmall { width: tex.width, height: tex.height });
    }
    Ok(())
}

fn check_map<T>(
    tex: &Texture<T>,
    map: &ScalarMap<T>,
    what: &'static str,
    expected: RangeTag,
) -> Result<usize, RewardError> {
    if (map.width, map.height) != (tex.width, tex.height) {
        return Err(RewardError::DimensionMismatch {
            what,
            texture: (tex.width, tex.height),
            other: (map.width, map.height),
        });
    }
    if map.range != expected {
        return Err(RewardError::RangeMismatch { what, expected: expected.as_str(), found: map.range.as_str() });
    }
    match map.coverage.iter().filter(|&&c| c > 0).count() {
        0 => Err(RewardError::NoCoverage(what)),
        n => Ok(n),
    }
}

/// Luminance gradient `(∂L/∂u, ∂L/∂v)` sampled bilinearly at `uv`.
pub fn sample_luminance_gradient<T: Real>(tg: &TextureGradient<T>, uv: Vec2<T>) -> Vec2<T> {
    let st = BilinearStencil::new(uv, tg.width, tg.height);
    Vec2::new(st.sample(&tg.gx), st.sample(&tg.gy))
}

/// Mean squared cosine between the sampled luminance gradient and each valid anchor direction.
pub fn reward_alignment<T: Real>(tex: &Texture<T>, field: &UVVectorField<T>) -> Result<TermResult<T>, RewardError> {
    check_gradient_size(tex)?;
    let n_valid = field.valid_count();
    if n_valid == 0 {
        return Err(RewardError::EmptyField);
    }
    let tg = texture_gradient(tex);
    let n = T::from_usize_lossy(n_valid);
    let eps2 = T::lit(ALIGN_EPS * ALIGN_EPS);
    let min_norm = T::lit(MIN_GRADIENT_NORM);
    let texels = tex.width * tex.height;
    let mut up_gx = vec![T::zero(); texels];
    let mut up_gy = vec![T::zero(); texels];
    let mut sum = T::zero();
    for a in field.anchors.iter().filter(|a| a.valid) {
        let st = BilinearStencil::new(a.uv, tex.width, tex.height);
        let g = Vec2::new(st.sample(&tg.gx), st.sample(&tg.gy));
        if g.norm() < min_norm {
            continue;
        }
        let s = (g.norm_squared() + eps2).sqrt();
        let c = g.dot(a.dir) / s;
        sum += c * c;
        // d(c²)/dg = 2c (dir/s − (g·dir) g / s³)
        let k = T::lit(2.0) * c / n;
        let gd = g.dot(a.dir);
        let s3 = s * s * s;
        let dg = a.dir / s - g * (gd / s3);
        st.scatter(&mut up_gx, k * dg.x);
        st.scatter(&mut up_gy, k * dg.y);
    }
    let mut gradient = tex.zero_gradient();
    luminance_gradient_backward(&mut gradient, &up_gx, &up_gy);
    Ok(TermResult { value: sum / n, gradient })
}

/// `α_m · R_magnitude + α_c · colorfulness`, with `R_magnitude` the negative
/// mean squared difference between gradient magnitude and curvature over covered texels.
pub fn reward_emphasis<T: Real>(
    tex: &Texture<T>,
    curvature: &ScalarMap<T>,
    alpha_m: T,
    alpha_c: T,
) -> Result<TermResult<T>, RewardError> {
    check_gradient_size(tex)?;
    let covered = check_map(tex, curvature, "emphasis curvature map", RangeTag::Unit)?;
    let tg = texture_gradient(tex);
    let n = T::from_usize_lossy(covered);
    let mut upstream = vec![T::zero(); tex.width * tex.height];
    let mut sq = T::zero();
    for p in 0..tex.width * tex.height {
        if curvature.coverage[p] == 0 {
            continue;
        }
        let d = tg.gmag[p] - curvature.values[p];
        sq += d * d;
        upstream[p] = -alpha_m * T::lit(2.0) * d / n;
    }
    let magnitude = -sq / n;
    let mut gradient = tex.zero_gradient();
    gmag_backward(&mut gradient, &tg, &upstream);
    colorfulness_backward(tex, &mut gradient, alpha_c);
    Ok(TermResult { value: alpha_m * magnitude + alpha_c * colorfulness(tex), gradient })
}

/// Mean squared RGB difference across mirror pairs.
pub fn symmetry_loss<T: Real>(tex: &Texture<T>, pairs: &MirrorPairSet<T>) -> Result<T, RewardError> {
    if pairs.pairs.is_empty() {
        return Err(RewardError::EmptyPairs);
    }
    let mut sum = T::zero();
    for p in &pairs.pairs {
        let a = crate::texture::bilinear_sample(tex, p.uv);
        let b = crate::texture::bilinear_sample(tex, p.uv_mirror);
        sum += (0..3).map(|c| (a[c] - b[c]) * (a[c] - b[c])).sum::<T>();
    }
    Ok(sum / T::from_usize_lossy(pairs.pairs.len()))
}

/// `−α_sym · L_symmetry + α_color · colorfulness`.
pub fn reward_symmetry<T: Real>(
    tex: &Texture<T>,
    pairs: &MirrorPairSet<T>,
    alpha_sym: T,
    alpha_color: T,
) -> Result<TermResult<T>, RewardError> {
    if tex.width < 2 || tex.height < 2 {
        return Err(RewardError::TextureTooSmall { width: tex.width, height: tex.height });
    }
    if pairs.pairs.is_empty() {
        return Err(RewardError::EmptyPairs);
    }
    let m = T::from_usize_lossy(pairs.pairs.len());
    let mut gradient = tex.zero_gradient();
    let mut sum = T::zero();
    for p in &pairs.pairs {
        let sa = BilinearStencil::new(p.uv, tex.width, tex.height);
        let sb = BilinearStencil::new(p.uv_mirror, tex.width, tex.height);
        for c in 0..3 {
            let mut a = T::zero();
            let mut b = T::zero();
            for k in 0..4 {
                a += tex.rgb[sa.texels[k] * 3 + c] * sa.weights[k];
                b += tex.rgb[sb.texels[k] * 3 + c] * sb.weights[k];
            }
            let d = a - b;
            sum += d * d;
            let up = -alpha_sym * T::lit(2.0) * d / m;
            for k in 0..4 {
                gradient.drgb[sa.texels[k] * 3 + c] += up * sa.weights[k];
                gradient.drgb[sb.texels[k] * 3 + c] -= up * sb.weights[k];
            }
        }
    }
    colorfulness_backward(tex, &mut gradient, alpha_color);
    Ok(TermResult { value: -alpha_sym * (sum / m) + alpha_color * colorfulness(tex), gradient })
}

/// Smooth colorization: mean over covered texels of `(2σ(k (C − T)) − 1)(R − B)`.
pub fn reward_colorization<T: Real>(
    tex: &Texture<T>,
    curvature: &ScalarMap<T>,
    threshold: T,
    steepness: T,
) -> Result<TermResult<T>, RewardError> {
    let covered = check_map(tex, curvature, "colorization curvature map", RangeTag::SignedUnit)?;
    if !(threshold.abs() <= T::one()) {
        return Err(RewardError::InvalidParam { kind: "colorization", message: "threshold outside [-1, 1]".into() });
    }
    if !(steepness > T::zero()) {
        return Err(RewardError::InvalidParam { kind: "colorization", message: "steepness must be positive".into() });
    }
    let n = T::from_usize_lossy(covered);
    let two = T::lit(2.0);
    let mut gradient = tex.zero_gradient();
    let mut sum = T::zero();
    for p in 0..tex.width * tex.height {
        if curvature.coverage[p] == 0 {
            continue;
        }
        let w = two * logistic(steepness * (curvature.values[p] - threshold)) - T::one();
        sum += w * (tex.rgb[p * 3] - tex.rgb[p * 3 + 2]);
        gradient.drgb[p * 3] = w / n;
        gradient.drgb[p * 3 + 2] = -w / n;
    }
    Ok(TermResult { value: sum / n, gradient })
}

/// Hard piecewise colorization (`+Δ_rb` where `C > T`, `−Δ_rb` otherwise), for reference.
pub fn colorization_hard<T: Real>(tex: &Texture<T>, curvature: &ScalarMap<T>, threshold: T) -> T {
    let mut sum = T::zero();
    let mut n = 0usize;
    for p in 0..tex.width * tex.height {
        if curvature.coverage[p] == 0 {
            continue;
        }
        let d = tex.rgb[p * 3] - tex.rgb[p * 3 + 2];
        sum += if curvature.values[p] > threshold { d } else { -d };
        n += 1;
    }
    sum / T::from_usize_lossy(n.max(1))
}

pub fn reward_colorfulness<T: Real>(tex: &Texture<T>) -> TermResult<T> {
    let mut gradient = tex.zero_gradient();
    colorfulness_backward(tex, &mut gradient, T::one());
    TermResult { value: colorfulness(tex), gradient }
}

/// Evaluates one spec term (unweighted).
pub fn evaluate_term<T: Real>(
    term: &RewardTerm,
    tex: &Texture<T>,
    ctx: &RewardContext<'_, T>,
) -> Result<TermResult<T>, RewardError> {
    let p = &term.params;
    let lit = |v: Option<f64>, d: f64| T::lit(v.unwrap_or(d));
    match term.kind {
        TermKind::Alignment => {
            let field = ctx.field.ok_or(RewardError::MissingContext("alignment", "uv vector field"))?;
            reward_alignment(tex, field)
        }
        TermKind::Emphasis => {
            let map = ctx.curvature_unit.ok_or(RewardError::MissingContext("emphasis", "unit curvature map"))?;
            reward_emphasis(tex, map, lit(p.alpha_m, DEFAULT_ALPHA_M), lit(p.alpha_c, DEFAULT_ALPHA_C))
        }
        TermKind::Symmetry => {
            let pairs = ctx.pairs.ok_or(RewardError::MissingContext("symmetry", "mirror pairs"))?;
            reward_symmetry(tex, pairs, lit(p.alpha_sym, DEFAULT_ALPHA_SYM), lit(p.alpha_color, DEFAULT_ALPHA_COLOR))
        }
        TermKind::Colorization => {
            let map = ctx
                .curvature_signed
                .ok_or(RewardError::MissingContext("colorization", "signed curvature map"))?;
            reward_colorization(tex, map, lit(p.threshold, DEFAULT_THRESHOLD), lit(p.steepness, DEFAULT_STEEPNESS))
        }
        TermKind::Colorfulness => Ok(reward_colorfulness(tex)),
    }
}

/// Weighted sum of the spec's terms and of their gradients, accumulated in spec order.
pub fn evaluate<T: Real>(
    spec: &RewardSpec,
    tex: &Texture<T>,
    ctx: &RewardContext<'_, T>,
) -> Result<RewardResult<T>, RewardError> {
    spec.validate()?;
    let mut value = T::zero();
    let mut per_term = Vec::with_capacity(spec.terms.len());
    let mut gradient = tex.zero_gradient();
    for term in &spec.terms {
        let r = evaluate_term(term, tex, ctx)?;
        let w = T::lit(term.weight);
        value += w * r.value;
        gradient.add_scaled(&r.gradient, w);
        per_term.push(r.value);
    }
    Ok(RewardResult { value, per_term, gradient })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AlignmentCount {
    pub aligned: usize,
    pub total: usize,
}

/// Counts valid anchors whose luminance gradient is within `acos(τ)` of the direction (either sign).
pub fn alignment_count<T: Real>(tex: &Texture<T>, field: &UVVectorField<T>, tau: T) -> AlignmentCount {
    let tg = texture_gradient(tex);
    let min_norm = T::lit(MIN_GRADIENT_NORM);
    let mut out = AlignmentCount { aligned: 0, total: 0 };
    for a in field.anchors.iter().filter(|a| a.valid) {
        out.total += 1;
        let g = sample_luminance_gradient(&tg, a.uv);
        let gn = g.norm();
        let dn = a.dir.norm();
        if gn >= min_norm && dn > T::zero() && (g.dot(a.dir) / (gn * dn)).abs() >= tau {
            out.aligned += 1;
        }
    }
    out
}
