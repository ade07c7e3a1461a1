//! Gradient ascent on texels (and on camera angles against a visibility proxy).
//!
//! Texels stand in for the generator weights: each step moves the texture
//! along the exact reward gradient, `tex ← clamp(tex + η ∇r)`.

use serde::Serialize;

use crate::camera::{pose_derivatives, spherical_to_position, CameraParams, ELEVATION_MARGIN};
use crate::error::OptError;
use crate::mesh::Mesh;
use crate::rewards::{evaluate, evaluate_term, RewardContext, RewardSpec};
use crate::scalar::{logistic, Real};
use crate::texture::Texture;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptConfig {
    pub learning_rate: f64,
    pub steps: usize,
    /// Project texels back to `[0, 1]` after every step.
    pub clamp: bool,
    /// Seed for noise initialization (used by callers that request it).
    pub seed: u64,
    pub log_every: usize,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig { learning_rate: 0.1, steps: 100, clamp: true, seed: 0, log_every: 10 }
    }
}

impl OptConfig {
    pub fn validate(&self) -> Result<(), OptError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(OptError::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.log_every == 0 {
            return Err(OptError::Config("log_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of trace entries a run produces.
    pub fn trace_len(&self) -> usize {
        self.steps / self.log_every.max(1) + 1
    }
}

/// Update rule applied to a flat parameter vector.
pub trait StepRule<T> {
    fn apply(&mut self, params: &mut [T], gradient: &[T], learning_rate: T);
}

/// `p ← p + η g`.
#[derive(Debug, Clone, Copy, Default)]
pub struct PlainAscent;

impl<T: Real> StepRule<T> for PlainAscent {
    fn apply(&mut self, params: &mut [T], gradient: &[T], learning_rate: T) {
        for (p, g) in params.iter_mut().zip(gradient) {
            *p += learning_rate * *g;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry<T> {
    pub step: usize,
    pub value: T,
    pub per_term: Vec<T>,
    pub grad_max_abs: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptTrace<T> {
    pub entries: Vec<TraceEntry<T>>,
    pub final_texture: Texture<T>,
}

fn name_bad_term<T: Real>(spec: &RewardSpec, tex: &Texture<T>, ctx: &RewardContext<'_, T>) -> String {
    for (i, term) in spec.terms.iter().enumerate() {
        let bad = match evaluate_term(term, tex, ctx) {
            Ok(r) => !r.value.is_finite() || !r.gradient.is_finite(),
            Err(_) => true,
        };
        if bad {
            return format!("{}#{i}", term.kind.as_str());
        }
    }
    "weighted sum".into()
}

pub fn optimize_texture<T: Real>(
    init: &Texture<T>,
    spec: &RewardSpec,
    ctx: &RewardContext<'_, T>,
    cfg: &OptConfig,
) -> Result<OptTrace<T>, OptError> {
    optimize_texture_with(init, spec, ctx, cfg, &mut PlainAscent, |_, _| {})
}

/// Runs `cfg.steps` updates with `rule`, calling `on_log` for every logged step.
pub fn optimize_texture_with<T: Real>(
    init: &Texture<T>,
    spec: &RewardSpec,
    ctx: &RewardContext<'_, T>,
    cfg: &OptConfig,
    rule: &mut impl StepRule<T>,
    mut on_log: impl FnMut(&TraceEntry<T>, &Texture<T>),
) -> Result<OptTrace<T>, OptError> {
    cfg.validate()?;
    spec.validate()?;
    let lr = T::lit(cfg.learning_rate);
    let mut tex = init.clone();
    let mut entries = Vec::with_capacity(cfg.trace_len());
    for step in 0..=cfg.steps {
        let logged = step % cfg.log_every == 0;
        if step == cfg.steps && !logged {
            break;
        }
        let r = evaluate(spec, &tex, ctx)?;
        if !r.value.is_finite() || !r.gradient.is_finite() {
            let term = name_bad_term(spec, &tex, ctx);
            log::error!("non-finite reward at step {step}, term {term}");
            return Err(OptError::NonFinite { step, term });
        }
        if logged {
            let entry = TraceEntry { step, value: r.value, per_term: r.per_term, grad_max_abs: r.gradient.max_abs() };
            log::debug!("step {step}: reward {}", entry.value.to_f64_lossy());
            on_log(&entry, &tex);
            entries.push(entry);
        }
        if step == cfg.steps {
            break;
        }
        rule.apply(&mut tex.rgb, &r.gradient.drgb, lr);
        if cfg.clamp {
            tex.clamp_unit();
        }
    }
    Ok(OptTrace { entries, final_texture: tex })
}

/// Sharpness of the softplus standing in for `max(0, viewcos)` in the camera proxy.
pub const DEFAULT_PROXY_SHARPNESS: f64 = 8.0;

/// `ln(1 + e^{βx}) / β`, evaluated without overflow.
pub fn softplus<T: Real>(x: T, beta: T) -> T {
    let z = beta * x;
    if z > T::zero() {
        x + (-z).exp().ln_1p() / beta
    } else {
        z.exp().ln_1p() / beta
    }
}

/// Mean over vertices of `softplus_β(n_i · ĉ_i)`, where `ĉ_i` points from
/// vertex `i` to the camera, with its gradient with respect to (θ, φ).
///
/// Vertices without a normal, or coinciding with the camera, are skipped.
pub fn visibility_proxy<T: Real>(mesh: &Mesh<T>, params: &CameraParams<T>, beta: T) -> Result<(T, [T; 2]), OptError> {
    let c = spherical_to_position(params);
    let d = pose_derivatives(params)?;
    let mut value = T::zero();
    let mut grad = [T::zero(); 2];
    let mut count = 0usize;
    for (p, n) in mesh.positions.iter().zip(&mesh.vertex_normals) {
        if n.norm_squared() == T::zero() {
            continue;
        }
        let to_cam = c - *p;
        let dist = to_cam.norm();
        if !(dist > T::zero()) {
            continue;
        }
        let w = to_cam / dist;
        let vc = n.dot(w);
        value += softplus(vc, beta);
        // d(n·w)/dc = (n − w (w·n)) / |c − p|
        let dvc_dc = (*n - w * vc) / dist;
        let s = logistic(beta * vc);
        grad[0] += s * dvc_dc.dot(d.d_position_d_elevation);
        grad[1] += s * dvc_dc.dot(d.d_position_d_azimuth);
        count += 1;
    }
    let n = T::from_usize_lossy(count.max(1));
    Ok((value / n, [grad[0] / n, grad[1] / n]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CameraTraceEntry<T> {
    pub step: usize,
    pub params: CameraParams<T>,
    pub proxy: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraTrace<T> {
    pub entries: Vec<CameraTraceEntry<T>>,
    pub final_params: CameraParams<T>,
}

fn clamp_elevation<T: Real>(theta: T) -> T {
    let lim = T::FRAC_PI_2() - T::lit(ELEVATION_MARGIN);
    theta.max(-lim).min(lim)
}

/// Gradient ascent on elevation and azimuth maximizing [`visibility_proxy`].
pub fn optimize_camera<T: Real>(
    mesh: &Mesh<T>,
    init: &CameraParams<T>,
    cfg: &OptConfig,
    beta: T,
) -> Result<CameraTrace<T>, OptError> {
    cfg.validate()?;
    let mut params = *init;
    let lim = T::FRAC_PI_2() - T::lit(ELEVATION_MARGIN);
    if params.elevation.abs() >= lim {
        let sign = params.elevation.signum();
        params.elevation = sign * (lim - T::lit(1e-2));
        log::warn!("camera elevation at the gimbal limit; perturbed by 1e-2 rad");
    }
    let lr = T::lit(cfg.learning_rate);
    let mut entries = Vec::with_capacity(cfg.trace_len());
    for step in 0..=cfg.steps {
        let (proxy, g) = visibility_proxy(mesh, &params, beta)?;
        if !proxy.is_finite() || !g[0].is_finite() || !g[1].is_finite() {
            return Err(OptError::NonFinite { step, term: "camera proxy".into() });
        }
        if step % cfg.log_every == 0 {
            entries.push(CameraTraceEntry { step, params, proxy });
        }
        if step == cfg.steps {
            break;
        }
        params.elevation = clamp_elevation(params.elevation + lr * g[0]);
        params.azimuth += lr * g[1];
    }
    Ok(CameraTrace { entries, final_params: params })
}
