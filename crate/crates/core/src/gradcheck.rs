//! Central finite-difference checks for analytic texture gradients.

use serde::Serialize;

use crate::scalar::Real;
use crate::texture::{GradientMap, Texture};

pub const DEFAULT_STEP: f64 = 1e-4;
pub const DEFAULT_REL_TOL: f64 = 1e-4;
pub const DEFAULT_ABS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradCheckReport {
    /// Largest `|analytic − numeric| / |analytic|` over entries with `|analytic| > abs_tol`.
    pub max_rel_err: f64,
    /// Largest `|analytic − numeric|` over the remaining (near-zero) entries.
    pub max_abs_err: f64,
    /// Interleaved rgb index of the entry with the largest relative error.
    pub worst_index: Option<usize>,
    pub checked: usize,
    pub abs_tol: f64,
}

impl GradCheckReport {
    pub fn passed(&self, rel_tol: f64) -> bool {
        self.max_rel_err < rel_tol && self.max_abs_err < self.abs_tol
    }
}

/// Compares `analytic` with central differences of `f` over every texel channel.
pub fn check_gradient<T: Real>(
    tex: &Texture<T>,
    analytic: &GradientMap<T>,
    step: f64,
    abs_tol: f64,
    f: impl Fn(&Texture<T>) -> T,
) -> GradCheckReport {
    let mut probe = tex.clone();
    let mut report = GradCheckReport { max_rel_err: 0.0, max_abs_err: 0.0, worst_index: None, checked: 0, abs_tol };
    let h = T::lit(step);
    for i in 0..tex.rgb.len() {
        let orig = probe.rgb[i];
        probe.rgb[i] = orig + h;
        let plus = f(&probe).to_f64_lossy();
        probe.rgb[i] = orig - h;
        let minus = f(&probe).to_f64_lossy();
        probe.rgb[i] = orig;
        let numeric = (plus - minus) / (2.0 * step);
        let a = analytic.drgb[i].to_f64_lossy();
        let err = (a - numeric).abs();
        if !err.is_finite() {
            report.max_rel_err = f64::INFINITY;
            report.worst_index = Some(i);
        } else if a.abs() > abs_tol {
            let rel = err / a.abs();
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst_index = Some(i);
            }
        } else {
            report.max_abs_err = report.max_abs_err.max(err);
        }
        report.checked += 1;
    }
    report
}
