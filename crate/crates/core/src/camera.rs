//! Spherical camera placement and look-at poses, with analytic derivatives
//! with respect to elevation and azimuth.

use serde::{Deserialize, Serialize};

use crate::error::CameraError;
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

/// Elevation margin kept from ±π/2 by the optimizer.
pub const ELEVATION_MARGIN: f64 = 1e-3;
/// `|up × f|` below this is treated as parallel.
pub const GIMBAL_EPS: f64 = 1e-9;

pub fn world_up<T: Real>() -> Vec3<T> {
    Vec3::new(T::zero(), T::one(), T::zero())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraParams<T> {
    /// θ, radians.
    pub elevation: T,
    /// φ, radians.
    pub azimuth: T,
    pub radius: T,
    pub target: Vec3<T>,
}

impl<T: Real> CameraParams<T> {
    pub fn new(elevation: T, azimuth: T, radius: T, target: Vec3<T>) -> Result<Self, CameraError> {
        if !(radius > T::zero()) {
            return Err(CameraError::Radius(radius.to_f64_lossy()));
        }
        Ok(CameraParams { elevation, azimuth, radius, target })
    }
}

/// Camera-to-world pose. Rotation columns are (right, up, forward).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose<T> {
    pub rotation: Mat3<T>,
    pub position: Vec3<T>,
    /// `[[R, c], [0, 1]]`.
    pub matrix: [[T; 4]; 4],
}

/// Unit direction from the target to the camera.
fn spherical_dir<T: Real>(theta: T, phi: T) -> Vec3<T> {
    Vec3::new(theta.cos() * phi.sin(), -theta.sin(), theta.cos() * phi.cos())
}

/// `(r cosθ sinφ, −r sinθ, r cosθ cosφ) + t`.
pub fn spherical_to_position<T: Real>(p: &CameraParams<T>) -> Vec3<T> {
    spherical_dir(p.elevation, p.azimuth) * p.radius + p.target
}

fn basis<T: Real>(position: Vec3<T>, target: Vec3<T>, up: Vec3<T>) -> Result<(Vec3<T>, Vec3<T>, Vec3<T>, T, T), CameraError> {
    let f = (position - target).normalized().ok_or(CameraError::Coincident)?;
    let a = up.cross(f);
    let a_len = a.norm();
    if !(a_len >= T::lit(GIMBAL_EPS)) {
        return Err(CameraError::Gimbal);
    }
    let r = a / a_len;
    let b = f.cross(r);
    let b_len = b.norm();
    Ok((r, b / b_len, f, a_len, b_len))
}

/// `f = normalize(c − t)`, `r = normalize(up × f)`, `u = normalize(f × r)`.
pub fn look_at<T: Real>(position: Vec3<T>, target: Vec3<T>, up: Vec3<T>) -> Result<Pose<T>, CameraError> {
    let (r, u, f, _, _) = basis(position, target, up)?;
    let rotation = Mat3::from_columns(r, u, f);
    let z = T::zero();
    let m = &rotation.m;
    let matrix = [
        [m[0][0], m[0][1], m[0][2], position.x],
        [m[1][0], m[1][1], m[1][2], position.y],
        [m[2][0], m[2][1], m[2][2], position.z],
        [z, z, z, T::one()],
    ];
    Ok(Pose { rotation, position, matrix })
}

pub fn camera_pose<T: Real>(p: &CameraParams<T>) -> Result<Pose<T>, CameraError> {
    look_at(spherical_to_position(p), p.target, world_up())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseDerivatives<T> {
    pub d_position_d_elevation: Vec3<T>,
    pub d_position_d_azimuth: Vec3<T>,
    pub d_rotation_d_elevation: Mat3<T>,
    pub d_rotation_d_azimuth: Mat3<T>,
    /// Forward direction within 1e-3 rad of the up axis.
    pub near_singular: bool,
}

/// Derivative of `x / |x|` given `n = x / |x|`, `|x|` and `dx`.
fn d_normalize<T: Real>(n: Vec3<T>, len: T, dx: Vec3<T>) -> Vec3<T> {
    (dx - n * n.dot(dx)) / len
}

fn d_basis<T: Real>(r: Vec3<T>, u: Vec3<T>, f: Vec3<T>, a_len: T, b_len: T, df: Vec3<T>) -> Mat3<T> {
    let up = world_up::<T>();
    let dr = d_normalize(r, a_len, up.cross(df));
    let du = d_normalize(u, b_len, df.cross(r) + f.cross(dr));
    Mat3::from_columns(dr, du, df)
}

/// Partial derivatives of the camera position and rotation with respect to θ and φ.
pub fn pose_derivatives<T: Real>(p: &CameraParams<T>) -> Result<PoseDerivatives<T>, CameraError> {
    let (st, ct) = p.elevation.sin_cos();
    let (sp, cp) = p.azimuth.sin_cos();
    let rad = p.radius;
    let dpos_dt = Vec3::new(-st * sp, -ct, -st * cp) * rad;
    let dpos_dp = Vec3::new(ct * cp, T::zero(), -ct * sp) * rad;
    let position = spherical_to_position(p);
    let (r, u, f, a_len, b_len) = basis(position, p.target, world_up())?;
    // f = (c − t)/|c − t| with |c − t| = radius
    let df_dt = d_normalize(f, rad, dpos_dt);
    let df_dp = d_normalize(f, rad, dpos_dp);
    let near_singular = f.dot(world_up()).abs() > T::lit(ELEVATION_MARGIN).cos();
    if near_singular {
        log::warn!("camera is within 1e-3 rad of looking along the up axis; pose derivatives are ill-conditioned");
    }
    Ok(PoseDerivatives {
        d_position_d_elevation: dpos_dt,
        d_position_d_azimuth: dpos_dp,
        d_rotation_d_elevation: d_basis(r, u, f, a_len, b_len, df_dt),
        d_rotation_d_azimuth: d_basis(r, u, f, a_len, b_len, df_dp),
        near_singular,
    })
}
