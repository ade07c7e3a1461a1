//! Geometry-aware texture rewards.
//!
//! Given a UV-mapped triangle mesh and an RGB texture, this crate evaluates
//! differentiable rewards that tie texture appearance to surface geometry
//! (curvature alignment, curvature emphasis, curvature colorization, mirror
//! symmetry, colorfulness) together with their exact texel gradients, and the
//! geometric preprocessing they rely on.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below name the concrete instantiations.

pub mod atlas;
pub mod camera;
pub mod curvature;
pub mod error;
pub mod field;
pub mod gradcheck;
pub mod io;
pub mod linalg;
pub mod masks;
pub mod mesh;
pub mod optimize;
pub mod primitives;
pub mod rewards;
pub mod scalar;
pub mod symmetry;
pub mod texture;

pub use scalar::Real;

pub type Mesh64 = mesh::Mesh<f64>;
pub type Mesh32 = mesh::Mesh<f32>;
pub type Texture64 = texture::Texture<f64>;
pub type Texture32 = texture::Texture<f32>;
pub type GradientMap64 = texture::GradientMap<f64>;
pub type GradientMap32 = texture::GradientMap<f32>;
pub type ScalarMap64 = atlas::ScalarMap<f64>;
pub type ScalarMap32 = atlas::ScalarMap<f32>;
pub type CurvatureData64 = curvature::CurvatureData<f64>;
pub type CurvatureData32 = curvature::CurvatureData<f32>;
pub type UVVectorField64 = field::UVVectorField<f64>;
pub type UVVectorField32 = field::UVVectorField<f32>;
pub type MirrorPairSet64 = symmetry::MirrorPairSet<f64>;
pub type MirrorPairSet32 = symmetry::MirrorPairSet<f32>;
pub type CameraParams64 = camera::CameraParams<f64>;
pub type CameraParams32 = camera::CameraParams<f32>;
pub type RewardResult64 = rewards::RewardResult<f64>;
pub type RewardResult32 = rewards::RewardResult<f32>;
