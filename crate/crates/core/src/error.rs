use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: face corner has no texture coordinate index")]
    MissingUv { line: usize },
    #[error("line {line}: face has {corners} corners, only triangles are supported")]
    UnsupportedFace { line: usize, corners: usize },
    #[error("input is not valid UTF-8")]
    Encoding,
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("triangle {triangle} references position {index} but only {count} exist")]
    PositionIndex { triangle: usize, index: usize, count: usize },
    #[error("triangle {triangle} references uv {index} but only {count} exist")]
    UvIndex { triangle: usize, index: usize, count: usize },
    #[error("{triangles} triangles but {triangle_uvs} uv triangles")]
    UvTriangleCount { triangles: usize, triangle_uvs: usize },
    #[error("mesh has no non-degenerate triangles")]
    Empty,
    #[error("non-finite coordinate at {what} {index}")]
    NonFinite { what: &'static str, index: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate triangle (zero signed area)")]
    DegenerateTriangle,
    #[error("{0}")]
    InvalidInput(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("texture is {texture:?} but {what} is {other:?}")]
    DimensionMismatch {
        what: &'static str,
        texture: (usize, usize),
        other: (usize, usize),
    },
    #[error("{0} has no covered texels")]
    NoCoverage(&'static str),
    #[error("vector field has no valid anchors")]
    EmptyField,
    #[error("mirror pair set is empty")]
    EmptyPairs,
    #[error("term `{0}` requires context input that was not provided: {1}")]
    MissingContext(&'static str, &'static str),
    #[error("reward spec has no terms")]
    NoTerms,
    #[error("term `{kind}`: {message}")]
    InvalidParam { kind: &'static str, message: String },
    #[error("{what} must have range `{expected}`, got `{found}`")]
    RangeMismatch { what: &'static str, expected: &'static str, found: &'static str },
    #[error("texture is {width}x{height}; gradient terms need at least 3x3")]
    TextureTooSmall { width: usize, height: usize },
}

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("camera forward direction is parallel to the up vector")]
    Gimbal,
    #[error("camera position coincides with target")]
    Coincident,
    #[error("radius must be positive, got {0}")]
    Radius(f64),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("image: {0}")]
    Image(#[from] image::ImageError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, PartialEq)]
pub enum OptError {
    #[error("invalid optimizer config: {0}")]
    Config(String),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error("non-finite reward or gradient at step {step} (term {term})")]
    NonFinite { step: usize, term: String },
}
