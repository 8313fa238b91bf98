use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("points are associated with different Hermitian forms")]
    FormMismatch,
    #[error("the zero vector does not define a projective point")]
    ZeroVector,
    #[error("point is not in the negative cone (<p,p> = {0:e})")]
    NotNegative(f64),
    #[error("polar vector is not in the positive cone (<n,n> = {0:e})")]
    NotPositive(f64),
    #[error("matrix is not in SU(H): unitarity residual {unitary:e}, |det - 1| = {det:e}")]
    NotInGroup { unitary: f64, det: f64 },
    #[error("degenerate point configuration: {0}")]
    Degenerate(String),
    #[error("isometry fixes q_infinity and has no isometric sphere")]
    StabilizerElement,
    #[error("isometry is not regular elliptic")]
    NotRegularElliptic,
    #[error("isometry is not real elliptic")]
    NotRealElliptic,
    #[error("point coincides with the distinguished boundary point")]
    DistinguishedPoint,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
