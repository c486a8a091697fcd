use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("point {point:?} lies outside the open domain of chart `{chart}`")]
    OutOfDomain { chart: String, point: Vec<f64> },
    #[error("jet order {requested} unsupported (maximum {max})")]
    OrderUnsupported { requested: usize, max: usize },
    #[error("{0}")]
    Precondition(String),
    #[error("metric is not positive definite at {0:?}")]
    NotPositiveDefinite(Vec<f64>),
    #[error("non-finite value while evaluating {0}")]
    NonFinite(String),
    #[error("no sign change of u(1) over the shooting bracket [{0}, {1}]")]
    NoSignChange(f64, f64),
    #[error("solution blew up at r = {0}")]
    BlowUp(f64),
    #[error("differential is rank deficient at {0:?}")]
    RankDeficient(Vec<f64>),
}

pub type Result<T> = std::result::Result<T, Error>;
