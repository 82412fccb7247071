use thiserror::Error;

#[derive(Error, Debug)]
pub enum WbError {
    #[error("non-unit where a unit was required")]
    NonUnit,
    #[error("inexact p-adic division")]
    Inexact,
    #[error("no polygon break at h: h coincides with a segment slope; perturb h")]
    NoBreakAtH,
    #[error("series composition diverges: inner constant term is a unit")]
    ComposeDiverges,
    #[error("precision collapse: {0}")]
    PrecisionCollapse(String),
    #[error("v-analyticity failure: {0}; raise v")]
    VAnalyticity(String),
    #[error("monoid membership violated: {0}")]
    MonoidMembership(String),
    #[error("coset match search exhausted for (i={0}, b={1})")]
    MatchExhausted(usize, usize),
    #[error("invalid input: {0}")]
    BadInput(String),
    #[error("specialization weight not reachable from this family: {0}")]
    BadSpecialization(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
