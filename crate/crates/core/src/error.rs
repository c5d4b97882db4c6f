use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A stock or potential argument outside its admissible range.
    #[error("{what} = {value} is outside the admissible range [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// A recycling intensity beyond the range where the waste intake is non-negative.
    #[error("recycling intensity {intensity} exceeds the physical maximum {max} (waste intake {intake} < 0)")]
    PolicyViolation {
        intensity: f64,
        max: f64,
        intake: f64,
    },

    #[error("economy collapsed: output {output} <= 0")]
    EconomyCollapsed { output: f64 },

    #[error("capital exhausted: K = {capital} <= 0")]
    CapitalExhausted { capital: f64 },

    /// A stock would go negative by more than the clamping tolerance; the step is too large.
    #[error("step rejected at t = {t}: sheet {sheet} stock {stock} = {value} (dt too large)")]
    StepRejected {
        t: f64,
        sheet: usize,
        stock: &'static str,
        value: f64,
    },

    #[error("invalid scenario: {path}: {reason}")]
    Invalid { path: String, reason: String },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("failed to parse {origin}: {message}")]
    Parse { origin: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Whether the error comes from the numerics rather than from the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepRejected { .. }
                | Error::EconomyCollapsed { .. }
                | Error::CapitalExhausted { .. }
                | Error::PolicyViolation { .. }
                | Error::Domain { .. }
        )
    }
}
