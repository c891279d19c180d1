//! Error types shared across the solver.

use thiserror::Error;

/// Which smallness assumption broke when an iteration was abandoned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallnessProxy {
    /// The shock root left (-1/4, 1/4) or the monotonicity guard failed.
    ShockEscape,
    /// `B0 - |q|^2/2 <= 0` somewhere: the density closure has no value.
    Vacuum,
    /// The flattened axial mass flux fell below half its background value.
    MassFluxFloor,
    /// Axial velocity too small for the vorticity source.
    AxialDegeneracy,
    /// Stream-function mass balance violated beyond discretisation noise.
    MassImbalance,
    /// A fixed-point level hit its sweep cap.
    SweepCap,
    /// The linear solver did not reach its tolerance.
    LinearSolver,
    /// The inflow itself could not be built: not supersonic, or negative axial energy.
    InflowAmplitude,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("vacuum: B0 - |q|^2/2 = {margin:.3e} <= 0")]
    Vacuum { margin: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("inflow amplitude too large: {0}")]
    AmplitudeTooLarge(String),

    #[error("background state is not subsonic (Mach^2 = {mach_sq:.6}); operator is not elliptic")]
    NotElliptic { mach_sq: f64 },

    #[error("shock escape at r = {r:.4}: {reason}")]
    ShockEscape { r: f64, reason: String },

    #[error("degenerate flow at {location}: {reason}")]
    Degeneracy {
        proxy: SmallnessProxy,
        location: String,
        reason: String,
    },

    #[error("linear solver stalled after {iterations} iterations (relative residual {residual:.3e})")]
    LinearSolver { iterations: usize, residual: f64 },

    #[error("iteration diverged ({proxy:?}): {message}")]
    Diverged {
        proxy: SmallnessProxy,
        message: String,
        report: Box<crate::driver::IterationReport>,
    },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    /// The smallness proxy that an error corresponds to, if it is a divergence symptom.
    pub fn proxy(&self) -> Option<SmallnessProxy> {
        match self {
            Error::Vacuum { .. } => Some(SmallnessProxy::Vacuum),
            Error::ShockEscape { .. } => Some(SmallnessProxy::ShockEscape),
            Error::Degeneracy { proxy, .. } => Some(*proxy),
            Error::LinearSolver { .. } => Some(SmallnessProxy::LinearSolver),
            Error::Diverged { proxy, .. } => Some(*proxy),
            Error::AmplitudeTooLarge(_) => Some(SmallnessProxy::InflowAmplitude),
            _ => None,
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
