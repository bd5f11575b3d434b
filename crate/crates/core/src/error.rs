use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The requested Fock cutoff leaves more norm outside the basis than allowed.
    #[error(
        "truncation kmax = {kmax} leaves norm deficit {deficit:.3e} > {tolerance:.1e}; \
         use kmax >= {required_kmax}"
    )]
    TruncationInsufficient {
        kmax: usize,
        deficit: f64,
        tolerance: f64,
        required_kmax: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("numerical divergence at step {step} (t = {time})")]
    Divergence { step: usize, time: f64 },

    #[error(
        "step size {dt} violates the stability bound: dt * max(1, kappa * (kmax + mmax)) = {product:.4} > {bound}"
    )]
    Stability { dt: f64, product: f64, bound: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("cannot parse {what} from {input:?}: {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },

    #[error("evolution did not reach a steady state by t = {t_max}")]
    NotConverged { t_max: f64 },

    #[error("quadrature did not converge: achieved error {achieved:.3e}, target {target:.1e}")]
    Quadrature { achieved: f64, target: f64 },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn parse(what: &'static str, input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            what,
            input: input.to_string(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
