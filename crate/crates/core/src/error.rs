use alloc::boxed::Box;
use alloc::string::String;

use crate::model::State;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid model parameter: {0}")]
    Parameter(&'static str),

    #[error("water height {h} is below the positivity floor {h_min}")]
    Positivity { h: f64, h_min: f64 },

    #[error("positivity violated in element {element}, node {node}: {state:?}")]
    PositivityAt {
        element: usize,
        node: usize,
        state: State,
    },

    #[error("non-finite value in element {element}, node {node}")]
    NonFinite { element: usize, node: usize },

    #[error("entropy-variable inversion produced water height {h}")]
    Inversion { h: f64 },

    #[error("linear path in entropy variables leaves the admissible set at s = {s} (h = {h})")]
    Path { s: f64, h: f64 },

    #[error("Roe matrix has complex eigenvalues")]
    NotHyperbolic,

    #[error("Roe eigenvalues are not separated (gap {gap:e})")]
    Degenerate { gap: f64 },

    #[error("LLF viscosity produces entropy (dS = {delta_s}, dS_llf = {delta_s_llf})")]
    BlendContract { delta_s: f64, delta_s_llf: f64 },

    #[error("time integration failed at t = {t}: {source}")]
    Integration {
        t: f64,
        #[source]
        source: Box<Error>,
    },
}
