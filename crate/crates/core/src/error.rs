use thiserror::Error;

/// A fault raised while evaluating a strategy's decision procedure.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("strategy evaluation failed: {0}")]
pub struct EvalError(pub String);

/// An invalid experiment or match parameter.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid configuration: {0}")]
pub struct ConfigError(pub String);
