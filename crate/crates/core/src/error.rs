use thiserror::Error;

/// Errors raised by the channel-model library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("kernel undefined at (d'={d_prime}, x={x}, y={y}): non-positive radicand")]
    KernelDomain { d_prime: f64, x: f64, y: f64 },

    #[error("lens has zero area (d0={d0}, a={a}, b={b})")]
    EmptyRegion { d0: f64, a: f64, b: f64 },

    #[error("{0:?} scatterer class has no active region (zero-area visibility lens)")]
    DegenerateClass(crate::pointprocess::ClassKind),

    #[error("no multipath component can exist in this scenario")]
    NoPath,

    #[error("scatterer coincides with a node; angle undefined")]
    DegenerateAngle,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}

/// Checks that `value` is finite and not negative.
pub(crate) fn non_negative(name: &'static str, value: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(invalid(name, format!("must be finite, got {value}")));
    }
    if value < 0.0 {
        return Err(invalid(name, format!("must be >= 0, got {value}")));
    }
    Ok(value)
}

/// Checks that `value` is finite and strictly positive.
pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    non_negative(name, value)?;
    if value == 0.0 {
        return Err(invalid(name, "must be > 0, got 0"));
    }
    Ok(value)
}
