use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    /// Invalid or inconsistent configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Tensor or buffer dimensions do not match.
    #[error("shape error: {0}")]
    Shape(String),
    /// Input values violate a precondition (non-finite, negative, ...).
    #[error("data error: {0}")]
    Data(String),
    /// An API was used out of order (e.g. pushing after flush).
    #[error("contract violation: {0}")]
    Contract(String),
}

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::Error::$kind(alloc::format!($($arg)*)))
    };
}

pub(crate) use bail;

pub(crate) fn check_len(what: &str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        bail!(Shape, "{what}: expected length {expected}, got {actual}");
    }
    Ok(())
}

pub(crate) fn check_finite(what: &str, values: &[f32]) -> Result<()> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        bail!(Data, "{what}: non-finite value at index {i}");
    }
    Ok(())
}
