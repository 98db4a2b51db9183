use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} = {value} is outside its domain {expected}")]
    Domain {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    /// `sin(2ωτ) = 0`: the averaged-dynamics amplitude is undefined.
    #[error("degenerate frequency: sin(2ωτ) vanishes at ωτ = {omega_tau}")]
    DegenerateFrequency { omega_tau: f64 },

    #[error("refusing to enumerate {bits} outcome bits (limit {limit})")]
    EnumerationTooLarge { bits: usize, limit: usize },

    #[error("trajectory does not match the protocol: {0}")]
    ShapeMismatch(String),

    #[error("inputs outside the model's range of validity: {0}")]
    OutOfValidity(String),

    #[error("numerical consistency check failed: {0}")]
    Numerical(String),

    #[error("malformed trajectory record: {0}")]
    Decode(String),
}

pub(crate) fn check_domain(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            expected,
        })
    }
}
