use alloc::string::String;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("location `{label}` at ({x}, {y}) lies outside the {width}x{height} floorplan")]
    OffFloorplan {
        label: String,
        x: u32,
        y: u32,
        width: u32,
        height: u32,
    },

    #[error("duplicate floorplan label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown floorplan label `{0}`")]
    UnknownLabel(String),

    #[error("message must be smaller than the modulus")]
    MessageOutOfRange,

    #[error("modulus must be at least 2")]
    ModulusTooSmall,

    #[error("RO count {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("frequency is not finite")]
    NonFiniteFrequency,

    #[error("active set count {active} exceeds bank size {sets}")]
    ActiveSetsOutOfRange { active: u32, sets: u32 },

    #[error("slot for key bit {0} contains no samples")]
    EmptySlot(usize),

    #[error("traces have different lengths ({expected} vs {found})")]
    TraceLengthMismatch { expected: usize, found: usize },

    #[error("at least {needed} values are required, got {got}")]
    NotEnoughData { needed: usize, got: usize },

    #[error("statistic is undefined: {0}")]
    Undefined(&'static str),

    #[error("calibration impossible: {0}")]
    Calibration(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
