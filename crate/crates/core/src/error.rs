use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failures raised by the numerical core.
///
/// `InvalidInput` covers every violated precondition; the remaining variants
/// are numerical or data conditions a caller may want to handle separately.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidInput(&'static str),
    /// Successive quadrature orders kept disagreeing.
    QuadratureNotConverged { relative_change: f64, panels: usize },
    /// A scan point failed; `index` is its position in the input grid.
    ScanPoint { index: usize, source: alloc::boxed::Box<Error> },
    MissingLines(&'static str),
    /// Trap light coincides with a transition in the line table.
    ResonantTrapLight { wavelength_nm: f64 },
    FitNotConverged { iterations: usize },
    DegenerateData,
    NoIntervals,
    ZeroReferenceCounts,
    Empty,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::QuadratureNotConverged { relative_change, panels } => write!(
                f,
                "quadrature did not converge (relative change {relative_change:.3e} at {panels} panels)"
            ),
            Error::ScanPoint { index, source } => write!(f, "scan point {index}: {source}"),
            Error::MissingLines(level) => write!(f, "line table has no transitions for {level}"),
            Error::ResonantTrapLight { wavelength_nm } => {
                write!(f, "trap light is resonant with the {wavelength_nm} nm line")
            }
            Error::FitNotConverged { iterations } => {
                write!(f, "fit did not converge after {iterations} iterations")
            }
            Error::DegenerateData => write!(f, "degenerate data: all transmissions are equal"),
            Error::NoIntervals => write!(f, "event has no complete measurement interval"),
            Error::ZeroReferenceCounts => write!(f, "reference count is zero"),
            Error::Empty => write!(f, "empty input"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
