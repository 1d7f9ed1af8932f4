//! The five-valued diagnostic state and its severity order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Discrete diagnostic state reported by monitors and aggregation nodes.
///
/// `Ok`, `Warning` and `Error` grade functionality. `Ignore` and `Unknown`
/// are non-functional: the first marks a part of the diagnosis as
/// irrelevant, the second marks it as not observable right now.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DiagnosticState {
    Ok,
    Warning,
    Error,
    Ignore,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("IGNORE cannot be combined by severity")]
    IgnoreOperand,
    #[error("unknown diagnostic state token `{0}`")]
    UnknownToken(String),
}

impl DiagnosticState {
    pub const ALL: [DiagnosticState; 5] = [
        DiagnosticState::Ok,
        DiagnosticState::Warning,
        DiagnosticState::Error,
        DiagnosticState::Ignore,
        DiagnosticState::Unknown,
    ];

    /// The four states that take part in the severity lattice, ascending.
    pub const SEVERITY_ORDER: [DiagnosticState; 4] = [
        DiagnosticState::Ok,
        DiagnosticState::Unknown,
        DiagnosticState::Warning,
        DiagnosticState::Error,
    ];

    /// Position in `OK < UNKNOWN < WARNING < ERROR`; `None` for IGNORE.
    pub fn severity_rank(self) -> Option<u8> {
        match self {
            DiagnosticState::Ok => Some(0),
            DiagnosticState::Unknown => Some(1),
            DiagnosticState::Warning => Some(2),
            DiagnosticState::Error => Some(3),
            DiagnosticState::Ignore => None,
        }
    }

    /// IGNORE and UNKNOWN carry no grade-of-functionality meaning.
    pub fn is_functional(self) -> bool {
        !matches!(self, DiagnosticState::Ignore | DiagnosticState::Unknown)
    }

    pub fn as_token(self) -> &'static str {
        match self {
            DiagnosticState::Ok => "OK",
            DiagnosticState::Warning => "WARNING",
            DiagnosticState::Error => "ERROR",
            DiagnosticState::Ignore => "IGNORE",
            DiagnosticState::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for DiagnosticState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_token())
    }
}

impl FromStr for DiagnosticState {
    type Err = StateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DiagnosticState::ALL
            .into_iter()
            .find(|state| state.as_token() == s)
            .ok_or_else(|| StateError::UnknownToken(s.to_string()))
    }
}

/// Join of two states under `OK < UNKNOWN < WARNING < ERROR`.
///
/// IGNORE is an aggregation-level override and is rejected here.
pub fn severity_max(a: DiagnosticState, b: DiagnosticState) -> Result<DiagnosticState, StateError> {
    let ra = a.severity_rank().ok_or(StateError::IgnoreOperand)?;
    let rb = b.severity_rank().ok_or(StateError::IgnoreOperand)?;
    Ok(if rb > ra { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::DiagnosticState::*;
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(severity_max(Ok, Ok).unwrap(), Ok);
        assert_eq!(severity_max(Ok, Warning).unwrap(), Warning);
        assert_eq!(severity_max(Warning, Error).unwrap(), Error);
        assert_eq!(severity_max(Ok, Unknown).unwrap(), Unknown);
        assert_eq!(severity_max(Unknown, Warning).unwrap(), Warning);
    }

    #[test]
    fn ignore_is_rejected() {
        assert_eq!(severity_max(Ignore, Ok), Err(StateError::IgnoreOperand));
        assert_eq!(severity_max(Error, Ignore), Err(StateError::IgnoreOperand));
    }

    #[test]
    fn semilattice_laws_exhaustive() {
        let s = DiagnosticState::SEVERITY_ORDER;
        for a in s {
            assert_eq!(severity_max(a, a).unwrap(), a);
            for b in s {
                assert_eq!(severity_max(a, b).unwrap(), severity_max(b, a).unwrap());
                for c in s {
                    let left = severity_max(severity_max(a, b).unwrap(), c).unwrap();
                    let right = severity_max(a, severity_max(b, c).unwrap()).unwrap();
                    assert_eq!(left, right);
                }
            }
        }
    }

    #[test]
    fn tokens() {
        for state in DiagnosticState::ALL {
            assert_eq!(state.as_token().parse::<DiagnosticState>().unwrap(), state);
        }
        assert!("BROKEN".parse::<DiagnosticState>().is_err());
        assert!(!Ignore.is_functional());
        assert!(!Unknown.is_functional());
        assert!(Warning.is_functional());
    }
}
