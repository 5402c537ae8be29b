use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("not a unit: {0}")]
    NotAUnit(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sublattice is not unimodular")]
    NotUnimodular,
    #[error("integer system has no solution")]
    NoSolution,
    #[error("elements belong to different tori")]
    TorusMismatch,
    #[error("sublattice is not central")]
    NotCentral,
    #[error("sublattice is not isotropic")]
    NotIsotropic,
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("gluing is not involutive at tetrahedron {tet}, face {face}")]
    NonInvolutiveGluing { tet: usize, face: usize },
    #[error("invalid permutation at tetrahedron {tet}, face {face}")]
    PermutationInvalid { tet: usize, face: usize },
    #[error("inconsistent threads: {0}")]
    InconsistentThreads(String),
    #[error("gluing sublattice checks failed: {0}")]
    GluingChecksFailed(String),
    #[error("long-edge cycle walk failed: {0}")]
    CycleWalkFailed(String),
    #[error("element is not invariant: {0}")]
    NotInvariant(String),
    #[error("elimination budget exhausted at degree {0}")]
    BudgetExhausted(usize),
    #[error("certificate failed: {0}")]
    CertificateFailed(String),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotAUnit(_) => 10,
            Error::DimensionMismatch { .. } => 11,
            Error::NotUnimodular => 12,
            Error::NoSolution => 13,
            Error::TorusMismatch => 14,
            Error::NotCentral => 15,
            Error::NotIsotropic => 16,
            Error::MalformedInput(_) => 20,
            Error::NonInvolutiveGluing { .. } => 21,
            Error::PermutationInvalid { .. } => 22,
            Error::InconsistentThreads(_) => 23,
            Error::GluingChecksFailed(_) => 24,
            Error::CycleWalkFailed(_) => 25,
            Error::NotInvariant(_) => 26,
            Error::BudgetExhausted(_) => 30,
            Error::CertificateFailed(_) => 31,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn exit_codes_are_distinct() {
        let all = [
            Error::NotAUnit(String::new()),
            Error::DimensionMismatch { expected: 0, got: 1 },
            Error::NotUnimodular,
            Error::NoSolution,
            Error::TorusMismatch,
            Error::NotCentral,
            Error::NotIsotropic,
            Error::MalformedInput(String::new()),
            Error::NonInvolutiveGluing { tet: 0, face: 0 },
            Error::PermutationInvalid { tet: 0, face: 0 },
            Error::InconsistentThreads(String::new()),
            Error::GluingChecksFailed(String::new()),
            Error::CycleWalkFailed(String::new()),
            Error::NotInvariant(String::new()),
            Error::BudgetExhausted(0),
            Error::CertificateFailed(String::new()),
        ];
        let codes: BTreeSet<i32> = all.iter().map(|e| e.exit_code()).collect();
        assert_eq!(codes.len(), all.len());
        // 0 is success, 1 a failed check, 2 a usage error, 3 an I/O error
        assert!(codes.iter().all(|&c| c > 3 && c < 256));
    }
}
