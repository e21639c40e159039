use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Failure {
    #[error(transparent)]
    Core(#[from] zstab::Error),

    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error("disagreement: {0}")]
    Disagreement(String),

    #[error("verdict is Unstable")]
    Unstable,
}

impl Failure {
    pub fn code(&self) -> u8 {
        use zstab::Error as E;
        match self {
            Failure::Unstable => 1,
            Failure::Core(E::Parse(_)) => 2,
            Failure::Core(E::Numeric(_)) => 5,
            Failure::Core(_) | Failure::Read { .. } | Failure::Write { .. } => 3,
            Failure::Disagreement(_) => 4,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        use zstab::Error as E;
        assert_eq!(Failure::Core(E::Parse("x".into())).code(), 2);
        assert_eq!(Failure::Core(E::Precondition("x".into())).code(), 3);
        assert_eq!(Failure::Core(E::MixedSigns { factor: 0 }).code(), 3);
        assert_eq!(Failure::Disagreement("x".into()).code(), 4);
        assert_eq!(Failure::Core(E::Numeric("x".into())).code(), 5);
        assert_eq!(Failure::Unstable.code(), 1);
    }
}
