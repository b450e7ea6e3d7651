use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] rankforge::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("config {path}: {source}")]
    Config { path: PathBuf, source: toml::de::Error },

    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },

    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 2 for internal invariant violations, 1 for everything the user can fix.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_internal() => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn invariant_errors_exit_2() {
        let inner = rankforge::Error::Invariant("bad".into());
        assert_eq!(CliError::from(inner).exit_code(), 2);
        let fold = rankforge::Error::Fold {
            fold: 0,
            target: "x".into(),
            source: Box::new(rankforge::Error::Invariant("bad".into())),
        };
        assert_eq!(CliError::from(fold).exit_code(), 2);
        assert_eq!(CliError::from(rankforge::Error::NoSentences).exit_code(), 1);
        assert_eq!(CliError::Input("x".into()).exit_code(), 1);
    }
}
