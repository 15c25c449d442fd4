use std::path::{Path, PathBuf};

use thiserror::Error;

/// Problems with an experiment file, anchored to a line where possible.
#[derive(Debug, Error)]
pub enum SpecError {
    #[error("{}: {source}", file.display())]
    Io {
        file: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}:{line}: {message}", file.display())]
    Invalid {
        file: PathBuf,
        line: usize,
        message: String,
    },
}

impl SpecError {
    pub fn io(file: &Path, source: std::io::Error) -> Self {
        SpecError::Io {
            file: file.to_path_buf(),
            source,
        }
    }

    /// Anchor `message` at the first line that assigns `key`, or line 1.
    pub fn at_key(file: &Path, text: &str, key: &str, message: String) -> Self {
        let quoted = format!("\"{key}\"");
        let line = text
            .lines()
            .position(|l| {
                let l = l.trim_start();
                l.starts_with(&quoted)
                    || l.strip_prefix(key)
                        .is_some_and(|rest| rest.trim_start().starts_with('='))
            })
            .map_or(1, |i| i + 1);
        SpecError::Invalid {
            file: file.to_path_buf(),
            line,
            message,
        }
    }
}
