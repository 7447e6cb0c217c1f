use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config field '{field}': {message}")]
    Config { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
}

impl LabError {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        LabError::Config { field: field.to_string(), message: message.into() }
    }
}
