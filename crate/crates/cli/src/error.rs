use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Validation(String),
}

#[derive(Serialize)]
struct Report<'a> {
    error: &'a str,
    exit_code: u8,
    message: String,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Validation(_) => 4,
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        let error = match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Validation(_) => "validation",
        };
        serde_json::to_string(&Report {
            error,
            exit_code: self.exit_code(),
            message: self.to_string(),
        })
        .expect("report serializes")
    }
}
