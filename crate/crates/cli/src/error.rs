use gyrad::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 2 invalid config, 3 resource limit, 4 numeric failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Core(e) => match e {
                CoreError::ResourceLimit { .. } => 3,
                CoreError::Truncation { .. } | CoreError::NumericFailure { .. } | CoreError::DegenerateField(_) => 4,
                _ => 2,
            },
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            _ => match self.exit_code() {
                3 => "resource_limit",
                4 => "numeric_failure",
                _ => "invalid_config",
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.kind(), "code": self.exit_code(), "message": self.to_string() }).to_string()
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
