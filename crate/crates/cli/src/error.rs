use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] gaussdyn::Error),

    #[error("cannot parse scenario: {0}")]
    ScenarioParse(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    pub fn name(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.name(),
            CliError::ScenarioParse(_) => "ScenarioParseError",
            CliError::InvalidScenario(_) => "InvalidScenario",
            CliError::Io(_) => "IoError",
        }
    }

    /// `{"error": name, "message": text}` on one line.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self.name(), "message": self.to_string() }).to_string()
    }
}
