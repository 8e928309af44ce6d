use std::fmt;

use thiserror::Error;

/// Pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Delineate,
    Indicators,
    Cooccur,
    Burst,
    Classify,
    Interlink,
    Report,
}

impl Stage {
    pub const PIPELINE: [Stage; 8] = [
        Stage::Ingest,
        Stage::Delineate,
        Stage::Indicators,
        Stage::Cooccur,
        Stage::Burst,
        Stage::Classify,
        Stage::Interlink,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Delineate => "delineate",
            Stage::Indicators => "indicators",
            Stage::Cooccur => "cooccur",
            Stage::Burst => "burst",
            Stage::Classify => "classify",
            Stage::Interlink => "interlink",
            Stage::Report => "report",
        }
    }

    /// Bundle subdirectory holding the stage's outputs.
    pub fn dir(self) -> &'static str {
        match self {
            Stage::Delineate => "delineation",
            Stage::Classify => "sdg",
            Stage::Report => "",
            other => other.as_str(),
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage}: input error: {message}")]
    Input { stage: Stage, message: String },
    #[error("{stage}: {message}")]
    Stage { stage: Stage, message: String },
}

impl CliError {
    pub fn input(stage: Stage, message: impl fmt::Display) -> Self {
        CliError::Input {
            stage,
            message: message.to_string(),
        }
    }

    pub fn stage(stage: Stage, message: impl fmt::Display) -> Self {
        CliError::Stage {
            stage,
            message: message.to_string(),
        }
    }

    pub fn missing_upstream(stage: Stage, needs: Stage) -> Self {
        CliError::stage(
            stage,
            format!("missing outputs of stage `{needs}`; run `sdgscope {needs}` first"),
        )
    }

    /// 2 config error, 3 input error, 4 stage failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input { .. } => 3,
            CliError::Stage { .. } => 4,
        }
    }
}
