use std::fmt;
use std::path::Path;

/// Pipeline stage named in error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    GenScene,
    Explore,
    BuildMemory,
    Query,
    Plan,
    Bench,
    Ablate,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::GenScene => "gen-scene",
            Stage::Explore => "explore",
            Stage::BuildMemory => "build-memory",
            Stage::Query => "query",
            Stage::Plan => "plan",
            Stage::Bench => "bench",
            Stage::Ablate => "ablate",
            Stage::Export => "export",
        })
    }
}

/// Error class, which fixes the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Malformed flags, config or input documents.
    Parse,
    Io,
    /// Valid input the pipeline cannot satisfy.
    Domain,
    /// A harness self-check failed.
    Neutrality,
}

impl Kind {
    pub fn exit_code(self) -> u8 {
        match self {
            Kind::Parse => 2,
            Kind::Io => 3,
            Kind::Domain => 4,
            Kind::Neutrality => 5,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub stage: Stage,
    pub input: String,
    pub message: String,
}

impl CliError {
    pub fn new(kind: Kind, stage: Stage, input: impl fmt::Display, message: impl fmt::Display) -> Self {
        Self {
            kind,
            stage,
            input: input.to_string(),
            message: message.to_string(),
        }
    }

    pub fn io(stage: Stage, path: &Path, e: impl fmt::Display) -> Self {
        Self::new(Kind::Io, stage, path.display(), e)
    }

    pub fn parse(stage: Stage, input: impl fmt::Display, e: impl fmt::Display) -> Self {
        Self::new(Kind::Parse, stage, input, e)
    }

    pub fn domain(stage: Stage, input: impl fmt::Display, e: impl fmt::Display) -> Self {
        Self::new(Kind::Domain, stage, input, e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed on {}: {}", self.stage, self.input, self.message)
    }
}

impl std::error::Error for CliError {}
