use otsat::encode::EncodeError;
use otsat::Diagnostic;
use otsat::saturation::SaturationError;
use otsat::syntax::{ParseError, ParseErrorKind};
use thiserror::Error;

/// Everything that ends a command early, tagged with its exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}:{err}")]
    Parse { context: String, err: ParseError },
    #[error("{}", render_diagnostics(path, diags))]
    Validation { path: String, diags: Vec<Diagnostic> },
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Cap(String),
    #[error("{0}")]
    Disagreement(String),
}

impl CliError {
    pub fn parse(context: &str, err: ParseError) -> Self {
        CliError::Parse {
            context: context.to_string(),
            err,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Parse { err, .. } if err.kind == ParseErrorKind::Syntax => 2,
            CliError::Parse { .. } | CliError::Validation { .. } | CliError::Invalid(_) => 3,
            CliError::Cap(_) => 4,
            CliError::Disagreement(_) => 5,
        }
    }
}

impl From<SaturationError> for CliError {
    fn from(e: SaturationError) -> Self {
        match e {
            SaturationError::TransitionCapExceeded { .. } => CliError::Cap(e.to_string()),
            e => CliError::Invalid(e.to_string()),
        }
    }
}

/// Encoder errors, with parse errors located in `context`.
pub fn encode_error(context: &str, e: EncodeError) -> CliError {
    match e {
        EncodeError::Parse(p) => CliError::parse(context, p),
        EncodeError::Saturation(s) => s.into(),
        e => CliError::Invalid(e.to_string()),
    }
}

/// One `path:line: rule-N: message` line per finding.
fn render_diagnostics(path: &str, diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| {
            let loc = match d.line {
                Some(l) => format!("{path}:{l}"),
                None => path.to_string(),
            };
            match d.rule {
                Some(r) => format!("{loc}: rule-{}: {}", r + 1, d.message),
                None => format!("{loc}: {}", d.message),
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}
