use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{module}::{operation}: {source}")]
    Module {
        module: &'static str,
        operation: &'static str,
        #[source]
        source: levy_she::Error,
    },

    #[error("io: {context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("identities: {0} check(s) above threshold")]
    IdentityFailure(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use levy_she::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Module { source: E::InvalidParameter { .. } | E::OutOfRange { .. } | E::InvalidDelta { .. }, .. } => 2,
            _ => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags a core error with the module and operation that raised it.
pub trait Context<T> {
    fn during(self, module: &'static str, operation: &'static str) -> CliResult<T>;
}

impl<T> Context<T> for levy_she::Result<T> {
    fn during(self, module: &'static str, operation: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Module { module, operation, source })
    }
}

pub fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}
