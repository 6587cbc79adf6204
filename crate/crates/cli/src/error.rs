use poresim_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// A flag value that failed to parse or validate.
    #[error("invalid {flag}: {message}")]
    Flag { flag: String, message: String },
    #[error("{}", describe(.0))]
    Core(#[from] Error),
}

impl CliError {
    pub fn flag(flag: &str, message: impl Into<String>) -> Self {
        Self::Flag {
            flag: flag.to_string(),
            message: message.into(),
        }
    }

    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Flag { .. } => 2,
            Self::Core(e) if e.is_config() => 2,
            Self::Core(_) => 1,
        }
    }
}

/// Command-line flag corresponding to a configuration field.
pub fn flag_for(field: &str) -> String {
    match field {
        "event_density_factor" => "--density".into(),
        "n_harmonics" => "--harmonics".into(),
        other => format!("--{}", other.replace('_', "-")),
    }
}

fn describe(e: &Error) -> String {
    match e {
        Error::Config { field, message } => format!("invalid {}: {message}", flag_for(field)),
        Error::Stability { .. } => format!("invalid --capacitance: {e}"),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_name_the_flag() {
        let e = CliError::from(Error::config("mincurr", "too big"));
        assert_eq!(e.to_string(), "invalid --mincurr: too big");
        assert_eq!(e.exit_code(), 2);
        let e = CliError::from(Error::config("event_density_factor", "x"));
        assert!(e.to_string().starts_with("invalid --density"));
        let io = CliError::from(Error::io("/nope", std::io::Error::other("gone")));
        assert_eq!(io.exit_code(), 1);
    }
}
