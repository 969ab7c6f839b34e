//! CLI error type and the key=value config file with its precedence rules:
//! built-in defaults < config file < explicit flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config values; exit code 2.
    Usage(String),
    /// Anything that goes wrong after the flags parsed; exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<stein_core::SteinError> for CliError {
    fn from(e: stein_core::SteinError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Parsed config file: `key = value` lines, `#` comments, blank lines
/// ignored. Keys use the long flag spelling without the leading dashes
/// (e.g. `record-every = 50`). Each key must be consumed by the running
/// subcommand; leftovers are usage errors.
#[derive(Debug)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
    source: Option<String>,
}

impl ConfigMap {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(ConfigMap {
                values: BTreeMap::new(),
                source: None,
            });
        };
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::usage(format!(
                    "config file {} line {}: expected 'key = value', got '{raw}'",
                    path.display(),
                    idx + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(CliError::usage(format!(
                    "config file {} line {}: empty key",
                    path.display(),
                    idx + 1
                )));
            }
            if values.insert(key.clone(), value).is_some() {
                return Err(CliError::usage(format!(
                    "config file {} line {}: duplicate key '{key}'",
                    path.display(),
                    idx + 1
                )));
            }
        }
        Ok(ConfigMap {
            values,
            source: Some(path.display().to_string()),
        })
    }

    fn take_parsed<T>(&mut self, key: &str) -> CliResult<Option<T>>
    where
        T: FromStr,
        <T as FromStr>::Err: fmt::Display,
    {
        match self.values.remove(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                CliError::usage(format!("config key '{key}': cannot parse '{raw}': {e}"))
            }),
        }
    }

    /// Flag value if given, else config value, else the default.
    pub fn resolve<T>(&mut self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T: FromStr,
        <T as FromStr>::Err: fmt::Display,
    {
        match flag {
            Some(v) => {
                // Still consume the config entry so it doesn't count as
                // unknown; the flag wins.
                self.take_parsed::<T>(key)?;
                Ok(v)
            }
            None => Ok(self.take_parsed::<T>(key)?.unwrap_or(default)),
        }
    }

    /// Like [`resolve`](Self::resolve) but without a default.
    pub fn resolve_opt<T>(&mut self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T: FromStr,
        <T as FromStr>::Err: fmt::Display,
    {
        match flag {
            Some(v) => {
                self.take_parsed::<T>(key)?;
                Ok(Some(v))
            }
            None => self.take_parsed::<T>(key),
        }
    }

    /// Boolean switch: the bare flag sets true; otherwise the config file may
    /// say `key = true|false`.
    pub fn resolve_switch(&mut self, flag: bool, key: &str) -> CliResult<bool> {
        let cfg = self.take_parsed::<bool>(key)?;
        Ok(flag || cfg.unwrap_or(false))
    }

    /// Error on unconsumed keys so typos in config files are caught.
    pub fn finish(self) -> CliResult<()> {
        if self.values.is_empty() {
            return Ok(());
        }
        let keys: Vec<&str> = self.values.keys().map(String::as_str).collect();
        Err(CliError::usage(format!(
            "unknown config key(s) in {}: {}",
            self.source.as_deref().unwrap_or("config"),
            keys.join(", ")
        )))
    }
}

/// Parse a comma-separated list of `T`, for flags like `--sweep-n 10,50,100`.
pub fn parse_list<T>(raw: &str, flag: &str) -> CliResult<Vec<T>>
where
    T: FromStr,
    <T as FromStr>::Err: fmt::Display,
{
    let mut out = Vec::new();
    for token in raw.split(',') {
        let token = token.trim();
        if token.is_empty() {
            return Err(CliError::usage(format!(
                "invalid value for {flag}: empty entry in '{raw}'"
            )));
        }
        out.push(token.parse::<T>().map_err(|e| {
            CliError::usage(format!("invalid value for {flag}: '{token}': {e}"))
        })?);
    }
    if out.is_empty() {
        return Err(CliError::usage(format!(
            "invalid value for {flag}: expected a comma-separated list"
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn precedence_defaults_config_flags() {
        let f = write_config("n = 7\n# comment\niters = 9\n");
        let mut cfg = ConfigMap::load(Some(f.path())).unwrap();
        // Flag wins over config.
        assert_eq!(cfg.resolve(Some(3usize), "n", 1).unwrap(), 3);
        // Config wins over default.
        assert_eq!(cfg.resolve(None::<usize>, "iters", 1).unwrap(), 9);
        // Default when absent everywhere.
        assert_eq!(cfg.resolve(None::<u64>, "seed", 42).unwrap(), 42);
        cfg.finish().unwrap();
    }

    #[test]
    fn unknown_keys_are_usage_errors() {
        let f = write_config("bogus = 1\n");
        let cfg = ConfigMap::load(Some(f.path())).unwrap();
        let err = cfg.finish().unwrap_err();
        assert_eq!(err.code(), 2);
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn malformed_lines_are_usage_errors() {
        let f = write_config("just a line\n");
        assert!(matches!(
            ConfigMap::load(Some(f.path())),
            Err(CliError::Usage(_))
        ));
        let f = write_config("n = 1\nn = 2\n");
        let err = ConfigMap::load(Some(f.path())).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn list_parsing() {
        assert_eq!(
            parse_list::<usize>("10, 50,100", "--sweep-n").unwrap(),
            vec![10, 50, 100]
        );
        assert!(parse_list::<usize>("10,,50", "--sweep-n").is_err());
        assert!(parse_list::<f64>("a", "--means").is_err());
    }
}
