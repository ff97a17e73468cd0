//! Flat `key=value` config files and flag/config resolution.
//!
//! The same format is used for `--config` inputs and the `.meta` file written
//! next to every output, so a run can be replayed from its metadata.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value, got `{line}`", lineno + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_kv(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("--config: cannot read {}: {e}", path.display())))?;
    parse_kv(&text)
}

/// Flag values layered over an optional config file. Every value that is
/// looked up is recorded for the run's metadata.
#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    resolved: Vec<(String, String)>,
}

impl Settings {
    pub fn load(config: Option<&Path>) -> Result<Self, CliError> {
        let file = match config {
            Some(p) => read_kv(p)?,
            None => BTreeMap::new(),
        };
        Ok(Self { file, resolved: Vec::new() })
    }

    pub fn file_value(&self, key: &str) -> Option<&str> {
        self.file.get(key).map(String::as_str)
    }

    /// Explicit flag, else config entry, else `None`.
    pub fn get<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError> {
        let value = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(raw.parse::<T>().map_err(|_| {
                    CliError::Usage(format!("config key `{key}` (flag {}): cannot parse `{raw}`", flag_name(key)))
                })?),
                None => None,
            },
        };
        if let Some(v) = &value {
            self.record(key, v.to_string());
        }
        Ok(value)
    }

    pub fn require<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError> {
        self.get(key, flag)?.ok_or_else(|| CliError::Usage(format!("missing required flag {}", flag_name(key))))
    }

    pub fn or<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError> {
        match self.get(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.record(key, default.to_string());
                Ok(default)
            }
        }
    }

    pub fn record(&mut self, key: &str, value: String) {
        self.resolved.retain(|(k, _)| k != key);
        self.resolved.push((key.to_string(), value));
    }

    pub fn resolved(&self) -> &[(String, String)] {
        &self.resolved
    }
}

pub fn flag_name(key: &str) -> String {
    format!("--{}", key.replace('_', "-"))
}

/// `path` with `suffix` appended to its file name (`grid.csv` → `grid.csv.meta`).
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    path.with_file_name(name)
}

/// Writes `<out>.meta`: the command and every resolved setting, followed by
/// derived values.
pub fn write_meta(
    out: &Path,
    command: &str,
    settings: &Settings,
    derived: &[(String, String)],
) -> Result<PathBuf, CliError> {
    let mut text = format!("command={command}\n");
    for (k, v) in settings.resolved().iter().chain(derived) {
        text.push_str(&format!("{k}={v}\n"));
    }
    let path = sibling(out, ".meta");
    fs::write(&path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let kv = parse_kv("# header\n\nn = 50\nseed=7\n  trials=3  \n").unwrap();
        assert_eq!(kv.len(), 3);
        assert_eq!(kv["n"], "50");
        assert_eq!(kv["trials"], "3");
        assert!(parse_kv("n 50").is_err());
    }

    #[test]
    fn flags_override_config() {
        let mut s = Settings { file: parse_kv("n=50\nseed=3").unwrap(), resolved: Vec::new() };
        assert_eq!(s.get::<usize>("n", Some(20)).unwrap(), Some(20));
        assert_eq!(s.get::<u64>("seed", None).unwrap(), Some(3));
        assert_eq!(s.or::<usize>("samples", None, 100).unwrap(), 100);
        assert!(s.require::<usize>("m", None).unwrap_err().to_string().contains("--m"));
        assert_eq!(
            s.resolved(),
            &[("n".into(), "20".into()), ("seed".into(), "3".into()), ("samples".into(), "100".into())]
        );
    }

    #[test]
    fn bad_config_value_names_the_flag() {
        let mut s = Settings { file: parse_kv("t_grid=x").unwrap(), resolved: Vec::new() };
        let err = s.get::<f64>("t_grid", None).unwrap_err();
        assert!(err.to_string().contains("--t-grid"));
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(sibling(Path::new("out/grid.csv"), ".meta"), PathBuf::from("out/grid.csv.meta"));
    }
}
