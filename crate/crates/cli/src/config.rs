//! Flat `key = value` configuration files.
//!
//! Each key names a long flag of the chosen subcommand. The file's values are
//! spliced into the argument list ahead of the command-line flags, and since
//! every flag may repeat with the last occurrence winning, flags override the
//! file.

use std::path::{Path, PathBuf};

use crate::error::CliError;

/// Parses the file into `--key=value` arguments. Blank lines and lines
/// starting with `#` are skipped. `key = true` becomes a bare `--key` and
/// `key = false` is dropped.
pub fn load(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Vec<String>, CliError> {
    let mut args = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Input(format!("config line {}: expected key = value", i + 1))
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(CliError::Input(format!(
                "config line {}: invalid key",
                i + 1
            )));
        }
        match value.trim() {
            "true" => args.push(format!("--{key}")),
            "false" => {}
            v => args.push(format!("--{key}={v}")),
        }
    }
    Ok(args)
}

/// Value of `--config`, located before the full parse so that the file can
/// supply required flags.
pub fn find_path(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

/// Places the file's arguments directly after the subcommand, followed by
/// every command-line argument. Global flags are accepted after the
/// subcommand, so moving them keeps their meaning.
pub fn splice(argv: &[String], subcommand: &str, from_file: Vec<String>) -> Vec<String> {
    let pos = argv
        .iter()
        .skip(1)
        .position(|a| a == subcommand)
        .map(|p| p + 1)
        .unwrap_or(argv.len());
    let mut out = vec![argv[0].clone(), subcommand.to_string()];
    out.extend(from_file);
    out.extend(argv[1..pos].iter().cloned());
    out.extend(argv.iter().skip(pos + 1).cloned());
    out
}
