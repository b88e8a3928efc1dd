//! `--config` files: flat `key = value` lines merged under the command
//! line. Keys are subcommand flag names with `-` or `_`; `#` starts a
//! comment line.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::CommandFactory;

use crate::args::Cli;
use crate::error::CliError;

fn take_config_path(argv: &mut Vec<OsString>) -> Result<Option<PathBuf>, CliError> {
    let mut found = None;
    let mut i = 1;
    while i < argv.len() {
        let arg = argv[i].to_string_lossy().into_owned();
        if arg == "--" {
            break;
        }
        if arg == "--config" {
            if i + 1 >= argv.len() {
                return Err(CliError::Usage("--config needs a file".into()));
            }
            found = Some(PathBuf::from(argv.remove(i + 1)));
            argv.remove(i);
        } else if let Some(path) = arg.strip_prefix("--config=") {
            found = Some(PathBuf::from(path));
            argv.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", n + 1)))?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        pairs.push((key, value.trim().trim_matches('"').to_owned()));
    }
    Ok(pairs)
}

/// Removes `--config FILE` from `argv` and splices the file's settings in
/// right after the subcommand name, skipping keys also given as flags.
pub fn expand(mut argv: Vec<OsString>) -> Result<(Vec<OsString>, Option<PathBuf>), CliError> {
    let Some(path) = take_config_path(&mut argv)? else {
        return Ok((argv, None));
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let Some(sub_pos) = argv.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|p| p + 1)
    else {
        return Ok((argv, Some(path)));
    };
    let sub_name = argv[sub_pos].to_string_lossy().into_owned();
    let command = Cli::command();
    let Some(sub) = command.find_subcommand(&sub_name) else {
        return Ok((argv, Some(path)));
    };
    let given: Vec<String> = argv[sub_pos + 1..].iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in parse_pairs(&text)? {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| CliError::Usage(format!("config key `{key}` is not an option of {sub_name}")))?;
        let flag = format!("--{key}");
        if given.iter().any(|g| *g == flag || g.starts_with(&format!("{flag}="))) {
            continue;
        }
        if arg.get_action().takes_values() {
            injected.push(flag.into());
            injected.push(value.into());
        } else {
            match value.as_str() {
                "true" | "yes" | "1" => injected.push(flag.into()),
                "false" | "no" | "0" => {}
                other => return Err(CliError::Usage(format!("config key `{key}` expects true or false, got {other:?}"))),
            }
        }
    }
    argv.splice(sub_pos + 1..sub_pos + 1, injected);
    Ok((argv, Some(path)))
}
