//! Optional TOML config file whose keys mirror long flag names.
//!
//! Config values are injected right after the subcommand name; the
//! subcommands are built with `args_override_self`, so a flag given on the
//! command line replaces the config value.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::Command;

/// Flags that are mutually exclusive with each other; if the user gives any
/// member of a group, config values for the whole group are dropped.
const EXCLUSIVE: &[&[&str]] = &[&["W", "W-db"], &["pattern", "family"]];

pub fn load(path: &Path) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    text.parse::<toml::Table>()
        .with_context(|| format!("parsing config file {}", path.display()))
}

fn given(user_args: &[String], long: &str) -> bool {
    let flag = format!("--{long}");
    let with_eq = format!("--{long}=");
    user_args.iter().any(|a| *a == flag || a.starts_with(&with_eq))
}

fn render(key: &str, value: &toml::Value) -> Result<Vec<String>> {
    let flag = format!("--{key}");
    Ok(match value {
        toml::Value::Boolean(true) => vec![flag],
        toml::Value::Boolean(false) => vec![],
        toml::Value::String(s) => vec![flag, s.clone()],
        toml::Value::Integer(i) => vec![flag, i.to_string()],
        toml::Value::Float(f) => vec![flag, f.to_string()],
        toml::Value::Array(items) => {
            let parts: Result<Vec<String>> = items
                .iter()
                .map(|v| match v {
                    toml::Value::Float(f) => Ok(f.to_string()),
                    toml::Value::Integer(i) => Ok(i.to_string()),
                    toml::Value::String(s) => Ok(s.clone()),
                    other => bail!("unsupported list element {other} for {key}"),
                })
                .collect();
            vec![flag, parts?.join(",")]
        }
        other => bail!("unsupported config value {other} for {key}"),
    })
}

/// Returns `args` with config-file flags for `subcommand` inserted after it.
/// Unknown keys are ignored so one file can serve several subcommands.
pub fn merge(
    cmd: &Command,
    args: &[String],
    subcommand_pos: usize,
    table: &toml::Table,
) -> Result<Vec<String>> {
    let name = &args[subcommand_pos];
    let Some(sub) = cmd.find_subcommand(name) else {
        return Ok(args.to_vec());
    };
    let known: Vec<&str> = sub.get_arguments().filter_map(|a| a.get_long()).collect();
    let user = &args[subcommand_pos + 1..];
    let mut injected = Vec::new();
    for (key, value) in table {
        if !known.contains(&key.as_str()) || given(user, key) {
            continue;
        }
        let blocked = EXCLUSIVE
            .iter()
            .any(|group| group.contains(&key.as_str()) && group.iter().any(|k| given(user, k)));
        if blocked {
            continue;
        }
        injected.extend(render(key, value)?);
    }
    let mut out = args[..=subcommand_pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(user);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Arg;

    fn cmd() -> Command {
        Command::new("t").subcommand(
            Command::new("mi")
                .args_override_self(true)
                .arg(Arg::new("W").long("W"))
                .arg(Arg::new("W-db").long("W-db"))
                .arg(Arg::new("J").long("J")),
        )
    }

    #[test]
    fn flags_win_over_config() {
        let table: toml::Table = "W = 0.5\nJ = 2\nunknown = 1".parse().unwrap();
        let args: Vec<String> = ["mi", "--J", "3"].iter().map(|s| s.to_string()).collect();
        let merged = merge(&cmd(), &args, 0, &table).unwrap();
        assert_eq!(merged, vec!["mi", "--W", "0.5", "--J", "3"]);
    }

    #[test]
    fn exclusive_groups_respected() {
        let table: toml::Table = "W = 0.5".parse().unwrap();
        let args: Vec<String> = ["mi", "--W-db", "-20"].iter().map(|s| s.to_string()).collect();
        let merged = merge(&cmd(), &args, 0, &table).unwrap();
        assert_eq!(merged, vec!["mi", "--W-db", "-20"]);
    }
}
