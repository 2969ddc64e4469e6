//! Flat `key = value` config files, spliced into the argument list as
//! flags ahead of the user's own, so that command-line flags win.

use std::ffi::OsString;
use std::fs;

use anyhow::{bail, Result};

use crate::ConfigError;

/// Parses `key = value` lines. Blank lines and `#` comments are ignored;
/// underscores in keys become dashes.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!(ConfigError(format!("config line {}: expected key = value", i + 1)));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            bail!(ConfigError(format!("config line {}: invalid key {:?}", i + 1, k.trim())));
        }
        out.push((key, v.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

fn as_flags(pairs: Vec<(String, String)>) -> Vec<OsString> {
    let mut out = Vec::new();
    for (k, v) in pairs {
        match v.as_str() {
            "true" => out.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{k}").into());
                out.push(v.into());
            }
        }
    }
    out
}

pub const SUBCOMMANDS: [&str; 7] = ["simulate", "estimate", "panel", "event-study", "regress", "bounds", "sweep"];

/// Removes `--config FILE` from `args` and inserts the file's flags right
/// after the subcommand name.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut path: Option<OsString> = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(it.next().ok_or_else(|| ConfigError("--config needs a file".into()))?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = fs::read_to_string(&path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let flags = as_flags(parse(&text)?);
    let sub = rest.iter().skip(1).position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()));
    let at = sub.map_or(rest.len(), |p| p + 2);
    rest.splice(at..at, flags);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_and_comments() {
        let p = parse("# run\nsteps = 100\n\nmin_price=0\nname = \"x y\"\n").unwrap();
        assert_eq!(
            p,
            vec![("steps".into(), "100".into()), ("min-price".into(), "0".into()), ("name".into(), "x y".into())]
        );
        assert!(parse("steps 100").is_err());
    }

    #[test]
    fn flags_follow_the_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.cfg");
        fs::write(&cfg, "steps = 100\nintercept = true\nquiet = false\n").unwrap();
        let args: Vec<OsString> =
            ["infoval", "--threads", "2", "simulate", "--config", cfg.to_str().unwrap(), "--steps", "50"]
                .iter()
                .map(OsString::from)
                .collect();
        let got: Vec<String> = expand(args).unwrap().into_iter().map(|a| a.into_string().unwrap()).collect();
        assert_eq!(got, ["infoval", "--threads", "2", "simulate", "--steps", "100", "--intercept", "--steps", "50"]);
    }
}
