//! `key = value` run configuration shared by every subcommand.
//!
//! Resolution order for each key: command-line flag, then the `--config`
//! file, then the built-in default. The resolved set is written back out
//! verbatim, so `--config <out>/config.txt` reruns the same command.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crpblocks::Error;

/// A declared key and its default (empty means "unset").
pub type KeySpec = (&'static str, &'static str);

#[derive(Clone, Debug)]
pub struct Resolved {
    command: &'static str,
    values: Vec<(&'static str, String)>,
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

/// Reads a config file into a key map. `command` lines must match.
pub fn read_config_file(path: &Path, command: &str) -> anyhow::Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k == "command" {
            if v != command {
                return Err(config_error(format!(
                    "{} is a `{v}` config, not `{command}`",
                    path.display()
                )));
            }
            continue;
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(config_error(format!("key `{k}` repeated in {}", path.display())));
        }
    }
    Ok(map)
}

impl Resolved {
    pub fn resolve(
        command: &'static str,
        keys: &[KeySpec],
        config: Option<&Path>,
        flags: Vec<(&'static str, Option<String>)>,
    ) -> anyhow::Result<Self> {
        let mut file = match config {
            Some(p) => read_config_file(p, command)?,
            None => BTreeMap::new(),
        };
        let mut flags: BTreeMap<&str, Option<String>> = flags.into_iter().collect();
        let mut values = Vec::with_capacity(keys.len());
        for &(key, default) in keys {
            let from_flag = flags.remove(key).flatten();
            let from_file = file.remove(key);
            values.push((key, from_flag.or(from_file).unwrap_or_else(|| default.to_string())));
        }
        if let Some(k) = file.keys().next() {
            return Err(config_error(format!("unknown key `{k}` for `{command}`")));
        }
        debug_assert!(flags.is_empty(), "flag without a declared key: {flags:?}");
        Ok(Resolved { command, values })
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.as_str())
            .unwrap_or_else(|| panic!("undeclared key `{key}`"))
    }

    pub fn set(&mut self, key: &str, value: &str) {
        let slot = self
            .values
            .iter_mut()
            .find(|(k, _)| *k == key)
            .unwrap_or_else(|| panic!("undeclared key `{key}`"));
        slot.1 = value.to_string();
    }

    pub fn is_set(&self, key: &str) -> bool {
        !self.raw(key).is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("command = {}\n", self.command);
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn save(&self, dir: &Path) -> anyhow::Result<()> {
        let path = dir.join("config.txt");
        fs::write(&path, self.to_text()).map_err(|e| Error::Io { path, source: e })?;
        Ok(())
    }
}

/// Typed access that records every failure, so all bad keys are reported
/// together.
pub struct Reader<'a> {
    cfg: &'a Resolved,
    errors: Vec<String>,
}

impl<'a> Reader<'a> {
    pub fn new(cfg: &'a Resolved) -> Self {
        Reader {
            cfg,
            errors: Vec::new(),
        }
    }

    pub fn parse<T: FromStr>(&mut self, key: &str) -> Option<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.cfg.raw(key);
        match raw.parse() {
            Ok(v) => Some(v),
            Err(e) => {
                self.errors.push(format!("{key}: `{raw}`: {e}"));
                None
            }
        }
    }

    /// Empty values become `None`.
    pub fn optional<T: FromStr>(&mut self, key: &str) -> Option<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if self.cfg.is_set(key) {
            self.parse(key).map(Some)
        } else {
            Some(None)
        }
    }

    pub fn path(&mut self, key: &str) -> Option<PathBuf> {
        if self.cfg.is_set(key) {
            Some(PathBuf::from(self.cfg.raw(key)))
        } else {
            self.errors.push(format!("{key}: required"));
            None
        }
    }

    pub fn optional_path(&self, key: &str) -> Option<PathBuf> {
        self.cfg.is_set(key).then(|| PathBuf::from(self.cfg.raw(key)))
    }

    pub fn fail(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    /// Errors out if anything failed; otherwise unwraps the collected values.
    pub fn finish(self) -> anyhow::Result<()> {
        if self.errors.is_empty() {
            Ok(())
        } else {
            Err(config_error(self.errors.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEYS: &[KeySpec] = &[("seed", "0"), ("epochs", "1000"), ("out", "")];

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        fs::write(&p, "# comment\ncommand = fit\nseed = 5\nepochs = 20\n").unwrap();
        let r = Resolved::resolve("fit", KEYS, Some(&p), vec![("epochs", Some("7".into())), ("seed", None)])
            .unwrap();
        assert_eq!(r.raw("seed"), "5");
        assert_eq!(r.raw("epochs"), "7");
        assert_eq!(r.raw("out"), "");
        assert_eq!(r.to_text(), "command = fit\nseed = 5\nepochs = 7\nout = \n");
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let r = Resolved::resolve("fit", KEYS, None, vec![("out", Some("x".into()))]).unwrap();
        r.save(dir.path()).unwrap();
        let again = Resolved::resolve("fit", KEYS, Some(&dir.path().join("config.txt")), vec![]).unwrap();
        assert_eq!(again.to_text(), r.to_text());
    }

    #[test]
    fn rejects_unknown_and_mismatched() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        fs::write(&p, "bogus = 1\n").unwrap();
        assert!(Resolved::resolve("fit", KEYS, Some(&p), vec![]).is_err());
        fs::write(&p, "command = eval\n").unwrap();
        assert!(Resolved::resolve("fit", KEYS, Some(&p), vec![]).is_err());
        fs::write(&p, "no equals sign\n").unwrap();
        assert!(Resolved::resolve("fit", KEYS, Some(&p), vec![]).is_err());
    }

    #[test]
    fn reader_collects_every_error() {
        let r = Resolved::resolve(
            "fit",
            KEYS,
            None,
            vec![("seed", Some("x".into())), ("epochs", Some("-1".into()))],
        )
        .unwrap();
        let mut rd = Reader::new(&r);
        assert!(rd.parse::<u64>("seed").is_none());
        assert!(rd.parse::<u64>("epochs").is_none());
        assert!(rd.path("out").is_none());
        let msg = rd.finish().unwrap_err().to_string();
        assert!(msg.contains("seed") && msg.contains("epochs") && msg.contains("out: required"), "{msg}");
    }
}
