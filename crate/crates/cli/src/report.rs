//! Deterministic run reports.
//!
//! The text format prints `key: value`, with continuation lines of a
//! multi-line value indented by two spaces. The structured format prints
//! `key=value` and one `key+=line` per continuation line, so every line
//! carries its key and reports diff cleanly line by line.

use std::fmt::Write as _;
use std::time::Duration;

use clap::ValueEnum;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Structured,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Input {
    pub role: String,
    pub sha256: String,
}

/// Everything a command prints. Timings are recorded only on request, so
/// by default identical invocations render identical bytes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub command: String,
    pub seed: Option<u64>,
    pub inputs: Vec<Input>,
    pub entries: Vec<(String, String)>,
    pub timings: Vec<(String, Duration)>,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        RunReport {
            command: command.into(),
            ..RunReport::default()
        }
    }

    pub fn input(&mut self, role: &str, bytes: &[u8]) {
        self.inputs.push(Input {
            role: role.into(),
            sha256: digest(bytes),
        });
    }

    pub fn push(&mut self, key: &str, value: impl Into<String>) {
        self.entries.push((key.into(), value.into()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self, format: Format) -> String {
        let mut lines: Vec<(String, String)> = vec![("command".into(), self.command.clone())];
        if let Some(seed) = self.seed {
            lines.push(("seed".into(), seed.to_string()));
        }
        for i in &self.inputs {
            lines.push((format!("input.{}", i.role), format!("sha256:{}", i.sha256)));
        }
        lines.extend(self.entries.iter().cloned());
        for (phase, d) in &self.timings {
            lines.push((format!("time.{phase}"), format!("{:.3}ms", d.as_secs_f64() * 1e3)));
        }
        let mut out = String::new();
        for (key, value) in &lines {
            let mut parts = value.trim_end_matches('\n').split('\n');
            let first = parts.next().unwrap_or_default();
            match format {
                Format::Text => {
                    let _ = writeln!(out, "{key}: {first}");
                    for rest in parts {
                        let _ = writeln!(out, "  {rest}");
                    }
                }
                Format::Structured => {
                    let _ = writeln!(out, "{key}={first}");
                    for rest in parts {
                        let _ = writeln!(out, "{key}+={rest}");
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats() {
        let mut r = RunReport::new("check");
        r.input("economy", b"abc");
        r.push("ir", "yes");
        r.push("allocation", "1 0\n0 1\n");
        assert_eq!(
            r.render(Format::Text),
            "command: check\ninput.economy: sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad\nir: yes\nallocation: 1 0\n  0 1\n"
        );
        assert!(r.render(Format::Structured).ends_with("allocation=1 0\nallocation+=0 1\n"));
        assert_eq!(r.get("ir"), Some("yes"));
    }

    #[test]
    fn timings_only_when_recorded() {
        let mut r = RunReport::new("validate");
        assert!(!r.render(Format::Text).contains("time."));
        r.timings.push(("total".into(), Duration::from_micros(1500)));
        assert!(r.render(Format::Text).contains("time.total: 1.500ms"));
    }
}
