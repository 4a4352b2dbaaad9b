use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use etas_core::TaskAllocation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Tabular,
    Structured,
}

/// Exit status of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Infeasible transition or failed check.
    Failed,
}

/// Bad arguments or inputs. Maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl fmt::Display) -> anyhow::Error {
    UsageError(msg.to_string()).into()
}

/// What a command prints, in all three formats.
pub struct Report {
    pub human: String,
    pub tabular: String,
    pub structured: serde_json::Value,
    pub status: Status,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        let mut text = match format {
            Format::Human => self.human.clone(),
            Format::Tabular => self.tabular.clone(),
            Format::Structured => serde_json::to_string_pretty(&self.structured).expect("JSON values serialize"),
        };
        if !text.ends_with('\n') {
            text.push('\n');
        }
        text
    }
}

/// Where a command writes its file: the explicit path, else `default_name`
/// inside the output directory, else nowhere.
pub fn destination(explicit: Option<&Path>, output_dir: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| output_dir.map(|d| d.join(default_name)))
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

/// `0-4,7,9-11`.
pub fn compact_ranges(tasks: impl IntoIterator<Item = usize>) -> String {
    let mut parts = Vec::new();
    let mut run: Option<(usize, usize)> = None;
    for t in tasks {
        run = match run {
            Some((a, b)) if t == b + 1 => Some((a, t)),
            Some(prev) => {
                parts.push(prev);
                Some((t, t))
            }
            None => Some((t, t)),
        };
    }
    parts.extend(run);
    parts
        .iter()
        .map(|&(a, b)| if a == b { a.to_string() } else { format!("{a}-{b}") })
        .collect::<Vec<_>>()
        .join(",")
}

pub fn allocation_human(alloc: &TaskAllocation) -> String {
    let mut out = format!(
        "({}, {}, {}) allocation, {} tasks per machine\n",
        alloc.n_machines(),
        alloc.redundancy(),
        alloc.n_tasks(),
        alloc.load().map_or("uneven".to_string(), |l| l.to_string())
    );
    for (id, set) in alloc.iter() {
        out.push_str(&format!("  machine {id:>3}: {}\n", compact_ranges(set.iter())));
    }
    out
}

pub fn allocation_tabular(alloc: &TaskAllocation) -> String {
    let mut out = String::from("machine\ttasks\n");
    for (id, set) in alloc.iter() {
        let tasks: Vec<String> = set.iter().map(|t| t.to_string()).collect();
        out.push_str(&format!("{id}\t{}\n", tasks.join(",")));
    }
    out
}
