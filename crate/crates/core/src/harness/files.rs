//! File formats written and read by the command-line tool: solution files,
//! tick traces, and the optional TOML configuration.

use crate::agents::OutcomeKind;
use crate::engine::{TraceEvent, TraceSink};
use serde::Deserialize;
use std::io::{self, BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed solution file: {0}")]
    MalformedSolution(String),
    #[error("malformed config file: {0}")]
    MalformedConfig(#[from] toml::de::Error),
}

/// Solution file: first line is n, second line the column of each row's
/// queen, space separated.
pub fn write_solution<W: Write>(mut w: W, assignment: &[usize]) -> io::Result<()> {
    writeln!(w, "{}", assignment.len())?;
    let cols: Vec<String> = assignment.iter().map(|c| c.to_string()).collect();
    writeln!(w, "{}", cols.join(" "))
}

pub fn read_solution<R: BufRead>(r: R) -> Result<(usize, Vec<usize>), FileError> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| FileError::MalformedSolution("empty file".into()))??;
    let n: usize = header
        .trim()
        .parse()
        .map_err(|_| FileError::MalformedSolution(format!("bad size line `{header}`")))?;
    let body = lines
        .next()
        .ok_or_else(|| FileError::MalformedSolution("missing assignment line".into()))??;
    let mut assignment = Vec::new();
    for token in body.split_whitespace() {
        let v: usize = token
            .parse()
            .map_err(|_| FileError::MalformedSolution(format!("bad value `{token}`")))?;
        assignment.push(v);
    }
    if assignment.len() != n {
        return Err(FileError::MalformedSolution(format!(
            "size line says {n} values, found {}",
            assignment.len()
        )));
    }
    Ok((n, assignment))
}

/// Streams one tab-separated line per agent action:
/// `tick  agent_id  kind  row  from  to  energy_delta`.
/// Write errors are held until [`TraceWriter::finish`] so the engine's hot
/// loop never has to handle them.
pub struct TraceWriter<W: Write> {
    w: W,
    error: Option<io::Error>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(w: W) -> Self {
        TraceWriter { w, error: None }
    }

    pub fn finish(mut self) -> io::Result<()> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.w.flush()
    }
}

fn kind_name(kind: &OutcomeKind) -> &'static str {
    match kind {
        OutcomeKind::Stayed => "stay",
        OutcomeKind::Moved => "move",
        OutcomeKind::MovedAndAte { .. } => "eat",
        OutcomeKind::WasEaten { .. } => "eaten",
    }
}

impl<W: Write> TraceSink for TraceWriter<W> {
    fn record(&mut self, event: TraceEvent) {
        if self.error.is_some() {
            return;
        }
        let o = &event.outcome;
        let line = writeln!(
            self.w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            event.tick,
            o.agent_id,
            kind_name(&o.kind),
            o.row,
            o.from,
            o.to,
            o.energy_delta_self
        );
        if let Err(e) = line {
            self.error = Some(e);
        }
    }
}

/// Subset of run parameters accepted from a TOML file. Every field is
/// optional; command-line flags take precedence over file values, which
/// take precedence over built-in defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub n: Option<usize>,
    pub instance: Option<String>,
    pub row_num: Option<usize>,
    pub run_num: Option<u32>,
    pub seed: Option<u64>,
    pub max_random_w: Option<f64>,
    pub max_least_w: Option<f64>,
    pub max_coop_w: Option<f64>,
    pub fixed_weights: Option<bool>,
    pub init_energy: Option<i64>,
    pub step_lose: Option<i64>,
    pub merge_threshold: Option<i64>,
    pub coop_density: Option<f64>,
    pub tick_budget: Option<u64>,
    pub restart_budget: Option<u32>,
}

pub fn parse_config(text: &str) -> Result<PartialConfig, FileError> {
    Ok(toml::from_str(text)?)
}
