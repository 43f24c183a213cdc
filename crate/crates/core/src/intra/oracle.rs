//! Sources of upstream runtimes. Each call stands for running (and paying
//! for) the upstream subquery once.

use std::io::{BufRead, Write};

use super::{DagNode, IntraError};

pub trait RuntimeOracle {
    /// Runtime in seconds of the subquery rooted at `node`.
    fn upstream_runtime(&mut self, node: &DagNode) -> Result<f64, IntraError>;
}

/// Replays runtimes recorded in the plan document.
#[derive(Debug, Clone, Copy, Default)]
pub struct RecordedRuntimes;

impl RuntimeOracle for RecordedRuntimes {
    fn upstream_runtime(&mut self, node: &DagNode) -> Result<f64, IntraError> {
        node.upstream_runtime.ok_or_else(|| IntraError::MissingRuntime(node.id.clone()))
    }
}

/// Asks for each runtime on `output` and reads the answer from `input`.
pub struct PromptedRuntimes<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> PromptedRuntimes<R, W> {
    pub fn new(input: R, output: W) -> Self {
        PromptedRuntimes { input, output }
    }
}

impl<R: BufRead, W: Write> RuntimeOracle for PromptedRuntimes<R, W> {
    fn upstream_runtime(&mut self, node: &DagNode) -> Result<f64, IntraError> {
        let io = |e: std::io::Error| IntraError::Oracle(e.to_string());
        write!(self.output, "upstream runtime of {} ({}) in seconds: ", node.id, node.op).map_err(io)?;
        self.output.flush().map_err(io)?;
        let mut line = String::new();
        if self.input.read_line(&mut line).map_err(io)? == 0 {
            return Err(IntraError::Oracle("input closed".into()));
        }
        match line.trim().parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
            _ => Err(IntraError::Oracle(format!("not a runtime: {:?}", line.trim()))),
        }
    }
}
