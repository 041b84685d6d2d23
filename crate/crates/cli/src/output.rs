//! Output sinks and the reproducibility header shared by every subcommand.

use std::fs::File;
use std::io::{self, BufWriter, Write};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Format, OutArgs};

/// JSON number, or `"inf"`/`"-inf"`/`"nan"` for non-finite values.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

pub struct Meta {
    params: Value,
    seed: Option<u64>,
    command: Vec<String>,
}

impl Meta {
    pub fn new(params: Value, seed: Option<u64>) -> Self {
        Self { params, seed, command: std::env::args().collect() }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
        })
    }

    pub fn write_csv_header(&self, sink: &mut Sink) -> Result<()> {
        sink.line(&format!("# fdp {}", env!("CARGO_PKG_VERSION")))?;
        sink.line(&format!("# command: {}", self.command.join(" ")))?;
        sink.line(&format!("# params: {}", self.params))?;
        match self.seed {
            Some(s) => sink.line(&format!("# seed: {s}")),
            None => sink.line("# seed: none (deterministic)"),
        }
    }
}

pub struct Sink {
    pub format: Format,
    out: Box<dyn Write>,
}

impl Sink {
    pub fn open(args: &OutArgs, default: Format) -> Result<Self> {
        let out: Box<dyn Write> = match &args.output {
            Some(path) => {
                Box::new(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
            }
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Self { format: args.format.unwrap_or(default), out })
    }

    pub fn line(&mut self, text: &str) -> Result<()> {
        writeln!(self.out, "{text}")?;
        Ok(())
    }

    pub fn raw(&mut self, bytes: &[u8]) -> Result<()> {
        self.out.write_all(bytes)?;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer_pretty(&mut self.out, value)?;
        writeln!(self.out)?;
        Ok(())
    }
}

impl Drop for Sink {
    fn drop(&mut self) {
        let _ = self.out.flush();
    }
}
