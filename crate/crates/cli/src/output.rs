use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use hybridzo::optimizer::Checkpoint;
use hybridzo::{BlockLayout, HybridPoint};

use crate::config::sibling;
use crate::error::CliResult;

/// Creates `path` and hands a buffered writer to `body`.
pub fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> CliResult<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

/// `<out>.meta.json`: command, crate version, resolved config and summary.
pub fn write_meta(out: &Path, command: &str, config: Value, summary: Value) -> CliResult<()> {
    let meta = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "summary": summary,
    });
    write_json(&sibling(out, ".meta.json"), &meta)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointFile {
    pub d_x: usize,
    pub d_y: usize,
    pub checkpoints: Vec<CheckpointEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointEntry {
    pub step: usize,
    pub values: Vec<f64>,
}

impl CheckpointFile {
    pub fn from_checkpoints(layout: BlockLayout, points: &[Checkpoint]) -> Self {
        Self {
            d_x: layout.d_x(),
            d_y: layout.d_y(),
            checkpoints: points
                .iter()
                .map(|c| CheckpointEntry {
                    step: c.step,
                    values: c.point.as_slice().to_vec(),
                })
                .collect(),
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading checkpoints {}", path.display()))?;
        Ok(serde_json::from_str(&text).with_context(|| format!("parsing checkpoints {}", path.display()))?)
    }

    pub fn points(&self) -> CliResult<Vec<HybridPoint>> {
        let layout = BlockLayout::new(self.d_x, self.d_y)?;
        Ok(self
            .checkpoints
            .iter()
            .map(|c| HybridPoint::new(layout, c.values.clone()))
            .collect::<Result<_, _>>()?)
    }
}
