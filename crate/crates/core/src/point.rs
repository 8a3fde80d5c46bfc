//! Block-partitioned parameter vectors.
//!
//! A [`HybridPoint`] stores the base block `x` followed by the adapter block
//! `y` in one contiguous buffer, so objectives can work on `&[f64]` without
//! caring about the split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockLayout {
    d_x: usize,
    d_y: usize,
}

impl BlockLayout {
    pub fn new(d_x: usize, d_y: usize) -> Result<Self> {
        if d_x == 0 || d_y == 0 {
            return Err(Error::invalid(format!(
                "block dimensions must be positive (d_x = {d_x}, d_y = {d_y})"
            )));
        }
        Ok(Self { d_x, d_y })
    }

    pub fn d_x(&self) -> usize {
        self.d_x
    }

    pub fn d_y(&self) -> usize {
        self.d_y
    }

    /// Total dimension `d_x + d_y`.
    pub fn dim(&self) -> usize {
        self.d_x + self.d_y
    }

    pub fn block_dim(&self, block: Block) -> usize {
        match block {
            Block::X => self.d_x,
            Block::Y => self.d_y,
        }
    }

    /// Index range of `block` inside the flat vector.
    pub fn range(&self, block: Block) -> std::ops::Range<usize> {
        match block {
            Block::X => 0..self.d_x,
            Block::Y => self.d_x..self.dim(),
        }
    }

    pub(crate) fn check_len(&self, context: &'static str, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                context,
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Block {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridPoint {
    layout: BlockLayout,
    values: Vec<f64>,
}

impl HybridPoint {
    pub fn new(layout: BlockLayout, values: Vec<f64>) -> Result<Self> {
        layout.check_len("HybridPoint::new", values.len())?;
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("point coordinate {pos}")));
        }
        Ok(Self { layout, values })
    }

    pub fn from_blocks(x: &[f64], y: &[f64]) -> Result<Self> {
        let layout = BlockLayout::new(x.len(), y.len())?;
        let mut values = Vec::with_capacity(layout.dim());
        values.extend_from_slice(x);
        values.extend_from_slice(y);
        Self::new(layout, values)
    }

    pub fn zeros(layout: BlockLayout) -> Self {
        Self {
            layout,
            values: vec![0.0; layout.dim()],
        }
    }

    pub fn layout(&self) -> BlockLayout {
        self.layout
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn x(&self) -> &[f64] {
        &self.values[..self.layout.d_x]
    }

    pub fn y(&self) -> &[f64] {
        &self.values[self.layout.d_x..]
    }

    pub fn block(&self, block: Block) -> &[f64] {
        &self.values[self.layout.range(block)]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}
