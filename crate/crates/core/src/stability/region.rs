use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify, StabilityKind, DEFAULT_CASE2_TOL};
use crate::error::{Error, Result};
use crate::kernel::transfer_matrix;
use crate::schemes::SplittingScheme;

/// Uniform nodes on `[start, end)`: node `i` is `start + i (end - start) / nodes`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub end: f64,
    pub nodes: usize,
}

impl Axis {
    pub fn new(start: f64, end: f64, nodes: usize) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::OutOfRange("range bounds must be finite".into()));
        }
        if end <= start {
            return Err(Error::OutOfRange(format!(
                "empty or inverted range {start}:{end}"
            )));
        }
        if nodes == 0 {
            return Err(Error::OutOfRange("axis needs at least one node".into()));
        }
        Ok(Axis { start, end, nodes })
    }

    pub fn node(&self, i: usize) -> f64 {
        self.start + i as f64 * (self.end - self.start) / self.nodes as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.node(i)).collect()
    }
}

/// `start:end` bounds, without a node count.
impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::OutOfRange(format!("expected start:end, got `{s}`")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::OutOfRange(format!("not a number: `{t}`")))
        };
        Axis::new(parse(a)?, parse(b)?, 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionCell {
    pub eps: f64,
    pub h: f64,
    pub semitrace: f64,
    pub kind: StabilityKind,
}

/// Verdicts on an `(eps, h)` grid. Rows run over `eps`, columns over `h`;
/// cell `(i, j)` is at index `i * h_axis.nodes + j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub eps_axis: Axis,
    pub h_axis: Axis,
    pub cells: Vec<RegionCell>,
}

impl RegionGrid {
    pub fn cell(&self, i_eps: usize, j_h: usize) -> &RegionCell {
        &self.cells[i_eps * self.h_axis.nodes + j_h]
    }

    pub fn row(&self, i_eps: usize) -> &[RegionCell] {
        let n = self.h_axis.nodes;
        &self.cells[i_eps * n..(i_eps + 1) * n]
    }
}

/// Classifies every grid node. Rows are evaluated in parallel on the current
/// rayon pool; the output order does not depend on scheduling.
pub fn scan_region(scheme: &SplittingScheme, eps_axis: Axis, h_axis: Axis) -> Result<RegionGrid> {
    let eps_axis = Axis::new(eps_axis.start, eps_axis.end, eps_axis.nodes)?;
    let h_axis = Axis::new(h_axis.start, h_axis.end, h_axis.nodes)?;
    let hs = h_axis.values();
    let rows: Result<Vec<Vec<RegionCell>>> = (0..eps_axis.nodes)
        .into_par_iter()
        .map(|i| {
            let eps = eps_axis.node(i);
            hs.iter()
                .map(|&h| {
                    let v = classify(&transfer_matrix(scheme, eps, h), DEFAULT_CASE2_TOL)?;
                    Ok(RegionCell {
                        eps,
                        h,
                        semitrace: v.semitrace,
                        kind: v.kind,
                    })
                })
                .collect()
        })
        .collect();
    Ok(RegionGrid {
        eps_axis,
        h_axis,
        cells: rows?.into_iter().flatten().collect(),
    })
}
