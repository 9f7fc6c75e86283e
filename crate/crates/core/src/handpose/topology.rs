use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Point, KEYPOINTS};
use crate::error::{Error, Result};

/// Kinematic tree over the keypoints of one hand, rooted at the wrist
/// (index 0), with a target length per edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonTopology {
    keypoints: usize,
    /// `(parent, child)` pairs in root-to-leaf order.
    edges: Vec<(usize, usize)>,
    reference_lengths: Vec<f64>,
}

/// Wrist, then four joints (MCP/CMC, PIP, DIP, tip) for each of thumb,
/// index, middle, ring and little finger.
pub fn hand_edges() -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(KEYPOINTS - 1);
    for finger in 0..5 {
        let base = 1 + 4 * finger;
        edges.push((0, base));
        for j in 0..3 {
            edges.push((base + j, base + j + 1));
        }
    }
    edges
}

impl SkeletonTopology {
    pub fn new(
        keypoints: usize,
        edges: Vec<(usize, usize)>,
        reference_lengths: Vec<f64>,
    ) -> Result<Self> {
        let topo = Self {
            keypoints,
            edges,
            reference_lengths,
        };
        topo.validate()?;
        Ok(topo)
    }

    /// The 21-keypoint hand tree with unit reference lengths.
    pub fn hand_unit() -> Self {
        Self::hand(vec![1.0; KEYPOINTS - 1]).expect("static topology is valid")
    }

    pub fn hand(reference_lengths: Vec<f64>) -> Result<Self> {
        Self::new(KEYPOINTS, hand_edges(), reference_lengths)
    }

    pub fn keypoints(&self) -> usize {
        self.keypoints
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn reference_lengths(&self) -> &[f64] {
        &self.reference_lengths
    }

    /// Edges must form a spanning tree listed root-to-leaf: every non-root
    /// keypoint is a child exactly once and its parent is already reached.
    pub fn validate(&self) -> Result<()> {
        if self.keypoints == 0 {
            return Err(Error::Config("topology has no keypoints".into()));
        }
        if self.edges.len() + 1 != self.keypoints {
            return Err(Error::Config(format!(
                "{} edges cannot span {} keypoints",
                self.edges.len(),
                self.keypoints
            )));
        }
        if self.reference_lengths.len() != self.edges.len() {
            return Err(Error::Config(format!(
                "{} reference lengths for {} edges",
                self.reference_lengths.len(),
                self.edges.len()
            )));
        }
        if let Some((i, l)) = self
            .reference_lengths
            .iter()
            .enumerate()
            .find(|(_, l)| !(l.is_finite() && **l > 0.0))
        {
            return Err(Error::Config(format!(
                "reference length {i} is {l}, must be > 0"
            )));
        }
        let mut reached = vec![false; self.keypoints];
        reached[0] = true;
        for &(p, c) in &self.edges {
            if p >= self.keypoints || c >= self.keypoints {
                return Err(Error::Config(format!("edge ({p},{c}) out of range")));
            }
            if !reached[p] {
                return Err(Error::Config(format!(
                    "edge ({p},{c}) listed before its parent is reached"
                )));
            }
            if reached[c] {
                return Err(Error::Config(format!(
                    "keypoint {c} appears as a child twice"
                )));
            }
            reached[c] = true;
        }
        Ok(())
    }

    pub fn bone_lengths(&self, hand: &[Point]) -> Vec<f64> {
        self.edges
            .iter()
            .map(|&(p, c)| super::norm(super::sub(hand[c], hand[p])))
            .collect()
    }

    /// Per-edge mean bone length over a set of hands.
    pub fn mean_lengths<'a>(
        &self,
        hands: impl IntoIterator<Item = &'a [Point]>,
    ) -> Result<Vec<f64>> {
        let mut sum = vec![0.0; self.edges.len()];
        let mut n = 0usize;
        for h in hands {
            for (s, l) in sum.iter_mut().zip(self.bone_lengths(h)) {
                *s += l;
            }
            n += 1;
        }
        if n == 0 {
            return Err(Error::EmptyInput(
                "no valid hands to average bone lengths over".into(),
            ));
        }
        Ok(sum.into_iter().map(|s| s / n as f64).collect())
    }

    /// Writes `parent child length` lines.
    pub fn save_lengths(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (&(p, c), l) in self.edges.iter().zip(&self.reference_lengths) {
            out.push_str(&format!("{p} {c} {l}\n"));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Reads a lengths file written by [`SkeletonTopology::save_lengths`].
    pub fn load_lengths(path: &Path, keypoints: usize) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut edges = Vec::new();
        let mut lengths = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse_err(format!("expected 3 fields, found {}", f.len())));
            }
            let p = f[0]
                .parse()
                .map_err(|e| parse_err(format!("parent: {e}")))?;
            let c = f[1].parse().map_err(|e| parse_err(format!("child: {e}")))?;
            let l = f[2]
                .parse()
                .map_err(|e| parse_err(format!("length: {e}")))?;
            edges.push((p, c));
            lengths.push(l);
        }
        Self::new(keypoints, edges, lengths)
    }
}
