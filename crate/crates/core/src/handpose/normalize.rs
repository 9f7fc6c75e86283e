//! Translate, rescale and rotate each hand into a shared canonical frame.

use serde::{Deserialize, Serialize};

use super::topology::SkeletonTopology;
use super::{
    cross, dot, norm, scale, sub, HandFrame, NormalizedHandFrame, Point, Side, INDEX_MCP,
    MIDDLE_MCP, WRIST,
};
use crate::error::{Error, Result};

/// Which keypoints define the canonical frame: the wrist→`primary` vector is
/// sent to +z and the part of wrist→`secondary` orthogonal to it to +x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CanonicalAxes {
    pub primary: usize,
    pub secondary: usize,
}

impl Default for CanonicalAxes {
    fn default() -> Self {
        Self {
            primary: MIDDLE_MCP,
            secondary: INDEX_MCP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizeConfig {
    pub topology: SkeletonTopology,
    pub axes: CanonicalAxes,
    /// Mirror left hands across x first so both hands share one chirality.
    pub mirror_left: bool,
}

impl Default for NormalizeConfig {
    fn default() -> Self {
        Self {
            topology: SkeletonTopology::hand_unit(),
            axes: CanonicalAxes::default(),
            mirror_left: true,
        }
    }
}

impl NormalizeConfig {
    pub fn with_topology(topology: SkeletonTopology) -> Self {
        Self {
            topology,
            ..Self::default()
        }
    }
}

fn check_finite(hand: &[Point]) -> Result<()> {
    match hand.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
        Some(k) => Err(Error::InvalidPose(format!("keypoint {k} is not finite"))),
        None => Ok(()),
    }
}

/// Step 1: subtract the wrist from every keypoint.
pub fn translate_to_wrist(hand: &[Point]) -> Result<Vec<Point>> {
    check_finite(hand)?;
    let wrist = *hand
        .get(WRIST)
        .ok_or_else(|| Error::InvalidPose("hand has no keypoints".into()))?;
    Ok(hand.iter().map(|&p| sub(p, wrist)).collect())
}

/// Step 2: walk the tree root-to-leaf, placing every child at
/// `parent + reference_length * unit(child - parent)` using the original
/// bone directions.
pub fn standardize_bone_lengths(hand: &[Point], topo: &SkeletonTopology) -> Result<Vec<Point>> {
    if hand.len() != topo.keypoints() {
        return Err(Error::Dimension(format!(
            "hand has {} keypoints, topology expects {}",
            hand.len(),
            topo.keypoints()
        )));
    }
    let mut out = vec![[0.0; 3]; hand.len()];
    out[WRIST] = hand[WRIST];
    for (&(p, c), &len) in topo.edges().iter().zip(topo.reference_lengths()) {
        let bone = sub(hand[c], hand[p]);
        let n = norm(bone);
        if !(n > 1e-12) {
            return Err(Error::DegeneratePose(format!(
                "bone ({p},{c}) has zero length"
            )));
        }
        let dir = scale(bone, len / n);
        out[c] = [out[p][0] + dir[0], out[p][1] + dir[1], out[p][2] + dir[2]];
    }
    Ok(out)
}

/// Rotation (rows are the new x, y, z axes) that takes the hand into the
/// canonical frame.
pub fn canonical_frame(hand: &[Point], axes: CanonicalAxes) -> Result<[Point; 3]> {
    let a = hand[axes.primary];
    let b = hand[axes.secondary];
    let na = norm(a);
    let nb = norm(b);
    let c = cross(a, b);
    if !(na > 1e-12) || !(nb > 1e-12) || !(norm(c) > 1e-9 * na * nb) {
        return Err(Error::DegeneratePose(format!(
            "frame vectors to keypoints {} and {} are collinear",
            axes.primary, axes.secondary
        )));
    }
    let z = scale(a, 1.0 / na);
    let b_perp = sub(b, scale(z, dot(b, z)));
    let x = scale(b_perp, 1.0 / norm(b_perp));
    let y = cross(z, x);
    Ok([x, y, z])
}

/// Step 3: apply the proper rotation that sends wrist→primary to +z and the
/// orthogonal part of wrist→secondary to +x. Expects the wrist at the origin.
pub fn canonical_rotate(hand: &[Point], axes: CanonicalAxes) -> Result<Vec<Point>> {
    let r = canonical_frame(hand, axes)?;
    Ok(hand
        .iter()
        .map(|&p| [dot(r[0], p), dot(r[1], p), dot(r[2], p)])
        .collect())
}

/// All three steps on one hand.
pub fn normalize_hand(hand: &[Point], cfg: &NormalizeConfig) -> Result<Vec<Point>> {
    let h = translate_to_wrist(hand)?;
    let h = standardize_bone_lengths(&h, &cfg.topology)?;
    canonical_rotate(&h, cfg.axes)
}

fn normalize_side(hand: &[Point; 21], side: Side, cfg: &NormalizeConfig) -> Result<[Point; 21]> {
    let mut input = *hand;
    if side == Side::Left && cfg.mirror_left {
        for p in input.iter_mut() {
            p[0] = -p[0];
        }
    }
    let out = normalize_hand(&input, cfg).map_err(|e| match e {
        Error::DegeneratePose(m) => Error::DegeneratePose(format!("{side} hand: {m}")),
        Error::InvalidPose(m) => Error::InvalidPose(format!("{side} hand: {m}")),
        other => other,
    })?;
    let mut arr = [[0.0; 3]; 21];
    arr.copy_from_slice(&out);
    Ok(arr)
}

/// Normalizes both hands of a frame. Invalid hands stay all-zero with their
/// flag cleared.
pub fn normalize_hand_frame(
    frame: &HandFrame,
    cfg: &NormalizeConfig,
) -> Result<NormalizedHandFrame> {
    let mut out = HandFrame::invalid();
    if frame.left_valid {
        out.left = normalize_side(&frame.left, Side::Left, cfg)?;
        out.left_valid = true;
    }
    if frame.right_valid {
        out.right = normalize_side(&frame.right, Side::Right, cfg)?;
        out.right_valid = true;
    }
    Ok(NormalizedHandFrame(out))
}

/// Like [`normalize_hand_frame`], but a hand that fails normalization is
/// zeroed and flagged invalid instead of failing the frame. Returns the
/// sides that were dropped.
pub fn normalize_hand_frame_lenient(
    frame: &HandFrame,
    cfg: &NormalizeConfig,
) -> (NormalizedHandFrame, Vec<(Side, Error)>) {
    let mut out = HandFrame::invalid();
    let mut dropped = Vec::new();
    if frame.left_valid {
        match normalize_side(&frame.left, Side::Left, cfg) {
            Ok(h) => {
                out.left = h;
                out.left_valid = true;
            }
            Err(e) => dropped.push((Side::Left, e)),
        }
    }
    if frame.right_valid {
        match normalize_side(&frame.right, Side::Right, cfg) {
            Ok(h) => {
                out.right = h;
                out.right_valid = true;
            }
            Err(e) => dropped.push((Side::Right, e)),
        }
    }
    (NormalizedHandFrame(out), dropped)
}
