//! Hand-pose text files.
//!
//! One line per frame, 128 whitespace-separated numbers:
//! `left_valid x0 y0 z0 ... x20 y20 z20 right_valid x0 y0 z0 ... x20 y20 z20`.
//! Validity flags are `1` or `0` (any nonzero number counts as valid).
//! Blank lines are ignored.

use std::fs;
use std::path::Path;

use super::{Hand, HandFrame, KEYPOINTS};
use crate::error::{Error, Result};

pub const FIELDS_PER_LINE: usize = 2 * (1 + 3 * KEYPOINTS);

pub fn parse_handpose_str(text: &str, path: &Path) -> Result<Vec<HandFrame>> {
    let mut frames = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let values = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| err(format!("bad number {t:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != FIELDS_PER_LINE {
            return Err(err(format!(
                "expected {FIELDS_PER_LINE} fields, found {}",
                values.len()
            )));
        }
        let read_hand = |block: &[f64]| -> Hand {
            let mut h = [[0.0; 3]; KEYPOINTS];
            for (k, p) in h.iter_mut().enumerate() {
                p.copy_from_slice(&block[3 * k..3 * k + 3]);
            }
            h
        };
        let half = FIELDS_PER_LINE / 2;
        let mut frame = HandFrame::invalid();
        frame.left_valid = values[0] != 0.0;
        frame.right_valid = values[half] != 0.0;
        if frame.left_valid {
            frame.left = read_hand(&values[1..half]);
        }
        if frame.right_valid {
            frame.right = read_hand(&values[half + 1..]);
        }
        frames.push(frame);
    }
    Ok(frames)
}

pub fn parse_handpose_file(path: &Path) -> Result<Vec<HandFrame>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_handpose_str(&text, path)
}

/// Formats frames with shortest round-trip float formatting.
pub fn format_handpose(frames: &[HandFrame]) -> String {
    let mut out = String::with_capacity(frames.len() * FIELDS_PER_LINE * 8);
    for f in frames {
        let mut push_hand = |valid: bool, hand: &Hand, first: bool| {
            if !first {
                out.push(' ');
            }
            out.push_str(if valid { "1" } else { "0" });
            for p in hand {
                for v in p {
                    out.push(' ');
                    out.push_str(&v.to_string());
                }
            }
        };
        push_hand(f.left_valid, &f.left, true);
        push_hand(f.right_valid, &f.right, false);
        out.push('\n');
    }
    out
}

pub fn write_handpose_file(path: &Path, frames: &[HandFrame]) -> Result<()> {
    fs::write(path, format_handpose(frames)).map_err(|e| Error::io(path, e))
}
