use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of the background class for both actions and verbs.
pub const BACKGROUND: usize = 0;

/// Inclusive frame range carrying one action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSegment {
    pub start_frame: usize,
    pub end_frame: usize,
    pub action: usize,
    pub verb: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameLabel {
    pub action: usize,
    pub verb: usize,
}

/// Labels every frame with its segment's action and verb; frames outside
/// all segments get the background class.
pub fn assign_frame_labels(segments: &[ActionSegment], n_frames: usize) -> Result<Vec<FrameLabel>> {
    let mut owner: Vec<Option<usize>> = vec![None; n_frames];
    let mut labels = vec![FrameLabel::default(); n_frames];
    for (i, s) in segments.iter().enumerate() {
        if s.start_frame > s.end_frame || s.end_frame >= n_frames {
            return Err(Error::Data(format!(
                "segment {i} [{}, {}] invalid for {n_frames} frames",
                s.start_frame, s.end_frame
            )));
        }
        for f in s.start_frame..=s.end_frame {
            if let Some(j) = owner[f] {
                let o = &segments[j];
                return Err(Error::Data(format!(
                    "segments {j} [{}, {}] and {i} [{}, {}] overlap at frame {f}",
                    o.start_frame, o.end_frame, s.start_frame, s.end_frame
                )));
            }
            owner[f] = Some(i);
            labels[f] = FrameLabel {
                action: s.action,
                verb: s.verb,
            };
        }
    }
    Ok(labels)
}

/// Reads `start end action_id verb_id` lines.
pub fn parse_label_file(path: &Path) -> Result<Vec<ActionSegment>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let f = line
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|e| err(format!("bad integer {t:?}: {e}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", f.len())));
        }
        out.push(ActionSegment {
            start_frame: f[0],
            end_frame: f[1],
            action: f[2],
            verb: f[3],
        });
    }
    Ok(out)
}

pub fn write_label_file(path: &Path, segments: &[ActionSegment]) -> Result<()> {
    let text: String = segments
        .iter()
        .map(|s| {
            format!(
                "{} {} {} {}\n",
                s.start_frame, s.end_frame, s.action, s.verb
            )
        })
        .collect();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads `id name` lines. Names may contain spaces.
pub fn parse_vocab_file(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (id, name) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let id = id.parse::<usize>().map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: format!("bad id {id:?}: {e}"),
        })?;
        out.push((id, name.trim().to_string()));
    }
    Ok(out)
}

pub fn write_vocab_file(path: &Path, vocab: &[(usize, String)]) -> Result<()> {
    let text: String = vocab.iter().map(|(id, n)| format!("{id} {n}\n")).collect();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(start: usize, end: usize, action: usize) -> ActionSegment {
        ActionSegment {
            start_frame: start,
            end_frame: end,
            action,
            verb: action % 3,
        }
    }

    #[test]
    fn full_cover_and_empty() {
        let l = assign_frame_labels(&[seg(0, 9, 4)], 10).unwrap();
        assert!(l.iter().all(|f| f.action == 4));
        let l = assign_frame_labels(&[], 10).unwrap();
        assert!(l
            .iter()
            .all(|f| f.action == BACKGROUND && f.verb == BACKGROUND));
    }

    #[test]
    fn two_segments_with_gaps() {
        let l = assign_frame_labels(&[seg(10, 19, 1), seg(30, 39, 2)], 50).unwrap();
        for (f, lab) in l.iter().enumerate() {
            let expected = match f {
                10..=19 => 1,
                30..=39 => 2,
                _ => BACKGROUND,
            };
            assert_eq!(lab.action, expected, "frame {f}");
        }
    }

    #[test]
    fn overlap_names_both_segments() {
        let err = assign_frame_labels(&[seg(0, 10, 1), seg(10, 20, 2)], 30)
            .unwrap_err()
            .to_string();
        assert!(err.contains("[0, 10]") && err.contains("[10, 20]"), "{err}");
    }

    #[test]
    fn label_and_vocab_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("action_label.txt");
        let segs = vec![seg(3, 9, 2), seg(12, 40, 5)];
        write_label_file(&p, &segs).unwrap();
        assert_eq!(parse_label_file(&p).unwrap(), segs);

        let v = dir.path().join("vocab.txt");
        let vocab = vec![(0, "background".to_string()), (1, "grab book".to_string())];
        write_vocab_file(&v, &vocab).unwrap();
        assert_eq!(parse_vocab_file(&v).unwrap(), vocab);
    }
}
