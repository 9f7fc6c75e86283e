//! Takes and the on-disk dataset layout.
//!
//! ```text
//! <root>/action_vocab.txt        id name
//! <root>/verb_vocab.txt          id name
//! <root>/<take>/hand_pose.txt    one hand-pose line per frame
//! <root>/<take>/action_label.txt start end action_id verb_id
//! <root>/<take>/rgb_features.bin precomputed RGB features
//! ```
//!
//! Takes are the subdirectories of `<root>` in lexicographic order.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use super::features::{read_feature_file, write_feature_file};
use super::labels::{
    assign_frame_labels, parse_label_file, parse_vocab_file, write_label_file, write_vocab_file,
    ActionSegment, FrameLabel,
};
use crate::error::{Error, Result};
use crate::handpose::{
    normalize_hand_frame_lenient, parse_handpose_file, write_handpose_file, HandFrame,
    NormalizeConfig, NormalizedHandFrame,
};
use crate::nn::Matrix;
use crate::sampling::NativeStreams;

pub const HAND_POSE_FILE: &str = "hand_pose.txt";
pub const LABEL_FILE: &str = "action_label.txt";
pub const FEATURE_FILE: &str = "rgb_features.bin";
pub const ACTION_VOCAB_FILE: &str = "action_vocab.txt";
pub const VERB_VOCAB_FILE: &str = "verb_vocab.txt";

/// One recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Take {
    pub id: String,
    pub hp_frames: Vec<HandFrame>,
    /// One extractor-input row per native frame.
    pub rgb: Matrix,
    pub segments: Vec<ActionSegment>,
}

impl Take {
    pub fn n_frames(&self) -> usize {
        self.hp_frames.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rgb.rows() != self.n_frames() {
            return Err(Error::Data(format!(
                "take {}: {} hand-pose frames but {} RGB frames",
                self.id,
                self.n_frames(),
                self.rgb.rows()
            )));
        }
        assign_frame_labels(&self.segments, self.n_frames())
            .map_err(|e| Error::Data(format!("take {}: {e}", self.id)))?;
        Ok(())
    }

    /// Normalizes hand frames and expands segment labels. Hands that fail
    /// normalization are zeroed and flagged invalid.
    pub fn prepare(&self, norm: &NormalizeConfig) -> Result<PreparedTake> {
        self.validate()?;
        let labels = assign_frame_labels(&self.segments, self.n_frames())?;
        let mut dropped = 0usize;
        let hp = self
            .hp_frames
            .iter()
            .map(|f| {
                let (n, d) = normalize_hand_frame_lenient(f, norm);
                dropped += d.len();
                n
            })
            .collect();
        if dropped > 0 {
            warn!("take {}: dropped {dropped} degenerate hands", self.id);
        }
        Ok(PreparedTake {
            id: self.id.clone(),
            rgb: self.rgb.clone(),
            hp,
            labels,
        })
    }
}

/// A take ready for windowing.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedTake {
    pub id: String,
    pub rgb: Matrix,
    pub hp: Vec<NormalizedHandFrame>,
    pub labels: Vec<FrameLabel>,
}

impl PreparedTake {
    pub fn n_frames(&self) -> usize {
        self.labels.len()
    }

    pub fn streams(&self) -> NativeStreams<'_> {
        NativeStreams {
            take: &self.id,
            rgb: &self.rgb,
            hp: &self.hp,
            labels: &self.labels,
        }
    }
}

/// Takes plus class bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub takes: Vec<Take>,
    pub action_names: Vec<(usize, String)>,
    pub verb_names: Vec<(usize, String)>,
}

impl Dataset {
    /// Number of action classes, background included.
    pub fn n_actions(&self) -> usize {
        let from_vocab = self
            .action_names
            .iter()
            .map(|(i, _)| i + 1)
            .max()
            .unwrap_or(0);
        let from_labels = self
            .takes
            .iter()
            .flat_map(|t| t.segments.iter().map(|s| s.action + 1))
            .max()
            .unwrap_or(0);
        from_vocab.max(from_labels).max(1)
    }

    /// Verb of each action, as observed in the segments. Actions never seen
    /// map to background.
    pub fn action_to_verb(&self) -> Vec<usize> {
        let mut map = vec![0; self.n_actions()];
        for s in self.takes.iter().flat_map(|t| &t.segments) {
            map[s.action] = s.verb;
        }
        map
    }

    pub fn load(root: &Path) -> Result<Self> {
        if !root.is_dir() {
            return Err(Error::io(
                root,
                std::io::Error::new(std::io::ErrorKind::NotFound, "dataset directory not found"),
            ));
        }
        let mut dirs: Vec<PathBuf> = fs::read_dir(root)
            .map_err(|e| Error::io(root, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        dirs.sort();
        let takes = dirs
            .iter()
            .map(|d| load_take(d))
            .collect::<Result<Vec<_>>>()?;
        if takes.is_empty() {
            return Err(Error::Data(format!("{}: no takes found", root.display())));
        }
        let vocab = |name: &str| -> Result<Vec<(usize, String)>> {
            let p = root.join(name);
            if p.exists() {
                parse_vocab_file(&p)
            } else {
                Ok(Vec::new())
            }
        };
        Ok(Self {
            takes,
            action_names: vocab(ACTION_VOCAB_FILE)?,
            verb_names: vocab(VERB_VOCAB_FILE)?,
        })
    }

    /// Writes every take plus vocabularies under `root`.
    pub fn write(&self, root: &Path) -> Result<()> {
        fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        for t in &self.takes {
            write_take(&root.join(&t.id), t)?;
        }
        write_vocab_file(&root.join(ACTION_VOCAB_FILE), &self.action_names)?;
        write_vocab_file(&root.join(VERB_VOCAB_FILE), &self.verb_names)
    }
}

pub fn load_take(dir: &Path) -> Result<Take> {
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let take = Take {
        hp_frames: parse_handpose_file(&dir.join(HAND_POSE_FILE))?,
        rgb: read_feature_file(&dir.join(FEATURE_FILE))?,
        segments: parse_label_file(&dir.join(LABEL_FILE))?,
        id,
    };
    take.validate()?;
    Ok(take)
}

pub fn write_take(dir: &Path, take: &Take) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_handpose_file(&dir.join(HAND_POSE_FILE), &take.hp_frames)?;
    write_label_file(&dir.join(LABEL_FILE), &take.segments)?;
    write_feature_file(&dir.join(FEATURE_FILE), &take.rgb)
}
