//! Takes on disk, frame labels, augmentation, windowing and a synthetic
//! generator.

mod augment;
mod features;
mod labels;
mod split;
mod synth;
mod take;

pub use augment::{
    augment, check_augmentations, flip_window, shift_window, Augmentation, MAX_JITTER,
};
pub use features::{
    decode_features, encode_features, read_feature_file, write_feature_file, FEATURE_MAGIC,
    FEATURE_VERSION,
};
pub use labels::{
    assign_frame_labels, parse_label_file, parse_vocab_file, write_label_file, write_vocab_file,
    ActionSegment, FrameLabel, BACKGROUND,
};
pub use split::{
    augment_training_set, compute_reference_lengths, enumerate_windows, split_and_window,
    split_takes, SplitConfig, WindowSets,
};
pub use synth::{synth_generate, SynthSpec, SynthWorld, VerbProfile, JOINT_WEIGHTS, VERB_MARGIN};
pub use take::{
    load_take, write_take, Dataset, PreparedTake, Take, ACTION_VOCAB_FILE, FEATURE_FILE,
    HAND_POSE_FILE, LABEL_FILE, VERB_VOCAB_FILE,
};

pub use crate::handpose::parse_handpose_file;
