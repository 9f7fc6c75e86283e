//! Bilateral 3D hand keypoints and their normalization.

mod io;
mod normalize;
mod topology;

use std::fmt;

pub use io::{
    format_handpose, parse_handpose_file, parse_handpose_str, write_handpose_file, FIELDS_PER_LINE,
};
pub use normalize::{
    canonical_frame, canonical_rotate, normalize_hand, normalize_hand_frame,
    normalize_hand_frame_lenient, standardize_bone_lengths, translate_to_wrist, CanonicalAxes,
    NormalizeConfig,
};
pub use topology::{hand_edges, SkeletonTopology};

pub const KEYPOINTS: usize = 21;
pub const WRIST: usize = 0;
pub const INDEX_MCP: usize = 5;
pub const MIDDLE_MCP: usize = 9;
/// Length of a flattened two-hand frame.
pub const FRAME_DIM: usize = 2 * KEYPOINTS * 3;

pub type Point = [f64; 3];
pub type Hand = [Point; KEYPOINTS];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

/// One time step of both hands. Invalid hands carry all-zero coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandFrame {
    pub left: Hand,
    pub right: Hand,
    pub left_valid: bool,
    pub right_valid: bool,
}

impl HandFrame {
    pub fn invalid() -> Self {
        Self {
            left: [[0.0; 3]; KEYPOINTS],
            right: [[0.0; 3]; KEYPOINTS],
            left_valid: false,
            right_valid: false,
        }
    }

    pub fn new(left: Option<Hand>, right: Option<Hand>) -> Self {
        let mut f = Self::invalid();
        if let Some(l) = left {
            f.left = l;
            f.left_valid = true;
        }
        if let Some(r) = right {
            f.right = r;
            f.right_valid = true;
        }
        f
    }

    /// Left block (63 values) then right block, row-major per keypoint.
    pub fn flatten(&self) -> [f64; FRAME_DIM] {
        let mut out = [0.0; FRAME_DIM];
        for (k, p) in self.left.iter().chain(self.right.iter()).enumerate() {
            out[3 * k..3 * k + 3].copy_from_slice(p);
        }
        out
    }

    /// Horizontal mirror of the scene: negate x and swap the hands.
    pub fn mirrored(&self) -> Self {
        let neg = |h: &Hand| {
            let mut o = *h;
            for p in o.iter_mut() {
                p[0] = -p[0];
            }
            o
        };
        Self {
            left: neg(&self.right),
            right: neg(&self.left),
            left_valid: self.right_valid,
            right_valid: self.left_valid,
        }
    }

    /// Applies `p -> R p + t` to every keypoint of the valid hands.
    pub fn transformed(&self, rotation: &[Point; 3], translation: Point) -> Self {
        let apply = |h: &Hand| {
            let mut o = *h;
            for p in o.iter_mut() {
                let q = *p;
                *p = [
                    dot(rotation[0], q) + translation[0],
                    dot(rotation[1], q) + translation[1],
                    dot(rotation[2], q) + translation[2],
                ];
            }
            o
        };
        let mut out = *self;
        if self.left_valid {
            out.left = apply(&self.left);
        }
        if self.right_valid {
            out.right = apply(&self.right);
        }
        out
    }
}

/// A frame that has been through the normalization pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedHandFrame(pub(crate) HandFrame);

impl NormalizedHandFrame {
    pub fn frame(&self) -> &HandFrame {
        &self.0
    }

    pub fn flatten(&self) -> [f64; FRAME_DIM] {
        self.0.flatten()
    }

    /// The flip augmentation in canonical space. Mirroring the raw scene
    /// swaps the hands, and because left hands are mirrored before
    /// normalization, the normalized coordinates simply trade places.
    pub fn flipped(&self) -> Self {
        let f = &self.0;
        Self(HandFrame {
            left: f.right,
            right: f.left,
            left_valid: f.right_valid,
            right_valid: f.left_valid,
        })
    }

    pub fn into_inner(self) -> HandFrame {
        self.0
    }
}

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub(crate) fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub(crate) fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub(crate) fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}
