//! The dihedral group of the square: four quarter-turn rotations combined
//! with an optional horizontal mirror.
//!
//! Elements are always read as "flip first, then rotate counterclockwise".
//! Grids use image coordinates (x to the right, y downward), so a
//! counterclockwise turn is the one that moves the top-right corner to the
//! top-left.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// Counterclockwise rotation by a multiple of 90 degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Rotation {
    #[default]
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn quarter_turns(self) -> u8 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 1,
            Rotation::R180 => 2,
            Rotation::R270 => 3,
        }
    }

    pub fn from_quarter_turns(q: i32) -> Self {
        Self::ALL[q.rem_euclid(4) as usize]
    }

    pub fn degrees(self) -> u32 {
        u32::from(self.quarter_turns()) * 90
    }

    pub fn from_degrees(deg: i64) -> Option<Self> {
        if deg % 90 != 0 {
            return None;
        }
        Some(Self::from_quarter_turns((deg / 90).rem_euclid(4) as i32))
    }

    /// True when the rotation swaps width and height.
    pub fn is_odd(self) -> bool {
        self.quarter_turns() % 2 == 1
    }
}

impl Serialize for Rotation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u32(self.degrees())
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let deg = i64::deserialize(d)?;
        Rotation::from_degrees(deg)
            .ok_or_else(|| serde::de::Error::custom(format!("rotation {deg} is not a multiple of 90")))
    }
}

/// Mirror applied before the rotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flip {
    #[default]
    None,
    /// Mirror across the vertical axis (x is negated).
    Horizontal,
}

/// One of the eight rigid symmetries of the square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct D4 {
    pub rot: Rotation,
    pub flip: Flip,
}

impl D4 {
    pub const IDENTITY: D4 = D4 {
        rot: Rotation::R0,
        flip: Flip::None,
    };

    /// All elements in canonical-id order (identity first).
    pub const ALL: [D4; 8] = [
        D4::new(Rotation::R0, Flip::None),
        D4::new(Rotation::R90, Flip::None),
        D4::new(Rotation::R180, Flip::None),
        D4::new(Rotation::R270, Flip::None),
        D4::new(Rotation::R0, Flip::Horizontal),
        D4::new(Rotation::R90, Flip::Horizontal),
        D4::new(Rotation::R180, Flip::Horizontal),
        D4::new(Rotation::R270, Flip::Horizontal),
    ];

    pub const fn new(rot: Rotation, flip: Flip) -> Self {
        D4 { rot, flip }
    }

    /// Mirror across the horizontal axis, i.e. a horizontal flip followed by a half turn.
    pub const fn vertical_flip() -> Self {
        D4::new(Rotation::R180, Flip::Horizontal)
    }

    /// Canonical id in `0..8`: quarter turns plus four when flipped.
    pub fn id(self) -> u8 {
        self.rot.quarter_turns() + if self.flip == Flip::Horizontal { 4 } else { 0 }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(usize::from(id)).copied()
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(self, other: D4) -> D4 {
        let a = i32::from(self.rot.quarter_turns());
        let b = i32::from(other.rot.quarter_turns());
        // A mirror conjugates a rotation into its inverse.
        let rot = if self.flip == Flip::Horizontal { a - b } else { a + b };
        let flip = if (self.flip == Flip::Horizontal) ^ (other.flip == Flip::Horizontal) {
            Flip::Horizontal
        } else {
            Flip::None
        };
        D4::new(Rotation::from_quarter_turns(rot), flip)
    }

    pub fn inverse(self) -> D4 {
        match self.flip {
            Flip::Horizontal => self,
            Flip::None => D4::new(
                Rotation::from_quarter_turns(-i32::from(self.rot.quarter_turns())),
                Flip::None,
            ),
        }
    }

    /// Dimensions of a `w × h` frame after the transform.
    pub fn output_dims<T>(self, w: T, h: T) -> (T, T) {
        if self.rot.is_odd() {
            (h, w)
        } else {
            (w, h)
        }
    }

    /// Maps integer cell `(x, y)` of a `w × h` grid to its cell in the transformed grid.
    #[inline]
    pub fn apply_cell(self, x: usize, y: usize, w: usize, h: usize) -> (usize, usize) {
        let x = match self.flip {
            Flip::None => x,
            Flip::Horizontal => w - 1 - x,
        };
        match self.rot {
            Rotation::R0 => (x, y),
            Rotation::R90 => (y, w - 1 - x),
            Rotation::R180 => (w - 1 - x, h - 1 - y),
            Rotation::R270 => (h - 1 - y, x),
        }
    }

    /// Maps a continuous point in a `w × h` frame into the transformed frame.
    pub fn apply_point(self, p: Point, w: f64, h: f64) -> Point {
        let x = match self.flip {
            Flip::None => p.x,
            Flip::Horizontal => w - p.x,
        };
        let y = p.y;
        match self.rot {
            Rotation::R0 => Point::new(x, y),
            Rotation::R90 => Point::new(y, w - x),
            Rotation::R180 => Point::new(w - x, h - y),
            Rotation::R270 => Point::new(h - y, x),
        }
    }
}

impl std::fmt::Display for D4 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.flip {
            Flip::None => write!(f, "rot{}", self.rot.degrees()),
            Flip::Horizontal => write!(f, "rot{}+flip", self.rot.degrees()),
        }
    }
}

/// Canonical element id of `(rot, flip)`.
pub fn d4_canonical(rot: Rotation, flip: Flip) -> u8 {
    D4::new(rot, flip).id()
}
