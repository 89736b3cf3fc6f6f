//! CelebAMask-HQ face-parsing label ids and the facial parts built on them.

use serde::{Deserialize, Serialize};

pub const BACKGROUND: u8 = 0;
pub const SKIN: u8 = 1;
pub const LEFT_BROW: u8 = 2;
pub const RIGHT_BROW: u8 = 3;
pub const LEFT_EYE: u8 = 4;
pub const RIGHT_EYE: u8 = 5;
pub const EYEGLASSES: u8 = 6;
pub const LEFT_EAR: u8 = 7;
pub const RIGHT_EAR: u8 = 8;
pub const EARRING: u8 = 9;
pub const NOSE: u8 = 10;
pub const MOUTH: u8 = 11;
pub const UPPER_LIP: u8 = 12;
pub const LOWER_LIP: u8 = 13;
pub const NECK: u8 = 14;
pub const NECKLACE: u8 = 15;
pub const CLOTH: u8 = 16;
pub const HAIR: u8 = 17;
pub const HAT: u8 = 18;

pub const LABEL_NAMES: [&str; 19] = [
    "background",
    "skin",
    "l_brow",
    "r_brow",
    "l_eye",
    "r_eye",
    "eye_g",
    "l_ear",
    "r_ear",
    "ear_r",
    "nose",
    "mouth",
    "u_lip",
    "l_lip",
    "neck",
    "neck_l",
    "cloth",
    "hair",
    "hat",
];

/// Default eye-shadow dilation radius at 256x256.
pub const DEFAULT_EYE_SHADOW_RADIUS: u32 = 12;

/// Facial parts that can receive makeup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Lips,
    Eyes,
    Skin,
}

impl Part {
    pub const ALL: [Part; 3] = [Part::Lips, Part::Eyes, Part::Skin];

    pub fn name(self) -> &'static str {
        match self {
            Part::Lips => "lips",
            Part::Eyes => "eyes",
            Part::Skin => "skin",
        }
    }

    /// Region code in a [`crate::control::RegionMap`]; 0 means "no part".
    pub(crate) fn code(self) -> u8 {
        match self {
            Part::Lips => 1,
            Part::Eyes => 2,
            Part::Skin => 3,
        }
    }
}

impl std::str::FromStr for Part {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lips" | "lip" => Ok(Part::Lips),
            "eyes" | "eye" | "eyeshadow" | "eye_shadow" => Ok(Part::Eyes),
            "skin" | "face" | "foundation" => Ok(Part::Skin),
            other => Err(format!("unknown part {other:?} (expected lips, eyes or skin)")),
        }
    }
}

impl std::fmt::Display for Part {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

pub fn is_lip(label: u8) -> bool {
    matches!(label, UPPER_LIP | LOWER_LIP)
}

pub fn is_eye(label: u8) -> bool {
    matches!(label, LEFT_EYE | RIGHT_EYE)
}

pub fn is_skin(label: u8) -> bool {
    matches!(label, SKIN | NOSE)
}

/// Labels an eye-shadow ring may cover: facial surface around the eyes.
/// Eyeballs, mouth interior, hair, ears, neck, background and accessories
/// never receive makeup.
pub fn is_eye_shadow_surface(label: u8) -> bool {
    matches!(label, SKIN | NOSE | LEFT_BROW | RIGHT_BROW)
}
