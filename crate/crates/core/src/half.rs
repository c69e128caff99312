use std::fmt;

use serde::{Deserialize, Serialize};

/// A half-integer or integer quantum number stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HalfInteger {
    twice: i32,
}

impl HalfInteger {
    pub const fn from_twice(twice: i32) -> Self {
        Self { twice }
    }

    pub const fn twice(self) -> i32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        f64::from(self.twice) / 2.0
    }

    /// Parses values such as `5/2`, `-3/2`, `2` or `1.5`.
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: i32 = num.trim().parse().ok()?;
            match den.trim() {
                "2" => Some(Self::from_twice(num)),
                "1" => Some(Self::from_twice(2 * num)),
                _ => None,
            }
        } else {
            let v: f64 = s.parse().ok()?;
            let twice = (2.0 * v).round();
            ((2.0 * v - twice).abs() < 1e-12).then(|| Self::from_twice(twice as i32))
        }
    }
}

impl fmt::Display for HalfInteger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice % 2 == 0 {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}
