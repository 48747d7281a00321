use std::fmt;
use std::ops::{Add, Sub};

/// A 2D motion vector in quarter-pel units.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mv {
    pub x: i32,
    pub y: i32,
}

impl Mv {
    pub const ZERO: Mv = Mv { x: 0, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        Mv { x, y }
    }

    /// Builds a vector from a whole-pixel displacement.
    pub const fn from_pixels(x: i32, y: i32) -> Self {
        Mv { x: 4 * x, y: 4 * y }
    }

    /// Rounds each component to the nearest whole pixel, halves rounding up.
    pub fn round_to_integer(self) -> Self {
        let r = |v: i32| (v + 2).div_euclid(4) * 4;
        Mv::new(r(self.x), r(self.y))
    }

    /// Clamps each component to `±limit` quarter-pel.
    pub fn clamp(self, limit: i32) -> Self {
        Mv::new(self.x.clamp(-limit, limit), self.y.clamp(-limit, limit))
    }

    pub fn is_integer(self) -> bool {
        self.x.rem_euclid(4) == 0 && self.y.rem_euclid(4) == 0
    }
}

impl Add for Mv {
    type Output = Mv;
    fn add(self, o: Mv) -> Mv {
        Mv::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Mv {
    type Output = Mv;
    fn sub(self, o: Mv) -> Mv {
        Mv::new(self.x - o.x, self.y - o.y)
    }
}

impl fmt::Display for Mv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}
