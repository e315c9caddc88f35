use std::fmt;

use serde::{Deserialize, Serialize};

/// A two-valued measurement result, `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const ALL: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    /// Table index: `Plus` is 0, `Minus` is 1.
    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }

    /// `sign(x)` with the tie-break `sign(0) = +1`.
    pub fn sign_of<T: num_traits::Float>(x: T) -> Self {
        if x >= T::zero() {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        o.value()
    }
}

impl TryFrom<i8> for Outcome {
    type Error = String;

    fn try_from(v: i8) -> Result<Self, String> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(format!("outcome must be +1 or -1, got {other}")),
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_tie_break() {
        assert_eq!(Outcome::sign_of(0.0), Outcome::Plus);
        assert_eq!(Outcome::sign_of(-0.0), Outcome::Plus);
        assert_eq!(Outcome::sign_of(-1e-300), Outcome::Minus);
    }

    #[test]
    fn integer_round_trip() {
        for o in Outcome::ALL {
            assert_eq!(Outcome::try_from(o.value()).unwrap(), o);
        }
        assert!(Outcome::try_from(0).is_err());
    }
}
