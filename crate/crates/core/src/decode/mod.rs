//! Beam pruning of candidates, score-table assembly, and decoding into an
//! [`SrlGraph`](crate::data::SrlGraph).

mod constrained;
mod prune;
mod table;

pub use constrained::{decode_constrained, decode_greedy, MAX_CORE_ROLES};
pub use prune::{beam_capacity, prune, Beam};
pub use table::ScoreTable;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Style;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("{count} core roles exceed the decoder limit of {max}")]
    CoreMaskOverflow { count: usize, max: usize },
    #[error("score table has {found} entries, expected {expected}")]
    TableShape { expected: usize, found: usize },
}

/// Output-structure constraints enforced while decoding.
///
/// * `unique_core` (U): each core role at most once per predicate.
/// * `continuation` (C): `C-X` only after a realized `X`.
/// * `reference` (R): `R-X` only when `X` is realized.
/// * `non_overlap` (O): arguments of one predicate do not overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub unique_core: bool,
    pub continuation: bool,
    pub reference: bool,
    pub non_overlap: bool,
}

impl ConstraintSet {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn all() -> Self {
        ConstraintSet {
            unique_core: true,
            continuation: true,
            reference: true,
            non_overlap: true,
        }
    }

    /// U+O for spans; U for dependencies, where O holds trivially for
    /// distinct single-token arguments and is therefore switched on.
    pub fn for_style(style: Style) -> Self {
        match style {
            Style::Span | Style::Dep => ConstraintSet {
                unique_core: true,
                non_overlap: true,
                ..Self::default()
            },
        }
    }

    pub fn is_unconstrained(&self) -> bool {
        *self == Self::none()
    }
}

impl std::fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let flags = [
            (self.unique_core, 'U'),
            (self.continuation, 'C'),
            (self.reference, 'R'),
            (self.non_overlap, 'O'),
        ];
        let s: String = flags.iter().filter(|(on, _)| *on).map(|(_, c)| *c).collect();
        if s.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&s)
        }
    }
}

impl std::str::FromStr for ConstraintSet {
    type Err = String;

    /// Parses flag letters such as `UO`, `U,O`, or `none`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut c = ConstraintSet::none();
        if s.eq_ignore_ascii_case("none") {
            return Ok(c);
        }
        for ch in s.chars().filter(|ch| !matches!(ch, ',' | '+' | ' ')) {
            match ch.to_ascii_uppercase() {
                'U' => c.unique_core = true,
                'C' => c.continuation = true,
                'R' => c.reference = true,
                'O' => c.non_overlap = true,
                other => return Err(format!("unknown constraint flag `{other}`")),
            }
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraint_flags_parse() {
        let c: ConstraintSet = "U,O".parse().unwrap();
        assert_eq!(c, ConstraintSet::for_style(Style::Span));
        assert_eq!(c.to_string(), "UO");
        assert_eq!("none".parse::<ConstraintSet>().unwrap(), ConstraintSet::none());
        assert!("X".parse::<ConstraintSet>().is_err());
    }
}
