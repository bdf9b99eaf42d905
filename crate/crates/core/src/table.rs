//! Depth-bounded semimeasure tables.
//!
//! A table stores one exact value for every string of length at most `depth`,
//! laid out in length-lexicographic order so that the string with index `i`
//! has children `2i + 1` and `2i + 2`.
//!
//! Text format: one record per string, length-lexicographic order, `-` for the
//! empty string, values as `num/den`:
//!
//! ```text
//! - 1/1
//! 0 1/2
//! 1 1/4
//! ```

use std::fmt::{self, Write as _};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic::{BinaryString, SimpleSet};
use crate::error::{Error, Result};
use crate::rational::{self, dyadic, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemimeasureTable {
    depth: usize,
    values: Vec<Rational>,
}

/// One failed inequality found by [`SemimeasureTable::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    /// Value outside [0, 1].
    OutOfRange { at: BinaryString, value: String },
    /// `T(x0) + T(x1) > T(x)`.
    ChildrenExceed {
        at: BinaryString,
        parent: String,
        children: String,
    },
}

impl Violation {
    pub fn at(&self) -> &BinaryString {
        match self {
            Violation::OutOfRange { at, .. } | Violation::ChildrenExceed { at, .. } => at,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRange { at, value } => write!(f, "value {value} at {at} outside [0, 1]"),
            Violation::ChildrenExceed { at, parent, children } => {
                write!(f, "children of {at} sum to {children} > {parent}")
            }
        }
    }
}

pub(crate) fn slot(x: &BinaryString) -> usize {
    x.index() as usize
}

fn table_len(depth: usize) -> usize {
    (1usize << (depth + 1)) - 1
}

impl SemimeasureTable {
    /// Builds a table by evaluating `f` on every string up to `depth`.
    pub fn from_fn(depth: usize, mut f: impl FnMut(&BinaryString) -> Rational) -> Self {
        let values = BinaryString::up_to(depth).map(|x| f(&x)).collect();
        Self { depth, values }
    }

    /// Values in length-lexicographic order; must hold `2^(depth+1) - 1` entries.
    pub fn from_values(depth: usize, values: Vec<Rational>) -> Self {
        assert_eq!(values.len(), table_len(depth), "table size mismatch");
        Self { depth, values }
    }

    pub fn uniform(depth: usize) -> Self {
        Self::from_fn(depth, |x| dyadic(x.len()))
    }

    pub fn zero(depth: usize) -> Self {
        Self::from_values(depth, vec![Rational::zero(); table_len(depth)])
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn get(&self, x: &BinaryString) -> Result<&Rational> {
        if x.len() > self.depth {
            return Err(Error::Depth {
                string: x.clone(),
                length: x.len(),
                depth: self.depth,
            });
        }
        Ok(&self.values[slot(x)])
    }

    /// Value at `x`; panics when `x` is deeper than the table.
    pub fn at(&self, x: &BinaryString) -> &Rational {
        &self.values[slot(x)]
    }

    pub fn set(&mut self, x: &BinaryString, value: Rational) {
        let i = slot(x);
        self.values[i] = value;
    }

    /// Every failed inequality: root and values in [0, 1], children bounded
    /// by their parent at each interior vertex.
    pub fn validate(&self) -> Vec<Violation> {
        let mut report = Vec::new();
        for (i, v) in self.values.iter().enumerate() {
            if v < &Rational::zero() || v > &Rational::one() {
                report.push(Violation::OutOfRange {
                    at: BinaryString::from_index(i as u64),
                    value: rational::format(v),
                });
            }
        }
        let interior = table_len(self.depth) >> 1;
        for i in 0..interior {
            let children = &self.values[2 * i + 1] + &self.values[2 * i + 2];
            if children > self.values[i] {
                report.push(Violation::ChildrenExceed {
                    at: BinaryString::from_index(i as u64),
                    parent: rational::format(&self.values[i]),
                    children: rational::format(&children),
                });
            }
        }
        report
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// The largest measure below the table at this depth: the deepest level
    /// summed back up the tree. Approximates the infinite-depth infimum from
    /// above.
    pub fn bar_measure(&self) -> SemimeasureTable {
        let mut values = self.values.clone();
        let interior = table_len(self.depth) >> 1;
        for i in (0..interior).rev() {
            values[i] = &values[2 * i + 1] + &values[2 * i + 2];
        }
        Self {
            depth: self.depth,
            values,
        }
    }

    /// Measure of a simple set under the additive completion of the table.
    pub fn simple_set_measure(&self, set: &SimpleSet) -> Result<Rational> {
        if let Some(g) = set.generators().iter().find(|g| g.len() > self.depth) {
            return Err(Error::Depth {
                string: g.clone(),
                length: g.len(),
                depth: self.depth,
            });
        }
        let bar = self.bar_measure();
        Ok(set.generators().iter().map(|g| bar.at(g).clone()).sum())
    }

    /// The least semimeasure dominating this table at its depth, built
    /// bottom-up as `max(T(x), Q(x0) + Q(x1))`. Values may exceed 1 when the
    /// input does; callers validate.
    pub fn minimal_dominating(&self) -> SemimeasureTable {
        let mut values = self.values.clone();
        let interior = table_len(self.depth) >> 1;
        for i in (0..interior).rev() {
            let children = &values[2 * i + 1] + &values[2 * i + 2];
            if children > values[i] {
                values[i] = children;
            }
        }
        Self {
            depth: self.depth,
            values,
        }
    }

    /// Strings of length `n` carrying positive mass.
    pub fn support_set(&self, n: usize) -> Result<Vec<BinaryString>> {
        if n > self.depth {
            return Err(Error::Depth {
                string: BinaryString::repeat(false, n),
                length: n,
                depth: self.depth,
            });
        }
        let start = (1usize << n) - 1;
        Ok((start..2 * start + 1)
            .filter(|&i| self.values[i] > Rational::zero())
            .map(|i| BinaryString::from_index(i as u64))
            .collect())
    }

    /// Total mass on level `n`.
    pub fn level_mass(&self, n: usize) -> Rational {
        assert!(n <= self.depth);
        let start = (1usize << n) - 1;
        self.values[start..2 * start + 1].iter().sum()
    }

    /// Restriction to a shallower depth.
    pub fn truncate(&self, depth: usize) -> SemimeasureTable {
        assert!(depth <= self.depth);
        Self::from_values(depth, self.values[..table_len(depth)].to_vec())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(
                out,
                "{} {}",
                BinaryString::from_index(i as u64),
                rational::format(v)
            );
        }
        out
    }

    /// Parses the text format. Records may appear in any order but must cover
    /// every string up to the deepest one exactly once. Blank lines and `#`
    /// comments are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut records: Vec<(BinaryString, Rational, usize)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let mut parts = line.split_whitespace();
            let (Some(s), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(parse_err("expected `<string> <num/den>`".into()));
            };
            let x: BinaryString = s.parse().map_err(parse_err)?;
            let value = rational::parse(v).ok_or_else(|| parse_err(format!("bad value {v:?}")))?;
            records.push((x, value, lineno + 1));
        }
        let depth = records.iter().map(|(x, _, _)| x.len()).max().unwrap_or(0);
        if depth >= 28 {
            return Err(Error::Parse {
                line: 0,
                message: format!("table depth {depth} too large"),
            });
        }
        let mut values: Vec<Option<Rational>> = vec![None; table_len(depth)];
        for (x, v, line) in records {
            let slot = &mut values[slot(&x)];
            if slot.is_some() {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate record for {x}"),
                });
            }
            *slot = Some(v);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                v.ok_or_else(|| Error::Parse {
                    line: 0,
                    message: format!("missing record for {}", BinaryString::from_index(i as u64)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { depth, values })
    }
}
