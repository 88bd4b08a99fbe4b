//! Small value types shared by every module.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Publication year. All timestamps in the toolkit have year granularity.
pub type Year = i32;

/// Dense index of a vertex in the fixed, id-sorted vertex set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("vertex index exceeds u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Unordered vertex pair stored in canonical orientation (`lo < hi`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pair {
    lo: NodeId,
    hi: NodeId,
}

impl Pair {
    /// Canonicalizes `(a, b)`; returns `None` for self-pairs.
    pub fn new(a: NodeId, b: NodeId) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Pair { lo: a, hi: b }),
            std::cmp::Ordering::Greater => Some(Pair { lo: b, hi: a }),
            std::cmp::Ordering::Equal => None,
        }
    }

    #[inline]
    pub fn lo(self) -> NodeId {
        self.lo
    }

    #[inline]
    pub fn hi(self) -> NodeId {
        self.hi
    }
}

/// Inclusive year range. Serialized as `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[Year; 2]", into = "[Year; 2]")]
pub struct YearRange {
    pub start: Year,
    pub end: Year,
}

impl YearRange {
    pub fn new(start: Year, end: Year) -> Result<Self> {
        if start > end {
            return Err(Error::invalid(format!("empty year range {start}..={end}")));
        }
        Ok(YearRange { start, end })
    }

    #[inline]
    pub fn contains(&self, year: Year) -> bool {
        self.start <= year && year <= self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn years(&self) -> impl Iterator<Item = Year> {
        self.start..=self.end
    }

    pub fn overlaps(&self, other: &YearRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn contains_range(&self, other: &YearRange) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

impl TryFrom<[Year; 2]> for YearRange {
    type Error = Error;

    fn try_from([start, end]: [Year; 2]) -> Result<Self> {
        YearRange::new(start, end)
    }
}

impl From<YearRange> for [Year; 2] {
    fn from(r: YearRange) -> Self {
        [r.start, r.end]
    }
}

impl fmt::Display for YearRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

impl std::str::FromStr for YearRange {
    type Err = Error;

    /// Accepts `2002-2017`, `2002..2017` (inclusive) or a single year.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |p: &str| {
            p.trim()
                .parse::<Year>()
                .map_err(|_| Error::invalid(format!("bad year `{p}` in range `{s}`")))
        };
        let (a, b) = if let Some((a, b)) = s.split_once("..=") {
            (a, b)
        } else if let Some((a, b)) = s.split_once("..") {
            (a, b)
        } else if let Some(idx) = s[1..].find('-').map(|i| i + 1) {
            (&s[..idx], &s[idx + 1..])
        } else {
            let y = parse(s)?;
            return YearRange::new(y, y);
        };
        YearRange::new(parse(a)?, parse(b)?)
    }
}

/// First-observation time of a pair: a year, or never observed (`inf`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FirstSeen {
    At(Year),
    Never,
}

impl FirstSeen {
    pub fn year(self) -> Option<Year> {
        match self {
            FirstSeen::At(y) => Some(y),
            FirstSeen::Never => None,
        }
    }

    /// Emerging relative to reference year `t`: first observed strictly after `t`.
    pub fn is_after(self, t: Year) -> bool {
        match self {
            FirstSeen::At(y) => y > t,
            FirstSeen::Never => true,
        }
    }
}

impl fmt::Display for FirstSeen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FirstSeen::At(y) => write!(f, "{y}"),
            FirstSeen::Never => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for FirstSeen {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" => Ok(FirstSeen::Never),
            other => other
                .parse()
                .map(FirstSeen::At)
                .map_err(|_| Error::invalid(format!("bad observation time `{other}`"))),
        }
    }
}
