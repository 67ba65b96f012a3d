//! Dotted numeric versions and constraint intervals.
//!
//! Versions compare componentwise with missing components treated as zero,
//! so `1.2` and `1.2.0` are the same version. Every constraint denotes an
//! interval, and satisfiability of two constraints is interval intersection.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ManifestError;

#[derive(Debug, Clone, Eq)]
pub struct Version(Vec<u64>);

impl Version {
    pub fn new(parts: Vec<u64>) -> Self {
        Version(parts)
    }

    pub fn parts(&self) -> &[u64] {
        &self.0
    }

    fn component(&self, i: usize) -> u64 {
        self.0.get(i).copied().unwrap_or(0)
    }

    /// Upper bound for `~=`: drop the last component and bump the new last one.
    fn compatible_upper(&self) -> Option<Version> {
        if self.0.len() < 2 {
            return None;
        }
        let mut parts = self.0[..self.0.len() - 1].to_vec();
        *parts.last_mut()? += 1;
        Some(Version(parts))
    }
}

impl PartialEq for Version {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Ord for Version {
    fn cmp(&self, other: &Self) -> Ordering {
        let len = self.0.len().max(other.0.len());
        (0..len)
            .map(|i| self.component(i).cmp(&other.component(i)))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }
}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromStr for Version {
    type Err = ManifestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || ManifestError::InvalidVersion(s.to_string());
        if s.is_empty() {
            return Err(invalid());
        }
        s.split('.')
            .map(|part| {
                if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
                    return Err(invalid());
                }
                part.parse::<u64>().map_err(|_| invalid())
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Version)
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for part in &self.0 {
            if !first {
                f.write_str(".")?;
            }
            write!(f, "{part}")?;
            first = false;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Eq,
    Ge,
    Le,
    Gt,
    Lt,
    Compatible,
}

impl Operator {
    pub fn as_str(self) -> &'static str {
        match self {
            Operator::Eq => "==",
            Operator::Ge => ">=",
            Operator::Le => "<=",
            Operator::Gt => ">",
            Operator::Lt => "<",
            Operator::Compatible => "~=",
        }
    }

    /// Longest-match lookup at the start of `s`.
    pub(crate) fn strip_prefix(s: &str) -> Option<(Operator, &str)> {
        const TABLE: [(&str, Operator); 6] = [
            ("==", Operator::Eq),
            (">=", Operator::Ge),
            ("<=", Operator::Le),
            ("~=", Operator::Compatible),
            (">", Operator::Gt),
            ("<", Operator::Lt),
        ];
        TABLE
            .iter()
            .find_map(|(tok, op)| s.strip_prefix(tok).map(|rest| (*op, rest)))
    }
}

/// A single `OP version` clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub op: Operator,
    pub version: Version,
}

impl Constraint {
    pub fn new(op: Operator, version: Version) -> Result<Self, ManifestError> {
        if op == Operator::Compatible && version.parts().len() < 2 {
            return Err(ManifestError::InvalidConstraint(format!(
                "~= needs at least two version components, got {version}"
            )));
        }
        Ok(Constraint { op, version })
    }

    pub fn interval(&self) -> Interval {
        let v = self.version.clone();
        match self.op {
            Operator::Eq => Interval {
                lower: Some(Bound::inclusive(v.clone())),
                upper: Some(Bound::inclusive(v)),
            },
            Operator::Ge => Interval {
                lower: Some(Bound::inclusive(v)),
                upper: None,
            },
            Operator::Gt => Interval {
                lower: Some(Bound::exclusive(v)),
                upper: None,
            },
            Operator::Le => Interval {
                lower: None,
                upper: Some(Bound::inclusive(v)),
            },
            Operator::Lt => Interval {
                lower: None,
                upper: Some(Bound::exclusive(v)),
            },
            Operator::Compatible => {
                let upper = v.compatible_upper().expect("checked in Constraint::new");
                Interval {
                    lower: Some(Bound::inclusive(v)),
                    upper: Some(Bound::exclusive(upper)),
                }
            }
        }
    }

    pub fn contains(&self, v: &Version) -> bool {
        self.interval().contains(v)
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.op.as_str(), self.version)
    }
}

impl FromStr for Constraint {
    type Err = ManifestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (op, rest) = Operator::strip_prefix(s)
            .ok_or_else(|| ManifestError::InvalidConstraint(s.to_string()))?;
        Constraint::new(op, rest.trim().parse()?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bound {
    pub version: Version,
    pub inclusive: bool,
}

impl Bound {
    fn inclusive(version: Version) -> Self {
        Bound {
            version,
            inclusive: true,
        }
    }

    fn exclusive(version: Version) -> Self {
        Bound {
            version,
            inclusive: false,
        }
    }
}

/// A (possibly unbounded) interval of versions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Interval {
    pub lower: Option<Bound>,
    pub upper: Option<Bound>,
}

impl Interval {
    pub fn unbounded() -> Self {
        Interval::default()
    }

    pub fn contains(&self, v: &Version) -> bool {
        let above = match &self.lower {
            None => true,
            Some(b) if b.inclusive => v >= &b.version,
            Some(b) => v > &b.version,
        };
        let below = match &self.upper {
            None => true,
            Some(b) if b.inclusive => v <= &b.version,
            Some(b) => v < &b.version,
        };
        above && below
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let lower = match (&self.lower, &other.lower) {
            (None, b) | (b, None) => b.clone(),
            (Some(a), Some(b)) => Some(match a.version.cmp(&b.version) {
                Ordering::Greater => a.clone(),
                Ordering::Less => b.clone(),
                Ordering::Equal => Bound {
                    version: a.version.clone(),
                    inclusive: a.inclusive && b.inclusive,
                },
            }),
        };
        let upper = match (&self.upper, &other.upper) {
            (None, b) | (b, None) => b.clone(),
            (Some(a), Some(b)) => Some(match a.version.cmp(&b.version) {
                Ordering::Less => a.clone(),
                Ordering::Greater => b.clone(),
                Ordering::Equal => Bound {
                    version: a.version.clone(),
                    inclusive: a.inclusive && b.inclusive,
                },
            }),
        };
        Interval { lower, upper }
    }

    /// Between any two distinct versions there is always a third (append a
    /// deeper component), so only the degenerate cases can be empty. The
    /// all-zero version is the least element, so `<0` is empty too.
    pub fn is_empty(&self) -> bool {
        let zero = Bound::inclusive(Version(vec![0]));
        let lo = self.lower.as_ref().unwrap_or(&zero);
        match &self.upper {
            Some(hi) => match lo.version.cmp(&hi.version) {
                Ordering::Greater => true,
                Ordering::Equal => !(lo.inclusive && hi.inclusive),
                Ordering::Less => false,
            },
            None => false,
        }
    }
}

/// The set of versions a registry row allows: `any`, or a comma-separated
/// conjunction of clauses such as `>=1.0,<2.0`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum VersionSpec {
    #[default]
    Any,
    All(Vec<Constraint>),
}

impl VersionSpec {
    pub fn interval(&self) -> Interval {
        match self {
            VersionSpec::Any => Interval::unbounded(),
            VersionSpec::All(clauses) => clauses
                .iter()
                .fold(Interval::unbounded(), |acc, c| acc.intersect(&c.interval())),
        }
    }

    /// Whether some version satisfies both this spec and `constraint`.
    pub fn admits(&self, constraint: Option<&Constraint>) -> bool {
        match constraint {
            None => !self.interval().is_empty(),
            Some(c) => !self.interval().intersect(&c.interval()).is_empty(),
        }
    }
}

impl fmt::Display for VersionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VersionSpec::Any => f.write_str("any"),
            VersionSpec::All(clauses) => {
                let joined: Vec<String> = clauses.iter().map(|c| c.to_string()).collect();
                f.write_str(&joined.join(","))
            }
        }
    }
}

impl FromStr for VersionSpec {
    type Err = ManifestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("any") {
            return Ok(VersionSpec::Any);
        }
        if s.is_empty() {
            return Err(ManifestError::InvalidConstraint(String::new()));
        }
        let clauses = s
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<Constraint>, _>>()?;
        Ok(VersionSpec::All(clauses))
    }
}

impl Serialize for VersionSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for VersionSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}
