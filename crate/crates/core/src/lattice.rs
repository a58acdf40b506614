//! Security levels: the powerset lattice of principals ordered by inclusion,
//! with a symbolic bottom standing for every principal.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};

/// `All` is bottom (public); `Principals(∅)` is top (nobody may know).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SecurityLevel {
    All,
    Principals(BTreeSet<String>),
}

impl SecurityLevel {
    pub fn top() -> SecurityLevel {
        SecurityLevel::Principals(BTreeSet::new())
    }

    pub fn bottom() -> SecurityLevel {
        SecurityLevel::All
    }

    pub fn of<I, S>(names: I) -> SecurityLevel
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        SecurityLevel::Principals(names.into_iter().map(Into::into).collect())
    }

    pub fn is_top(&self) -> bool {
        matches!(self, SecurityLevel::Principals(s) if s.is_empty())
    }

    /// Greatest lower bound: set union, `All` absorbing.
    pub fn meet(&self, other: &SecurityLevel) -> SecurityLevel {
        match (self, other) {
            (SecurityLevel::All, _) | (_, SecurityLevel::All) => SecurityLevel::All,
            (SecurityLevel::Principals(a), SecurityLevel::Principals(b)) => {
                SecurityLevel::Principals(a.union(b).cloned().collect())
            }
        }
    }

    /// Least upper bound: set intersection, `All` neutral.
    pub fn join(&self, other: &SecurityLevel) -> SecurityLevel {
        match (self, other) {
            (SecurityLevel::All, x) | (x, SecurityLevel::All) => x.clone(),
            (SecurityLevel::Principals(a), SecurityLevel::Principals(b)) => {
                SecurityLevel::Principals(a.intersection(b).cloned().collect())
            }
        }
    }

    /// `self ⊒ other`, i.e. `self ⊆ other`.
    pub fn geq(&self, other: &SecurityLevel) -> bool {
        match (self, other) {
            (_, SecurityLevel::All) => true,
            (SecurityLevel::All, _) => false,
            (SecurityLevel::Principals(a), SecurityLevel::Principals(b)) => a.is_subset(b),
        }
    }

    pub fn meet_all<'a>(levels: impl IntoIterator<Item = &'a SecurityLevel>) -> SecurityLevel {
        levels.into_iter().fold(SecurityLevel::top(), |acc, l| acc.meet(l))
    }

    pub fn join_all<'a>(levels: impl IntoIterator<Item = &'a SecurityLevel>) -> SecurityLevel {
        levels.into_iter().fold(SecurityLevel::All, |acc, l| acc.join(l))
    }
}

impl fmt::Display for SecurityLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SecurityLevel::All => f.write_str("ALL"),
            SecurityLevel::Principals(s) => {
                f.write_str("{")?;
                for (i, p) in s.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(p)?;
                }
                f.write_str("}")
            }
        }
    }
}

impl FromStr for SecurityLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "ALL" {
            return Ok(SecurityLevel::All);
        }
        let inner = s
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| format!("expected ALL or {{...}}, found `{s}`"))?;
        let mut set = BTreeSet::new();
        if !inner.trim().is_empty() {
            for part in inner.split(',') {
                let p = part.trim();
                if p.is_empty() || !p.chars().all(|c| c.is_alphanumeric() || "_#@'".contains(c)) {
                    return Err(format!("bad principal name `{p}`"));
                }
                set.insert(p.to_string());
            }
        }
        Ok(SecurityLevel::Principals(set))
    }
}

impl Serialize for SecurityLevel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            SecurityLevel::All => serializer.serialize_str("ALL"),
            SecurityLevel::Principals(set) => {
                let mut seq = serializer.serialize_seq(Some(set.len()))?;
                for p in set {
                    seq.serialize_element(p)?;
                }
                seq.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for SecurityLevel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct LevelVisitor;

        impl<'de> Visitor<'de> for LevelVisitor {
            type Value = SecurityLevel;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("\"ALL\" or an array of principal names")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<SecurityLevel, E> {
                if v == "ALL" {
                    Ok(SecurityLevel::All)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }

            fn visit_seq<A: de::SeqAccess<'de>>(self, mut seq: A) -> Result<SecurityLevel, A::Error> {
                let mut set = BTreeSet::new();
                while let Some(p) = seq.next_element::<String>()? {
                    set.insert(p);
                }
                Ok(SecurityLevel::Principals(set))
            }
        }

        deserializer.deserialize_any(LevelVisitor)
    }
}
