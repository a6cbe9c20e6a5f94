//! Highest weights of the compact symplectic group, written as partitions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A partition `λ₁ ≥ λ₂ ≥ … ≥ 0` stored without trailing zeros.
///
/// Two partitions that differ only by trailing zeros are equal, so the type
/// can be used directly as a map key.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn empty() -> Self {
        Partition(Vec::new())
    }

    pub fn new(parts: impl Into<Vec<u32>>) -> Result<Self> {
        let mut parts = parts.into();
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidPartition {
                parts,
                reason: "parts must be weakly decreasing",
            });
        }
        while parts.last() == Some(&0) {
            parts.pop();
        }
        Ok(Partition(parts))
    }

    /// `(1, 1, …, 1)` with `k` ones.
    pub fn column(k: usize) -> Self {
        Partition(vec![1; k])
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    /// Number of nonzero rows.
    pub fn rows(&self) -> usize {
        self.0.len()
    }

    /// `|λ|`.
    pub fn size(&self) -> u64 {
        self.0.iter().map(|&p| p as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The `i`-th part (zero beyond the last nonzero row).
    pub fn part(&self, i: usize) -> u32 {
        self.0.get(i).copied().unwrap_or(0)
    }

    pub fn check_rank(&self, g: usize) -> Result<()> {
        if self.rows() > g {
            return Err(Error::RankBound {
                parts: self.0.clone(),
                rows: self.rows(),
                g,
            });
        }
        Ok(())
    }

    /// Partitions obtained by adding one box, keeping at most `g` rows.
    pub fn add_box(&self, g: usize) -> Vec<Partition> {
        let mut out = Vec::new();
        for i in 0..=self.rows().min(g.saturating_sub(1)) {
            if i == 0 || self.part(i - 1) > self.part(i) {
                let mut p = self.0.clone();
                if i == p.len() {
                    p.push(1);
                } else {
                    p[i] += 1;
                }
                out.push(Partition(p));
            }
        }
        out
    }

    /// Partitions obtained by removing one box.
    pub fn remove_box(&self) -> Vec<Partition> {
        let mut out = Vec::new();
        for i in 0..self.rows() {
            if self.part(i) > self.part(i + 1) {
                let mut p = self.0.clone();
                p[i] -= 1;
                if p[i] == 0 {
                    p.pop();
                }
                out.push(Partition(p));
            }
        }
        out
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "(0)");
        }
        write!(f, "(")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")")
    }
}

/// Parses `"1,1,1"`, `"(2,1)"` or `"0"`.
impl FromStr for Partition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        if inner.trim().is_empty() {
            return Ok(Partition::empty());
        }
        let parts = inner
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::InvalidArgument(format!("bad partition part {p:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Partition::new(parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_drops_trailing_zeros() {
        let a = Partition::new(vec![2, 1, 0, 0]).unwrap();
        let b = Partition::new(vec![2, 1]).unwrap();
        assert_eq!(a, b);
        assert_eq!(Partition::new(vec![0]).unwrap(), Partition::empty());
    }

    #[test]
    fn rejects_increasing_parts() {
        assert!(Partition::new(vec![1, 2]).is_err());
    }

    #[test]
    fn box_moves() {
        let p = Partition::new(vec![1]).unwrap();
        let mut up = p.add_box(3);
        up.sort();
        assert_eq!(up, vec![Partition::column(2), Partition::new(vec![2]).unwrap()]);
        assert_eq!(p.remove_box(), vec![Partition::empty()]);

        // a fourth row is not allowed for g = 3
        let col = Partition::column(3);
        assert!(col.add_box(3).iter().all(|q| q.rows() <= 3));
        assert_eq!(col.add_box(3), vec![Partition::new(vec![2, 1, 1]).unwrap()]);
    }

    #[test]
    fn parse_and_display() {
        let p: Partition = "(2,2,1,1)".parse().unwrap();
        assert_eq!(p.to_string(), "(2,2,1,1)");
        assert_eq!("0".parse::<Partition>().unwrap(), Partition::empty());
        assert!("1,x".parse::<Partition>().is_err());
    }
}
