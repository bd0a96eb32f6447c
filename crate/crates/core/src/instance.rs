use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four online packing rules.
///
/// Variant order is the canonical order used everywhere a heuristic set is
/// indexed: one-hot targets, confusion matrices, and argmax tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HeuristicKind {
    BF,
    FF,
    NF,
    WF,
}

impl HeuristicKind {
    pub const ALL: [HeuristicKind; 4] = [
        HeuristicKind::BF,
        HeuristicKind::FF,
        HeuristicKind::NF,
        HeuristicKind::WF,
    ];

    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        match self {
            HeuristicKind::BF => 0,
            HeuristicKind::FF => 1,
            HeuristicKind::NF => 2,
            HeuristicKind::WF => 3,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HeuristicKind::BF => "BF",
            HeuristicKind::FF => "FF",
            HeuristicKind::NF => "NF",
            HeuristicKind::WF => "WF",
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseHeuristicError(pub String);

impl fmt::Display for ParseHeuristicError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown heuristic {:?} (expected BF, FF, NF or WF)", self.0)
    }
}

impl std::error::Error for ParseHeuristicError {}

impl FromStr for HeuristicKind {
    type Err = ParseHeuristicError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "BF" => Ok(HeuristicKind::BF),
            "FF" => Ok(HeuristicKind::FF),
            "NF" => Ok(HeuristicKind::NF),
            "WF" => Ok(HeuristicKind::WF),
            _ => Err(ParseHeuristicError(s.to_string())),
        }
    }
}

/// A fixed-order sequence of item weights to be packed into bins of equal
/// capacity. The order of `items` is part of the instance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Instance {
    id: String,
    capacity: u32,
    items: Vec<u32>,
}

impl Instance {
    /// Validates every weight against `[1, capacity]`. An empty item list is
    /// accepted; downstream fitness evaluation rejects it.
    pub fn new(id: impl Into<String>, capacity: u32, items: Vec<u32>) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::ZeroCapacity);
        }
        if let Some((index, &weight)) = items
            .iter()
            .enumerate()
            .find(|(_, &w)| w == 0 || w > capacity)
        {
            return Err(Error::ItemOutOfRange {
                index,
                weight,
                capacity,
            });
        }
        Ok(Self {
            id: id.into(),
            capacity,
            items,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    pub fn items(&self) -> &[u32] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.items.iter().map(|&w| u64::from(w)).sum()
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Same items in reverse arrival order.
    pub fn reversed(&self) -> Self {
        let mut items = self.items.clone();
        items.reverse();
        Self {
            id: format!("{}-rev", self.id),
            capacity: self.capacity,
            items,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_items() {
        assert_eq!(
            Instance::new("a", 10, vec![3, 11]),
            Err(Error::ItemOutOfRange {
                index: 1,
                weight: 11,
                capacity: 10
            })
        );
        assert!(Instance::new("a", 10, vec![0]).is_err());
        assert_eq!(Instance::new("a", 0, vec![]), Err(Error::ZeroCapacity));
        assert!(Instance::new("a", 10, vec![10, 1]).is_ok());
    }

    #[test]
    fn heuristic_order_and_parsing() {
        for (i, h) in HeuristicKind::ALL.iter().enumerate() {
            assert_eq!(h.index(), i);
            assert_eq!(HeuristicKind::from_index(i), Some(*h));
            assert_eq!(h.as_str().parse::<HeuristicKind>().unwrap(), *h);
        }
        assert_eq!("wf".parse::<HeuristicKind>().unwrap(), HeuristicKind::WF);
        assert!("XF".parse::<HeuristicKind>().is_err());
    }
}
