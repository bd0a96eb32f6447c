//! Online packing heuristics, bin-count bounds and solution quality.

use std::cmp::Reverse;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{HeuristicKind, Instance};

/// Default exponent for Falkenauer's fitness.
pub const DEFAULT_K: f64 = 2.0;

/// Default item limit for [`optimal_bins_exact`].
pub const DEFAULT_EXACT_LIMIT: usize = 15;

/// Bin fills produced by one heuristic, in bin-opening order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackingResult {
    pub heuristic: HeuristicKind,
    pub fills: Vec<u32>,
}

impl PackingResult {
    pub fn bins_used(&self) -> u32 {
        self.fills.len() as u32
    }
}

/// Packs `instance` in arrival order with the given rule.
///
/// FF, BF and WF consider every open bin with residual space at least the item
/// weight; BF and WF break ties towards the earliest-opened bin. NF only ever
/// looks at the most recently opened bin and abandons it on the first misfit.
pub fn pack(instance: &Instance, heuristic: HeuristicKind) -> PackingResult {
    let capacity = instance.capacity();
    let items = instance.items();
    let fills = match heuristic {
        HeuristicKind::NF => next_fit(capacity, items),
        HeuristicKind::FF => first_fit(capacity, items),
        HeuristicKind::BF => best_fit(capacity, items),
        HeuristicKind::WF => worst_fit(capacity, items),
    };
    PackingResult { heuristic, fills }
}

fn next_fit(capacity: u32, items: &[u32]) -> Vec<u32> {
    let mut fills: Vec<u32> = Vec::new();
    for &w in items {
        match fills.last_mut() {
            Some(fill) if capacity - *fill >= w => *fill += w,
            _ => fills.push(w),
        }
    }
    fills
}

/// Max segment tree over residual capacities; unopened slots hold 0 and are
/// therefore never feasible for a positive item.
struct ResidualTree {
    size: usize,
    tree: Vec<u32>,
}

impl ResidualTree {
    fn new(slots: usize) -> Self {
        let size = slots.max(1).next_power_of_two();
        Self {
            size,
            tree: vec![0; 2 * size],
        }
    }

    fn set(&mut self, slot: usize, value: u32) {
        let mut i = slot + self.size;
        self.tree[i] = value;
        while i > 1 {
            i /= 2;
            self.tree[i] = self.tree[2 * i].max(self.tree[2 * i + 1]);
        }
    }

    /// Leftmost slot whose residual is at least `weight`.
    fn first_at_least(&self, weight: u32) -> Option<usize> {
        if self.tree[1] < weight {
            return None;
        }
        let mut i = 1;
        while i < self.size {
            i = if self.tree[2 * i] >= weight { 2 * i } else { 2 * i + 1 };
        }
        Some(i - self.size)
    }
}

fn first_fit(capacity: u32, items: &[u32]) -> Vec<u32> {
    let mut fills: Vec<u32> = Vec::new();
    let mut tree = ResidualTree::new(items.len());
    for &w in items {
        let slot = match tree.first_at_least(w) {
            Some(slot) => {
                fills[slot] += w;
                slot
            }
            None => {
                fills.push(w);
                fills.len() - 1
            }
        };
        tree.set(slot, capacity - fills[slot]);
    }
    fills
}

fn best_fit(capacity: u32, items: &[u32]) -> Vec<u32> {
    let mut fills: Vec<u32> = Vec::new();
    // (residual, bin index): the first entry at or above (w, 0) is the
    // tightest feasible bin, earliest-opened among equals.
    let mut open: BTreeSet<(u32, usize)> = BTreeSet::new();
    for &w in items {
        let found = open.range((w, 0)..).next().copied();
        let slot = match found {
            Some(key) => {
                open.remove(&key);
                fills[key.1] += w;
                key.1
            }
            None => {
                fills.push(w);
                fills.len() - 1
            }
        };
        open.insert((capacity - fills[slot], slot));
    }
    fills
}

fn worst_fit(capacity: u32, items: &[u32]) -> Vec<u32> {
    let mut fills: Vec<u32> = Vec::new();
    // Largest key = most residual space, then smallest index.
    let mut open: BTreeSet<(u32, Reverse<usize>)> = BTreeSet::new();
    for &w in items {
        let found = open.last().copied().filter(|&(residual, _)| residual >= w);
        let slot = match found {
            Some(key) => {
                open.remove(&key);
                fills[key.1 .0] += w;
                key.1 .0
            }
            None => {
                fills.push(w);
                fills.len() - 1
            }
        };
        open.insert((capacity - fills[slot], Reverse(slot)));
    }
    fills
}

/// `ceil(total weight / capacity)`; 0 for an empty instance.
pub fn lower_bound(instance: &Instance) -> u32 {
    let capacity = u64::from(instance.capacity());
    instance.total_weight().div_ceil(capacity) as u32
}

/// Trivial upper bound: one bin per item.
pub fn upper_bound(instance: &Instance) -> u32 {
    instance.len() as u32
}

/// Mean of `(fill / capacity)^k` over the used bins.
pub fn falkenauer_fitness(result: &PackingResult, capacity: u32, k: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidExponent(k));
    }
    if result.fills.is_empty() {
        return Err(Error::EmptyInstance);
    }
    if capacity == 0 {
        return Err(Error::ZeroCapacity);
    }
    let c = f64::from(capacity);
    let sum: f64 = if k == 2.0 {
        // Exact integer squares; only the final division rounds.
        let squares: u64 = result.fills.iter().map(|&f| u64::from(f) * u64::from(f)).sum();
        squares as f64 / (c * c)
    } else {
        result.fills.iter().map(|&f| (f64::from(f) / c).powf(k)).sum()
    };
    Ok(sum / result.fills.len() as f64)
}

/// `(bins_used - lower) / lower`.
pub fn normalized_excess_bins(bins_used: u32, lower: u32) -> Result<f64> {
    if lower == 0 {
        return Err(Error::ZeroLowerBound);
    }
    if bins_used < lower {
        return Err(Error::BelowLowerBound { bins_used, lower });
    }
    Ok(f64::from(bins_used - lower) / f64::from(lower))
}

/// Falkenauer fitness of each heuristic on one instance, indexed in
/// [`HeuristicKind::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceVector {
    pub k: f64,
    pub fitness: [f64; 4],
}

impl PerformanceVector {
    pub fn get(&self, heuristic: HeuristicKind) -> f64 {
        self.fitness[heuristic.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (HeuristicKind, f64)> + '_ {
        HeuristicKind::ALL.iter().map(move |&h| (h, self.get(h)))
    }

    /// Highest fitness among `candidates`, ties resolved in canonical order.
    pub fn best_of(&self, candidates: &[HeuristicKind]) -> Option<(HeuristicKind, f64)> {
        let mut best: Option<(HeuristicKind, f64)> = None;
        for &h in HeuristicKind::ALL.iter().filter(|h| candidates.contains(h)) {
            let f = self.get(h);
            if best.is_none_or(|(_, bf)| f > bf) {
                best = Some((h, f));
            }
        }
        best
    }
}

pub fn evaluate_all(instance: &Instance, k: f64) -> Result<PerformanceVector> {
    let mut fitness = [0.0; 4];
    for h in HeuristicKind::ALL {
        fitness[h.index()] = falkenauer_fitness(&pack(instance, h), instance.capacity(), k)?;
    }
    Ok(PerformanceVector { k, fitness })
}

/// Bins used by every heuristic, in canonical order.
pub fn bins_all(instance: &Instance) -> [u32; 4] {
    HeuristicKind::ALL.map(|h| pack(instance, h).bins_used())
}

/// Minimum number of bins over all (offline) assignments, by branch and bound.
///
/// Items are placed largest first; a bin is only tried once per distinct fill
/// level, and a branch is cut as soon as it cannot beat the incumbent.
pub fn optimal_bins_exact(instance: &Instance, limit: usize) -> Result<u32> {
    let n = instance.len();
    if n > limit {
        return Err(Error::TooLargeForExactSearch { n, limit });
    }
    if n == 0 {
        return Ok(0);
    }
    let capacity = instance.capacity();
    let mut items = instance.items().to_vec();
    items.sort_unstable_by(|a, b| b.cmp(a));

    // First-fit decreasing gives the initial incumbent.
    let ffd = Instance::new("ffd", capacity, items.clone())?;
    let mut best = pack(&ffd, HeuristicKind::FF).bins_used();
    let lower = lower_bound(instance);
    if best == lower {
        return Ok(best);
    }

    // suffix[i] = total weight of items[i..]
    let mut suffix = vec![0u64; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + u64::from(items[i]);
    }

    struct Search<'a> {
        items: &'a [u32],
        suffix: &'a [u64],
        capacity: u32,
        lower: u32,
        fills: Vec<u32>,
        best: u32,
    }

    impl Search<'_> {
        fn run(&mut self, i: usize) {
            if self.best == self.lower {
                return;
            }
            if i == self.items.len() {
                self.best = self.best.min(self.fills.len() as u32);
                return;
            }
            let open = self.fills.len() as u64;
            let free: u64 = self
                .fills
                .iter()
                .map(|&f| u64::from(self.capacity - f))
                .sum();
            let overflow = self.suffix[i].saturating_sub(free);
            let needed = open + overflow.div_ceil(u64::from(self.capacity));
            if needed >= u64::from(self.best) {
                return;
            }
            let w = self.items[i];
            let mut tried: Vec<u32> = Vec::new();
            for b in 0..self.fills.len() {
                let fill = self.fills[b];
                if self.capacity - fill >= w && !tried.contains(&fill) {
                    tried.push(fill);
                    self.fills[b] += w;
                    self.run(i + 1);
                    self.fills[b] -= w;
                }
            }
            if (self.fills.len() as u32) + 1 < self.best {
                self.fills.push(w);
                self.run(i + 1);
                self.fills.pop();
            }
        }
    }

    let mut search = Search {
        items: &items,
        suffix: &suffix,
        capacity,
        lower,
        fills: Vec::with_capacity(n),
        best,
    };
    search.run(0);
    best = search.best;
    Ok(best)
}
