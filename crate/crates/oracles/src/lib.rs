//! Slow, obvious reference implementations for checking the real ones.
//! Nothing here shares code with the crates under test.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    FirstFit,
    BestFit,
    NextFit,
    WorstFit,
}

pub const RULES: [Rule; 4] = [Rule::BestFit, Rule::FirstFit, Rule::NextFit, Rule::WorstFit];

/// Bin fills after placing `items` one at a time with `rule`. Every scan is a
/// plain linear pass over the open bins.
pub fn pack(items: &[u32], capacity: u32, rule: Rule) -> Vec<u32> {
    let mut bins: Vec<u32> = Vec::new();
    for &w in items {
        let mut target: Option<usize> = None;
        match rule {
            Rule::NextFit => {
                if let Some(last) = bins.last() {
                    if last + w <= capacity {
                        target = Some(bins.len() - 1);
                    }
                }
            }
            Rule::FirstFit => {
                for (i, b) in bins.iter().enumerate() {
                    if b + w <= capacity {
                        target = Some(i);
                        break;
                    }
                }
            }
            Rule::BestFit => {
                let mut best_room = u32::MAX;
                for (i, b) in bins.iter().enumerate() {
                    if b + w <= capacity {
                        let room = capacity - b - w;
                        if room < best_room {
                            best_room = room;
                            target = Some(i);
                        }
                    }
                }
            }
            Rule::WorstFit => {
                let mut most_room = 0;
                let mut found = false;
                for (i, b) in bins.iter().enumerate() {
                    let room = capacity - b;
                    if room > most_room || !found {
                        most_room = room;
                        target = Some(i);
                        found = true;
                    }
                }
                if most_room < w {
                    target = None;
                }
            }
        }
        match target {
            Some(i) => bins[i] += w,
            None => bins.push(w),
        }
    }
    bins
}

pub fn fitness(fills: &[u32], capacity: u32, k: f64) -> f64 {
    let c = capacity as f64;
    fills.iter().map(|&f| (f as f64 / c).powf(k)).sum::<f64>() / fills.len() as f64
}

/// Fewest bins any offline assignment needs: tries `b = 1, 2, ...` and asks
/// whether the items can be dealt into `b` bins by exhaustive search.
pub fn optimum(items: &[u32], capacity: u32) -> u32 {
    if items.is_empty() {
        return 0;
    }
    let mut sorted = items.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    (1..=items.len() as u32)
        .find(|&b| fits(&sorted, capacity, &mut vec![0; b as usize]))
        .expect("n bins always suffice")
}

fn fits(items: &[u32], capacity: u32, bins: &mut [u32]) -> bool {
    let Some((&w, rest)) = items.split_first() else {
        return true;
    };
    for i in 0..bins.len() {
        if bins[i] + w > capacity {
            continue;
        }
        // A later bin with the same fill would give the same subtree.
        if bins[..i].contains(&bins[i]) {
            continue;
        }
        bins[i] += w;
        let ok = fits(rest, capacity, bins);
        bins[i] -= w;
        if ok {
            return true;
        }
    }
    false
}

/// Signed-rank sums and the two-sided exact p-value by listing all `2^m`
/// sign assignments of the non-zero differences. Ties take average ranks.
/// Returns `(w_plus, w_minus, p)`; `p = 1` when no difference is non-zero.
pub fn wilcoxon(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let m = d.len();
    if m == 0 {
        return (0.0, 0.0, 1.0);
    }
    let mut ranks = vec![0.0; m];
    for i in 0..m {
        let below = d.iter().filter(|e| e.abs() < d[i].abs()).count();
        let equal = d.iter().filter(|e| e.abs() == d[i].abs()).count();
        ranks[i] = below as f64 + (equal as f64 + 1.0) / 2.0;
    }
    let w_plus: f64 = (0..m).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let total: f64 = ranks.iter().sum();
    let w_minus = total - w_plus;
    let observed = w_plus.min(w_minus);
    let mut extreme = 0u64;
    for mask in 0u64..(1 << m) {
        let plus: f64 = (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if plus <= observed + 1e-9 {
            extreme += 1;
        }
    }
    let p = (2.0 * extreme as f64 / (1u64 << m) as f64).min(1.0);
    (w_plus, w_minus, p)
}

pub fn bonferroni(p: &[f64]) -> Vec<f64> {
    p.iter().map(|&v| f64::min(1.0, v * p.len() as f64)).collect()
}
