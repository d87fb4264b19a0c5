use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};
use serde::Serialize;

use crate::error::{Error, Result};

/// Uneven split of a dataset: worker `i` gets a share proportional to
/// `p_i ~ U[a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionSpec {
    pub a: f64,
    pub b: f64,
    pub seed: u64,
    pub counts: Vec<usize>,
}

/// Draws `p_i ~ U[a, b]` and rounds `total·p_i/Σp` by largest remainder,
/// then moves samples from the largest shards so nobody ends up empty.
pub fn partition_uneven(total: usize, n: usize, a: f64, b: f64, seed: u64) -> Result<PartitionSpec> {
    if n == 0 {
        return Err(Error::Parameter("partition needs at least one worker".into()));
    }
    if total < n {
        return Err(Error::Parameter(format!("{total} samples cannot cover {n} workers")));
    }
    if !(a > 0.0) || !(b >= a) || !b.is_finite() {
        return Err(Error::Parameter(format!("need 0 < a ≤ b, got a = {a}, b = {b}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(a, b).map_err(|e| Error::Parameter(e.to_string()))?;
    let p: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
    let sum: f64 = p.iter().sum();
    let exact: Vec<f64> = p.iter().map(|pi| total as f64 * pi / sum).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (ri, rj) = (exact[i] - exact[i].floor(), exact[j] - exact[j].floor());
        rj.total_cmp(&ri).then(i.cmp(&j))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let largest = (0..n).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).expect("n ≥ 1");
        counts[largest] -= 1;
        counts[empty] += 1;
    }
    Ok(PartitionSpec { a, b, seed, counts })
}
