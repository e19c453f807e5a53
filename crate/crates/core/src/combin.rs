//! Lexicographic enumeration of k-subsets, used by the brute-force oracles.

use crate::error::{Error, Result};

/// Enumeration budget shared by every brute-force routine.
pub const ENUMERATION_LIMIT: u128 = 100_000;

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

pub(crate) fn check_budget(count: u128) -> Result<()> {
    if count > ENUMERATION_LIMIT {
        Err(Error::CombinatorialBudget {
            count,
            limit: ENUMERATION_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Calls `f` on every strictly increasing k-subset of `0..n`, in lexicographic order.
pub(crate) fn for_each_subset<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // advance the rightmost position that still has room
        let mut pos = k;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if idx[pos] < n - k + pos {
                break;
            }
            if pos == 0 {
                return;
            }
        }
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_every_subset_once() {
        for n in 0..7 {
            for k in 0..=n {
                let mut seen = Vec::new();
                for_each_subset(n, k, |s| seen.push(s.to_vec()));
                assert_eq!(seen.len() as u128, binomial(n, k), "n={n} k={k}");
                assert!(seen.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(20, 3), 1140);
        assert_eq!(binomial(5, 7), 0);
        assert!(check_budget(binomial(40, 10)).is_err());
    }
}
