//! Binomial coefficients and warping placement counts.
//!
//! `alpha(n, m, j, i)` is the number of strictly increasing maps
//! `[m] -> [n]` that send position `i` to position `j`, which factors as
//! `C(j-1, i-1) * C(n-j, m-i)`. All counts are exact `u64` with checked
//! arithmetic.

use crate::error::{Error, Result};

/// `C(n, k)`, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for t in 1..=k as u128 {
        // acc * (n - k + t) is divisible by t at every step
        acc = acc * (n as u128 - k as u128 + t) / t;
        if acc > u64::MAX as u128 {
            return Err(Error::Overflow("binomial"));
        }
    }
    Ok(acc as u64)
}

/// Pascal-triangle table of binomials up to `max_n`, with the placement
/// counts built on top of it.
#[derive(Clone, Debug)]
pub struct AlphaTable {
    max_n: usize,
    // rows[n][k] = C(n, k); None marks a u64 overflow
    rows: Vec<Vec<Option<u64>>>,
    fault: Option<(usize, usize, usize, usize)>,
}

impl AlphaTable {
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<Option<u64>>> = Vec::with_capacity(max_n + 1);
        rows.push(vec![Some(1)]);
        for n in 1..=max_n {
            let prev = &rows[n - 1];
            let mut row = Vec::with_capacity(n + 1);
            row.push(Some(1));
            for k in 1..n {
                row.push(match (prev[k - 1], prev[k]) {
                    (Some(a), Some(b)) => a.checked_add(b),
                    _ => None,
                });
            }
            row.push(Some(1));
            rows.push(row);
        }
        AlphaTable {
            max_n,
            rows,
            fault: None,
        }
    }

    /// Table whose `alpha(n, m, j, i)` entry is off by one. Only used to
    /// check that self-tests notice a corrupted table.
    pub fn with_fault(mut self, n: usize, m: usize, j: usize, i: usize) -> Self {
        self.fault = Some((n, m, j, i));
        self
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    pub fn binomial(&self, n: usize, k: usize) -> Result<u64> {
        if k > n {
            return Ok(0);
        }
        self.rows
            .get(n)
            .ok_or_else(|| {
                Error::InvalidArgument(format!("n={n} exceeds table size {}", self.max_n))
            })?[k]
            .ok_or(Error::Overflow("binomial"))
    }

    /// Number of increasing `m`-subsets of `[n]` whose `i`-th element is `j`
    /// (all indices 1-based).
    pub fn alpha(&self, n: usize, m: usize, j: usize, i: usize) -> Result<u64> {
        if !(1 <= i && i <= m && m <= n && 1 <= j && j <= n) {
            return Err(Error::InvalidArgument(format!(
                "alpha({n},{m},{j},{i}) needs 1<=i<=m<=n and 1<=j<=n"
            )));
        }
        let left = self.binomial(j - 1, i - 1)?;
        let right = self.binomial(n - j, m - i)?;
        let value = left.checked_mul(right).ok_or(Error::Overflow("alpha"))?;
        if self.fault == Some((n, m, j, i)) {
            return Ok(value + 1);
        }
        Ok(value)
    }
}

/// Checks `sum_j alpha(n, m, j, i) == C(n, m)` for every `i` in `1..=m`.
pub fn verify_alpha_identity(table: &AlphaTable, n: usize, m: usize) -> bool {
    let Ok(total) = table.binomial(n, m) else {
        return false;
    };
    (1..=m).all(|i| {
        let mut sum: u64 = 0;
        for j in 1..=n {
            match table.alpha(n, m, j, i).ok().and_then(|a| sum.checked_add(a)) {
                Some(s) => sum = s,
                None => return false,
            }
        }
        sum == total
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent oracle: Pascal's triangle in u128, row by row.
    fn pascal(n: usize) -> Vec<Vec<u128>> {
        let mut rows = vec![vec![1u128]];
        for r in 1..=n {
            let prev = &rows[r - 1];
            let mut row = vec![1u128; r + 1];
            for k in 1..r {
                row[k] = prev[k - 1] + prev[k];
            }
            rows.push(row);
        }
        rows
    }

    // Independent oracle: enumerate m-subsets of [n] as bitmasks.
    fn alpha_by_enumeration(n: usize, m: usize, j: usize, i: usize) -> u64 {
        (0u32..1 << n)
            .filter(|mask| mask.count_ones() as usize == m)
            .filter(|mask| {
                let picked: Vec<usize> = (0..n).filter(|b| mask & (1 << b) != 0).collect();
                picked[i - 1] + 1 == j
            })
            .count() as u64
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(4, 2).unwrap(), 6);
        for n in 0..70 {
            assert_eq!(binomial(n, 0).unwrap(), 1);
        }
        assert_eq!(binomial(3, 5).unwrap(), 0);
    }

    #[test]
    fn binomial_matches_pascal_oracle() {
        let oracle = pascal(60);
        assert_eq!(oracle[40][20], 137_846_528_820);
        assert_eq!(binomial(40, 20).unwrap(), 137_846_528_820);
        let table = AlphaTable::new(60);
        for (n, row) in oracle.iter().enumerate() {
            for (k, &want) in row.iter().enumerate().take(n + 1) {
                assert_eq!(binomial(n as u64, k as u64).unwrap() as u128, want);
                assert_eq!(table.binomial(n, k).unwrap() as u128, want);
            }
        }
    }

    #[test]
    fn binomial_overflow_is_an_error() {
        assert!(binomial(67, 33).is_ok());
        assert!(matches!(binomial(68, 34), Err(Error::Overflow(_))));
        let table = AlphaTable::new(70);
        assert!(matches!(table.binomial(68, 34), Err(Error::Overflow(_))));
        assert!(table.binomial(70, 2).is_ok());
    }

    #[test]
    fn alpha_examples() {
        let t = AlphaTable::new(10);
        assert_eq!(alpha_by_enumeration(4, 2, 1, 1), 3);
        assert_eq!(t.alpha(4, 2, 1, 1).unwrap(), 3);
        assert_eq!(t.alpha(4, 2, 4, 1).unwrap(), 0);
        for n in 1..=10 {
            for j in 1..=n {
                assert_eq!(t.alpha(n, n, j, j).unwrap(), 1);
            }
        }
    }

    #[test]
    fn alpha_rejects_out_of_range() {
        let t = AlphaTable::new(5);
        assert!(t.alpha(4, 5, 1, 1).is_err());
        assert!(t.alpha(4, 2, 0, 1).is_err());
        assert!(t.alpha(4, 2, 1, 3).is_err());
    }

    #[test]
    fn alpha_matches_enumeration_up_to_ten() {
        let t = AlphaTable::new(10);
        for n in 1..=10 {
            for m in 1..=n {
                for i in 1..=m {
                    for j in 1..=n {
                        assert_eq!(
                            t.alpha(n, m, j, i).unwrap(),
                            alpha_by_enumeration(n, m, j, i),
                            "alpha({n},{m},{j},{i})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn alpha_vanishes_outside_support() {
        let t = AlphaTable::new(12);
        for n in 1..=12 {
            for m in 1..=n {
                for i in 1..=m {
                    for j in 1..=n {
                        if j < i || n - j < m - i {
                            assert_eq!(t.alpha(n, m, j, i).unwrap(), 0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn identity_holds_up_to_twenty() {
        let t = AlphaTable::new(20);
        assert!(verify_alpha_identity(&t, 4, 2));
        assert!(verify_alpha_identity(&t, 1, 1));
        for n in 1..=20 {
            for m in 1..=n {
                assert!(verify_alpha_identity(&t, n, m), "n={n} m={m}");
            }
        }
    }

    #[test]
    fn identity_twenty_seven_by_direct_summation() {
        let t = AlphaTable::new(20);
        let oracle = pascal(20);
        for i in 1..=7 {
            let sum: u128 = (1..=20).map(|j| t.alpha(20, 7, j, i).unwrap() as u128).sum();
            assert_eq!(sum, oracle[20][7]);
        }
    }

    #[test]
    fn fault_breaks_identity() {
        let t = AlphaTable::new(6).with_fault(4, 2, 2, 1);
        assert!(!verify_alpha_identity(&t, 4, 2));
        assert!(verify_alpha_identity(&t, 4, 3));
    }

    proptest! {
        #[test]
        fn alpha_mirror_symmetry(n in 1usize..30, a in 0usize..1000, b in 0usize..1000, c in 0usize..1000) {
            let t = AlphaTable::new(30);
            let m = 1 + a % n;
            let j = 1 + b % n;
            let i = 1 + c % m;
            prop_assert_eq!(t.alpha(n, m, j, i).unwrap(), t.alpha(n, m, n + 1 - j, m + 1 - i).unwrap());
        }
    }
}
