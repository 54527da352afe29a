//! Evaluation budget shared by one logical operation.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::Error;

pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Counts model solves. Exceeding the limit is an error, never a silent cut-off.
#[derive(Debug)]
pub struct Budget {
    limit: u64,
    used: AtomicU64,
}

impl Budget {
    pub fn new(limit: u64) -> Budget {
        Budget { limit, used: AtomicU64::new(0) }
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn used(&self) -> u64 {
        self.used.load(Ordering::Relaxed)
    }

    /// Starts counting again from zero.
    pub fn reset(&self) {
        self.used.store(0, Ordering::Relaxed);
    }

    #[inline]
    pub fn charge(&self, n: u64) -> Result<(), Error> {
        let before = self.used.fetch_add(n, Ordering::Relaxed);
        if before.saturating_add(n) > self.limit {
            return Err(Error::BudgetExceeded { limit: self.limit });
        }
        Ok(())
    }
}

impl Default for Budget {
    fn default() -> Budget {
        Budget::new(DEFAULT_BUDGET)
    }
}

/// Mixed-radix counter; the last digit varies fastest.
#[derive(Debug, Clone)]
pub struct Odometer {
    radix: Vec<u32>,
    digits: Vec<u32>,
    started: bool,
    done: bool,
}

impl Odometer {
    pub fn new(radix: Vec<u32>) -> Odometer {
        let done = radix.iter().any(|&r| r == 0);
        let digits = vec![0; radix.len()];
        Odometer { radix, digits, started: false, done }
    }

    /// Advances and returns the next digit vector, starting from all zeros.
    pub fn next(&mut self) -> Option<&[u32]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.digits);
        }
        for k in (0..self.digits.len()).rev() {
            self.digits[k] += 1;
            if self.digits[k] < self.radix[k] {
                return Some(&self.digits);
            }
            self.digits[k] = 0;
        }
        self.done = true;
        None
    }

    pub fn total(&self) -> u128 {
        self.radix.iter().fold(1u128, |a, &r| a.saturating_mul(r as u128))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn odometer_is_lexicographic() {
        let mut o = Odometer::new(vec![2, 3]);
        let mut seen = Vec::new();
        while let Some(d) = o.next() {
            seen.push(d.to_vec());
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(seen[1], vec![0, 1]);
        assert_eq!(seen[3], vec![1, 0]);
    }

    #[test]
    fn empty_odometer_yields_once() {
        let mut o = Odometer::new(vec![]);
        assert!(o.next().is_some());
        assert!(o.next().is_none());
    }

    #[test]
    fn budget_trips() {
        let b = Budget::new(3);
        assert!(b.charge(3).is_ok());
        assert_eq!(b.charge(1), Err(Error::BudgetExceeded { limit: 3 }));
    }
}
