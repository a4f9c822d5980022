use crate::error::{Result, SymsubError};

/// Size caps for explicitly materialized objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Largest total Hilbert-space dimension of a dense operator.
    pub max_dim: usize,
    /// Largest `n` for which S_n is enumerated element by element.
    pub max_perm_n: usize,
    /// Largest `2n` for which perfect matchings on `[2n]` are enumerated.
    pub max_matching_points: usize,
    /// Largest number of complex entries in a superoperator matrix.
    pub max_superop_entries: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_dim: 1 << 14,
            max_perm_n: 9,
            max_matching_points: 12,
            max_superop_entries: 1 << 26,
        }
    }
}

impl Limits {
    pub fn with_max_dim(max_dim: usize) -> Self {
        Limits {
            max_dim,
            ..Limits::default()
        }
    }

    /// Returns `d^n`, failing when it overflows or exceeds `max_dim`.
    pub fn power_dim(&self, d: usize, n: usize) -> Result<usize> {
        let dim = checked_pow(d, n).ok_or(SymsubError::DimensionGuard {
            what: "tensor power dimension",
            requested: u128::MAX,
            cap: self.max_dim as u128,
        })?;
        self.check_dim("tensor power dimension", dim)?;
        Ok(dim)
    }

    pub fn check_dim(&self, what: &'static str, dim: usize) -> Result<()> {
        if dim > self.max_dim {
            return Err(SymsubError::DimensionGuard {
                what,
                requested: dim as u128,
                cap: self.max_dim as u128,
            });
        }
        Ok(())
    }

    pub fn check_perm(&self, n: usize) -> Result<()> {
        if n > self.max_perm_n {
            return Err(SymsubError::DimensionGuard {
                what: "permutation enumeration size n",
                requested: n as u128,
                cap: self.max_perm_n as u128,
            });
        }
        Ok(())
    }

    pub fn check_matching(&self, n: usize) -> Result<()> {
        if 2 * n > self.max_matching_points {
            return Err(SymsubError::DimensionGuard {
                what: "matching enumeration size 2n",
                requested: 2 * n as u128,
                cap: self.max_matching_points as u128,
            });
        }
        Ok(())
    }

    pub fn check_superop(&self, in_dim: usize, out_dim: usize) -> Result<()> {
        let entries = (in_dim as u128).pow(2) * (out_dim as u128).pow(2);
        if entries > self.max_superop_entries as u128 {
            return Err(SymsubError::DimensionGuard {
                what: "superoperator entries",
                requested: entries,
                cap: self.max_superop_entries as u128,
            });
        }
        Ok(())
    }
}

pub(crate) fn checked_pow(d: usize, n: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..n {
        acc = acc.checked_mul(d)?;
    }
    Some(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_dim_guard() {
        let limits = Limits::with_max_dim(1024);
        assert_eq!(limits.power_dim(2, 10).unwrap(), 1024);
        assert!(matches!(
            limits.power_dim(2, 11),
            Err(SymsubError::DimensionGuard { .. })
        ));
        assert!(limits.power_dim(usize::MAX, 3).is_err());
        assert_eq!(limits.power_dim(7, 0).unwrap(), 1);
    }

    #[test]
    fn enumeration_caps() {
        let limits = Limits::default();
        assert!(limits.check_perm(9).is_ok());
        assert!(limits.check_perm(10).is_err());
        assert!(limits.check_matching(6).is_ok());
        assert!(limits.check_matching(7).is_err());
    }
}
