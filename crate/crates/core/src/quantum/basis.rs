use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Default cap on the number of basis states.
pub const DEFAULT_MAX_DIM: usize = 4_000_000;

/// Blockade-satisfying configurations. Bit `i` of a config is site `i`
/// (0-based); a set bit is a Rydberg excitation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedBasis {
    pub n_sites: usize,
    pub boundary: Boundary,
    pub configs: Vec<u32>,
}

/// Number of open-chain blockade strings of length n, i.e. Fibonacci(n + 2).
pub fn open_dimension(n: usize) -> u64 {
    let (mut a, mut b) = (1u64, 2u64);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    a
}

fn dimension(n: usize, boundary: Boundary) -> u64 {
    match boundary {
        Boundary::Open => open_dimension(n),
        // Lucas numbers: site 0 empty leaves an open string of n − 1 sites;
        // site 0 excited blocks both neighbours and leaves n − 3.
        Boundary::Periodic if n >= 3 => open_dimension(n - 1) + open_dimension(n - 3),
        Boundary::Periodic => 3,
    }
}

impl ConstrainedBasis {
    pub fn new(n_sites: usize, boundary: Boundary) -> Result<Self> {
        Self::with_cap(n_sites, boundary, DEFAULT_MAX_DIM)
    }

    pub fn with_cap(n_sites: usize, boundary: Boundary, max_dim: usize) -> Result<Self> {
        if !(2..=32).contains(&n_sites) {
            return Err(Error::InvalidParameter(format!("need 2 <= N <= 32, got {n_sites}")));
        }
        if dimension(n_sites, boundary) > max_dim as u64 {
            return Err(Error::TooLarge { n_sites, cap: max_dim });
        }
        let mut configs = Vec::with_capacity(dimension(n_sites, boundary) as usize);
        // Depth-first from the top bit, 0 before 1, yields ascending order.
        fn fill(pos: usize, prev_set: bool, acc: u32, out: &mut Vec<u32>) {
            if pos == 0 {
                out.push(acc);
                return;
            }
            let bit = pos - 1;
            fill(bit, false, acc, out);
            if !prev_set {
                fill(bit, true, acc | (1 << bit), out);
            }
        }
        fill(n_sites, false, 0, &mut configs);
        if boundary == Boundary::Periodic {
            let top = 1u32 << (n_sites - 1);
            configs.retain(|&c| !(c & 1 == 1 && c & top != 0));
        }
        Ok(ConstrainedBasis { n_sites, boundary, configs })
    }

    pub fn dim(&self) -> usize {
        self.configs.len()
    }

    pub fn index(&self, config: u32) -> Option<usize> {
        self.configs.binary_search(&config).ok()
    }

    /// |g r g r ...⟩ with site 0 in the ground state.
    pub fn z2_config(&self) -> u32 {
        (0..self.n_sites).filter(|i| i % 2 == 1).fold(0, |acc, i| acc | (1 << i))
    }
}
