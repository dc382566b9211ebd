//! Exact integer arithmetic behind order finding: modular exponentiation,
//! multiplicative order, register sizing and continued-fraction recovery of
//! the order from a measured outcome.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest work register the crate will size (`q = 2^L` must fit in a `u64`).
pub const MAX_WORK_QUBITS: u32 = 62;

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `base^exp mod modulus` by square-and-multiply with 128-bit intermediates.
pub fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> Result<u64> {
    if modulus < 2 {
        return Err(Error::ModulusTooSmall(modulus));
    }
    let m = u128::from(modulus);
    let mut b = u128::from(base) % m;
    let mut acc = 1u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    Ok(acc as u64)
}

/// Least `r >= 1` with `a^r mod n = 1`, found by direct iteration.
pub fn multiplicative_order(a: u64, n: u64) -> Result<u64> {
    if n < 2 {
        return Err(Error::ModulusTooSmall(n));
    }
    if gcd(a % n, n) != 1 {
        return Err(Error::NotCoprime { a, n });
    }
    let m = u128::from(n);
    let a = u128::from(a) % m;
    let mut x = a;
    let mut r = 1u64;
    while x != 1 {
        x = x * a % m;
        r += 1;
    }
    Ok(r)
}

/// Bits needed to hold every residue `0..n`; equals the `L'` with
/// `2^(L'-1) < n < 2^L'` whenever `n` is not a power of two.
pub fn aux_register_size(n: u64) -> u32 {
    (64 - (n.saturating_sub(1)).leading_zeros()).max(1)
}

/// Canonical register sizes `(L, L')`: the smallest `L` with `N^2 < 2^L`
/// (which then also satisfies `2^L < 2 N^2`) and the unique `L'` with
/// `2^(L'-1) < N < 2^L'`.
pub fn default_register_sizes(n: u64) -> Result<(u32, u32)> {
    if n < 3 {
        return Err(Error::CompositeTooSmall(n));
    }
    if n.is_power_of_two() {
        return Err(Error::PowerOfTwo(n));
    }
    let n_sq = u128::from(n) * u128::from(n);
    let l = 128 - n_sq.leading_zeros();
    if l > MAX_WORK_QUBITS {
        return Err(Error::RegisterSize(l));
    }
    debug_assert!(1u128 << l > n_sq && 1u128 << l < 2 * n_sq);
    Ok((l, aux_register_size(n)))
}

/// Denominators of the convergents of `k/q` that do not exceed `n`, in
/// increasing order without repeats. Empty for `k = 0`.
pub fn continued_fraction_order_candidates(k: u64, q: u64, n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    if k == 0 || q == 0 {
        return out;
    }
    let (mut num, mut den) = (u128::from(k), u128::from(q));
    let (mut d_prev2, mut d_prev1) = (1u128, 0u128);
    while den != 0 {
        let term = num / den;
        (num, den) = (den, num % den);
        let d = term * d_prev1 + d_prev2;
        if d > u128::from(n) {
            break;
        }
        if out.last() != Some(&(d as u64)) {
            out.push(d as u64);
        }
        (d_prev2, d_prev1) = (d_prev1, d);
    }
    out
}

/// Nontrivial factors of `n` from an even order via `gcd(a^(r/2) ± 1, n)`.
pub fn factors_from_order(n: u64, a: u64, r: u64) -> Option<(u64, u64)> {
    if !r.is_multiple_of(2) || n < 2 {
        return None;
    }
    let half = mod_pow(a, r / 2, n).ok()?;
    if half == n - 1 {
        return None;
    }
    [gcd(half + 1, n), gcd(half + n - 1, n)].into_iter().find(|&f| f > 1 && f < n).map(|f| (f.min(n / f), f.max(n / f)))
}

/// An order-finding problem `(N, a)` together with its register sizes and
/// the order `r` of `a` modulo `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactoringInstance {
    n: u64,
    a: u64,
    l: u32,
    l_aux: u32,
    q: u64,
    r: u64,
}

impl FactoringInstance {
    /// Builds an instance with an explicit work register size `l`. The
    /// auxiliary register gets [`aux_register_size`] qubits, which also covers
    /// `N = 4` where the strict sizing inequality has no solution.
    pub fn new(n: u64, a: u64, l: u32) -> Result<Self> {
        if n < 3 {
            return Err(Error::CompositeTooSmall(n));
        }
        if a <= 1 || a >= n {
            return Err(Error::BaseOutOfRange { a, n });
        }
        if l == 0 || l > MAX_WORK_QUBITS {
            return Err(Error::RegisterSize(l));
        }
        let r = multiplicative_order(a, n)?;
        Ok(Self { n, a, l, l_aux: aux_register_size(n), q: 1u64 << l, r })
    }

    /// Builds an instance using [`default_register_sizes`].
    pub fn with_default_sizes(n: u64, a: u64) -> Result<Self> {
        let (l, _) = default_register_sizes(n)?;
        Self::new(n, a, l)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn a(&self) -> u64 {
        self.a
    }

    /// Work register size `L`.
    pub fn l(&self) -> u32 {
        self.l
    }

    /// Auxiliary register size `L'`.
    pub fn l_aux(&self) -> u32 {
        self.l_aux
    }

    /// Work register dimension `q = 2^L`.
    pub fn q(&self) -> u64 {
        self.q
    }

    /// Order of `a` modulo `N`.
    pub fn r(&self) -> u64 {
        self.r
    }

    /// `a^s mod N`, the auxiliary value observed for residue `s`.
    pub fn aux_value(&self, s: u64) -> u64 {
        mod_pow(self.a, s, self.n).expect("N >= 3")
    }

    /// Number of work states `j = l r + s` in `[0, q)`: `w_s + 1` with
    /// `w_s = floor((q - s - 1) / r)`, or zero when `s >= q`.
    pub fn support_size(&self, s: u64) -> u64 {
        if s >= self.q {
            0
        } else {
            (self.q - s - 1) / self.r + 1
        }
    }

    /// Born probability `(w_s + 1) / q` of observing residue `s`.
    pub fn residue_probability(&self, s: u64) -> f64 {
        self.support_size(s) as f64 / self.q as f64
    }

    /// Residues `s` in `[0, r)` with non-zero probability.
    pub fn supported_residues(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.r).filter(|&s| self.support_size(s) > 0)
    }
}
