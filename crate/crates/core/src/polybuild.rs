//! Construction of the modulus-amplified, multilinear residue-indicator
//! polynomial.
//!
//! The base indicator `G_{p,r}(x, y) = 1 - (sum_k x_k y_k - r)^{p-1}` is
//! 0/1 modulo `p` on zero-one inputs; composing it with the modulus
//! amplifier `A_h` lifts the indicator to `p^h`. Both are polynomials in
//! the pair products `z_k = x_k y_k` alone, so the fully merged
//! multilinear reduct has one monomial per squarefree product
//! `prod_{k in S} x_k y_k` and the coefficient depends only on `|S|`.
//! Construction therefore expands a univariate polynomial in the inner
//! product `w = sum_k z_k` and converts the power basis to size classes
//! with Stirling numbers: `w^t = sum_j S2(t, j) j! C(w, j)`. Intermediate
//! term counts stay bounded by the degree throughout.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::arith::is_prime;
use crate::{Error, Result};

/// Largest variable count representable by the `u128` support masks.
pub const MAX_MONOMIAL_DIM: usize = 128;

/// Guard on explicit monomial materialization.
pub const MAX_MONOMIALS: usize = 1 << 22;

/// Dense univariate polynomial over arbitrary-precision integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnivariatePoly {
    coefficients: Vec<BigInt>,
}

impl UnivariatePoly {
    pub fn new(mut coefficients: Vec<BigInt>) -> UnivariatePoly {
        while coefficients.len() > 1 && coefficients.last().map_or(false, |c| c.is_zero()) {
            coefficients.pop();
        }
        if coefficients.is_empty() {
            coefficients.push(BigInt::zero());
        }
        UnivariatePoly { coefficients }
    }

    pub fn coefficients(&self) -> &[BigInt] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn evaluate(&self, z: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coefficients.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    fn mul(&self, other: &UnivariatePoly) -> UnivariatePoly {
        let mut out = vec![BigInt::zero(); self.coefficients.len() + other.coefficients.len() - 1];
        for (i, a) in self.coefficients.iter().enumerate() {
            for (j, b) in other.coefficients.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UnivariatePoly::new(out)
    }
}

/// The Beigel-Tarui modulus amplifier
/// `A_h(z) = 1 - (1 - z)^h * sum_{j=0}^{h-1} C(h+j-1, j) z^j`, of degree
/// `2h - 1`. It maps residues 0 and 1 modulo `m` to residues 0 and 1
/// modulo `m^h`.
pub fn amplifier(h: u32) -> UnivariatePoly {
    assert!(h >= 1);
    let one_minus_z = UnivariatePoly::new(vec![BigInt::one(), -BigInt::one()]);
    let mut power = UnivariatePoly::new(vec![BigInt::one()]);
    for _ in 0..h {
        power = power.mul(&one_minus_z);
    }
    // sum_{j=0}^{h-1} C(h+j-1, j) z^j
    let mut binom = BigInt::one();
    let mut series = Vec::with_capacity(h as usize);
    for j in 0..h as u64 {
        if j > 0 {
            binom = binom * BigInt::from(h as u64 + j - 1) / BigInt::from(j);
        }
        series.push(binom.clone());
    }
    let product = power.mul(&UnivariatePoly::new(series));
    let mut coefficients = product.coefficients().to_vec();
    for c in coefficients.iter_mut() {
        *c = -std::mem::take(c);
    }
    coefficients[0] += BigInt::one();
    UnivariatePoly::new(coefficients)
}

#[inline]
fn mod_add(a: u64, b: u64, m: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % m as u128) as u64
}

#[inline]
fn mod_mul(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn poly_mul_mod(a: &[u64], b: &[u64], m: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = mod_add(out[i + j], mod_mul(x, y, m), m);
        }
    }
    out
}

fn bigint_mod_u64(v: &BigInt, m: u64) -> u64 {
    let r = v % BigInt::from(m);
    let r = if r.is_negative() { r + BigInt::from(m) } else { r };
    let (_, digits) = r.to_u64_digits();
    digits.first().copied().unwrap_or(0)
}

/// Amplified residue indicator in compact univariate form, plus its
/// size-class coefficients. This is the working representation the
/// counting engine consumes; the explicit monomial list is materialized
/// from it on demand.
#[derive(Debug, Clone)]
pub struct AmplifiedIndicator {
    p: u64,
    r: u64,
    h: u32,
    modulus: u64,
    dim: usize,
    /// Coefficients of the composed polynomial in `w`, reduced mod `p^h`.
    power_coeffs: Vec<u64>,
    /// `c_j` for `j = 0, ..., min(deg, dim)`: the shared coefficient of
    /// every size-`j` squarefree monomial in the multilinear reduct.
    class_coeffs: Vec<u64>,
}

impl AmplifiedIndicator {
    pub fn new(p: u64, r: u64, h: u32, dim: usize) -> Result<AmplifiedIndicator> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if r >= p {
            return Err(Error::invalid(format!("residue {r} out of range for p={p}")));
        }
        if h < 1 {
            return Err(Error::invalid("amplification order must be >= 1"));
        }
        let modulus = checked_prime_power(p, h)?;

        // G(w) = 1 - (w - r)^{p-1} mod p^h.
        let base = vec![(modulus - r % modulus) % modulus, 1 % modulus];
        let mut power = vec![1 % modulus];
        for _ in 0..p - 1 {
            power = poly_mul_mod(&power, &base, modulus);
        }
        let mut g = vec![0u64; power.len()];
        for (i, &c) in power.iter().enumerate() {
            g[i] = (modulus - c) % modulus;
        }
        g[0] = mod_add(g[0], 1 % modulus, modulus);

        // A_h(G(w)) by Horner over polynomials in w.
        let amp: Vec<u64> = amplifier(h)
            .coefficients()
            .iter()
            .map(|c| bigint_mod_u64(c, modulus))
            .collect();
        let mut composed = vec![0u64];
        for &a in amp.iter().rev() {
            composed = poly_mul_mod(&composed, &g, modulus);
            composed[0] = mod_add(composed[0], a, modulus);
        }
        while composed.len() > 1 && *composed.last().unwrap() == 0 {
            composed.pop();
        }

        let class_coeffs = power_to_size_classes(&composed, dim, modulus);
        Ok(AmplifiedIndicator {
            p,
            r,
            h,
            modulus,
            dim,
            power_coeffs: composed,
            class_coeffs,
        })
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn residue(&self) -> u64 {
        self.r
    }

    pub fn order(&self) -> u32 {
        self.h
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_coeffs(&self) -> &[u64] {
        &self.class_coeffs
    }

    /// Value of the indicator on a pair whose inner product is `w`,
    /// evaluated through the univariate form.
    pub fn eval_at_inner_product(&self, w: u64) -> u64 {
        let mut acc = 0u64;
        for &c in self.power_coeffs.iter().rev() {
            acc = mod_add(mod_mul(acc, w % self.modulus, self.modulus), c, self.modulus);
        }
        acc
    }

    /// Number of monomials the explicit multilinear representation has,
    /// or `None` on overflow past the materialization guard.
    pub fn monomial_count(&self) -> Option<usize> {
        let mut total = 0usize;
        for (j, &c) in self.class_coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            total = total.checked_add(binomial_capped(self.dim, j, MAX_MONOMIALS + 1)?)?;
            if total > MAX_MONOMIALS {
                return None;
            }
        }
        Some(total)
    }

    /// Materializes the fully merged monomial list.
    pub fn to_sparse(&self) -> Result<SparseMultilinearPoly> {
        if self.dim > MAX_MONOMIAL_DIM {
            return Err(Error::DimensionTooLarge(self.dim, MAX_MONOMIAL_DIM));
        }
        let count = self.monomial_count().ok_or_else(|| {
            Error::invalid(format!(
                "monomial list for p={} r={} h={} d={} exceeds the materialization guard",
                self.p, self.r, self.h, self.dim
            ))
        })?;
        let mut monomials = Vec::with_capacity(count);
        for (j, &c) in self.class_coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for mask in subsets_of_size(self.dim, j) {
                monomials.push(Monomial {
                    coefficient: c,
                    xmask: mask,
                    ymask: mask,
                });
            }
        }
        monomials.sort_by_key(|m| (m.xmask, m.ymask));
        Ok(SparseMultilinearPoly {
            p: self.p,
            h: self.h,
            modulus: self.modulus,
            dim: self.dim,
            monomials,
        })
    }
}

fn checked_prime_power(p: u64, h: u32) -> Result<u64> {
    let mut m: u64 = 1;
    for _ in 0..h {
        m = m
            .checked_mul(p)
            .filter(|&m| m < (1 << 63))
            .ok_or(Error::ModulusTooLarge {
                base: p,
                exponent: h,
            })?;
    }
    Ok(m)
}

/// Converts power-basis coefficients `a_t` of a polynomial in `w` to the
/// shared size-class coefficients of its multilinear reduct:
/// `c_j = sum_t a_t S2(t, j) j!` with everything mod `m`.
fn power_to_size_classes(power_coeffs: &[u64], dim: usize, m: u64) -> Vec<u64> {
    let deg = power_coeffs.len() - 1;
    let top = deg.min(dim);
    // stirling[j] holds S2(t, j) for the current t.
    let mut stirling = vec![0u64; top + 1];
    let mut out = vec![0u64; top + 1];
    out[0] = power_coeffs[0] % m;
    let mut factorial = vec![1u64 % m; top + 1];
    for j in 1..=top {
        factorial[j] = mod_mul(factorial[j - 1], j as u64 % m, m);
    }
    for t in 1..=deg {
        // S2(t, j) = j S2(t-1, j) + S2(t-1, j-1), downward update in j.
        for j in (1..=top.min(t)).rev() {
            stirling[j] = mod_add(
                mod_mul(j as u64 % m, stirling[j], m),
                if j == 1 {
                    u64::from(t == 1) % m
                } else {
                    stirling[j - 1]
                },
                m,
            );
        }
        if t == 1 {
            stirling[1] = 1 % m;
        }
        let a = power_coeffs[t] % m;
        if a == 0 {
            continue;
        }
        for j in 1..=top.min(t) {
            out[j] = mod_add(out[j], mod_mul(a, mod_mul(stirling[j], factorial[j], m), m), m);
        }
    }
    out
}

fn binomial_capped(n: usize, k: usize, cap: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)?;
        acc /= (i + 1) as u128;
        if acc > cap as u128 {
            return None;
        }
    }
    Some(acc as usize)
}

/// Size-`k` subsets of `{0, ..., n-1}` as masks in ascending order
/// (Gosper's hack).
fn subsets_of_size(n: usize, k: usize) -> impl Iterator<Item = u128> {
    let limit: u128 = if n == 128 { u128::MAX } else { (1u128 << n) - 1 };
    let mut current: Option<u128> = if k == 0 {
        Some(0)
    } else if k <= n {
        Some((1u128 << k) - 1)
    } else {
        None
    };
    std::iter::from_fn(move || {
        let mask = current?;
        if k == 0 {
            current = None;
            return Some(0);
        }
        current = {
            let c = mask & mask.wrapping_neg();
            let r = mask + c;
            if r > limit || r == 0 {
                None
            } else {
                Some((((r ^ mask) >> 2) / c) | r)
            }
        };
        Some(mask)
    })
}

/// One split monomial: coefficient times the squarefree `x`-variables in
/// `xmask` and `y`-variables in `ymask`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Monomial {
    pub coefficient: u64,
    pub xmask: u128,
    pub ymask: u128,
}

/// Fully merged multilinear polynomial with coefficients in `[0, p^h)`,
/// keyed by `(xmask, ymask)` in canonical ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMultilinearPoly {
    p: u64,
    h: u32,
    modulus: u64,
    dim: usize,
    monomials: Vec<Monomial>,
}

impl SparseMultilinearPoly {
    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn order(&self) -> u32 {
        self.h
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Direct evaluation on support masks of two zero-one vectors.
    pub fn evaluate(&self, a: u128, b: u128) -> u64 {
        let mut acc = 0u64;
        for m in &self.monomials {
            if m.xmask & !a == 0 && m.ymask & !b == 0 {
                acc = mod_add(acc, m.coefficient, self.modulus);
            }
        }
        acc
    }

    /// One line per monomial: `coeff xmask-bits ymask-bits`.
    pub fn dump(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        for m in &self.monomials {
            let fmt_mask = |mask: u128| -> String {
                (0..self.dim)
                    .map(|i| if mask >> i & 1 == 1 { '1' } else { '0' })
                    .collect()
            };
            writeln!(out, "{} {} {}", m.coefficient, fmt_mask(m.xmask), fmt_mask(m.ymask))?;
        }
        Ok(())
    }
}

/// Builds the explicit monomial list of the amplified residue indicator
/// for `(p, r, h)` over `d` paired variables.
pub fn build_amplified_indicator(
    p: u64,
    r: u64,
    h: u32,
    d: usize,
) -> Result<SparseMultilinearPoly> {
    if d < 1 {
        return Err(Error::invalid("dimension must be >= 1"));
    }
    AmplifiedIndicator::new(p, r, h, d)?.to_sparse()
}
