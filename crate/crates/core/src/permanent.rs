//! Zero-one matrix permanents: a Ryser baseline, assembly over the
//! integers by the Chinese remainder theorem, and two reductions that
//! recover the permanent modulo a prime from pair counts of derived
//! vector families — one through the full inner-product histogram via
//! discrete logarithms, one through orthogonal-pair counts of grouped
//! residue encodings.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};

use crate::arith;
use crate::engine::{brute_histogram, count_by_inner_product, EngineConfig, Histogram, VectorSet};
use crate::par;
use crate::{Error, Result};

/// Largest side for which the `2^n`-term Ryser sum is allowed to run.
const MAX_RYSER_SIDE: usize = 26;

/// Square matrix with entries in {0,1}, rows stored as bitmasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroOneMatrix {
    n: usize,
    rows: Vec<u64>,
}

impl ZeroOneMatrix {
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<ZeroOneMatrix> {
        let n = rows.len();
        if n > 63 {
            return Err(Error::DimensionTooLarge(n, 63));
        }
        let mut masks = Vec::with_capacity(n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch(row.len(), n));
            }
            let mut mask = 0u64;
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => mask |= 1 << j,
                    _ => return Err(Error::invalid("matrix entries must be 0 or 1")),
                }
            }
            masks.push(mask);
        }
        Ok(ZeroOneMatrix { n, rows: masks })
    }

    pub fn identity(n: usize) -> ZeroOneMatrix {
        ZeroOneMatrix {
            n,
            rows: (0..n).map(|i| 1 << i).collect(),
        }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> u64 {
        self.rows[i] >> j & 1
    }

    /// Sum of row `i` over the columns in `mask`.
    #[inline]
    fn masked_row_sum(&self, i: usize, mask: u64) -> u32 {
        (self.rows[i] & mask).count_ones()
    }

    /// The permanent is invariant under appending a row and column that
    /// meet only in a diagonal 1; the reductions need an even side of at
    /// least 4.
    fn padded_even(&self, minimum: usize) -> ZeroOneMatrix {
        let mut n = self.n.max(minimum);
        if n % 2 == 1 {
            n += 1;
        }
        let mut rows = self.rows.clone();
        for i in self.n..n {
            rows.push(1 << i);
        }
        ZeroOneMatrix { n, rows }
    }
}

/// Inclusion–exclusion over column subsets: the classical exact baseline.
pub fn ryser(m: &ZeroOneMatrix) -> Result<BigUint> {
    let n = m.n;
    if n > MAX_RYSER_SIDE {
        return Err(Error::DimensionTooLarge(n, MAX_RYSER_SIDE));
    }
    if n == 0 {
        return Ok(BigUint::one());
    }
    let mut total = BigInt::zero();
    let mut chunk = 0i128;
    let mut pending = 0u32;
    for s in 1u64..1 << n {
        let sign = if s.count_ones() % 2 == 0 { 1i128 } else { -1 };
        let mut prod = 1i128;
        for i in 0..n {
            let rs = m.masked_row_sum(i, s) as i128;
            if rs == 0 {
                prod = 0;
                break;
            }
            prod *= rs;
        }
        chunk += sign * prod;
        pending += 1;
        if pending == 16 {
            total += chunk;
            chunk = 0;
            pending = 0;
        }
    }
    total += chunk;
    if n % 2 == 1 {
        total = -total;
    }
    debug_assert!(!total.is_negative());
    Ok(total.magnitude().clone())
}

/// Minimal run of consecutive primes whose product exceeds `n!`.
pub fn crt_primes(n: usize) -> Vec<u64> {
    let factorial: BigUint = (1..=n as u64).product();
    let mut primes = Vec::new();
    let mut product = BigUint::one();
    let mut p = 1u64;
    while product <= factorial {
        p = arith::next_prime(p);
        primes.push(p);
        product *= p;
    }
    primes
}

/// Smallest generator of the multiplicative group modulo `p`.
pub fn primitive_root(p: u64) -> Result<u64> {
    if !arith::is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if p == 2 {
        return Ok(1);
    }
    let factors = arith::distinct_prime_factors(p - 1);
    for g in 2..p {
        if factors.iter().all(|&q| arith::mod_pow(g, (p - 1) / q, p) != 1) {
            return Ok(g);
        }
    }
    unreachable!("every prime has a primitive root");
}

/// A prime together with its primitive root and full discrete-log table.
#[derive(Debug, Clone)]
pub struct PrimeContext {
    pub p: u64,
    pub root: u64,
    dlog: Vec<u64>,
}

impl PrimeContext {
    pub fn new(p: u64) -> Result<PrimeContext> {
        let root = primitive_root(p)?;
        let mut dlog = vec![0u64; p as usize];
        let mut power = 1u64;
        for e in 0..p - 1 {
            dlog[power as usize] = e;
            power = arith::mod_mul(power, root, p);
        }
        Ok(PrimeContext { p, root, dlog })
    }

    /// Exponent `e` with `root^e ≡ a (mod p)`; `a` must be nonzero mod p.
    #[inline]
    pub fn dlog(&self, a: u64) -> u64 {
        debug_assert!(a % self.p != 0);
        self.dlog[(a % self.p) as usize]
    }
}

/// How a reduction counts pairs of its derived vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairCounter {
    #[default]
    Brute,
    Engine,
}

fn histogram(a: &VectorSet, b: &VectorSet, counter: PairCounter) -> Result<Histogram> {
    match counter {
        PairCounter::Brute => brute_histogram(a, b),
        PairCounter::Engine => count_by_inner_product(a, b, &EngineConfig::default()),
    }
}

/// Subsets of one column half with prescribed parity, as masks over the
/// half's local bits, in increasing mask order. Each family has size
/// `2^{half-1}` for a nonempty half.
fn parity_subsets(half: usize, sigma: i32) -> Vec<u64> {
    (0..1u64 << half)
        .filter(|s| {
            let par = if s.count_ones() % 2 == 0 { 1 } else { -1 };
            par == sigma
        })
        .collect()
}

fn check_reduction_side(n: usize) -> Result<()> {
    if n < 4 || n % 2 == 1 {
        return Err(Error::invalid(format!(
            "reduction needs an even side of at least 4, got {n} (pad first)"
        )));
    }
    Ok(())
}

/// Dimension of the inner-product instance: one coordinate block per
/// (row, left residue, right residue), of length `n·p` when the residues
/// cancel and `dlog(ℓ+r)` otherwise.
pub fn ip_instance_dimension(n: usize, ctx: &PrimeContext) -> usize {
    let p = ctx.p as usize;
    n * n * p * p + n * p * (p - 1) * (p - 2) / 2
}

/// Derived vector families for one sign pair: the left vectors mark the
/// residues of the `A`-side row sums, the right vectors those of the
/// `B`-side, with block lengths chosen so each pair's inner product is the
/// sum of discrete logs of the combined row sums — or at least `n·p`
/// whenever some combined row sum vanishes mod p.
pub fn build_ip_instance(
    m: &ZeroOneMatrix,
    ctx: &PrimeContext,
    sigma_l: i32,
    sigma_r: i32,
) -> Result<(VectorSet, VectorSet)> {
    let n = m.n;
    check_reduction_side(n)?;
    let p = ctx.p;
    let half = n / 2;

    // Block offsets in (i, l, r) order.
    let mut offsets = vec![0usize; n * (p * p) as usize + 1];
    let mut pos = 0usize;
    for i in 0..n {
        for l in 0..p {
            for r in 0..p {
                let idx = i * (p * p) as usize + (l * p + r) as usize;
                offsets[idx] = pos;
                pos += if (l + r) % p == 0 {
                    n * p as usize
                } else {
                    ctx.dlog((l + r) % p) as usize
                };
            }
        }
    }
    let d = pos;
    offsets[n * (p * p) as usize] = d;
    debug_assert_eq!(d, ip_instance_dimension(n, ctx));

    let build = |subsets: &[u64], col_offset: usize, left: bool| {
        let mut set = VectorSet::zeroed(subsets.len(), d);
        for (v, &mask) in subsets.iter().enumerate() {
            for i in 0..n {
                let rs = (m.masked_row_sum(i, mask << col_offset) as u64) % p;
                for other in 0..p {
                    let (l, r) = if left { (rs, other) } else { (other, rs) };
                    let idx = i * (p * p) as usize + (l * p + r) as usize;
                    for j in offsets[idx]..offsets[idx + 1] {
                        set.set(v, j);
                    }
                }
            }
        }
        set
    };

    let a_set = build(&parity_subsets(half, sigma_l), 0, true);
    let b_set = build(&parity_subsets(half, sigma_r), half, false);
    Ok((a_set, b_set))
}

/// Permanent modulo `p` recovered from the four sign-pair histograms:
/// entries at inner products past `n(p-2)` belong to vanishing products
/// and are dropped, the rest are folded by exponent class mod `p-1`.
pub fn perm_mod_p_via_ip(m: &ZeroOneMatrix, ctx: &PrimeContext, counter: PairCounter) -> Result<u64> {
    let n = m.n;
    check_reduction_side(n)?;
    let p = ctx.p;
    let classes = (p - 1) as usize;
    let t_max = n as u64 * (p.max(2) - 2);

    let mut w_pos = vec![0u64; classes];
    let mut w_neg = vec![0u64; classes];
    for (sigma_l, sigma_r) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
        let (a_set, b_set) = build_ip_instance(m, ctx, sigma_l, sigma_r)?;
        let hist = histogram(&a_set, &b_set, counter)?;
        let target = if sigma_l * sigma_r == 1 {
            &mut w_pos
        } else {
            &mut w_neg
        };
        for (t, &count) in hist.counts.iter().enumerate() {
            if (t as u64) <= t_max {
                target[t % classes] += count;
            }
        }
    }

    let mut acc = 0i128;
    let p_i = p as i128;
    for e in 0..classes {
        let ge = arith::mod_pow(ctx.root, e as u64, p) as i128;
        let diff = (w_pos[e] % p) as i128 - (w_neg[e] % p) as i128;
        acc = (acc + ge * diff) % p_i;
    }
    if n % 2 == 1 {
        acc = -acc;
    }
    Ok(acc.rem_euclid(p_i) as u64)
}

/// Dimension of the orthogonality instance with `groups` row groups.
pub fn ov_instance_dimension(n: usize, p: u64, groups: usize) -> Result<usize> {
    if groups == 0 || n % groups != 0 {
        return Err(Error::invalid(format!("groups {groups} must divide side {n}")));
    }
    let per_group = (p as u128).pow((n / groups) as u32);
    let d = groups as u128 * per_group;
    if d > 1 << 20 {
        return Err(Error::invalid(format!(
            "orthogonality instance dimension {d} exceeds the 2^20 limit"
        )));
    }
    Ok(d as usize)
}

/// Derived families for a fixed residue vector `r`: a pair is orthogonal
/// exactly when every row group's combined product matches `r_h` mod p.
pub fn build_ov_instance(
    m: &ZeroOneMatrix,
    p: u64,
    groups: usize,
    sigma_l: i32,
    sigma_r: i32,
    r: &[u64],
) -> Result<(VectorSet, VectorSet)> {
    let n = m.n;
    check_reduction_side(n)?;
    if !arith::is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    if r.len() != groups {
        return Err(Error::LengthMismatch {
            got: r.len(),
            want: groups,
        });
    }
    let d = ov_instance_dimension(n, p, groups)?;
    let rows_per_group = n / groups;
    let per_group = d / groups;
    let half = n / 2;

    // Residue tuple u is laid out with u_1 least significant, base p.
    let decode = |mut u: usize| -> Vec<u64> {
        (0..rows_per_group)
            .map(|_| {
                let digit = (u % p as usize) as u64;
                u /= p as usize;
                digit
            })
            .collect()
    };

    let row_sums = |mask: u64| -> Vec<u64> {
        (0..n)
            .map(|i| (m.masked_row_sum(i, mask) as u64) % p)
            .collect()
    };

    let a_masks = parity_subsets(half, sigma_l);
    let mut a_set = VectorSet::zeroed(a_masks.len(), d);
    for (v, &mask) in a_masks.iter().enumerate() {
        let sums = row_sums(mask);
        for h in 0..groups {
            // Exactly one residue tuple per group matches the row sums.
            let mut u = 0usize;
            for t in (0..rows_per_group).rev() {
                u = u * p as usize + sums[h * rows_per_group + t] as usize;
            }
            a_set.set(v, h * per_group + u);
        }
    }

    let b_masks = parity_subsets(half, sigma_r);
    let mut b_set = VectorSet::zeroed(b_masks.len(), d);
    for (v, &mask) in b_masks.iter().enumerate() {
        let sums = row_sums(mask << half);
        for h in 0..groups {
            for u in 0..per_group {
                let digits = decode(u);
                let mut prod = 1u64;
                for (t, &digit) in digits.iter().enumerate() {
                    prod = prod * ((digit + sums[h * rows_per_group + t]) % p) % p;
                }
                if prod != r[h] {
                    b_set.set(v, h * per_group + u);
                }
            }
        }
    }
    Ok((a_set, b_set))
}

/// Number of pairs with inner product exactly zero.
pub fn count_orthogonal_pairs(a: &VectorSet, b: &VectorSet) -> Result<u64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let partials = par::map_range(a.len(), |i| {
        (0..b.len())
            .filter(|&j| a.inner_product(i, b, j) == 0)
            .count() as u64
    });
    Ok(partials.into_iter().sum())
}

/// Grouped-residue counts `t_{σ,r}` for all residue vectors at once,
/// gathered in a single pass over the pairs of half-subsets. Each count
/// equals the number of orthogonal pairs of the corresponding
/// materialized instance, which is cross-checked in the tests.
fn grouped_sign_counts(
    m: &ZeroOneMatrix,
    p: u64,
    groups: usize,
) -> Result<HashMap<Vec<u64>, [u64; 2]>> {
    let n = m.n;
    check_reduction_side(n)?;
    if groups == 0 || n % groups != 0 {
        return Err(Error::invalid(format!("groups {groups} must divide side {n}")));
    }
    let rows_per_group = n / groups;
    let half = n / 2;

    let mut counts: HashMap<Vec<u64>, [u64; 2]> = HashMap::new();
    for a_mask in 0u64..1 << half {
        let a_sums: Vec<u64> = (0..n)
            .map(|i| (m.masked_row_sum(i, a_mask) as u64) % p)
            .collect();
        let a_parity = a_mask.count_ones() % 2;
        for b_mask in 0u64..1 << (n - half) {
            let parity = (a_parity + b_mask.count_ones()) % 2;
            let mut products = Vec::with_capacity(groups);
            for h in 0..groups {
                let mut prod = 1u64;
                for t in 0..rows_per_group {
                    let i = h * rows_per_group + t;
                    let rs = (a_sums[i] + m.masked_row_sum(i, b_mask << half) as u64) % p;
                    prod = prod * rs % p;
                }
                products.push(prod);
            }
            counts.entry(products).or_default()[parity as usize] += 1;
        }
    }
    Ok(counts)
}

/// Permanent modulo `p` assembled from the grouped counts: the signed
/// count difference of each residue vector weighted by the product of its
/// entries.
pub fn perm_mod_p_via_ov(m: &ZeroOneMatrix, p: u64, groups: usize) -> Result<u64> {
    if !arith::is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    let counts = grouped_sign_counts(m, p, groups)?;
    let p_i = p as i128;
    let mut acc = 0i128;
    for (r, signed) in &counts {
        let mut weight = 1u64;
        for &rh in r {
            weight = weight * rh % p;
        }
        if weight == 0 {
            continue;
        }
        let diff = (signed[0] % p) as i128 - (signed[1] % p) as i128;
        acc = (acc + diff * weight as i128) % p_i;
    }
    if m.n % 2 == 1 {
        acc = -acc;
    }
    Ok(acc.rem_euclid(p_i) as u64)
}

/// Residue via per-residue-vector materialized instances; exponentially
/// many instances, so for cross-checks at tiny parameters only.
pub fn ov_residue_via_instances(
    m: &ZeroOneMatrix,
    p: u64,
    groups: usize,
    counter: PairCounter,
) -> Result<u64> {
    check_reduction_side(m.n)?;
    let p_i = p as i128;
    let mut acc = 0i128;
    let mut r = vec![1u64; groups];
    loop {
        let weight = r.iter().fold(1u64, |acc, &rh| acc * rh % p);
        let mut diff = 0i128;
        for (sigma_l, sigma_r) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let (a_set, b_set) = build_ov_instance(m, p, groups, sigma_l, sigma_r, &r)?;
            let t = match counter {
                PairCounter::Brute => count_orthogonal_pairs(&a_set, &b_set)?,
                PairCounter::Engine => {
                    count_by_inner_product(&a_set, &b_set, &EngineConfig::default())?.counts[0]
                }
            };
            let sign = if sigma_l * sigma_r == 1 { 1 } else { -1 };
            diff += sign * (t % p) as i128;
        }
        acc = (acc + diff * weight as i128) % p_i;

        // Next residue vector over {1, ..., p-1}^groups.
        let mut h = 0;
        loop {
            if h == groups {
                let mut out = if m.n % 2 == 1 { -acc } else { acc };
                out = out.rem_euclid(p_i);
                return Ok(out as u64);
            }
            r[h] += 1;
            if r[h] < p {
                break;
            }
            r[h] = 1;
            h += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PermanentMode {
    #[default]
    Ryser,
    ViaIp,
    ViaOv,
}

impl std::str::FromStr for PermanentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<PermanentMode> {
        match s {
            "ryser" => Ok(PermanentMode::Ryser),
            "ip" | "via_ip" => Ok(PermanentMode::ViaIp),
            "ov" | "via_ov" => Ok(PermanentMode::ViaOv),
            other => Err(Error::invalid(format!("unknown permanent mode '{other}'"))),
        }
    }
}

/// Exact permanent. The reduction modes pad the matrix to an even side of
/// at least 4, compute the residue for enough consecutive primes to cover
/// `n!`, and assemble the integer by Chinese remaindering.
pub fn permanent(m: &ZeroOneMatrix, mode: PermanentMode) -> Result<BigUint> {
    if mode == PermanentMode::Ryser {
        return ryser(m);
    }
    let padded = m.padded_even(4);
    let primes = crt_primes(padded.side());
    let residues = par::map_slice(&primes, |&p| -> Result<u64> {
        match mode {
            PermanentMode::ViaIp => {
                let ctx = PrimeContext::new(p)?;
                perm_mod_p_via_ip(&padded, &ctx, PairCounter::Brute)
            }
            PermanentMode::ViaOv => perm_mod_p_via_ov(&padded, p, padded.side()),
            PermanentMode::Ryser => unreachable!(),
        }
    });

    let mut value = BigUint::zero();
    let mut modulus = BigUint::one();
    for (&p, residue) in primes.iter().zip(residues) {
        let r = residue?;
        let current = (&value % p).to_u64_digits().first().copied().unwrap_or(0);
        let m_mod_p = (&modulus % p).to_u64_digits().first().copied().unwrap_or(0);
        let inv = arith::mod_pow(m_mod_p, p - 2, p);
        let t = arith::mod_mul((r + p - current % p) % p, inv, p);
        value += &modulus * t;
        modulus *= p;
    }
    Ok(value)
}
