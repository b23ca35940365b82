//! The counting pipeline: block the two vector families, build the
//! split-monomial matrices of the amplified residue indicator, multiply
//! them modulo a prime power to obtain per-residue pair counts, then
//! reconstruct the full inner-product histogram from the aggregates.

use std::collections::BTreeMap;
use std::ops::Range;

use crate::par;
use crate::polybuild::{AmplifiedIndicator, MAX_MONOMIAL_DIM};
use crate::reconstruct::{self, AggregateVector, PrimeBasis};
use crate::{Error, Result};

/// Ordered family of bit-packed zero-one vectors of uniform dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorSet {
    n: usize,
    d: usize,
    words: usize,
    bits: Vec<u64>,
}

impl VectorSet {
    pub fn zeroed(n: usize, d: usize) -> VectorSet {
        let words = d.div_ceil(64);
        VectorSet {
            n,
            d,
            words,
            bits: vec![0; n * words],
        }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<VectorSet> {
        let d = rows.first().map_or(0, |r| r.len());
        let mut set = VectorSet::zeroed(rows.len(), d);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch(row.len(), d));
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => set.set(i, j),
                    _ => return Err(Error::invalid("vector entries must be 0 or 1")),
                }
            }
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn set(&mut self, i: usize, j: usize) {
        debug_assert!(j < self.d);
        self.bits[i * self.words + j / 64] |= 1 << (j % 64);
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    /// Integer inner product of row `i` with row `j` of `other`.
    #[inline]
    pub fn inner_product(&self, i: usize, other: &VectorSet, j: usize) -> u32 {
        self.row(i)
            .iter()
            .zip(other.row(j))
            .map(|(&a, &b)| (a & b).count_ones())
            .sum()
    }

    /// Support mask of row `i`; requires `d <= 128`.
    pub fn support_u128(&self, i: usize) -> Result<u128> {
        if self.d > MAX_MONOMIAL_DIM {
            return Err(Error::DimensionTooLarge(self.d, MAX_MONOMIAL_DIM));
        }
        let row = self.row(i);
        let lo = row.first().copied().unwrap_or(0) as u128;
        let hi = row.get(1).copied().unwrap_or(0) as u128;
        Ok(lo | hi << 64)
    }

    pub fn popcount(&self, i: usize) -> u32 {
        self.row(i).iter().map(|w| w.count_ones()).sum()
    }
}

/// Exact pair counts `f_0, ..., f_d` by inner product value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Independent oracle: direct enumeration of all pairs.
pub fn brute_histogram(a: &VectorSet, b: &VectorSet) -> Result<Histogram> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let d = a.dim();
    let partials = par::map_range(a.len(), |i| {
        let mut counts = vec![0u64; d + 1];
        for j in 0..b.len() {
            counts[a.inner_product(i, b, j) as usize] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; d + 1];
    for p in partials {
        for (c, v) in counts.iter_mut().zip(p) {
            *c += v;
        }
    }
    Ok(Histogram { counts })
}

/// Matrix multiplication strategy; every strategy produces bit-identical
/// results. The asymptotically fast rectangular multiplication this
/// interface stands in for is deliberately not implemented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatMulStrategy {
    Naive,
    #[default]
    Blocked,
}

impl std::str::FromStr for MatMulStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<MatMulStrategy> {
        match s {
            "naive" => Ok(MatMulStrategy::Naive),
            "blocked" => Ok(MatMulStrategy::Blocked),
            other => Err(Error::invalid(format!("unknown strategy '{other}'"))),
        }
    }
}

/// Dense row-major matrix of residues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl Matrix {
    pub fn zeroed(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v;
    }
}

/// Exact product `S·T` reduced modulo `modulus`.
pub fn matmul(s: &Matrix, t: &Matrix, modulus: u64, strategy: MatMulStrategy) -> Result<Matrix> {
    if s.cols != t.rows {
        return Err(Error::DimensionMismatch(s.cols, t.rows));
    }
    if modulus < 2 {
        return Err(Error::invalid("modulus must be >= 2"));
    }
    let m = modulus as u128;
    let rows = match strategy {
        MatMulStrategy::Naive => par::map_range(s.rows, |i| {
            let mut out = vec![0u64; t.cols];
            for k in 0..s.cols {
                let sv = s.at(i, k) as u128;
                if sv == 0 {
                    continue;
                }
                let trow = &t.data[k * t.cols..(k + 1) * t.cols];
                for (o, &tv) in out.iter_mut().zip(trow) {
                    *o = ((*o as u128 + sv * tv as u128) % m) as u64;
                }
            }
            out
        }),
        MatMulStrategy::Blocked => par::map_range(s.rows, |i| {
            const TILE: usize = 64;
            let mut out = vec![0u64; t.cols];
            for kb in (0..s.cols).step_by(TILE) {
                let kend = (kb + TILE).min(s.cols);
                for jb in (0..t.cols).step_by(TILE) {
                    let jend = (jb + TILE).min(t.cols);
                    for k in kb..kend {
                        let sv = s.at(i, k) as u128;
                        if sv == 0 {
                            continue;
                        }
                        let trow = &t.data[k * t.cols + jb..k * t.cols + jend];
                        for (o, &tv) in out[jb..jend].iter_mut().zip(trow) {
                            *o = ((*o as u128 + sv * tv as u128) % m) as u64;
                        }
                    }
                }
            }
            out
        }),
    };
    let mut out = Matrix::zeroed(s.rows, t.cols);
    for (i, row) in rows.into_iter().enumerate() {
        out.data[i * t.cols..(i + 1) * t.cols].copy_from_slice(&row);
    }
    Ok(out)
}

/// Desk-scale block parameters: `g` defaults to `max(1, floor(n^{1/4}))`
/// and `h` is the least order with `p^h >= g^2 + 1`.
pub fn block_params(n: usize, p: u64, requested_g: Option<usize>) -> Result<(u32, usize)> {
    let g = match requested_g {
        Some(g) if g >= 1 => g,
        Some(_) => return Err(Error::invalid("block size must be >= 1")),
        None => fourth_root(n).max(1),
    };
    let need = (g as u128) * (g as u128) + 1;
    let mut h = 1u32;
    let mut power = p as u128;
    while power < need {
        h += 1;
        power = power
            .checked_mul(p as u128)
            .ok_or(Error::ModulusTooLarge {
                base: p,
                exponent: h,
            })?;
    }
    if power >= 1 << 63 {
        return Err(Error::ModulusTooLarge {
            base: p,
            exponent: h,
        });
    }
    Ok((h, g))
}

fn fourth_root(n: usize) -> usize {
    let mut r = (n as f64).powf(0.25) as usize;
    while (r + 1).pow(4) as u128 <= n as u128 {
        r += 1;
    }
    while r > 0 && (r as u128).pow(4) > n as u128 {
        r -= 1;
    }
    r
}

/// Partition of the index ranges of both families into cells of size at
/// most `g`, with the amplification order per prime.
#[derive(Debug, Clone)]
pub struct BlockingPlan {
    g: usize,
    orders: BTreeMap<u64, u32>,
}

impl BlockingPlan {
    pub fn new(n: usize, primes: &[u64], requested_g: Option<usize>) -> Result<BlockingPlan> {
        let mut orders = BTreeMap::new();
        let mut g_final = requested_g;
        for &p in primes {
            let (h, g) = block_params(n, p, requested_g)?;
            g_final = Some(g);
            orders.insert(p, h);
        }
        Ok(BlockingPlan {
            g: g_final.unwrap_or(1).max(1),
            orders,
        })
    }

    pub fn block_size(&self) -> usize {
        self.g
    }

    pub fn order(&self, p: u64) -> Result<u32> {
        self.orders
            .get(&p)
            .copied()
            .ok_or_else(|| Error::invalid(format!("no amplification order planned for p={p}")))
    }

    pub fn cells(&self, n: usize) -> Vec<Range<usize>> {
        if n == 0 {
            return Vec::new();
        }
        (0..n.div_ceil(self.g))
            .map(|u| u * self.g..((u + 1) * self.g).min(n))
            .collect()
    }
}

/// Above these sizes the explicit split-monomial matrices are not
/// materialized and the mathematically identical cell-local evaluation
/// through the univariate form is used instead.
const EXPLICIT_MONOMIAL_BUDGET: usize = 1 << 16;
const EXPLICIT_ENTRY_BUDGET: usize = 1 << 21;

/// Exact number of pairs whose inner product is `r` modulo `p`, computed
/// blockwise as the sum of the entries of `S·T` modulo `p^h`.
pub fn residue_count(
    a: &VectorSet,
    b: &VectorSet,
    p: u64,
    r: u64,
    plan: &BlockingPlan,
    strategy: MatMulStrategy,
) -> Result<u64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let d = a.dim();
    let h = plan.order(p)?;
    let indicator = AmplifiedIndicator::new(p, r, h, d.max(1))?;
    let modulus = indicator.modulus();
    let g2 = (plan.block_size() as u128) * (plan.block_size() as u128);
    if g2 > modulus as u128 - 1 {
        return Err(Error::BlockConstraint {
            g_squared: g2,
            limit: modulus as u128 - 1,
        });
    }
    let cells_a = plan.cells(a.len());
    let cells_b = plan.cells(b.len());
    if cells_a.is_empty() || cells_b.is_empty() {
        return Ok(0);
    }

    let explicit = d <= MAX_MONOMIAL_DIM
        && indicator.monomial_count().is_some_and(|m| {
            m <= EXPLICIT_MONOMIAL_BUDGET
                && m.saturating_mul(cells_a.len() + cells_b.len()) <= EXPLICIT_ENTRY_BUDGET
        });

    let product_cells: Vec<u64> = if explicit {
        let poly = indicator.to_sparse()?;
        let monomials = poly.monomials();
        let m_count = monomials.len();

        // S_{uk} = sum_{i in I_u} coeff_k [xmask_k subset of a_i].
        let s_rows = par::map_slice(&cells_a, |cell| {
            let mut row = vec![0u64; m_count];
            for i in cell.clone() {
                let support = a.support_u128(i).expect("dim checked above");
                for (k, mono) in monomials.iter().enumerate() {
                    if mono.xmask & !support == 0 {
                        row[k] = add_mod(row[k], mono.coefficient, modulus);
                    }
                }
            }
            row
        });
        // T_{kv} = sum_{j in J_v} [ymask_k subset of b_j].
        let t_cols = par::map_slice(&cells_b, |cell| {
            let mut col = vec![0u64; m_count];
            for j in cell.clone() {
                let support = b.support_u128(j).expect("dim checked above");
                for (k, mono) in monomials.iter().enumerate() {
                    if mono.ymask & !support == 0 {
                        col[k] = add_mod(col[k], 1, modulus);
                    }
                }
            }
            col
        });

        let mut s = Matrix::zeroed(cells_a.len(), m_count);
        for (u, row) in s_rows.into_iter().enumerate() {
            s.data[u * m_count..(u + 1) * m_count].copy_from_slice(&row);
        }
        let mut t = Matrix::zeroed(m_count, cells_b.len());
        for (v, col) in t_cols.into_iter().enumerate() {
            for (k, val) in col.into_iter().enumerate() {
                t.set(k, v, val);
            }
        }
        matmul(&s, &t, modulus, strategy)?.data
    } else {
        // Identical value per cell: sum over the cell's pairs of the
        // indicator evaluated at the inner product.
        let table: Vec<u64> = (0..=d as u64)
            .map(|w| indicator.eval_at_inner_product(w))
            .collect();
        let pairs: Vec<(Range<usize>, Range<usize>)> = cells_a
            .iter()
            .flat_map(|ca| cells_b.iter().map(move |cb| (ca.clone(), cb.clone())))
            .collect();
        par::map_slice(&pairs, |(ca, cb)| {
            let mut acc = 0u64;
            for i in ca.clone() {
                for j in cb.clone() {
                    acc = add_mod(acc, table[a.inner_product(i, b, j) as usize], modulus);
                }
            }
            acc
        })
    };

    let mut total = 0u64;
    for v in product_cells {
        total = total
            .checked_add(v)
            .ok_or_else(|| Error::inconsistent("residue count overflow"))?;
    }
    Ok(total)
}

#[inline]
fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 + b as u128) % m as u128) as u64
}

#[derive(Debug, Clone, Default)]
pub struct EngineConfig {
    pub block_size: Option<usize>,
    pub strategy: MatMulStrategy,
}

/// Full pipeline: per-prime residue counts, aggregate assembly, exact
/// reconstruction. Equals `brute_histogram` on every input.
pub fn count_by_inner_product(
    a: &VectorSet,
    b: &VectorSet,
    config: &EngineConfig,
) -> Result<Histogram> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    let d = a.dim();
    let total = (a.len() as u64)
        .checked_mul(b.len() as u64)
        .ok_or_else(|| Error::invalid("pair count overflows u64"))?;
    if a.is_empty() || b.is_empty() {
        return Ok(Histogram {
            counts: vec![0; d + 1],
        });
    }
    if d == 0 {
        return Ok(Histogram {
            counts: vec![total],
        });
    }

    let basis = PrimeBasis::for_dimension(d);
    let plan = BlockingPlan::new(a.len().max(b.len()), basis.primes(), config.block_size)?;

    let tasks: Vec<(u64, u64)> = basis
        .primes()
        .iter()
        .flat_map(|&p| (1..p).map(move |r| (p, r)))
        .collect();
    let counts = par::map_slice(&tasks, |&(p, r)| {
        residue_count(a, b, p, r, &plan, config.strategy)
    });

    let mut values = Vec::with_capacity(basis.capacity());
    values.push(total);
    for c in counts {
        values.push(c?);
    }
    let aggregates = AggregateVector { values };
    let f = reconstruct::reconstruct(&aggregates, &basis)?;
    for (l, &v) in f.values.iter().enumerate().skip(d + 1) {
        if v != 0 {
            return Err(Error::inconsistent(format!(
                "reconstructed mass {v} at unreachable inner product {l}"
            )));
        }
    }
    let counts = f.values[..=d].to_vec();
    if counts.iter().sum::<u64>() != total {
        return Err(Error::inconsistent("histogram mass does not match pair count"));
    }
    Ok(Histogram { counts })
}
