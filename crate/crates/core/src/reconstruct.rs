//! Reconstruction of a count vector from its sum-aggregates by prime
//! residue.
//!
//! For distinct primes `p_1 < ... < p_m` and capacity
//! `s_m = 1 + sum_b (p_b - 1)`, the nonzero residue aggregation matrix `A`
//! maps a count vector `f` of length `s_m` to the sequence `F` formed by
//! the grand total followed by the aggregate of every nonzero residue
//! class of every prime. `A` is invertible, so `f` can be recovered
//! exactly from `F`. Production reconstruction runs over exact integers
//! (fraction-free elimination); the complex `U·V` decomposition that
//! underlies the invertibility proof is kept as a numerical cross-check.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};

use crate::arith::{first_primes, is_prime};
use crate::{Error, Result};

/// Ascending distinct primes together with the reconstruction capacity
/// `s_m = 1 + sum_b (p_b - 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrimeBasis {
    primes: Vec<u64>,
    capacity: usize,
}

impl PrimeBasis {
    /// Minimal prefix of the primes whose capacity covers counts over
    /// `{0, ..., d}`.
    pub fn for_dimension(d: usize) -> PrimeBasis {
        let mut primes = Vec::new();
        let mut capacity = 1usize;
        let mut m = 0usize;
        while capacity < d + 1 {
            m += 1;
            primes = first_primes(m);
            capacity = 1 + primes.iter().map(|&p| p as usize - 1).sum::<usize>();
        }
        PrimeBasis { primes, capacity }
    }

    /// Basis over an explicit ascending list of distinct primes.
    pub fn from_primes(primes: Vec<u64>) -> Result<PrimeBasis> {
        for window in primes.windows(2) {
            if window[0] >= window[1] {
                return Err(Error::invalid("primes must be strictly ascending"));
            }
        }
        for &p in &primes {
            if !is_prime(p) {
                return Err(Error::NotPrime(p));
            }
        }
        let capacity = 1 + primes.iter().map(|&p| p as usize - 1).sum::<usize>();
        Ok(PrimeBasis { primes, capacity })
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }
}

/// Row labels of the aggregation matrix, in row order: the grand-total
/// band `(0, 1)` first, then `(b, i)` for `i = 1, ..., p_b - 1` per band.
pub fn row_labels(basis: &PrimeBasis) -> Vec<(usize, u64)> {
    let mut labels = vec![(0usize, 1u64)];
    for (b, &p) in basis.primes().iter().enumerate() {
        for i in 1..p {
            labels.push((b + 1, i));
        }
    }
    labels
}

/// The square 0/1 nonzero residue aggregation matrix for a basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationMatrix {
    basis: PrimeBasis,
    entries: Vec<Vec<u8>>,
}

impl AggregationMatrix {
    pub fn basis(&self) -> &PrimeBasis {
        &self.basis
    }

    pub fn side(&self) -> usize {
        self.basis.capacity()
    }

    pub fn entries(&self) -> &[Vec<u8>] {
        &self.entries
    }
}

/// Builds the aggregation matrix: the band-0 row is all ones and the row
/// `(b, i)` of band `b >= 1` indicates the columns `l ≡ i (mod p_b)`.
pub fn build_aggregation_matrix(basis: &PrimeBasis) -> AggregationMatrix {
    let s = basis.capacity();
    let entries = row_labels(basis)
        .into_iter()
        .map(|(band, i)| {
            (0..s as u64)
                .map(|l| {
                    if band == 0 {
                        1
                    } else {
                        let p = basis.primes()[band - 1];
                        u8::from(l % p == i)
                    }
                })
                .collect()
        })
        .collect();
    AggregationMatrix {
        basis: basis.clone(),
        entries,
    }
}

/// Sequence of sum-aggregates: the grand total first, then the aggregate
/// of every nonzero residue class per prime band.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateVector {
    pub values: Vec<u64>,
}

/// Nonnegative counts `f_0, ..., f_{s_m - 1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountVector {
    pub values: Vec<u64>,
}

impl CountVector {
    /// Zero-extends `values` to the capacity of `basis`.
    pub fn zero_extended(values: &[u64], basis: &PrimeBasis) -> Result<CountVector> {
        if values.len() > basis.capacity() {
            return Err(Error::LengthMismatch {
                got: values.len(),
                want: basis.capacity(),
            });
        }
        let mut v = values.to_vec();
        v.resize(basis.capacity(), 0);
        Ok(CountVector { values: v })
    }
}

/// Forward aggregation `F = A f`, computed from residues directly.
pub fn aggregate(f: &CountVector, basis: &PrimeBasis) -> Result<AggregateVector> {
    let s = basis.capacity();
    if f.values.len() != s {
        return Err(Error::LengthMismatch {
            got: f.values.len(),
            want: s,
        });
    }
    let total: u64 = f.values.iter().sum();
    let mut values = Vec::with_capacity(s);
    values.push(total);
    for &p in basis.primes() {
        for i in 1..p {
            let sum = f
                .values
                .iter()
                .enumerate()
                .filter(|(l, _)| *l as u64 % p == i)
                .map(|(_, &v)| v)
                .sum();
            values.push(sum);
        }
    }
    Ok(AggregateVector { values })
}

/// Exact integer inverse action of the aggregation matrix: the adjugate
/// block and the common denominator, so `f = (adj · F) / den`.
struct ExactInverse {
    adjugate: Vec<Vec<BigInt>>,
    denominator: BigInt,
}

fn inverse_cache() -> &'static Mutex<HashMap<Vec<u64>, Arc<ExactInverse>>> {
    static CACHE: OnceLock<Mutex<HashMap<Vec<u64>, Arc<ExactInverse>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Fraction-free Gauss-Jordan (Bareiss/Montante) on `[A | I]`. Every
/// division in the recurrence is exact over the integers; the left block
/// finishes as `den · I` and the right block as `den · A^{-1}`.
fn exact_inverse(matrix: &AggregationMatrix) -> Result<ExactInverse> {
    let n = matrix.side();
    let mut w: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            let mut row: Vec<BigInt> = matrix.entries()[i]
                .iter()
                .map(|&e| BigInt::from(e))
                .collect();
            row.extend((0..n).map(|j| BigInt::from(u8::from(i == j))));
            row
        })
        .collect();

    let mut prev = BigInt::one();
    for k in 0..n {
        if w[k][k].is_zero() {
            let swap = (k + 1..n)
                .find(|&i| !w[i][k].is_zero())
                .ok_or_else(|| Error::inconsistent("aggregation matrix is singular"))?;
            w.swap(k, swap);
        }
        let pivot = w[k][k].clone();
        for i in 0..n {
            if i == k {
                continue;
            }
            let factor = w[i][k].clone();
            for j in 0..2 * n {
                let num = &pivot * &w[i][j] - &factor * &w[k][j];
                debug_assert!((&num % &prev).is_zero());
                w[i][j] = num / &prev;
            }
        }
        prev = pivot;
    }

    let denominator = w[n - 1][n - 1].clone();
    let adjugate = w.into_iter().map(|row| row[n..].to_vec()).collect();
    Ok(ExactInverse {
        adjugate,
        denominator,
    })
}

fn cached_inverse(basis: &PrimeBasis) -> Result<Arc<ExactInverse>> {
    let mut cache = inverse_cache().lock().unwrap();
    if let Some(inv) = cache.get(basis.primes()) {
        return Ok(inv.clone());
    }
    let inv = Arc::new(exact_inverse(&build_aggregation_matrix(basis))?);
    cache.insert(basis.primes().to_vec(), inv.clone());
    Ok(inv)
}

/// Solves `F = A f` exactly. Errors if the solution is not a vector of
/// nonnegative integers, which signals that `F` was not produced by
/// aggregating nonnegative counts.
pub fn reconstruct(aggregates: &AggregateVector, basis: &PrimeBasis) -> Result<CountVector> {
    let s = basis.capacity();
    if aggregates.values.len() != s {
        return Err(Error::LengthMismatch {
            got: aggregates.values.len(),
            want: s,
        });
    }
    let inv = cached_inverse(basis)?;
    let mut values = Vec::with_capacity(s);
    for row in &inv.adjugate {
        let mut acc = BigInt::zero();
        for (a, &fv) in row.iter().zip(&aggregates.values) {
            acc += a * BigInt::from(fv);
        }
        if !(&acc % &inv.denominator).is_zero() {
            return Err(Error::InvalidAggregate);
        }
        let q = acc / &inv.denominator;
        if q.is_negative() {
            return Err(Error::InvalidAggregate);
        }
        let (_, digits) = q.to_u64_digits();
        match digits.len() {
            0 => values.push(0),
            1 => values.push(digits[0]),
            _ => return Err(Error::InvalidAggregate),
        }
    }
    Ok(CountVector { values })
}

/// Exact determinant by fraction-free forward elimination with row-swap
/// sign tracking.
pub fn exact_determinant(matrix: &AggregationMatrix) -> BigInt {
    let n = matrix.side();
    let mut w: Vec<Vec<BigInt>> = matrix
        .entries()
        .iter()
        .map(|row| row.iter().map(|&e| BigInt::from(e)).collect())
        .collect();
    let mut prev = BigInt::one();
    let mut sign = 1i32;
    for k in 0..n - 1 {
        if w[k][k].is_zero() {
            let Some(swap) = (k + 1..n).find(|&i| !w[i][k].is_zero()) else {
                return BigInt::zero();
            };
            w.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &w[k][k] * &w[i][j] - &w[i][k] * &w[k][j];
                w[i][j] = num / &prev;
            }
        }
        prev = w[k][k].clone();
    }
    let det = w[n - 1][n - 1].clone();
    if sign < 0 {
        -det
    } else {
        det
    }
}

fn root_of_unity(order: u64, power: i64) -> Complex64 {
    let angle = 2.0 * std::f64::consts::PI * power as f64 / order as f64;
    Complex64::new(angle.cos(), angle.sin())
}

/// Complex decomposition `A = U · V` with `U` near-block-diagonal and `V`
/// a Vandermonde matrix in roots of unity. Used only as a test oracle for
/// invertibility; production reconstruction is exact.
pub fn build_uv_decomposition(basis: &PrimeBasis) -> (Vec<Vec<Complex64>>, Vec<Vec<Complex64>>) {
    let s = basis.capacity();
    let labels = row_labels(basis);
    let prime_of_band =
        |band: usize| -> u64 { if band == 0 { 2 } else { basis.primes()[band - 1] } };

    let u = labels
        .iter()
        .map(|&(b, i)| {
            labels
                .iter()
                .map(|&(d, k)| {
                    if d == 0 {
                        if b == 0 {
                            Complex64::new(1.0, 0.0)
                        } else {
                            Complex64::new(1.0 / prime_of_band(b) as f64, 0.0)
                        }
                    } else if b != d {
                        Complex64::new(0.0, 0.0)
                    } else {
                        let p = prime_of_band(b);
                        root_of_unity(p, -((i * k) as i64)) / p as f64
                    }
                })
                .collect()
        })
        .collect();

    let v = labels
        .iter()
        .map(|&(d, k)| {
            (0..s as u64)
                .map(|l| {
                    if d == 0 {
                        Complex64::new(1.0, 0.0)
                    } else {
                        root_of_unity(prime_of_band(d), (k * l) as i64)
                    }
                })
                .collect()
        })
        .collect();

    (u, v)
}

/// Max-norm of `A - U·V` in double-precision complex arithmetic.
pub fn uv_max_error(basis: &PrimeBasis) -> f64 {
    let a = build_aggregation_matrix(basis);
    let (u, v) = build_uv_decomposition(basis);
    let s = basis.capacity();
    let mut max = 0.0f64;
    for i in 0..s {
        for j in 0..s {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..s {
                acc += u[i][k] * v[k][j];
            }
            let err = (acc - Complex64::new(a.entries()[i][j] as f64, 0.0)).norm();
            max = max.max(err);
        }
    }
    max
}
