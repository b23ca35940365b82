//! Two applications of the pair-counting engine: counting satisfying
//! assignments of circuits made of AND gates under a symmetric top gate,
//! and computing the weight distribution of a binary linear code.

use crate::engine::{brute_histogram, count_by_inner_product, EngineConfig, Histogram, VectorSet};
use crate::par;
use crate::permanent::PairCounter;
use crate::{Error, Result};

/// Symmetric top gate over the number of satisfied AND gates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopGate {
    /// Accept exactly `t` satisfied gates.
    Exact(usize),
    /// Accept any count in the set.
    Set(Vec<usize>),
    /// Accept a strict majority.
    Majority,
    /// Accept counts of the given parity.
    Parity(u8),
}

impl TopGate {
    pub fn accepts(&self, t: usize, s: usize) -> bool {
        match self {
            TopGate::Exact(want) => t == *want,
            TopGate::Set(set) => set.contains(&t),
            TopGate::Majority => 2 * t > s,
            TopGate::Parity(b) => t % 2 == *b as usize,
        }
    }
}

/// AND gates over literals (positive index = variable, negative =
/// negation; variables are 1-based) under a symmetric top gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymAndCircuit {
    pub n: usize,
    pub gates: Vec<Vec<i32>>,
    pub top: TopGate,
}

impl SymAndCircuit {
    pub fn new(n: usize, gates: Vec<Vec<i32>>, top: TopGate) -> Result<SymAndCircuit> {
        if n == 0 {
            return Err(Error::invalid("circuit needs at least one input"));
        }
        if gates.is_empty() {
            return Err(Error::invalid("circuit needs at least one gate"));
        }
        for (g, gate) in gates.iter().enumerate() {
            if gate.is_empty() {
                return Err(Error::invalid(format!("gate {} is empty", g + 1)));
            }
            for &lit in gate {
                let var = lit.unsigned_abs() as usize;
                if lit == 0 || var > n {
                    return Err(Error::invalid(format!(
                        "gate {} has literal {lit} outside 1..={n}",
                        g + 1
                    )));
                }
                if gate.contains(&-lit) {
                    return Err(Error::invalid(format!(
                        "gate {} contains both {var} and its negation",
                        g + 1
                    )));
                }
            }
        }
        Ok(SymAndCircuit { n, gates, top })
    }

    fn gate_count(&self) -> usize {
        self.gates.len()
    }
}

/// One vector per assignment to the variables in `vars`: a coordinate per
/// gate, set when every literal of the gate over those variables is
/// satisfied (vacuously for gates untouched by the half).
fn half_assignment_vectors(circuit: &SymAndCircuit, vars: &[usize]) -> VectorSet {
    let s = circuit.gate_count();
    let mut set = VectorSet::zeroed(1 << vars.len(), s);
    for assignment in 0..1u64 << vars.len() {
        for (g, gate) in circuit.gates.iter().enumerate() {
            let ok = gate.iter().all(|&lit| {
                let var = lit.unsigned_abs() as usize;
                match vars.iter().position(|&v| v == var) {
                    Some(pos) => (assignment >> pos & 1 == 1) == (lit > 0),
                    None => true,
                }
            });
            if ok {
                set.set(assignment as usize, g);
            }
        }
    }
    set
}

fn circuit_halves(n: usize) -> (Vec<usize>, Vec<usize>) {
    let split = n.div_ceil(2);
    ((1..=split).collect(), (split + 1..=n).collect())
}

/// Number of assignments accepted by the top gate, via the histogram of
/// satisfied-gate counts over pairs of half-assignments.
pub fn symand_count(circuit: &SymAndCircuit, counter: PairCounter) -> Result<u64> {
    let (left, right) = circuit_halves(circuit.n);
    let a = half_assignment_vectors(circuit, &left);
    let b = half_assignment_vectors(circuit, &right);
    let hist = match counter {
        PairCounter::Brute => brute_histogram(&a, &b)?,
        PairCounter::Engine => count_by_inner_product(&a, &b, &EngineConfig::default())?,
    };
    let s = circuit.gate_count();
    Ok(hist
        .counts
        .iter()
        .enumerate()
        .filter(|(t, _)| circuit.top.accepts(*t, s))
        .map(|(_, &c)| c)
        .sum())
}

/// Truth-table oracle.
pub fn symand_brute(circuit: &SymAndCircuit) -> Result<u64> {
    if circuit.n > 24 {
        return Err(Error::DimensionTooLarge(circuit.n, 24));
    }
    let s = circuit.gate_count();
    let mut accepted = 0u64;
    for assignment in 0..1u64 << circuit.n {
        let t = circuit
            .gates
            .iter()
            .filter(|gate| {
                gate.iter().all(|&lit| {
                    let var = lit.unsigned_abs() as usize;
                    (assignment >> (var - 1) & 1 == 1) == (lit > 0)
                })
            })
            .count();
        if circuit.top.accepts(t, s) {
            accepted += 1;
        }
    }
    Ok(accepted)
}

/// Binary linear code given by a generator matrix, rows as bitmasks with
/// column 0 in the least significant bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearCode {
    pub k: usize,
    pub n: usize,
    pub rows: Vec<u128>,
}

impl LinearCode {
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<LinearCode> {
        let k = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if n > 128 {
            return Err(Error::DimensionTooLarge(n, 128));
        }
        let mut masks = Vec::with_capacity(k);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch(row.len(), n));
            }
            let mut mask = 0u128;
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => mask |= 1 << j,
                    _ => return Err(Error::invalid("generator entries must be 0 or 1")),
                }
            }
            masks.push(mask);
        }
        Ok(LinearCode { k, n, rows: masks })
    }
}

/// Codeword counts by Hamming weight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightDistribution {
    pub counts: Vec<u64>,
}

/// Row-reduce the generator into `[I_k | P]`, swapping columns when a
/// pivot is missing; returns the standardized code and the permutation
/// mapping its columns back to the input's. The row space changes only by
/// the column permutation, so the weight distribution is preserved.
pub fn standardize_generator(code: &LinearCode) -> Result<(LinearCode, Vec<usize>)> {
    let (k, n) = (code.k, code.n);
    if k > n {
        return Err(Error::invalid(format!("rank {k} exceeds length {n}")));
    }
    let mut rows = code.rows.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..k {
        let pivot = (col..n)
            .find_map(|c| (col..k).find(|&r| rows[r] >> c & 1 == 1).map(|r| (r, c)))
            .ok_or_else(|| Error::invalid("generator is rank deficient"))?;
        let (prow, pcol) = pivot;
        rows.swap(col, prow);
        if pcol != col {
            for row in rows.iter_mut() {
                let a = *row >> col & 1;
                let b = *row >> pcol & 1;
                if a != b {
                    *row ^= (1 << col) | (1 << pcol);
                }
            }
            perm.swap(col, pcol);
        }
        for r in 0..k {
            if r != col && rows[r] >> col & 1 == 1 {
                rows[r] ^= rows[col];
            }
        }
    }
    Ok((LinearCode { k, n, rows }, perm))
}

/// One vector per combination of exactly `weight` of the given redundancy
/// rows, encoding each of the `n - k` codeword bits as a two-coordinate
/// block; the `flip` side uses the opposite block encoding, so each block
/// contributes 1 to an inner product exactly when the two bits differ.
fn encoded_combinations(p_rows: &[u128], weight: usize, redundancy: usize, flip: bool) -> VectorSet {
    let masks: Vec<u64> = (0..1u64 << p_rows.len())
        .filter(|m| m.count_ones() as usize == weight)
        .collect();
    let mut set = VectorSet::zeroed(masks.len(), 2 * redundancy);
    for (v, &mask) in masks.iter().enumerate() {
        let mut word = 0u128;
        for (t, &row) in p_rows.iter().enumerate() {
            if mask >> t & 1 == 1 {
                word ^= row;
            }
        }
        for i in 0..redundancy {
            let bit = word >> i & 1 == 1;
            if bit != flip {
                set.set(v, 2 * i);
            } else {
                set.set(v, 2 * i + 1);
            }
        }
    }
    set
}

/// Weight distribution via one pair-counting instance per split weight
/// pair `(s_A, s_B)`: each pair of combinations sums to a codeword with
/// `s_A + s_B` ones on the identity part and inner product many ones on
/// the redundancy part.
pub fn weight_distribution(code: &LinearCode, counter: PairCounter) -> Result<WeightDistribution> {
    let (standard, _) = standardize_generator(code)?;
    let (k, n) = (standard.k, standard.n);
    let redundancy = n - k;
    let p_rows: Vec<u128> = standard.rows.iter().map(|&r| r >> k).collect();
    let half_a = k.div_ceil(2);

    let splits: Vec<(usize, usize)> = (0..=half_a)
        .flat_map(|sa| (0..=k - half_a).map(move |sb| (sa, sb)))
        .collect();
    let histograms = par::map_slice(&splits, |&(sa, sb)| -> Result<Histogram> {
        let a = encoded_combinations(&p_rows[..half_a], sa, redundancy, false);
        let b = encoded_combinations(&p_rows[half_a..], sb, redundancy, true);
        match counter {
            PairCounter::Brute => brute_histogram(&a, &b),
            PairCounter::Engine => count_by_inner_product(&a, &b, &EngineConfig::default()),
        }
    });

    let mut counts = vec![0u64; n + 1];
    for (&(sa, sb), hist) in splits.iter().zip(histograms) {
        for (t, &c) in hist?.counts.iter().enumerate() {
            if c > 0 {
                counts[sa + sb + t] += c;
            }
        }
    }
    debug_assert_eq!(counts.iter().sum::<u64>(), 1 << k);
    Ok(WeightDistribution { counts })
}

/// Oracle: enumerate all `2^k` row combinations.
pub fn weight_brute(code: &LinearCode) -> Result<WeightDistribution> {
    if code.k > 24 {
        return Err(Error::DimensionTooLarge(code.k, 24));
    }
    let mut counts = vec![0u64; code.n + 1];
    for mask in 0..1u64 << code.k {
        let mut word = 0u128;
        for (t, &row) in code.rows.iter().enumerate() {
            if mask >> t & 1 == 1 {
                word ^= row;
            }
        }
        counts[word.count_ones() as usize] += 1;
    }
    Ok(WeightDistribution { counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn and_gate_circuit() -> SymAndCircuit {
        SymAndCircuit::new(2, vec![vec![1, 2]], TopGate::Exact(1)).unwrap()
    }

    #[test]
    fn symand_examples() {
        let c = and_gate_circuit();
        assert_eq!(symand_count(&c, PairCounter::Brute).unwrap(), 1);
        assert_eq!(symand_brute(&c).unwrap(), 1);

        let complement = SymAndCircuit::new(2, vec![vec![1, 2]], TopGate::Exact(0)).unwrap();
        assert_eq!(symand_count(&complement, PairCounter::Brute).unwrap(), 3);

        let cross =
            SymAndCircuit::new(4, vec![vec![1, 3], vec![2, 4]], TopGate::Exact(2)).unwrap();
        assert_eq!(symand_count(&cross, PairCounter::Brute).unwrap(), 1);
        assert_eq!(symand_brute(&cross).unwrap(), 1);
    }

    #[test]
    fn symand_rejects_malformed() {
        assert!(SymAndCircuit::new(0, vec![vec![1]], TopGate::Majority).is_err());
        assert!(SymAndCircuit::new(2, vec![], TopGate::Majority).is_err());
        assert!(SymAndCircuit::new(2, vec![vec![]], TopGate::Majority).is_err());
        assert!(SymAndCircuit::new(2, vec![vec![3]], TopGate::Majority).is_err());
        assert!(SymAndCircuit::new(2, vec![vec![1, -1]], TopGate::Majority).is_err());
    }

    fn random_circuit(rng: &mut StdRng, top: TopGate) -> SymAndCircuit {
        let n = rng.gen_range(2..=12);
        let s = rng.gen_range(1..=8);
        let gates = (0..s)
            .map(|_| {
                let width = rng.gen_range(1..=3.min(n));
                let mut vars: Vec<i32> = Vec::new();
                while vars.len() < width {
                    let v = rng.gen_range(1..=n as i32);
                    if !vars.iter().any(|&l: &i32| l.abs() == v) {
                        vars.push(if rng.gen_bool(0.5) { v } else { -v });
                    }
                }
                vars
            })
            .collect();
        SymAndCircuit::new(n, gates, top).unwrap()
    }

    #[test]
    fn symand_matches_oracle() {
        let mut rng = StdRng::seed_from_u64(61);
        for i in 0..30 {
            let top = match i % 4 {
                0 => TopGate::Exact(rng.gen_range(0..=8)),
                1 => TopGate::Majority,
                2 => TopGate::Parity(rng.gen_range(0..2)),
                _ => TopGate::Set(vec![0, 2, 5]),
            };
            let c = random_circuit(&mut rng, top);
            let counter = if i % 2 == 0 {
                PairCounter::Brute
            } else {
                PairCounter::Engine
            };
            assert_eq!(
                symand_count(&c, counter).unwrap(),
                symand_brute(&c).unwrap(),
                "circuit {i}"
            );
        }
    }

    /// The inner product of two half-assignment vectors is the number of
    /// gates the combined assignment satisfies.
    #[test]
    fn half_vectors_count_satisfied_gates() {
        let mut rng = StdRng::seed_from_u64(67);
        for _ in 0..10 {
            let c = random_circuit(&mut rng, TopGate::Majority);
            let (left, right) = circuit_halves(c.n);
            let a = half_assignment_vectors(&c, &left);
            let b = half_assignment_vectors(&c, &right);
            for la in 0..a.len() {
                for rb in 0..b.len() {
                    let satisfied = c
                        .gates
                        .iter()
                        .filter(|gate| {
                            gate.iter().all(|&lit| {
                                let var = lit.unsigned_abs() as usize;
                                let value = match left.iter().position(|&v| v == var) {
                                    Some(pos) => la >> pos & 1 == 1,
                                    None => {
                                        let pos =
                                            right.iter().position(|&v| v == var).unwrap();
                                        rb >> pos & 1 == 1
                                    }
                                };
                                value == (lit > 0)
                            })
                        })
                        .count() as u32;
                    assert_eq!(a.inner_product(la, &b, rb), satisfied);
                }
            }
        }
    }

    fn code(rows: &[&[u8]]) -> LinearCode {
        LinearCode::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn hamming_7_4() -> LinearCode {
        code(&[
            &[1, 0, 0, 0, 1, 1, 0],
            &[0, 1, 0, 0, 1, 0, 1],
            &[0, 0, 1, 0, 0, 1, 1],
            &[0, 0, 0, 1, 1, 1, 1],
        ])
    }

    #[test]
    fn standardization() {
        let std_code = hamming_7_4();
        let (out, perm) = standardize_generator(&std_code).unwrap();
        assert_eq!(out, std_code);
        assert_eq!(perm, (0..7).collect::<Vec<_>>());

        let swapped = code(&[&[0, 1], &[1, 0]]);
        let (out, _) = standardize_generator(&swapped).unwrap();
        assert_eq!(out.rows, vec![1, 2]);

        let repetition = code(&[&[1, 1, 1]]);
        let (out, perm) = standardize_generator(&repetition).unwrap();
        assert_eq!(out.rows, vec![0b111]);
        assert_eq!(perm, vec![0, 1, 2]);

        let deficient = code(&[&[1, 1, 0], &[1, 1, 0]]);
        assert!(standardize_generator(&deficient).is_err());
    }

    #[test]
    fn weight_examples() {
        let repetition = code(&[&[1, 1, 1]]);
        assert_eq!(
            weight_distribution(&repetition, PairCounter::Brute)
                .unwrap()
                .counts,
            vec![1, 0, 0, 1]
        );

        let full = code(&[&[1, 0], &[0, 1]]);
        assert_eq!(
            weight_distribution(&full, PairCounter::Brute).unwrap().counts,
            vec![1, 2, 1]
        );

        assert_eq!(
            weight_distribution(&hamming_7_4(), PairCounter::Engine)
                .unwrap()
                .counts,
            vec![1, 0, 0, 7, 7, 0, 0, 1]
        );
        assert_eq!(
            weight_brute(&hamming_7_4()).unwrap().counts,
            vec![1, 0, 0, 7, 7, 0, 0, 1]
        );
    }

    fn random_full_rank_code(rng: &mut StdRng, k: usize, n: usize) -> LinearCode {
        loop {
            let rows: Vec<Vec<u8>> = (0..k)
                .map(|_| (0..n).map(|_| rng.gen_range(0..2u8)).collect())
                .collect();
            let c = LinearCode::from_rows(&rows).unwrap();
            if standardize_generator(&c).is_ok() {
                return c;
            }
        }
    }

    #[test]
    fn weight_matches_oracle() {
        let mut rng = StdRng::seed_from_u64(71);
        for i in 0..15 {
            let k = rng.gen_range(1..=6);
            let n = rng.gen_range(k..=k + 8);
            let c = random_full_rank_code(&mut rng, k, n);
            let counter = if i % 2 == 0 {
                PairCounter::Brute
            } else {
                PairCounter::Engine
            };
            let got = weight_distribution(&c, counter).unwrap();
            assert_eq!(got, weight_brute(&c).unwrap(), "k={k} n={n}");
            assert_eq!(got.counts.iter().sum::<u64>(), 1 << k);
            assert_eq!(got.counts[0], 1);
        }
    }

    /// Each two-coordinate block contributes 1 to the inner product
    /// exactly when the two codeword bits differ there.
    #[test]
    fn block_encoding_orthogonality() {
        let mut rng = StdRng::seed_from_u64(73);
        let p_rows: Vec<u128> = (0..4).map(|_| rng.gen_range(0..32u128)).collect();
        for sa in 0..=2usize {
            for sb in 0..=2usize {
                let a = encoded_combinations(&p_rows[..2], sa, 5, false);
                let b = encoded_combinations(&p_rows[2..], sb, 5, true);
                for i in 0..a.len() {
                    for j in 0..b.len() {
                        let mut diff = 0u32;
                        for block in 0..5 {
                            let x = a.get(i, 2 * block);
                            let y = b.get(j, 2 * block);
                            let per_block = a.get(i, 2 * block) as u32
                                * b.get(j, 2 * block) as u32
                                + a.get(i, 2 * block + 1) as u32
                                    * b.get(j, 2 * block + 1) as u32;
                            assert_eq!(per_block, (x == y) as u32);
                            diff += per_block;
                        }
                        assert_eq!(a.inner_product(i, &b, j), diff);
                    }
                }
            }
        }
    }
}
