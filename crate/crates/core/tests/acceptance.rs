//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the report.

use num_bigint::BigInt;
use num_traits::Zero;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ipcount::apps::{
    symand_brute, symand_count, weight_brute, weight_distribution, LinearCode, SymAndCircuit,
    TopGate,
};
use ipcount::engine::{brute_histogram, count_by_inner_product, EngineConfig, VectorSet};
use ipcount::permanent::{
    build_ip_instance, build_ov_instance, crt_primes, perm_mod_p_via_ov, permanent, ryser,
    PairCounter, PermanentMode, PrimeContext, ZeroOneMatrix,
};
use ipcount::polybuild::{amplifier, AmplifiedIndicator};
use ipcount::reconstruct::{
    aggregate, build_aggregation_matrix, reconstruct, uv_max_error, CountVector, PrimeBasis,
};

fn report(id: u32, name: &str, result: Result<(), String>) {
    match &result {
        Ok(()) => println!("ACCEPTANCE {id:02} {name}: pass"),
        Err(msg) => println!("ACCEPTANCE {id:02} {name}: FAIL ({msg})"),
    }
    if let Err(msg) = result {
        panic!("criterion {id} ({name}) failed: {msg}");
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn random_set(rng: &mut StdRng, n: usize, d: usize) -> VectorSet {
    let mut set = VectorSet::zeroed(n, d);
    for i in 0..n {
        for j in 0..d {
            if rng.gen_bool(0.5) {
                set.set(i, j);
            }
        }
    }
    set
}

fn random_matrix(rng: &mut StdRng, n: usize) -> ZeroOneMatrix {
    let rows: Vec<Vec<u8>> = (0..n)
        .map(|_| (0..n).map(|_| rng.gen_range(0..2u8)).collect())
        .collect();
    ZeroOneMatrix::from_rows(&rows).unwrap()
}

#[test]
fn criterion_01_golden_aggregation_matrix() {
    let expect: [[u8; 8]; 8] = [
        [1, 1, 1, 1, 1, 1, 1, 1],
        [0, 1, 0, 1, 0, 1, 0, 1],
        [0, 1, 0, 0, 1, 0, 0, 1],
        [0, 0, 1, 0, 0, 1, 0, 0],
        [0, 1, 0, 0, 0, 0, 1, 0],
        [0, 0, 1, 0, 0, 0, 0, 1],
        [0, 0, 0, 1, 0, 0, 0, 0],
        [0, 0, 0, 0, 1, 0, 0, 0],
    ];
    let basis = PrimeBasis::from_primes(vec![2, 3, 5]).unwrap();
    let matrix = build_aggregation_matrix(&basis);
    let ok = matrix.side() == 8
        && matrix
            .entries()
            .iter()
            .zip(expect.iter())
            .all(|(row, want)| row.as_slice() == want.as_slice());
    report(1, "golden aggregation matrix", ensure(ok, "entry mismatch"));
}

#[test]
fn criterion_02_decomposition_error() {
    let mut result = Ok(());
    for primes in [vec![2u64, 3, 5], vec![2, 3, 5, 7, 11]] {
        let basis = PrimeBasis::from_primes(primes.clone()).unwrap();
        let err = uv_max_error(&basis);
        if err >= 1e-9 {
            result = Err(format!("max error {err:e} for basis {primes:?}"));
        }
    }
    report(2, "complex decomposition", result);
}

#[test]
fn criterion_03_reconstruction_round_trip() {
    let mut rng = StdRng::seed_from_u64(103);
    let mut result = Ok(());
    for trial in 0..1000 {
        let d = rng.gen_range(1..=91);
        let basis = PrimeBasis::for_dimension(d);
        assert!(basis.capacity() <= 100);
        let counts = CountVector {
            values: (0..basis.capacity())
                .map(|_| rng.gen_range(0..1u64 << 40))
                .collect(),
        };
        let agg = aggregate(&counts, &basis).unwrap();
        let back = reconstruct(&agg, &basis).unwrap();
        if back != counts {
            result = Err(format!("trial {trial} (d={d}) did not round-trip"));
            break;
        }
    }
    report(3, "reconstruction round trip", result);
}

#[test]
fn criterion_04_amplification() {
    let mut result = Ok(());
    'outer: for m in [2u64, 3, 5, 7, 11] {
        for h in 1u32..=4 {
            let amp = amplifier(h);
            let mh = BigInt::from(m.pow(h));
            let bound = m.pow(h) as i64;
            for s in -bound..=bound {
                let residue = s.rem_euclid(m as i64) as u64;
                if residue > 1 {
                    continue;
                }
                let value = amp.evaluate(&BigInt::from(s));
                let reduced = ((value - BigInt::from(residue)) % &mh).is_zero();
                if !reduced {
                    result = Err(format!("m={m} h={h} s={s}"));
                    break 'outer;
                }
            }
        }
    }
    report(4, "modulus amplification", result);
}

#[test]
fn criterion_05_indicator_random_tuples() {
    let mut rng = StdRng::seed_from_u64(105);
    let mut result = Ok(());
    for trial in 0..500 {
        let p = [2u64, 3, 5, 7][rng.gen_range(0..4)];
        let r = rng.gen_range(0..p);
        let h = rng.gen_range(1..=3);
        let d = rng.gen_range(1..=16usize);
        let a: u128 = rng.gen::<u64>() as u128 & ((1 << d) - 1);
        let b: u128 = rng.gen::<u64>() as u128 & ((1 << d) - 1);
        let indicator = AmplifiedIndicator::new(p, r, h, d).unwrap();
        let sparse = indicator.to_sparse().unwrap();
        let w = (a & b).count_ones() as u64;
        let expect = u64::from(w % p == r);
        let got = sparse.evaluate(a, b);
        if got != expect || indicator.eval_at_inner_product(w) != expect {
            result = Err(format!("trial {trial}: p={p} r={r} h={h} d={d}"));
            break;
        }
    }
    report(5, "amplified indicator", result);
}

#[test]
fn criterion_06_pipeline_vs_oracle() {
    let mut rng = StdRng::seed_from_u64(106);
    let mut result = Ok(());
    'outer: for trial in 0..200 {
        let n = rng.gen_range(8..=128);
        let d = rng.gen_range(2..=24);
        let a = random_set(&mut rng, n, d);
        let b = random_set(&mut rng, n, d);
        let expect = brute_histogram(&a, &b).unwrap();
        let isqrt = (n as f64).sqrt() as usize;
        for g in [1usize, isqrt.max(1), n] {
            let config = EngineConfig {
                block_size: Some(g),
                ..Default::default()
            };
            let got = count_by_inner_product(&a, &b, &config).unwrap();
            if got != expect {
                result = Err(format!("trial {trial}: n={n} d={d} g={g}"));
                break 'outer;
            }
        }
    }
    report(6, "pipeline vs brute oracle", result);
}

fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|g| n % g == 0).collect()
}

fn check_permanent_modes(m: &ZeroOneMatrix, label: &str) -> Result<(), String> {
    let expect = ryser(m).unwrap();
    let via_ip = permanent(m, PermanentMode::ViaIp).unwrap();
    ensure(via_ip == expect, format!("{label}: ip gave {via_ip}, want {expect}"))?;
    let via_ov = permanent(m, PermanentMode::ViaOv).unwrap();
    ensure(via_ov == expect, format!("{label}: ov gave {via_ov}, want {expect}"))?;
    // The grouped reduction must agree for every admissible grouping.
    let n = if m.side() % 2 == 1 || m.side() < 4 {
        (m.side() + 1).max(4) & !1
    } else {
        m.side()
    };
    for p in crt_primes(n) {
        let want = (expect.clone() % p).to_u64_digits().first().copied().unwrap_or(0);
        for g in divisors(n) {
            let padded = if n == m.side() { m.clone() } else { pad(m, n) };
            let got = perm_mod_p_via_ov(&padded, p, g).unwrap();
            ensure(
                got == want,
                format!("{label}: p={p} groups={g} gave {got}, want {want}"),
            )?;
        }
    }
    Ok(())
}

fn pad(m: &ZeroOneMatrix, to: usize) -> ZeroOneMatrix {
    let n = m.side();
    let rows: Vec<Vec<u8>> = (0..to)
        .map(|i| {
            (0..to)
                .map(|j| {
                    if i < n && j < n {
                        m.entry(i, j) as u8
                    } else {
                        u8::from(i == j)
                    }
                })
                .collect()
        })
        .collect();
    ZeroOneMatrix::from_rows(&rows).unwrap()
}

#[test]
fn criterion_07_permanent_agreement() {
    let mut result = Ok(());
    // Exhaustive over all side-3 matrices.
    'outer: for bits in 0u32..512 {
        let rows: Vec<Vec<u8>> = (0..3)
            .map(|i| (0..3).map(|j| (bits >> (3 * i + j) & 1) as u8).collect())
            .collect();
        let m = ZeroOneMatrix::from_rows(&rows).unwrap();
        if let Err(msg) = check_permanent_modes(&m, &format!("side-3 #{bits}")) {
            result = Err(msg);
            break 'outer;
        }
    }
    if result.is_ok() {
        let mut rng = StdRng::seed_from_u64(107);
        for trial in 0..2000 {
            let n = if rng.gen_bool(0.5) { 4 } else { 6 };
            let m = random_matrix(&mut rng, n);
            if let Err(msg) = check_permanent_modes(&m, &format!("random #{trial}")) {
                result = Err(msg);
                break;
            }
        }
    }
    report(7, "permanent mode agreement", result);
}

fn parity_masks(half: usize, sigma: i32) -> Vec<u64> {
    (0..1u64 << half)
        .filter(|s| (if s.count_ones() % 2 == 0 { 1 } else { -1 }) == sigma)
        .collect()
}

#[test]
fn criterion_08_dichotomy_audits() {
    let mut rng = StdRng::seed_from_u64(108);
    let mut result = Ok(());
    'outer: for trial in 0..20 {
        let m = random_matrix(&mut rng, 4);
        // Discrete-log instances: two-case rule with an empty gap.
        for p in [2u64, 3, 5] {
            let ctx = PrimeContext::new(p).unwrap();
            for (sl, sr) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let (a_set, b_set) = build_ip_instance(&m, &ctx, sl, sr).unwrap();
                let a_masks = parity_masks(2, sl);
                let b_masks = parity_masks(2, sr);
                for (ia, &am) in a_masks.iter().enumerate() {
                    for (ib, &bm) in b_masks.iter().enumerate() {
                        let sums: Vec<u64> = (0..4)
                            .map(|i| {
                                (0..4)
                                    .filter(|&j| (am | bm << 2) >> j & 1 == 1)
                                    .map(|j| m.entry(i, j))
                                    .sum::<u64>()
                                    % p
                            })
                            .collect();
                        let ip = a_set.inner_product(ia, &b_set, ib) as u64;
                        let ok = if sums.iter().all(|&s| s != 0) {
                            let logs: u64 = sums.iter().map(|&s| ctx.dlog(s)).sum();
                            ip == logs && ip <= 4 * (p - 2)
                        } else {
                            ip >= 4 * p
                        };
                        if !ok {
                            result = Err(format!(
                                "trial {trial}: p={p} signs=({sl},{sr}) ip={ip}"
                            ));
                            break 'outer;
                        }
                    }
                }
            }
        }
        // Grouped instances: inner product counts mismatched groups.
        for p in [2u64, 3] {
            for groups in [1usize, 2, 4] {
                let r: Vec<u64> = (0..groups).map(|_| rng.gen_range(0..p)).collect();
                for (sl, sr) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                    let (a_set, b_set) =
                        build_ov_instance(&m, p, groups, sl, sr, &r).unwrap();
                    let a_masks = parity_masks(2, sl);
                    let b_masks = parity_masks(2, sr);
                    let rows_per_group = 4 / groups;
                    for (ia, &am) in a_masks.iter().enumerate() {
                        for (ib, &bm) in b_masks.iter().enumerate() {
                            let union = am | bm << 2;
                            let mismatches = (0..groups)
                                .filter(|&h| {
                                    let mut prod = 1u64;
                                    for t in 0..rows_per_group {
                                        let i = h * rows_per_group + t;
                                        let rs = (0..4)
                                            .filter(|&j| union >> j & 1 == 1)
                                            .map(|j| m.entry(i, j))
                                            .sum::<u64>()
                                            % p;
                                        prod = prod * rs % p;
                                    }
                                    prod != r[h]
                                })
                                .count() as u32;
                            if a_set.inner_product(ia, &b_set, ib) != mismatches {
                                result = Err(format!(
                                    "trial {trial}: p={p} groups={groups} mismatch"
                                ));
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
    }
    report(8, "instance dichotomy audits", result);
}

#[test]
fn criterion_09_applications() {
    let mut result = Ok(());

    let hamming = LinearCode::from_rows(&[
        vec![1, 0, 0, 0, 1, 1, 0],
        vec![0, 1, 0, 0, 1, 0, 1],
        vec![0, 0, 1, 0, 0, 1, 1],
        vec![0, 0, 0, 1, 1, 1, 1],
    ])
    .unwrap();
    let golden = vec![1u64, 0, 0, 7, 7, 0, 0, 1];
    let got = weight_distribution(&hamming, PairCounter::Engine).unwrap();
    if got.counts != golden {
        result = Err(format!("Hamming [7,4] gave {:?}", got.counts));
    }

    let mut rng = StdRng::seed_from_u64(109);
    if result.is_ok() {
        for trial in 0..50 {
            let k = rng.gen_range(1..=12usize);
            let n = rng.gen_range(k..=k + 8);
            let code = loop {
                let rows: Vec<Vec<u8>> = (0..k)
                    .map(|_| (0..n).map(|_| rng.gen_range(0..2u8)).collect())
                    .collect();
                let c = LinearCode::from_rows(&rows).unwrap();
                if ipcount::apps::standardize_generator(&c).is_ok() {
                    break c;
                }
            };
            let counter = if trial % 2 == 0 {
                PairCounter::Engine
            } else {
                PairCounter::Brute
            };
            let fast = weight_distribution(&code, counter).unwrap();
            let slow = weight_brute(&code).unwrap();
            if fast != slow {
                result = Err(format!("code trial {trial}: k={k} n={n}"));
                break;
            }
        }
    }

    if result.is_ok() {
        for trial in 0..100 {
            let n = rng.gen_range(2..=16usize);
            let s = rng.gen_range(1..=10usize);
            let gates: Vec<Vec<i32>> = (0..s)
                .map(|_| {
                    let width = rng.gen_range(1..=3.min(n));
                    let mut lits: Vec<i32> = Vec::new();
                    while lits.len() < width {
                        let v = rng.gen_range(1..=n as i32);
                        if !lits.iter().any(|&l| l.abs() == v) {
                            lits.push(if rng.gen_bool(0.5) { v } else { -v });
                        }
                    }
                    lits
                })
                .collect();
            let top = match trial % 3 {
                0 => TopGate::Exact(rng.gen_range(0..=s)),
                1 => TopGate::Majority,
                _ => TopGate::Parity(rng.gen_range(0..2)),
            };
            let circuit = SymAndCircuit::new(n, gates, top).unwrap();
            let fast = symand_count(&circuit, PairCounter::Engine).unwrap();
            let slow = symand_brute(&circuit).unwrap();
            if fast != slow {
                result = Err(format!("circuit trial {trial}: n={n} s={s}"));
                break;
            }
        }
    }

    report(9, "circuit and code applications", result);
}

#[test]
fn criterion_10_thread_determinism() {
    let workload = || {
        let mut rng = StdRng::seed_from_u64(110);
        let a = random_set(&mut rng, 48, 12);
        let b = random_set(&mut rng, 48, 12);
        let hist = count_by_inner_product(&a, &b, &EngineConfig::default())
            .unwrap()
            .counts;
        let m = random_matrix(&mut rng, 5);
        let per = permanent(&m, PermanentMode::ViaIp).unwrap().to_string();
        let code = LinearCode::from_rows(&[vec![1, 1, 0, 1], vec![0, 1, 1, 1]]).unwrap();
        let weights = weight_distribution(&code, PairCounter::Engine)
            .unwrap()
            .counts;
        (hist, per, weights)
    };

    let mut outputs = Vec::new();
    for threads in [1usize, 4, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        outputs.push(pool.install(workload));
    }
    let ok = outputs.windows(2).all(|w| w[0] == w[1]);
    report(10, "determinism across thread counts", ensure(ok, "outputs differ"));
}
