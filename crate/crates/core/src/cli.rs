//! Command-line front end: file parsing, subcommand dispatch, and the
//! seeded self-test suite.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::json;

use crate::apps::{
    symand_brute, symand_count, weight_distribution, LinearCode, SymAndCircuit, TopGate,
};
use crate::engine::{brute_histogram, count_by_inner_product, EngineConfig, VectorSet};
use crate::permanent::{permanent, ryser, PairCounter, PermanentMode, ZeroOneMatrix};
use crate::reconstruct::{self, PrimeBasis};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "ipcount",
    about = "Exact pair counts of zero-one vectors by inner product, with permanent and coding applications"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Cell size for the blocked pipeline (default: fourth root of n).
    #[arg(long, global = true)]
    block_size: Option<usize>,

    /// Matrix multiplication strategy: naive | blocked.
    #[arg(long, global = true, default_value = "blocked")]
    strategy: String,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Emit JSON instead of plain text.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full inner-product histogram of two vector files.
    Count { a: PathBuf, b: PathBuf },
    /// Number of orthogonal pairs of two vector files.
    Ov { a: PathBuf, b: PathBuf },
    /// Exact permanent of a zero-one matrix.
    Permanent {
        matrix: PathBuf,
        /// ryser | ip | ov
        #[arg(long, default_value = "ryser")]
        mode: String,
    },
    /// Satisfying assignments of an AND-gate circuit under its top gate.
    Symand { circuit: PathBuf },
    /// Weight distribution of a binary linear code.
    Weights { code: PathBuf },
    /// Run the invariant suites with a reproducible seed.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Entry point; returns the process exit code: 0 on success, 1 on input
/// errors, 2 on internal consistency failures.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(output) => {
            println!("{output}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Inconsistent(_) => 2,
                _ => 1,
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<String> {
    #[cfg(feature = "parallel")]
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        // Ignore the error if a global pool already exists (e.g. tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = cli.threads;

    let config = EngineConfig {
        block_size: cli.block_size,
        strategy: cli.strategy.parse()?,
    };

    match &cli.command {
        Command::Count { a, b } => {
            let a = parse_vector_file(a)?;
            let b = parse_vector_file(b)?;
            let hist = count_by_inner_product(&a, &b, &config)?;
            if cli.json {
                Ok(json!({ "histogram": hist.counts }).to_string())
            } else {
                let mut out = String::new();
                for (t, c) in hist.counts.iter().enumerate() {
                    if t > 0 {
                        out.push(' ');
                    }
                    let _ = write!(out, "{t}:{c}");
                }
                Ok(out)
            }
        }
        Command::Ov { a, b } => {
            let a = parse_vector_file(a)?;
            let b = parse_vector_file(b)?;
            let zero = count_by_inner_product(&a, &b, &config)?.counts[0];
            if cli.json {
                Ok(json!({ "orthogonal_pairs": zero }).to_string())
            } else {
                Ok(zero.to_string())
            }
        }
        Command::Permanent { matrix, mode } => {
            let m = parse_matrix_file(matrix)?;
            let mode: PermanentMode = mode.parse()?;
            let value = permanent(&m, mode)?;
            if cli.json {
                Ok(json!({ "permanent": value.to_string() }).to_string())
            } else {
                Ok(value.to_string())
            }
        }
        Command::Symand { circuit } => {
            let c = parse_circuit_file(circuit)?;
            let count = symand_count(&c, PairCounter::Engine)?;
            if cli.json {
                Ok(json!({ "satisfying": count }).to_string())
            } else {
                Ok(count.to_string())
            }
        }
        Command::Weights { code } => {
            let c = parse_code_file(code)?;
            let dist = weight_distribution(&c, PairCounter::Engine)?;
            if cli.json {
                Ok(json!({ "weights": dist.counts }).to_string())
            } else {
                Ok(dist
                    .counts
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(" "))
            }
        }
        Command::Selftest { seed } => selftest(*seed, &config),
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect())
}

fn parse_bit_row(path: &Path, line: usize, text: &str) -> Result<Vec<u8>> {
    text.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(parse_err(path, line, format!("unexpected character '{other}'"))),
        })
        .collect()
}

/// One vector per line as a string of '0'/'1'; '#' lines are comments.
pub fn parse_vector_file(path: &Path) -> Result<VectorSet> {
    let lines = read_lines(path)?;
    let mut rows = Vec::with_capacity(lines.len());
    let mut width = None;
    for (line, text) in &lines {
        let row = parse_bit_row(path, *line, text)?;
        if *width.get_or_insert(row.len()) != row.len() {
            return Err(parse_err(path, *line, "ragged vector length"));
        }
        rows.push(row);
    }
    VectorSet::from_rows(&rows)
}

pub fn write_vector_file(path: &Path, set: &VectorSet) -> Result<()> {
    let mut out = String::new();
    for i in 0..set.len() {
        for j in 0..set.dim() {
            out.push(if set.get(i, j) { '1' } else { '0' });
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Header line `n`, then `n` rows of `n` characters '0'/'1'.
pub fn parse_matrix_file(path: &Path) -> Result<ZeroOneMatrix> {
    let lines = read_lines(path)?;
    let Some(((hline, header), rest)) = lines.split_first() else {
        return Err(parse_err(path, 1, "missing size header"));
    };
    let n: usize = header
        .parse()
        .map_err(|_| parse_err(path, *hline, "size header must be an integer"))?;
    if rest.len() != n {
        return Err(parse_err(
            path,
            *hline,
            format!("expected {n} rows, found {}", rest.len()),
        ));
    }
    let mut rows = Vec::with_capacity(n);
    for (line, text) in rest {
        let row = parse_bit_row(path, *line, text)?;
        if row.len() != n {
            return Err(parse_err(path, *line, format!("row must have {n} entries")));
        }
        rows.push(row);
    }
    ZeroOneMatrix::from_rows(&rows)
}

pub fn write_matrix_file(path: &Path, m: &ZeroOneMatrix) -> Result<()> {
    let n = m.side();
    let mut out = format!("{n}\n");
    for i in 0..n {
        for j in 0..n {
            out.push(if m.entry(i, j) == 1 { '1' } else { '0' });
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Header `symand <n> <s>`, then `s` zero-terminated literal lines, then
/// a `top ...` line.
pub fn parse_circuit_file(path: &Path) -> Result<SymAndCircuit> {
    let lines = read_lines(path)?;
    let Some(((hline, header), rest)) = lines.split_first() else {
        return Err(parse_err(path, 1, "missing circuit header"));
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (n, s) = match fields.as_slice() {
        ["symand", n, s] => (
            n.parse::<usize>()
                .map_err(|_| parse_err(path, *hline, "input count must be an integer"))?,
            s.parse::<usize>()
                .map_err(|_| parse_err(path, *hline, "gate count must be an integer"))?,
        ),
        _ => return Err(parse_err(path, *hline, "header must be 'symand <n> <s>'")),
    };
    if rest.len() != s + 1 {
        return Err(parse_err(
            path,
            *hline,
            format!("expected {s} gate lines and a top line"),
        ));
    }

    let mut gates = Vec::with_capacity(s);
    for (line, text) in &rest[..s] {
        let mut literals = Vec::new();
        let mut terminated = false;
        for token in text.split_whitespace() {
            let lit: i32 = token
                .parse()
                .map_err(|_| parse_err(path, *line, format!("bad literal '{token}'")))?;
            if lit == 0 {
                terminated = true;
                break;
            }
            literals.push(lit);
        }
        if !terminated {
            return Err(parse_err(path, *line, "gate line must end with 0"));
        }
        gates.push(literals);
    }

    let (tline, ttext) = &rest[s];
    let tokens: Vec<&str> = ttext.split_whitespace().collect();
    let top = match tokens.as_slice() {
        ["top", "exact", t] => TopGate::Exact(
            t.parse()
                .map_err(|_| parse_err(path, *tline, "bad exact count"))?,
        ),
        ["top", "majority"] => TopGate::Majority,
        ["top", "parity", b] => match *b {
            "0" => TopGate::Parity(0),
            "1" => TopGate::Parity(1),
            _ => return Err(parse_err(path, *tline, "parity must be 0 or 1")),
        },
        ["top", "set", counts @ ..] if !counts.is_empty() => TopGate::Set(
            counts
                .iter()
                .map(|t| {
                    t.parse()
                        .map_err(|_| parse_err(path, *tline, format!("bad count '{t}'")))
                })
                .collect::<Result<_>>()?,
        ),
        _ => return Err(parse_err(path, *tline, "unrecognized top gate line")),
    };
    SymAndCircuit::new(n, gates, top)
        .map_err(|e| parse_err(path, *hline, e.to_string()))
}

pub fn write_circuit_file(path: &Path, c: &SymAndCircuit) -> Result<()> {
    let mut out = format!("symand {} {}\n", c.n, c.gates.len());
    for gate in &c.gates {
        for lit in gate {
            let _ = write!(out, "{lit} ");
        }
        out.push_str("0\n");
    }
    match &c.top {
        TopGate::Exact(t) => {
            let _ = writeln!(out, "top exact {t}");
        }
        TopGate::Majority => out.push_str("top majority\n"),
        TopGate::Parity(b) => {
            let _ = writeln!(out, "top parity {b}");
        }
        TopGate::Set(counts) => {
            out.push_str("top set");
            for t in counts {
                let _ = write!(out, " {t}");
            }
            out.push('\n');
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Header `<k> <n>`, then `k` generator rows of `n` characters '0'/'1'.
pub fn parse_code_file(path: &Path) -> Result<LinearCode> {
    let lines = read_lines(path)?;
    let Some(((hline, header), rest)) = lines.split_first() else {
        return Err(parse_err(path, 1, "missing code header"));
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [k, n] = fields.as_slice() else {
        return Err(parse_err(path, *hline, "header must be '<k> <n>'"));
    };
    let k: usize = k
        .parse()
        .map_err(|_| parse_err(path, *hline, "rank must be an integer"))?;
    let n: usize = n
        .parse()
        .map_err(|_| parse_err(path, *hline, "length must be an integer"))?;
    if rest.len() != k {
        return Err(parse_err(
            path,
            *hline,
            format!("expected {k} generator rows, found {}", rest.len()),
        ));
    }
    let mut rows = Vec::with_capacity(k);
    for (line, text) in rest {
        let row = parse_bit_row(path, *line, text)?;
        if row.len() != n {
            return Err(parse_err(path, *line, format!("row must have {n} entries")));
        }
        rows.push(row);
    }
    LinearCode::from_rows(&rows)
}

pub fn write_code_file(path: &Path, c: &LinearCode) -> Result<()> {
    let mut out = format!("{} {}\n", c.k, c.n);
    for &row in &c.rows {
        for j in 0..c.n {
            out.push(if row >> j & 1 == 1 { '1' } else { '0' });
        }
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn random_vectors(rng: &mut StdRng, n: usize, d: usize) -> VectorSet {
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

/// Seeded invariant suites; prints one line per check and fails with a
/// consistency error if any check does not hold.
fn selftest(seed: u64, config: &EngineConfig) -> Result<String> {
    let mut out = String::new();
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool, out: &mut String| {
        let _ = writeln!(out, "{} {name}", if ok { "ok" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    let mut rng = StdRng::seed_from_u64(seed);

    let decomposition_ok = reconstruct::uv_max_error(&PrimeBasis::from_primes(vec![2, 3, 5])?) < 1e-9;
    check("aggregation-matrix decomposition", decomposition_ok, &mut out);

    let mut round_trip = true;
    for _ in 0..50 {
        let d = rng.gen_range(1..=30);
        let basis = PrimeBasis::for_dimension(d);
        let counts = reconstruct::CountVector {
            values: (0..basis.capacity())
                .map(|_| rng.gen_range(0..1u64 << 30))
                .collect(),
        };
        let agg = reconstruct::aggregate(&counts, &basis)?;
        round_trip &= reconstruct::reconstruct(&agg, &basis)? == counts;
    }
    check("reconstruction round trip", round_trip, &mut out);

    let mut pipeline_ok = true;
    for _ in 0..20 {
        let n = rng.gen_range(2..=48);
        let d = rng.gen_range(1..=14);
        let a = random_vectors(&mut rng, n, d);
        let b = random_vectors(&mut rng, n, d);
        pipeline_ok &= count_by_inner_product(&a, &b, config)? == brute_histogram(&a, &b)?;
    }
    check("pipeline matches brute oracle", pipeline_ok, &mut out);

    let mut perm_ok = true;
    for _ in 0..5 {
        let n = rng.gen_range(1..=5);
        let rows: Vec<Vec<u8>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(0..2u8)).collect())
            .collect();
        let m = ZeroOneMatrix::from_rows(&rows)?;
        let expect = ryser(&m)?;
        perm_ok &= permanent(&m, PermanentMode::ViaIp)? == expect;
        perm_ok &= permanent(&m, PermanentMode::ViaOv)? == expect;
    }
    check("permanent reductions match Ryser", perm_ok, &mut out);

    let mut apps_ok = true;
    for _ in 0..5 {
        let n = rng.gen_range(2..=8);
        let s = rng.gen_range(1..=5);
        let gates: Vec<Vec<i32>> = (0..s)
            .map(|_| {
                let v = rng.gen_range(1..=n as i32);
                vec![if rng.gen_bool(0.5) { v } else { -v }]
            })
            .collect();
        let c = SymAndCircuit::new(n, gates, TopGate::Majority)?;
        apps_ok &= symand_count(&c, PairCounter::Engine)? == symand_brute(&c)?;
    }
    check("circuit counting matches truth table", apps_ok, &mut out);

    if failures > 0 {
        print!("{out}");
        return Err(Error::inconsistent(format!(
            "{failures} selftest check(s) failed (seed {seed})"
        )));
    }
    let _ = write!(out, "all checks passed (seed {seed})");
    Ok(out)
}
