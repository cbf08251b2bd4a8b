//! pmaplab: exact principal-minor tooling on the command line.
//!
//! Subcommands wrap the library pipelines: instance generation, black-box
//! PMAP solving, read-once determinant learning, PME testing, cut search,
//! and oracle-driven reconstruction. All randomness flows from `--seed`
//! through labeled streams, so identical invocations produce byte-identical
//! stdout. Wall-clock timings only ever go to `--stats` files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pmaplab_core::combinat::subsets_size_then_lex;
use pmaplab_core::{
    banded_gap_pair, choose_prime, cycle_gap_pair, find_cut_explicit, find_plausible_set,
    gen_planted_cut, gen_random_dense, gen_rod_instance, geometric_gap_pair, learn_rod,
    minimal_plausible_set, pme_bruteforce, pme_randomized, pme_upto4, reconstruct_prop_r_with_stats,
    solve_blackbox_pmap_run, stream_rng, submatrix_family, test_pme, AnyMatrix, AnyRod, Field,
    Matrix, PMOracle, PolyBox, PrimeField, RationalField, RodInstance, STREAM_ISOLATION,
    STREAM_SHIFT,
};
use serde_json::{json, Value};

/// Exit status 1 marks a negative verdict (unequal, check failed, no cut);
/// errors exit 2, matching clap's own usage-error code.
const VERDICT_NO: u8 = 1;

#[derive(Parser)]
#[command(name = "pmaplab", version, about = "Exact principal-minor toolkit: PMAP solving, read-once determinant learning, PME testing")]
struct RunConfig {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a matrix, planted-cut matrix, ROD instance, or fixture pair
    Gen(GenCmd),
    /// Learn a matrix from determinant-evaluation access alone
    SolvePmap(SolveCmd),
    /// Learn a read-once determinant representation from evaluations
    LearnRod(LearnRodCmd),
    /// Decide principal minor equivalence of two explicit matrices
    TestPme(TestPmeCmd),
    /// Search a matrix for a cut (rank-one off-diagonal split)
    FindCut(FindCutCmd),
    /// Rebuild a matrix from its principal-minor oracle
    Reconstruct(ReconstructCmd),
    /// Verification harness: brute-force, order-4, or randomized PME
    Verify(VerifyCmd),
}

/// Field choice on the command line: `rational`, or a prime modulus given
/// as `prime:P` or a bare integer. Absent means choose_prime(n).
#[derive(Clone, Copy, Debug)]
enum FieldArg {
    Prime(u64),
    Rational,
}

fn parse_field(s: &str) -> std::result::Result<FieldArg, String> {
    if s.eq_ignore_ascii_case("rational") || s == "q" {
        return Ok(FieldArg::Rational);
    }
    let digits = s.strip_prefix("prime:").unwrap_or(s);
    digits
        .parse::<u64>()
        .map(FieldArg::Prime)
        .map_err(|_| format!("expected \"rational\", \"prime:P\", or a modulus, got {s:?}"))
}

fn field_or_default(arg: Option<FieldArg>, n: usize) -> FieldArg {
    arg.unwrap_or_else(|| FieldArg::Prime(choose_prime(n)))
}

/// Run `$body` with `$f` bound to the concrete field named by a FieldArg.
macro_rules! with_field {
    ($fa:expr, |$f:ident| $body:expr) => {
        match $fa {
            FieldArg::Prime(p) => {
                let $f = PrimeField::new(p)?;
                $body
            }
            FieldArg::Rational => {
                let $f = RationalField;
                $body
            }
        }
    };
}

/// Run `$body` with `$m` bound to the concrete matrix inside an AnyMatrix.
macro_rules! with_any {
    ($any:expr, |$m:ident| $body:expr) => {
        match $any {
            AnyMatrix::Prime($m) => $body,
            AnyMatrix::Rational($m) => $body,
        }
    };
}

/// As `with_any`, over a pair that must share a field.
macro_rules! with_any_pair {
    ($a:expr, $b:expr, |$x:ident, $y:ident| $body:expr) => {
        match ($a, $b) {
            (AnyMatrix::Prime($x), AnyMatrix::Prime($y)) => $body,
            (AnyMatrix::Rational($x), AnyMatrix::Rational($y)) => $body,
            _ => bail!("the two matrices use different fields"),
        }
    };
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenKind {
    /// dense square matrix, entries i.i.d. uniform, resampled until dense
    Dense,
    /// dense blocks joined by rank-one couplings; cuts given by --splits
    PlantedCut,
    /// read-once determinant instance with r factor matrices
    Rod,
    /// directed n-cycle pair: minors agree below order n, differ at n
    CyclePair,
    /// banded pair agreeing on minors up to order n-1 but not PME
    BandedPair,
    /// geometric pair agreeing on minors up to order 4 but not PME
    GeometricPair,
}

#[derive(Args)]
struct GenCmd {
    #[arg(long, value_enum)]
    kind: GenKind,
    /// matrix size (labels 1..=n)
    #[arg(long)]
    n: usize,
    /// planted-cut sizes, outermost first; each recurses into the left block
    #[arg(long, value_delimiter = ',')]
    splits: Vec<usize>,
    /// factor count for --kind rod
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, value_parser = parse_field)]
    field: Option<FieldArg>,
    /// required for the randomized kinds (dense, planted-cut, rod)
    #[arg(long)]
    seed: Option<u64>,
    /// write here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveGen {
    Dense,
    PlantedCut,
}

#[derive(Args)]
struct SolveCmd {
    /// matrix file whose det(A+Y) evaluations drive the solver
    #[arg(long, conflicts_with = "gen")]
    input: Option<PathBuf>,
    /// generate the hidden matrix in-process instead of reading a file
    #[arg(long, value_enum, requires = "n")]
    gen: Option<SolveGen>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    splits: Vec<usize>,
    #[arg(long, value_parser = parse_field)]
    field: Option<FieldArg>,
    #[arg(long)]
    seed: u64,
    /// compare the output against the hidden matrix before exiting
    #[arg(long, value_enum)]
    check: Option<SolveCheck>,
    /// random evaluation points for --check minors
    #[arg(long, default_value_t = 50)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// write query counts, retry counters, and phase timings here
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveCheck {
    /// full PME by scanning all principal minors (n <= 14)
    Brute,
    /// all minors of order <= 4 plus random-point determinant agreement
    Minors,
}

#[derive(Args)]
struct LearnRodCmd {
    /// ROD instance file; its evaluator becomes the black box
    #[arg(long, conflicts_with = "gen")]
    input: Option<PathBuf>,
    /// generate the hidden instance in-process (--n, --r)
    #[arg(long, requires = "n", requires = "r")]
    gen: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, value_parser = parse_field)]
    field: Option<FieldArg>,
    #[arg(long)]
    seed: u64,
    /// compare learned vs hidden on all 2^n zero/one points (exact for
    /// multilinear f)
    #[arg(long, value_enum)]
    check: Option<RodCheck>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RodCheck {
    Coefficients,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PairKind {
    Cycle,
    Banded,
    Geometric,
}

/// Where a matrix pair comes from: two files, a file plus a cut-transpose
/// derivation, or a named fixture pair.
#[derive(Args)]
struct PairSource {
    /// left matrix file
    #[arg(long)]
    a: Option<PathBuf>,
    /// right matrix file
    #[arg(long, conflicts_with_all = ["cut_transpose", "pair_gen"])]
    b: Option<PathBuf>,
    /// derive the right matrix as the cut-transpose of the left across
    /// these labels
    #[arg(long, value_delimiter = ',', value_name = "LABELS")]
    cut_transpose: Option<Vec<usize>>,
    /// generate a fixture pair instead of reading files
    #[arg(long, value_enum, conflicts_with = "a", requires = "n")]
    pair_gen: Option<PairKind>,
    /// size for --pair-gen
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_parser = parse_field)]
    field: Option<FieldArg>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// deterministic tester (adjugate shifts + order-4 recursion)
    Det,
    /// scan all principal minors (n <= 14)
    Brute,
    /// random diagonal evaluations; one-sided, needs --seed
    Rand,
}

#[derive(Args)]
struct TestPmeCmd {
    #[command(flatten)]
    pair: PairSource,
    #[arg(long, value_enum, default_value_t = Method::Det)]
    method: Method,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    /// required for --method rand
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FindCutCmd {
    #[arg(long)]
    input: PathBuf,
    /// search order-<=4 oracle data only, never raw entries
    #[arg(long)]
    oracle_only: bool,
    /// shrink the oracle-path answer to a locally minimal set
    #[arg(long, requires = "oracle_only")]
    minimal: bool,
}

#[derive(Args)]
struct ReconstructCmd {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VerifyMode {
    /// all principal minors, exact (n <= 14)
    Brute,
    /// orders <= 4 against the left matrix's oracle
    Upto4,
    /// random diagonal evaluations; needs --seed
    Rand,
}

#[derive(Args)]
struct VerifyCmd {
    #[command(flatten)]
    pair: PairSource,
    #[arg(long, value_enum)]
    mode: VerifyMode,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(&cfg) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("PMAPLAB_THREADS") else { return Ok(()) };
    let k: usize = v.parse().with_context(|| format!("PMAPLAB_THREADS={v:?} is not a number"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(k)
        .build_global()
        .context("rayon pool already initialized")?;
    Ok(())
}

fn run(cfg: &RunConfig) -> Result<u8> {
    match &cfg.cmd {
        Cmd::Gen(c) => run_gen(c),
        Cmd::SolvePmap(c) => run_solve(c),
        Cmd::LearnRod(c) => run_learn_rod(c),
        Cmd::TestPme(c) => run_test_pme(c),
        Cmd::FindCut(c) => run_find_cut(c),
        Cmd::Reconstruct(c) => run_reconstruct(c),
        Cmd::Verify(c) => run_verify(c),
    }
}

/// One-line JSON to a file or stdout. serde_json maps are BTreeMaps, so key
/// order (and therefore the byte stream) is deterministic.
fn emit(v: &Value, out: Option<&Path>) -> Result<()> {
    let line = format!("{v}\n");
    match out {
        Some(p) => fs::write(p, line).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{line}"),
    }
    Ok(())
}

/// Side artifact written only when a path was given (stats files, and the
/// bare output of solve-pmap / learn-rod whose stdout is a report).
fn write_aside(v: &Value, path: Option<&Path>) -> Result<()> {
    if let Some(p) = path {
        fs::write(p, format!("{v}\n")).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn load_matrix(path: &Path) -> Result<AnyMatrix> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(AnyMatrix::from_json_str(&text)?)
}

fn load_rod(path: &Path) -> Result<AnyRod> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(AnyRod::from_json_str(&text)?)
}

fn need_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.with_context(|| format!("--seed is required for {what}"))
}

fn run_gen(c: &GenCmd) -> Result<u8> {
    let fa = field_or_default(c.field, c.n);
    let v = with_field!(fa, |f| gen_value(&f, c)?);
    emit(&v, c.out.as_deref())?;
    Ok(0)
}

fn gen_value<F: Field>(f: &F, c: &GenCmd) -> Result<Value> {
    let pair = |(a, b): (Matrix<F>, Matrix<F>)| json!({ "a": a.to_json(), "b": b.to_json() });
    Ok(match c.kind {
        GenKind::Dense => gen_random_dense(f, c.n, need_seed(c.seed, "--kind dense")?)?.to_json(),
        GenKind::PlantedCut => {
            gen_planted_cut(f, c.n, &c.splits, need_seed(c.seed, "--kind planted-cut")?)?.to_json()
        }
        GenKind::Rod => {
            let r = c.r.context("--kind rod needs --r")?;
            gen_rod_instance(f, c.n, r, need_seed(c.seed, "--kind rod")?)?.to_json()
        }
        GenKind::CyclePair => pair(cycle_gap_pair(f, c.n)?),
        GenKind::BandedPair => pair(banded_gap_pair(f, c.n)?),
        GenKind::GeometricPair => pair(geometric_gap_pair(f, c.n)?),
    })
}

fn run_solve(c: &SolveCmd) -> Result<u8> {
    match (&c.input, c.gen) {
        (Some(path), None) => {
            let any = load_matrix(path)?;
            with_any!(any, |a| solve_one(a, c))
        }
        (None, Some(kind)) => {
            let n = c.n.unwrap();
            let fa = field_or_default(c.field, n);
            with_field!(fa, |f| {
                let a = match kind {
                    SolveGen::Dense => gen_random_dense(&f, n, c.seed)?,
                    SolveGen::PlantedCut => gen_planted_cut(&f, n, &c.splits, c.seed)?,
                };
                solve_one(a, c)
            })
        }
        _ => bail!("exactly one of --input and --gen is required"),
    }
}

fn solve_one<F: Field>(a: Matrix<F>, c: &SolveCmd) -> Result<u8> {
    let bx = PolyBox::from_matrix(&a);
    let mut rng = stream_rng(c.seed, STREAM_SHIFT);
    let mut run = solve_blackbox_pmap_run(&bx, &mut rng)?;
    run.seed = Some(c.seed);

    let (check, code) = match c.check {
        None => (Value::Null, 0),
        Some(SolveCheck::Brute) => {
            let verdict = pme_bruteforce(&run.output, &a)?;
            let code = if verdict.equal { 0 } else { VERDICT_NO };
            (verdict.to_json(), code)
        }
        Some(SolveCheck::Minors) => {
            let f = a.field();
            let mut equal = subsets_size_then_lex(a.index())
                .take_while(|s| s.len() <= 4)
                .all(|s| a.principal_minor(&s) == run.output.principal_minor(&s));
            let mut point_rng = stream_rng(c.seed, "check");
            for _ in 0..c.points {
                if !equal {
                    break;
                }
                let d: Vec<F::Elem> = (0..a.n()).map(|_| f.sample(&mut point_rng)).collect();
                equal = a.plus_diag(&d).det() == run.output.plus_diag(&d).det();
            }
            let code = if equal { 0 } else { VERDICT_NO };
            (json!({ "equal": equal, "method": "minors", "orders": 4, "points": c.points }), code)
        }
    };

    emit(&json!({ "check": check, "output": run.output.to_json() }), None)?;
    write_aside(&run.output.to_json(), c.out.as_deref())?;
    let s = &run.stats;
    let t = &run.timings;
    write_aside(
        &json!({
            "seed": c.seed,
            "attempts": s.attempts,
            "retries": s.retries,
            "singular_shifts": s.singular_shifts,
            "transitivity_failures": s.transitivity_failures,
            "reconstruct_failures": s.reconstruct_failures,
            "assembly_failures": s.assembly_failures,
            "verify_failures": s.verify_failures,
            "blocks": s.blocks,
            "combine_count": s.combine_count,
            "no_cut_calls": s.no_cut_calls,
            "box_queries": s.box_queries,
            "block_labels": run.blocks.iter().map(|(ls, _)| json!(ls)).collect::<Vec<_>>(),
            "timings_ms": {
                "shift": t.shift.as_secs_f64() * 1e3,
                "blocks": t.blocks.as_secs_f64() * 1e3,
                "reconstruct": t.reconstruct.as_secs_f64() * 1e3,
                "verify": t.verify.as_secs_f64() * 1e3,
            },
        }),
        c.stats.as_deref(),
    )?;
    Ok(code)
}

fn run_learn_rod(c: &LearnRodCmd) -> Result<u8> {
    if c.gen {
        let (n, r) = (c.n.unwrap(), c.r.unwrap());
        let fa = field_or_default(c.field, n);
        with_field!(fa, |f| learn_one(gen_rod_instance(&f, n, r, c.seed)?, c))
    } else {
        let path = c.input.as_ref().context("exactly one of --input and --gen is required")?;
        match load_rod(path)? {
            AnyRod::Prime(inst) => learn_one(inst, c),
            AnyRod::Rational(inst) => learn_one(inst, c),
        }
    }
}

fn learn_one<F: Field>(inst: RodInstance<F>, c: &LearnRodCmd) -> Result<u8> {
    let bx = inst.to_box();
    let mut rng = stream_rng(c.seed, STREAM_ISOLATION);
    let learned = learn_rod(&bx, &mut rng)?;

    let (check, code) = match c.check {
        None => (Value::Null, 0),
        Some(RodCheck::Coefficients) => {
            // det(B0 + sum y_i B_i) with rank-one B_i is multilinear, so
            // agreement on {0,1}^n pins every coefficient.
            if inst.n > 20 {
                bail!("--check coefficients needs n <= 20 (2^n evaluations)");
            }
            let f = inst.field().clone();
            let equal = (0u64..1 << inst.n).all(|bits| {
                let y: Vec<F::Elem> = (0..inst.n)
                    .map(|i| if bits >> i & 1 == 1 { f.one() } else { f.zero() })
                    .collect();
                inst.eval(&y) == learned.eval(&y)
            });
            let code = if equal { 0 } else { VERDICT_NO };
            (json!({ "equal": equal, "method": "coefficients", "points": 1u64 << inst.n }), code)
        }
    };

    emit(&json!({ "check": check, "output": learned.to_json() }), None)?;
    write_aside(&learned.to_json(), c.out.as_deref())?;
    write_aside(&json!({ "seed": c.seed, "box_queries": bx.queries() }), c.stats.as_deref())?;
    Ok(code)
}

fn load_pair(src: &PairSource) -> Result<(AnyMatrix, AnyMatrix)> {
    if let Some(kind) = src.pair_gen {
        let n = src.n.unwrap();
        return Ok(match field_or_default(src.field, n) {
            FieldArg::Prime(p) => {
                let f = PrimeField::new(p)?;
                let (a, b) = fixture_pair(&f, kind, n)?;
                (AnyMatrix::Prime(a), AnyMatrix::Prime(b))
            }
            FieldArg::Rational => {
                let (a, b) = fixture_pair(&RationalField, kind, n)?;
                (AnyMatrix::Rational(a), AnyMatrix::Rational(b))
            }
        });
    }
    let a = load_matrix(src.a.as_ref().context("--a is required without --pair-gen")?)?;
    if let Some(x) = &src.cut_transpose {
        return Ok(match a {
            AnyMatrix::Prime(m) => {
                let t = m.cut_transpose(x)?;
                (AnyMatrix::Prime(m), AnyMatrix::Prime(t))
            }
            AnyMatrix::Rational(m) => {
                let t = m.cut_transpose(x)?;
                (AnyMatrix::Rational(m), AnyMatrix::Rational(t))
            }
        });
    }
    let b = load_matrix(src.b.as_ref().context("--b, --cut-transpose, or --pair-gen is required")?)?;
    Ok((a, b))
}

fn fixture_pair<F: Field>(f: &F, kind: PairKind, n: usize) -> Result<(Matrix<F>, Matrix<F>)> {
    match kind {
        PairKind::Cycle => Ok(cycle_gap_pair(f, n)?),
        PairKind::Banded => Ok(banded_gap_pair(f, n)?),
        PairKind::Geometric => Ok(geometric_gap_pair(f, n)?),
    }
}

fn run_test_pme(c: &TestPmeCmd) -> Result<u8> {
    let (a, b) = load_pair(&c.pair)?;
    let verdict = with_any_pair!(a, b, |x, y| match c.method {
        Method::Det => test_pme(&x, &y)?,
        Method::Brute => pme_bruteforce(&x, &y)?,
        Method::Rand => {
            let seed = need_seed(c.seed, "--method rand")?;
            pme_randomized(&x, &y, &mut stream_rng(seed, STREAM_SHIFT), c.samples)
        }
    });
    emit(&verdict.to_json(), None)?;
    Ok(if verdict.equal { 0 } else { VERDICT_NO })
}

fn run_find_cut(c: &FindCutCmd) -> Result<u8> {
    let any = load_matrix(&c.input)?;
    let v = with_any!(any, |a| if c.oracle_only {
        if a.n() < 4 {
            json!({ "cut": Value::Null, "method": "oracle", "queries": 0 })
        } else {
            let pm = PMOracle::from_matrix(&a);
            let fam = submatrix_family(&pm, a.index())?;
            let found = if c.minimal {
                minimal_plausible_set(a.index(), &fam)
            } else {
                find_plausible_set(a.index(), &fam)
            };
            json!({
                "cut": found.map_or(Value::Null, |ps| json!(ps.set)),
                "method": "oracle",
                "queries": pm.queries(),
            })
        }
    } else {
        json!({
            "cut": find_cut_explicit(&a).map_or(Value::Null, |x| json!(x)),
            "method": "explicit",
        })
    });
    emit(&v, None)?;
    Ok(if v["cut"].is_null() { VERDICT_NO } else { 0 })
}

fn run_reconstruct(c: &ReconstructCmd) -> Result<u8> {
    let any = load_matrix(&c.input)?;
    with_any!(any, |a| {
        let pm = PMOracle::from_matrix(&a);
        let (b, rs) = reconstruct_prop_r_with_stats(&pm)?;
        emit(&b.to_json(), c.out.as_deref())?;
        write_aside(
            &json!({
                "queries": pm.queries(),
                "combines": rs.combines,
                "no_cut_calls": rs.no_cut_calls,
            }),
            c.stats.as_deref(),
        )?;
    });
    Ok(0)
}

fn run_verify(c: &VerifyCmd) -> Result<u8> {
    let (a, b) = load_pair(&c.pair)?;
    let (v, equal) = with_any_pair!(a, b, |x, y| match c.mode {
        VerifyMode::Brute => {
            let verdict = pme_bruteforce(&x, &y)?;
            (verdict.to_json(), verdict.equal)
        }
        VerifyMode::Upto4 => {
            let pm = PMOracle::from_matrix(&x);
            let equal = pme_upto4(&pm, &y)?;
            (
                json!({
                    "equal": equal,
                    "method": "upto4",
                    "queries": pm.queries(),
                    "witness": Value::Null,
                }),
                equal,
            )
        }
        VerifyMode::Rand => {
            let seed = need_seed(c.seed, "--mode rand")?;
            let verdict =
                pme_randomized(&x, &y, &mut stream_rng(seed, STREAM_SHIFT), c.samples);
            (verdict.to_json(), verdict.equal)
        }
    });
    emit(&v, None)?;
    Ok(if equal { 0 } else { VERDICT_NO })
}
