//! Subcommands and their report layouts.

use std::path::PathBuf;

use cantor_core::digits::enclose_prefix;
use cantor_core::dim::{
    level_measure_sum, level_set_report, multifractal_witness, range_report, rationality_report, wegmann_estimate, zpq_dim_bounds,
    Convergence, LevelBranch, LevelFiniteness, RationalityCase, RestrictionSpec, TailForm,
};
use cantor_core::foundry::{counterexample_stream, mff_stream, qnex_stream, rdn_stream, CounterMode, StageParams};
use cantor_core::normal::{normality_report, ud_report, UdMode, UdReport};
use cantor_core::psi::{
    approximant_eval, bv_check, classify_continuity, holder_report, monotonicity_witness, psi_map, variation_exact, BvVerdict, HolderVerdict,
    SetTag, Status, VariationMethod,
};
use cantor_core::seq::{birkhoff_report, default_checkpoints};
use cantor_core::{BasicSeq, DigitStream, MeasureSpec, Nat, Rat};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use serde_json::{json, Value};

use crate::emit::{bracket, dim_csv_rows, dim_json, f64_str, json_bytes, num, pgm, rat_str, sci, trend, Csv};
use crate::render::{render_psi_grid, DEFAULT_DEPTH};
use crate::spec::{digits_from_value, parse_digit_spec, parse_json, parse_mff_spec, parse_rational, read_arg, seq_from_value};
use crate::{CliError, Output, Verdict};

#[derive(Parser, Debug)]
#[command(name = "cantor", version, about = "Exact evaluators for Cantor series expansions and the digit map psi_{P,Q}")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Pgm,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Torbit,
    Ratio,
}

/// Inputs shared by every subcommand.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Base `P` as JSON, or `@file`.
    #[arg(long)]
    pub p: Option<String>,
    /// Base `Q` as JSON, or `@file`.
    #[arg(long)]
    pub q: Option<String>,
    /// Digit stream: a rational such as `7/8`, a digit-spec JSON object, or `@file`.
    #[arg(long)]
    pub x: Option<String>,
    /// JSON object with optional keys "p", "q" and "x"; flags take precedence.
    #[arg(long)]
    pub spec_file: Option<PathBuf>,
    /// Output path; standard output when omitted.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Digits of x over Q.
    Digits {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        n: u64,
    },
    /// psi_{P_t,Q_t}(x), an enclosure of psi_{P,Q}(x) and the left-continuity verdict at terminating x.
    PsiEval {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: u64,
        /// Terms of the tail series bracket for non-periodic bases.
        #[arg(long, default_value_t = 200)]
        tail_horizon: u64,
    },
    /// Pixel grid of psi_{P,Q} on [0,1).
    PsiPlot {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 500)]
        pixels: usize,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: u64,
    },
    /// Block counts N_n(B) / Q_n^(k) for all blocks of length k over {0,...,b-1}, plus discrepancy.
    Normality {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long)]
        b: u64,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, value_enum, default_value_t = Mode::Ratio)]
        mode: Mode,
    },
    /// Star discrepancy of T_{Q,n}(x) or E_n/q_n at checkpoints.
    Discrepancy {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, value_enum, default_value_t = Mode::Torbit)]
        mode: Mode,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
    },
    /// Digits of the explicit constructions.
    Construct {
        #[command(subcommand)]
        which: Construction,
    },
    /// Finite-horizon dimension and measure estimates.
    Dimension {
        #[command(subcommand)]
        which: Dimension,
    },
    /// Rationality preservation case, exceptional-set measure and dimension.
    Rationality {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
    },
    /// Exact total variation of psi_{P_t,Q_t} for t = 1..=T.
    Variation {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8)]
        t: u64,
    },
    /// Bounded-variation double series with its tail bound.
    Bv {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
    },
    /// Growth of the two Hölder expressions.
    Holder {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        k: u64,
        /// Exponent in (0, 1], e.g. 1/2.
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 1000)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
    },
    /// Points c < x < y in a cell with psi(c) < psi(x) > psi(y).
    MonotoneWitness {
        #[command(flatten)]
        common: Common,
        /// Leading P-digits of the cell.
        #[arg(long, value_delimiter = ',')]
        cell: Vec<u64>,
        #[arg(long, default_value_t = 1000)]
        n: u64,
    },
    /// Seeded IID uniform sample on {lo,...,hi}.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lo: u64,
        #[arg(long)]
        hi: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        n: u64,
    },
    /// Birkhoff averages of log p and log q and the log product ratio.
    Birkhoff {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Stages {
    #[arg(long, default_value_t = 6)]
    pub first_stage: u32,
    #[arg(long, default_value_t = 4)]
    pub rep_coeff: u32,
    #[arg(long, default_value_t = 2)]
    pub width_exp: u32,
}

impl Stages {
    fn params(&self) -> StageParams {
        StageParams { first_stage: self.first_stage, rep_coeff: self.rep_coeff, width_exp: self.width_exp }
    }
}

#[derive(Subcommand, Debug)]
pub enum Construction {
    /// Base P and zeta.
    Qnex {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        stages: Stages,
        #[arg(long, default_value_t = 100)]
        n: u64,
    },
    /// Base Q and psi_{P,Q}(zeta).
    Rdn {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        stages: Stages,
        #[arg(long, default_value_t = 100)]
        n: u64,
    },
    /// p_n = max(floor(ln q_n), 2), y = psi_{P,Q}(psi_{Q,P}(x)).
    Nnotdn {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        n: u64,
    },
    /// p_n = max(floor(q_n/2), 2), y = psi_{P,Q}(x) with x read over P.
    Rnnotn {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        n: u64,
    },
    /// p_n = q_n - 1, y digits min(E_n, q_n - 2) + 1.
    Dnnotrn {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        n: u64,
    },
    /// Finite MFF given as {"stages":[{"l":..,"b":..,"x":[..]}, ...]}.
    Mff {
        #[command(flatten)]
        common: Common,
        /// MFF JSON, or `@file`.
        #[arg(long)]
        mff: String,
        #[arg(long, default_value_t = 100)]
        n: u64,
    },
}

#[derive(Subcommand, Debug)]
pub enum Dimension {
    /// dim_H of {x : E_n in I_n} for a restriction I_n.
    Wegmann {
        #[command(flatten)]
        common: Common,
        /// {"kind":"constant","value":a} (I_n = {0..a-1}) or {"kind":"min","p":<base>} (I_n = {0..min(p_n,q_n)-1}).
        #[arg(long)]
        restriction: String,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
    },
    /// Measure and dimension of psi_{P,Q}(R).
    Range {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
    },
    /// Level set psi^{-1}(w), with w given by --x over Q.
    Level {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1000)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
    },
    /// Sum of the level-set measures up to K stages.
    Levelsum {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 60)]
        k: u64,
    },
    /// Multifractal witness set for alpha < gamma.
    Multifractal {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        gamma: String,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
    },
    /// Dimension bracket of Z_{P,Q}(k).
    Zpq {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        k: u64,
        #[arg(long, default_value_t = 10_000)]
        n: u64,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
    },
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Digits { common, .. }
            | Command::PsiEval { common, .. }
            | Command::PsiPlot { common, .. }
            | Command::Normality { common, .. }
            | Command::Discrepancy { common, .. }
            | Command::Rationality { common, .. }
            | Command::Variation { common, .. }
            | Command::Bv { common, .. }
            | Command::Holder { common, .. }
            | Command::MonotoneWitness { common, .. }
            | Command::Sample { common, .. }
            | Command::Birkhoff { common, .. } => common,
            Command::Construct { which } => match which {
                Construction::Qnex { common, .. }
                | Construction::Rdn { common, .. }
                | Construction::Nnotdn { common, .. }
                | Construction::Rnnotn { common, .. }
                | Construction::Dnnotrn { common, .. }
                | Construction::Mff { common, .. } => common,
            },
            Command::Dimension { which } => match which {
                Dimension::Wegmann { common, .. }
                | Dimension::Range { common, .. }
                | Dimension::Level { common, .. }
                | Dimension::Levelsum { common, .. }
                | Dimension::Multifractal { common, .. }
                | Dimension::Zpq { common, .. } => common,
            },
        }
    }
}

impl Common {
    fn file_value(&self, key: &str) -> Result<Option<Value>, CliError> {
        let Some(path) = &self.spec_file else { return Ok(None) };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))?;
        let v = parse_json(&text)?;
        let o = v.as_object().ok_or_else(|| CliError::Spec("$: spec file must hold an object".into()))?;
        if let Some(k) = o.keys().find(|k| !["p", "q", "x"].contains(&k.as_str())) {
            return Err(CliError::Spec(format!("$.{k}: unknown field")));
        }
        Ok(o.get(key).cloned())
    }

    fn base(&self, key: &str) -> Result<BasicSeq, CliError> {
        let flag = if key == "p" { &self.p } else { &self.q };
        if let Some(s) = flag {
            return seq_from_value(&parse_json(&read_arg(s)?)?, &format!("--{key}"));
        }
        match self.file_value(key)? {
            Some(v) => seq_from_value(&v, &format!("$.{key}")),
            None => Err(CliError::Spec(format!("missing base --{key}"))),
        }
    }

    pub fn p(&self) -> Result<BasicSeq, CliError> {
        self.base("p")
    }

    pub fn q(&self) -> Result<BasicSeq, CliError> {
        self.base("q")
    }

    pub fn x_opt(&self, base: &BasicSeq) -> Result<Option<DigitStream>, CliError> {
        if let Some(s) = &self.x {
            return parse_digit_spec(&read_arg(s)?, base).map(Some);
        }
        match self.file_value("x")? {
            Some(v) => digits_from_value(&v, "$.x", base).map(Some),
            None => Ok(None),
        }
    }

    pub fn x(&self, base: &BasicSeq) -> Result<DigitStream, CliError> {
        self.x_opt(base)?.ok_or_else(|| CliError::Spec("missing digit stream --x".into()))
    }

    fn format(&self, allowed: &[Format]) -> Result<Format, CliError> {
        let f = self.format.unwrap_or(allowed[0]);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(CliError::Spec(format!("format {f:?} is not available here").to_lowercase()))
        }
    }
}

fn nat_json(v: &Nat) -> Value {
    match v.to_u64() {
        Some(u) => json!(u),
        None => json!(v.to_string()),
    }
}

fn checkpoints(c: &[u64], n: u64) -> Vec<u64> {
    if c.is_empty() {
        default_checkpoints(n)
    } else {
        c.to_vec()
    }
}

fn convergence(c: Convergence) -> &'static str {
    match c {
        Convergence::Converges => "converges",
        Convergence::Diverges => "diverges",
        Convergence::Undetermined => "undetermined",
    }
}

fn digit_table(base: &BasicSeq, d: &DigitStream, n: u64, fmt: Format, extra: Value) -> Result<Vec<u8>, CliError> {
    let q = base.prefix(n)?;
    let e = d.prefix(n)?;
    Ok(match fmt {
        Format::Csv => {
            let mut c = Csv::new("n,q_n,E_n");
            for (i, (b, x)) in q.iter().zip(&e).enumerate() {
                c.row([(i + 1).to_string(), b.to_string(), x.to_string()]);
            }
            c.into_bytes()
        }
        _ => {
            let rows: Vec<Value> = q.iter().zip(&e).enumerate().map(|(i, (b, x))| json!({ "n": i + 1, "q_n": nat_json(b), "E_n": nat_json(x) })).collect();
            let mut v = json!({ "int_part": d.int_part().to_string(), "digits": rows });
            if let (Value::Object(o), Value::Object(x)) = (&mut v, extra) {
                o.extend(x);
            }
            json_bytes(&v)
        }
    })
}

fn ud_json(r: &UdReport) -> Value {
    Value::Array(r.points.iter().map(|p| json!({ "n": p.n, "dstar": rat_str(&p.dstar), "err": rat_str(&p.err) })).collect())
}

fn ud_mode(m: Mode) -> UdMode {
    match m {
        Mode::Torbit => UdMode::TOrbit,
        Mode::Ratio => UdMode::DigitRatio,
    }
}

fn hypothesis(ok: bool, what: &str) -> Verdict {
    if ok {
        Verdict::Ok
    } else {
        Verdict::Hypothesis(format!("{what}: hypothesis not supported at this horizon"))
    }
}

fn dim_table(estimates: &[(&str, &cantor_core::dim::DimEstimate)]) -> Vec<u8> {
    let mut c = Csv::new(&format!("estimate,{}", crate::emit::DIM_CSV_HEADER));
    for (name, d) in estimates {
        let mut inner = Csv::new("");
        dim_csv_rows(d, &mut inner);
        let text = String::from_utf8(inner.into_bytes()).expect("CSV is UTF-8");
        for line in text.lines().skip(1) {
            c.row([*name, line]);
        }
    }
    c.into_bytes()
}

pub fn execute(cmd: &Command) -> Result<Output, CliError> {
    match cmd {
        Command::Digits { common, n } => {
            let fmt = common.format(&[Format::Csv, Format::Json])?;
            let q = common.q()?;
            let x = common.x(&q)?;
            Ok(Output::ok(digit_table(&q, &x, *n, fmt, json!({}))?))
        }
        Command::PsiEval { common, depth, tail_horizon } => psi_eval(common, *depth, *tail_horizon),
        Command::PsiPlot { common, pixels, depth } => {
            let fmt = common.format(&[Format::Pgm, Format::Csv, Format::Json])?;
            let g = render_psi_grid(&common.p()?, &common.q()?, *pixels, *depth)?;
            let f = |r: &Rat| r.to_f64().unwrap_or(f64::NAN);
            Ok(Output::ok(match fmt {
                Format::Pgm => pgm(g.pixels, g.pixels, &g.bitmap()),
                Format::Csv => {
                    let mut c = Csv::new("column,x,psi,cell");
                    for i in 0..g.pixels {
                        c.row([i.to_string(), rat_str(&g.xs[i]), f64_str(f(&g.values[i])), g.cells[i].to_string()]);
                    }
                    c.into_bytes()
                }
                Format::Json => json_bytes(&json!({
                    "pixels": g.pixels,
                    "depth": g.depth,
                    "columns": (0..g.pixels).map(|i| json!({ "x": rat_str(&g.xs[i]), "psi": num(f(&g.values[i])), "cell": g.cells[i] })).collect::<Vec<_>>(),
                })),
            }))
        }
        Command::Normality { common, k, b, n, mode } => {
            let fmt = common.format(&[Format::Json, Format::Csv])?;
            let q = common.q()?;
            let x = common.x(&q)?;
            let r = normality_report(&x, *k, *b, *n)?;
            let ud = ud_report(&x, ud_mode(*mode), *n, &default_checkpoints(*n))?;
            Ok(Output::ok(match fmt {
                Format::Csv => {
                    let mut c = Csv::new("B,count,ratio,ratio_f64");
                    for row in &r.rows {
                        let digits: Vec<String> = row.block.digits().iter().map(Nat::to_string).collect();
                        c.row([digits.join(" "), row.count.to_string(), row.ratio.as_ref().map_or("".into(), rat_str), f64_str(row.ratio_f64)]);
                    }
                    c.into_bytes()
                }
                _ => json_bytes(&json!({
                    "horizon": r.n,
                    "k": r.k,
                    "qnk": { "exact": r.qnk.exact.as_ref().map(rat_str), "approx": num(r.qnk.approx) },
                    "blocks": r.rows.iter().map(|row| json!({
                        "B": row.block.digits().iter().map(nat_json).collect::<Vec<_>>(),
                        "count": row.count,
                        "ratio": row.ratio.as_ref().map(rat_str),
                        "ratio_f64": num(row.ratio_f64),
                    })).collect::<Vec<_>>(),
                    "discrepancy": ud_json(&ud),
                })),
            }))
        }
        Command::Discrepancy { common, n, mode, checkpoints: cps } => {
            let fmt = common.format(&[Format::Csv, Format::Json])?;
            let q = common.q()?;
            let x = common.x(&q)?;
            let r = ud_report(&x, ud_mode(*mode), *n, &checkpoints(cps, *n))?;
            Ok(Output::ok(match fmt {
                Format::Csv => {
                    let mut c = Csv::new("n,dstar,err,dstar_f64");
                    for p in &r.points {
                        c.row([p.n.to_string(), rat_str(&p.dstar), rat_str(&p.err), f64_str(p.dstar.to_f64().unwrap_or(f64::NAN))]);
                    }
                    c.into_bytes()
                }
                _ => json_bytes(&json!({
                    "horizon": r.horizon,
                    "mode": if *mode == Mode::Torbit { "torbit" } else { "ratio" },
                    "discrepancy": ud_json(&r),
                    "salat": r.salat.as_deref().map(trend),
                })),
            }))
        }
        Command::Construct { which } => construct(which),
        Command::Dimension { which } => dimension(which),
        Command::Rationality { common, n, checkpoints: cps } => {
            let fmt = common.format(&[Format::Json])?;
            let (p, q) = (common.p()?, common.q()?);
            let x = common.x_opt(&p)?;
            let r = rationality_report(&p, &q, x.as_ref(), *n, &checkpoints(cps, *n))?;
            let _ = fmt;
            let case = match r.case {
                RationalityCase::IrrationalPreserved => "irrational_preserved",
                RationalityCase::Countable => "countable",
                RationalityCase::Uncountable => "uncountable",
            };
            let mut verdict = Verdict::Ok;
            let measure = r.measure.map(|(c, m)| {
                if c == Convergence::Undetermined {
                    verdict = Verdict::Undecided("measure series undetermined at this horizon".into());
                }
                json!({ "series": convergence(c), "measure": m })
            });
            let point = r.point.as_ref().map(|pq| {
                json!({
                    "input_rational": pq.input_rational,
                    "image_tail": match pq.image_tail {
                        TailForm::EventuallyZero => "eventually_zero",
                        TailForm::EventuallyMax => "eventually_max",
                        TailForm::Neither => "neither",
                    },
                    "flag": pq.flag,
                })
            });
            let v = json!({
                "divisibility_p": r.divisibility_p,
                "divisibility_q": r.divisibility_q,
                "case": case,
                "m": r.m,
                "measure": measure,
                "dim_lower": r.dim_lower.as_ref().map(dim_json),
                "dim_upper": r.dim_upper.as_ref().map(dim_json),
                "point": point,
            });
            Ok(Output { bytes: json_bytes(&v), verdict })
        }
        Command::Variation { common, t } => {
            let fmt = common.format(&[Format::Csv, Format::Json])?;
            let (p, q) = (common.p()?, common.q()?);
            let mut rows = Vec::new();
            for s in 1..=*t {
                rows.push((s, variation_exact(&p, &q, s)?));
            }
            let method = |m: VariationMethod| if m == VariationMethod::Formula { "formula" } else { "breakpoints" };
            Ok(Output::ok(match fmt {
                Format::Csv => {
                    let mut c = Csv::new("t,v,upper_bound,method");
                    for (s, r) in &rows {
                        c.row([s.to_string(), rat_str(&r.v), rat_str(&r.upper_bound), method(r.method).into()]);
                    }
                    c.into_bytes()
                }
                _ => json_bytes(&Value::Array(
                    rows.iter().map(|(s, r)| json!({ "t": s, "v": rat_str(&r.v), "upper_bound": rat_str(&r.upper_bound), "method": method(r.method) })).collect(),
                )),
            }))
        }
        Command::Bv { common, n, checkpoints: cps } => {
            let fmt = common.format(&[Format::Json, Format::Csv])?;
            let r = bv_check(&common.p()?, &common.q()?, *n, &checkpoints(cps, *n))?;
            let verdict = match r.verdict {
                BvVerdict::ConditionMet => Verdict::Ok,
                BvVerdict::NotProven => Verdict::Undecided("bounded-variation condition not established at this horizon".into()),
            };
            let bytes = match fmt {
                Format::Csv => {
                    let mut c = Csv::new("n,double_sum_partial");
                    for (j, s) in &r.double_sum_partials {
                        c.row([j.to_string(), rat_str(s)]);
                    }
                    c.into_bytes()
                }
                _ => json_bytes(&json!({
                    "double_sum_partials": r.double_sum_partials.iter().map(|(j, s)| json!({ "n": j, "value": rat_str(s) })).collect::<Vec<_>>(),
                    "tail_bound": r.tail_bound.as_ref().map(rat_str),
                    "prod_ratio_running_min": num(r.prod_ratio_running_min),
                    "prod_ratio_last": num(r.prod_ratio_last),
                    "ratio_bounded": r.ratio_bounded,
                    "verdict": if r.verdict == BvVerdict::ConditionMet { "condition_met" } else { "not_proven" },
                    "notes": r.notes,
                })),
            };
            Ok(Output { bytes, verdict })
        }
        Command::Holder { common, k, alpha, n, checkpoints: cps } => {
            let fmt = common.format(&[Format::Json, Format::Csv])?;
            let a = parse_rational(alpha)?;
            let r = holder_report(&common.p()?, &common.q()?, *k, &a, *n, &checkpoints(cps, *n))?;
            let hv = |v: HolderVerdict| if v == HolderVerdict::BoundedSoFar { "bounded_so_far" } else { "diverging" };
            let bytes = match fmt {
                Format::Csv => {
                    let mut c = Csv::new("n,log10_term1,log10_term2");
                    for ((n1, a), (_, b)) in r.trend1.iter().zip(&r.trend2) {
                        c.row([n1.to_string(), f64_str(*a), f64_str(*b)]);
                    }
                    c.into_bytes()
                }
                _ => json_bytes(&json!({
                    "hypothesis_ok": r.hypothesis_ok,
                    "warnings": r.warnings,
                    "sup1_log10": bracket(&r.sup1),
                    "sup2_log10": bracket(&r.sup2),
                    "trend1": trend(&r.trend1),
                    "trend2": trend(&r.trend2),
                    "verdict1": hv(r.verdict1),
                    "verdict2": hv(r.verdict2),
                    "verdict": hv(r.verdict),
                })),
            };
            Ok(Output { bytes, verdict: hypothesis(r.hypothesis_ok, "liminf min(p_n, q_n) >= 3") })
        }
        Command::MonotoneWitness { common, cell, n } => {
            common.format(&[Format::Json])?;
            let cell: Vec<Nat> = cell.iter().map(|&d| Nat::from(d)).collect();
            match monotonicity_witness(&common.p()?, &common.q()?, &cell, *n)? {
                Some(w) => Ok(Output::ok(json_bytes(&json!({
                    "found": true,
                    "m": w.m,
                    "c": rat_str(&w.c), "x": rat_str(&w.x), "y": rat_str(&w.y),
                    "psi_c": rat_str(&w.psi_c), "psi_x": rat_str(&w.psi_x), "psi_y": rat_str(&w.psi_y),
                })))),
                None => Ok(Output {
                    bytes: json_bytes(&json!({ "found": false, "horizon": n })),
                    verdict: Verdict::Undecided(format!("no index m <= {n} beyond the cell with p_m > q_m")),
                }),
            }
        }
        Command::Sample { common, lo, hi, seed, n } => {
            let fmt = common.format(&[Format::Csv, Format::Json])?;
            let m = MeasureSpec::new(*lo, *hi, *seed)?;
            let v = m.sample(*n);
            Ok(Output::ok(match fmt {
                Format::Csv => {
                    let mut c = Csv::new("n,q_n");
                    for (i, x) in v.iter().enumerate() {
                        c.row([(i + 1).to_string(), x.to_string()]);
                    }
                    c.into_bytes()
                }
                _ => json_bytes(&json!({ "lo": lo, "hi": hi, "seed": seed, "values": v })),
            }))
        }
        Command::Birkhoff { common, n, checkpoints: cps } => {
            let fmt = common.format(&[Format::Csv, Format::Json])?;
            let r = birkhoff_report(&common.p()?, &common.q()?, *n, &checkpoints(cps, *n))?;
            Ok(Output::ok(match fmt {
                Format::Csv => {
                    let mut c = Csv::new("n,mean_log_p,mean_log_q,log_ratio,running_min,double_series");
                    for p in &r.points {
                        c.row([
                            p.n.to_string(),
                            f64_str(p.mean_log_p),
                            f64_str(p.mean_log_q),
                            f64_str(p.log_ratio.mid),
                            f64_str(p.running_min),
                            f64_str(p.double_series),
                        ]);
                    }
                    c.into_bytes()
                }
                _ => json_bytes(&json!({
                    "horizon": r.horizon,
                    "points": r.points.iter().map(|p| json!({
                        "n": p.n,
                        "mean_log_p": num(p.mean_log_p),
                        "mean_log_q": num(p.mean_log_q),
                        "log_ratio": bracket(&p.log_ratio),
                        "running_min": num(p.running_min),
                        "double_series": num(p.double_series),
                    })).collect::<Vec<_>>(),
                })),
            }))
        }
    }
}

fn psi_eval(common: &Common, depth: u64, tail_horizon: u64) -> Result<Output, CliError> {
    let fmt = common.format(&[Format::Json, Format::Csv])?;
    let (p, q) = (common.p()?, common.q()?);
    let x = common.x(&p)?;
    let exact = x.value_exact();
    let approx = exact.as_ref().map(|v| approximant_eval(&p, &q, depth, v)).transpose()?;
    let image = psi_map(&x, &q)?;
    let enc = enclose_prefix(&image, depth)?;
    let bound = Rat::new(BigInt::one(), BigInt::one() << (depth.saturating_sub(1) as usize));
    let mut verdict = Verdict::Ok;
    let continuity = match x.canonicity() {
        cantor_core::Canonicity::Terminating { .. } => {
            let r = classify_continuity(&p, &q, &x, tail_horizon)?;
            let status = match r.status {
                Status::Continuous => "continuous",
                Status::Jump => "jump",
                Status::Undecided => {
                    verdict = Verdict::Undecided("left continuity undecided at the tail horizon".into());
                    "undecided"
                }
            };
            let tag = match r.set_tag {
                SetTag::A { t } => json!({ "A": t }),
                SetTag::B { s } => json!({ "B": s }),
                SetTag::IntegerPoint => json!("integer_point"),
                SetTag::None => Value::Null,
            };
            Some(json!({
                "t": r.t,
                "side": "left",
                "status": status,
                "jump": r.jump.as_ref().map(rat_str),
                "jump_bracket": [rat_str(&r.jump_bracket.0), rat_str(&r.jump_bracket.1)],
                "set_tag": tag,
            }))
        }
        _ => None,
    };
    let bytes = match fmt {
        Format::Csv => {
            let mut c = Csv::new("x,t,psi_t,lo,hi");
            c.row([
                exact.as_ref().map_or(String::new(), rat_str),
                depth.to_string(),
                approx.as_ref().map_or(String::new(), rat_str),
                rat_str(&enc.lo),
                rat_str(&enc.hi),
            ]);
            c.into_bytes()
        }
        _ => json_bytes(&json!({
            "x": exact.as_ref().map(rat_str),
            "t": depth,
            "psi_t": approx.as_ref().map(rat_str),
            "approximant_error_bound": rat_str(&bound),
            "psi_enclosure": { "lo": rat_str(&enc.lo), "hi": rat_str(&enc.hi) },
            "continuity": continuity,
        })),
    };
    Ok(Output { bytes, verdict })
}

fn counter(common: &Common, mode: CounterMode, n: u64) -> Result<Output, CliError> {
    let fmt = common.format(&[Format::Csv, Format::Json])?;
    let q = common.q()?;
    let x = common.x(&q)?;
    let c = counterexample_stream(mode, &q, &x)?;
    let bytes = digit_table(&c.p, &c.y, n, fmt, json!({ "diagnostics": c.diagnostics }))?;
    let verdict = if c.diagnostics.is_empty() { Verdict::Ok } else { Verdict::Hypothesis(c.diagnostics.join("; ")) };
    Ok(Output { bytes, verdict })
}

fn construct(which: &Construction) -> Result<Output, CliError> {
    match which {
        Construction::Qnex { common, stages, n } => {
            let fmt = common.format(&[Format::Csv, Format::Json])?;
            let (p, zeta) = qnex_stream(stages.params())?;
            Ok(Output::ok(digit_table(&p, &zeta, *n, fmt, json!({}))?))
        }
        Construction::Rdn { common, stages, n } => {
            let fmt = common.format(&[Format::Csv, Format::Json])?;
            let (q, img) = rdn_stream(stages.params())?;
            Ok(Output::ok(digit_table(&q, &img, *n, fmt, json!({}))?))
        }
        Construction::Nnotdn { common, n } => counter(common, CounterMode::NnotDN, *n),
        Construction::Rnnotn { common, n } => counter(common, CounterMode::RNnotN, *n),
        Construction::Dnnotrn { common, n } => counter(common, CounterMode::DNnotRN, *n),
        Construction::Mff { common, mff, n } => {
            let fmt = common.format(&[Format::Csv, Format::Json])?;
            let spec = parse_mff_spec(&read_arg(mff)?)?;
            let (g, eta) = mff_stream(&spec);
            Ok(Output::ok(digit_table(&g, &eta, *n, fmt, json!({}))?))
        }
    }
}

fn restriction(text: &str) -> Result<RestrictionSpec, CliError> {
    let v = parse_json(text)?;
    let o = v.as_object().ok_or_else(|| CliError::Spec("--restriction: expected an object".into()))?;
    match o.get("kind").and_then(Value::as_str) {
        Some("constant") => {
            let a = o.get("value").and_then(Value::as_u64).ok_or_else(|| CliError::Spec("--restriction.value: expected a positive integer".into()))?;
            Ok(RestrictionSpec::constant(a))
        }
        Some("min") => {
            let p = o.get("p").ok_or_else(|| CliError::Spec("--restriction: missing field \"p\"".into()))?;
            Ok(RestrictionSpec::min_with(seq_from_value(p, "--restriction.p")?))
        }
        Some(k) => Err(CliError::Spec(format!("--restriction.kind: unknown kind \"{k}\""))),
        None => Err(CliError::Spec("--restriction: missing field \"kind\"".into())),
    }
}

fn dimension(which: &Dimension) -> Result<Output, CliError> {
    match which {
        Dimension::Wegmann { common, restriction: r, n, checkpoints: cps } => {
            let fmt = common.format(&[Format::Json, Format::Csv])?;
            let w = wegmann_estimate(&common.q()?, &restriction(&read_arg(r)?)?, *n, &checkpoints(cps, *n))?;
            let bytes = match fmt {
                Format::Csv => dim_table(&[("dim", &w.dim)]),
                _ => {
                    let mut v = dim_json(&w.dim);
                    v["dimsame"] = json!({ "liminf_proxy": num(w.dimsame.liminf_proxy), "limsup_proxy": num(w.dimsame.limsup_proxy), "equal": w.dimsame.equal });
                    json_bytes(&v)
                }
            };
            Ok(Output { bytes, verdict: hypothesis(w.dim.hypothesis.ok, "log q_n / log(q_1...q_n) -> 0") })
        }
        Dimension::Range { common, n, checkpoints: cps } => {
            let fmt = common.format(&[Format::Json, Format::Csv])?;
            let r = range_report(&common.p()?, &common.q()?, *n, &checkpoints(cps, *n))?;
            let bytes = match fmt {
                Format::Csv => dim_table(&[("dim", &r.dim)]),
                _ => {
                    let mut v = dim_json(&r.dim);
                    v["measure_partial"] = json!(r.measure_partial.as_ref().map(rat_str));
                    v["log10_measure"] = sci(&r.log10_measure);
                    v["closed_form"] = json!(r.closed_form);
                    v["nonincreasing"] = json!(r.nonincreasing);
                    json_bytes(&v)
                }
            };
            Ok(Output { bytes, verdict: hypothesis(r.dim.hypothesis.ok, "log q_n / log(q_1...q_n) -> 0") })
        }
        Dimension::Level { common, n, checkpoints: cps } => {
            let fmt = common.format(&[Format::Json, Format::Csv])?;
            let (p, q) = (common.p()?, common.q()?);
            let w = common.x(&q)?;
            let r = level_set_report(&p, &q, &w, *n, &checkpoints(cps, *n))?;
            let verdict = r.dim.as_ref().map_or(Verdict::Ok, |d| hypothesis(d.hypothesis.ok, "log p_n / log(p_1...p_n) -> 0"));
            let bytes = match fmt {
                Format::Csv => match &r.dim {
                    Some(d) => dim_table(&[("dim", d)]),
                    None => dim_table(&[]),
                },
                _ => json_bytes(&json!({
                    "branch": match r.branch {
                        LevelBranch::Unique => json!("unique"),
                        LevelBranch::Terminating { m } => json!({ "terminating": m }),
                    },
                    "empty_at": r.empty_at,
                    "measure_partial": r.measure_partial.as_ref().map(rat_str),
                    "finite_part_partial": r.finite_part_partial.as_ref().map(rat_str),
                    "dim": r.dim.as_ref().map(dim_json),
                    "finiteness": match r.finiteness {
                        LevelFiniteness::AtMostOnePoint => "at_most_one_point",
                        LevelFiniteness::Finite => "finite",
                        LevelFiniteness::PossiblyInfinite => "possibly_infinite",
                    },
                })),
            };
            Ok(Output { bytes, verdict })
        }
        Dimension::Levelsum { common, k } => {
            let fmt = common.format(&[Format::Json, Format::Csv])?;
            let r = level_measure_sum(&common.p()?, &common.q()?, *k)?;
            let verdict = if !r.hypothesis_ok {
                Verdict::Hypothesis(if r.diagnostics.is_empty() { "level-sum hypothesis fails".into() } else { r.diagnostics.join("; ") })
            } else if r.convergence == Convergence::Undetermined {
                Verdict::Undecided("series convergence undetermined at this horizon".into())
            } else {
                Verdict::Ok
            };
            let bytes = match fmt {
                Format::Csv => {
                    let mut c = Csv::new("k,partial,telescoped,tail_bound");
                    c.row([r.k.to_string(), rat_str(&r.partial), rat_str(&r.telescoped), r.tail_bound.as_ref().map_or(String::new(), rat_str)]);
                    c.into_bytes()
                }
                _ => json_bytes(&json!({
                    "k": r.k,
                    "partial": rat_str(&r.partial),
                    "partial_f64": num(r.partial.to_f64().unwrap_or(f64::NAN)),
                    "telescoped": rat_str(&r.telescoped),
                    "tail_bound": r.tail_bound.as_ref().map(rat_str),
                    "hypothesis_ok": r.hypothesis_ok,
                    "convergence": convergence(r.convergence),
                    "diagnostics": r.diagnostics,
                })),
            };
            Ok(Output { bytes, verdict })
        }
        Dimension::Multifractal { common, alpha, gamma, n, checkpoints: cps } => {
            let fmt = common.format(&[Format::Json, Format::Csv])?;
            let (a, g) = (parse_rational(alpha)?, parse_rational(gamma)?);
            let r = multifractal_witness(&common.p()?, &common.q()?, &a, &g, *n, &checkpoints(cps, *n))?;
            let verdict = if r.diagnostics.is_empty() { Verdict::Ok } else { Verdict::Hypothesis(r.diagnostics.join("; ")) };
            let bytes = match fmt {
                Format::Csv => dim_table(&[("dim_l", &r.dim_l), ("dim_s", &r.dim_s)]),
                _ => json_bytes(&json!({
                    "c": r.c,
                    "start": r.start,
                    "threshold": r.threshold,
                    "dim_l": dim_json(&r.dim_l),
                    "dim_s": dim_json(&r.dim_s),
                    "gamma_trend": trend(&r.gamma_trend),
                    "diagnostics": r.diagnostics,
                })),
            };
            Ok(Output { bytes, verdict })
        }
        Dimension::Zpq { common, k, n, checkpoints: cps } => {
            let fmt = common.format(&[Format::Json, Format::Csv])?;
            let r = zpq_dim_bounds(&common.p()?, &common.q()?, *k, *n, &checkpoints(cps, *n))?;
            let bytes = match fmt {
                Format::Csv => dim_table(&[("lower", &r.lower), ("upper", &r.upper)]),
                _ => json_bytes(&json!({ "k": k, "lower": dim_json(&r.lower), "upper": dim_json(&r.upper) })),
            };
            Ok(Output { bytes, verdict: hypothesis(r.upper.hypothesis.ok, "log p_n / log(p_1...p_n) -> 0") })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Result<Output, CliError> {
        let cli = Cli::try_parse_from(std::iter::once("cantor").chain(args.iter().copied())).unwrap();
        execute(&cli.command)
    }

    #[test]
    fn digits_of_seven_eighths_in_base_three() {
        let out = run(&["digits", "--q", r#"{"kind":"constant","value":3}"#, "--x", "7/8", "--n", "4"]).unwrap();
        assert_eq!(String::from_utf8(out.bytes).unwrap(), "n,q_n,E_n\n1,3,2\n2,3,1\n3,3,2\n4,3,1\n");
    }

    #[test]
    fn worked_jump() {
        let out = run(&["psi-eval", "--p", r#"{"kind":"constant","value":5}"#, "--q", r#"{"kind":"constant","value":3}"#, "--x", "3/5"]).unwrap();
        let v: Value = serde_json::from_slice(&out.bytes).unwrap();
        assert_eq!(v["continuity"]["jump"], "-1/3");
        assert_eq!(v["continuity"]["status"], "jump");
    }

    #[test]
    fn variation_rows() {
        let out = run(&["variation", "--p", r#"{"kind":"constant","value":2}"#, "--q", r#"{"kind":"constant","value":3}"#, "--t", "3"]).unwrap();
        let s = String::from_utf8(out.bytes).unwrap();
        assert!(s.starts_with("t,v,upper_bound,method\n1,"));
        assert_eq!(s.lines().count(), 4);
    }

    #[test]
    fn missing_base_is_a_spec_error() {
        let e = run(&["digits", "--x", "1/2"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn witness_absent_is_undecided() {
        let q = r#"{"kind":"constant","value":3}"#;
        let out = run(&["monotone-witness", "--p", q, "--q", q, "--n", "50"]).unwrap();
        assert!(matches!(out.verdict, Verdict::Undecided(_)));
    }
}
