//! The `pwin` command line. [`run`] returns the exit code and the text to
//! print, so the binary and the tests share one code path.

use std::io::Read;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::bt_modules::{bt_to_win, win_to_bt, BtModule};
use crate::error::{Error, Result};
use crate::examples_zoo as zoo;
use crate::frames::{Frame, FrameHom};
use crate::gamma_calculus::{self as gc, Lambda};
use crate::json;
use crate::padic_rings::{Chi, Lift, PrecisionCtx, Series};
use crate::suites::{self, Settings};
use crate::wach_rank1::{self as wach, Alpha, MonomialLattice};
use crate::windows::Window;

#[derive(Parser, Debug)]
#[command(
    name = "pwin",
    version,
    about = "Frames, windows and BT modules over truncated p-adic power series"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: GlobalOpts,
}

#[derive(Args, Debug, Clone)]
struct GlobalOpts {
    /// The prime.
    #[arg(long, global = true, default_value_t = 3)]
    p: u32,
    /// p-adic precision N.
    #[arg(long, global = true, default_value_t = 6)]
    pprec: u32,
    /// u-adic precision M.
    #[arg(long, global = true, default_value_t = 64)]
    uprec: usize,
    /// Cyclotomic level r.
    #[arg(long, visible_alias = "r", global = true, default_value_t = 1)]
    level: u32,
    #[arg(long, global = true, value_enum, default_value_t = LiftArg::Cyclotomic)]
    lift: LiftArg,
    /// Character value chi(gamma), an integer prime to p.
    #[arg(long, global = true, allow_hyphen_values = true)]
    chi: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Write the output to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum LiftArg {
    Cyclotomic,
    Standard,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum RingArg {
    Sigma,
    Script,
    Zp,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Canonical objects with Gamma-actions.
    Zoo {
        #[command(subcommand)]
        action: ZooCmd,
    },
    /// Frame axioms.
    Frame {
        #[command(subcommand)]
        action: FrameCmd,
    },
    /// Random windows, axiom checks and duals; input is window JSON.
    Window {
        #[command(subcommand)]
        action: WindowCmd,
    },
    /// BT modules and the window correspondence.
    Bt {
        #[command(subcommand)]
        action: BtCmd,
    },
    /// lambda_gamma, t, N_M and the strictness bounds.
    Gamma {
        #[command(subcommand)]
        action: GammaCmd,
    },
    /// Rank-one Kisin-Ren / Wach translation.
    Wach {
        #[command(subcommand)]
        action: WachCmd,
    },
    /// Property suites; `all` runs every suite.
    Suite {
        names: Vec<String>,
        /// List the suites.
        #[arg(long)]
        list: bool,
    },
}

#[derive(Subcommand, Debug)]
enum ZooCmd {
    List,
    Build { name: String },
}

#[derive(Subcommand, Debug)]
enum FrameCmd {
    Check {
        #[arg(long, value_enum)]
        ring: Option<RingArg>,
    },
}

#[derive(Args, Debug)]
struct InputArg {
    /// JSON input file, `-` for stdin.
    #[arg(long = "in", value_name = "FILE", default_value = "-")]
    input: String,
}

#[derive(Subcommand, Debug)]
enum WindowCmd {
    Random {
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, value_enum, default_value_t = RingArg::Sigma)]
        ring: RingArg,
        /// Degree bound of the random entries.
        #[arg(long, default_value_t = 6)]
        degree: usize,
    },
    Check(InputArg),
    Dual(InputArg),
    /// Base change along lambda to the divided-power frame.
    Lambda(InputArg),
}

#[derive(Subcommand, Debug)]
enum BtCmd {
    /// The BT module of a window over Sigma.
    FromWindow(InputArg),
    /// The window of a BT module (input: `{"A", "B"}`).
    ToWindow(InputArg),
    Check(InputArg),
    Random {
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = 6)]
        degree: usize,
    },
}

#[derive(Subcommand, Debug)]
enum GammaCmd {
    /// lambda_gamma for `--chi`.
    Lambda,
    /// t = log(1 + u0).
    T,
    /// The matrix of N_M on a zoo object.
    Nm { name: String },
    /// The strictness bounds on a zoo object.
    Strictm {
        name: String,
        #[arg(long, default_value_t = 3)]
        n: u32,
    },
}

#[derive(Args, Debug)]
struct WachArgs {
    /// alpha as a monomial, e.g. `E1`, `2*E1`, `u*E2^2`.
    #[arg(long, default_value = "1")]
    alpha: String,
    /// The input lattice as a monomial relative to the basis, e.g. `p*u`.
    #[arg(long, default_value = "1")]
    lattice: String,
}

#[derive(Subcommand, Debug)]
enum WachCmd {
    KrToWach(WachArgs),
    WachToKr(WachArgs),
}

/// Exit code and output of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub output: String,
    /// Destination from `--out`; `None` means stdout.
    pub out: Option<String>,
}

const USAGE: i32 = 2;
const CHECK_FAILED: i32 = 1;

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            return Outcome {
                code,
                output: e.to_string(),
                out: None,
            };
        }
    };
    let as_json = cli.opts.json;
    let out = cli.opts.out.clone();
    match execute(&cli) {
        Ok((pass, value, text)) => Outcome {
            code: if pass { 0 } else { CHECK_FAILED },
            output: if as_json {
                json::render(&value)
            } else {
                text.unwrap_or_else(|| json::render(&value))
            },
            out,
        },
        Err(e) => {
            let code = match e {
                Error::Parse(_) | Error::BadContext(_) | Error::NonUnitChi(_) => USAGE,
                _ => CHECK_FAILED,
            };
            let value = json!({"error": e.to_string()});
            let output = if as_json {
                json::render(&value)
            } else {
                format!("error: {e}\n")
            };
            Outcome { code, output, out }
        }
    }
}

fn ctx_of(o: &GlobalOpts) -> Result<PrecisionCtx> {
    let lift = match o.lift {
        LiftArg::Cyclotomic => Lift::Cyclotomic,
        LiftArg::Standard => Lift::Standard,
    };
    PrecisionCtx::new(o.p, o.pprec, o.uprec, o.level, lift)
}

fn frame_of(ctx: PrecisionCtx, ring: RingArg) -> Frame {
    match ring {
        RingArg::Sigma => Frame::sigma(ctx),
        RingArg::Script => Frame::script(ctx),
        RingArg::Zp => Frame::zp(ctx),
    }
}

fn read_input(path: &str) -> Result<Value> {
    let mut text = String::new();
    let res = if path == "-" {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::read_to_string(path).map(|t| text = t)
    };
    res.map_err(|e| Error::Parse(format!("cannot read {path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("invalid JSON in {path}: {e}")))
}

/// Accepts a bare window or any object with a `window` field (e.g. `zoo build` output).
fn window_input(ctx: PrecisionCtx, v: &Value) -> Result<Window> {
    json::window_from(ctx, v.get("window").unwrap_or(v))
}

fn chi_of(o: &GlobalOpts) -> Result<Chi> {
    let s = o
        .chi
        .as_deref()
        .ok_or_else(|| Error::Parse("--chi is required".into()))?;
    Chi::parse(o.p, s)
}

/// `3 + u + 2*u^2 + O(p^6, u^64)`, from canonical residues.
fn series_text(x: &Series) -> String {
    let Ok((scale, coeffs)) = x.canonical() else {
        return "(precision lost)".into();
    };
    let mut terms = Vec::new();
    for (k, c) in coeffs.iter().enumerate() {
        if *c == num_bigint::BigUint::ZERO {
            continue;
        }
        let coef = if scale > 0 {
            format!("{c}/{}^{scale}", x.ctx().p)
        } else {
            c.to_string()
        };
        terms.push(match (k, coef.as_str()) {
            (0, _) => coef,
            (1, "1") => "u".into(),
            (1, _) => format!("{coef}*u"),
            (_, "1") => format!("u^{k}"),
            _ => format!("{coef}*u^{k}"),
        });
    }
    if terms.is_empty() {
        terms.push("0".into());
    }
    format!("{} + O(p^{}, u^{})", terms.join(" + "), x.ctx().n, x.ctx().m)
}

type Executed = (bool, Value, Option<String>);

fn execute(cli: &Cli) -> Result<Executed> {
    let o = &cli.opts;
    match &cli.command {
        Command::Suite { names, list } => suite_cmd(o, names, *list),
        other => {
            let ctx = ctx_of(o)?;
            match other {
                Command::Zoo { action } => zoo_cmd(ctx, action),
                Command::Frame {
                    action: FrameCmd::Check { ring },
                } => frame_check(ctx, *ring),
                Command::Window { action } => window_cmd(ctx, o, action),
                Command::Bt { action } => bt_cmd(ctx, o, action),
                Command::Gamma { action } => gamma_cmd(ctx, o, action),
                Command::Wach { action } => wach_cmd(ctx, action),
                Command::Suite { .. } => unreachable!("handled above"),
            }
        }
    }
}

fn suite_cmd(o: &GlobalOpts, names: &[String], list: bool) -> Result<Executed> {
    if list || names.is_empty() {
        let v: Vec<Value> = suites::SUITES
            .iter()
            .map(|s| json!({"name": s.name, "checks": s.about}))
            .collect();
        let text = suites::SUITES
            .iter()
            .map(|s| format!("{:<16} {}\n", s.name, s.about))
            .collect();
        return Ok((true, Value::Array(v), Some(text)));
    }
    let settings = Settings {
        ctx: ctx_of(o)?,
        seed: o.seed,
    };
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let report = suites::report(&names, &settings)?;
    let pass = report["pass"].as_bool().unwrap_or(false);
    let mut text = String::new();
    for c in report["cases"].as_array().into_iter().flatten() {
        let ok = c["pass"].as_bool().unwrap_or(false);
        text.push_str(&format!(
            "{} {}",
            if ok { "ok  " } else { "FAIL" },
            c["id"].as_str().unwrap_or("")
        ));
        if let Some(w) = c.get("witness") {
            text.push_str(&format!("  witness: {w}"));
        }
        text.push('\n');
    }
    text.push_str(&format!("{} cases, {} failed\n", report["total"], report["failed"]));
    Ok((pass, report, Some(text)))
}

fn zoo_cmd(ctx: PrecisionCtx, action: &ZooCmd) -> Result<Executed> {
    match action {
        ZooCmd::List => {
            let text = zoo::NAMES.join("\n") + "\n";
            Ok((true, json!(zoo::NAMES), Some(text)))
        }
        ZooCmd::Build { name } => {
            let obj = zoo::build(name, ctx)?;
            let v = json::zoo(&obj, &gc::default_chis(ctx))?;
            Ok((true, v, None))
        }
    }
}

fn frame_check(ctx: PrecisionCtx, ring: Option<RingArg>) -> Result<Executed> {
    let rings = match ring {
        Some(r) => vec![r],
        None => vec![RingArg::Sigma, RingArg::Script, RingArg::Zp],
    };
    let mut all = true;
    let mut rows = Vec::new();
    let mut text = String::new();
    for r in rings {
        let f = frame_of(ctx, r);
        let res = f.check();
        all &= res.is_ok();
        text.push_str(&format!(
            "{:<7} {}\n",
            f.tag().as_str(),
            res.as_ref().map_or_else(|e| format!("FAIL {e}"), |_| "ok".into())
        ));
        let mut row = json!({"frame": json::frame(&f), "pass": res.is_ok()});
        if let Err(e) = res {
            row["error"] = json!(e.to_string());
        }
        rows.push(row);
    }
    Ok((all, json!({"frames": rows}), Some(text)))
}

fn window_cmd(ctx: PrecisionCtx, o: &GlobalOpts, action: &WindowCmd) -> Result<Executed> {
    match action {
        WindowCmd::Random { rank, ring, degree } => {
            if !(1..=8).contains(rank) {
                return Err(Error::Parse("--rank must be between 1 and 8".into()));
            }
            let f = frame_of(ctx, *ring);
            let w = Window::random(&f, *rank, *degree, &mut ChaCha8Rng::seed_from_u64(o.seed));
            Ok((true, json::window(&w), None))
        }
        WindowCmd::Check(i) => {
            let w = window_input(ctx, &read_input(&i.input)?)?;
            let res = w.check_with(&mut ChaCha8Rng::seed_from_u64(o.seed));
            let fv = w.fv_pair().map(|(f, v)| {
                let varpi = crate::matrix::Mat::identity(ctx, w.rank(), w.frame().prec()).scale(&w.frame().varpi());
                f.mul(&v) == varpi && v.mul(&f) == varpi
            });
            let fv_ok = matches!(fv, Ok(true));
            let mut v = json!({"window_check": res.is_ok(), "fv_varpi": fv_ok});
            if let Err(e) = &res {
                v["error"] = json!(e.to_string());
            }
            let text = format!("window_check {}\nfv_varpi {}\n", ok_word(res.is_ok()), ok_word(fv_ok));
            Ok((res.is_ok() && fv_ok, v, Some(text)))
        }
        WindowCmd::Dual(i) => {
            let w = window_input(ctx, &read_input(&i.input)?)?;
            Ok((true, json::window(&w.dual()?), None))
        }
        WindowCmd::Lambda(i) => {
            let w = window_input(ctx, &read_input(&i.input)?)?;
            let h = FrameHom::lambda(ctx);
            Ok((true, json::window(&w.base_change(&h)?), None))
        }
    }
}

fn ok_word(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

fn bt_cmd(ctx: PrecisionCtx, o: &GlobalOpts, action: &BtCmd) -> Result<Executed> {
    let sigma = Frame::sigma(ctx);
    match action {
        BtCmd::FromWindow(i) => {
            let w = window_input(ctx, &read_input(&i.input)?)?;
            Ok((true, json::bt(&win_to_bt(&w)?), None))
        }
        BtCmd::ToWindow(i) => {
            let v = read_input(&i.input)?;
            let m = json::bt_from(&sigma, v.get("bt").unwrap_or(&v))?;
            Ok((true, json::window(&bt_to_win(&m)?.window), None))
        }
        BtCmd::Check(i) => {
            let v = read_input(&i.input)?;
            let m = json::bt_from(&sigma, v.get("bt").unwrap_or(&v))?;
            let res = m.check();
            let mut out = json!({"bt_check": res.is_ok()});
            if let Err(e) = &res {
                out["error"] = json!(e.to_string());
            }
            Ok((res.is_ok(), out, Some(format!("bt_check {}\n", ok_word(res.is_ok())))))
        }
        BtCmd::Random { rank, degree } => {
            if !(1..=8).contains(rank) {
                return Err(Error::Parse("--rank must be between 1 and 8".into()));
            }
            let m = BtModule::random(&sigma, *rank, *degree, &mut ChaCha8Rng::seed_from_u64(o.seed));
            Ok((true, json::bt(&m), None))
        }
    }
}

fn gamma_cmd(ctx: PrecisionCtx, o: &GlobalOpts, action: &GammaCmd) -> Result<Executed> {
    match action {
        GammaCmd::Lambda => {
            let chi = chi_of(o)?;
            let lam = Lambda::new(ctx, &chi)?.value;
            let v = json!({"chi": chi.to_string(), "ctx": json::ctx(&ctx), "lambda": json::series(&lam)});
            Ok((true, v, Some(series_text(&lam) + "\n")))
        }
        GammaCmd::T => {
            let f = Frame::script(ctx);
            let t = f.data().t().clone();
            let v = json!({"ctx": json::ctx(&ctx), "t": json::series(&t)});
            Ok((true, v, Some(series_text(&t) + "\n")))
        }
        GammaCmd::Nm { name } => {
            let obj = zoo::build(name, ctx)?;
            let act = obj.script_actions(&gc::default_chis(ctx))?;
            let nm = gc::n_operator(&obj.script, &act)?;
            Ok((true, json!({"object": obj.name, "N_M": json::mat(&nm)}), None))
        }
        GammaCmd::Strictm { name, n } => {
            let obj = zoo::build(name, ctx)?;
            let chi = match &o.chi {
                Some(_) => chi_of(o)?,
                None => gc::default_chis(ctx)[1].clone(),
            };
            let gen = obj.script_gen(&chi)?;
            let mut rows = Vec::new();
            let mut all = true;
            let mut text = String::new();
            for k in 0..=*n {
                let ok = gc::gamma_bound_check(&obj.script, &gen, k)?;
                all &= ok;
                text.push_str(&format!("n = {k}: {}\n", ok_word(ok)));
                rows.push(json!({"n": k, "pass": ok}));
            }
            Ok((
                all,
                json!({"object": obj.name, "chi": chi.to_string(), "bounds": rows}),
                Some(text),
            ))
        }
    }
}

fn wach_cmd(ctx: PrecisionCtx, action: &WachCmd) -> Result<Executed> {
    let r = ctx.r;
    let budget = wach::default_budget(r);
    let (args, to_wach) = match action {
        WachCmd::KrToWach(a) => (a, true),
        WachCmd::WachToKr(a) => (a, false),
    };
    let base = Alpha::parse(ctx.p, &args.alpha, budget)?;
    let input = MonomialLattice::new(Alpha::parse(ctx.p, &args.lattice, budget)?.monomial, &base);
    let input_stable = wach::is_kr_stable(&input, r)?;
    if to_wach {
        // M_KR -> N -> M_KR recovers M_KR exactly when M_KR is KR-stable
        let n = wach::wach_from_kr(&input, r)?;
        let round_trip = wach::kr_from_wach(&n, r)? == input;
        let pass = !input_stable || round_trip;
        let v = json!({
            "r": r,
            "alpha": json::alpha(&base),
            "input": json::lattice(&input),
            "input_kr_stable": input_stable,
            "wach": json::lattice(&n),
            "round_trip": round_trip,
        });
        let text = format!("wach: {n}\ninput kr-stable: {input_stable}\nround trip: {round_trip}\n");
        Ok((pass, v, Some(text)))
    } else {
        let m = wach::kr_from_wach(&input, r)?;
        let stable = wach::is_kr_stable(&m, r)?;
        let v = json!({"r": r, "alpha": json::alpha(&base), "input": json::lattice(&input), "kr": json::lattice(&m), "kr_stable": stable});
        Ok((stable, v, Some(format!("kr: {m}\nkr-stable: {stable}\n"))))
    }
}
