//! Command-line front end. Every command prints one JSON document on
//! stdout (or to `--out`); failures print a JSON error on stderr and exit
//! with 2 (bad input), 3 (target not reached almost surely) or
//! 4 (no convergence / exploration cap).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::brg::{dump, explore, export_dot, finiteness_bound, Brg, DEFAULT_STATE_CAP};
use crate::model::{check_structural_nonzeno, parse_model, validate, GameArena, Model, Player};
use crate::quasi::{check_quasi_simple, check_time_monotone, default_k_bound, fit_simple, QuasiConfig};
use crate::rational::{fmt_short, parse_rational, Rational};
use crate::simulation::{
    concretize_action, estimate_value, simulate_run, ConcretizedStrategy, EpsilonSchedule, DEFAULT_STEP_CAP,
};
use crate::solver::{check_assumption_reach, ReachWitness, Solution, SolveConfig, SolverRegistry};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "ptgame", version, about = "Expected reachability-time games on probabilistic timed automata")]
struct Cli {
    /// Worker threads for sampling and simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model for well-formedness.
    Validate { model: PathBuf },
    /// Explore the boundary region graph.
    Brg(BrgArgs),
    /// Solve the expected reachability-time game.
    Solve(SolveArgs),
    /// Solve the expected discounted-time game.
    Discounted(DiscountedArgs),
    /// Sampled checks of the value function's structure.
    CheckProperties(PropertyArgs),
    /// Monte Carlo estimate under the computed strategies.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct Common {
    model: PathBuf,
    /// Write the result document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Abort exploration beyond this many states.
    #[arg(long, default_value_t = DEFAULT_STATE_CAP)]
    state_cap: usize,
}

#[derive(Debug, Args)]
struct BrgArgs {
    #[command(flatten)]
    common: Common,
    /// Write the graph in DOT format.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Write every state and transition as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Certified rational values (same as `--method exact`).
    #[arg(long)]
    exact: bool,
    /// Solver name; see `--list-methods`.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    list_methods: bool,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iterations: usize,
    /// Boundary offset for the timed action reported at the initial state.
    #[arg(long, default_value = "1/100")]
    epsilon: String,
}

#[derive(Debug, Args)]
struct DiscountedArgs {
    #[command(flatten)]
    common: Common,
    /// Discount factor `num/den` in [0,1).
    #[arg(long)]
    lambda: String,
    /// Keep playing (and paying) after a final state is reached.
    #[arg(long)]
    through_finals: bool,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long, default_value_t = 1_000_000)]
    max_iterations: usize,
}

#[derive(Debug, Args)]
struct PropertyArgs {
    #[command(flatten)]
    common: Common,
    /// Sampled pairs per region.
    #[arg(long, default_value_t = 200)]
    pairs: usize,
    /// Delays per target region in the time-monotonicity check.
    #[arg(long, default_value_t = 9)]
    grid: usize,
    /// Lipschitz bound (default `1 + |C|`).
    #[arg(long = "K")]
    k_bound: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 10_000)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "1/1000")]
    epsilon: String,
    /// Use the `ε/2^{n+1}` schedule instead of a fixed offset.
    #[arg(long)]
    decaying: bool,
    #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
    step_cap: usize,
    /// Write one line per step of the first run.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the estimate as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Failure::plain(Error::Domain(e.to_string()))),
        },
        None => dispatch(cli.command),
    };
    match outcome {
        Ok(Output { doc, out, code }) => {
            let text = serde_json::to_string_pretty(&doc).expect("JSON values serialize") + "\n";
            let written = match out {
                Some(path) => fs::write(&path, text).map_err(Error::from),
                None => stdout.write_all(text.as_bytes()).map_err(Error::from),
            };
            match written {
                Ok(()) => code,
                Err(e) => report(stderr, Failure::plain(e)),
            }
        }
        Err(f) => report(stderr, f),
    }
}

struct Output {
    doc: Value,
    out: Option<PathBuf>,
    code: i32,
}

struct Failure {
    error: Error,
    detail: Option<Value>,
}

impl Failure {
    fn plain(error: Error) -> Self {
        Self { error, detail: None }
    }
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Self::plain(error)
    }
}

fn report(stderr: &mut dyn Write, f: Failure) -> i32 {
    let kind = match &f.error {
        Error::Domain(_) => "domain",
        Error::Parse(_) => "parse",
        Error::Validation(_) => "validation",
        Error::Precondition(_) => "precondition",
        Error::StateCap { .. } => "state_cap",
        Error::Assumption(_) => "assumption",
        Error::Convergence { .. } => "convergence",
        Error::Model(_) => "model",
        Error::Internal(_) => "internal",
        Error::Io(_) => "io",
    };
    let mut doc = json!({ "error": kind, "message": f.error.to_string() });
    if let Some(d) = f.detail {
        doc["detail"] = d;
    }
    let _ = writeln!(stderr, "{}", serde_json::to_string_pretty(&doc).expect("JSON values serialize"));
    f.error.exit_code()
}

fn dispatch(cmd: Command) -> std::result::Result<Output, Failure> {
    match cmd {
        Command::Validate { model } => cmd_validate(&model),
        Command::Brg(a) => cmd_brg(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Discounted(a) => cmd_discounted(a),
        Command::CheckProperties(a) => cmd_check_properties(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn load(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path)?;
    parse_model(&text)
}

/// Parses and validates, failing with the violation list.
fn load_valid(path: &Path) -> std::result::Result<Model, Failure> {
    let model = load(path)?;
    let report = validate(&model);
    if !report.is_ok() {
        return Err(Failure {
            detail: Some(json!({ "violations": report.violations })),
            error: Error::Validation(report.messages()),
        });
    }
    Ok(model)
}

fn witness_detail(arena: &GameArena, brg: &Brg, w: &ReachWitness) -> Value {
    let label = |s: usize| {
        let st = &brg.states[s];
        format!(
            "s{s}: {} {} in {}",
            arena.location_name(st.location),
            arena.ctx().display_valuation(&st.valuation),
            st.region.display(arena.ctx())
        )
    };
    match w {
        ReachWitness::EndComponent { states } => json!({
            "kind": "end_component",
            "states": states.iter().map(|&s| label(s)).collect::<Vec<_>>(),
        }),
        ReachWitness::Deadlock { state } => json!({ "kind": "deadlock", "state": label(*state) }),
    }
}

/// Validated model, its explored graph, and the reachability assumption checked.
fn prepare(common: &Common, check_reach: bool) -> std::result::Result<(Model, Brg), Failure> {
    let model = load_valid(&common.model)?;
    let brg = explore(&model.arena, &model.initial, common.state_cap)?;
    if check_reach {
        if let Err(w) = check_assumption_reach(&brg) {
            return Err(Failure {
                detail: Some(witness_detail(&model.arena, &brg, &w)),
                error: Error::Assumption(w),
            });
        }
    }
    Ok((model, brg))
}

fn rational_arg(name: &str, text: &str) -> Result<Rational> {
    parse_rational(text).map_err(|e| Error::Domain(format!("--{name}: {e}")))
}

fn cmd_validate(path: &Path) -> std::result::Result<Output, Failure> {
    let model = load(path)?;
    let report = validate(&model);
    let nonzeno = check_structural_nonzeno(&model.arena.pta);
    let ok = report.is_ok();
    Ok(Output {
        doc: json!({
            "valid": ok,
            "violations": report.violations,
            "messages": report.messages(),
            "structurally_non_zeno": nonzeno,
        }),
        out: None,
        code: if ok { 0 } else { 2 },
    })
}

fn cmd_brg(a: BrgArgs) -> std::result::Result<Output, Failure> {
    let (model, brg) = prepare(&a.common, false)?;
    if let Some(path) = &a.dot {
        fs::write(path, export_dot(&model.arena, &brg)).map_err(Error::from)?;
    }
    if let Some(path) = &a.json {
        let text = serde_json::to_string_pretty(&dump(&model.arena, &brg)).map_err(|e| Error::Internal(e.to_string()))?;
        fs::write(path, text + "\n").map_err(Error::from)?;
    }
    let bound = finiteness_bound(&model.arena);
    Ok(Output {
        doc: json!({
            "states": brg.len(),
            "transitions": brg.transition_count(),
            "final_states": brg.states.iter().filter(|s| s.is_final).count(),
            "bound": bound,
            "within_bound": brg.len() <= bound,
        }),
        out: a.common.out,
        code: 0,
    })
}

fn initial_timed_action(model: &Model, brg: &Brg, sol: &Solution, eps: &Rational) -> Result<Option<Value>> {
    if model.arena.is_final(model.initial.location) {
        return Ok(None);
    }
    let Some(j) = sol.choice(brg, brg.initial) else {
        return Ok(None);
    };
    let act = &brg.transitions[brg.initial][j].action;
    let ta = concretize_action(&model.arena, &model.initial, act, eps)?;
    Ok(Some(json!({
        "player": model.arena.owner(model.initial.location),
        "boundary_action": act.display(&model.arena),
        "delay": fmt_short(&ta.delay),
        "action": model.arena.pta.actions[ta.action],
        "epsilon": fmt_short(eps),
    })))
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Internal(e.to_string()))
}

fn cmd_solve(a: SolveArgs) -> std::result::Result<Output, Failure> {
    let registry = SolverRegistry::with_defaults();
    if a.list_methods {
        let methods: Vec<Value> = registry
            .names()
            .into_iter()
            .map(|n| json!({ "name": n, "description": registry.get(n).map(|s| s.description()) }))
            .collect();
        return Ok(Output {
            doc: json!({ "methods": methods }),
            out: a.common.out,
            code: 0,
        });
    }
    let method = match (&a.method, a.exact) {
        (Some(m), _) => m.clone(),
        (None, true) => "exact".to_string(),
        (None, false) => "value-iteration".to_string(),
    };
    if a.tolerance <= 0.0 || !a.tolerance.is_finite() {
        return Err(Error::Domain(format!("--tolerance must be positive, got {}", a.tolerance)).into());
    }
    let eps = rational_arg("epsilon", &a.epsilon)?;
    let (model, brg) = prepare(&a.common, true)?;
    let cfg = SolveConfig {
        tolerance: a.tolerance,
        max_iterations: a.max_iterations,
        epsilon: eps.clone(),
        ..SolveConfig::default()
    };
    let sol = registry.solve(&method, &model.arena, &brg, &cfg)?;
    let mut doc = to_value(&sol.report(&model.arena, &brg))?;
    doc["initial_timed_action"] = initial_timed_action(&model, &brg, &sol, &eps)?.unwrap_or(Value::Null);
    let code = match sol.certificate.as_ref().map(|c| c.is_valid()) {
        Some(false) => 1,
        _ => 0,
    };
    Ok(Output {
        doc,
        out: a.common.out,
        code,
    })
}

fn cmd_discounted(a: DiscountedArgs) -> std::result::Result<Output, Failure> {
    let lambda = rational_arg("lambda", &a.lambda)?;
    let (model, brg) = prepare(&a.common, false)?;
    let cfg = SolveConfig {
        tolerance: a.tolerance,
        max_iterations: a.max_iterations,
        lambda: Some(lambda),
        absorbing_finals: !a.through_finals,
        ..SolveConfig::default()
    };
    let sol = SolverRegistry::with_defaults().solve("discounted", &model.arena, &brg, &cfg)?;
    Ok(Output {
        doc: to_value(&sol.report(&model.arena, &brg))?,
        out: a.common.out,
        code: 0,
    })
}

fn cmd_check_properties(a: PropertyArgs) -> std::result::Result<Output, Failure> {
    let (model, brg) = prepare(&a.common, true)?;
    let arena = &model.arena;
    let ctx = arena.ctx();
    let k_bound = match &a.k_bound {
        Some(t) => rational_arg("K", t)?,
        None => default_k_bound(ctx),
    };
    let cfg = QuasiConfig {
        seed: a.seed,
        ..QuasiConfig::default()
    };

    let mut pairs: Vec<(usize, crate::clock::ClockRegion)> =
        brg.states.iter().map(|s| (s.location, s.region.clone())).collect();
    pairs.sort();
    pairs.dedup();

    let mut all_pass = true;
    let mut regions = Vec::new();
    for (location, region) in &pairs {
        let report = check_quasi_simple(arena, *location, region, a.pairs, &k_bound, &cfg)?;
        let form = fit_simple(arena, *location, region, 8, &cfg)?;
        all_pass &= report.passes();
        regions.push(json!({
            "location": arena.location_name(*location),
            "region": region.display(ctx),
            "simple_form": form.map(|f| f.display(ctx.clocks())),
            "report": report,
        }));
    }

    let mut time_checks = Vec::new();
    let init = &model.initial;
    if !arena.is_final(init.location) {
        for tr in &brg.transitions[brg.initial] {
            let act = &tr.action;
            let rep = check_time_monotone(arena, init, act.action, &act.target, a.grid, &cfg.solve)?;
            all_pass &= rep.is_monotone();
            time_checks.push(json!({
                "action": arena.pta.actions[act.action],
                "target": act.target.display(ctx),
                "monotone": rep.is_monotone(),
                "points": rep.points.iter().map(|(t, f)| [fmt_short(t), fmt_short(f)]).collect::<Vec<_>>(),
            }));
        }
    }
    Ok(Output {
        doc: json!({
            "pass": all_pass,
            "k_bound": fmt_short(&k_bound),
            "pairs": a.pairs,
            "regions": regions,
            "time_monotone": time_checks,
        }),
        out: a.common.out,
        code: if all_pass { 0 } else { 1 },
    })
}

fn cmd_simulate(a: SimulateArgs) -> std::result::Result<Output, Failure> {
    if a.runs < 2 {
        return Err(Error::Domain(format!("--runs must be at least 2, got {}", a.runs)).into());
    }
    let eps = rational_arg("epsilon", &a.epsilon)?;
    let (model, brg) = prepare(&a.common, true)?;
    let cfg = SolveConfig {
        epsilon: eps.clone(),
        ..SolveConfig::default()
    };
    let sol = SolverRegistry::with_defaults().solve("exact", &model.arena, &brg, &cfg)?;
    let schedule = if a.decaying {
        EpsilonSchedule::Decaying
    } else {
        EpsilonSchedule::Fixed
    };
    let arena = &model.arena;
    let mu = ConcretizedStrategy::new(arena, &brg, Player::Min, sol.min.clone(), eps.clone(), schedule, cfg.clone())?;
    let chi = ConcretizedStrategy::new(arena, &brg, Player::Max, sol.max.clone(), eps.clone(), schedule, cfg.clone())?;
    let est = estimate_value(arena, &mu, &chi, &model.initial, a.runs, a.seed, a.step_cap)?;

    if let Some(path) = &a.trace {
        let run = simulate_run(arena, &mu, &chi, &model.initial, a.seed, a.step_cap, true)?;
        let mut text = String::new();
        for step in run.trace.unwrap_or_default() {
            text.push_str(&step.line(arena));
            text.push('\n');
        }
        fs::write(path, text).map_err(Error::from)?;
    }
    if let Some(path) = &a.csv {
        fs::write(path, est.to_csv()?).map_err(Error::from)?;
    }
    let certified = sol.initial_value(&brg);
    let gap = est.mean.map(|m| (m - certified.to_f64()).abs());
    Ok(Output {
        doc: json!({
            "certified_value": certified.exact().map(|v| v.to_string()),
            "certified_value_f64": certified.to_f64(),
            "epsilon": fmt_short(&eps),
            "schedule": schedule,
            "seed": a.seed,
            "step_cap": a.step_cap,
            "estimate": est,
            "abs_gap": gap,
        }),
        out: a.common.out,
        code: 0,
    })
}
