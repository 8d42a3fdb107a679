//! `ppud`: command-line front end for the verification engine.

mod report;

use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Map, Value};

use ppud_core::bounds::{bound_report, poly1, poly2};
use ppud_core::container::{container_of, container_to_predicate};
use ppud_core::fairness::fair_outcomes;
use ppud_core::gre::{build_init_gre, build_wellspec_gre, Gre};
use ppud_core::membership::member;
use ppud_core::reach::DEFAULT_NODE_BUDGET;
use ppud_core::reduction::{compile_2cm, initial_config_2cm};
use ppud_core::run::{check_run, split_trace_of, trace_of, ConcreteRun};
use ppud_core::text::{self, ParseError, SourceKind};
use ppud_core::transform::{agents_core, data_core, normalize_run};
use ppud_core::verify::{self, SearchBounds, Verdict, VerifyOptions};
use ppud_core::{gen, CanonicalConfiguration, Protocol};

use report::{Outcome, Status, INPUT_ERROR};

#[derive(Parser)]
#[command(name = "ppud", version, about = "Bounded verification of population protocols with unordered data")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Opts {
    /// Largest number of data in searched configurations.
    #[arg(long, global = true, default_value_t = 2, value_name = "N")]
    max_data: usize,
    /// Largest number of agents per datum in searched configurations.
    #[arg(long, global = true, default_value_t = 2, value_name = "K")]
    max_agents: u32,
    /// Configurations one reachability graph may hold.
    #[arg(long, global = true, default_value_t = DEFAULT_NODE_BUDGET, value_name = "N")]
    node_budget: usize,
    /// Count the empty configuration as initial.
    #[arg(long, global = true)]
    include_empty_config: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Seed for `validate`'s random corpus.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

/// Inputs are file paths or inline text.
#[derive(Subcommand)]
enum Command {
    /// Is a configuration a member of an expression?
    Member { protocol: String, gre: String, config: String },
    /// Search for a member of an expression within the bounds.
    Emptiness { protocol: String, gre: String },
    /// Does every initial configuration have a unique fair outcome?
    WellSpecified { protocol: String },
    /// Does the protocol compute an interval predicate?
    Correct { protocol: String, predicate: String },
    /// Can some configuration of FROM reach TO?
    SetReach { protocol: String, from: String, to: String },
    /// Is HOME reachable from everything reachable from the start set?
    HomeSpace {
        protocol: String,
        home: String,
        /// Start set; defaults to the initial configurations.
        #[arg(long)]
        from: Option<String>,
    },
    /// Outcomes of fair runs from one configuration.
    FairOutcomes { protocol: String, config: String },
    /// Shrink a run to few agents per datum and few observed data.
    NormalizeRun { protocol: String, run: String },
    /// Shrink each datum of a run to its agent core.
    AgentsCore { protocol: String, run: String },
    /// Collapse data sharing a trace.
    DataCore {
        protocol: String,
        run: String,
        /// Agents-per-datum bound; defaults to the run's maximum.
        #[arg(long)]
        k: Option<u32>,
    },
    /// Per-datum traces of a run.
    Trace {
        protocol: String,
        run: String,
        #[arg(long)]
        datum: Option<String>,
        /// Split the traces at this 1-based configuration index.
        #[arg(long)]
        at: Option<usize>,
    },
    /// The (n, M)-container of a configuration.
    Container {
        protocol: String,
        config: String,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 1)]
        m: u32,
    },
    /// The interval predicate characterising a container.
    PredOfContainer { protocol: String, container: String },
    /// Container and witness-size bounds for a protocol and expression.
    Bounds {
        protocol: String,
        /// Defaults to the well-specification expression.
        gre: Option<String>,
        #[arg(long, default_value_t = 2)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        m: u64,
    },
    /// Compile a two-counter machine to a protocol.
    #[command(name = "gen-2cm")]
    Gen2cm {
        machine: String,
        /// Data carrying one `Uniq` agent in the emitted initial configuration.
        #[arg(long, default_value_t = 1)]
        uniq_data: usize,
        /// Reservoir agents per datum in the emitted initial configuration.
        #[arg(long, default_value_t = 1)]
        reservoir: u32,
    },
    /// Check files, or with `--seed`, round-trip a random corpus.
    Validate {
        /// A protocol (`.pp`) first, then files read against it; `.cm` files stand alone.
        files: Vec<String>,
        /// Corpus size with `--seed`.
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
}

struct InputError(String);

type CmdResult = Result<Outcome, InputError>;

const KNOWN_EXTENSIONS: [&str; 7] = ["pp", "cfg", "pred", "gre", "run", "cm", "cont"];

/// Reads a file, or takes the argument itself as source text when no such
/// file exists and it does not look like a path.
fn source(arg: &str) -> Result<(String, String), InputError> {
    let path = Path::new(arg);
    if path.is_file() {
        return std::fs::read_to_string(path)
            .map(|t| (arg.to_string(), t))
            .map_err(|e| InputError(format!("{arg}: {e}")));
    }
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if !arg.contains(char::is_whitespace) && KNOWN_EXTENSIONS.contains(&ext) {
        return Err(InputError(format!("{arg}: no such file")));
    }
    Ok(("<inline>".into(), arg.to_string()))
}

fn located(label: &str, e: ParseError) -> InputError {
    InputError(format!("{label}:{}:{}: {}", e.line, e.column, e.message))
}

fn load<T>(arg: &str, parse: impl FnOnce(&str) -> Result<T, ParseError>) -> Result<T, InputError> {
    let (label, text) = source(arg)?;
    parse(&text).map_err(|e| located(&label, e))
}

fn load_protocol(arg: &str) -> Result<Protocol, InputError> {
    let p = load(arg, text::parse_protocol)?;
    let diags = p.validate();
    if !diags.is_empty() {
        let list: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        return Err(InputError(format!("{arg}: invalid protocol: {}", list.join("; "))));
    }
    Ok(p)
}

fn load_run(p: &Protocol, arg: &str) -> Result<ConcreteRun, InputError> {
    let r = load(arg, |t| text::parse_run(t, p))?;
    check_run(p, &r).map_err(|e| InputError(format!("{arg}: invalid run: {e}")))?;
    Ok(r)
}

impl Opts {
    fn bounds(&self) -> Result<SearchBounds, InputError> {
        if self.max_data == 0 || self.max_agents == 0 {
            return Err(InputError("--max-data and --max-agents must be at least 1".into()));
        }
        Ok(SearchBounds::new(self.max_data, self.max_agents))
    }

    fn verify(&self) -> VerifyOptions {
        VerifyOptions { node_budget: self.node_budget, include_empty: self.include_empty_config }
    }
}

fn bounds_json(b: SearchBounds) -> Value {
    json!({"max_data": b.max_data, "max_agents": b.max_agents_per_datum})
}

fn verdict_json(p: &Protocol, v: &Verdict) -> Value {
    match v {
        Verdict::Empty { up_to } => json!({"result": "empty", "up_to": bounds_json(*up_to)}),
        Verdict::NonEmpty { witness } => json!({"result": "nonempty", "witness": text::write_config(p, witness)}),
        Verdict::Inconclusive { reason, checked } => {
            json!({"result": "inconclusive", "reason": reason.to_string(), "checked": checked})
        }
    }
}

fn verdict_status(v: &Verdict) -> Status {
    match v {
        Verdict::Empty { .. } => Status::Ok,
        Verdict::NonEmpty { .. } => Status::Violated,
        Verdict::Inconclusive { .. } => Status::Inconclusive,
    }
}

fn verdict_summary(name: &str, v: &Verdict, p: &Protocol) -> String {
    match v {
        Verdict::Empty { up_to } => format!(
            "Empty({name}) up to bounds ({} data, {} agents per datum)",
            up_to.max_data, up_to.max_agents_per_datum
        ),
        Verdict::NonEmpty { witness } => format!("NonEmpty({name}): {}", text::config_summary(p, witness)),
        Verdict::Inconclusive { reason, .. } => format!("Inconclusive({name}): {reason}"),
    }
}

fn verdict_outcome(command: &'static str, name: &str, p: &Protocol, v: Verdict) -> Outcome {
    Outcome::new(command, verdict_status(&v), verdict_summary(name, &v, p)).with("verdict", verdict_json(p, &v))
}

fn run_stats(p: &Protocol, r: &ConcreteRun) -> Value {
    json!({
        "agents": r.agents.len(),
        "data": r.data().len(),
        "steps": r.steps.len(),
        "max_agents_per_datum": r.max_agents_per_datum(),
        "max_observed_per_datum": r.max_observed_per_datum(),
        "externally_observed_data": r.externally_observed_data().len(),
        "start": text::write_config(p, &r.start_configuration(p.num_states())),
    })
}

fn transform_outcome(command: &'static str, p: &Protocol, before: &ConcreteRun, after: ConcreteRun) -> CmdResult {
    let ns = p.num_states();
    let ends = |r: &ConcreteRun| -> Result<CanonicalConfiguration, InputError> {
        let end = r.end_states(p).map_err(|e| InputError(format!("transformed run is invalid: {e}")))?;
        Ok(r.canonical(ns, &end))
    };
    let same_start = before.start_configuration(ns) == after.start_configuration(ns);
    let same_end = ends(before)? == ends(&after)?;
    let summary = format!(
        "{command}: {} agents, {} data -> {} agents, {} data",
        before.agents.len(),
        before.data().len(),
        after.agents.len(),
        after.data().len()
    );
    Ok(Outcome::new(command, Status::Ok, summary)
        .with("before", run_stats(p, before))
        .with("after", run_stats(p, &after))
        .with("same_start", same_start)
        .with("same_end", same_end)
        .with("run", text::write_run(p, &after)))
}

fn big_text(v: &BigUint) -> String {
    if v.bits() <= 4096 {
        v.to_string()
    } else {
        format!("> 2^{}", v.bits() - 1)
    }
}

fn dispatch(cli: Cli) -> CmdResult {
    let o = &cli.opts;
    match cli.command {
        Command::Member { protocol, gre, config } => {
            let p = load_protocol(&protocol)?;
            let e = load(&gre, |t| text::parse_gre(t, &p))?;
            let c = load(&config, |t| text::parse_config(t, &p))?;
            match member(&p, &e, &c, o.node_budget) {
                Ok(b) => Ok(Outcome::new("member", Status::Ok, b.to_string())
                    .with("member", b)
                    .with("config", text::write_config(&p, &c))),
                Err(reason) => Ok(Outcome::new("member", Status::Inconclusive, format!("inconclusive: {reason}"))
                    .with("reason", reason.to_string())),
            }
        }
        Command::Emptiness { protocol, gre } => {
            let p = load_protocol(&protocol)?;
            let e = load(&gre, |t| text::parse_gre(t, &p))?;
            Ok(verdict_outcome("emptiness", "E", &p, verify::emptiness(&p, &e, o.bounds()?, o.verify())))
        }
        Command::WellSpecified { protocol } => {
            let p = load_protocol(&protocol)?;
            let v = verify::check_well_specification(&p, o.bounds()?, o.verify());
            Ok(verdict_outcome("well-specified", "E_ws", &p, v))
        }
        Command::Correct { protocol, predicate } => {
            let p = load_protocol(&protocol)?;
            let phi = load(&predicate, |t| text::parse_predicate(t, &p))?;
            let r = verify::check_correctness(&p, &phi, o.bounds()?, o.verify())
                .map_err(|e| InputError(format!("{predicate}: {e}")))?;
            let status = [&r.top, &r.bot].into_iter().map(verdict_status).max_by_key(|s| match s {
                Status::Ok => 0,
                Status::Inconclusive => 1,
                Status::Violated => 2,
            });
            let status = status.unwrap_or(Status::Ok);
            let summary = match status {
                Status::Ok => "correct up to bounds".to_string(),
                Status::Violated => {
                    let w = r.top.witness().or(r.bot.witness()).expect("a witness");
                    format!("incorrect: {}", text::config_summary(&p, w))
                }
                Status::Inconclusive => "inconclusive".to_string(),
            };
            Ok(Outcome::new("correct", status, summary)
                .with("top", verdict_json(&p, &r.top))
                .with("bot", verdict_json(&p, &r.bot))
                .with("predicate", text::write_predicate(&p, &phi)))
        }
        Command::SetReach { protocol, from, to } => {
            let p = load_protocol(&protocol)?;
            let e1 = load(&from, |t| text::parse_gre(t, &p))?;
            let e2 = load(&to, |t| text::parse_gre(t, &p))?;
            let v = verify::check_set_reachability(&p, &e1, &e2, o.bounds()?, o.verify());
            Ok(verdict_outcome("set-reach", "E_reach", &p, v))
        }
        Command::HomeSpace { protocol, home, from } => {
            let p = load_protocol(&protocol)?;
            let h = load(&home, |t| text::parse_gre(t, &p))?;
            let start = match from {
                Some(f) => load(&f, |t| text::parse_gre(t, &p))?,
                None => build_init_gre(&p, o.include_empty_config),
            };
            let v = verify::check_home_space_from(&p, &start, &h, o.bounds()?, o.verify());
            Ok(verdict_outcome("home-space", "E_home", &p, v))
        }
        Command::FairOutcomes { protocol, config } => {
            let p = load_protocol(&protocol)?;
            let c = load(&config, |t| text::parse_config(t, &p))?;
            match fair_outcomes(&p, &c, o.node_budget) {
                Ok(set) => {
                    let names: Vec<String> = set.iter().map(|f| format!("{f:?}")).collect();
                    Ok(Outcome::new("fair-outcomes", Status::Ok, format!("{{{}}}", names.join(", ")))
                        .with("outcomes", names)
                        .with("config", text::write_config(&p, &c)))
                }
                Err(reason) => Ok(Outcome::new("fair-outcomes", Status::Inconclusive, format!("inconclusive: {reason}"))
                    .with("reason", reason.to_string())),
            }
        }
        Command::NormalizeRun { protocol, run } => {
            let p = load_protocol(&protocol)?;
            let r = load_run(&p, &run)?;
            let out = normalize_run(&p, &r).map_err(|e| InputError(e.to_string()))?;
            transform_outcome("normalize-run", &p, &r, out)
        }
        Command::AgentsCore { protocol, run } => {
            let p = load_protocol(&protocol)?;
            let r = load_run(&p, &run)?;
            let out = agents_core(&p, &r).map_err(|e| InputError(e.to_string()))?;
            transform_outcome("agents-core", &p, &r, out)
        }
        Command::DataCore { protocol, run, k } => {
            let p = load_protocol(&protocol)?;
            let r = load_run(&p, &run)?;
            let k = k.unwrap_or(r.max_agents_per_datum() as u32);
            let out = data_core(&p, &r, k).map_err(|e| InputError(e.to_string()))?;
            transform_outcome("data-core", &p, &r, out).map(|o| o.with("k", k))
        }
        Command::Trace { protocol, run, datum, at } => {
            let p = load_protocol(&protocol)?;
            let r = load_run(&p, &run)?;
            let data = match datum {
                Some(d) => vec![d],
                None => r.data(),
            };
            let name = |q: usize| p.states[q].as_str();
            let mut traces = Map::new();
            for d in &data {
                let line = match at {
                    None => {
                        let t = trace_of(&p, &r, d).map_err(|e| InputError(e.to_string()))?;
                        let parts: Vec<String> =
                            t.0.iter().map(|(&(a, b), k)| format!("{} -> {}: {k}", name(a), name(b))).collect();
                        parts.join(", ")
                    }
                    Some(i) => {
                        let t = split_trace_of(&p, &r, d, i).map_err(|e| InputError(e.to_string()))?;
                        let parts: Vec<String> = t
                            .0
                            .iter()
                            .map(|(&(a, b, c), k)| format!("{} -> {} -> {}: {k}", name(a), name(b), name(c)))
                            .collect();
                        parts.join(", ")
                    }
                };
                traces.insert(d.clone(), line.into());
            }
            let kind = if at.is_some() { "split traces" } else { "traces" };
            let mut out = Outcome::new("trace", Status::Ok, format!("{} {kind}", data.len())).with("traces", traces);
            if let Some(i) = at {
                out = out.with("at", i);
            }
            Ok(out)
        }
        Command::Container { protocol, config, n, m } => {
            let p = load_protocol(&protocol)?;
            let c = load(&config, |t| text::parse_config(t, &p))?;
            if n == 0 || m == 0 {
                return Err(InputError("--n and --m must be at least 1".into()));
            }
            let cont = container_of(&c, n, m);
            Ok(Outcome::new("container", Status::Ok, format!("{} boxes", cont.counts().len()))
                .with("container", text::write_container(&p, &cont)))
        }
        Command::PredOfContainer { protocol, container } => {
            let p = load_protocol(&protocol)?;
            let cont = load(&container, |t| text::parse_container(t, &p))?;
            let phi = container_to_predicate(&cont);
            let m = phi.metrics();
            Ok(Outcome::new("pred-of-container", Status::Ok, format!("width {}, height {}", m.width, m.height))
                .with("predicate", text::write_predicate(&p, &phi))
                .with("metrics", json!({"width": m.width, "height": m.height, "size": m.size})))
        }
        Command::Bounds { protocol, gre, n, m } => {
            let p = load_protocol(&protocol)?;
            let e = match gre {
                Some(g) => load(&g, |t| text::parse_gre(t, &p))?,
                None => build_wellspec_gre(&p, o.include_empty_config),
            };
            Ok(bounds_outcome(&p, &e, n, m))
        }
        Command::Gen2cm { machine, uniq_data, reservoir } => {
            let cm = load(&machine, text::parse_cm)?;
            let cp = compile_2cm(&cm).map_err(|e| InputError(e.to_string()))?;
            if uniq_data == 0 {
                return Err(InputError("--uniq-data must be at least 1".into()));
            }
            let c = initial_config_2cm(&cp, uniq_data, reservoir);
            let p = &cp.protocol;
            let summary = format!("{} states, {} transitions", p.num_states(), p.transitions.len());
            Ok(Outcome::new("gen-2cm", Status::Ok, summary)
                .with("protocol", text::write_protocol(p))
                .with("initial_config", text::write_config(p, &c)))
        }
        Command::Validate { files, count } => match o.seed {
            Some(seed) => Ok(self_test(seed, count)),
            None => validate_files(&files),
        },
    }
}

fn bounds_outcome(p: &Protocol, e: &Gre, n: u64, m: u64) -> Outcome {
    let r = bound_report(p, e, n, m);
    let s = r.states;
    let f_ok = r.f_value <= BigUint::from(n) * poly1(s);
    // n^poly2 is materialised only while it stays reasonably small.
    let p2 = poly2(s);
    let g_ok = match u64::try_from(&p2) {
        Ok(e) if (e as f64) * (n.max(1) as f64).log2() < 1e7 => {
            Value::Bool(r.g_value <= BigUint::from(m) * num_traits::pow(BigUint::from(n), e as usize))
        }
        _ => Value::Null,
    };
    let beta_value = r.beta.to_string();
    Outcome::new("bounds", Status::Ok, format!("|P| = {s}, |E| = {}, norm = {}", r.length, r.norm))
        .with("size", s)
        .with("length", r.length)
        .with("norm", r.norm)
        .with("n", n)
        .with("m", m)
        .with("f", big_text(&r.f_value))
        .with("g", big_text(&r.g_value))
        .with("poly1", poly1(s).to_string())
        .with("poly2", p2.to_string())
        .with("f_within_poly1", f_ok)
        .with("g_within_poly2", g_ok)
        .with("alpha", big_text(&r.alpha))
        .with("beta", beta_value)
        .with("witness_agents", r.witness_agent_bound.to_string())
}

fn validate_files(files: &[String]) -> CmdResult {
    let mut protocol: Option<Protocol> = None;
    let mut problems: Vec<String> = Vec::new();
    let mut checked = Map::new();
    for f in files {
        let ext = Path::new(f).extension().and_then(|e| e.to_str()).unwrap_or("");
        let kind = SourceKind::from_extension(ext)
            .ok_or_else(|| InputError(format!("{f}: unknown file kind; expected one of {}", KNOWN_EXTENSIONS.join(", "))))?;
        let (label, src) = source(f)?;
        let status = match kind {
            SourceKind::Protocol => {
                let p = text::parse_protocol(&src).map_err(|e| located(&label, e))?;
                let diags: Vec<String> = p.validate().iter().map(|d| format!("{f}: {d}")).collect();
                let io = p.is_immediate_observation();
                problems.extend(diags.iter().cloned());
                protocol = Some(p);
                if diags.is_empty() {
                    if io {
                        "valid immediate-observation protocol"
                    } else {
                        "valid protocol"
                    }
                } else {
                    "invalid protocol"
                }
            }
            SourceKind::CounterMachine => {
                text::parse_cm(&src).map_err(|e| located(&label, e))?;
                "valid machine"
            }
            _ => {
                let p = protocol.as_ref().ok_or_else(|| InputError(format!("{f}: give a protocol file first")))?;
                let doc = text::SourceDocument::new(kind, src).parse(Some(p)).map_err(|e| located(&label, e))?;
                match doc {
                    text::Document::Run(r) => match check_run(p, &r) {
                        Ok(_) => "valid run",
                        Err(e) => {
                            problems.push(format!("{f}: {e}"));
                            "invalid run"
                        }
                    },
                    _ => "parsed",
                }
            }
        };
        checked.insert(f.clone(), Value::from(status));
    }
    if files.is_empty() {
        return Err(InputError("nothing to validate; give files or --seed".into()));
    }
    let status = if problems.is_empty() { Status::Ok } else { Status::Violated };
    let summary = if problems.is_empty() {
        format!("{} files valid", files.len())
    } else {
        format!("{} problems", problems.len())
    };
    Ok(Outcome::new("validate", status, summary).with("files", checked).with("problems", problems))
}

/// Random protocols, configurations, predicates, expressions, runs and
/// containers, each written and read back.
fn self_test(seed: u64, count: usize) -> Outcome {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut failures = Vec::new();
    for i in 0..count {
        let ns = rng.gen_range(2..=4);
        let p = gen::ioppud(&mut rng, ns);
        let mut fail = |what: &str| failures.push(format!("item {i}: {what} did not round-trip"));
        if text::parse_protocol(&text::write_protocol(&p)).as_ref() != Ok(&p) {
            fail("protocol");
        }
        let c = gen::configuration(&mut rng, ns, 3, 3);
        if text::parse_config(&text::write_config(&p, &c), &p).as_ref() != Ok(&c) {
            fail("configuration");
        }
        let phi = gen::predicate(&mut rng, ns, 2, 3, 2);
        if text::parse_predicate(&text::write_predicate(&p, &phi), &p).as_ref() != Ok(&phi) {
            fail("predicate");
        }
        let e = gen::gre(&mut rng, ns, 3);
        if text::parse_gre(&text::write_gre(&p, &e), &p).as_ref() != Ok(&e) {
            fail("expression");
        }
        let r = gen::run(&mut rng, &p, 6, 3, 8);
        if text::parse_run(&text::write_run(&p, &r), &p).as_ref() != Ok(&r) || check_run(&p, &r).is_err() {
            fail("run");
        }
        let cont = container_of(&c, 2, 2);
        if text::parse_container(&text::write_container(&p, &cont), &p).as_ref() != Ok(&cont) {
            fail("container");
        }
    }
    let status = if failures.is_empty() { Status::Ok } else { Status::Violated };
    Outcome::new("validate", status, format!("{count} random items, {} failures", failures.len()))
        .with("seed", seed)
        .with("count", count)
        .with("failures", failures)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { INPUT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let format = cli.opts.format;
    let command = command_name(&cli.command);
    match dispatch(cli) {
        Ok(out) => {
            match format {
                Format::Text => emit(&out.text()),
                Format::Json => emit(&format!("{}\n", serde_json::to_string_pretty(&out.json()).expect("serialisable"))),
            }
            out.status.exit_code()
        }
        Err(InputError(msg)) => {
            match format {
                Format::Text => eprintln!("error: {msg}"),
                Format::Json => {
                    let v = json!({"schema": report::SCHEMA_VERSION, "command": command, "status": "error", "error": msg});
                    emit(&format!("{}\n", serde_json::to_string_pretty(&v).expect("serialisable")));
                }
            }
            ExitCode::from(INPUT_ERROR)
        }
    }
}

/// Writes to stdout, ignoring a closed pipe.
fn emit(s: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(s.as_bytes()).and_then(|_| out.flush());
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Member { .. } => "member",
        Command::Emptiness { .. } => "emptiness",
        Command::WellSpecified { .. } => "well-specified",
        Command::Correct { .. } => "correct",
        Command::SetReach { .. } => "set-reach",
        Command::HomeSpace { .. } => "home-space",
        Command::FairOutcomes { .. } => "fair-outcomes",
        Command::NormalizeRun { .. } => "normalize-run",
        Command::AgentsCore { .. } => "agents-core",
        Command::DataCore { .. } => "data-core",
        Command::Trace { .. } => "trace",
        Command::Container { .. } => "container",
        Command::PredOfContainer { .. } => "pred-of-container",
        Command::Bounds { .. } => "bounds",
        Command::Gen2cm { .. } => "gen-2cm",
        Command::Validate { .. } => "validate",
    }
}
