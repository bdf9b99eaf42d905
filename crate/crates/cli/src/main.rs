mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use randlab::bernoulli::{concentration_experiment, sample_size, BernoulliParam, BoundFamily, ConcentrationResult};
use randlab::flow::{
    construct, covering_sets, flow_eval, minimal_semimeasure, unpair, ConstructionParams, FlowNetwork,
    StepCase, TransducerRoster,
};
use randlab::mixture::{
    audit_levels, build_mixture, check_prior, enclosure_excess, LevelReport, MixtureSchedule, ParamPrior,
    EXACT_STAGE,
};
use randlab::proxy::{deficiency_trace, example_roster, Component, ProxyMixture, Semimeasure};
use randlab::reconstruct::{reconstruct, validate_window, ReconstructionRow, SearchBudget};
use randlab::sampler::{sample_many, Sample};
use randlab::{rational, BinaryString, Error, Rational, SemimeasureTable, SimpleSet};

use output::{Format, Run, Table};

#[derive(Parser, Serialize)]
#[command(name = "randlab", version, about = "Exact-rational experiments on semimeasures and Bernoulli randomness")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, env = "RANDLAB_OUT", default_value = "randlab-out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Check a semimeasure table or a flow network file.
    Validate(ValidateArgs),
    /// Evaluate the flow of a network and its minimal semimeasure.
    Flow(FlowArgs),
    /// Run the network construction against a transducer roster.
    Construct(ConstructArgs),
    /// Draw sequences from a semimeasure table.
    Sample(SampleArgs),
    /// Deficiency trace of a prefix against a proxy mixture.
    Deficiency(DeficiencyArgs),
    /// Monte Carlo check of the estimator's uniform deviation bound.
    Estimate(EstimateArgs),
    /// Recover θ from a proxy concentrated on θ-random sequences.
    Reconstruct(ReconstructArgs),
    /// Build the Bernoulli mixture over a parameter prior and audit its mass.
    Mixture(MixtureArgs),
}

#[derive(Args, Serialize)]
struct ValidateArgs {
    #[arg(long, conflicts_with = "network", required_unless_present = "network")]
    table: Option<PathBuf>,
    #[arg(long)]
    network: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct FlowArgs {
    #[arg(long)]
    network: PathBuf,
    /// Also write a DOT rendering.
    #[arg(long)]
    dot: bool,
}

#[derive(Args, Serialize)]
struct ConstructArgs {
    #[arg(long, default_value = "1/4")]
    epsilon: String,
    #[arg(long, default_value_t = 12)]
    depth: usize,
    /// Built-in transducers, comma separated (identity, constant-zero,
    /// complement, doubler, decimate). Empty by default.
    #[arg(long, value_delimiter = ',')]
    transducers: Vec<String>,
    /// Step budget for each transducer run.
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    dot: bool,
}

#[derive(Args, Serialize)]
struct SampleArgs {
    #[arg(long)]
    table: PathBuf,
    #[arg(long, default_value_t = 1000)]
    count: u64,
    /// Stop extending at this length (defaults to the table depth).
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args, Serialize)]
struct DeficiencyArgs {
    #[arg(long)]
    prefix: String,
    /// Reference measure: `uniform` or `bernoulli:<θ>`.
    #[arg(long, default_value = "uniform")]
    measure: String,
    /// Roster file (JSON); the built-in example roster otherwise.
    #[arg(long)]
    roster: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    stage: u64,
}

#[derive(Args, Serialize)]
struct EstimateArgs {
    #[arg(long, default_value = "1/2")]
    theta: String,
    #[arg(long, default_value = "1/10")]
    epsilon: String,
    #[arg(long, default_value = "1/10")]
    delta: String,
    #[arg(long, default_value_t = BoundFamily::Hoeffding)]
    bound: BoundFamily,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Sequence length; four times the sample size by default.
    #[arg(long)]
    horizon: Option<u64>,
}

#[derive(Args, Serialize)]
struct ReconstructArgs {
    /// `uniform`, `laplace`, `bernoulli:<θ>`, `point:<cycle>`, `table:<file>`
    /// or `roster:<file>`.
    #[arg(long, default_value = "bernoulli:1/2")]
    proxy: String,
    /// Generators of the query set, comma separated; the whole space if absent.
    #[arg(long, value_delimiter = ',')]
    set: Vec<String>,
    #[arg(long, default_value = "1/2")]
    r: String,
    /// Largest precision n.
    #[arg(long, default_value_t = 3)]
    n: u64,
    #[arg(long, default_value_t = BoundFamily::Hoeffding)]
    bound: BoundFamily,
    /// Tree nodes expanded per level by the explicit search.
    #[arg(long, default_value_t = 1 << 16)]
    budget: usize,
    /// Levels tried beyond the minimal one.
    #[arg(long, default_value_t = 16)]
    extra_levels: usize,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ScheduleKind {
    Constant,
    Doubling,
}

#[derive(Args, Serialize)]
struct MixtureArgs {
    /// Prior table file; otherwise the construction's semimeasure is used.
    #[arg(long)]
    prior: Option<PathBuf>,
    /// Transducers for the construction prior.
    #[arg(long, value_delimiter = ',', default_value = "identity,constant-zero")]
    transducers: Vec<String>,
    /// Depth of the construction prior (defaults to `--depth`).
    #[arg(long)]
    prior_depth: Option<usize>,
    #[arg(long, default_value = "1/4")]
    epsilon: String,
    /// Output depth.
    #[arg(long, default_value_t = 10)]
    depth: usize,
    #[arg(long, value_enum, default_value_t = ScheduleKind::Constant)]
    schedule: ScheduleKind,
    /// Partition level (the start level for `doubling`); prior depth by default.
    #[arg(long)]
    partition: Option<usize>,
    /// Prior stage in binary digits (the start stage for `doubling`); exact by
    /// default.
    #[arg(long)]
    stage: Option<u64>,
    /// Levels between refinements for `doubling`.
    #[arg(long, default_value_t = 2)]
    every: usize,
    #[arg(long)]
    no_clamp: bool,
}

/// Failure of a run, with the exit code it maps to.
enum Failure {
    Core(Error),
    Io(std::io::Error),
    /// Inputs were read but failed their checks.
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::SearchExhausted { .. }) => 3,
            Failure::Core(Error::ScheduleInsufficient { .. }) => 4,
            Failure::Core(Error::Construction { .. }) => 1,
            Failure::Core(_) | Failure::Invalid(_) => 2,
            Failure::Io(_) => 1,
        }
    }

    fn record(&self) -> serde_json::Value {
        match self {
            Failure::Core(e) => json!({ "error": e.id(), "message": e.to_string() }),
            Failure::Io(e) => json!({ "error": "io", "message": e.to_string() }),
            Failure::Invalid(m) => json!({ "error": "validation", "message": m }),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn rat(text: &str, what: &str) -> Result<Rational, Error> {
    rational::parse(text).ok_or_else(|| Error::Domain(format!("cannot read {what} {text:?} as a rational")))
}

fn bits(text: &str) -> Result<BinaryString, Error> {
    text.parse().map_err(Error::Domain)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Core(Error::Precondition(format!("cannot read {}: {e}", path.display()))))
}

fn read_table(path: &Path) -> Result<SemimeasureTable, Failure> {
    Ok(SemimeasureTable::from_text(&read(path)?)?)
}

fn base_dir(path: &Path) -> &Path {
    path.parent().unwrap_or(Path::new("."))
}

fn component(spec: &str) -> Result<Component, Failure> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    Ok(match kind {
        "uniform" => Component::Uniform,
        "laplace" => Component::Laplace,
        "bernoulli" => Component::Bernoulli(BernoulliParam::new(rat(arg, "theta")?)?),
        "point" => {
            let cycle = bits(arg)?;
            if cycle.is_empty() {
                return Err(Error::Domain("point cycle must be nonempty".into()).into());
            }
            Component::PointMass {
                prefix: BinaryString::empty(),
                cycle,
            }
        }
        "table" => Component::Table(read_table(Path::new(arg))?),
        _ => return Err(Error::Domain(format!("unknown component {spec:?}")).into()),
    })
}

fn proxy(spec: &str) -> Result<Box<dyn Semimeasure>, Failure> {
    match spec.split_once(':') {
        Some(("roster", file)) => {
            let path = Path::new(file);
            Ok(Box::new(ProxyMixture::from_json(&read(path)?, base_dir(path))?))
        }
        _ => Ok(Box::new(component(spec)?)),
    }
}

fn profile_table(flow: &SemimeasureTable, q: &SemimeasureTable) -> Table {
    let mut t = Table::new("level,flow_mass,semimeasure_mass");
    for n in 0..=flow.depth() {
        t.push_line(&format!(
            "{n},{},{}",
            rational::format(&flow.level_mass(n)),
            rational::format(&q.level_mass(n))
        ));
    }
    t
}

fn cmd_validate(run: &mut Run, a: &ValidateArgs) -> Outcome {
    let mut t = Table::new("kind,at,detail");
    let count;
    if let Some(path) = &a.table {
        let table = read_table(path)?;
        let violations = table.validate();
        for v in &violations {
            let kind = match v {
                randlab::table::Violation::OutOfRange { .. } => "out-of-range",
                randlab::table::Violation::ChildrenExceed { .. } => "children-exceed",
            };
            t.rows.push(vec![kind.into(), v.at().to_string(), v.to_string()]);
        }
        count = violations.len();
        run.note("depth", table.depth());
        run.note("bar_mass", rational::format(table.bar_measure().at(&BinaryString::empty())));
    } else {
        let path = a.network.as_ref().expect("clap enforces one input");
        let net = FlowNetwork::from_text(&read(path)?)?;
        let violations = net.validate();
        for v in &violations {
            let value = serde_json::to_value(v).expect("violations serialize");
            let kind = value["kind"].as_str().unwrap_or("").to_string();
            let at = value
                .get("at")
                .or_else(|| value.get("st"))
                .and_then(|x| x.as_str())
                .unwrap_or("")
                .to_string();
            t.rows.push(vec![kind, at, format!("{v:?}").replace(',', ";")]);
        }
        count = violations.len();
        run.note("depth", net.depth());
        run.note("extra_edges", net.extras().len());
    }
    for r in &mut t.rows {
        for c in r.iter_mut() {
            *c = c.replace(',', ";");
        }
    }
    run.write_table("violations", "semimeasure or network inequality violations", &t)?;
    run.note("violations", count);
    if count > 0 {
        return Err(Failure::Invalid(format!("{count} violation(s)")));
    }
    Ok(())
}

fn cmd_flow(run: &mut Run, a: &FlowArgs) -> Outcome {
    let net = FlowNetwork::from_text(&read(&a.network)?)?;
    let violations = net.validate();
    if !violations.is_empty() {
        return Err(Failure::Invalid(format!("network has {} violation(s)", violations.len())));
    }
    let flow = flow_eval(&net);
    let q = minimal_semimeasure(&flow, &net)?;
    run.write_raw("flow.table", "flow R through each vertex", &flow.to_text())?;
    run.write_raw("semimeasure.table", "minimal semimeasure above the flow", &q.to_text())?;
    run.write_table("level_mass", "per-level mass of the flow and of the semimeasure", &profile_table(&flow, &q))?;
    if a.dot {
        run.write_raw("network.dot", "network drawing", &net.to_dot())?;
    }
    run.note("root_semimeasure", rational::format(q.at(&BinaryString::empty())));
    Ok(())
}

fn cmd_construct(run: &mut Run, a: &ConstructArgs) -> Outcome {
    let roster = TransducerRoster::from_names(&a.transducers)?;
    let mut params = ConstructionParams::new(rat(&a.epsilon, "epsilon")?, a.depth)?;
    if let Some(b) = a.budget {
        params.step_budget = b;
    }
    let out = construct(roster, params)?;
    let d = &out.diagnostics;

    run.write_raw("network.txt", "constructed flow network", &out.network.to_text())?;
    run.write_raw("semimeasure.table", "minimal semimeasure of the constructed network", &out.semimeasure.to_text())?;
    run.write_raw("flow.table", "flow through each vertex", &out.flow.to_text())?;
    run.write_table("level_mass", "per-level mass of the flow and of the semimeasure", &profile_table(&out.flow, &out.semimeasure))?;
    run.write_jsonl("trace.jsonl", "construction step trace with per-vertex audits", &out.state.trace)?;

    let mut edges = Table::new("task,st,ter,q");
    for e in out.network.extras() {
        edges.rows.push(vec![
            e.task.map(|t| t.to_string()).unwrap_or_default(),
            e.st.to_string(),
            e.ter.to_string(),
            rational::format(&e.q),
        ]);
    }
    run.write_table("edges", "extra edges planted by processed tasks", &edges)?;

    let mut covers = Table::new("task,program,session,scheduled,cover_measure,bound,edges");
    let mut tasks: Vec<u64> = out
        .state
        .watermarks
        .iter()
        .filter(|w| w.case == StepCase::Process)
        .map(|w| w.task)
        .collect();
    tasks.sort_unstable();
    tasks.dedup();
    for task in tasks {
        let (program, session) = unpair(task);
        if program as usize >= out.state.roster.len() {
            continue;
        }
        let c = covering_sets(&out.state, program, session)?;
        covers.push_line(&format!(
            "{task},{program},{session},{},{},{},{}",
            c.scheduled,
            rational::format(&c.measure),
            rational::format(&c.bound),
            c.edges.len()
        ));
    }
    run.write_table("covers", "uniform measure of each task's cover against its edge bound", &covers)?;
    if a.dot {
        run.write_raw("network.dot", "network drawing", &out.network.to_dot())?;
    }

    let final_mass = out.semimeasure.level_mass(a.depth);
    run.note("final_level_mass", rational::format(&final_mass));
    run.note("mass_lower_bound", rational::format(&d.mass_lower_bound));
    run.note("open_levels", d.open_levels.clone());
    run.note("audits", out.state.audits.len());
    run.note("audits_failed", out.state.audits.iter().filter(|x| !x.holds()).count());
    run.note("extra_edges", out.network.extras().len());
    run.note("notes", d.notes.clone());
    Ok(())
}

fn cmd_sample(run: &mut Run, a: &SampleArgs, seed: u64) -> Outcome {
    let table = read_table(&a.table)?;
    let depth = a.depth.unwrap_or(table.depth());
    let samples = sample_many(&table, seed, a.count, depth)?;
    let mut t = Table::new(Sample::CSV_HEADER);
    for s in &samples {
        t.push_line(&s.csv_row());
    }
    run.write_table("samples", "sampled prefixes and how each walk ended", &t)?;
    run.note("halted", samples.iter().filter(|s| s.status == randlab::sampler::SampleStatus::HaltedAt).count());
    Ok(())
}

fn cmd_deficiency(run: &mut Run, a: &DeficiencyArgs) -> Outcome {
    let prefix = bits(&a.prefix)?;
    let measure = match component(&a.measure)? {
        c @ (Component::Uniform | Component::Bernoulli(_)) => c,
        _ => return Err(Error::Domain("reference measure must be uniform or bernoulli".into()).into()),
    };
    let roster = match &a.roster {
        Some(path) => ProxyMixture::from_json(&read(path)?, base_dir(path))?,
        None => example_roster(),
    };
    let trace = deficiency_trace(&prefix, &measure, &roster, a.stage)?;
    let mut t = Table::new("k,prefix,deficiency,log2_deficiency");
    for (k, d) in trace.iter().enumerate() {
        t.push_line(&format!(
            "{k},{},{},{:.6}",
            prefix.prefix(k),
            rational::format(d),
            rational::to_f64(d).log2()
        ));
    }
    run.write_table("deficiency", "running maximum of proxy over measure along the prefix", &t)?;
    run.note("final", rational::format(trace.last().expect("trace includes Λ")));
    Ok(())
}

fn cmd_estimate(run: &mut Run, a: &EstimateArgs, seed: u64) -> Outcome {
    let theta = BernoulliParam::new(rat(&a.theta, "theta")?)?;
    let eps = rat(&a.epsilon, "epsilon")?;
    let delta = rat(&a.delta, "delta")?;
    let n = sample_size(&eps, &delta, a.bound)?;
    let horizon = a.horizon.unwrap_or(4 * n);
    let r = concentration_experiment(&theta, &eps, &delta, a.bound, a.trials, horizon, seed)?;
    let mut t = Table::new(ConcentrationResult::CSV_HEADER);
    t.push_line(&r.csv_row());
    run.write_table("concentration", "fraction of runs leaving the epsilon band after N", &t)?;
    run.note("horizon", horizon);
    run.note("warnings", r.warnings.clone());
    Ok(())
}

fn cmd_reconstruct(run: &mut Run, a: &ReconstructArgs) -> Outcome {
    let p = proxy(&a.proxy)?;
    let set = if a.set.is_empty() {
        SimpleSet::whole()
    } else {
        SimpleSet::new(a.set.iter().map(|g| bits(g)).collect::<Result<_, _>>()?)?
    };
    let r = rat(&a.r, "r")?;
    let budget = SearchBudget {
        extra_levels: a.extra_levels,
        max_nodes: a.budget,
    };
    let rec = reconstruct(p.as_ref(), &set, &r, a.n, a.bound, budget);
    let mut t = Table::new(ReconstructionRow::CSV_HEADER);
    for row in rec.rows() {
        t.push_line(&row.csv_row());
    }
    run.write_table("reconstruct", "witness window and estimate per precision n", &t)?;
    let mut failures = Vec::new();
    for w in &rec.windows {
        failures.extend(validate_window(p.as_ref(), &set, &r, a.bound, w)?);
    }
    run.note("windows", rec.windows.len());
    run.note("revalidation_failures", failures.clone());
    if !failures.is_empty() {
        return Err(Failure::Invalid(failures.join("; ")));
    }
    match rec.error {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn cmd_mixture(run: &mut Run, a: &MixtureArgs) -> Outcome {
    let eps = rat(&a.epsilon, "epsilon")?;
    let q = match &a.prior {
        Some(path) => read_table(path)?,
        None => {
            let roster = TransducerRoster::from_names(&a.transducers)?;
            let depth = a.prior_depth.unwrap_or(a.depth);
            construct(roster, ConstructionParams::new(eps.clone(), depth)?)?.semimeasure
        }
    };
    let prior = ParamPrior::new(q)?;
    check_prior(&prior, &eps)?;
    let partition = a.partition.unwrap_or(prior.depth());
    let mut schedule = match a.schedule {
        ScheduleKind::Constant => MixtureSchedule::constant(a.depth, a.stage.unwrap_or(EXACT_STAGE), partition),
        ScheduleKind::Doubling => {
            MixtureSchedule::doubling(a.depth, a.stage.unwrap_or(8), partition, a.every, prior.depth())
        }
    };
    schedule.clamp = !a.no_clamp;
    let out = build_mixture(&prior, &schedule)?;
    let excess = enclosure_excess(&prior, &schedule, &out.table)?;

    run.write_raw("mixture.table", "Bernoulli mixture semimeasure over the prior", &out.table.to_text())?;
    let mut t = Table::new(LevelReport::CSV_HEADER);
    for l in &out.levels {
        t.push_line(&l.csv_row().replace(&EXACT_STAGE.to_string(), "exact"));
    }
    run.write_table("mass_profile", "per-level mixture mass, schedule and clamping", &t)?;
    run.note("prior_bar_mass", rational::format(prior.bar().at(&BinaryString::empty())));
    run.note("clamped", out.clamp_count());
    run.note("coarse_levels", out.levels.iter().filter(|l| l.coarse).map(|l| l.level).collect::<Vec<_>>());
    run.note("valid", out.table.is_valid());
    run.note("enclosure_excess", excess.iter().map(|x| x.to_string()).collect::<Vec<_>>());
    if !out.table.is_valid() {
        return Err(Failure::Invalid("mixture table is not a semimeasure".into()));
    }
    audit_levels(&out.table, &eps)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = serde_json::to_value(&cli).expect("config serializes");
    let name = config["command"]
        .as_object()
        .and_then(|o| o.keys().next().cloned())
        .unwrap_or_default();
    let mut run = match Run::start(cli.out.clone(), cli.format, &name, config, cli.seed) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}", json!({ "error": "io", "message": e.to_string() }));
            return ExitCode::from(1);
        }
    };
    let result = match &cli.command {
        Command::Validate(a) => cmd_validate(&mut run, a),
        Command::Flow(a) => cmd_flow(&mut run, a),
        Command::Construct(a) => cmd_construct(&mut run, a),
        Command::Sample(a) => cmd_sample(&mut run, a, cli.seed),
        Command::Deficiency(a) => cmd_deficiency(&mut run, a),
        Command::Estimate(a) => cmd_estimate(&mut run, a, cli.seed),
        Command::Reconstruct(a) => cmd_reconstruct(&mut run, a),
        Command::Mixture(a) => cmd_mixture(&mut run, a),
    };
    let (code, record) = match result {
        Ok(()) => (0, None),
        Err(f) => {
            let record = f.record();
            eprintln!("{record}");
            (f.exit_code(), Some(record))
        }
    };
    let dir = run.dir().display().to_string();
    if let Err(e) = run.finish(code as i32, record) {
        eprintln!("{}", json!({ "error": "io", "message": format!("manifest in {dir}: {e}") }));
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
