//! `kfdp`: critical constants, stepwise tests on p-value files, Monte Carlo
//! grids and the brute-force oracle suites.

mod manifest;
mod svg;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use kfdp::constants::{compute_constants, ConstantsReport, Family, Params, Template, TemplateFamily};
use kfdp::engine::{step, Direction, PValueVector};
use kfdp::error::Error;
use kfdp::gamma::GammaRational;
use kfdp::oracle::{constants_suite, lemma_suite, pairdist_suite, CheckRow, SuiteConfig};
use kfdp::pairdist::{PairwiseModel, PairwiseNullF};
use kfdp::rates::CriticalConstants;
use kfdp::simlab::{run_grid, DependenceShape, GridRow, GridSpec, ProcedureKind, DEFAULT_EFFECT};

use manifest::Manifest;

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "kfdp", version, about = "Stepwise procedures controlling false discovery proportion exceedance")]
struct Cli {
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true, env = "KFDP_THREADS")]
    threads: Option<usize>,

    /// Write output here instead of stdout
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,

    /// Fixed timestamp for the manifest header
    #[arg(long, global = true, hide = true)]
    manifest_time: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the critical constants of a family
    Constants(ConstantsArgs),
    /// Run a stepwise procedure on a file of p-values
    Test(TestArgs),
    /// Monte Carlo sweep over correlation and null proportion
    Simulate(SimulateArgs),
    /// Run the brute-force oracle suites
    Verify(VerifyArgs),
}

#[derive(Args, Clone)]
struct FamilyArgs {
    /// lr, max-sd, max-su, pairwise, sum-sd, sum-su, calibrated-sd or calibrated-su
    #[arg(long, default_value = "lr")]
    family: String,
    #[arg(long)]
    n: Option<usize>,
    /// Tolerance, as a fraction like 1/10 or a decimal
    #[arg(long, default_value = "1/10")]
    gamma: String,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Correlation of the equicorrelated two-sided pairwise null law
    #[arg(long, conflicts_with = "f")]
    rho: Option<f64>,
    /// Named pairwise null law
    #[arg(long, value_enum)]
    f: Option<NamedF>,
    #[arg(long, default_value = "lr")]
    template: String,
    /// Upper bound on the number of true nulls
    #[arg(long)]
    n0_max: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NamedF {
    Independence,
    Comonotone,
}

#[derive(Args)]
struct ConstantsArgs {
    #[command(flatten)]
    family: FamilyArgs,
}

#[derive(Args)]
struct TestArgs {
    /// One p-value per line; `#` starts a comment
    #[arg(long)]
    pvalues: PathBuf,
    /// su or sd
    #[arg(long)]
    direction: String,
    /// Critical values, one per line, instead of a family
    #[arg(long)]
    critical: Option<PathBuf>,
    #[command(flatten)]
    family: FamilyArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_delimiter = ',', default_value = "lr-sd,lr-su")]
    procedures: Vec<String>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pi0: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.2,0.5,0.8")]
    rho: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1/10")]
    gamma: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    k: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 2000)]
    reps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// uniform, ar1 or block:SIZE
    #[arg(long, default_value = "uniform")]
    dependence: String,
    /// Mean of the false nulls
    #[arg(long, default_value_t = DEFAULT_EFFECT)]
    effect: f64,
    /// Also draw exceedance and power against rho
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Lemmas,
    Constants,
    Pairdist,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    #[arg(long, default_value_t = 100_000)]
    fuzz_count: usize,
    #[arg(long, default_value_t = 4)]
    exhaustive_max_n: usize,
    #[arg(long)]
    seed: Option<u64>,
}

/// Errors that map to the usage exit code despite coming from the library.
fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Unattainable { .. } | Error::NonMonotone { .. }) => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

fn parse_gamma(s: &str) -> anyhow::Result<GammaRational> {
    let (g, snapped) = GammaRational::parse_reporting_snap(s)?;
    if snapped {
        eprintln!("warning: gamma {s} read as {g}");
    }
    Ok(g)
}

fn output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn csv_writer(out: Box<dyn Write>) -> csv::Writer<Box<dyn Write>> {
    csv::WriterBuilder::new().flexible(true).from_writer(out)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn pairwise_law(args: &FamilyArgs) -> anyhow::Result<Option<PairwiseModel>> {
    Ok(match (args.rho, args.f) {
        (Some(rho), _) => Some(PairwiseModel::equicorrelated(rho)?),
        (None, Some(NamedF::Independence)) => Some(PairwiseModel::Independence),
        (None, Some(NamedF::Comonotone)) => Some(PairwiseModel::Comonotone),
        (None, None) => None,
    })
}

fn family_constants(args: &FamilyArgs, n: usize) -> anyhow::Result<(ConstantsReport, GammaRational)> {
    let family: Family = args.family.parse()?;
    let gamma = parse_gamma(&args.gamma)?;
    let mut params = Params::new(n, gamma, args.k, args.alpha)?;
    if let Some(cap) = args.n0_max {
        params = params.with_n0_max(cap)?;
    }
    let template = Template::new(args.template.parse::<TemplateFamily>()?, n, gamma)?;
    let law = pairwise_law(args)?;
    if family.needs_pairwise() && law.is_none() {
        bail!(Error::Config(format!("family {family} needs --rho or --f")));
    }
    let f = law.as_ref().map(|m| m as &dyn PairwiseNullF);
    Ok((compute_constants(family, &params, &template, f)?, gamma))
}

fn echo_family(m: &mut Manifest, args: &FamilyArgs, n: usize, gamma: GammaRational) {
    m.param("family", &args.family)
        .param("n", n)
        .param("gamma", gamma)
        .param("alpha", args.alpha)
        .param("k", args.k)
        .param("template", &args.template);
    if let Some(rho) = args.rho {
        m.param("rho", rho);
    }
    if let Some(f) = args.f {
        m.param("f", f.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default());
    }
    if let Some(cap) = args.n0_max {
        m.param("n0_max", cap);
    }
}

fn cmd_constants(cli: &Cli, args: &ConstantsArgs) -> anyhow::Result<u8> {
    let n = args.family.n.ok_or_else(|| anyhow!(Error::Config("--n is required".into())))?;
    let (report, gamma) = family_constants(&args.family, n)?;
    let mut out = output(&cli.out)?;
    let mut m = Manifest::new("constants", cli.manifest_time.as_deref());
    echo_family(&mut m, &args.family, n, gamma);
    m.write_to(&mut out)?;
    let mut w = csv_writer(out);
    w.write_record(["i", "alpha_i"])?;
    for (i, a) in report.constants.values().iter().enumerate() {
        w.write_record([(i + 1).to_string(), a.to_string()])?;
    }
    if let Some(c) = report.scaling {
        w.write_record(["C".to_string(), c.to_string()])?;
    }
    if let Some(b) = report.beta_star {
        w.write_record(["beta_star".to_string(), b.to_string()])?;
    }
    w.flush()?;
    Ok(0)
}

fn read_column(path: &Path) -> anyhow::Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut values = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line
            .parse()
            .with_context(|| format!("{}:{}: not a number: {line:?}", path.display(), line_no + 1))?;
        values.push(v);
    }
    if values.is_empty() {
        bail!(Error::Config(format!("{} holds no values", path.display())));
    }
    Ok(values)
}

fn cmd_test(cli: &Cli, args: &TestArgs) -> anyhow::Result<u8> {
    let p = PValueVector::new(read_column(&args.pvalues)?)?;
    let direction: Direction = args.direction.parse()?;
    let n = p.len();
    if args.family.n.is_some_and(|m| m != n) {
        bail!(Error::Config(format!("--n {} disagrees with {n} p-values", args.family.n.unwrap_or(0))));
    }
    let mut m = Manifest::new("test", cli.manifest_time.as_deref());
    m.param("pvalues", args.pvalues.display()).param("direction", direction.short_name());
    let constants = match &args.critical {
        Some(path) => {
            m.param("critical", path.display()).param("k", args.family.k);
            CriticalConstants::new(read_column(path)?, args.family.k)?
        }
        None => {
            let (report, gamma) = family_constants(&args.family, n)?;
            echo_family(&mut m, &args.family, n, gamma);
            report.constants
        }
    };
    let result = step(direction, &p, &constants)?;
    let mut rank = vec![0; n];
    for (r, &i) in p.order().iter().enumerate() {
        rank[i] = r;
    }
    let mut rejected = vec![false; n];
    for &i in result.rejected() {
        rejected[i] = true;
    }
    let mut out = output(&cli.out)?;
    m.write_to(&mut out)?;
    let mut w = csv_writer(out);
    w.write_record(["index", "p", "critical", "rejected"])?;
    for i in 0..n {
        w.write_record([
            (i + 1).to_string(),
            p.values()[i].to_string(),
            constants.values()[rank[i]].to_string(),
            (rejected[i] as u8).to_string(),
        ])?;
    }
    w.write_record(["R".to_string(), result.r().to_string()])?;
    w.flush()?;
    Ok(0)
}

fn series_key(row: &GridRow, spec: &GridSpec) -> String {
    let mut key = row.procedure.name().to_string();
    if spec.pi0s.len() > 1 {
        key.push_str(&format!(" pi0={}", row.pi0));
    }
    if spec.gammas.len() > 1 {
        key.push_str(&format!(" gamma={}", row.gamma));
    }
    if spec.ks.len() > 1 {
        key.push_str(&format!(" k={}", row.k));
    }
    key
}

fn chart(rows: &[GridRow], spec: &GridSpec) -> String {
    let mut exceed: Vec<svg::Series> = Vec::new();
    let mut power: Vec<svg::Series> = Vec::new();
    for row in rows {
        let key = series_key(row, spec);
        let idx = match exceed.iter().position(|s| s.label == key) {
            Some(i) => i,
            None => {
                exceed.push(svg::Series { label: key.clone(), points: Vec::new() });
                power.push(svg::Series { label: key, points: Vec::new() });
                exceed.len() - 1
            }
        };
        exceed[idx].points.push((row.rho, row.report.exceedance));
        if let Some(pw) = row.report.power {
            power[idx].points.push((row.rho, pw));
        }
    }
    for s in exceed.iter_mut().chain(power.iter_mut()) {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let panels = [
        svg::Panel { title: "exceedance probability".into(), y_label: "P(kFDP > gamma)".into(), series: exceed, rule: Some(spec.alpha) },
        svg::Panel { title: "average power".into(), y_label: "power".into(), series: power, rule: None },
    ];
    svg::render(&panels, "rho")
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> anyhow::Result<u8> {
    let spec = GridSpec {
        n: args.n,
        alpha: args.alpha,
        pi0s: args.pi0.clone(),
        rhos: args.rho.clone(),
        gammas: args.gamma.iter().map(|g| parse_gamma(g)).collect::<anyhow::Result<_>>()?,
        ks: args.k.clone(),
        procedures: args.procedures.iter().map(|p| p.parse()).collect::<Result<Vec<ProcedureKind>, _>>()?,
        dependence: args.dependence.parse::<DependenceShape>()?,
        effect: args.effect,
        reps: args.reps,
        seed: args.seed,
    };
    let rows = run_grid(&spec)?;
    let join = |v: Vec<String>| v.join(",");
    let mut m = Manifest::new("simulate", cli.manifest_time.as_deref());
    m.param("procedures", join(spec.procedures.iter().map(|p| p.name().to_string()).collect()))
        .param("n", spec.n)
        .param("pi0", join(spec.pi0s.iter().map(f64::to_string).collect()))
        .param("rho", join(spec.rhos.iter().map(f64::to_string).collect()))
        .param("gamma", join(spec.gammas.iter().map(|g| g.to_string()).collect()))
        .param("k", join(spec.ks.iter().map(usize::to_string).collect()))
        .param("alpha", spec.alpha)
        .param("reps", spec.reps)
        .param("seed", spec.seed)
        .param("dependence", spec.dependence)
        .param("effect", spec.effect);
    let mut out = output(&cli.out)?;
    m.write_to(&mut out)?;
    let mut w = csv_writer(out);
    w.write_record(["procedure", "rho", "pi0", "gamma", "k", "exceedance", "exceedance_se", "power", "power_se"])?;
    for row in &rows {
        let r = &row.report;
        w.write_record([
            row.procedure.name().to_string(),
            row.rho.to_string(),
            row.pi0.to_string(),
            row.gamma.to_string(),
            row.k.to_string(),
            r.exceedance.to_string(),
            opt(r.exceedance_se),
            opt(r.power),
            opt(r.power_se),
        ])?;
    }
    w.flush()?;
    if let Some(path) = &args.svg {
        let mut body = Vec::new();
        m.write_to(&mut body)?;
        let header = String::from_utf8(body)?.replace("--", "- -");
        let text = format!("<!--\n{header}-->\n{}", chart(&rows, &spec));
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(0)
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> anyhow::Result<u8> {
    let mut config = SuiteConfig { fuzz_instances: args.fuzz_count, exhaustive_max_n: args.exhaustive_max_n, ..SuiteConfig::default() };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let mut rows: Vec<CheckRow> = Vec::new();
    let (lemmas, constants, pairdist) = match args.suite {
        Suite::Lemmas => (true, false, false),
        Suite::Constants => (false, true, false),
        Suite::Pairdist => (false, false, true),
        Suite::All => (true, true, true),
    };
    if lemmas {
        rows.extend(lemma_suite(&config));
    }
    if constants {
        rows.extend(constants_suite(12));
    }
    if pairdist {
        rows.extend(pairdist_suite());
    }
    let mut m = Manifest::new("verify", cli.manifest_time.as_deref());
    m.param("suite", args.suite.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default())
        .param("fuzz_count", config.fuzz_instances)
        .param("exhaustive_max_n", config.exhaustive_max_n)
        .param("seed", config.seed);
    let mut out = output(&cli.out)?;
    m.write_to(&mut out)?;
    let mut w = csv_writer(out);
    w.write_record(["check", "instances", "violations", "status"])?;
    for row in &rows {
        w.write_record([
            row.name.clone(),
            row.instances.to_string(),
            row.violations.to_string(),
            if row.passed() { "PASS" } else { "FAIL" }.to_string(),
        ])?;
        if let Some(msg) = &row.first_failure {
            eprintln!("{}: {msg}", row.name);
        }
    }
    w.flush()?;
    Ok(if rows.iter().all(CheckRow::passed) { 0 } else { EXIT_VERIFY })
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    match &cli.command {
        Command::Constants(a) => cmd_constants(cli, a),
        Command::Test(a) => cmd_test(cli, a),
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::Verify(a) => cmd_verify(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
