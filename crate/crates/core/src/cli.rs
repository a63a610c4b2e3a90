//! Command-line driver. Stages communicate only through files in the output directory.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::emit::{compare_programs, discharge, lower_product, retree, ClassConfig, DecisionProgram, DischargeTable, EmitContext};
use crate::error::Error;
use crate::formula::minimize_dnf;
use crate::formula::dnf::{to_dnf, DEFAULT_DNF_CAP};
use crate::machine::run::environments_from_initial;
use crate::machine::{parse_machine, product_with_pruned, report, to_dsl, LambdaSFA};
use crate::netsim::trace::{format_trace, parse_trace, parse_workload};
use crate::netsim::{
    check_phi_b1, check_phi_ml, equivalence_check, estimate_profile, random_trace, simulate, Executable, SwitchConfig, TraceParams,
};
use crate::oracle::{DomainConfig, SatOracle};
use crate::synth::{format_ratio, synthesize, tree_metrics, DistributionProfile, Objective};

#[derive(Parser, Debug)]
#[command(name = "netprod", version, about = "Compile and check network functions built as products of symbolic automata")]
pub struct Cli {
    /// Project file; relative paths inside it resolve against its directory.
    #[arg(long, short, global = true, default_value = "project.toml")]
    pub config: PathBuf,
    /// Overrides the project's objective (expected-time | min-size).
    #[arg(long, global = true)]
    pub objective: Option<Objective>,
    /// Overrides the project's random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Solver::Internal)]
    pub solver: Solver,
    /// SMT-LIB solver binary for `--solver external`.
    #[arg(long, global = true, env = "NETPROD_SOLVER", default_value = "z3")]
    pub solver_path: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Internal,
    External,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compose the components into product.sfa and product.txt.
    Product,
    /// Synthesize branch trees and lower the product into program.txt.
    Synth,
    /// Discharge program.txt into C through the discharge table.
    Emit,
    /// Run the switch over an ingress workload, writing trace.txt.
    Simulate {
        /// Workload file; defaults to the project's.
        #[arg(long)]
        workload: Option<PathBuf>,
        /// Execute program.txt instead of the product.
        #[arg(long)]
        program: bool,
    },
    /// Monitor invariants on a trace and compare the product with its components.
    Check {
        /// Trace file; defaults to trace.txt in the output directory.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Extra seeded random traces for the equivalence check.
        #[arg(long, default_value_t = 100)]
        random: usize,
    },
    /// Re-estimate the profile from a trace and resynthesize the program's trees.
    Adapt {
        #[arg(long)]
        trace: PathBuf,
    },
}

#[derive(Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
struct DomainSection {
    num_ports: usize,
    uplink: i64,
    mto: i64,
    mlt_size: usize,
    time_bound: Option<i64>,
}

#[derive(Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
struct FilesSection {
    components: Vec<PathBuf>,
    profile: PathBuf,
    classes: PathBuf,
    discharge: Option<PathBuf>,
    workload: Option<PathBuf>,
}

#[derive(Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    dir: PathBuf,
}

#[derive(Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: u64,
    objective: String,
    domain: DomainSection,
    files: FilesSection,
    output: OutputSection,
}

/// A loaded project with every path resolved.
#[derive(Debug, Clone)]
pub struct ProjectConfig {
    pub domain: DomainConfig,
    pub switch: SwitchConfig,
    pub components: Vec<PathBuf>,
    pub profile: PathBuf,
    pub classes: PathBuf,
    pub discharge: Option<PathBuf>,
    pub workload: Option<PathBuf>,
    pub objective: Objective,
    pub out_dir: PathBuf,
    pub seed: u64,
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
    }
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}

/// Prefixes an error with the file it came from.
fn at(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

impl ProjectConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let raw: RawConfig = toml::from_str(&read(path)?).map_err(|e| at(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &PathBuf| base.join(p);
        let existing = |p: &PathBuf| {
            let full = resolve(p);
            if full.is_file() {
                Ok(full)
            } else {
                Err(at(path, format!("referenced file {} does not exist", full.display())))
            }
        };
        let d = &raw.domain;
        let mut domain = DomainConfig::desk();
        domain.num_ports = d.num_ports;
        domain.mlt_size = d.mlt_size;
        if let Some(b) = d.time_bound {
            domain.time_bound = b;
        }
        domain.validate().map_err(|e| at(path, e))?;
        if !(1..=d.num_ports as i64).contains(&d.uplink) {
            return Err(at(path, format!("uplink {} is not a port", d.uplink)));
        }
        Ok(ProjectConfig {
            domain,
            switch: SwitchConfig::new(d.num_ports, d.uplink, d.mto, d.mlt_size),
            components: raw.files.components.iter().map(existing).collect::<Result<_, _>>()?,
            profile: existing(&raw.files.profile)?,
            classes: existing(&raw.files.classes)?,
            discharge: raw.files.discharge.as_ref().map(existing).transpose()?,
            workload: raw.files.workload.as_ref().map(existing).transpose()?,
            objective: raw.objective.parse().map_err(|e| at(path, e))?,
            out_dir: resolve(&raw.output.dir),
            seed: raw.seed,
        })
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

/// Everything a command needs: the project plus command-line overrides.
pub struct Session {
    pub project: ProjectConfig,
    pub objective: Objective,
    pub seed: u64,
    pub oracle: SatOracle,
}

impl Session {
    pub fn new(cli: &Cli) -> Result<Self, Error> {
        let project = ProjectConfig::load(&cli.config)?;
        let oracle = match cli.solver {
            Solver::Internal => SatOracle::internal(project.domain.clone()),
            Solver::External => SatOracle::external(project.domain.clone(), &cli.solver_path, Duration::from_secs(30)),
        };
        Ok(Session { objective: cli.objective.unwrap_or(project.objective), seed: cli.seed.unwrap_or(project.seed), oracle, project })
    }

    /// Comment lines recording provenance, each prefixed by `mark`.
    fn header(&self, mark: &str, command: &str) -> String {
        format!(
            "{mark} netprod {} {command}\n{mark} objective {} seed {}\n",
            env!("CARGO_PKG_VERSION"),
            self.objective,
            self.seed
        )
    }

    fn components(&self) -> Result<Vec<LambdaSFA>, Error> {
        self.project
            .components
            .iter()
            .map(|p| parse_machine(&read(p)?).map_err(|e| Error::parse(p.display().to_string(), e)))
            .collect()
    }

    fn product(&self) -> Result<LambdaSFA, Error> {
        let path = self.project.out("product.sfa");
        parse_machine(&read(&path)?).map_err(|e| Error::parse(path.display().to_string(), e))
    }

    fn program(&self, name: &str) -> Result<DecisionProgram, Error> {
        let path = self.project.out(name);
        DecisionProgram::parse(&read(&path)?).map_err(|e| Error::parse(path.display().to_string(), e))
    }

    fn profile(&self) -> Result<(DistributionProfile, String), Error> {
        let text = read(&self.project.profile)?;
        let p = DistributionProfile::parse(&text).map_err(|e| Error::parse(self.project.profile.display().to_string(), e))?;
        Ok((p, text))
    }

    fn classes(&self) -> Result<ClassConfig, Error> {
        let path = &self.project.classes;
        ClassConfig::parse(&read(path)?).map_err(|e| Error::parse(path.display().to_string(), e))
    }
}

/// What a command produced: files written and a summary for stdout.
#[derive(Debug, Default)]
pub struct Outcome {
    pub written: Vec<PathBuf>,
    pub summary: String,
    /// Invariant violations or divergences found by `check`.
    pub violations: usize,
}

impl Outcome {
    fn file(&mut self, path: PathBuf, text: &str) -> Result<(), Error> {
        write(&path, text)?;
        self.written.push(path);
        Ok(())
    }
}

pub fn cmd_product(s: &Session) -> Result<Outcome, Error> {
    let comps = s.components()?;
    let mut out = Outcome::default();
    let (product, pruned) = if let [one] = comps.as_slice() {
        (one.clone(), Vec::new())
    } else {
        product_with_pruned(&comps, &s.oracle)?
    };
    product.validate(&s.oracle)?;
    out.file(s.project.out("product.sfa"), &format!("{}{}", s.header(";", "product"), to_dsl(&product)))?;
    let mut listing = format!("{}{}", s.header("#", "product"), report(&product));
    let _ = writeln!(listing, "\npruned {} unsatisfiable transition combinations", pruned.len());
    out.file(s.project.out("product.txt"), &listing)?;
    out.summary = format!("{}: {} states, {} transitions", product.name, product.states.len(), product.transitions.len());
    Ok(out)
}

pub fn cmd_synth(s: &Session) -> Result<Outcome, Error> {
    let product = s.product()?;
    let (profile, _) = s.profile()?;
    let mut out = Outcome::default();
    let mut rep = s.header("#", "synth");
    for t in &product.transitions {
        let dnf = minimize_dnf(&to_dnf(t.label.strip_lambda(), DEFAULT_DNF_CAP)?, &s.oracle)?;
        let tree = synthesize(&dnf, &profile, s.objective, &s.oracle)?;
        let (size, expected) = tree_metrics(&tree, &profile)?;
        let root = tree.root().map_or("none".to_string(), ToString::to_string);
        let _ = writeln!(rep, "\n{}\n  minimized DNF: {} disjuncts", t.name(), dnf.len());
        for d in &dnf.disjuncts {
            let lits: Vec<String> = d.iter().map(ToString::to_string).collect();
            let _ = writeln!(rep, "    {}", lits.join(" & "));
        }
        let _ = writeln!(rep, "  root {root}\n  tests {size}\n  expected tests {}\n  tree\n{}", format_ratio(&expected), indent(&tree.to_string(), 4));
    }
    let prog = lower_product(&product, &s.classes()?, &profile, s.objective, &s.oracle)?;
    out.file(s.project.out("program.txt"), &format!("{}{}", s.header("#", "synth"), prog.to_text()))?;
    out.file(s.project.out("synth.txt"), &rep)?;
    out.summary = format!("lowered {} transitions of {}", prog.transitions.len(), prog.name);
    Ok(out)
}

fn indent(text: &str, n: usize) -> String {
    text.lines().map(|l| format!("{}{l}\n", " ".repeat(n))).collect()
}

pub fn cmd_emit(s: &Session) -> Result<Outcome, Error> {
    let prog = s.program("program.txt")?;
    let table_path = s.project.discharge.as_ref().ok_or_else(|| Error::Config("the project names no discharge table".into()))?;
    let table = DischargeTable::parse(&read(table_path)?).map_err(|e| at(table_path, e))?;
    let (_, profile_text) = s.profile()?;
    let e = discharge(&prog, &table, &EmitContext::new(&profile_text).with_seed(s.seed))?;
    let mut out = Outcome::default();
    out.file(s.project.out(&format!("{}.c", prog.name.to_ascii_lowercase())), &e.source)?;
    let counts: Vec<String> = e.guards.iter().map(|(k, v)| format!("{k}={v}")).collect();
    out.summary = format!("guards per state: {}", counts.join(" "));
    Ok(out)
}

pub fn cmd_simulate(s: &Session, workload: Option<&Path>, use_program: bool) -> Result<Outcome, Error> {
    let path = workload
        .map(Path::to_path_buf)
        .or_else(|| s.project.workload.clone())
        .ok_or_else(|| Error::Config("no workload given".into()))?;
    let w = parse_workload(&read(&path)?).map_err(|e| Error::parse(path.display().to_string(), e))?;
    let (product, program);
    let exe = if use_program {
        program = s.program("program.txt")?;
        Executable::Program(&program)
    } else {
        product = s.product()?;
        Executable::Product(&product)
    };
    let sim = simulate(exe, &w, &s.project.switch)?;
    let mut out = Outcome::default();
    let what = if use_program { "simulate --program" } else { "simulate" };
    out.file(s.project.out("trace.txt"), &format!("{}{}", s.header("#", what), format_trace(&sim.events)))?;
    let mut log = s.header("#", what);
    for (ev, st) in sim.events.iter().zip(&sim.states[1..]) {
        if !ev.is_ingress() {
            let _ = writeln!(log, "{} {} -> {}", ev.time, ev.loc, st);
        }
    }
    out.file(s.project.out("egress.txt"), &log)?;
    out.summary = format!("{} events", sim.events.len());
    Ok(out)
}

pub fn cmd_check(s: &Session, trace: Option<&Path>, random: usize) -> Result<Outcome, Error> {
    let path = trace.map(Path::to_path_buf).unwrap_or_else(|| s.project.out("trace.txt"));
    let events = parse_trace(&read(&path)?).map_err(|e| Error::parse(path.display().to_string(), e))?;
    let sw = &s.project.switch;
    let history = environments_from_initial(&events, sw, 1)?;
    let ml = check_phi_ml(&history);
    let b1 = check_phi_b1(&history, sw)?;
    let product = s.product()?;
    let comps = s.components()?;
    let mut traces = vec![events];
    for i in 0..random {
        let params = TraceParams { seed: s.seed.wrapping_add(i as u64), ..TraceParams::default() };
        traces.push(random_trace(&product, &params, sw)?);
    }
    let eq = equivalence_check(&product, &comps, &traces, sw)?;
    let mut rep = s.header("#", "check");
    let _ = writeln!(rep, "{ml}\n{b1}\nequivalence over the trace and {random} random traces: {eq}");
    let mut out = Outcome { violations: usize::from(!ml.holds) + usize::from(!b1.holds) + eq.divergences.len(), ..Default::default() };
    out.file(s.project.out("check.txt"), &rep)?;
    out.summary = rep.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    Ok(out)
}

pub fn cmd_adapt(s: &Session, trace: &Path) -> Result<Outcome, Error> {
    let events = parse_trace(&read(trace)?).map_err(|e| Error::parse(trace.display().to_string(), e))?;
    let prog = s.program("program.txt")?;
    let atoms: BTreeSet<_> = prog.transitions.iter().flat_map(|t| t.guard_dnf().atoms()).collect();
    let self_port = s.project.switch.ports().find(|&p| p != s.project.switch.uplink).unwrap_or(1);
    let profile = estimate_profile(&events, &atoms, &s.project.switch, self_port, 0)?;
    let fresh = retree(&prog, &profile, s.objective, &s.oracle)?;
    let compared = compare_programs(&prog, &fresh, &s.oracle)?;
    let mut rep = s.header("#", "adapt");
    let _ = writeln!(rep, "# estimated from {} over {} events with self={self_port}", trace.display(), events.len());
    for (a, b) in prog.transitions.iter().zip(&fresh.transitions) {
        let root = |t: &crate::emit::LoweredTransition| t.tree.root().map_or("none".to_string(), ToString::to_string);
        let (sa, ea) = tree_metrics(&a.tree, &profile)?;
        let (sb, eb) = tree_metrics(&b.tree, &profile)?;
        let changed = if a.tree == b.tree { "unchanged" } else { "changed" };
        let _ = writeln!(rep, "{} {changed}\n  root {} -> {}\n  tests {sa} -> {sb}", a.name(), root(a), root(b));
        let _ = writeln!(rep, "  expected tests under the new profile {} -> {}", format_ratio(&ea), format_ratio(&eb));
    }
    let _ = writeln!(rep, "equivalent leaf decisions over {compared} assignments");
    let mut out = Outcome::default();
    out.file(s.project.out("adapted.profile"), &format!("{}{}", s.header("#", "adapt"), profile.to_text()))?;
    out.file(s.project.out("adapted.program.txt"), &format!("{}{}", s.header("#", "adapt"), fresh.to_text()))?;
    out.file(s.project.out("adapt.txt"), &rep)?;
    out.summary = rep.lines().filter(|l| !l.starts_with('#')).collect::<Vec<_>>().join("\n");
    Ok(out)
}

pub fn run(cli: &Cli) -> Result<Outcome, Error> {
    let s = Session::new(cli)?;
    match &cli.command {
        Command::Product => cmd_product(&s),
        Command::Synth => cmd_synth(&s),
        Command::Emit => cmd_emit(&s),
        Command::Simulate { workload, program } => cmd_simulate(&s, workload.as_deref(), *program),
        Command::Check { trace, random } => cmd_check(&s, trace.as_deref(), *random),
        Command::Adapt { trace } => cmd_adapt(&s, trace),
    }
}
