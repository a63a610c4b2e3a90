use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use netprod::emit::{compare_programs, discharge, lower_product, retree, verify_lowering, ClassConfig, DecisionProgram, DischargeTable, EmitContext};
use netprod::formula::{parse_formula, Disjunct, DisjunctSet, Formula, Literal};
use netprod::machine::{bindings, environments, environments_from_initial, parse_machine, product_with_pruned, LambdaSFA, Transition};
use netprod::netsim::frame::{IfaceSet, Mac};
use netprod::netsim::mac_table::MacEntry;
use netprod::netsim::trace::{parse_trace, parse_workload};
use netprod::netsim::{
    check_phi_b1, check_phi_ml, equivalence_check, estimate_profile, random_trace, random_workload, simulate, Executable, InvariantReport,
    SwitchConfig, TraceParams,
};
use netprod::oracle::{enumerate_model, DomainConfig, SatOracle};
use netprod::synth::{expected_residual, ratio, synthesize, tree_metrics, Assignment, DistributionProfile, Objective};

type Outcome = Result<String, String>;

fn asset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(name)
}

fn read(name: &str) -> String {
    std::fs::read_to_string(asset(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Fixture {
    oracle: SatOracle,
    components: Vec<LambdaSFA>,
    product: LambdaSFA,
    pruned: Vec<Transition>,
    classes: ClassConfig,
    program: DecisionProgram,
}

impl Fixture {
    fn new() -> Self {
        let oracle = SatOracle::internal(DomainConfig::desk());
        let components: Vec<_> = ["h.sfa", "b.sfa", "i.sfa", "m.sfa"].iter().map(|n| parse_machine(&read(n)).unwrap()).collect();
        let (product, pruned) = product_with_pruned(&components, &oracle).unwrap();
        let classes = ClassConfig::parse(&read("classes.cfg")).unwrap();
        let profile = DistributionProfile::parse(&read("switch.profile")).unwrap();
        let program = lower_product(&product, &classes, &profile, Objective::ExpectedTime, &oracle).unwrap();
        Fixture { oracle, components, product, pruned, classes, program }
    }
}

fn atom(s: &str) -> Formula {
    parse_formula(s).unwrap()
}

fn demo_set() -> DisjunctSet {
    let d = |xs: &[&str]| xs.iter().map(|x| Literal::pos(atom(x))).collect::<Disjunct>();
    DisjunctSet { disjuncts: vec![d(&["C", "B"]), d(&["F", "B"]), d(&["E"])] }
}

fn demo_profile() -> DistributionProfile {
    DistributionProfile::parse(&read("demo/demo.profile")).unwrap()
}

fn c1_expected_residuals(fx: &Fixture) -> Outcome {
    let t0 = Instant::now();
    let (d, prof) = (demo_set(), demo_profile());
    let mut got = Vec::new();
    for a in ["B", "C", "F", "E"] {
        got.push(expected_residual(&atom(a), &d, &Assignment::new(), &prof, &fx.oracle).map_err(err)?);
    }
    let want = [ratio(40, 16), ratio(48, 16), ratio(48, 16), ratio(45, 16)];
    ensure(got == want, || format!("residuals {got:?}"))?;
    let dt = t0.elapsed();
    ensure(dt < Duration::from_secs(1), || format!("took {dt:?}"))?;
    Ok(format!("B=40/16 C=48/16 F=48/16 E=45/16 in {dt:?}"))
}

fn c2_objectives(fx: &Fixture) -> Outcome {
    let (d, prof) = (demo_set(), demo_profile());
    let et = synthesize(&d, &prof, Objective::ExpectedTime, &fx.oracle).map_err(err)?;
    let ms = synthesize(&d, &prof, Objective::MinSize, &fx.oracle).map_err(err)?;
    ensure(et.root() == Some(&atom("B")), || format!("expected-time root {:?}", et.root()))?;
    ensure(ms.root() == Some(&atom("E")), || format!("min-size root {:?}", ms.root()))?;
    let (ne, ee) = tree_metrics(&et, &prof).map_err(err)?;
    let (nm, em) = tree_metrics(&ms, &prof).map_err(err)?;
    ensure(nm < ne, || format!("min-size tree has {nm} tests, expected-time tree {ne}"))?;
    Ok(format!("roots B / E, tests {ne} vs {nm}, expected {ee} vs {em}"))
}

fn c3_product(fx: &Fixture) -> Outcome {
    let p = &fx.product;
    ensure(p.states == ["H1B1I1ML", "H1B1I2ML", "H2B2I2ML"], || format!("states {:?}", p.states))?;
    ensure(p.transitions.len() == 4, || format!("{} transitions", p.transitions.len()))?;
    let cfg = DomainConfig::desk();
    for t in &fx.pruned {
        let m = enumerate_model(&t.label, &cfg, 50_000_000).map_err(err)?;
        ensure(m.is_none(), || format!("pruned {} has a model {m:?}", t.name()))?;
    }
    for t in &p.transitions {
        let m = enumerate_model(&t.label, &cfg, 50_000_000).map_err(err)?;
        ensure(m.is_some(), || format!("kept {} has no model", t.name()))?;
    }
    Ok(format!("3 states, 4 transitions, {} pruned transitions unsatisfiable by enumeration", fx.pruned.len()))
}

fn c4_arp(fx: &Fixture) -> Outcome {
    let sw = SwitchConfig::desk();
    let w = parse_workload(&read("arp.workload")).map_err(err)?;
    let sim = simulate(Executable::Product(&fx.product), &w, &sw).map_err(err)?;
    let egress = sim.egress_sets();
    let want = [IfaceSet::egress_ports([3, 4]), IfaceSet::egress_ports([2])];
    ensure(egress == want, || format!("egress {egress:?}"))?;
    let envs = environments(&sim.events, &sw, 1).map_err(err)?;
    let ff = Some(Mac::BROADCAST);
    let host: Option<Mac> = Some("04:0c:ce:d2:08:6c".parse().unwrap());
    let t = w[0].time;
    let expected = [(t, ff, None, Some(2), None), (t + 1, ff, ff, None, Some(2)), (t + 2, host, ff, Some(3), None), (t + 3, host, host, None, Some(3))];
    let got: Vec<_> = envs.iter().map(bindings).collect();
    ensure(got == expected, || format!("bindings {got:?}"))?;
    Ok("egress {3e,4e} then {2e}; bindings match over 4 positions".into())
}

fn c5_equivalence(fx: &Fixture) -> Outcome {
    let t0 = Instant::now();
    let (mut traces, mut runs, mut accepted, mut stuck) = (0, 0, 0, 0);
    for mto in [2, 5] {
        let sw = SwitchConfig::new(4, 1, mto, 4);
        let batch = (0..250u64)
            .map(|seed| random_trace(&fx.product, &TraceParams { seed, frames: 12, macs: 6, ..TraceParams::default() }, &sw))
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
        let r = equivalence_check(&fx.product, &fx.components, &batch, &sw).map_err(err)?;
        ensure(r.divergences.is_empty(), || format!("mto {mto}: {r}"))?;
        traces += r.traces;
        runs += r.runs;
        accepted += r.accepted;
        stuck += r.stuck;
    }
    let dt = t0.elapsed();
    ensure(traces >= 500, || format!("only {traces} traces"))?;
    ensure(dt < Duration::from_secs(60), || format!("took {dt:?}"))?;
    Ok(format!("{traces} traces, {runs} runs ({accepted} accepted, {stuck} stuck), 0 divergences in {dt:?}"))
}

fn violated(r: &InvariantReport, step: usize, clause: &str) -> Result<(), String> {
    match &r.first_violation {
        Some(v) if v.step == step && v.clause == clause => Ok(()),
        _ => Err(format!("expected {} violation at step {step} ({clause}), got {r}", r.id)),
    }
}

fn c6_invariants(fx: &Fixture) -> Outcome {
    let mut sims = 0;
    for mto in [2, 5] {
        let sw = SwitchConfig::new(4, 1, mto, 4);
        for seed in 0..100 {
            let w = random_workload(&TraceParams { seed, frames: 12, ..TraceParams::default() }, &sw);
            let s = simulate(Executable::Product(&fx.product), &w, &sw).map_err(err)?;
            let ml = check_phi_ml(&s.worlds);
            let b1 = check_phi_b1(&s.worlds, &sw).map_err(err)?;
            ensure(ml.holds && b1.holds, || format!("mto {mto} seed {seed}: {ml}; {b1}"))?;
            sims += 1;
        }
    }
    let sw = SwitchConfig::desk();
    let exchange = "10 | ff:ff:ff:ff:ff:ff | 04:0c:ce:d2:08:6c | arpreq | {2i}\n\
                  11 | ff:ff:ff:ff:ff:ff | 04:0c:ce:d2:08:6c | arpreq | {3e,4e}\n\
                  12 | 04:0c:ce:d2:08:6c | 7c:d1:c3:e8:a4:67 | arpreply | {3i}\n\
                  13 | 04:0c:ce:d2:08:6c | 7c:d1:c3:e8:a4:67 | arpreply | {2e}\n";
    let history = |src: &str| environments_from_initial(&parse_trace(src).unwrap(), &sw, 1).unwrap();

    let mut rogue = history(exchange);
    let entry = MacEntry { mac: "7c:d1:c3:e8:a4:99".parse().unwrap(), t: rogue[2].time, port: 4 };
    for w in &mut rogue[2..] {
        w.mlt.entries[3] = entry;
    }
    violated(&check_phi_ml(&rogue), 2, "forward")?;

    let misrouted = history(&exchange.replace("{2e}", "{4e}"));
    violated(&check_phi_b1(&misrouted, &sw).map_err(err)?, 4, "entry-port")?;
    Ok(format!("both hold on {sims} simulations; injected entry flagged at step 2 (forward), misrouted reply at step 4 (entry-port)"))
}

fn c7_lowering(fx: &Fixture) -> Outcome {
    let profile = DistributionProfile::parse(&read("switch.profile")).unwrap();
    let checks = verify_lowering(&fx.product, &fx.program, &fx.classes, &profile, Objective::ExpectedTime, &fx.oracle).map_err(err)?;
    ensure(checks.len() == fx.product.transitions.len(), || format!("{} checks", checks.len()))?;
    let assignments: usize = checks.iter().map(|c| c.assignments).sum();
    let eliminated: usize = checks.iter().map(|c| c.eliminated.len()).sum();
    Ok(format!("{} transitions, {assignments} assignments, {eliminated} eliminated atoms implied", checks.len()))
}

fn c8_emit(fx: &Fixture) -> Outcome {
    let table = DischargeTable::parse(&read("switch.dt")).map_err(err)?;
    let ctx = EmitContext::new(&read("switch.profile")).with_seed(1);
    let a = discharge(&fx.program, &table, &ctx).map_err(err)?;
    let b = discharge(&fx.program, &table, &ctx).map_err(err)?;
    ensure(a.source == b.source, || "emissions differ".into())?;
    Ok(format!("{} bytes, identical across runs, guards {:?}", a.source.len(), a.guards))
}

fn c9_adapt(fx: &Fixture) -> Outcome {
    let sw = SwitchConfig::desk();
    let atoms: BTreeSet<_> = fx.program.transitions.iter().flat_map(|t| t.guard_dnf().atoms()).collect();
    let mut progs = Vec::new();
    for broadcast_pct in [5, 95] {
        let w = random_workload(&TraceParams { seed: 3, frames: 40, broadcast_pct, ..TraceParams::default() }, &sw);
        let s = simulate(Executable::Product(&fx.product), &w, &sw).map_err(err)?;
        let prof = estimate_profile(&s.events, &atoms, &sw, 2, 0).map_err(err)?;
        progs.push(retree(&fx.program, &prof, Objective::ExpectedTime, &fx.oracle).map_err(err)?);
    }
    let roots = |p: &DecisionProgram| p.transitions.iter().map(|t| t.tree.root().cloned()).collect::<Vec<_>>();
    ensure(roots(&progs[0]) != roots(&progs[1]), || "roots coincide".into())?;
    let n = compare_programs(&progs[0], &progs[1], &fx.oracle).map_err(err)?;
    let changed = roots(&progs[0]).iter().zip(roots(&progs[1])).filter(|(a, b)| **a != *b).count();
    Ok(format!("{changed} transition root(s) differ; equivalent over {n} assignments"))
}

#[test]
fn acceptance_criteria() {
    let fx = Fixture::new();
    let criteria: [(&str, fn(&Fixture) -> Outcome); 9] = [
        ("1 expected residuals", c1_expected_residuals),
        ("2 objective conflict", c2_objectives),
        ("3 switch product", c3_product),
        ("4 arp workload", c4_arp),
        ("5 product vs components", c5_equivalence),
        ("6 invariants", c6_invariants),
        ("7 lowering", c7_lowering),
        ("8 emission", c8_emit),
        ("9 adaptation", c9_adapt),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        match run(&fx) {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
