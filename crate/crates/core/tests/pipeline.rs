use std::path::{Path, PathBuf};

use clap::Parser;
use proptest::prelude::*;

use netprod::cli::{run, Cli};
use netprod::emit::{lower_product, ClassConfig, DecisionProgram};
use netprod::formula::{parse_formula, Formula};
use netprod::machine::{parse_machine, product_with_pruned, LambdaSFA};
use netprod::netsim::frame::Mac;
use netprod::netsim::gen::pool_mac;
use netprod::netsim::mac_table::MacTable;
use netprod::netsim::trace::{format_trace, format_workload, parse_trace, parse_workload};
use netprod::netsim::{random_workload, simulate, Executable, SwitchConfig, TraceParams};
use netprod::oracle::{enumerate_model, DomainConfig, SatOracle};
use netprod::synth::{DistributionProfile, Objective};

fn assets() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets")
}

fn write_project(dir: &Path) -> PathBuf {
    let a = assets().canonicalize().unwrap();
    let f = |n: &str| a.join(n).display().to_string();
    let toml = format!(
        "seed = 1\nobjective = \"expected-time\"\n\n[domain]\nnum_ports = 4\nuplink = 1\nmto = 5\nmlt_size = 4\n\n\
         [files]\ncomponents = [{:?}, {:?}, {:?}, {:?}]\nprofile = {:?}\nclasses = {:?}\ndischarge = {:?}\nworkload = {:?}\n\n\
         [output]\ndir = \"out\"\n",
        f("h.sfa"),
        f("b.sfa"),
        f("i.sfa"),
        f("m.sfa"),
        f("switch.profile"),
        f("classes.cfg"),
        f("switch.dt"),
        f("arp.workload"),
    );
    let path = dir.join("project.toml");
    std::fs::write(&path, toml).unwrap();
    path
}

fn cli(config: &Path, args: &[&str]) -> netprod::cli::Outcome {
    let mut argv = vec!["netprod", "--config", config.to_str().unwrap()];
    argv.extend_from_slice(args);
    run(&Cli::try_parse_from(argv).unwrap()).unwrap_or_else(|e| panic!("{args:?}: {e}"))
}

#[test]
fn cli_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_project(dir.path());
    let out = dir.path().join("out");

    cli(&config, &["product"]);
    let product = std::fs::read_to_string(out.join("product.sfa")).unwrap();
    let m = parse_machine(&product).unwrap();
    assert_eq!(m.states, ["H1B1I1ML", "H1B1I2ML", "H2B2I2ML"]);

    cli(&config, &["synth"]);
    cli(&config, &["emit"]);
    let c = std::fs::read_to_string(out.join(format!("{}.c", m.name.to_lowercase()))).unwrap();
    assert!(c.contains("np_step"));

    cli(&config, &["simulate"]);
    let trace = std::fs::read_to_string(out.join("trace.txt")).unwrap();
    let events = parse_trace(&trace).unwrap();
    assert_eq!(events.len(), 4);
    cli(&config, &["simulate", "--program"]);
    assert_eq!(parse_trace(&std::fs::read_to_string(out.join("trace.txt")).unwrap()).unwrap(), events);

    let checked = cli(&config, &["check", "--random", "5"]);
    assert_eq!(checked.violations, 0, "{}", checked.summary);

    let adapted = cli(&config, &["adapt", "--trace", out.join("trace.txt").to_str().unwrap()]);
    assert!(adapted.summary.contains("equivalent"), "{}", adapted.summary);
    assert!(out.join("adapted.program.txt").exists());
}

#[test]
fn check_flags_a_corrupted_trace() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_project(dir.path());
    cli(&config, &["product"]);
    let bad = "10 | ff:ff:ff:ff:ff:ff | 04:0c:ce:d2:08:6c | arpreq | {2i}\n\
               11 | ff:ff:ff:ff:ff:ff | 04:0c:ce:d2:08:6c | arpreq | {3e,4e}\n\
               12 | 04:0c:ce:d2:08:6c | 7c:d1:c3:e8:a4:67 | arpreply | {3i}\n\
               13 | 04:0c:ce:d2:08:6c | 7c:d1:c3:e8:a4:67 | arpreply | {4e}\n";
    let path = dir.path().join("bad.trace");
    std::fs::write(&path, bad).unwrap();
    let r = cli(&config, &["check", "--trace", path.to_str().unwrap(), "--random", "0"]);
    assert!(r.violations > 0, "{}", r.summary);
}

#[test]
fn external_solver_agrees_when_available() {
    let z3 = Path::new("/usr/local/bin/z3");
    if !z3.exists() {
        eprintln!("skipped: no solver at {}", z3.display());
        return;
    }
    let ext = SatOracle::external(DomainConfig::desk(), z3, std::time::Duration::from_secs(30));
    let int = SatOracle::internal(DomainConfig::desk());
    for s in ["(and (= port 2) (= port 3))", "(and (= port 2) (in (egr self) egress))", "(and (bcast (fld f da)) (ucast (fld f da)))"] {
        let f = parse_formula(s).unwrap();
        assert_eq!(ext.is_satisfiable(&f).unwrap(), int.is_satisfiable(&f).unwrap(), "{s}");
    }
}

struct Switch {
    product: LambdaSFA,
    program: DecisionProgram,
}

fn switch() -> &'static Switch {
    static S: std::sync::OnceLock<Switch> = std::sync::OnceLock::new();
    S.get_or_init(|| {
        let read = |n: &str| std::fs::read_to_string(assets().join(n)).unwrap();
        let o = SatOracle::internal(DomainConfig::desk());
        let ms: Vec<_> = ["h.sfa", "b.sfa", "i.sfa", "m.sfa"].iter().map(|n| parse_machine(&read(n)).unwrap()).collect();
        let (product, _) = product_with_pruned(&ms, &o).unwrap();
        let cfg = ClassConfig::parse(&read("classes.cfg")).unwrap();
        let profile = DistributionProfile::parse(&read("switch.profile")).unwrap();
        let program = lower_product(&product, &cfg, &profile, Objective::ExpectedTime, &o).unwrap();
        Switch { product, program }
    })
}

const ATOMS: [&str; 8] = [
    "(= port 2)",
    "(= port uplink-port)",
    "(bcast (fld f da))",
    "(= (fld f da) (haddr port))",
    "(in (egr self) loc)",
    "(= (fld f da) (fld (x f) da))",
    "(= (x port) self)",
    "(<= (- t (x t)) mto)",
];

fn formula() -> impl Strategy<Value = Formula> {
    let leaf = (0..ATOMS.len(), any::<bool>()).prop_map(|(i, pos)| {
        let a = parse_formula(ATOMS[i]).unwrap();
        if pos {
            a
        } else {
            Formula::not(a)
        }
    });
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(Formula::and),
            prop::collection::vec(inner, 1..4).prop_map(Formula::or),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn learning_never_duplicates_live_entries(
        ops in prop::collection::vec((0usize..6, 1i64..=4, 1i64..=3), 1..40),
        mto in 1i64..6,
    ) {
        let mut t = MacTable::all_expired(4, 0, mto);
        let mut now = mto + 1;
        for (mac, port, gap) in ops {
            now += gap;
            t.learn(pool_mac(mac), port, now, 1, mto);
            prop_assert_eq!(t.duplicate_unexpired(now, mto), 0);
            if port != 1 {
                prop_assert_eq!(t.lookup(pool_mac(mac), now, mto), Some(port));
            }
        }
    }

    #[test]
    fn traces_round_trip(seed in any::<u64>(), frames in 1usize..16) {
        let sw = SwitchConfig::desk();
        let w = random_workload(&TraceParams { seed, frames, ..TraceParams::default() }, &sw);
        prop_assert_eq!(parse_workload(&format_workload(&w)).unwrap(), w.clone());
        let s = simulate(Executable::Product(&switch().product), &w, &sw).unwrap();
        prop_assert_eq!(parse_trace(&format_trace(&s.events)).unwrap(), s.events);
    }

    #[test]
    fn program_simulates_like_product(seed in any::<u64>(), mto in 1i64..6, bcast in 0u32..=100) {
        let sw = SwitchConfig::new(4, 1, mto, 4);
        let w = random_workload(&TraceParams { seed, frames: 10, broadcast_pct: bcast, ..TraceParams::default() }, &sw);
        let a = simulate(Executable::Product(&switch().product), &w, &sw).unwrap();
        let b = simulate(Executable::Program(&switch().program), &w, &sw).unwrap();
        prop_assert_eq!(a.events, b.events);
        prop_assert_eq!(a.states, b.states);
    }

    #[test]
    fn enumeration_agrees_with_search(f in formula()) {
        let cfg = DomainConfig::desk();
        let enumerated = enumerate_model(&f, &cfg, 5_000_000).unwrap().is_some();
        let searched = SatOracle::internal(cfg).is_satisfiable(&f).unwrap();
        prop_assert_eq!(enumerated, searched, "{}", f);
    }

    #[test]
    fn broadcast_is_never_unicast(b in prop::array::uniform6(any::<u8>())) {
        let m = Mac(b);
        prop_assert!(!(m.is_broadcast() && m.is_unicast()));
    }
}
