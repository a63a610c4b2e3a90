use std::path::PathBuf;
use std::time::Instant;

use netprod::machine::{parse_machine, product_with_pruned, report, LambdaSFA};
use netprod::oracle::{DomainConfig, SatOracle};

fn asset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../assets").join(name)
}

fn load(name: &str) -> LambdaSFA {
    parse_machine(&std::fs::read_to_string(asset(name)).unwrap()).unwrap()
}

#[test]
fn switch_product_shape() {
    let ms: Vec<_> = ["h.sfa", "b.sfa", "i.sfa", "m.sfa"].iter().map(|n| load(n)).collect();
    let o = SatOracle::internal(DomainConfig::desk());
    let t0 = Instant::now();
    let (p, pruned) = product_with_pruned(&ms, &o).unwrap();
    eprintln!("{}\npruned {} in {:?}", report(&p), pruned.len(), t0.elapsed());
    assert_eq!(p.states, ["H1B1I1ML", "H1B1I2ML", "H2B2I2ML"]);
}
