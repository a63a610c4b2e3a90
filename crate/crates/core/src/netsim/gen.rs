//! Seeded random workloads and traces.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::machine::LambdaSFA;

use super::frame::{Frame, IfaceSet, Mac, Port};
use super::sim::{simulate, Executable};
use super::{Ingress, SimError, SwitchConfig, TraceEvent};

/// Generator knobs. Ratios are percentages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceParams {
    pub seed: u64,
    /// Number of ingress frames.
    pub frames: usize,
    /// Size of the unicast address pool.
    pub macs: usize,
    pub broadcast_pct: u32,
    /// Frames addressed to the receiving port's own address.
    pub to_switch_pct: u32,
    pub arp_pct: u32,
    /// Largest gap between consecutive ingress times; at least 2.
    pub max_gap: i64,
    /// Chance that a trace event is corrupted.
    pub perturb_pct: u32,
}

impl Default for TraceParams {
    fn default() -> Self {
        TraceParams { seed: 0, frames: 10, macs: 6, broadcast_pct: 30, to_switch_pct: 10, arp_pct: 30, max_gap: 4, perturb_pct: 3 }
    }
}

impl fmt::Display for TraceParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "seed={} frames={} macs={} broadcast={}% to-switch={}% arp={}% max-gap={} perturb={}%",
            self.seed, self.frames, self.macs, self.broadcast_pct, self.to_switch_pct, self.arp_pct, self.max_gap, self.perturb_pct
        )
    }
}

/// The `i`-th address of the unicast pool.
pub fn pool_mac(i: usize) -> Mac {
    Mac([0x02, 0x00, 0x5e, 0x00, 0x01, i as u8 + 1])
}

fn pct(rng: &mut ChaCha8Rng, p: u32) -> bool {
    rng.gen_range(0..100) < p
}

/// Ingress frames with unicast or broadcast destinations. ARP requests never target
/// a switch port, and no group address other than broadcast is drawn.
pub fn random_workload(params: &TraceParams, sw: &SwitchConfig) -> Vec<Ingress> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let pool: Vec<Mac> = (0..params.macs.max(1)).map(pool_mac).collect();
    let mut time = rng.gen_range(1..=10);
    let mut out = Vec::with_capacity(params.frames);
    for _ in 0..params.frames {
        let port: Port = rng.gen_range(1..=sw.num_ports as Port);
        let sa = *pool.choose(&mut rng).expect("nonempty pool");
        let da = if pct(&mut rng, params.to_switch_pct) {
            sw.haddrs[(port - 1) as usize]
        } else if pct(&mut rng, params.broadcast_pct) {
            Mac::BROADCAST
        } else {
            *pool.choose(&mut rng).expect("nonempty pool")
        };
        let proto = match (pct(&mut rng, params.arp_pct), da.is_broadcast()) {
            (true, true) => "arpreq",
            (true, false) => "arpreply",
            (false, _) => "data",
        };
        out.push(Ingress { time, port, frame: Frame::new(da, sa, proto) });
        time += rng.gen_range(2..=params.max_gap.max(2));
    }
    out
}

/// A trace of `product` on a random workload, with some events corrupted: egress
/// locations replaced by arbitrary interface sets or frames altered.
pub fn random_trace(product: &LambdaSFA, params: &TraceParams, sw: &SwitchConfig) -> Result<Vec<TraceEvent>, SimError> {
    let sim = simulate(Executable::Product(product), &random_workload(params, sw), sw)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x9e37_79b9_7f4a_7c15);
    let subsets = IfaceSet::all_subsets(sw.num_ports);
    let mut events = sim.events;
    for ev in &mut events {
        if !pct(&mut rng, params.perturb_pct) {
            continue;
        }
        if rng.gen_bool(0.5) {
            ev.loc = subsets.choose(&mut rng).expect("nonempty").clone();
        } else {
            ev.frame.sa = pool_mac(rng.gen_range(0..params.macs.max(1)));
        }
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workloads_are_seeded() {
        let sw = SwitchConfig::desk();
        let p = TraceParams { seed: 7, frames: 20, ..TraceParams::default() };
        let a = random_workload(&p, &sw);
        assert_eq!(a, random_workload(&p, &sw));
        assert_ne!(a, random_workload(&TraceParams { seed: 8, ..p.clone() }, &sw));
        assert!(a.windows(2).all(|w| w[1].time >= w[0].time + 2));
        assert!(a.iter().all(|i| (1..=4).contains(&i.port) && (i.frame.da.is_unicast() || i.frame.da.is_broadcast())));
        assert!(a.iter().all(|i| sw.ports().all(|p| !i.frame.proto.requests_port(p))));
    }
}
