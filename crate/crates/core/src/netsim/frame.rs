//! Link-layer values that appear in traces: MAC addresses, interfaces and frames.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::ParseError;

pub type Port = i64;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Mac(pub [u8; 6]);

impl Mac {
    pub const BROADCAST: Mac = Mac([0xff; 6]);
    pub const NULL: Mac = Mac([0; 6]);

    pub fn is_broadcast(&self) -> bool {
        *self == Mac::BROADCAST
    }

    /// Group bit of the first octet clear.
    pub fn is_unicast(&self) -> bool {
        self.0[0] & 1 == 0
    }

    /// Locally administered address used as the hardware address of a switch port.
    pub fn port_address(port: Port) -> Mac {
        Mac([0x02, 0, 0, 0, 0, port as u8])
    }
}

impl fmt::Display for Mac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            b[0], b[1], b[2], b[3], b[4], b[5]
        )
    }
}

impl fmt::Debug for Mac {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Mac {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 6 {
            return Err(ParseError::msg(format!("malformed MAC address `{s}`")));
        }
        let mut out = [0u8; 6];
        for (slot, part) in out.iter_mut().zip(parts) {
            if part.len() != 2 {
                return Err(ParseError::msg(format!("malformed MAC address `{s}`")));
            }
            *slot = u8::from_str_radix(part, 16)
                .map_err(|_| ParseError::msg(format!("malformed MAC address `{s}`")))?;
        }
        Ok(Mac(out))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Dir {
    Ingress,
    Egress,
}

impl Dir {
    pub fn suffix(self) -> char {
        match self {
            Dir::Ingress => 'i',
            Dir::Egress => 'e',
        }
    }
}

/// One side of a switch port, written `2i` or `3e`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Iface {
    pub port: Port,
    pub dir: Dir,
}

impl Iface {
    pub fn ingress(port: Port) -> Self {
        Iface { port, dir: Dir::Ingress }
    }

    pub fn egress(port: Port) -> Self {
        Iface { port, dir: Dir::Egress }
    }
}

impl fmt::Display for Iface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.port, self.dir.suffix())
    }
}

impl FromStr for Iface {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseError::msg(format!("malformed interface `{s}`"));
        let (num, dir) = s.split_at(s.len().checked_sub(1).ok_or_else(bad)?);
        let port: Port = num.parse().map_err(|_| bad())?;
        let dir = match dir {
            "i" => Dir::Ingress,
            "e" => Dir::Egress,
            _ => return Err(bad()),
        };
        Ok(Iface { port, dir })
    }
}

/// A frame location: a set of interfaces.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct IfaceSet(pub BTreeSet<Iface>);

impl IfaceSet {
    pub fn new() -> Self {
        IfaceSet(BTreeSet::new())
    }

    pub fn single(iface: Iface) -> Self {
        IfaceSet(BTreeSet::from([iface]))
    }

    pub fn egress_ports(ports: impl IntoIterator<Item = Port>) -> Self {
        IfaceSet(ports.into_iter().map(Iface::egress).collect())
    }

    /// All egress interfaces of a switch with `num_ports` ports.
    pub fn all_egress(num_ports: usize) -> Self {
        Self::egress_ports(1..=num_ports as Port)
    }

    /// The port `p` when this set is exactly `{p i}`.
    pub fn ingress_port(&self) -> Option<Port> {
        match self.0.iter().collect::<Vec<_>>().as_slice() {
            [Iface { port, dir: Dir::Ingress }] => Some(*port),
            _ => None,
        }
    }

    pub fn is_egress_only(&self) -> bool {
        self.0.iter().all(|i| i.dir == Dir::Egress)
    }

    pub fn contains(&self, iface: &Iface) -> bool {
        self.0.contains(iface)
    }

    pub fn is_subset(&self, other: &IfaceSet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn insert(&mut self, iface: Iface) {
        self.0.insert(iface);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Iface> {
        self.0.iter()
    }

    /// Every subset of the interfaces of a `num_ports` switch, ordered by bitmask.
    pub fn all_subsets(num_ports: usize) -> Vec<IfaceSet> {
        let ifaces: Vec<Iface> = (1..=num_ports as Port)
            .flat_map(|p| [Iface::ingress(p), Iface::egress(p)])
            .collect();
        (0u64..(1u64 << ifaces.len()))
            .map(|mask| {
                IfaceSet(
                    ifaces
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, f)| *f)
                        .collect(),
                )
            })
            .collect()
    }
}

impl fmt::Display for IfaceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, iface) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{iface}")?;
        }
        write!(f, "}}")
    }
}

impl FromStr for IfaceSet {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let inner = s
            .trim()
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| ParseError::msg(format!("malformed location `{s}`")))?;
        let mut set = IfaceSet::new();
        for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            set.insert(part.parse()?);
        }
        Ok(set)
    }
}

/// Protocol tag. `arpreq@p` marks an ARP request for the hardware address of port `p`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Proto(pub String);

impl Proto {
    pub fn new(tag: &str) -> Self {
        Proto(tag.to_string())
    }

    pub fn arp_request_for(port: Port) -> Self {
        Proto(format!("arpreq@{port}"))
    }

    pub fn requests_port(&self, port: Port) -> bool {
        self.0
            .strip_prefix("arpreq@")
            .and_then(|p| p.parse::<Port>().ok())
            == Some(port)
    }
}

impl fmt::Display for Proto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Frame {
    pub da: Mac,
    pub sa: Mac,
    pub proto: Proto,
}

impl Frame {
    pub fn new(da: Mac, sa: Mac, proto: &str) -> Self {
        Frame { da, sa, proto: Proto::new(proto) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mac_round_trip_and_classes() {
        let m: Mac = "04:0c:ce:d2:08:6c".parse().unwrap();
        assert_eq!(m.to_string(), "04:0c:ce:d2:08:6c");
        assert!(m.is_unicast());
        assert!(!m.is_broadcast());
        assert!(Mac::BROADCAST.is_broadcast());
        assert!(!Mac::BROADCAST.is_unicast());
        let multicast: Mac = "01:00:5e:00:00:01".parse().unwrap();
        assert!(!multicast.is_unicast() && !multicast.is_broadcast());
        assert!("04:0c:ce".parse::<Mac>().is_err());
    }

    #[test]
    fn iface_sets() {
        let s: IfaceSet = "{3e,4e}".parse().unwrap();
        assert_eq!(s.to_string(), "{3e,4e}");
        assert!(s.is_egress_only());
        assert_eq!(s.ingress_port(), None);
        let i: IfaceSet = "{2i}".parse().unwrap();
        assert_eq!(i.ingress_port(), Some(2));
        assert_eq!("{}".parse::<IfaceSet>().unwrap(), IfaceSet::new());
        assert_eq!(IfaceSet::all_subsets(4).len(), 256);
    }

    #[test]
    fn arp_request_tags() {
        assert!(Proto::arp_request_for(2).requests_port(2));
        assert!(!Proto::arp_request_for(2).requests_port(3));
        assert!(!Proto::new("arpreq").requests_port(2));
    }
}
