//! Trace and workload text formats.
//!
//! Trace lines are `time | da | sa | proto | loc`, optionally followed by
//! `| [(mac t port) …]` to pin the MAC table of that position. Workload lines are
//! `time port da sa proto`. Blank lines and `#` comments are ignored in both.

use std::fmt;

use crate::error::ParseError;

use super::frame::{Frame, IfaceSet, Mac, Port, Proto};
use super::mac_table::{MacEntry, MacTable};

/// One timed position of a trace.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TraceEvent {
    pub time: i64,
    pub frame: Frame,
    pub loc: IfaceSet,
    /// The MAC table at this position; when absent it is derived from the previous
    /// position by the learning rule.
    pub mlt: Option<MacTable>,
}

impl TraceEvent {
    pub fn new(time: i64, frame: Frame, loc: IfaceSet) -> Self {
        TraceEvent { time, frame, loc, mlt: None }
    }

    pub fn is_ingress(&self) -> bool {
        self.loc.ingress_port().is_some()
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} | {} | {} | {} | {}",
            self.time, self.frame.da, self.frame.sa, self.frame.proto, self.loc
        )?;
        if let Some(t) = &self.mlt {
            write!(f, " | {t}")?;
        }
        Ok(())
    }
}

/// An ingress workload item: a frame arriving at `port` at `time`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Ingress {
    pub time: i64,
    pub port: Port,
    pub frame: Frame,
}

impl fmt::Display for Ingress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {} {}", self.time, self.port, self.frame.da, self.frame.sa, self.frame.proto)
    }
}

fn content_lines(src: &str) -> impl Iterator<Item = (usize, &str)> {
    src.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_int(s: &str, what: &str) -> Result<i64, ParseError> {
    s.trim().parse().map_err(|_| ParseError::msg(format!("malformed {what} `{}`", s.trim())))
}

pub fn parse_mac_table(s: &str) -> Result<MacTable, ParseError> {
    let inner = s
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| ParseError::msg(format!("malformed MAC table `{s}`")))?;
    let mut entries = Vec::new();
    for chunk in inner.split(')').map(str::trim).filter(|c| !c.is_empty()) {
        let body = chunk
            .strip_prefix('(')
            .ok_or_else(|| ParseError::msg(format!("malformed MAC table entry `{chunk}`")))?;
        let fields: Vec<&str> = body.split_whitespace().collect();
        let [mac, t, port] = fields.as_slice() else {
            return Err(ParseError::msg(format!("MAC table entry `{chunk})` needs mac, t and port")));
        };
        entries.push(MacEntry { mac: mac.parse()?, t: parse_int(t, "time")?, port: parse_int(port, "port")? });
    }
    Ok(MacTable { entries })
}

pub fn parse_trace(src: &str) -> Result<Vec<TraceEvent>, ParseError> {
    let mut out = Vec::new();
    for (line, text) in content_lines(src) {
        let at = |e: ParseError| e.or_at(line, 1);
        let cols: Vec<&str> = text.split('|').map(str::trim).collect();
        if cols.len() != 5 && cols.len() != 6 {
            return Err(ParseError::at(line, 1, "expected `time | da | sa | proto | loc [| mlt]`"));
        }
        let da: Mac = cols[1].parse().map_err(at)?;
        let sa: Mac = cols[2].parse().map_err(at)?;
        let mlt = match cols.get(5) {
            Some(t) => Some(parse_mac_table(t).map_err(at)?),
            None => None,
        };
        out.push(TraceEvent {
            time: parse_int(cols[0], "time").map_err(at)?,
            frame: Frame { da, sa, proto: Proto::new(cols[3]) },
            loc: cols[4].parse().map_err(at)?,
            mlt,
        });
    }
    Ok(out)
}

pub fn format_trace(events: &[TraceEvent]) -> String {
    events.iter().map(|e| format!("{e}\n")).collect()
}

pub fn parse_workload(src: &str) -> Result<Vec<Ingress>, ParseError> {
    let mut out = Vec::new();
    for (line, text) in content_lines(src) {
        let at = |e: ParseError| e.or_at(line, 1);
        let cols: Vec<&str> = text.split_whitespace().collect();
        let [time, port, da, sa, proto] = cols.as_slice() else {
            return Err(ParseError::at(line, 1, "expected `time port da sa proto`"));
        };
        out.push(Ingress {
            time: parse_int(time, "time").map_err(at)?,
            port: parse_int(port, "port").map_err(at)?,
            frame: Frame { da: da.parse().map_err(at)?, sa: sa.parse().map_err(at)?, proto: Proto::new(proto) },
        });
    }
    Ok(out)
}

pub fn format_workload(items: &[Ingress]) -> String {
    items.iter().map(|i| format!("{i}\n")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_round_trip() {
        let src = "10 | ff:ff:ff:ff:ff:ff | 04:0c:ce:d2:08:6c | arpreq | {2i}\n\
                   11 | ff:ff:ff:ff:ff:ff | 04:0c:ce:d2:08:6c | arpreq | {3e,4e}\n";
        let tr = parse_trace(src).unwrap();
        assert_eq!(tr.len(), 2);
        assert!(tr[0].is_ingress() && !tr[1].is_ingress());
        assert_eq!(format_trace(&tr), src);
    }

    #[test]
    fn pinned_tables_parse() {
        let src = "3 | 04:0c:ce:d2:08:6c | 7c:d1:c3:e8:a4:67 | ipv4 | {2e} | [(04:0c:ce:d2:08:6c 1 3) (00:00:00:00:00:00 -9 0)]";
        let tr = parse_trace(src).unwrap();
        let t = tr[0].mlt.as_ref().unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.entries[1].t, -9);
        assert_eq!(format_trace(&tr).trim_end(), src);
    }

    #[test]
    fn workload_errors_carry_lines() {
        let e = parse_workload("# header\n10 2 ff:ff:ff:ff:ff:ff 04:0c:ce:d2:08:6c arpreq\n11 x\n").unwrap_err();
        assert_eq!(e.line, 3);
    }
}
