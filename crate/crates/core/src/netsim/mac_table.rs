use std::fmt;

use super::frame::{Mac, Port};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct MacEntry {
    pub mac: Mac,
    pub t: i64,
    pub port: Port,
}

/// Fixed-size MAC learning table. An entry is expired at `now` iff `now - t > mto`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct MacTable {
    pub entries: Vec<MacEntry>,
}

impl MacTable {
    /// A table whose every entry is expired at `now` and holds the null address.
    pub fn all_expired(size: usize, now: i64, mto: i64) -> Self {
        MacTable {
            entries: vec![MacEntry { mac: Mac::NULL, t: now - mto - 1, port: 0 }; size],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_expired(entry: &MacEntry, now: i64, mto: i64) -> bool {
        now - entry.t > mto
    }

    /// Port of the first unexpired entry for `mac`.
    pub fn lookup(&self, mac: Mac, now: i64, mto: i64) -> Option<Port> {
        self.entries
            .iter()
            .find(|e| e.mac == mac && !Self::is_expired(e, now, mto))
            .map(|e| e.port)
    }

    /// Applies the learning rule for a frame from `sa` received at `port` at `now`.
    ///
    /// Learning happens for unicast sources at non-uplink ports when the address is
    /// already present or some entry is expired. The slot already holding `sa` is
    /// reused first, so at most one entry per address is ever unexpired; otherwise the
    /// lowest-index expired slot is taken. Returns the updated slot, if any.
    pub fn learn(&mut self, sa: Mac, port: Port, now: i64, uplink: Port, mto: i64) -> Option<usize> {
        if port == uplink || !sa.is_unicast() {
            return None;
        }
        let slot = self
            .entries
            .iter()
            .position(|e| e.mac == sa)
            .or_else(|| self.entries.iter().position(|e| Self::is_expired(e, now, mto)))?;
        self.entries[slot] = MacEntry { mac: sa, t: now, port };
        Some(slot)
    }

    /// Number of distinct addresses with more than one unexpired entry.
    pub fn duplicate_unexpired(&self, now: i64, mto: i64) -> usize {
        let live: Vec<Mac> = self
            .entries
            .iter()
            .filter(|e| !Self::is_expired(e, now, mto))
            .map(|e| e.mac)
            .collect();
        let mut dups = 0;
        for (i, m) in live.iter().enumerate() {
            if live[..i].contains(m) && !live[i + 1..].contains(m) {
                dups += 1;
            }
        }
        dups
    }
}

impl fmt::Display for MacTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "({} {} {})", e.mac, e.t, e.port)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mac(s: &str) -> Mac {
        s.parse().unwrap()
    }

    #[test]
    fn learns_into_lowest_expired_slot() {
        let mut t = MacTable::all_expired(4, 0, 5);
        assert_eq!(t.learn(mac("04:0c:ce:d2:08:6c"), 2, 10, 1, 5), Some(0));
        assert_eq!(t.learn(mac("7c:d1:c3:e8:a4:67"), 3, 12, 1, 5), Some(1));
        assert_eq!(t.lookup(mac("04:0c:ce:d2:08:6c"), 13, 5), Some(2));
        // Relearning reuses the slot holding the address.
        assert_eq!(t.learn(mac("04:0c:ce:d2:08:6c"), 4, 14, 1, 5), Some(0));
        assert_eq!(t.lookup(mac("04:0c:ce:d2:08:6c"), 14, 5), Some(4));
        assert_eq!(t.duplicate_unexpired(14, 5), 0);
    }

    #[test]
    fn no_learning_at_uplink_or_for_group_sources() {
        let mut t = MacTable::all_expired(2, 0, 5);
        assert_eq!(t.learn(mac("04:0c:ce:d2:08:6c"), 1, 3, 1, 5), None);
        assert_eq!(t.learn(Mac::BROADCAST, 2, 3, 1, 5), None);
    }

    #[test]
    fn full_table_refuses_new_addresses() {
        let mut t = MacTable::all_expired(1, 0, 5);
        t.learn(mac("04:00:00:00:00:01"), 2, 1, 1, 5);
        assert_eq!(t.learn(mac("04:00:00:00:00:02"), 3, 2, 1, 5), None);
        // Once the entry ages out the slot is reusable.
        assert_eq!(t.learn(mac("04:00:00:00:00:02"), 3, 7, 1, 5), Some(0));
    }

    #[test]
    fn expiry_boundary() {
        let e = MacEntry { mac: Mac::NULL, t: 3, port: 2 };
        assert!(!MacTable::is_expired(&e, 8, 5));
        assert!(MacTable::is_expired(&e, 9, 5));
    }
}
