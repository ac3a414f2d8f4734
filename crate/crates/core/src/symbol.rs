//! Process-wide string interner for predicate names and symbolic constants.

use std::fmt;

use once_cell::sync::Lazy;
use parking_lot::RwLock;
use rustc_hash::FxHashMap;

static IDS: Lazy<RwLock<FxHashMap<&'static str, u32>>> = Lazy::new(Default::default);

/// Names by id; readable without locking.
static NAMES: Lazy<boxcar::Vec<&'static str>> = Lazy::new(boxcar::Vec::new);

/// An interned name. Equality and hashing are by id; ordering is by text.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Symbol(u32);

impl Symbol {
    pub fn intern(name: &str) -> Symbol {
        if let Some(&id) = IDS.read().get(name) {
            return Symbol(id);
        }
        let mut ids = IDS.write();
        if let Some(&id) = ids.get(name) {
            return Symbol(id);
        }
        // Names live for the whole process; the set of distinct names is
        // bounded by the program and the constants seen on the wire.
        let leaked: &'static str = Box::leak(name.to_owned().into_boxed_str());
        let id = NAMES.push(leaked) as u32;
        ids.insert(leaked, id);
        Symbol(id)
    }

    pub fn as_str(self) -> &'static str {
        NAMES[self.0 as usize]
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        if self.0 == other.0 {
            return std::cmp::Ordering::Equal;
        }
        self.as_str().cmp(other.as_str())
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_str())
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::intern(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interning_is_stable() {
        let a = Symbol::intern("energyDelivered");
        let b = Symbol::intern("energyDelivered");
        assert_eq!(a, b);
        assert_eq!(a.as_str(), "energyDelivered");
        assert_ne!(a, Symbol::intern("link"));
    }

    #[test]
    fn ordering_is_textual() {
        let z = Symbol::intern("zz_order");
        let a = Symbol::intern("aa_order");
        assert!(a < z);
    }
}
