//! The 27 Wyner-type connectivity states and exact state distributions.
//!
//! Each receiver hears its own transmitter plus at most one of the two other
//! transmitters, so a state is a triple of optional interferers, one per
//! receiver. The named catalog, the per-transmitter state sets used by the
//! converse and distribution parsing all live here.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("user index {0} out of range (expected 1..=3)")]
    BadUser(usize),
    #[error("invalid pattern: receiver {0} cannot be interfered by its own transmitter")]
    SelfInterference(usize),
    #[error("bad distribution: {0}")]
    BadDistribution(String),
}

/// Transmitter/receiver index, 1-based to match user numbering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct User(u8);

impl User {
    pub const ALL: [User; 3] = [User(1), User(2), User(3)];

    pub fn new(i: usize) -> Result<Self, TopologyError> {
        match i {
            1..=3 => Ok(User(i as u8)),
            _ => Err(TopologyError::BadUser(i)),
        }
    }

    pub fn number(self) -> usize {
        usize::from(self.0)
    }

    /// Zero-based position, for array indexing.
    pub fn idx(self) -> usize {
        usize::from(self.0) - 1
    }

    /// The two other users, in increasing order.
    pub fn others(self) -> [User; 2] {
        match self.0 {
            1 => [User(2), User(3)],
            2 => [User(1), User(3)],
            _ => [User(1), User(2)],
        }
    }
}

impl fmt::Display for User {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Connectivity pattern: the interfering transmitter seen by each receiver.
///
/// Desired links are always present and are not stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TopologyState {
    interferer: [Option<User>; 3],
}

impl TopologyState {
    pub fn new(interferer: [Option<User>; 3]) -> Result<Self, TopologyError> {
        for (j, i) in interferer.iter().enumerate() {
            if *i == Some(User(j as u8 + 1)) {
                return Err(TopologyError::SelfInterference(j + 1));
            }
        }
        Ok(TopologyState { interferer })
    }

    /// Shorthand for catalog construction: 0 means no interferer.
    const fn raw(a: u8, b: u8, c: u8) -> Self {
        const fn slot(v: u8) -> Option<User> {
            if v == 0 {
                None
            } else {
                Some(User(v))
            }
        }
        TopologyState {
            interferer: [slot(a), slot(b), slot(c)],
        }
    }

    pub fn interferer(&self, rx: User) -> Option<User> {
        self.interferer[rx.idx()]
    }

    pub fn interferers(&self) -> [Option<User>; 3] {
        self.interferer
    }

    /// Whether the link `tx -> rx` exists (desired links always do).
    pub fn has_link(&self, tx: User, rx: User) -> bool {
        tx == rx || self.interferer(rx) == Some(tx)
    }

    /// Receivers that `tx` interferes.
    pub fn victims(&self, tx: User) -> Vec<User> {
        User::ALL
            .into_iter()
            .filter(|&rx| self.interferer(rx) == Some(tx))
            .collect()
    }

    pub fn interference_count(&self) -> usize {
        self.interferer.iter().flatten().count()
    }
}

macro_rules! states {
    ($( $name:ident => ($a:expr, $b:expr, $c:expr) ),* $(,)?) => {
        /// Catalog name of a connectivity state.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum StateId { $($name),* }

        impl StateId {
            pub const ALL: [StateId; 27] = [$(StateId::$name),*];

            pub fn name(self) -> &'static str {
                match self { $(StateId::$name => stringify!($name)),* }
            }

            pub fn pattern(self) -> TopologyState {
                match self { $(StateId::$name => TopologyState::raw($a, $b, $c)),* }
            }
        }
    };
}

// Interferer at (Rx1, Rx2, Rx3); 0 = none.
states! {
    A => (0, 0, 0),
    B1 => (2, 0, 0),
    B2 => (0, 1, 0),
    B3 => (2, 1, 0),
    C1 => (0, 3, 0),
    C2 => (0, 0, 2),
    C3 => (0, 3, 2),
    D1 => (0, 0, 1),
    D2 => (3, 0, 0),
    D3 => (3, 0, 1),
    E1 => (2, 3, 0),
    E2 => (0, 1, 2),
    E3 => (0, 1, 1),
    F1 => (0, 3, 1),
    F2 => (3, 0, 2),
    F3 => (2, 0, 2),
    G1 => (2, 0, 1),
    G2 => (3, 1, 0),
    G3 => (3, 3, 0),
    H1 => (2, 3, 1),
    H2 => (3, 1, 2),
    I1 => (2, 1, 1),
    I2 => (2, 1, 2),
    J1 => (2, 3, 2),
    J2 => (3, 3, 2),
    K1 => (3, 3, 1),
    K2 => (3, 1, 1),
}

impl StateId {
    pub fn from_pattern(p: &TopologyState) -> StateId {
        *StateId::ALL
            .iter()
            .find(|s| s.pattern() == *p)
            .expect("catalog covers all 27 patterns")
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StateId {
    type Err = TopologyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StateId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| TopologyError::UnknownState(s.to_string()))
    }
}

impl Serialize for StateId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for StateId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(de::Error::custom)
    }
}

pub fn all_states() -> Vec<(StateId, TopologyState)> {
    StateId::ALL.iter().map(|&s| (s, s.pattern())).collect()
}

/// Transmitters that can be switched off so that both remaining receivers
/// see no active interferer.
pub fn silent_candidates(s: StateId) -> BTreeSet<User> {
    let p = s.pattern();
    User::ALL
        .into_iter()
        .filter(|&t| {
            t.others()
                .iter()
                .all(|&rx| p.interferer(rx).is_none_or(|i| i == t))
        })
        .collect()
}

pub type StateSet = BTreeSet<StateId>;

fn set(ids: &[StateId]) -> StateSet {
    ids.iter().copied().collect()
}

/// The state in which transmitter `i` interferes both other receivers.
pub fn both_state(i: User) -> StateId {
    match i.number() {
        1 => StateId::E3,
        2 => StateId::F3,
        _ => StateId::G3,
    }
}

pub fn delta(i: User) -> StateSet {
    use StateId::*;
    match i.number() {
        1 => set(&[D1, F1, G1, H1, I1, K1, K2, D3]),
        2 => set(&[B1, E1, G1, H1, I1, J1, I2, B3]),
        _ => set(&[C1, E1, F1, H1, J1, K1, J2, C3]),
    }
}

pub fn gamma(i: User) -> StateSet {
    use StateId::*;
    match i.number() {
        1 => set(&[B2, E2, G2, H2, I2, B3]),
        2 => set(&[C2, E2, F2, H2, J2, C3]),
        _ => set(&[D2, F2, G2, H2, K2, D3]),
    }
}

/// States in which transmitter `i` interferes nobody.
pub fn theta(i: User) -> StateSet {
    let mut excluded = delta(i);
    excluded.extend(gamma(i));
    excluded.insert(both_state(i));
    StateId::ALL
        .into_iter()
        .filter(|s| !excluded.contains(s))
        .collect()
}

/// Rule-based construction of the same sets from link membership alone.
pub mod derived {
    use super::*;

    /// Receiver whose interference by `i` puts a state into the delta set.
    fn primary_victim(i: User) -> User {
        User::ALL[[2, 0, 1][i.idx()]]
    }

    fn secondary_victim(i: User) -> User {
        User::ALL[[1, 2, 0][i.idx()]]
    }

    /// The only state whose interference links all come from `i`, hitting both others.
    pub fn both_state(i: User) -> StateId {
        let hits: Vec<StateId> = StateId::ALL
            .into_iter()
            .filter(|s| s.pattern().victims(i).len() == 2 && s.pattern().interference_count() == 2)
            .collect();
        assert_eq!(hits.len(), 1);
        hits[0]
    }

    pub fn delta(i: User) -> StateSet {
        let both = both_state(i);
        StateId::ALL
            .into_iter()
            .filter(|&s| s != both && s.pattern().has_link(i, primary_victim(i)))
            .collect()
    }

    pub fn gamma(i: User) -> StateSet {
        let both = both_state(i);
        let d = delta(i);
        StateId::ALL
            .into_iter()
            .filter(|&s| {
                s != both && !d.contains(&s) && s.pattern().has_link(i, secondary_victim(i))
            })
            .collect()
    }

    pub fn theta(i: User) -> StateSet {
        StateId::ALL
            .into_iter()
            .filter(|s| s.pattern().victims(i).is_empty())
            .collect()
    }
}

/// Graphviz rendering of one state: desired links solid, interference dashed and labelled.
pub fn to_dot(s: StateId) -> String {
    let p = s.pattern();
    let mut out = format!("digraph {} {{\n  rankdir=LR;\n", s.name());
    for u in User::ALL {
        out.push_str(&format!("  tx{u} [label=\"Tx{u}\", shape=box];\n"));
    }
    for u in User::ALL {
        out.push_str(&format!("  rx{u} [label=\"Rx{u}\", shape=ellipse];\n"));
    }
    for u in User::ALL {
        out.push_str(&format!("  tx{u} -> rx{u} [style=solid];\n"));
    }
    for rx in User::ALL {
        if let Some(tx) = p.interferer(rx) {
            out.push_str(&format!(
                "  tx{tx} -> rx{rx} [style=dashed, color=red, label=\"interference\"];\n"
            ));
        }
    }
    out.push_str("}\n");
    out
}

/// Parse a non-negative rational written as `p/q` or `p`.
pub fn parse_rational(s: &str) -> Result<BigRational, TopologyError> {
    let bad = || TopologyError::BadDistribution(format!("bad rational `{s}`"));
    let t = s.trim();
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let is_digits = |x: &str| !x.is_empty() && x.bytes().all(|b| b.is_ascii_digit());
    if !is_digits(num) || !is_digits(den) {
        return Err(bad());
    }
    let n: BigInt = num.parse().map_err(|_| bad())?;
    let d: BigInt = den.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

/// Canonical `p/q` rendering (`p` alone for integers).
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal approximation, for display only.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact probability mass over the 27 states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDistribution {
    mass: [BigRational; 27],
}

fn state_index(s: StateId) -> usize {
    s as usize
}

impl StateDistribution {
    /// Validate masses: non-negative and summing to exactly one.
    pub fn new<I>(entries: I) -> Result<Self, TopologyError>
    where
        I: IntoIterator<Item = (StateId, BigRational)>,
    {
        let mut mass: [BigRational; 27] = std::array::from_fn(|_| BigRational::zero());
        let mut seen = BTreeSet::new();
        for (s, m) in entries {
            if !seen.insert(s) {
                return Err(TopologyError::BadDistribution(format!(
                    "state {s} listed twice"
                )));
            }
            if m.is_negative() {
                return Err(TopologyError::BadDistribution(format!(
                    "negative mass for {s}"
                )));
            }
            mass[state_index(s)] = m;
        }
        let total: BigRational = mass.iter().sum();
        if !total.is_one() {
            return Err(TopologyError::BadDistribution(format!(
                "masses sum to {}, expected 1",
                format_rational(&total)
            )));
        }
        Ok(StateDistribution { mass })
    }

    pub fn uniform() -> Self {
        let m = BigRational::new(1.into(), 27.into());
        StateDistribution {
            mass: std::array::from_fn(|_| m.clone()),
        }
    }

    pub fn point(s: StateId) -> Self {
        Self::new([(s, BigRational::one())]).expect("point mass is valid")
    }

    pub fn get(&self, s: StateId) -> &BigRational {
        &self.mass[state_index(s)]
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, &BigRational)> {
        StateId::ALL.into_iter().map(move |s| (s, self.get(s)))
    }

    pub fn support(&self) -> impl Iterator<Item = (StateId, &BigRational)> {
        self.iter().filter(|(_, m)| !m.is_zero())
    }

    /// Total mass of a set of states.
    pub fn mass<'a, I>(&self, states: I) -> BigRational
    where
        I: IntoIterator<Item = &'a StateId>,
    {
        states.into_iter().map(|&s| self.get(s).clone()).sum()
    }

    pub fn is_uniform(&self) -> bool {
        *self == Self::uniform()
    }

    /// Convex combination `alpha * self + (1 - alpha) * other`.
    pub fn mix(&self, other: &Self, alpha: &BigRational) -> Result<Self, TopologyError> {
        if alpha.is_negative() || *alpha > BigRational::one() {
            return Err(TopologyError::BadDistribution(
                "mixing weight outside [0, 1]".into(),
            ));
        }
        let beta = BigRational::one() - alpha;
        Self::new(
            StateId::ALL
                .into_iter()
                .map(|s| (s, alpha * self.get(s) + &beta * other.get(s))),
        )
    }

    pub fn from_json(text: &str) -> Result<Self, TopologyError> {
        serde_json::from_str(text).map_err(|e| TopologyError::BadDistribution(e.to_string()))
    }

    /// Pretty JSON in catalog order, zero masses omitted, trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("distribution serializes");
        s.push('\n');
        s
    }
}

struct Masses<'a>(&'a StateDistribution);

impl Serialize for Masses<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let support: Vec<_> = self.0.support().collect();
        let mut map = s.serialize_map(Some(support.len()))?;
        for (id, m) in support {
            map.serialize_entry(id.name(), &format_rational(m))?;
        }
        map.end()
    }
}

impl Serialize for StateDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(1))?;
        map.serialize_entry("states", &Masses(self))?;
        map.end()
    }
}

/// Map entries in document order, so repeated keys are seen rather than merged.
struct Entries(Vec<(String, String)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> de::Visitor<'de> for V {
            type Value = Entries;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from state names to rational strings")
            }
            fn visit_map<A: de::MapAccess<'de>>(self, mut m: A) -> Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some(entry) = m.next_entry::<String, String>()? {
                    out.push(entry);
                }
                Ok(Entries(out))
            }
        }
        d.deserialize_map(V)
    }
}

impl<'de> Deserialize<'de> for StateDistribution {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            states: Entries,
        }
        let detail = |e: TopologyError| match e {
            TopologyError::BadDistribution(msg) => de::Error::custom(msg),
            other => de::Error::custom(other),
        };
        let raw = Raw::deserialize(d)?;
        let entries = raw
            .states
            .0
            .iter()
            .map(|(k, v)| Ok((k.parse::<StateId>()?, parse_rational(v)?)))
            .collect::<Result<Vec<_>, TopologyError>>()
            .map_err(detail)?;
        StateDistribution::new(entries).map_err(detail)
    }
}
