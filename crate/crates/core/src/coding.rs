//! Executable transmission schemes and their decoders.
//!
//! A [`SchemeBlock`] is a short run of channel uses with fixed states, each
//! transmitter's message symbols, what every transmitter sends in each use and
//! an explicit per-receiver decode plan. Blocks compile to a [`LinearScheme`]
//! (one 0/1 precoding matrix per transmitter) so that decodability can be
//! checked independently with a rank test.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galois::{Field, FieldElement, FieldMatrix, GaloisError};
use crate::topology::{silent_candidates, StateId, User};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodingError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("expected {expected} message symbols, got {got}")]
    MessageCount { expected: usize, got: usize },
    #[error("unknown quadruple variant {0} (expected 1 or 2)")]
    BadVariant(u8),
    #[error("bad scheme: {0}")]
    BadScheme(String),
    #[error("bad channel draw: {0}")]
    BadChannel(String),
    #[error(transparent)]
    Galois(#[from] GaloisError),
}

/// One message symbol: the `index`-th symbol of transmitter `tx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymbolRef {
    pub tx: User,
    pub index: usize,
}

fn sym(tx: usize, index: usize) -> SymbolRef {
    SymbolRef {
        tx: User::ALL[tx - 1],
        index,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxRule {
    Silent,
    /// Send the given symbol from this transmitter's own message list.
    Send(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockUse {
    pub state: StateId,
    pub rules: [TxRule; 3],
}

impl BlockUse {
    /// Symbol put on the air by `tx`, if any.
    pub fn sent(&self, tx: User) -> Option<SymbolRef> {
        match self.rules[tx.idx()] {
            TxRule::Silent => None,
            TxRule::Send(index) => Some(SymbolRef { tx, index }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeStep {
    /// Read `target` off the observation at `use_index`; every other symbol
    /// in that observation is already known.
    Resolve { use_index: usize, target: SymbolRef },
    /// Invert the 2x2 system formed by two uses. `unknowns[0]` is the one kept.
    Invert2 {
        uses: [usize; 2],
        unknowns: [SymbolRef; 2],
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    /// Joint encoding over B,C,D,H with the given variant (1 or 2).
    Quadruple(u8),
    /// State A: every transmitter sends a fresh symbol.
    FullRate,
    /// One transmitter switched off, the other two send fresh symbols.
    Silencing { silent: User },
    /// H state over two uses, every transmitter repeating one symbol.
    Repetition,
    /// Leftover H occurrence: only Tx1 sends.
    Single,
}

impl BlockKind {
    pub fn label(&self) -> &'static str {
        match self {
            BlockKind::Quadruple(1) => "quadruple1",
            BlockKind::Quadruple(_) => "quadruple2",
            BlockKind::FullRate => "full-rate",
            BlockKind::Silencing { .. } => "silencing",
            BlockKind::Repetition => "h-repetition",
            BlockKind::Single => "single",
        }
    }
}

/// A group of channel uses with their transmit rules and decode plan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeBlock {
    kind: BlockKind,
    uses: Vec<BlockUse>,
    messages: [Vec<FieldElement>; 3],
    plan: [Vec<DecodeStep>; 3],
}

const QUADRUPLE_STATES: [[StateId; 4]; 2] = [
    [StateId::B1, StateId::C1, StateId::D1, StateId::H1],
    [StateId::B2, StateId::C2, StateId::D2, StateId::H2],
];

/// States consumed by a quadruple of the given variant, in use order.
pub fn quadruple_states(variant: u8) -> Result<[StateId; 4], CodingError> {
    match variant {
        1 | 2 => Ok(QUADRUPLE_STATES[usize::from(variant) - 1]),
        v => Err(CodingError::BadVariant(v)),
    }
}

/// Joint scheme over four states delivering 9 symbols.
///
/// `msgs` is `(b1, b2, b3, c1, c2, c3, d1, d2, d3)`; transmitter i owns
/// `[b_i, c_i, d_i]` and sends them in the B, C and D uses. In the H use each
/// transmitter resends the symbol that interfered in its corrupting state, so
/// every receiver can peel the interferer off the H observation and then clean
/// its corrupted use.
pub fn plan_quadruple(variant: u8, msgs: &[FieldElement]) -> Result<SchemeBlock, CodingError> {
    let states = quadruple_states(variant)?;
    if msgs.len() != 9 {
        return Err(CodingError::MessageCount {
            expected: 9,
            got: msgs.len(),
        });
    }
    let messages = std::array::from_fn(|i| vec![msgs[i], msgs[3 + i], msgs[6 + i]]);
    let all = |k| [TxRule::Send(k); 3];
    let h_rules = if variant == 1 {
        // d1, b2, c3
        [TxRule::Send(2), TxRule::Send(0), TxRule::Send(1)]
    } else {
        // b1, c2, d3
        [TxRule::Send(0), TxRule::Send(1), TxRule::Send(2)]
    };
    let uses = vec![
        BlockUse {
            state: states[0],
            rules: all(0),
        },
        BlockUse {
            state: states[1],
            rules: all(1),
        },
        BlockUse {
            state: states[2],
            rules: all(2),
        },
        BlockUse {
            state: states[3],
            rules: h_rules,
        },
    ];
    let r = |use_index, tx, index| DecodeStep::Resolve {
        use_index,
        target: sym(tx, index),
    };
    let plan = if variant == 1 {
        [
            vec![r(1, 1, 1), r(2, 1, 2), r(3, 2, 0), r(0, 1, 0)],
            vec![r(0, 2, 0), r(2, 2, 2), r(3, 3, 1), r(1, 2, 1)],
            vec![r(0, 3, 0), r(1, 3, 1), r(3, 1, 2), r(2, 3, 2)],
        ]
    } else {
        [
            vec![r(0, 1, 0), r(1, 1, 1), r(3, 3, 2), r(2, 1, 2)],
            vec![r(1, 2, 1), r(2, 2, 2), r(3, 1, 0), r(0, 2, 0)],
            vec![r(0, 3, 0), r(2, 3, 2), r(3, 2, 1), r(1, 3, 1)],
        ]
    };
    Ok(SchemeBlock {
        kind: BlockKind::Quadruple(variant),
        uses,
        messages,
        plan,
    })
}

/// Number of fresh symbols a separately coded block for `s` carries.
pub fn separate_symbols(s: StateId) -> usize {
    match s {
        StateId::A | StateId::H1 | StateId::H2 => 3,
        _ => 2,
    }
}

/// Number of uses a separately coded block for `s` occupies.
pub fn separate_uses(s: StateId) -> usize {
    match s {
        StateId::H1 | StateId::H2 => 2,
        _ => 1,
    }
}

/// Per-state scheme without joint encoding.
///
/// `msgs` lists one symbol per active transmitter in transmitter order: three
/// for A and for the H-state repetition block, two for silencing blocks.
pub fn plan_separate(s: StateId, msgs: &[FieldElement]) -> Result<SchemeBlock, CodingError> {
    let expected = separate_symbols(s);
    if msgs.len() != expected {
        return Err(CodingError::MessageCount {
            expected,
            got: msgs.len(),
        });
    }
    let resolve_own = |tx: User| DecodeStep::Resolve {
        use_index: 0,
        target: SymbolRef { tx, index: 0 },
    };
    let block = match s {
        StateId::A => SchemeBlock {
            kind: BlockKind::FullRate,
            uses: vec![BlockUse {
                state: s,
                rules: [TxRule::Send(0); 3],
            }],
            messages: std::array::from_fn(|i| vec![msgs[i]]),
            plan: User::ALL.map(|u| vec![resolve_own(u)]),
        },
        StateId::H1 | StateId::H2 => {
            let pattern = s.pattern();
            let plan = User::ALL.map(|rx| {
                let interferer = pattern
                    .interferer(rx)
                    .expect("every receiver is interfered in H states");
                vec![DecodeStep::Invert2 {
                    uses: [0, 1],
                    unknowns: [
                        SymbolRef { tx: rx, index: 0 },
                        SymbolRef {
                            tx: interferer,
                            index: 0,
                        },
                    ],
                }]
            });
            let rules = [TxRule::Send(0); 3];
            SchemeBlock {
                kind: BlockKind::Repetition,
                uses: vec![BlockUse { state: s, rules }, BlockUse { state: s, rules }],
                messages: std::array::from_fn(|i| vec![msgs[i]]),
                plan,
            }
        }
        _ => {
            let silent = *silent_candidates(s)
                .first()
                .expect("non-H states admit silencing");
            let mut fresh = msgs.iter();
            let mut messages: [Vec<FieldElement>; 3] = Default::default();
            let mut rules = [TxRule::Silent; 3];
            let mut plan: [Vec<DecodeStep>; 3] = Default::default();
            for u in User::ALL.into_iter().filter(|&u| u != silent) {
                messages[u.idx()].push(*fresh.next().expect("length checked"));
                rules[u.idx()] = TxRule::Send(0);
                plan[u.idx()].push(resolve_own(u));
            }
            SchemeBlock {
                kind: BlockKind::Silencing { silent },
                uses: vec![BlockUse { state: s, rules }],
                messages,
                plan,
            }
        }
    };
    Ok(block)
}

/// One use where only Tx1 sends a fresh symbol; the fallback for an unpaired
/// H-state occurrence.
pub fn plan_single(s: StateId, msg: FieldElement) -> SchemeBlock {
    let mut messages: [Vec<FieldElement>; 3] = Default::default();
    messages[0].push(msg);
    let mut plan: [Vec<DecodeStep>; 3] = Default::default();
    plan[0].push(DecodeStep::Resolve {
        use_index: 0,
        target: sym(1, 0),
    });
    SchemeBlock {
        kind: BlockKind::Single,
        uses: vec![BlockUse {
            state: s,
            rules: [TxRule::Send(0), TxRule::Silent, TxRule::Silent],
        }],
        messages,
        plan,
    }
}

impl SchemeBlock {
    pub fn kind(&self) -> BlockKind {
        self.kind
    }

    pub fn uses(&self) -> &[BlockUse] {
        &self.uses
    }

    pub fn states(&self) -> Vec<StateId> {
        self.uses.iter().map(|u| u.state).collect()
    }

    pub fn messages(&self, tx: User) -> &[FieldElement] {
        &self.messages[tx.idx()]
    }

    pub fn plan(&self, rx: User) -> &[DecodeStep] {
        &self.plan[rx.idx()]
    }

    pub fn symbol_count(&self) -> usize {
        self.messages.iter().map(Vec::len).sum()
    }

    fn value(&self, s: SymbolRef) -> FieldElement {
        self.messages[s.tx.idx()][s.index]
    }

    /// Human-readable symbol name: `b1`/`c2`/`d3` in quadruples, `x1` elsewhere.
    pub fn symbol_name(&self, s: SymbolRef) -> String {
        match self.kind {
            BlockKind::Quadruple(_) => format!("{}{}", ['b', 'c', 'd'][s.index], s.tx),
            _ if self.messages[s.tx.idx()].len() == 1 => format!("x{}", s.tx),
            _ => format!("x{}_{}", s.tx, s.index + 1),
        }
    }
}

/// Nonzero channel coefficients for every present link of every use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelDraw {
    field: Field,
    states: Vec<StateId>,
    // [use][rx][tx]
    coeffs: Vec<[[Option<FieldElement>; 3]; 3]>,
}

/// Present links of one use in canonical order: receivers ascending, desired
/// link before the interference link.
fn links(s: StateId) -> Vec<(User, User)> {
    let p = s.pattern();
    let mut out = Vec::with_capacity(6);
    for rx in User::ALL {
        out.push((rx, rx));
        if let Some(tx) = p.interferer(rx) {
            out.push((rx, tx));
        }
    }
    out
}

impl ChannelDraw {
    /// Fresh i.i.d. uniform nonzero coefficients.
    pub fn random<R: Rng + ?Sized>(field: Field, states: &[StateId], rng: &mut R) -> Self {
        let coeffs = states
            .iter()
            .map(|&s| {
                let mut c = [[None; 3]; 3];
                for (rx, tx) in links(s) {
                    c[rx.idx()][tx.idx()] = Some(field.rand_nonzero(rng));
                }
                c
            })
            .collect();
        ChannelDraw {
            field,
            states: states.to_vec(),
            coeffs,
        }
    }

    /// Total number of present links across `states`.
    pub fn link_count(states: &[StateId]) -> usize {
        states.iter().map(|&s| links(s).len()).sum()
    }

    /// Build from one value per present link, in canonical link order.
    pub fn from_link_values(
        field: Field,
        states: &[StateId],
        values: &[FieldElement],
    ) -> Result<Self, CodingError> {
        let needed = Self::link_count(states);
        if values.len() != needed {
            return Err(CodingError::BadChannel(format!(
                "{needed} links but {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_zero() || v.field() != field) {
            return Err(CodingError::BadChannel(
                "coefficients must be nonzero elements of the field".into(),
            ));
        }
        let mut it = values.iter();
        let coeffs = states
            .iter()
            .map(|&s| {
                let mut c = [[None; 3]; 3];
                for (rx, tx) in links(s) {
                    c[rx.idx()][tx.idx()] = it.next().copied();
                }
                c
            })
            .collect();
        Ok(ChannelDraw {
            field,
            states: states.to_vec(),
            coeffs,
        })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    /// `h_{rx,tx}` at the given use, `None` when the link is absent.
    pub fn coefficient(&self, use_index: usize, rx: User, tx: User) -> Option<FieldElement> {
        self.coeffs[use_index][rx.idx()][tx.idx()]
    }

    fn check_states(&self, states: &[StateId]) -> Result<(), CodingError> {
        if self.states != states {
            return Err(CodingError::DimensionMismatch(format!(
                "channel drawn for {} uses {:?}, scheme has {} uses {:?}",
                self.states.len(),
                self.states,
                states.len(),
                states
            )));
        }
        Ok(())
    }
}

/// Received symbols `Y_j(k)` per receiver and use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observations {
    per_rx: [Vec<FieldElement>; 3],
}

impl Observations {
    pub fn new(per_rx: [Vec<FieldElement>; 3]) -> Self {
        Observations { per_rx }
    }

    pub fn at(&self, rx: User) -> &[FieldElement] {
        &self.per_rx[rx.idx()]
    }
}

/// `Y_j(k) = sum_i h_ji(k) X_i(k)`, silent transmitters contributing zero.
pub fn transmit(block: &SchemeBlock, ch: &ChannelDraw) -> Result<Observations, CodingError> {
    ch.check_states(&block.states())?;
    let field = ch.field;
    let per_rx = User::ALL.map(|rx| {
        block
            .uses
            .iter()
            .enumerate()
            .map(|(k, u)| {
                User::ALL.into_iter().fold(field.zero(), |acc, tx| {
                    match (ch.coefficient(k, rx, tx), u.sent(tx)) {
                        (Some(h), Some(s)) => acc + h * block.value(s),
                        _ => acc,
                    }
                })
            })
            .collect()
    });
    Ok(Observations { per_rx })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum DecodeFailure {
    #[error("2x2 system singular")]
    Singular,
    #[error("depends on a symbol that could not be resolved")]
    MissingDependency,
    #[error("symbol not covered by the decode plan")]
    Unresolved,
}

/// One executed decode step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceLine {
    pub uses: Vec<usize>,
    pub states: Vec<StateId>,
    pub rx: User,
    pub equation: String,
    pub resolved: String,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let uses: Vec<String> = self.uses.iter().map(|u| (u + 1).to_string()).collect();
        let states: Vec<&str> = self.states.iter().map(|s| s.name()).collect();
        write!(
            f,
            "use {} [{}] Rx{}: {} => {}",
            uses.join("+"),
            states.join("+"),
            self.rx,
            self.equation,
            self.resolved
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    /// Per receiver, one entry per desired message symbol, in message order.
    pub decoded: [Vec<Result<FieldElement, DecodeFailure>>; 3],
    pub trace: Vec<TraceLine>,
}

impl DecodeOutcome {
    pub fn rx_success(&self, rx: User) -> bool {
        self.decoded[rx.idx()].iter().all(Result::is_ok)
    }

    pub fn all_success(&self) -> bool {
        User::ALL.into_iter().all(|rx| self.rx_success(rx))
    }

    pub fn failures(&self) -> usize {
        self.decoded.iter().flatten().filter(|r| r.is_err()).count()
    }
}

/// Execute each receiver's decode plan using only its own observations,
/// local coefficients and the block topology.
pub fn decode_block(
    block: &SchemeBlock,
    obs: &Observations,
    ch: &ChannelDraw,
) -> Result<DecodeOutcome, CodingError> {
    ch.check_states(&block.states())?;
    let n = block.uses.len();
    if obs.per_rx.iter().any(|o| o.len() != n) {
        return Err(CodingError::DimensionMismatch(format!(
            "observations do not cover {n} uses"
        )));
    }
    let mut trace = Vec::new();
    let decoded = User::ALL.map(|rx| {
        let mut known: HashMap<SymbolRef, Result<FieldElement, DecodeFailure>> = HashMap::new();
        for step in &block.plan[rx.idx()] {
            match step {
                DecodeStep::Resolve { use_index, target } => {
                    let k = *use_index;
                    let y = obs.per_rx[rx.idx()][k];
                    let terms: Vec<(FieldElement, SymbolRef)> = User::ALL
                        .into_iter()
                        .filter_map(|tx| {
                            Some((ch.coefficient(k, rx, tx)?, block.uses[k].sent(tx)?))
                        })
                        .collect();
                    let equation = format!(
                        "{y} = {}",
                        terms
                            .iter()
                            .map(|(h, s)| format!("{h}*{}", block.symbol_name(*s)))
                            .collect::<Vec<_>>()
                            .join(" + ")
                    );
                    let mut rest = y;
                    let mut target_coeff = None;
                    let mut result = Ok(());
                    for (h, s) in &terms {
                        if s == target {
                            target_coeff = Some(*h);
                        } else {
                            match known.get(s) {
                                Some(Ok(v)) => rest = rest - *h * *v,
                                _ => result = Err(DecodeFailure::MissingDependency),
                            }
                        }
                    }
                    let value = result.and_then(|()| {
                        let h = target_coeff.ok_or(DecodeFailure::Unresolved)?;
                        Ok(rest.checked_div(&h).expect("coefficients are nonzero"))
                    });
                    trace.push(TraceLine {
                        uses: vec![k],
                        states: vec![block.uses[k].state],
                        rx,
                        equation,
                        resolved: resolved_text(block, *target, &value),
                    });
                    known.insert(*target, value);
                }
                DecodeStep::Invert2 { uses, unknowns } => {
                    let field = ch.field;
                    let coeff = |k: usize, s: SymbolRef| match block.uses[k].sent(s.tx) {
                        Some(sent) if sent == s => {
                            ch.coefficient(k, rx, s.tx).unwrap_or(field.zero())
                        }
                        _ => field.zero(),
                    };
                    let a = FieldMatrix::from_elements(
                        field,
                        2,
                        2,
                        uses.iter()
                            .flat_map(|&k| unknowns.map(|s| coeff(k, s)))
                            .collect(),
                    )
                    .expect("2x2 shape");
                    let y: Vec<FieldElement> =
                        uses.iter().map(|&k| obs.per_rx[rx.idx()][k]).collect();
                    let value = a
                        .solve_for(&y, &[0])
                        .map(|v| v[0])
                        .map_err(|_| DecodeFailure::Singular);
                    let names = unknowns.map(|s| block.symbol_name(s));
                    let equation = format!(
                        "[{} {}; {} {}] * [{}, {}] = [{}, {}]",
                        a.get(0, 0),
                        a.get(0, 1),
                        a.get(1, 0),
                        a.get(1, 1),
                        names[0],
                        names[1],
                        y[0],
                        y[1]
                    );
                    trace.push(TraceLine {
                        uses: uses.to_vec(),
                        states: uses.iter().map(|&k| block.uses[k].state).collect(),
                        rx,
                        equation,
                        resolved: resolved_text(block, unknowns[0], &value),
                    });
                    known.insert(unknowns[0], value);
                }
            }
        }
        (0..block.messages[rx.idx()].len())
            .map(|index| {
                known
                    .get(&SymbolRef { tx: rx, index })
                    .copied()
                    .unwrap_or(Err(DecodeFailure::Unresolved))
            })
            .collect()
    });
    Ok(DecodeOutcome { decoded, trace })
}

fn resolved_text(
    block: &SchemeBlock,
    s: SymbolRef,
    value: &Result<FieldElement, DecodeFailure>,
) -> String {
    match value {
        Ok(v) => format!("{} = {v}", block.symbol_name(s)),
        Err(e) => format!("{} FAILED ({e})", block.symbol_name(s)),
    }
}

/// Per-transmitter precoding matrices: rows are uses, columns are that
/// transmitter's own message symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearScheme {
    field: Field,
    states: Vec<StateId>,
    precoding: [FieldMatrix; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeJson {
    uses: Vec<StateId>,
    precoding: Vec<Vec<Vec<u64>>>,
}

impl LinearScheme {
    pub fn new(
        field: Field,
        states: Vec<StateId>,
        precoding: [FieldMatrix; 3],
    ) -> Result<Self, CodingError> {
        for (i, m) in precoding.iter().enumerate() {
            if m.rows() != states.len() {
                return Err(CodingError::BadScheme(format!(
                    "Tx{} precoding has {} rows for {} uses",
                    i + 1,
                    m.rows(),
                    states.len()
                )));
            }
            if m.field() != field {
                return Err(CodingError::Galois(GaloisError::FieldMismatch(
                    field.modulus(),
                    m.field().modulus(),
                )));
            }
        }
        Ok(LinearScheme {
            field,
            states,
            precoding,
        })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn precoding(&self, tx: User) -> &FieldMatrix {
        &self.precoding[tx.idx()]
    }

    /// Parse the JSON form; entries must be canonical values of `field`.
    pub fn from_json(text: &str, field: Field) -> Result<Self, CodingError> {
        let raw: SchemeJson =
            serde_json::from_str(text).map_err(|e| CodingError::BadScheme(e.to_string()))?;
        if raw.precoding.len() != 3 {
            return Err(CodingError::BadScheme(format!(
                "expected 3 precoding matrices, got {}",
                raw.precoding.len()
            )));
        }
        let n = raw.uses.len();
        let mut mats = Vec::with_capacity(3);
        for (i, rows) in raw.precoding.iter().enumerate() {
            if rows.len() != n {
                return Err(CodingError::BadScheme(format!(
                    "Tx{} has {} rows for {n} uses",
                    i + 1,
                    rows.len()
                )));
            }
            let cols = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != cols) {
                return Err(CodingError::BadScheme(format!(
                    "Tx{} has ragged rows",
                    i + 1
                )));
            }
            let entries = rows
                .iter()
                .flatten()
                .map(|&v| field.element(v))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CodingError::BadScheme(e.to_string()))?;
            mats.push(FieldMatrix::from_elements(field, n, cols, entries)?);
        }
        let precoding: [FieldMatrix; 3] = mats.try_into().expect("three matrices");
        Self::new(field, raw.uses, precoding)
    }

    pub fn to_json(&self) -> String {
        let raw = SchemeJson {
            uses: self.states.clone(),
            precoding: self
                .precoding
                .iter()
                .map(|m| {
                    (0..m.rows())
                        .map(|r| m.row(r).iter().map(|v| u64::from(v.value())).collect())
                        .collect()
                })
                .collect(),
        };
        let mut s = serde_json::to_string(&raw).expect("scheme serializes");
        s.push('\n');
        s
    }
}

/// Compile a block's transmit rules into precoding matrices.
pub fn as_linear_scheme(block: &SchemeBlock, field: Field) -> LinearScheme {
    let n = block.uses.len();
    let precoding = User::ALL.map(|tx| {
        let mut m = FieldMatrix::zeros(field, n, block.messages[tx.idx()].len());
        for (k, u) in block.uses.iter().enumerate() {
            if let TxRule::Send(c) = u.rules[tx.idx()] {
                m.set(k, c, field.one());
            }
        }
        m
    });
    LinearScheme {
        field,
        states: block.states(),
        precoding,
    }
}

/// Three transmitters each sending one fresh symbol in a single use of `s`.
pub fn naive_scheme(s: StateId, field: Field) -> LinearScheme {
    LinearScheme {
        field,
        states: vec![s],
        precoding: User::ALL.map(|_| FieldMatrix::identity(field, 1)),
    }
}

/// Rank test: receiver j can decode iff
/// `rank([H_des V_j | H_int V_int]) - rank(H_int V_int)` equals its number of
/// desired symbols.
pub fn verify_decodable(ls: &LinearScheme, ch: &ChannelDraw) -> Result<[bool; 3], CodingError> {
    ch.check_states(&ls.states)?;
    if ch.field != ls.field {
        return Err(CodingError::Galois(GaloisError::FieldMismatch(
            ls.field.modulus(),
            ch.field.modulus(),
        )));
    }
    let scaled = |rx: User, tx: User| -> FieldMatrix {
        let v = &ls.precoding[tx.idx()];
        let mut out = FieldMatrix::zeros(ls.field, v.rows(), v.cols());
        for k in 0..v.rows() {
            if let Some(h) = ch.coefficient(k, rx, tx) {
                for c in 0..v.cols() {
                    out.set(k, c, h * v.get(k, c));
                }
            }
        }
        out
    };
    let mut result = [false; 3];
    for rx in User::ALL {
        let desired = scaled(rx, rx);
        let [a, b] = rx.others();
        let interference = scaled(rx, a).hstack(&scaled(rx, b))?;
        let full = desired.hstack(&interference)?;
        result[rx.idx()] = full.rank() - interference.rank() == desired.cols();
    }
    Ok(result)
}
