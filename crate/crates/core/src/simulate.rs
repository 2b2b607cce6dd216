//! End-to-end experiments: occurrence generation, block scheduling, channel
//! realization, decoding and exact/empirical DoF accounting.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num::integer::lcm;
use num::{BigInt, BigRational, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::coding::{
    decode_block, plan_quadruple, plan_separate, plan_single, quadruple_states, separate_symbols,
    transmit, BlockKind, ChannelDraw, CodingError, SchemeBlock,
};
use crate::galois::{Field, FieldElement};
use crate::topology::{format_rational, silent_candidates, StateDistribution, StateId, User};

/// Longest realized state sequence a single run may request.
pub const MAX_USES: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimulateError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Coding(#[from] CodingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Joint,
    Separate,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Joint => "joint",
            Mode::Separate => "separate",
        })
    }
}

impl FromStr for Mode {
    type Err = SimulateError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "joint" => Ok(Mode::Joint),
            "separate" => Ok(Mode::Separate),
            other => Err(SimulateError::ConfigInvalid(format!(
                "unknown mode `{other}`"
            ))),
        }
    }
}

/// How many channel uses to realize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    /// Exact type-class realization: each round holds every state exactly
    /// `mass * round_length` times.
    Rounds(u64),
    /// I.i.d. sampling of this many states.
    Uses(u64),
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub q: u64,
    pub distribution: StateDistribution,
    pub horizon: Horizon,
    pub mode: Mode,
    pub seed: u64,
    /// Worker threads for block processing; 0 uses the global pool. Never
    /// affects the report.
    pub threads: usize,
}

impl SimulationConfig {
    pub fn new(distribution: StateDistribution, horizon: Horizon, mode: Mode, seed: u64) -> Self {
        SimulationConfig {
            q: 257,
            distribution,
            horizon,
            mode,
            seed,
            threads: 0,
        }
    }

    pub fn field(&self) -> Result<Field, SimulateError> {
        Field::new(self.q).map_err(|e| SimulateError::ConfigInvalid(e.to_string()))
    }
}

/// Number of uses in one exact round: lcm of the support's denominators.
pub fn round_length(d: &StateDistribution) -> BigInt {
    d.support()
        .fold(BigInt::from(1), |acc, (_, m)| lcm(acc, m.denom().clone()))
}

/// Per-state occurrence counts for one exact round.
fn round_counts(d: &StateDistribution) -> Vec<(StateId, BigInt)> {
    let len = round_length(d);
    d.support()
        .map(|(s, m)| (s, m.numer() * (&len / m.denom())))
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for block `index`, a pure function of `(seed, index)`.
pub fn block_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

fn occurrence_seed(seed: u64) -> u64 {
    splitmix64(seed ^ 0x6F63_6375_7272_656E)
}

/// Realize the state sequence for a configuration.
pub fn occurrences(cfg: &SimulationConfig) -> Result<Vec<StateId>, SimulateError> {
    match cfg.horizon {
        Horizon::Rounds(0) | Horizon::Uses(0) => Err(SimulateError::ConfigInvalid(
            "rounds / n_uses must be positive".into(),
        )),
        Horizon::Rounds(rounds) => {
            let total = round_length(&cfg.distribution) * BigInt::from(rounds);
            if total > BigInt::from(MAX_USES) {
                return Err(SimulateError::ConfigInvalid(format!(
                    "{rounds} rounds need {total} uses (limit {MAX_USES})"
                )));
            }
            let mut out = Vec::new();
            for (s, count) in round_counts(&cfg.distribution) {
                let n = (count * BigInt::from(rounds))
                    .to_usize()
                    .expect("bounded by MAX_USES");
                out.extend(std::iter::repeat_n(s, n));
            }
            Ok(out)
        }
        Horizon::Uses(n) => {
            if n > MAX_USES {
                return Err(SimulateError::ConfigInvalid(format!(
                    "{n} uses exceeds limit {MAX_USES}"
                )));
            }
            let len = round_length(&cfg.distribution).to_u64().ok_or_else(|| {
                SimulateError::ConfigInvalid("distribution denominators too large to sample".into())
            })?;
            let cumulative: Vec<(StateId, u64)> = round_counts(&cfg.distribution)
                .into_iter()
                .scan(0u64, |acc, (s, c)| {
                    *acc += c.to_u64().expect("bounded by round length");
                    Some((s, *acc))
                })
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(occurrence_seed(cfg.seed));
            Ok((0..n)
                .map(|_| {
                    let r = rng.gen_range(0..len);
                    cumulative
                        .iter()
                        .find(|(_, c)| r < *c)
                        .expect("r below total")
                        .0
                })
                .collect())
        }
    }
}

/// A block to be materialized: its scheme family and the states it consumes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSkeleton {
    pub kind: BlockKind,
    pub states: Vec<StateId>,
}

/// Group occurrences into blocks. Only counts matter, so the result does not
/// depend on the order of `occurrences`.
///
/// Joint mode first matches as many B,C,D,H quadruples of each variant as the
/// counts allow. Every remaining occurrence is coded on its own: A at full
/// rate, H states paired into two-use repetition blocks (an odd leftover gets a
/// single-sender use), everything else by silencing.
pub fn schedule(occurrences: &[StateId], mode: Mode) -> Vec<BlockSkeleton> {
    let mut counts: BTreeMap<StateId, usize> = BTreeMap::new();
    for &s in occurrences {
        *counts.entry(s).or_default() += 1;
    }
    let mut blocks = Vec::new();
    if mode == Mode::Joint {
        for variant in [1u8, 2] {
            let states = quadruple_states(variant).expect("valid variant");
            let matched = states
                .iter()
                .map(|s| counts.get(s).copied().unwrap_or(0))
                .min()
                .unwrap_or(0);
            for s in &states {
                if let Some(c) = counts.get_mut(s) {
                    *c -= matched;
                }
            }
            blocks.extend(std::iter::repeat_n(
                BlockSkeleton {
                    kind: BlockKind::Quadruple(variant),
                    states: states.to_vec(),
                },
                matched,
            ));
        }
    }
    for (&s, &count) in &counts {
        match s {
            StateId::A => blocks.extend(std::iter::repeat_n(
                BlockSkeleton {
                    kind: BlockKind::FullRate,
                    states: vec![s],
                },
                count,
            )),
            StateId::H1 | StateId::H2 => {
                blocks.extend(std::iter::repeat_n(
                    BlockSkeleton {
                        kind: BlockKind::Repetition,
                        states: vec![s, s],
                    },
                    count / 2,
                ));
                if count % 2 == 1 {
                    blocks.push(BlockSkeleton {
                        kind: BlockKind::Single,
                        states: vec![s],
                    });
                }
            }
            _ => {
                let silent = *silent_candidates(s)
                    .first()
                    .expect("non-H states admit silencing");
                blocks.extend(std::iter::repeat_n(
                    BlockSkeleton {
                        kind: BlockKind::Silencing { silent },
                        states: vec![s],
                    },
                    count,
                ));
            }
        }
    }
    blocks
}

fn separate_rate(s: StateId) -> BigRational {
    match s {
        StateId::A => BigRational::from_integer(3.into()),
        StateId::H1 | StateId::H2 => BigRational::new(3.into(), 2.into()),
        _ => BigRational::from_integer(2.into()),
    }
}

/// Expected symbols per channel use of the scheduler's plan under `d`.
pub fn accounting(d: &StateDistribution, mode: Mode) -> BigRational {
    let mut mass: BTreeMap<StateId, BigRational> = d.iter().map(|(s, m)| (s, m.clone())).collect();
    let mut total = BigRational::zero();
    if mode == Mode::Joint {
        for variant in [1u8, 2] {
            let states = quadruple_states(variant).expect("valid variant");
            let matched = states
                .iter()
                .map(|s| mass[s].clone())
                .min()
                .expect("four states");
            for s in &states {
                *mass.get_mut(s).expect("all states present") -= &matched;
            }
            // 9 symbols per 4 uses on 4 * matched of the time
            total += matched * BigRational::from_integer(9.into());
        }
    }
    total
        + mass
            .into_iter()
            .map(|(s, m)| m * separate_rate(s))
            .sum::<BigRational>()
}

/// Outcome of one materialized block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockResult {
    pub index: u64,
    pub kind: BlockKind,
    pub states: Vec<StateId>,
    pub symbols: u64,
    pub delivered: u64,
    pub failures: u64,
    /// Decoder reported success but the value differs from what was sent.
    pub mismatches: u64,
}

/// Build a concrete block for a skeleton with the given message source.
pub fn materialize<R: Rng + ?Sized>(sk: &BlockSkeleton, field: Field, rng: &mut R) -> SchemeBlock {
    let mut fresh =
        |n: usize| -> Vec<FieldElement> { (0..n).map(|_| field.rand_element(rng)).collect() };
    match sk.kind {
        BlockKind::Quadruple(v) => plan_quadruple(v, &fresh(9)).expect("nine messages"),
        BlockKind::Single => plan_single(sk.states[0], fresh(1)[0]),
        _ => {
            let s = sk.states[0];
            plan_separate(s, &fresh(separate_symbols(s))).expect("message count matches state")
        }
    }
}

/// Run one block: messages and channel from the block's own seed.
pub fn run_block(
    sk: &BlockSkeleton,
    field: Field,
    seed: u64,
    index: u64,
) -> Result<BlockResult, SimulateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(block_seed(seed, index));
    let block = materialize(sk, field, &mut rng);
    let ch = ChannelDraw::random(field, &block.states(), &mut rng);
    let obs = transmit(&block, &ch)?;
    let out = decode_block(&block, &obs, &ch)?;
    let mut res = BlockResult {
        index,
        kind: sk.kind,
        states: sk.states.clone(),
        symbols: block.symbol_count() as u64,
        delivered: 0,
        failures: 0,
        mismatches: 0,
    };
    for rx in User::ALL {
        for (got, sent) in out.decoded[rx.idx()].iter().zip(block.messages(rx)) {
            match got {
                Ok(v) if v == sent => res.delivered += 1,
                Ok(_) => res.mismatches += 1,
                Err(_) => res.failures += 1,
            }
        }
    }
    Ok(res)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationReport {
    pub mode: Mode,
    pub q: u64,
    pub seed: u64,
    pub uses: u64,
    pub symbols_delivered: u64,
    pub failures: u64,
    pub mismatches: u64,
    pub exact_dof: BigRational,
    pub empirical_dof: BigRational,
    pub per_state: BTreeMap<StateId, u64>,
    pub scheme_label: &'static str,
    pub blocks: Vec<BlockResult>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    mode: Mode,
    scheme: &'a str,
    q: u64,
    seed: u64,
    uses: u64,
    symbols_delivered: u64,
    failures: u64,
    mismatches: u64,
    exact_dof: String,
    empirical_dof: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_dof_float: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    empirical_dof_float: Option<f64>,
    per_state: &'a BTreeMap<StateId, u64>,
}

impl SimulationReport {
    /// Pretty JSON with rationals as `p/q` strings; `float` adds decimal copies.
    pub fn to_json(&self, float: bool) -> String {
        let f = |r: &BigRational| float.then(|| r.to_f64().unwrap_or(f64::NAN));
        let json = ReportJson {
            mode: self.mode,
            scheme: self.scheme_label,
            q: self.q,
            seed: self.seed,
            uses: self.uses,
            symbols_delivered: self.symbols_delivered,
            failures: self.failures,
            mismatches: self.mismatches,
            exact_dof: format_rational(&self.exact_dof),
            empirical_dof: format_rational(&self.empirical_dof),
            exact_dof_float: f(&self.exact_dof),
            empirical_dof_float: f(&self.empirical_dof),
            per_state: &self.per_state,
        };
        let mut s = serde_json::to_string_pretty(&json).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per block: `block,kind,states,uses,symbols,delivered,failures`.
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "block",
            "kind",
            "states",
            "uses",
            "symbols",
            "delivered",
            "failures",
        ])?;
        for b in &self.blocks {
            let states: Vec<&str> = b.states.iter().map(|s| s.name()).collect();
            out.write_record([
                b.index.to_string(),
                b.kind.label().to_string(),
                states.join("+"),
                b.states.len().to_string(),
                b.symbols.to_string(),
                b.delivered.to_string(),
                b.failures.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_text(&self, float: bool) -> String {
        let mut s = format!(
            "mode: {} ({})\nq: {}\nseed: {}\nuses: {}\nsymbols delivered: {}\nfailures: {}\nexact DoF: {}\nempirical DoF: {}\n",
            self.mode,
            self.scheme_label,
            self.q,
            self.seed,
            self.uses,
            self.symbols_delivered,
            self.failures,
            format_rational(&self.exact_dof),
            format_rational(&self.empirical_dof),
        );
        if float {
            s.push_str(&format!(
                "exact DoF (decimal): {:.6}\nempirical DoF (decimal): {:.6}\n",
                self.exact_dof.to_f64().unwrap_or(f64::NAN),
                self.empirical_dof.to_f64().unwrap_or(f64::NAN)
            ));
        }
        s
    }
}

fn scheme_label(d: &StateDistribution, mode: Mode) -> &'static str {
    match mode {
        Mode::Separate => "separate",
        Mode::Joint if d.is_uniform() => "joint",
        Mode::Joint => "heuristic achievable",
    }
}

/// Run the configured experiment.
pub fn run(cfg: &SimulationConfig) -> Result<SimulationReport, SimulateError> {
    let occ = occurrences(cfg)?;
    run_on(cfg, &occ)
}

/// Run on an explicit occurrence sequence instead of generating one.
pub fn run_on(
    cfg: &SimulationConfig,
    occurrences: &[StateId],
) -> Result<SimulationReport, SimulateError> {
    let field = cfg.field()?;
    if occurrences.is_empty() {
        return Err(SimulateError::ConfigInvalid(
            "no channel uses to simulate".into(),
        ));
    }
    let skeletons = schedule(occurrences, cfg.mode);
    let work = || -> Result<Vec<BlockResult>, SimulateError> {
        skeletons
            .par_iter()
            .enumerate()
            .map(|(i, sk)| run_block(sk, field, cfg.seed, i as u64))
            .collect()
    };
    let blocks = if cfg.threads == 0 {
        work()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| SimulateError::ConfigInvalid(e.to_string()))?
            .install(work)?
    };

    let mut per_state = BTreeMap::new();
    let (mut uses, mut delivered, mut failures, mut mismatches) = (0u64, 0u64, 0u64, 0u64);
    for b in &blocks {
        uses += b.states.len() as u64;
        delivered += b.delivered;
        failures += b.failures;
        mismatches += b.mismatches;
        for &s in &b.states {
            *per_state.entry(s).or_insert(0) += 1;
        }
    }
    Ok(SimulationReport {
        mode: cfg.mode,
        q: cfg.q,
        seed: cfg.seed,
        uses,
        symbols_delivered: delivered,
        failures,
        mismatches,
        exact_dof: accounting(&cfg.distribution, cfg.mode),
        empirical_dof: BigRational::new(delivered.into(), uses.into()),
        per_state,
        scheme_label: scheme_label(&cfg.distribution, cfg.mode),
        blocks,
    })
}
