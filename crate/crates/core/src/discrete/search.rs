//! Multistart coordinate ascent over test channels.
//!
//! Each row of `P(U|X̃)` and `P(V|U)` is a softmax over free logits. A
//! search direction `w` scalarises a corner point as
//! `w_s r_s − w_j r_j − w_l r_l`; every direction is optimised from a fixed
//! sequence of starts (independent channels, `U = X̃` with constant `V`,
//! then seeded random logits) until the evaluation budget is spent.
//! Directions run in parallel, each with its own ChaCha stream
//! (`stream = direction index`), so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{inner_point, outer_point, BoundPoint, Caps, DiscreteCompoundModel, TestChannelPair};
use crate::error::{Error, Result};
use crate::gaussian::RegionKind;
use crate::info::CondDist;
use crate::RateTriple;

/// Logits at or below this value mean probability exactly zero.
const LOGIT_FLOOR: f64 = -30.0;
const LOGIT_CEIL: f64 = 30.0;
const INITIAL_STEP: f64 = 1.0;
const MIN_STEP: f64 = 1e-3;
/// A sweep gaining less than this halves the step.
const SWEEP_TOL: f64 = 1e-7;
const RANDOM_LOGIT_SD: f64 = 3.0;
/// Dominance slack of the nondominated filter.
pub const PARETO_TOL: f64 = 1e-9;

/// Scalarisation weights; the objective is `w_s r_s − w_j r_j − w_l r_l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    pub w_s: f64,
    pub w_j: f64,
    pub w_l: f64,
}

impl Direction {
    pub fn new(w_s: f64, w_j: f64, w_l: f64) -> Result<Self> {
        if !(w_s >= 0.0 && w_j >= 0.0 && w_l >= 0.0) || w_s + w_j + w_l == 0.0 {
            return Err(Error::InvalidArgument(format!(
                "direction weights must be non-negative and not all zero, got ({w_s}, {w_j}, {w_l})"
            )));
        }
        Ok(Self { w_s, w_j, w_l })
    }

    pub fn score(&self, t: &RateTriple) -> f64 {
        self.w_s * t.r_s - self.w_j * t.r_j - self.w_l * t.r_l
    }

    /// `w_s = 1` with storage and leakage prices drawn from `{0, 0.3, 1}`.
    pub fn defaults() -> Vec<Direction> {
        let prices = [0.0, 0.3, 1.0];
        prices
            .iter()
            .flat_map(|&w_j| prices.iter().map(move |&w_l| Direction { w_s: 1.0, w_j, w_l }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub kind: RegionKind,
    /// Objective evaluations per direction group: for inner searches the
    /// total, for outer searches the total per state pair.
    pub budget: usize,
    pub caps: Caps,
    pub seed: u64,
    pub directions: Vec<Direction>,
}

impl SearchConfig {
    pub fn new(kind: RegionKind, budget: usize, caps: Caps, seed: u64) -> Result<Self> {
        if budget == 0 {
            return Err(Error::InvalidArgument("search budget must be at least 1".into()));
        }
        Caps::new(caps.u, caps.v)?;
        Ok(Self {
            kind,
            budget,
            caps,
            seed,
            directions: Direction::defaults(),
        })
    }

    pub fn with_directions(mut self, directions: Vec<Direction>) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidArgument("at least one direction is required".into()));
        }
        self.directions = directions;
        Ok(self)
    }

    /// Evaluations available to direction `d` out of `total`.
    fn share(&self, total: usize, d: usize) -> usize {
        let n = self.directions.len();
        total / n + usize::from(d < total % n)
    }
}

/// Softmax-parameterised test channels.
#[derive(Debug, Clone)]
struct Params {
    n_xt: usize,
    n_u: usize,
    n_v: usize,
    logits: Vec<f64>,
}

fn softmax_rows(logits: &[f64], n_in: usize, n_out: usize) -> CondDist {
    let mut data = Vec::with_capacity(n_in * n_out);
    for row in logits.chunks(n_out) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = row
            .iter()
            .map(|&l| if l <= LOGIT_FLOOR { 0.0 } else { (l - max).exp() })
            .collect();
        let total: f64 = weights.iter().sum();
        if total == 0.0 {
            // every logit at the floor: fall back to uniform
            data.extend(std::iter::repeat_n(1.0 / n_out as f64, n_out));
        } else {
            data.extend(weights.iter().map(|w| w / total));
        }
    }
    CondDist::from_flat(n_in, n_out, data).expect("softmax rows are distributions")
}

impl Params {
    fn zeros(n_xt: usize, caps: Caps) -> Self {
        Self {
            n_xt,
            n_u: caps.u,
            n_v: caps.v,
            logits: vec![0.0; n_xt * caps.u + caps.u * caps.v],
        }
    }

    /// `U = X̃` (folded modulo `|U|`), constant `V`.
    fn copy_anchor(n_xt: usize, caps: Caps) -> Self {
        let mut p = Self::zeros(n_xt, caps);
        p.logits.fill(LOGIT_FLOOR);
        for x in 0..n_xt {
            p.logits[x * caps.u + x % caps.u] = 0.0;
        }
        let off = n_xt * caps.u;
        for u in 0..caps.u {
            p.logits[off + u * caps.v] = 0.0;
        }
        p
    }

    fn random(n_xt: usize, caps: Caps, rng: &mut ChaCha8Rng) -> Self {
        let normal = Normal::new(0.0, RANDOM_LOGIT_SD).expect("valid sd");
        let mut p = Self::zeros(n_xt, caps);
        for l in &mut p.logits {
            *l = normal.sample(rng);
        }
        p
    }

    fn from_channels(t: &TestChannelPair) -> Self {
        let logit = |p: f64| if p > 0.0 { p.ln().max(LOGIT_FLOOR + 1.0) } else { LOGIT_FLOOR };
        let mut logits: Vec<f64> = t.u_given_xt.rows().flatten().map(|&p| logit(p)).collect();
        logits.extend(t.v_given_u.rows().flatten().map(|&p| logit(p)));
        Self {
            n_xt: t.u_given_xt.n_in(),
            n_u: t.u_card(),
            n_v: t.v_card(),
            logits,
        }
    }

    fn channels(&self) -> TestChannelPair {
        let split = self.n_xt * self.n_u;
        TestChannelPair {
            u_given_xt: softmax_rows(&self.logits[..split], self.n_xt, self.n_u),
            v_given_u: softmax_rows(&self.logits[split..], self.n_u, self.n_v),
        }
    }
}

struct Evaluated {
    score: f64,
    point: BoundPoint,
    channels: TestChannelPair,
}

/// One direction's search state: remaining budget and best point.
struct Climber<'a, F> {
    objective: &'a F,
    direction: Direction,
    budget: usize,
    best: Option<Evaluated>,
    front: ParetoSet,
}

impl<'a, F> Climber<'a, F>
where
    F: Fn(&TestChannelPair) -> Result<BoundPoint>,
{
    fn new(objective: &'a F, direction: Direction, budget: usize) -> Self {
        Self {
            objective,
            direction,
            budget,
            best: None,
            front: ParetoSet::default(),
        }
    }

    fn eval(&mut self, p: &Params) -> Result<Evaluated> {
        self.budget = self.budget.saturating_sub(1);
        let channels = p.channels();
        let point = (self.objective)(&channels)?;
        Ok(Evaluated {
            score: self.direction.score(&point.triple),
            point,
            channels,
        })
    }

    fn record(&mut self, e: &Evaluated) {
        self.front.insert(ParetoEntry {
            point: e.point.clone(),
            channels: e.channels.clone(),
        });
        if self.best.as_ref().is_none_or(|b| e.score > b.score) {
            self.best = Some(Evaluated {
                score: e.score,
                point: e.point.clone(),
                channels: e.channels.clone(),
            });
        }
    }

    /// Coordinate ascent from `start`: each coordinate tries `±step`, keeps
    /// doubling while it improves, and the step halves after a sweep that
    /// gains less than [`SWEEP_TOL`].
    fn ascend(&mut self, mut p: Params) -> Result<()> {
        if self.budget == 0 {
            return Ok(());
        }
        let mut cur = self.eval(&p)?;
        self.record(&cur);
        let mut step = INITIAL_STEP;
        while self.budget > 0 && step >= MIN_STEP {
            let before = cur.score;
            for i in 0..p.logits.len() {
                for sign in [1.0, -1.0] {
                    let mut s = step;
                    let mut moved = false;
                    while self.budget > 0 {
                        let old = p.logits[i];
                        let new = (old + sign * s).clamp(LOGIT_FLOOR, LOGIT_CEIL);
                        if new == old {
                            break;
                        }
                        p.logits[i] = new;
                        let cand = self.eval(&p)?;
                        if cand.score > cur.score {
                            cur = cand;
                            self.record(&cur);
                            moved = true;
                            s *= 2.0;
                        } else {
                            p.logits[i] = old;
                            break;
                        }
                    }
                    if moved || self.budget == 0 {
                        break;
                    }
                }
                if self.budget == 0 {
                    break;
                }
            }
            if cur.score - before < SWEEP_TOL {
                step *= 0.5;
            }
        }
        Ok(())
    }

    fn run(&mut self, n_xt: usize, caps: Caps, seed: u64, stream: u64, warm: &[TestChannelPair]) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        if !warm.is_empty() {
            // warm starts are evaluated outside the budget
            let mut best_warm: Option<(f64, &TestChannelPair)> = None;
            for t in warm {
                let point = (self.objective)(t)?;
                let score = self.direction.score(&point.triple);
                let e = Evaluated {
                    score,
                    point,
                    channels: t.clone(),
                };
                self.record(&e);
                if best_warm.is_none_or(|(s, _)| score > s) {
                    best_warm = Some((score, t));
                }
            }
            if let Some((_, t)) = best_warm {
                self.ascend(Params::from_channels(t))?;
            }
        }
        self.ascend(Params::zeros(n_xt, caps))?;
        self.ascend(Params::copy_anchor(n_xt, caps))?;
        while self.budget > 0 {
            let start = Params::random(n_xt, caps, &mut rng);
            // keep the stream position independent of how far ascent got
            let _: u64 = rng.random();
            self.ascend(start)?;
        }
        Ok(())
    }
}

/// A nondominated point with the test channels that achieve it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoEntry {
    pub point: BoundPoint,
    pub channels: TestChannelPair,
}

/// Nondominated set for maximise `r_s`, minimise `r_j` and `r_l`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoSet {
    entries: Vec<ParetoEntry>,
}

/// `a` is at least as good as `b` in every coordinate, up to [`PARETO_TOL`].
fn weakly_dominates(a: &RateTriple, b: &RateTriple) -> bool {
    a.r_s >= b.r_s - PARETO_TOL && a.r_j <= b.r_j + PARETO_TOL && a.r_l <= b.r_l + PARETO_TOL
}

impl ParetoSet {
    /// Adds `e` unless an existing point weakly dominates it; drops the
    /// points it dominates. Returns whether `e` was kept.
    pub fn insert(&mut self, e: ParetoEntry) -> bool {
        let t = e.point.triple;
        if self.entries.iter().any(|x| weakly_dominates(&x.point.triple, &t)) {
            return false;
        }
        self.entries.retain(|x| !weakly_dominates(&t, &x.point.triple));
        self.entries.push(e);
        true
    }

    pub fn merge(&mut self, other: ParetoSet) {
        for e in other.entries {
            self.insert(e);
        }
    }

    pub fn entries(&self) -> &[ParetoEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_key_rate(&self) -> f64 {
        self.entries.iter().map(|e| e.point.triple.r_s).fold(0.0, f64::max)
    }

    fn sort(&mut self) {
        self.entries.sort_by(|a, b| {
            let (x, y) = (&a.point.triple, &b.point.triple);
            y.r_s
                .total_cmp(&x.r_s)
                .then(x.r_j.total_cmp(&y.r_j))
                .then(x.r_l.total_cmp(&y.r_l))
        });
    }

    /// CSV with `r_s,r_j,r_l` followed by one column per information term.
    pub fn to_csv(&self) -> String {
        let names: Vec<String> = self
            .entries
            .first()
            .map(|e| e.point.terms.keys().cloned().collect())
            .unwrap_or_else(|| super::inner_terms::ALL.iter().map(|s| s.to_string()).collect());
        let mut out = String::from("r_s,r_j,r_l");
        for n in &names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for e in &self.entries {
            let t = &e.point.triple;
            out.push_str(&format!("{},{},{}", t.r_s, t.r_j, t.r_l));
            for n in &names {
                out.push_str(&format!(",{}", e.point.terms.get(n).copied().unwrap_or(f64::NAN)));
            }
            out.push('\n');
        }
        out
    }
}

struct DirectionResult {
    best: f64,
    front: ParetoSet,
}

fn run_directions<F>(
    m: &DiscreteCompoundModel,
    cfg: &SearchConfig,
    total_budget: usize,
    stream_base: u64,
    warm: &[TestChannelPair],
    objective: &F,
) -> Result<Vec<DirectionResult>>
where
    F: Fn(&TestChannelPair) -> Result<BoundPoint> + Sync,
{
    cfg.directions
        .par_iter()
        .enumerate()
        .map(|(d, &dir)| {
            let mut c = Climber::new(objective, dir, cfg.share(total_budget, d));
            c.run(m.xt_card(), cfg.caps, cfg.seed, stream_base + d as u64, warm)?;
            Ok(DirectionResult {
                best: c.best.as_ref().map_or(f64::NEG_INFINITY, |b| b.score),
                front: c.front,
            })
        })
        .collect()
}

fn run_inner(m: &DiscreteCompoundModel, cfg: &SearchConfig) -> Result<Vec<DirectionResult>> {
    let kind = cfg.kind;
    run_directions(m, cfg, cfg.budget, 0, &[], &|t: &TestChannelPair| inner_point(m, t, kind))
}

/// Nondominated inner-bound points found by the multistart search.
/// Deterministic for a given seed and budget.
pub fn search_inner_region(m: &DiscreteCompoundModel, cfg: &SearchConfig) -> Result<ParetoSet> {
    let mut set = ParetoSet::default();
    for r in run_inner(m, cfg)? {
        set.merge(r.front);
    }
    set.sort();
    Ok(set)
}

/// Best scalarised inner value found per direction: a lower estimate of the
/// inner region's support function.
pub fn inner_support(m: &DiscreteCompoundModel, cfg: &SearchConfig) -> Result<Vec<f64>> {
    Ok(run_inner(m, cfg)?.into_iter().map(|r| r.best).collect())
}

/// Support values of one state pair's outer region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSupport {
    pub k: usize,
    pub l: usize,
    pub values: Vec<f64>,
}

/// Per-direction support estimates of every per-state outer region and
/// their minimum, which describes the intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterTable {
    pub kind: RegionKind,
    pub directions: Vec<Direction>,
    pub per_pair: Vec<PairSupport>,
    pub support: Vec<f64>,
}

impl OuterTable {
    /// Whether `t` satisfies every per-pair constraint `w·t ≤ h_kl(w) + tol`.
    pub fn contains(&self, t: &RateTriple, tol: f64) -> bool {
        self.directions
            .iter()
            .zip(&self.support)
            .all(|(d, &h)| d.score(t) <= h + tol)
    }

    /// CSV with one row per direction: weights, the intersection support,
    /// then one column per `(k, l)` pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("w_s,w_j,w_l,support");
        for p in &self.per_pair {
            out.push_str(&format!(",k{}_l{}", p.k, p.l));
        }
        out.push('\n');
        for (i, d) in self.directions.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}", d.w_s, d.w_j, d.w_l, self.support[i]));
            for p in &self.per_pair {
                out.push_str(&format!(",{}", p.values[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Outer approximation of the intersection over state pairs: for every
/// `(k, l)` and direction, the best scalarised outer point found with
/// `cfg.budget` evaluations, plus the minimum over pairs.
///
/// `warm_starts` are evaluated first (outside the budget) and the best one
/// seeds an extra ascent, so every supplied test channel pair is accounted
/// for in the table.
pub fn outer_intersection(
    m: &DiscreteCompoundModel,
    cfg: &SearchConfig,
    warm_starts: &[TestChannelPair],
) -> Result<OuterTable> {
    let kind = cfg.kind;
    let mut per_pair = Vec::new();
    let n_dir = cfg.directions.len() as u64;
    for k in 0..m.num_decoder_states() {
        for l in 0..m.num_eve_states() {
            // identical channel pairs share one search
            let seen = per_pair.iter().find(|p: &&PairSupport| {
                m.decoder_states()[p.k] == m.decoder_states()[k] && m.eve_states()[p.l] == m.eve_states()[l]
            });
            if let Some(p) = seen {
                let values = p.values.clone();
                per_pair.push(PairSupport { k, l, values });
                continue;
            }
            let pair_index = (k * m.num_eve_states() + l) as u64;
            let objective = |t: &TestChannelPair| outer_point(m, k, l, t, kind);
            let results = run_directions(m, cfg, cfg.budget, (1 + pair_index) * n_dir, warm_starts, &objective)?;
            per_pair.push(PairSupport {
                k,
                l,
                values: results.iter().map(|r| r.best).collect(),
            });
        }
    }
    let support = (0..cfg.directions.len())
        .map(|d| per_pair.iter().map(|p| p.values[d]).fold(f64::INFINITY, f64::min))
        .collect();
    Ok(OuterTable {
        kind,
        directions: cfg.directions.clone(),
        per_pair,
        support,
    })
}

/// Outer-minus-inner support comparison for a single-state model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub directions: Vec<Direction>,
    pub inner: Vec<f64>,
    pub outer: Vec<f64>,
    /// `max_w (outer(w) − inner(w))`.
    pub gap: f64,
}

impl GapReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("w_s,w_j,w_l,inner,outer,difference\n");
        for (i, d) in self.directions.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                d.w_s,
                d.w_j,
                d.w_l,
                self.inner[i],
                self.outer[i],
                self.outer[i] - self.inner[i]
            ));
        }
        out
    }
}

/// With one decoder and one eavesdropper state the inner and outer regions
/// coincide; this runs two independent searches (distinct random streams)
/// and reports how far apart their support estimates are. A numerical
/// coincidence check, not a proof.
pub fn single_state_gap(m: &DiscreteCompoundModel, cfg: &SearchConfig) -> Result<GapReport> {
    if m.num_decoder_states() != 1 || m.num_eve_states() != 1 {
        return Err(Error::InvalidArgument(format!(
            "the coincidence check needs K = L = 1, got K = {}, L = {}",
            m.num_decoder_states(),
            m.num_eve_states()
        )));
    }
    let inner = inner_support(m, cfg)?;
    let outer = outer_intersection(m, cfg, &[])?.support;
    let gap = inner
        .iter()
        .zip(&outer)
        .map(|(i, o)| o - i)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(GapReport {
        directions: cfg.directions.clone(),
        inner,
        outer,
        gap,
    })
}
