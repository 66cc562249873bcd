//! Block-length-`n` executable of the two-layer binning scheme.
//!
//! A `v`-layer codebook of `|J_v1| |J_v2|` words drawn from `P_V^n`, and for
//! every `v`-word `|J_u1| |J_u2| |J_u3|` words drawn from `P_{U|V}^n`. The
//! encoder picks a jointly typical tuple, publishes `J = (j_v1, j_u1)` and
//! keeps `S = j_u2`; the decoder recovers `j_v2`, then `(j_u2, j_u3)`, by
//! unique typicality. Indices are 0-based, so the failure fallback is the
//! all-zero tuple and key 0.
//!
//! Randomness is ChaCha8 seeded from `SimConfig::seed`: stream 0 draws the
//! codebook, stream `t + 1` drives trial `t`.

mod codebook;
mod exact;

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use codebook::{authenticate, build_codebook, enroll, BinningCodebook, Decoded, Enrollment, Helper, IndexTuple};
pub use exact::{exact_error_probability, exact_key_distribution, exact_leakage, ExactEvents, LeakageKind};

use crate::discrete::{inner_terms as names, DiscreteCompoundModel, TestChannelPair};
use crate::error::{Error, Result};

/// Default cap on `|X̃|^n |Y|^n`-style enumerations.
pub const DEFAULT_MAX_ENUMERATION: u64 = 1 << 26;
/// Default cap on stored codebook symbols.
pub const DEFAULT_MAX_CODEBOOK_SYMBOLS: u64 = 1 << 26;
pub const DEFAULT_DELTA: f64 = 0.15;
/// Normal quantile of the 95% Wilson interval.
const WILSON_Z: f64 = 1.96;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// Codebook rates in bits per symbol. The `u`-layer rate is
/// `r_ju1 + r_s + r_u3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimRates {
    pub r_v: f64,
    pub r_jv1: f64,
    pub r_ju1: f64,
    pub r_s: f64,
    pub r_u3: f64,
}

impl SimRates {
    pub fn r_u(&self) -> f64 {
        self.r_ju1 + self.r_s + self.r_u3
    }

    /// Rates `margin` bits inside the single-test-channel inner point:
    /// `R_v = I(X̃;V) + m`, `R_Jv1 = max_k I(X̃;V|Y) + 2m`,
    /// `R_Ju1 = max_k I(X̃;U|V,Y) + 3m`, `R_S = R_S^in − m`,
    /// `R_u3 = max_l I(Z;U|V) − m`, each clamped at zero.
    pub fn with_margin(m: &DiscreteCompoundModel, t: &TestChannelPair, margin: f64) -> Result<Self> {
        if !(margin >= 0.0 && margin.is_finite()) {
            return Err(Error::InvalidArgument(format!("margin must be non-negative, got {margin}")));
        }
        let terms = crate::discrete::inner_terms(m, t)?;
        let r_s_in = terms[names::MIN_I_YU_V] - terms[names::MAX_I_ZU_V];
        Ok(Self {
            r_v: terms[names::I_XTV] + margin,
            r_jv1: terms[names::MAX_I_XTV_Y] + 2.0 * margin,
            r_ju1: terms[names::MAX_I_XTU_VY] + 3.0 * margin,
            r_s: (r_s_in - margin).max(0.0),
            r_u3: (terms[names::MAX_I_ZU_V] - margin).max(0.0),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Exact,
    MonteCarlo,
}

fn default_max_enumeration() -> u64 {
    DEFAULT_MAX_ENUMERATION
}

fn default_max_codebook_symbols() -> u64 {
    DEFAULT_MAX_CODEBOOK_SYMBOLS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub delta: f64,
    pub rates: SimRates,
    pub seed: u64,
    pub trials: usize,
    pub mode: SimMode,
    #[serde(default = "default_max_enumeration")]
    pub max_enumeration: u64,
    #[serde(default = "default_max_codebook_symbols")]
    pub max_codebook_symbols: u64,
}

impl SimConfig {
    pub fn new(n: usize, delta: f64, rates: SimRates, seed: u64, trials: usize, mode: SimMode) -> Result<Self> {
        let cfg = Self {
            n,
            delta,
            rates,
            seed,
            trials,
            mode,
            max_enumeration: DEFAULT_MAX_ENUMERATION,
            max_codebook_symbols: DEFAULT_MAX_CODEBOOK_SYMBOLS,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("block length n must be at least 1".into()));
        }
        check_delta(self.delta)?;
        let r = &self.rates;
        for (name, v) in [
            ("r_v", r.r_v),
            ("r_jv1", r.r_jv1),
            ("r_ju1", r.r_ju1),
            ("r_s", r.r_s),
            ("r_u3", r.r_u3),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be a finite non-negative rate, got {v}")));
            }
        }
        if self.mode == SimMode::MonteCarlo && self.trials == 0 {
            return Err(Error::InvalidArgument("Monte-Carlo mode needs at least one trial".into()));
        }
        Ok(())
    }

    /// Index-set sizes `⌈2^{nR}⌉`; `|J_v2| = ⌈2^{n(R_v − R_Jv1)}⌉`.
    pub fn set_sizes(&self) -> Result<IndexSizes> {
        let n = self.n as f64;
        let size = |rate: f64, what: &str| -> Result<usize> {
            let bits = n * rate;
            if bits > 48.0 {
                return Err(Error::InvalidArgument(format!(
                    "index set {what} would need 2^{bits:.1} entries; lower n or the rates"
                )));
            }
            Ok((2f64.powf(bits) - 1e-9).ceil().max(1.0) as usize)
        };
        let r = &self.rates;
        Ok(IndexSizes {
            v1: size(r.r_jv1, "J_v1")?,
            v2: size((r.r_v - r.r_jv1).max(0.0), "J_v2")?,
            u1: size(r.r_ju1, "J_u1")?,
            u2: size(r.r_s, "J_u2")?,
            u3: size(r.r_u3, "J_u3")?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexSizes {
    pub v1: usize,
    pub v2: usize,
    pub u1: usize,
    pub u2: usize,
    pub u3: usize,
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let nt = trials as f64;
    let p = successes as f64 / nt;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / nt;
    let center = (p + z2 / (2.0 * nt)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / nt + z2 / (4.0 * nt * nt)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Per-decoder-state error event counts over Monte-Carlo trials. `e3` to `e5`
/// are only evaluated when encoding succeeded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub e1: u64,
    pub e2: u64,
    pub e3: u64,
    pub e4: u64,
    pub e5: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub mode: SimMode,
    pub n: usize,
    pub delta: f64,
    pub seed: u64,
    /// Monte-Carlo trials; 0 in exact mode.
    pub trials: usize,
    pub set_sizes: IndexSizes,
    /// `log2(|J_v1| |J_u1|)`.
    pub storage_bits: f64,
    pub error_prob_per_k: Vec<f64>,
    /// Wilson 95% intervals (Monte-Carlo only).
    pub error_ci_per_k: Option<Vec<[f64; 2]>>,
    pub max_error_prob: f64,
    /// Total variation between the key law and uniform on `J_u2`.
    pub key_tv_uniform: f64,
    /// `I(S; J, Z^n)` in bits; plug-in estimates in Monte-Carlo mode.
    pub secrecy_leak_per_l: Vec<f64>,
    /// `I(X^n; J | Z^n)` in bits; plug-in estimates in Monte-Carlo mode.
    pub privacy_leak_per_l: Vec<f64>,
    pub max_secrecy_leak: f64,
    pub max_privacy_leak: f64,
    pub encoder_failure_prob: f64,
    pub event_counts_per_k: Option<Vec<EventCounts>>,
    pub event_probs_per_k: Option<Vec<ExactEvents>>,
}

/// Outcome of one Monte-Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub key: usize,
    pub helper: Helper,
    pub hits: usize,
    pub decoded: Vec<Decoded>,
}

/// CSV with one row per trial: `trial,key,j_v1,j_u1,hits`, then
/// `key_k,ok_k` per decoder state.
pub fn trace_csv(records: &[TrialRecord]) -> String {
    let k = records.first().map_or(0, |r| r.decoded.len());
    let mut out = String::from("trial,key,j_v1,j_u1,hits");
    for i in 0..k {
        out.push_str(&format!(",key_{i},ok_{i}"));
    }
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{},{},{},{}", r.trial, r.key, r.helper.v1, r.helper.u1, r.hits));
        for d in &r.decoded {
            out.push_str(&format!(",{},{}", d.key, u8::from(d.ok)));
        }
        out.push('\n');
    }
    out
}

fn tv_to_uniform(pmf: &[f64]) -> f64 {
    let u = 1.0 / pmf.len() as f64;
    0.5 * pmf.iter().map(|&p| (p - u).abs()).sum::<f64>()
}

fn plugin_entropy<K: std::hash::Hash + Eq + Ord>(counts: HashMap<K, u64>, total: f64) -> f64 {
    let mut cells: Vec<_> = counts.into_iter().collect();
    cells.sort_by(|a, b| a.0.cmp(&b.0));
    cells
        .iter()
        .map(|&(_, c)| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

struct Sample {
    x: Vec<u8>,
    z: Vec<Vec<u8>>,
    enrollment: Enrollment,
    decoded: Vec<Decoded>,
    events: Vec<[bool; 5]>,
}

fn run_trial(coder: &codebook::Coder, m: &DiscreteCompoundModel, cfg: &SimConfig, trial: usize) -> Result<Sample> {
    let n = cfg.n;
    let mut rng = stream_rng(cfg.seed, trial as u64 + 1);
    let x: Vec<u8> = (0..n).map(|_| codebook::sample(m.p_x().probs(), &mut rng)).collect();
    let xt: Vec<u8> = x.iter().map(|&a| codebook::sample(m.enrollment().row(a as usize), &mut rng)).collect();
    let ys: Vec<Vec<u8>> = m
        .decoder_states()
        .iter()
        .map(|w| x.iter().map(|&a| codebook::sample(w.row(a as usize), &mut rng)).collect())
        .collect();
    let z: Vec<Vec<u8>> = m
        .eve_states()
        .iter()
        .map(|w| x.iter().map(|&a| codebook::sample(w.row(a as usize), &mut rng)).collect())
        .collect();
    let enrollment = coder.enroll(&xt, &mut rng)?;
    let mut decoded = Vec::with_capacity(ys.len());
    let mut events = Vec::with_capacity(ys.len());
    for (k, y) in ys.iter().enumerate() {
        decoded.push(coder.authenticate(y, enrollment.helper, k)?);
        let e1 = !enrollment.v_hit;
        let e2 = enrollment.v_hit && !enrollment.succeeded();
        let ev = if enrollment.succeeded() {
            let d = coder.decoder_events(y, &enrollment.indices, k);
            [d.e3, d.e4, d.e5]
        } else {
            [false; 3]
        };
        events.push([e1, e2, ev[0], ev[1], ev[2]]);
    }
    Ok(Sample {
        x,
        z,
        enrollment,
        decoded,
        events,
    })
}

/// Runs the configured experiment; see [`run_trials_traced`].
pub fn run_trials(m: &DiscreteCompoundModel, t: &TestChannelPair, cfg: &SimConfig) -> Result<SimReport> {
    Ok(run_trials_traced(m, t, cfg)?.0)
}

/// Builds the codebook and measures it. Exact mode enumerates every source
/// and channel realisation; Monte-Carlo mode runs `cfg.trials` seeded
/// trials and also returns the per-trial records.
pub fn run_trials_traced(
    m: &DiscreteCompoundModel,
    t: &TestChannelPair,
    cfg: &SimConfig,
) -> Result<(SimReport, Vec<TrialRecord>)> {
    cfg.validate()?;
    let cb = build_codebook(m, t, cfg)?;
    let coder = codebook::Coder::new(&cb, cfg.delta);
    match cfg.mode {
        SimMode::Exact => Ok((exact_report(&coder, m, cfg)?, Vec::new())),
        SimMode::MonteCarlo => monte_carlo_report(&coder, m, cfg),
    }
}

fn exact_report(coder: &codebook::Coder, m: &DiscreteCompoundModel, cfg: &SimConfig) -> Result<SimReport> {
    let cb = coder.cb;
    let enc = exact::EncoderTable::build(coder, m, cfg)?;
    let mut error_prob_per_k = Vec::new();
    let mut events = Vec::new();
    for k in 0..m.num_decoder_states() {
        let (p, ev) = exact::error_analysis(coder, &enc, m, k, cfg)?;
        error_prob_per_k.push(p);
        events.push(ev);
    }
    let mut secrecy = Vec::new();
    let mut privacy = Vec::new();
    for l in 0..m.num_eve_states() {
        secrecy.push(exact::leakage_with(coder, &enc, m, l, LeakageKind::Secrecy, cfg)?);
        privacy.push(exact::leakage_with(coder, &enc, m, l, LeakageKind::Privacy, cfg)?);
    }
    let key_pmf = enc.key_pmf(cb.sizes().u2);
    let encoder_failure_prob = events.first().map_or(0.0, |e| e.e1 + e.e2);
    Ok(SimReport {
        mode: SimMode::Exact,
        n: cfg.n,
        delta: cfg.delta,
        seed: cfg.seed,
        trials: 0,
        set_sizes: cb.sizes(),
        storage_bits: cb.storage_bits(),
        max_error_prob: error_prob_per_k.iter().copied().fold(0.0, f64::max),
        error_prob_per_k,
        error_ci_per_k: None,
        key_tv_uniform: tv_to_uniform(&key_pmf),
        max_secrecy_leak: secrecy.iter().copied().fold(0.0, f64::max),
        max_privacy_leak: privacy.iter().copied().fold(0.0, f64::max),
        secrecy_leak_per_l: secrecy,
        privacy_leak_per_l: privacy,
        encoder_failure_prob,
        event_counts_per_k: None,
        event_probs_per_k: Some(events),
    })
}

fn monte_carlo_report(
    coder: &codebook::Coder,
    m: &DiscreteCompoundModel,
    cfg: &SimConfig,
) -> Result<(SimReport, Vec<TrialRecord>)> {
    let cb = coder.cb;
    let samples: Vec<Sample> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| run_trial(coder, m, cfg, i))
        .collect::<Result<_>>()?;
    let n_k = m.num_decoder_states();
    let total = cfg.trials as f64;

    let mut errors = vec![0u64; n_k];
    let mut counts = vec![EventCounts::default(); n_k];
    let mut keys = vec![0u64; cb.sizes().u2];
    let mut failures = 0u64;
    for s in &samples {
        keys[s.enrollment.key] += 1;
        failures += u64::from(!s.enrollment.succeeded());
        for k in 0..n_k {
            errors[k] += u64::from(s.decoded[k].key != s.enrollment.key);
            let e = s.events[k];
            let c = &mut counts[k];
            c.e1 += u64::from(e[0]);
            c.e2 += u64::from(e[1]);
            c.e3 += u64::from(e[2]);
            c.e4 += u64::from(e[3]);
            c.e5 += u64::from(e[4]);
        }
    }
    let error_prob_per_k: Vec<f64> = errors.iter().map(|&e| e as f64 / total).collect();
    let error_ci_per_k = errors
        .iter()
        .map(|&e| {
            let (lo, hi) = wilson_interval(e, cfg.trials as u64);
            [lo, hi]
        })
        .collect();
    let key_pmf: Vec<f64> = keys.iter().map(|&c| c as f64 / total).collect();

    let mut secrecy = Vec::new();
    let mut privacy = Vec::new();
    for l in 0..m.num_eve_states() {
        let mut c_s = HashMap::new();
        let mut c_jz = HashMap::new();
        let mut c_sjz = HashMap::new();
        let mut c_z = HashMap::new();
        let mut c_xz = HashMap::new();
        let mut c_xjz = HashMap::new();
        for s in &samples {
            let j = s.enrollment.helper;
            let key = s.enrollment.key;
            let z = &s.z[l];
            *c_s.entry(key).or_insert(0) += 1;
            *c_jz.entry((j, z.clone())).or_insert(0) += 1;
            *c_sjz.entry((key, j, z.clone())).or_insert(0) += 1;
            *c_z.entry(z.clone()).or_insert(0) += 1;
            *c_xz.entry((s.x.clone(), z.clone())).or_insert(0) += 1;
            *c_xjz.entry((s.x.clone(), j, z.clone())).or_insert(0) += 1;
        }
        let h_s = plugin_entropy(c_s, total);
        let h_jz = plugin_entropy(c_jz, total);
        let h_sjz = plugin_entropy(c_sjz, total);
        let h_z = plugin_entropy(c_z, total);
        let h_xz = plugin_entropy(c_xz, total);
        let h_xjz = plugin_entropy(c_xjz, total);
        secrecy.push((h_s + h_jz - h_sjz).max(0.0));
        privacy.push((h_xz + h_jz - h_xjz - h_z).max(0.0));
    }

    let records = samples
        .iter()
        .enumerate()
        .map(|(i, s)| TrialRecord {
            trial: i,
            key: s.enrollment.key,
            helper: s.enrollment.helper,
            hits: s.enrollment.hits,
            decoded: s.decoded.clone(),
        })
        .collect();
    let report = SimReport {
        mode: SimMode::MonteCarlo,
        n: cfg.n,
        delta: cfg.delta,
        seed: cfg.seed,
        trials: cfg.trials,
        set_sizes: cb.sizes(),
        storage_bits: cb.storage_bits(),
        max_error_prob: error_prob_per_k.iter().copied().fold(0.0, f64::max),
        error_prob_per_k,
        error_ci_per_k: Some(error_ci_per_k),
        key_tv_uniform: tv_to_uniform(&key_pmf),
        max_secrecy_leak: secrecy.iter().copied().fold(0.0, f64::max),
        max_privacy_leak: privacy.iter().copied().fold(0.0, f64::max),
        secrecy_leak_per_l: secrecy,
        privacy_leak_per_l: privacy,
        encoder_failure_prob: failures as f64 / total,
        event_counts_per_k: Some(counts),
        event_probs_per_k: None,
    };
    Ok((report, records))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::{CondDist, FiniteDist};

    fn model() -> DiscreteCompoundModel {
        DiscreteCompoundModel::new(
            FiniteDist::uniform(2).unwrap(),
            CondDist::bsc(0.1).unwrap(),
            vec![CondDist::bsc(0.05).unwrap()],
            vec![CondDist::bsc(0.3).unwrap()],
        )
        .unwrap()
    }

    fn channels() -> TestChannelPair {
        TestChannelPair::new(
            CondDist::new(vec![vec![0.8, 0.2, 0.0], vec![0.1, 0.3, 0.6]]).unwrap(),
            CondDist::new(vec![vec![0.9, 0.1], vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap(),
        )
        .unwrap()
    }

    fn rates(r_v: f64, r_jv1: f64) -> SimRates {
        SimRates {
            r_v,
            r_jv1,
            r_ju1: 0.25,
            r_s: 0.5,
            r_u3: 0.0,
        }
    }

    #[test]
    fn zero_rates_give_one_word() {
        let cfg = SimConfig::new(6, 0.15, rates(0.0, 0.0), 1, 0, SimMode::Exact).unwrap();
        let zero = SimConfig {
            rates: SimRates {
                r_v: 0.0,
                r_jv1: 0.0,
                r_ju1: 0.0,
                r_s: 0.0,
                r_u3: 0.0,
            },
            ..cfg
        };
        let cb = build_codebook(&model(), &channels(), &zero).unwrap();
        assert_eq!(cb.num_v_words(), 1);
        assert_eq!(cb.num_u_words(), 1);
        assert_eq!(cb.storage_bits(), 0.0);
    }

    #[test]
    fn set_sizes_and_bookkeeping() {
        let cfg = SimConfig::new(4, 0.15, rates(0.75, 0.25), 1, 0, SimMode::Exact).unwrap();
        let s = cfg.set_sizes().unwrap();
        assert_eq!((s.v1, s.v2, s.u1, s.u2, s.u3), (2, 4, 2, 4, 1));
        assert_eq!(cfg.rates.r_u(), 0.75);
        // 2^{nR} just above an integer rounds up, exact powers do not
        let odd = SimConfig { rates: rates(0.8, 0.0), ..cfg.clone() };
        assert_eq!(odd.set_sizes().unwrap().v2, 10);
        let cb = build_codebook(&model(), &channels(), &cfg).unwrap();
        assert_eq!(cb.storage_bits(), 2.0);
        assert_eq!(cb.num_u_words(), 8 * 2 * 4);
    }

    #[test]
    fn codebook_is_seed_deterministic() {
        let cfg = SimConfig::new(6, 0.15, rates(0.5, 0.25), 42, 0, SimMode::Exact).unwrap();
        let a = build_codebook(&model(), &channels(), &cfg).unwrap();
        let b = build_codebook(&model(), &channels(), &cfg).unwrap();
        assert_eq!(a, b);
        let c = build_codebook(&model(), &channels(), &SimConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn v_word_frequencies_follow_p_v() {
        // P(V = 0) = Σ_x̃ P(x̃) Σ_u P(u|x̃) P(0|u), P(x̃) uniform
        let p0: f64 = 0.5 * (0.8 * 0.9 + 0.2 * 0.5) + 0.5 * (0.1 * 0.9 + 0.3 * 0.5 + 0.6 * 0.2);
        let m = model();
        let t = channels();
        let mut total = 0.0f64;
        let mut zeros = 0.0f64;
        for seed in 0..20 {
            let cfg = SimConfig::new(4, 0.15, rates(0.75, 0.25), seed, 0, SimMode::Exact).unwrap();
            let cb = build_codebook(&m, &t, &cfg).unwrap();
            assert_eq!(cb.num_v_words(), 8);
            for v1 in 0..2 {
                for v2 in 0..4 {
                    for &s in cb.v_word(v1, v2) {
                        total += 1.0;
                        zeros += f64::from(u8::from(s == 0));
                    }
                }
            }
        }
        let sigma = (total * p0 * (1.0 - p0)).sqrt();
        assert!((zeros - total * p0).abs() <= 3.0 * sigma, "{zeros} of {total}, p = {p0}");
    }

    #[test]
    fn cap_is_enforced() {
        let mut cfg = SimConfig::new(12, 0.15, rates(1.0, 0.5), 1, 0, SimMode::Exact).unwrap();
        cfg.max_codebook_symbols = 1000;
        let err = build_codebook(&model(), &channels(), &cfg).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }), "{err}");
        assert!(err.to_string().contains("1000"));
    }

    #[test]
    fn wilson_covers_the_estimate() {
        let (lo, hi) = wilson_interval(30, 100);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!((lo - 0.2189).abs() < 1e-3 && (hi - 0.3958).abs() < 1e-3);
        assert_eq!(wilson_interval(0, 10).0, 0.0);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = SimConfig::new(6, 0.15, rates(0.5, 0.25), 7, 100, SimMode::MonteCarlo).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<SimConfig>(&text).unwrap(), cfg);
        let missing = r#"{"n": 6, "delta": 0.15, "seed": 1, "trials": 10, "mode": "exact"}"#;
        let err = serde_json::from_str::<SimConfig>(missing).unwrap_err();
        assert!(err.to_string().contains("rates"), "{err}");
    }

    #[test]
    fn invalid_configs_rejected() {
        let r = rates(0.5, 0.25);
        assert!(SimConfig::new(0, 0.15, r, 0, 0, SimMode::Exact).is_err());
        assert!(SimConfig::new(4, 1.0, r, 0, 0, SimMode::Exact).is_err());
        assert!(SimConfig::new(4, 0.15, r, 0, 0, SimMode::MonteCarlo).is_err());
        assert!(SimConfig::new(4, 0.15, SimRates { r_s: -0.1, ..r }, 0, 0, SimMode::Exact).is_err());
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let m = model();
        let t = channels();
        let r = SimRates::with_margin(&m, &t, 0.1).unwrap();
        let cfg = SimConfig::new(6, 0.5, r, 9, 300, SimMode::MonteCarlo).unwrap();
        let a = run_trials_traced(&m, &t, &cfg).unwrap();
        let b = run_trials_traced(&m, &t, &cfg).unwrap();
        assert_eq!(a, b);
        let rep = a.0;
        assert!(rep.error_prob_per_k.iter().all(|p| (0.0..=1.0).contains(p)));
        assert!(rep.max_secrecy_leak >= 0.0 && rep.max_privacy_leak >= 0.0);
    }
}
