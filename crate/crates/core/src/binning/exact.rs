//! Exact metrics for a fixed codebook by enumerating all length-`n`
//! sequences. The encoder's random tie-break is averaged out: every typical
//! tuple carries weight `1/hits`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codebook::{pair_table, BinningCodebook, Coder, Helper, IndexTuple};
use super::SimConfig;
use crate::discrete::DiscreteCompoundModel;
use crate::error::{Error, Result};
use crate::info::CondDist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakageKind {
    /// `I(S; J, Z^n)`.
    Secrecy,
    /// `I(X^n; J | Z^n)`.
    Privacy,
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

fn check_cap(what: &'static str, required: u128, cfg: &SimConfig) -> Result<()> {
    if required > cfg.max_enumeration as u128 {
        return Err(Error::CapExceeded {
            what,
            required,
            allowed: cfg.max_enumeration as u128,
        });
    }
    Ok(())
}

fn count(card: usize, n: usize) -> u128 {
    (card as u128).checked_pow(n as u32).unwrap_or(u128::MAX)
}

/// Writes the base-`card` digits of `i` into `out`, most significant first.
fn digits(mut i: usize, card: usize, out: &mut [u8]) {
    for d in out.iter_mut().rev() {
        *d = (i % card) as u8;
        i /= card;
    }
}

fn seq_prob(pmf: &[f64], seq: &[u8]) -> f64 {
    seq.iter().map(|&s| pmf[s as usize]).product()
}

/// Per-letter pair table `P(a, b)`; probability of a sequence pair.
fn pair_prob(table: &[f64], nb: usize, a: &[u8], b: &[u8]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| table[x as usize * nb + y as usize])
        .product()
}

/// Encoder output law for every enrollment sequence with positive mass.
pub(crate) struct EncoderTable {
    n: usize,
    xt_card: usize,
    /// `(P(x̃^n), v_hit, tuples)`; an empty tuple list means the fallback.
    rows: Vec<(f64, bool, Vec<IndexTuple>)>,
}

impl EncoderTable {
    pub(crate) fn build(coder: &Coder, m: &DiscreteCompoundModel, cfg: &SimConfig) -> Result<Self> {
        let n = coder.cb.n();
        let nx = m.xt_card();
        check_cap("enrollment sequences", count(nx, n), cfg)?;
        let p_xt = m.p_xt();
        let rows = (0..nx.pow(n as u32))
            .into_par_iter()
            .map(|i| {
                let mut seq = vec![0u8; n];
                digits(i, nx, &mut seq);
                let p = seq_prob(p_xt.probs(), &seq);
                if p == 0.0 {
                    return (0.0, false, Vec::new());
                }
                let h = coder.hits(&seq);
                (p, h.v_hit, h.tuples)
            })
            .collect();
        Ok(Self { n, xt_card: nx, rows })
    }

    /// `(tuple, weight)` pairs of the encoder given sequence `i`.
    fn outputs(&self, i: usize) -> impl Iterator<Item = (IndexTuple, f64)> + '_ {
        let tuples = &self.rows[i].2;
        let fallback = tuples.is_empty().then_some((IndexTuple::default(), 1.0));
        let w = 1.0 / tuples.len().max(1) as f64;
        tuples.iter().map(move |t| (*t, w)).chain(fallback)
    }

    pub(crate) fn key_pmf(&self, num_keys: usize) -> Vec<f64> {
        let mut pmf = vec![0.0; num_keys];
        for (i, row) in self.rows.iter().enumerate() {
            if row.0 == 0.0 {
                continue;
            }
            for (t, w) in self.outputs(i) {
                pmf[t.u2] += row.0 * w;
            }
        }
        pmf
    }

    fn helper_index(cb: &BinningCodebook, h: Helper) -> usize {
        h.v1 * cb.sizes().u1 + h.u1
    }

    fn joint_entropy_sj(&self, cb: &BinningCodebook) -> (f64, f64) {
        // (H(J), H(S))
        let s = cb.sizes();
        let mut pj = vec![0.0; s.v1 * s.u1];
        let mut ps = vec![0.0; s.u2];
        for (i, row) in self.rows.iter().enumerate() {
            if row.0 == 0.0 {
                continue;
            }
            for (t, w) in self.outputs(i) {
                pj[Self::helper_index(cb, t.helper())] += row.0 * w;
                ps[t.u2] += row.0 * w;
            }
        }
        (pj.iter().map(|&p| plogp(p)).sum(), ps.iter().map(|&p| plogp(p)).sum())
    }
}

/// Exact error probability and event probabilities for one decoder state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExactEvents {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub e5: f64,
}

pub(crate) fn error_analysis(
    coder: &Coder,
    enc: &EncoderTable,
    m: &DiscreteCompoundModel,
    k: usize,
    cfg: &SimConfig,
) -> Result<(f64, ExactEvents)> {
    let (n, nx) = (enc.n, enc.xt_card);
    let ny = m.y_card();
    if k >= m.num_decoder_states() {
        return Err(Error::InvalidArgument(format!(
            "decoder state {k} out of range (K = {})",
            m.num_decoder_states()
        )));
    }
    check_cap("(enrollment, decoder) sequence pairs", count(nx, n).saturating_mul(count(ny, n)), cfg)?;
    let r = pair_table(m, &m.decoder_states()[k]);
    let partials: Vec<Result<(f64, f64, f64, f64)>> = (0..ny.pow(n as u32))
        .into_par_iter()
        .map(|yi| {
            let mut y = vec![0u8; n];
            digits(yi, ny, &mut y);
            let mut xt = vec![0u8; n];
            let mut cache: HashMap<Helper, usize> = HashMap::new();
            let (mut err, mut e3, mut e4, mut e5) = (0.0, 0.0, 0.0, 0.0);
            for (xi, row) in enc.rows.iter().enumerate() {
                if row.0 == 0.0 {
                    continue;
                }
                digits(xi, nx, &mut xt);
                let w = pair_prob(&r, ny, &xt, &y);
                if w == 0.0 {
                    continue;
                }
                let succeeded = !row.2.is_empty();
                for (t, tw) in enc.outputs(xi) {
                    let h = t.helper();
                    let key = match cache.get(&h) {
                        Some(&key) => key,
                        None => {
                            let key = coder.authenticate(&y, h, k)?.key;
                            cache.insert(h, key);
                            key
                        }
                    };
                    if key != t.u2 {
                        err += w * tw;
                    }
                    if succeeded {
                        let ev = coder.decoder_events(&y, &t, k);
                        e3 += w * tw * f64::from(u8::from(ev.e3));
                        e4 += w * tw * f64::from(u8::from(ev.e4));
                        e5 += w * tw * f64::from(u8::from(ev.e5));
                    }
                }
            }
            Ok((err, e3, e4, e5))
        })
        .collect();
    let mut total = (0.0, 0.0, 0.0, 0.0);
    for p in partials {
        let p = p?;
        total.0 += p.0;
        total.1 += p.1;
        total.2 += p.2;
        total.3 += p.3;
    }
    let (mut e1, mut e2) = (0.0, 0.0);
    for row in &enc.rows {
        if row.2.is_empty() {
            if row.1 {
                e2 += row.0;
            } else {
                e1 += row.0;
            }
        }
    }
    let events = ExactEvents {
        e1,
        e2,
        e3: total.1,
        e4: total.2,
        e5: total.3,
    };
    Ok((total.0.clamp(0.0, 1.0), events))
}

/// `Σ_z [H(J, Z = z) − H(S, J, Z = z)]`-style sums for eavesdropper `l`:
/// returns `(H(J,Z), H(S,J,Z), H(Z))`.
fn eve_entropies(
    cb: &BinningCodebook,
    enc: &EncoderTable,
    m: &DiscreteCompoundModel,
    eve: &CondDist,
    with_key: bool,
) -> (f64, f64, f64) {
    let (n, nx) = (enc.n, enc.xt_card);
    let nz = eve.n_out();
    let q = pair_table(m, eve);
    let s = cb.sizes();
    let n_j = s.v1 * s.u1;
    let partials: Vec<(f64, f64, f64)> = (0..nz.pow(n as u32))
        .into_par_iter()
        .map(|zi| {
            let mut z = vec![0u8; n];
            digits(zi, nz, &mut z);
            let mut xt = vec![0u8; n];
            let mut pj = vec![0.0; n_j];
            let mut psj: HashMap<(usize, usize), f64> = HashMap::new();
            let mut pz = 0.0;
            for (xi, row) in enc.rows.iter().enumerate() {
                if row.0 == 0.0 {
                    continue;
                }
                digits(xi, nx, &mut xt);
                let w = pair_prob(&q, nz, &xt, &z);
                if w == 0.0 {
                    continue;
                }
                pz += w;
                for (t, tw) in enc.outputs(xi) {
                    let j = EncoderTable::helper_index(cb, t.helper());
                    pj[j] += w * tw;
                    if with_key {
                        *psj.entry((t.u2, j)).or_insert(0.0) += w * tw;
                    }
                }
            }
            let h_jz: f64 = pj.iter().map(|&p| plogp(p)).sum();
            // sum in key order so the result does not depend on hashing
            let mut cells: Vec<_> = psj.into_iter().collect();
            cells.sort_by_key(|&(key, _)| key);
            let h_sjz: f64 = cells.iter().map(|&(_, p)| plogp(p)).sum();
            (h_jz, h_sjz, plogp(pz))
        })
        .collect();
    partials
        .iter()
        .fold((0.0, 0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1, a.2 + p.2))
}

/// `H(J | X^n)` by enumerating identifier sequences.
fn helper_entropy_given_x(cb: &BinningCodebook, enc: &EncoderTable, m: &DiscreteCompoundModel) -> f64 {
    let (n, nxt) = (enc.n, enc.xt_card);
    let nx = m.p_x().len();
    let s = cb.sizes();
    let n_j = s.v1 * s.u1;
    let enr = m.enrollment();
    let partials: Vec<f64> = (0..nx.pow(n as u32))
        .into_par_iter()
        .map(|xi| {
            let mut x = vec![0u8; n];
            digits(xi, nx, &mut x);
            let px = seq_prob(m.p_x().probs(), &x);
            if px == 0.0 {
                return 0.0;
            }
            let mut xt = vec![0u8; n];
            let mut pj = vec![0.0; n_j];
            for (ti, row) in enc.rows.iter().enumerate() {
                if row.0 == 0.0 {
                    continue;
                }
                digits(ti, nxt, &mut xt);
                let w: f64 = x.iter().zip(&xt).map(|(&a, &b)| enr.get(a as usize, b as usize)).product();
                if w == 0.0 {
                    continue;
                }
                for (t, tw) in enc.outputs(ti) {
                    pj[EncoderTable::helper_index(cb, t.helper())] += w * tw;
                }
            }
            px * pj.iter().map(|&p| plogp(p)).sum::<f64>()
        })
        .collect();
    partials.iter().sum()
}

pub(crate) fn leakage_with(
    coder: &Coder,
    enc: &EncoderTable,
    m: &DiscreteCompoundModel,
    l: usize,
    which: LeakageKind,
    cfg: &SimConfig,
) -> Result<f64> {
    let cb = coder.cb;
    let n = cb.n();
    if l >= m.num_eve_states() {
        return Err(Error::InvalidArgument(format!(
            "eavesdropper state {l} out of range (L = {})",
            m.num_eve_states()
        )));
    }
    let eve = &m.eve_states()[l];
    check_cap(
        "(enrollment, eavesdropper) sequence pairs",
        count(m.xt_card(), n).saturating_mul(count(eve.n_out(), n)),
        cfg,
    )?;
    let (h_j, h_s) = enc.joint_entropy_sj(cb);
    let value = match which {
        LeakageKind::Secrecy => {
            let (h_jz, h_sjz, _) = eve_entropies(cb, enc, m, eve, true);
            h_s + h_jz - h_sjz
        }
        LeakageKind::Privacy => {
            check_cap(
                "(identifier, enrollment) sequence pairs",
                count(m.p_x().len(), n).saturating_mul(count(m.xt_card(), n)),
                cfg,
            )?;
            // J − X^n − Z^n is Markov, so I(X^n; J | Z^n) = I(X^n; J) − I(Z^n; J)
            let (h_jz, _, h_z) = eve_entropies(cb, enc, m, eve, false);
            let i_xj = h_j - helper_entropy_given_x(cb, enc, m);
            let i_zj = h_j + h_z - h_jz;
            i_xj - i_zj
        }
    };
    Ok(value.max(0.0))
}

/// Exact secrecy or privacy leakage in bits (not normalised by `n`) of a
/// fixed codebook against eavesdropper state `l`.
pub fn exact_leakage(
    cb: &BinningCodebook,
    m: &DiscreteCompoundModel,
    l: usize,
    which: LeakageKind,
    cfg: &SimConfig,
) -> Result<f64> {
    cfg.validate()?;
    let coder = Coder::new(cb, cfg.delta);
    let enc = EncoderTable::build(&coder, m, cfg)?;
    leakage_with(&coder, &enc, m, l, which, cfg)
}

/// Exact key law `P(S = s)` over `J_u2` of a fixed codebook, with the
/// encoder tie-break marginalised.
pub fn exact_key_distribution(cb: &BinningCodebook, m: &DiscreteCompoundModel, cfg: &SimConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let coder = Coder::new(cb, cfg.delta);
    let enc = EncoderTable::build(&coder, m, cfg)?;
    Ok(enc.key_pmf(cb.sizes().u2))
}

/// Exact `P(Ŝ_k ≠ S)` of a fixed codebook.
pub fn exact_error_probability(
    cb: &BinningCodebook,
    m: &DiscreteCompoundModel,
    k: usize,
    cfg: &SimConfig,
) -> Result<f64> {
    cfg.validate()?;
    let coder = Coder::new(cb, cfg.delta);
    let enc = EncoderTable::build(&coder, m, cfg)?;
    Ok(error_analysis(&coder, &enc, m, k, cfg)?.0)
}
