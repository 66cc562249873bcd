use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{IndexSizes, SimConfig};
use crate::discrete::{DiscreteCompoundModel, TestChannelPair};
use crate::error::{Error, Result};

/// Frequency-typical set of a joint pmf at block length `n`: every cell
/// count `c` satisfies `|c − nP| ≤ δ nP`, so zero-probability cells must be
/// empty.
#[derive(Debug, Clone)]
pub(crate) struct TypicalSet {
    dims: Vec<usize>,
    lo: Vec<u32>,
    hi: Vec<u32>,
    empty: bool,
}

impl TypicalSet {
    pub(crate) fn new(p: &[f64], dims: &[usize], n: usize, delta: f64) -> Self {
        debug_assert_eq!(p.len(), dims.iter().product::<usize>());
        let mut lo = Vec::with_capacity(p.len());
        let mut hi = Vec::with_capacity(p.len());
        let mut empty = false;
        for &q in p {
            if q <= 0.0 {
                lo.push(0);
                hi.push(0);
                continue;
            }
            let mean = n as f64 * q;
            let a = (mean * (1.0 - delta) - 1e-9).ceil().max(0.0);
            let b = (mean * (1.0 + delta) + 1e-9).floor();
            if a > b {
                empty = true;
            }
            lo.push(a as u32);
            hi.push(b.max(0.0) as u32);
        }
        Self {
            dims: dims.to_vec(),
            lo,
            hi,
            empty,
        }
    }

    /// Whether the sequences, one per axis, are jointly typical.
    pub(crate) fn contains(&self, seqs: &[&[u8]], counts: &mut Vec<u32>) -> bool {
        if self.empty {
            return false;
        }
        counts.clear();
        counts.resize(self.lo.len(), 0);
        let n = seqs[0].len();
        for i in 0..n {
            let mut idx = 0;
            for (s, &d) in seqs.iter().zip(&self.dims) {
                idx = idx * d + s[i] as usize;
            }
            counts[idx] += 1;
            if counts[idx] > self.hi[idx] {
                return false;
            }
        }
        counts
            .iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&c, (&a, &b))| a <= c && c <= b)
    }
}

/// Codeword indices, 0-based. The encoder's failure fallback is all zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct IndexTuple {
    pub v1: usize,
    pub v2: usize,
    pub u1: usize,
    pub u2: usize,
    pub u3: usize,
}

/// Public helper data `(j_v1, j_u1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Helper {
    pub v1: usize,
    pub u1: usize,
}

impl IndexTuple {
    pub fn helper(&self) -> Helper {
        Helper {
            v1: self.v1,
            u1: self.u1,
        }
    }
}

/// Two-layer random codebook plus the per-letter joints its coder tests
/// typicality against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinningCodebook {
    n: usize,
    sizes: IndexSizes,
    xt_card: usize,
    u_card: usize,
    v_card: usize,
    y_card: usize,
    /// `n` symbols per word, words ordered by `(j_v1, j_v2)`.
    v_words: Vec<u8>,
    /// Ordered by `(j_v1, j_v2, j_u1, j_u2, j_u3)`.
    u_words: Vec<u8>,
    /// `P(x̃, u, v)`, row-major.
    p_xuv: Vec<f64>,
    /// `P_k(y, u, v)` per decoder state.
    p_yuv: Vec<Vec<f64>>,
}

pub(crate) fn sample(probs: &[f64], rng: &mut ChaCha8Rng) -> u8 {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return i as u8;
        }
    }
    // rounding slack: last positive cell
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u8
}

/// Per-letter joint `P(a, b)` with `a` the first axis: `Σ_x P(x) P(a|x) P(b|x)`.
pub(crate) fn pair_table(m: &DiscreteCompoundModel, b_given_x: &crate::info::CondDist) -> Vec<f64> {
    let enr = m.enrollment();
    let (na, nb) = (enr.n_out(), b_given_x.n_out());
    let mut out = vec![0.0; na * nb];
    for (x, &px) in m.p_x().probs().iter().enumerate() {
        for a in 0..na {
            for b in 0..nb {
                out[a * nb + b] += px * enr.get(x, a) * b_given_x.get(x, b);
            }
        }
    }
    out
}

fn check_alphabet(card: usize, what: &str) -> Result<()> {
    if card > u8::MAX as usize + 1 {
        return Err(Error::InvalidArgument(format!(
            "{what} alphabet of size {card} exceeds the simulator limit of 256"
        )));
    }
    Ok(())
}

/// Samples the codebook from the stream-0 ChaCha generator of `cfg.seed`.
pub fn build_codebook(m: &DiscreteCompoundModel, t: &TestChannelPair, cfg: &SimConfig) -> Result<BinningCodebook> {
    cfg.validate()?;
    if t.u_given_xt.n_in() != m.xt_card() {
        return Err(Error::DimensionMismatch(format!(
            "test channel expects |X̃| = {}, model has {}",
            t.u_given_xt.n_in(),
            m.xt_card()
        )));
    }
    let (nx, nu, nv, ny) = (m.xt_card(), t.u_card(), t.v_card(), m.y_card());
    for (card, what) in [(nx, "X̃"), (nu, "U"), (nv, "V"), (ny, "Y"), (m.z_card(), "Z"), (m.p_x().len(), "X")] {
        check_alphabet(card, what)?;
    }
    let n = cfg.n;
    let sizes = cfg.set_sizes()?;
    let n_v = sizes.v1 as u128 * sizes.v2 as u128;
    let n_u = n_v * sizes.u1 as u128 * sizes.u2 as u128 * sizes.u3 as u128;
    let required = (n_v + n_u) * n as u128;
    if required > cfg.max_codebook_symbols as u128 {
        return Err(Error::CapExceeded {
            what: "codebook symbols",
            required,
            allowed: cfg.max_codebook_symbols as u128,
        });
    }

    let p_xt = m.p_xt();
    let mut p_xuv = vec![0.0; nx * nu * nv];
    for (x, &px) in p_xt.probs().iter().enumerate() {
        for u in 0..nu {
            for v in 0..nv {
                p_xuv[(x * nu + u) * nv + v] = px * t.u_given_xt.get(x, u) * t.v_given_u.get(u, v);
            }
        }
    }
    let mut p_v = vec![0.0; nv];
    let mut p_uv = vec![0.0; nu * nv];
    for x in 0..nx {
        for u in 0..nu {
            for v in 0..nv {
                let q = p_xuv[(x * nu + u) * nv + v];
                p_v[v] += q;
                p_uv[u * nv + v] += q;
            }
        }
    }
    let u_given_v: Vec<Vec<f64>> = (0..nv)
        .map(|v| {
            (0..nu)
                .map(|u| if p_v[v] > 0.0 { p_uv[u * nv + v] / p_v[v] } else { 0.0 })
                .collect()
        })
        .collect();
    let p_yuv = m
        .decoder_states()
        .iter()
        .map(|w| {
            let r = pair_table(m, w);
            let mut out = vec![0.0; ny * nu * nv];
            for x in 0..nx {
                for y in 0..ny {
                    for u in 0..nu {
                        for v in 0..nv {
                            out[(y * nu + u) * nv + v] +=
                                r[x * ny + y] * t.u_given_xt.get(x, u) * t.v_given_u.get(u, v);
                        }
                    }
                }
            }
            out
        })
        .collect();

    let mut rng = super::stream_rng(cfg.seed, 0);
    let n_v = n_v as usize;
    let per_v = sizes.u1 * sizes.u2 * sizes.u3;
    let mut v_words = Vec::with_capacity(n_v * n);
    let mut u_words = Vec::with_capacity(n_v * per_v * n);
    for _ in 0..n_v * n {
        v_words.push(sample(&p_v, &mut rng));
    }
    for w in 0..n_v {
        let v = &v_words[w * n..(w + 1) * n];
        for _ in 0..per_v {
            for &vi in v {
                u_words.push(sample(&u_given_v[vi as usize], &mut rng));
            }
        }
    }
    Ok(BinningCodebook {
        n,
        sizes,
        xt_card: nx,
        u_card: nu,
        v_card: nv,
        y_card: ny,
        v_words,
        u_words,
        p_xuv,
        p_yuv,
    })
}

impl BinningCodebook {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sizes(&self) -> IndexSizes {
        self.sizes
    }

    pub fn num_v_words(&self) -> usize {
        self.sizes.v1 * self.sizes.v2
    }

    pub fn num_u_words(&self) -> usize {
        self.num_v_words() * self.sizes.u1 * self.sizes.u2 * self.sizes.u3
    }

    pub fn v_word(&self, v1: usize, v2: usize) -> &[u8] {
        let w = v1 * self.sizes.v2 + v2;
        &self.v_words[w * self.n..(w + 1) * self.n]
    }

    pub fn u_word(&self, t: &IndexTuple) -> &[u8] {
        let s = &self.sizes;
        let w = (((t.v1 * s.v2 + t.v2) * s.u1 + t.u1) * s.u2 + t.u2) * s.u3 + t.u3;
        &self.u_words[w * self.n..(w + 1) * self.n]
    }

    pub fn v_card(&self) -> usize {
        self.v_card
    }

    pub fn u_card(&self) -> usize {
        self.u_card
    }

    pub fn num_decoder_states(&self) -> usize {
        self.p_yuv.len()
    }

    /// `log2(|J_v1| |J_u1|)`.
    pub fn storage_bits(&self) -> f64 {
        (self.sizes.v1 as f64).log2() + (self.sizes.u1 as f64).log2()
    }

    fn check_len(&self, s: &[u8]) -> Result<()> {
        if s.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: s.len(),
            });
        }
        Ok(())
    }
}

fn pair_marginal(p: &[f64], d0: usize, d1: usize, d2: usize) -> Vec<f64> {
    // (a, b, c) -> (a, c)
    let mut out = vec![0.0; d0 * d2];
    for a in 0..d0 {
        for b in 0..d1 {
            for c in 0..d2 {
                out[a * d2 + c] += p[(a * d1 + b) * d2 + c];
            }
        }
    }
    out
}

/// Result of encoding one enrollment sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Enrollment {
    pub helper: Helper,
    pub key: usize,
    pub indices: IndexTuple,
    /// Number of jointly typical tuples the choice was made from.
    pub hits: usize,
    /// Some `v`-word was typical with the input.
    pub v_hit: bool,
}

impl Enrollment {
    pub fn succeeded(&self) -> bool {
        self.hits > 0
    }
}

/// Decoder output; `key` is 0 whenever `ok` is false.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decoded {
    pub key: usize,
    pub ok: bool,
}

/// Encoder-side typical tuples of one input sequence.
#[derive(Debug, Clone, Default)]
pub(crate) struct HitList {
    pub v_hit: bool,
    pub tuples: Vec<IndexTuple>,
}

/// Decoder-side error events relative to the true tuple.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct DecoderEvents {
    pub e3: bool,
    pub e4: bool,
    pub e5: bool,
}

/// A codebook together with its typical sets at a fixed `δ`.
pub(crate) struct Coder<'a> {
    pub cb: &'a BinningCodebook,
    enc_pair: TypicalSet,
    enc_triple: TypicalSet,
    dec_pair: Vec<TypicalSet>,
    dec_triple: Vec<TypicalSet>,
}

impl<'a> Coder<'a> {
    pub(crate) fn new(cb: &'a BinningCodebook, delta: f64) -> Self {
        let (nx, nu, nv, ny, n) = (cb.xt_card, cb.u_card, cb.v_card, cb.y_card, cb.n);
        let enc_pair = TypicalSet::new(&pair_marginal(&cb.p_xuv, nx, nu, nv), &[nx, nv], n, delta);
        let enc_triple = TypicalSet::new(&cb.p_xuv, &[nx, nu, nv], n, delta);
        let dec_pair = cb
            .p_yuv
            .iter()
            .map(|p| TypicalSet::new(&pair_marginal(p, ny, nu, nv), &[ny, nv], n, delta))
            .collect();
        let dec_triple = cb
            .p_yuv
            .iter()
            .map(|p| TypicalSet::new(p, &[ny, nu, nv], n, delta))
            .collect();
        Self {
            cb,
            enc_pair,
            enc_triple,
            dec_pair,
            dec_triple,
        }
    }

    pub(crate) fn hits(&self, xt: &[u8]) -> HitList {
        let s = self.cb.sizes;
        let mut counts = Vec::new();
        let mut out = HitList::default();
        for v1 in 0..s.v1 {
            for v2 in 0..s.v2 {
                let v = self.cb.v_word(v1, v2);
                if !self.enc_pair.contains(&[xt, v], &mut counts) {
                    continue;
                }
                out.v_hit = true;
                for u1 in 0..s.u1 {
                    for u2 in 0..s.u2 {
                        for u3 in 0..s.u3 {
                            let t = IndexTuple { v1, v2, u1, u2, u3 };
                            if self.enc_triple.contains(&[xt, self.cb.u_word(&t), v], &mut counts) {
                                out.tuples.push(t);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub(crate) fn enroll(&self, xt: &[u8], rng: &mut ChaCha8Rng) -> Result<Enrollment> {
        self.cb.check_len(xt)?;
        let h = self.hits(xt);
        let indices = if h.tuples.is_empty() {
            IndexTuple::default()
        } else {
            h.tuples[rng.random_range(0..h.tuples.len())]
        };
        Ok(Enrollment {
            helper: indices.helper(),
            key: indices.u2,
            indices,
            hits: h.tuples.len(),
            v_hit: h.v_hit,
        })
    }

    pub(crate) fn authenticate(&self, y: &[u8], helper: Helper, k: usize) -> Result<Decoded> {
        self.cb.check_len(y)?;
        if k >= self.dec_pair.len() {
            return Err(Error::InvalidArgument(format!(
                "decoder state {k} out of range (K = {})",
                self.dec_pair.len()
            )));
        }
        let s = self.cb.sizes;
        let fail = Decoded { key: 0, ok: false };
        if helper.v1 >= s.v1 || helper.u1 >= s.u1 {
            return Err(Error::InvalidArgument(format!(
                "helper ({}, {}) outside index sets {} x {}",
                helper.v1, helper.u1, s.v1, s.u1
            )));
        }
        let mut counts = Vec::new();
        let mut v2_hat = None;
        for v2 in 0..s.v2 {
            if self.dec_pair[k].contains(&[y, self.cb.v_word(helper.v1, v2)], &mut counts) {
                if v2_hat.is_some() {
                    return Ok(fail);
                }
                v2_hat = Some(v2);
            }
        }
        let Some(v2) = v2_hat else { return Ok(fail) };
        let v = self.cb.v_word(helper.v1, v2);
        let mut found = None;
        for u2 in 0..s.u2 {
            for u3 in 0..s.u3 {
                let t = IndexTuple {
                    v1: helper.v1,
                    v2,
                    u1: helper.u1,
                    u2,
                    u3,
                };
                if self.dec_triple[k].contains(&[y, self.cb.u_word(&t), v], &mut counts) {
                    if found.is_some() {
                        return Ok(fail);
                    }
                    found = Some(u2);
                }
            }
        }
        Ok(match found {
            Some(key) => Decoded { key, ok: true },
            None => fail,
        })
    }

    pub(crate) fn decoder_events(&self, y: &[u8], truth: &IndexTuple, k: usize) -> DecoderEvents {
        let s = self.cb.sizes;
        let mut counts = Vec::new();
        let v = self.cb.v_word(truth.v1, truth.v2);
        let e3 = !self.dec_triple[k].contains(&[y, self.cb.u_word(truth), v], &mut counts);
        let e4 = (0..s.v2)
            .filter(|&v2| v2 != truth.v2)
            .any(|v2| self.dec_pair[k].contains(&[y, self.cb.v_word(truth.v1, v2)], &mut counts));
        let mut e5 = false;
        'outer: for u2 in 0..s.u2 {
            for u3 in 0..s.u3 {
                if (u2, u3) == (truth.u2, truth.u3) {
                    continue;
                }
                let t = IndexTuple { u2, u3, ..*truth };
                if self.dec_triple[k].contains(&[y, self.cb.u_word(&t), v], &mut counts) {
                    e5 = true;
                    break 'outer;
                }
            }
        }
        DecoderEvents { e3, e4, e5 }
    }
}

/// Encodes `xt_seq`: uniform choice among jointly typical tuples, all-zero
/// indices when there is none.
pub fn enroll(cb: &BinningCodebook, xt_seq: &[u8], delta: f64, rng: &mut ChaCha8Rng) -> Result<Enrollment> {
    super::check_delta(delta)?;
    Coder::new(cb, delta).enroll(xt_seq, rng)
}

/// Decodes the key for decoder state `k`; fails unless both the `v` and
/// the `u` search have a unique typical candidate.
pub fn authenticate(cb: &BinningCodebook, y_seq: &[u8], helper: Helper, delta: f64, k: usize) -> Result<Decoded> {
    super::check_delta(delta)?;
    Coder::new(cb, delta).authenticate(y_seq, helper, k)
}
