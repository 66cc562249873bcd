//! Inner and outer bounds on the GS/CS regions for finite-alphabet sources.
//!
//! The inner bound fixes one pair of test channels `P(U|X̃)`, `P(V|U)` for
//! all channel states and takes worst cases over states inside each
//! constraint; the outer bound lets the test channels depend on the state
//! pair `(k, l)` and intersects afterwards. With one state on each side the
//! two coincide.

mod search;

pub use search::{
    single_state_gap, inner_support, outer_intersection, search_inner_region, Direction, GapReport,
    OuterTable, ParetoEntry, ParetoSet, SearchConfig,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::RegionKind;
use crate::info::{axis, compose_chain, conditional_mutual_information, CondDist, FiniteDist, JointDist};
use crate::RateTriple;

/// Rates at or below this are reported as zero.
pub const RATE_FLOOR: f64 = 1e-12;

fn floor_rate(r: f64) -> f64 {
    if r <= RATE_FLOOR {
        0.0
    } else {
        r
    }
}

#[derive(Deserialize)]
struct RawDiscreteModel {
    p_x: FiniteDist,
    enrollment: CondDist,
    decoder_states: Vec<CondDist>,
    eve_states: Vec<CondDist>,
}

/// Source distribution, enrollment channel `P(X̃|X)`, and the `K` decoder
/// and `L` eavesdropper channel states. Vector observations are supplied
/// already flattened to a single product alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDiscreteModel")]
pub struct DiscreteCompoundModel {
    p_x: FiniteDist,
    enrollment: CondDist,
    decoder_states: Vec<CondDist>,
    eve_states: Vec<CondDist>,
}

impl TryFrom<RawDiscreteModel> for DiscreteCompoundModel {
    type Error = Error;

    fn try_from(r: RawDiscreteModel) -> Result<Self> {
        Self::new(r.p_x, r.enrollment, r.decoder_states, r.eve_states)
    }
}

fn check_states(states: &[CondDist], nx: usize, who: &str) -> Result<()> {
    let first = states
        .first()
        .ok_or_else(|| Error::InvalidArgument(format!("at least one {who} state is required")))?;
    for (i, s) in states.iter().enumerate() {
        if s.n_in() != nx {
            return Err(Error::DimensionMismatch(format!(
                "{who} state {i} has {} inputs, source alphabet has {nx}",
                s.n_in()
            )));
        }
        if s.n_out() != first.n_out() {
            return Err(Error::DimensionMismatch(format!(
                "{who} state {i} has {} outputs, state 0 has {}",
                s.n_out(),
                first.n_out()
            )));
        }
    }
    Ok(())
}

impl DiscreteCompoundModel {
    pub fn new(
        p_x: FiniteDist,
        enrollment: CondDist,
        decoder_states: Vec<CondDist>,
        eve_states: Vec<CondDist>,
    ) -> Result<Self> {
        let nx = p_x.len();
        if enrollment.n_in() != nx {
            return Err(Error::DimensionMismatch(format!(
                "enrollment channel has {} inputs, source alphabet has {nx}",
                enrollment.n_in()
            )));
        }
        check_states(&decoder_states, nx, "decoder")?;
        check_states(&eve_states, nx, "eavesdropper")?;
        Ok(Self {
            p_x,
            enrollment,
            decoder_states,
            eve_states,
        })
    }

    pub fn p_x(&self) -> &FiniteDist {
        &self.p_x
    }

    pub fn enrollment(&self) -> &CondDist {
        &self.enrollment
    }

    pub fn decoder_states(&self) -> &[CondDist] {
        &self.decoder_states
    }

    pub fn eve_states(&self) -> &[CondDist] {
        &self.eve_states
    }

    pub fn xt_card(&self) -> usize {
        self.enrollment.n_out()
    }

    pub fn y_card(&self) -> usize {
        self.decoder_states[0].n_out()
    }

    pub fn z_card(&self) -> usize {
        self.eve_states[0].n_out()
    }

    pub fn num_decoder_states(&self) -> usize {
        self.decoder_states.len()
    }

    pub fn num_eve_states(&self) -> usize {
        self.eve_states.len()
    }

    /// Distribution of the enrollment observation `X̃`.
    pub fn p_xt(&self) -> FiniteDist {
        self.enrollment
            .push_forward(&self.p_x)
            .expect("dimensions checked at construction")
    }

    /// Chain joint over `[V, U, Xt, X, Y, Z]` for decoder state `k` and
    /// eavesdropper state `l`.
    pub fn chain_joint(&self, t: &TestChannelPair, k: usize, l: usize) -> Result<JointDist> {
        let y = self.decoder_state(k)?;
        let z = self.eve_state(l)?;
        compose_chain(
            &self.p_x,
            &self.enrollment,
            &t.u_given_xt,
            &t.v_given_u,
            &y.product(z)?,
            y.n_out(),
        )
    }

    /// Chain joint with a single observation channel on the `Y` axis and a
    /// one-symbol `Z` axis.
    fn single_observation_joint(&self, t: &TestChannelPair, obs: &CondDist) -> Result<JointDist> {
        let trivial = CondDist::constant(obs.n_in(), 1, 0);
        compose_chain(
            &self.p_x,
            &self.enrollment,
            &t.u_given_xt,
            &t.v_given_u,
            &obs.product(&trivial)?,
            obs.n_out(),
        )
    }

    fn decoder_state(&self, k: usize) -> Result<&CondDist> {
        self.decoder_states.get(k).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "decoder state {k} out of range (K = {})",
                self.decoder_states.len()
            ))
        })
    }

    fn eve_state(&self, l: usize) -> Result<&CondDist> {
        self.eve_states.get(l).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "eavesdropper state {l} out of range (L = {})",
                self.eve_states.len()
            ))
        })
    }

    fn check_test_channels(&self, t: &TestChannelPair) -> Result<()> {
        if t.u_given_xt.n_in() != self.xt_card() {
            return Err(Error::DimensionMismatch(format!(
                "P(U|X̃) has {} inputs, |X̃| = {}",
                t.u_given_xt.n_in(),
                self.xt_card()
            )));
        }
        Ok(())
    }
}

/// Auxiliary alphabet sizes `(|U|, |V|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub u: usize,
    pub v: usize,
}

impl Caps {
    pub fn new(u: usize, v: usize) -> Result<Self> {
        if u == 0 || v == 0 {
            return Err(Error::InvalidArgument(format!(
                "cardinality caps must be at least 1, got {u}x{v}"
            )));
        }
        Ok(Self { u, v })
    }

    /// Cardinality bounds sufficient for the inner region:
    /// `|U| ≤ (|X̃| + 2(K+L) + 1)(|X̃| + K + L + 1)`, `|V| ≤ |X̃| + 6`.
    pub fn inner_default(m: &DiscreteCompoundModel) -> Self {
        let (x, kl) = (m.xt_card(), m.num_decoder_states() + m.num_eve_states());
        Self {
            u: (x + 2 * kl + 1) * (x + kl + 1),
            v: x + 6,
        }
    }

    /// Cardinality bounds sufficient for the outer region.
    pub fn outer_default(m: &DiscreteCompoundModel) -> Self {
        let (x, kl) = (m.xt_card(), m.num_decoder_states() + m.num_eve_states());
        Self {
            u: (x + 2 * kl + 1) * (x + kl + 1),
            v: x + 2 * kl + 1,
        }
    }
}

impl std::str::FromStr for Caps {
    type Err = Error;

    /// Parses `UxV`, e.g. `4x3`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("caps must look like UxV, got `{s}`"));
        let (u, v) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let u = u.trim().parse().map_err(|_| bad())?;
        let v = v.trim().parse().map_err(|_| bad())?;
        Caps::new(u, v)
    }
}

/// Test channels `P(U|X̃)` and `P(V|U)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestChannelPair {
    pub u_given_xt: CondDist,
    pub v_given_u: CondDist,
}

impl TestChannelPair {
    pub fn new(u_given_xt: CondDist, v_given_u: CondDist) -> Result<Self> {
        if v_given_u.n_in() != u_given_xt.n_out() {
            return Err(Error::DimensionMismatch(format!(
                "P(V|U) has {} inputs, |U| = {}",
                v_given_u.n_in(),
                u_given_xt.n_out()
            )));
        }
        Ok(Self {
            u_given_xt,
            v_given_u,
        })
    }

    /// As [`TestChannelPair::new`], also enforcing auxiliary cardinality caps.
    pub fn with_caps(u_given_xt: CondDist, v_given_u: CondDist, caps: Caps) -> Result<Self> {
        let t = Self::new(u_given_xt, v_given_u)?;
        if t.u_card() > caps.u || t.v_card() > caps.v {
            return Err(Error::InvalidArgument(format!(
                "test channels have |U| = {}, |V| = {}, caps are {}x{}",
                t.u_card(),
                t.v_card(),
                caps.u,
                caps.v
            )));
        }
        Ok(t)
    }

    pub fn u_card(&self) -> usize {
        self.u_given_xt.n_out()
    }

    pub fn v_card(&self) -> usize {
        self.v_given_u.n_out()
    }
}

/// A corner point of a bound together with the information terms that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub kind: RegionKind,
    pub triple: RateTriple,
    pub terms: BTreeMap<String, f64>,
}

/// Term names of an inner-bound point.
pub mod inner_terms {
    /// `min_k I(Y_k;U|V)`
    pub const MIN_I_YU_V: &str = "min_k_I(Y;U|V)";
    /// `max_l I(Z_l;U|V)`
    pub const MAX_I_ZU_V: &str = "max_l_I(Z;U|V)";
    /// `max_k I(X̃;U|V,Y_k)`
    pub const MAX_I_XTU_VY: &str = "max_k_I(Xt;U|V,Y)";
    /// `max_k I(X̃;V|Y_k)`
    pub const MAX_I_XTV_Y: &str = "max_k_I(Xt;V|Y)";
    /// `I(X̃;U|X)`
    pub const I_XTU_X: &str = "I(Xt;U|X)";
    /// `min_k I(Y_k;V)`
    pub const MIN_I_YV: &str = "min_k_I(Y;V)";
    /// `min_l I(Z_l;V)`
    pub const MIN_I_ZV: &str = "min_l_I(Z;V)";
    /// `I(X̃;V)`
    pub const I_XTV: &str = "I(Xt;V)";
    /// `I(X̃;U|V)`
    pub const I_XTU_V: &str = "I(Xt;U|V)";

    pub const ALL: [&str; 9] = [
        MIN_I_YU_V,
        MAX_I_ZU_V,
        MAX_I_XTU_VY,
        MAX_I_XTV_Y,
        I_XTU_X,
        MIN_I_YV,
        MIN_I_ZV,
        I_XTV,
        I_XTU_V,
    ];
}

/// Term names of a per-state outer-bound point.
pub mod outer_terms {
    pub const I_YU_V: &str = "I(Y;U|V)";
    pub const I_ZU_V: &str = "I(Z;U|V)";
    pub const I_XTU_Y: &str = "I(Xt;U|Y)";
    pub const I_XU_Y: &str = "I(X;U|Y)";
    pub const I_YV: &str = "I(Y;V)";
    pub const I_ZV: &str = "I(Z;V)";

    pub const ALL: [&str; 6] = [I_YU_V, I_ZU_V, I_XTU_Y, I_XU_Y, I_YV, I_ZV];
}

fn term(terms: &BTreeMap<String, f64>, name: &str) -> Result<f64> {
    terms
        .get(name)
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("missing term `{name}`")))
}

/// Inner-bound corner point from its information terms.
pub fn inner_triple_from_terms(kind: RegionKind, terms: &BTreeMap<String, f64>) -> Result<RateTriple> {
    use inner_terms::*;
    let r_s = floor_rate(term(terms, MIN_I_YU_V)? - term(terms, MAX_I_ZU_V)?);
    let storage = term(terms, MAX_I_XTU_VY)? + term(terms, MAX_I_XTV_Y)?;
    let r_l = floor_rate(storage - term(terms, I_XTU_X)? + term(terms, MIN_I_YV)? - term(terms, MIN_I_ZV)?);
    let r_j = match kind {
        RegionKind::Gs => floor_rate(storage),
        RegionKind::Cs => floor_rate(storage + r_s),
    };
    Ok(RateTriple { r_s, r_j, r_l })
}

/// Outer-bound corner point for one state pair from its information terms.
pub fn outer_triple_from_terms(kind: RegionKind, terms: &BTreeMap<String, f64>) -> Result<RateTriple> {
    use outer_terms::*;
    let r_s = floor_rate(term(terms, I_YU_V)? - term(terms, I_ZU_V)?);
    let storage = term(terms, I_XTU_Y)?;
    let r_l = floor_rate(term(terms, I_XU_Y)? + term(terms, I_YV)? - term(terms, I_ZV)?);
    let r_j = match kind {
        RegionKind::Gs => floor_rate(storage),
        RegionKind::Cs => floor_rate(storage + r_s),
    };
    Ok(RateTriple { r_s, r_j, r_l })
}

fn cmi(j: &JointDist, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
    conditional_mutual_information(j, a, b, c)
}

/// Information terms of the inner bound; `R_S`/`R_J`/`R_L` follow from
/// [`inner_triple_from_terms`].
pub fn inner_terms(m: &DiscreteCompoundModel, t: &TestChannelPair) -> Result<BTreeMap<String, f64>> {
    use axis::{U, V, X, XT, Y};
    m.check_test_channels(t)?;
    let mut min_yu_v = f64::INFINITY;
    let mut max_xtu_vy = f64::NEG_INFINITY;
    let mut max_xtv_y = f64::NEG_INFINITY;
    let mut min_yv = f64::INFINITY;
    let mut shared = None;
    for obs in &m.decoder_states {
        let j = m.single_observation_joint(t, obs)?;
        // drop the trivial Z axis once so later marginals are cheaper
        let j = j.marginal(&[V, U, XT, X, Y])?;
        min_yu_v = min_yu_v.min(cmi(&j, &[Y], &[U], &[V])?);
        max_xtu_vy = max_xtu_vy.max(cmi(&j, &[XT], &[U], &[V, Y])?);
        max_xtv_y = max_xtv_y.max(cmi(&j, &[XT], &[V], &[Y])?);
        min_yv = min_yv.min(cmi(&j, &[Y], &[V], &[])?);
        if shared.is_none() {
            shared = Some((
                cmi(&j, &[XT], &[U], &[X])?,
                cmi(&j, &[XT], &[V], &[])?,
                cmi(&j, &[XT], &[U], &[V])?,
            ));
        }
    }
    let mut max_zu_v = f64::NEG_INFINITY;
    let mut min_zv = f64::INFINITY;
    for obs in &m.eve_states {
        // the eavesdropper observation sits on the Y axis here
        let j = m.single_observation_joint(t, obs)?.marginal(&[V, U, Y])?;
        max_zu_v = max_zu_v.max(cmi(&j, &[Y], &[U], &[V])?);
        min_zv = min_zv.min(cmi(&j, &[Y], &[V], &[])?);
    }
    let (xtu_x, xtv, xtu_v) = shared.expect("at least one decoder state");
    use inner_terms::*;
    Ok(BTreeMap::from([
        (MIN_I_YU_V.to_string(), min_yu_v),
        (MAX_I_ZU_V.to_string(), max_zu_v),
        (MAX_I_XTU_VY.to_string(), max_xtu_vy),
        (MAX_I_XTV_Y.to_string(), max_xtv_y),
        (I_XTU_X.to_string(), xtu_x),
        (MIN_I_YV.to_string(), min_yv),
        (MIN_I_ZV.to_string(), min_zv),
        (I_XTV.to_string(), xtv),
        (I_XTU_V.to_string(), xtu_v),
    ]))
}

/// Extreme inner-bound point for one pair of test channels: largest key
/// rate, smallest storage and leakage rates.
pub fn inner_point(m: &DiscreteCompoundModel, t: &TestChannelPair, kind: RegionKind) -> Result<BoundPoint> {
    let terms = inner_terms(m, t)?;
    Ok(BoundPoint {
        kind,
        triple: inner_triple_from_terms(kind, &terms)?,
        terms,
    })
}

/// Information terms of the outer bound at state pair `(k, l)`.
pub fn outer_terms(
    m: &DiscreteCompoundModel,
    k: usize,
    l: usize,
    t: &TestChannelPair,
) -> Result<BTreeMap<String, f64>> {
    use axis::{U, V, X, XT, Y, Z};
    m.check_test_channels(t)?;
    let j = m.chain_joint(t, k, l)?;
    use outer_terms::*;
    Ok(BTreeMap::from([
        (I_YU_V.to_string(), cmi(&j, &[Y], &[U], &[V])?),
        (I_ZU_V.to_string(), cmi(&j, &[Z], &[U], &[V])?),
        (I_XTU_Y.to_string(), cmi(&j, &[XT], &[U], &[Y])?),
        (I_XU_Y.to_string(), cmi(&j, &[X], &[U], &[Y])?),
        (I_YV.to_string(), cmi(&j, &[Y], &[V], &[])?),
        (I_ZV.to_string(), cmi(&j, &[Z], &[V], &[])?),
    ]))
}

/// Extreme outer-bound point for state pair `(k, l)` and fixed test channels.
pub fn outer_point(
    m: &DiscreteCompoundModel,
    k: usize,
    l: usize,
    t: &TestChannelPair,
    kind: RegionKind,
) -> Result<BoundPoint> {
    let terms = outer_terms(m, k, l, t)?;
    Ok(BoundPoint {
        kind,
        triple: outer_triple_from_terms(kind, &terms)?,
        terms,
    })
}
