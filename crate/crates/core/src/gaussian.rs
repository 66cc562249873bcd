//! Closed-form GS/CS capacity regions for Gaussian sources observed through
//! compound multi-antenna channels with a noiseless enrollment channel.
//!
//! Every rate depends on the channel states only through the power gains
//! `HᵀH`. The regions are unions over a tuning parameter `α ∈ (0, 1]` that
//! sets the variance of the Gaussian auxiliary `U` (`X = U + Θ`,
//! `Var Θ = α σ²`). All three boundary rates are nonincreasing in `α` and
//! vanish at `α = 1`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::RateTriple;

const LN2: f64 = std::f64::consts::LN_2;

/// GS: key generated from the identifier. CS: key chosen beforehand and
/// bound through the helper data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Gs,
    Cs,
}

impl RegionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionKind::Gs => "gs",
            RegionKind::Cs => "cs",
        }
    }
}

impl std::fmt::Display for RegionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gs" => Ok(RegionKind::Gs),
            "cs" => Ok(RegionKind::Cs),
            other => Err(Error::InvalidArgument(format!(
                "unknown region kind `{other}` (expected gs or cs)"
            ))),
        }
    }
}

#[derive(Deserialize)]
struct RawGaussianModel {
    sigma_x2: f64,
    decoder_gains: Vec<Vec<f64>>,
    eve_gains: Vec<Vec<f64>>,
}

/// Source variance plus `K` decoder and `L` eavesdropper gain vectors; the
/// observation noise is white with unit variance per antenna.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGaussianModel")]
pub struct CompoundGaussianModel {
    sigma_x2: f64,
    decoder_gains: Vec<Vec<f64>>,
    eve_gains: Vec<Vec<f64>>,
}

impl TryFrom<RawGaussianModel> for CompoundGaussianModel {
    type Error = Error;

    fn try_from(r: RawGaussianModel) -> Result<Self> {
        Self::new(r.sigma_x2, r.decoder_gains, r.eve_gains)
    }
}

fn check_gain_set(gains: &[Vec<f64>], who: &str) -> Result<()> {
    let first = gains.first().ok_or_else(|| {
        Error::InvalidArgument(format!("at least one {who} state is required"))
    })?;
    if first.is_empty() {
        return Err(Error::InvalidArgument(format!("{who} gain vectors are empty")));
    }
    for (i, g) in gains.iter().enumerate() {
        if g.len() != first.len() {
            return Err(Error::DimensionMismatch(format!(
                "{who} state {i} has {} antennas, state 0 has {}",
                g.len(),
                first.len()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "{who} state {i} has a non-finite gain"
            )));
        }
    }
    Ok(())
}

impl CompoundGaussianModel {
    pub fn new(sigma_x2: f64, decoder_gains: Vec<Vec<f64>>, eve_gains: Vec<Vec<f64>>) -> Result<Self> {
        if !(sigma_x2 > 0.0) || !sigma_x2.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "source variance must be positive, got {sigma_x2}"
            )));
        }
        check_gain_set(&decoder_gains, "decoder")?;
        check_gain_set(&eve_gains, "eavesdropper")?;
        Ok(Self {
            sigma_x2,
            decoder_gains,
            eve_gains,
        })
    }

    /// Single-antenna, single-state model.
    pub fn scalar(sigma_x2: f64, h: f64, h_tilde: f64) -> Result<Self> {
        Self::new(sigma_x2, vec![vec![h]], vec![vec![h_tilde]])
    }

    pub fn sigma_x2(&self) -> f64 {
        self.sigma_x2
    }

    pub fn decoder_gains(&self) -> &[Vec<f64>] {
        &self.decoder_gains
    }

    pub fn eve_gains(&self) -> &[Vec<f64>] {
        &self.eve_gains
    }

    /// Covariance of `(X, Y_1..Y_K, Z_1..Z_L)` when every state is observed
    /// at once with independent white noise.
    pub fn induced_covariance(&self) -> FullCovariance {
        let gains: Vec<&Vec<f64>> = self.decoder_gains.iter().chain(&self.eve_gains).collect();
        let h: Vec<f64> = gains.iter().flat_map(|g| g.iter().copied()).collect();
        let n = 1 + h.len();
        let s2 = self.sigma_x2;
        let mut m = DMatrix::<f64>::identity(n, n);
        m[(0, 0)] = s2;
        for i in 0..h.len() {
            m[(0, i + 1)] = s2 * h[i];
            m[(i + 1, 0)] = s2 * h[i];
            for j in 0..h.len() {
                m[(i + 1, j + 1)] += s2 * h[i] * h[j];
            }
        }
        FullCovariance { sigma: m }
    }

    pub fn block_dims(&self) -> BlockDims {
        BlockDims {
            decoder: vec![self.decoder_gains[0].len(); self.decoder_gains.len()],
            eve: vec![self.eve_gains[0].len(); self.eve_gains.len()],
        }
    }
}

/// `Σ hᵢ²`.
pub fn power_gain(h: &[f64]) -> Result<f64> {
    if h.is_empty() {
        return Err(Error::InvalidArgument("empty gain vector".into()));
    }
    Ok(h.iter().map(|v| v * v).sum())
}

/// Worst decoder state (smallest power gain) and best eavesdropper state
/// (largest power gain); ties go to the lowest index.
pub fn saddle_indices(m: &CompoundGaussianModel) -> (usize, usize) {
    let gains = scalarize(m);
    let mut k_star = 0;
    for (k, &g) in gains.nu_y.iter().enumerate() {
        if g < gains.nu_y[k_star] {
            k_star = k;
        }
    }
    let mut l_star = 0;
    for (l, &g) in gains.nu_z.iter().enumerate() {
        if g > gains.nu_z[l_star] {
            l_star = l;
        }
    }
    (k_star, l_star)
}

/// Power gains at the saddle indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleGains {
    pub k_star: usize,
    pub l_star: usize,
    pub nu_y: f64,
    pub nu_z: f64,
}

pub fn saddle_gains(m: &CompoundGaussianModel) -> SaddleGains {
    let (k_star, l_star) = saddle_indices(m);
    let nu_y = m.decoder_gains[k_star].iter().map(|v| v * v).sum();
    let nu_z = m.eve_gains[l_star].iter().map(|v| v * v).sum();
    SaddleGains {
        k_star,
        l_star,
        nu_y,
        nu_z,
    }
}

/// True iff the worst decoder power gain is at least the best eavesdropper
/// power gain. Otherwise only `R_S = 0` is achievable.
pub fn degradedness_check(m: &CompoundGaussianModel) -> bool {
    let g = saddle_gains(m);
    g.nu_y >= g.nu_z
}

fn require_degraded(m: &CompoundGaussianModel) -> Result<SaddleGains> {
    let g = saddle_gains(m);
    if g.nu_y >= g.nu_z {
        Ok(g)
    } else {
        Err(Error::NotDegraded {
            worst_decoder: g.nu_y,
            best_eve: g.nu_z,
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1]")))
    }
}

/// `log2((σ²ν + 1) / (α σ²ν + 1))`, nondecreasing in `ν` for fixed `α`.
pub fn gain_log_ratio(sigma_x2: f64, nu: f64, alpha: f64) -> f64 {
    ((sigma_x2 * nu).ln_1p() - (alpha * sigma_x2 * nu).ln_1p()) / LN2
}

/// Boundary key rate `½[f(ν_y) − f(ν_z)]`.
pub fn key_rate_at(sigma_x2: f64, nu_y: f64, nu_z: f64, alpha: f64) -> f64 {
    let r = 0.5 * (gain_log_ratio(sigma_x2, nu_y, alpha) - gain_log_ratio(sigma_x2, nu_z, alpha));
    r.max(0.0)
}

/// `½ log2((α σ²ν + 1) / (α (σ²ν + 1)))`.
pub fn storage_rate_at(sigma_x2: f64, nu: f64, alpha: f64) -> f64 {
    let r = 0.5 * (-alpha.log2() - gain_log_ratio(sigma_x2, nu, alpha));
    r.max(0.0)
}

fn rate_point(g: &SaddleGains, sigma_x2: f64, alpha: f64, kind: RegionKind) -> RateTriple {
    let r_s = key_rate_at(sigma_x2, g.nu_y, g.nu_z, alpha);
    let r_l = storage_rate_at(sigma_x2, g.nu_y, alpha);
    let r_j = match kind {
        RegionKind::Gs => r_l,
        RegionKind::Cs => storage_rate_at(sigma_x2, g.nu_z, alpha),
    };
    RateTriple { r_s, r_j, r_l }
}

/// Corner point of the GS region at tuning parameter `alpha`.
pub fn gs_rate_point(m: &CompoundGaussianModel, alpha: f64) -> Result<RateTriple> {
    rate_point_kind(m, alpha, RegionKind::Gs)
}

/// Corner point of the CS region at tuning parameter `alpha`. The storage
/// rate uses the eavesdropper gain and equals the GS storage plus the key
/// rate.
pub fn cs_rate_point(m: &CompoundGaussianModel, alpha: f64) -> Result<RateTriple> {
    rate_point_kind(m, alpha, RegionKind::Cs)
}

pub fn rate_point_kind(m: &CompoundGaussianModel, alpha: f64, kind: RegionKind) -> Result<RateTriple> {
    check_alpha(alpha)?;
    let g = require_degraded(m)?;
    Ok(rate_point(&g, m.sigma_x2, alpha, kind))
}

fn check_storage(r_j: f64) -> Result<()> {
    if r_j >= 0.0 && !r_j.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "storage rate must be non-negative, got {r_j}"
        )))
    }
}

/// `1 / (2^{2R} + (2^{2R} − 1) σ²ν)`: the `α` whose storage rate is `r_j`.
fn invert_storage(sigma_x2: f64, nu: f64, r_j: f64) -> f64 {
    let t = 2.0 * r_j * LN2;
    1.0 / (t.exp() + t.exp_m1() * sigma_x2 * nu)
}

/// Tuning parameter at which the GS storage rate equals `r_j`. Underflows to
/// 0 for storage rates beyond roughly 500 bits.
pub fn alpha_from_storage(m: &CompoundGaussianModel, r_j: f64) -> Result<f64> {
    storage_to_alpha(m, r_j, RegionKind::Gs)
}

/// As [`alpha_from_storage`], for either model.
pub fn storage_to_alpha(m: &CompoundGaussianModel, r_j: f64, kind: RegionKind) -> Result<f64> {
    check_storage(r_j)?;
    let g = require_degraded(m)?;
    let nu = match kind {
        RegionKind::Gs => g.nu_y,
        RegionKind::Cs => g.nu_z,
    };
    Ok(invert_storage(m.sigma_x2, nu, r_j))
}

/// Largest GS key rate at storage rate `r_j`:
/// `½ log2((σ²ν_y(1 − 2^{−2R}) + σ²ν_z 2^{−2R} + 1) / (σ²ν_z + 1))`.
pub fn key_rate_vs_storage(m: &CompoundGaussianModel, r_j: f64) -> Result<f64> {
    check_storage(r_j)?;
    let g = require_degraded(m)?;
    let s2 = m.sigma_x2;
    let w = (-2.0 * r_j * LN2).exp();
    let num = -s2 * g.nu_y * (-2.0 * r_j * LN2).exp_m1() + s2 * g.nu_z * w;
    let r = 0.5 * (num.ln_1p() - (s2 * g.nu_z).ln_1p()) / LN2;
    Ok(r.max(0.0))
}

/// Largest CS key rate at storage rate `r_j`.
pub fn cs_key_rate_vs_storage(m: &CompoundGaussianModel, r_j: f64) -> Result<f64> {
    let alpha = storage_to_alpha(m, r_j, RegionKind::Cs)?;
    let g = saddle_gains(m);
    if alpha == 0.0 {
        return asymptotic_key_rate(m);
    }
    Ok(key_rate_at(m.sigma_x2, g.nu_y, g.nu_z, alpha))
}

/// Supremum of the key rate as storage grows without bound.
pub fn asymptotic_key_rate(m: &CompoundGaussianModel) -> Result<f64> {
    let g = require_degraded(m)?;
    let s2 = m.sigma_x2;
    Ok((0.5 * ((s2 * g.nu_y).ln_1p() - (s2 * g.nu_z).ln_1p()) / LN2).max(0.0))
}

/// Slack used when comparing a candidate triple with boundary rates.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Whether `t` lies in the GS or CS region.
///
/// All boundary rates are nonincreasing in `α`, so the storage and leakage
/// constraints hold exactly on an interval `[α_min, 1]` and the key-rate
/// constraint is easiest to meet at `α_min`. `α_min` is found by bisection
/// on `log2 α`.
pub fn membership(m: &CompoundGaussianModel, t: &RateTriple, kind: RegionKind) -> bool {
    if !(t.r_s >= 0.0 && t.r_j >= 0.0 && t.r_l >= 0.0) {
        return false;
    }
    let g = saddle_gains(m);
    if g.nu_y < g.nu_z {
        return t.r_s == 0.0;
    }
    let s2 = m.sigma_x2;
    let feasible = |alpha: f64| {
        let p = rate_point(&g, s2, alpha, kind);
        t.r_j + MEMBERSHIP_TOL >= p.r_j && t.r_l + MEMBERSHIP_TOL >= p.r_l
    };
    // bracket on e = -log2 α; α = 2^-1000 still has finite rates
    let (mut lo, mut hi) = (0.0f64, 1000.0f64);
    if !feasible((-hi).exp2()) {
        // α = 1 is always feasible for a non-negative triple
        while hi - lo > 1e-12 * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            if feasible((-mid).exp2()) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi = lo;
    }
    let alpha = (-hi).exp2();
    t.r_s <= key_rate_at(s2, g.nu_y, g.nu_z, alpha) + MEMBERSHIP_TOL
}

/// One point of a traced boundary curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub alpha: f64,
    pub rates: RateTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaCurve {
    pub kind: RegionKind,
    pub samples: Vec<CurveSample>,
}

pub const DEFAULT_CURVE_POINTS: usize = 200;
pub const CURVE_ALPHA_MIN: f64 = 1e-6;

/// `n` points log-spaced on `[lo, 1]`, ending at exactly 1.
pub fn log_alpha_grid(lo: f64, n: usize) -> Vec<f64> {
    let e0 = lo.log10();
    (0..n)
        .map(|i| {
            if i + 1 == n {
                1.0
            } else {
                10f64.powf(e0 * (1.0 - i as f64 / (n - 1) as f64))
            }
        })
        .collect()
}

/// Boundary curve sampled on a log-spaced `α` grid over `[1e-6, 1]`.
pub fn trace_curve(m: &CompoundGaussianModel, kind: RegionKind, n_points: usize) -> Result<AlphaCurve> {
    if n_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "a curve needs at least 2 points, got {n_points}"
        )));
    }
    let g = require_degraded(m)?;
    let samples = log_alpha_grid(CURVE_ALPHA_MIN, n_points)
        .into_iter()
        .map(|alpha| CurveSample {
            alpha,
            rates: rate_point(&g, m.sigma_x2, alpha, kind),
        })
        .collect();
    Ok(AlphaCurve { kind, samples })
}

impl AlphaCurve {
    /// CSV with header `alpha,r_s,r_j,r_l`, six significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,r_s,r_j,r_l\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{}\n",
                crate::fmt_sig(s.alpha),
                crate::fmt_sig(s.rates.r_s),
                crate::fmt_sig(s.rates.r_j),
                crate::fmt_sig(s.rates.r_l)
            ));
        }
        out
    }
}

/// Covariance of `(X, Y-blocks, Z-blocks)`, validated symmetric positive
/// definite.
#[derive(Debug, Clone, PartialEq)]
pub struct FullCovariance {
    sigma: DMatrix<f64>,
}

impl FullCovariance {
    pub fn new(sigma: DMatrix<f64>) -> Result<Self> {
        if !sigma.is_square() || sigma.nrows() < 2 {
            return Err(Error::DimensionMismatch(format!(
                "covariance must be square with at least 2 rows, got {}x{}",
                sigma.nrows(),
                sigma.ncols()
            )));
        }
        let scale = sigma.amax().max(1.0);
        for i in 0..sigma.nrows() {
            for j in 0..i {
                if (sigma[(i, j)] - sigma[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "covariance is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        if sigma.clone().cholesky().is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self { sigma })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.sigma
    }
}

/// Antenna count of every decoder and eavesdropper block, in covariance
/// order after the source row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDims {
    pub decoder: Vec<usize>,
    pub eve: Vec<usize>,
}

/// Whitens each observation block: with noise covariance
/// `Σ_N = Σ_Y − Σ_YX σ⁻² Σ_XY = C Cᵀ`, the gain becomes `C⁻¹ Σ_YX σ⁻²` and
/// the noise becomes white.
pub fn normalize_covariance(c: &FullCovariance, dims: &BlockDims) -> Result<CompoundGaussianModel> {
    let s = &c.sigma;
    let total: usize = dims.decoder.iter().chain(&dims.eve).sum();
    if total + 1 != s.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "blocks cover {} rows, covariance has {}",
            total + 1,
            s.nrows()
        )));
    }
    if dims.decoder.iter().chain(&dims.eve).any(|&d| d == 0) {
        return Err(Error::DimensionMismatch("empty observation block".into()));
    }
    let s2 = s[(0, 0)];
    let mut offset = 1;
    let mut normalize_block = |d: usize| -> Result<Vec<f64>> {
        let cross: DVector<f64> = s.view((offset, 0), (d, 1)).column(0).into_owned();
        let obs = s.view((offset, offset), (d, d)).into_owned();
        offset += d;
        let noise = obs - &cross * cross.transpose() / s2;
        let chol = noise.cholesky().ok_or(Error::NotPositiveDefinite)?;
        let a = chol
            .l()
            .solve_lower_triangular(&(cross / s2))
            .ok_or(Error::NotPositiveDefinite)?;
        Ok(a.iter().copied().collect())
    };
    let decoder: Vec<Vec<f64>> = dims
        .decoder
        .iter()
        .map(|&d| normalize_block(d))
        .collect::<Result<_>>()?;
    let eve: Vec<Vec<f64>> = dims.eve.iter().map(|&d| normalize_block(d)).collect::<Result<_>>()?;
    CompoundGaussianModel::new(s2, decoder, eve)
}

/// Per-state scalar power gains of the sufficient-statistic channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarGains {
    pub nu_y: Vec<f64>,
    pub nu_z: Vec<f64>,
}

pub fn scalarize(m: &CompoundGaussianModel) -> ScalarGains {
    let gain = |h: &Vec<f64>| h.iter().map(|v| v * v).sum::<f64>();
    ScalarGains {
        nu_y: m.decoder_gains.iter().map(gain).collect(),
        nu_z: m.eve_gains.iter().map(gain).collect(),
    }
}

/// Both sides of `det(a H Hᵀ + I) = a HᵀH + 1`; the left side by explicit
/// LU determinant.
pub fn wa_identity_check(a: f64, h: &[f64]) -> (f64, f64) {
    let n = h.len();
    let hv = DVector::from_column_slice(h);
    let m = DMatrix::<f64>::identity(n, n) + &hv * hv.transpose() * a;
    let lhs = m.lu().determinant();
    let rhs = a * hv.norm_squared() + 1.0;
    (lhs, rhs)
}

/// GS and CS corner points of the single-antenna, single-state model written
/// with the correlation coefficients `ρ²_XY` and `ρ²_XZ`.
pub fn single_antenna_region(
    sigma_x2: f64,
    h: f64,
    h_tilde: f64,
    alpha: f64,
) -> Result<(RateTriple, RateTriple)> {
    check_alpha(alpha)?;
    if !(sigma_x2 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "source variance must be positive, got {sigma_x2}"
        )));
    }
    if h * h < h_tilde * h_tilde {
        return Err(Error::NotDegraded {
            worst_decoder: h * h,
            best_eve: h_tilde * h_tilde,
        });
    }
    let rho2 = |g: f64| {
        let snr = sigma_x2 * g * g;
        snr / (snr + 1.0)
    };
    let (rxy, rxz) = (rho2(h), rho2(h_tilde));
    // α ρ² + 1 − ρ², accurate when ρ² is close to 1
    let mix = |r: f64| 1.0 - (1.0 - alpha) * r;
    let r_s = (0.5 * (mix(rxz).log2() - mix(rxy).log2())).max(0.0);
    let r_j_gs = (0.5 * (mix(rxy).log2() - alpha.log2())).max(0.0);
    let r_j_cs = (0.5 * (mix(rxz).log2() - alpha.log2())).max(0.0);
    Ok((
        RateTriple {
            r_s,
            r_j: r_j_gs,
            r_l: r_j_gs,
        },
        RateTriple {
            r_s,
            r_j: r_j_cs,
            r_l: r_j_gs,
        },
    ))
}

/// Source variance shared by the built-in numerical cases.
pub const CASE_SIGMA_X2: f64 = 5.0;

/// The three built-in cases: single antennas (1), three decoder antennas (2),
/// three decoder and four eavesdropper antennas (3).
pub fn builtin_case(case: usize) -> Result<CompoundGaussianModel> {
    let (h, e): (Vec<f64>, Vec<f64>) = match case {
        1 => (vec![0.95], vec![0.8]),
        2 => (vec![0.95; 3], vec![0.8]),
        3 => (vec![0.95; 3], vec![0.8, 0.8, 0.5, 0.5]),
        other => {
            return Err(Error::InvalidArgument(format!(
                "built-in cases are 1, 2 and 3, got {other}"
            )))
        }
    };
    CompoundGaussianModel::new(CASE_SIGMA_X2, vec![h], vec![e])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn case(i: usize) -> CompoundGaussianModel {
        builtin_case(i).unwrap()
    }

    #[test]
    fn power_gain_examples() {
        assert_abs_diff_eq!(power_gain(&[0.95]).unwrap(), 0.9025, epsilon = 1e-15);
        assert_abs_diff_eq!(power_gain(&[0.95, 0.95, 0.95]).unwrap(), 2.7075, epsilon = 1e-14);
        assert_eq!(power_gain(&[0.0; 5]).unwrap(), 0.0);
        assert!(power_gain(&[]).is_err());
    }

    #[test]
    fn saddle_index_examples() {
        assert_eq!(saddle_indices(&case(1)), (0, 0));
        let m = CompoundGaussianModel::new(5.0, vec![vec![0.95; 3], vec![0.95, 0.0, 0.0]], vec![vec![0.8, 0.0, 0.0, 0.0], vec![0.8, 0.8, 0.5, 0.5]]).unwrap();
        assert_eq!(saddle_indices(&m), (1, 1));
        // ties -> lowest index
        let m = CompoundGaussianModel::new(1.0, vec![vec![0.5], vec![-0.5]], vec![vec![0.1], vec![0.1]]).unwrap();
        assert_eq!(saddle_indices(&m), (0, 0));
    }

    #[test]
    fn degradedness_examples() {
        assert!(degradedness_check(&case(3)));
        let m = CompoundGaussianModel::scalar(5.0, 0.5, 0.8).unwrap();
        assert!(!degradedness_check(&m));
        let m = CompoundGaussianModel::scalar(5.0, 0.7, -0.7).unwrap();
        assert!(degradedness_check(&m));
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(CompoundGaussianModel::new(0.0, vec![vec![1.0]], vec![vec![0.5]]).is_err());
        assert!(CompoundGaussianModel::new(1.0, vec![], vec![vec![0.5]]).is_err());
        assert!(CompoundGaussianModel::new(1.0, vec![vec![1.0], vec![1.0, 2.0]], vec![vec![0.5]]).is_err());
        let json = r#"{"sigma_x2": -1, "decoder_gains": [[1]], "eve_gains": [[0.5]]}"#;
        assert!(serde_json::from_str::<CompoundGaussianModel>(json).is_err());
    }

    #[test]
    fn gs_point_case1() {
        let m = case(1);
        let p = gs_rate_point(&m, 0.5).unwrap();
        // direct evaluation of the closed forms
        let (s2, ny, nz, a) = (5.0f64, 0.9025f64, 0.64f64, 0.5f64);
        let rs = 0.5 * (((s2 * ny + 1.0) * (a * s2 * nz + 1.0)) / ((a * s2 * ny + 1.0) * (s2 * nz + 1.0))).log2();
        let rj = 0.5 * ((a * s2 * ny + 1.0) / (a * (s2 * ny + 1.0))).log2();
        assert_abs_diff_eq!(p.r_s, rs, epsilon = 1e-14);
        assert_abs_diff_eq!(p.r_j, rj, epsilon = 1e-14);
        assert_eq!(p.r_l, p.r_j);
        assert_abs_diff_eq!(p.r_s, 0.0338, epsilon = 1e-4);
        assert_abs_diff_eq!(p.r_j, 0.1203, epsilon = 1e-4);
    }

    #[test]
    fn alpha_one_is_origin() {
        for i in 1..=3 {
            let m = case(i);
            for kind in [RegionKind::Gs, RegionKind::Cs] {
                let p = rate_point_kind(&m, 1.0, kind).unwrap();
                assert_eq!(p, RateTriple::ZERO);
            }
        }
    }

    #[test]
    fn rate_point_errors() {
        assert!(gs_rate_point(&case(1), 0.0).is_err());
        assert!(gs_rate_point(&case(1), 1.5).is_err());
        let m = CompoundGaussianModel::scalar(5.0, 0.5, 0.8).unwrap();
        assert!(matches!(gs_rate_point(&m, 0.5), Err(Error::NotDegraded { .. })));
        assert!(matches!(cs_rate_point(&m, 0.5), Err(Error::NotDegraded { .. })));
    }

    #[test]
    fn cs_matches_gs_plus_key() {
        let m = case(1);
        let g = gs_rate_point(&m, 0.5).unwrap();
        let c = cs_rate_point(&m, 0.5).unwrap();
        assert_abs_diff_eq!(c.r_j, g.r_j + g.r_s, epsilon = 1e-12);
        assert_eq!(c.r_l, g.r_l);
        assert_abs_diff_eq!(c.r_l, 0.1203, epsilon = 1e-4);
    }

    #[test]
    fn asymptotic_values() {
        let r3 = asymptotic_key_rate(&case(3)).unwrap();
        assert_abs_diff_eq!(r3, 0.2771, epsilon = 5e-5);
        let r2 = asymptotic_key_rate(&case(2)).unwrap();
        let oracle = 0.5 * ((5.0 * 2.7075 + 1.0) / (5.0 * 0.64 + 1.0f64)).log2();
        assert_abs_diff_eq!(r2, oracle, epsilon = 1e-14);
        assert_abs_diff_eq!(r2, 0.8957, epsilon = 1e-4);
        let eq = CompoundGaussianModel::scalar(5.0, 0.7, 0.7).unwrap();
        assert_eq!(asymptotic_key_rate(&eq).unwrap(), 0.0);
        let bad = CompoundGaussianModel::scalar(5.0, 0.5, 0.8).unwrap();
        assert!(asymptotic_key_rate(&bad).is_err());
    }

    #[test]
    fn storage_inversion_examples() {
        let m = case(1);
        assert_eq!(alpha_from_storage(&m, 0.0).unwrap(), 1.0);
        let rj = gs_rate_point(&m, 0.5).unwrap().r_j;
        assert_abs_diff_eq!(rj, 0.12028, epsilon = 5e-5);
        assert_abs_diff_eq!(alpha_from_storage(&m, rj).unwrap(), 0.5, epsilon = 1e-12);
        let big = alpha_from_storage(&m, 20.0).unwrap();
        let limit = 1.0 / (2f64.powi(40) * (1.0 + 5.0 * 0.9025));
        assert_abs_diff_eq!(big / limit, 1.0, epsilon = 1e-9);
        assert!(alpha_from_storage(&m, -0.1).is_err());
    }

    #[test]
    fn key_rate_vs_storage_examples() {
        let m3 = case(3);
        assert_eq!(key_rate_vs_storage(&m3, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(key_rate_vs_storage(&m3, 50.0).unwrap(), 0.2771, epsilon = 5e-5);
        let oracle = 0.5 * (5.5125f64 / 4.2).log2();
        assert_abs_diff_eq!(key_rate_vs_storage(&case(1), 50.0).unwrap(), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle, 0.1962, epsilon = 1e-4);
        for &a in &[0.9, 0.5, 0.1, 1e-3] {
            let p = gs_rate_point(&m3, a).unwrap();
            assert_abs_diff_eq!(key_rate_vs_storage(&m3, p.r_j).unwrap(), p.r_s, epsilon = 1e-9);
        }
        assert!(key_rate_vs_storage(&m3, -1.0).is_err());
    }

    #[test]
    fn cs_key_rate_vs_storage_consistent() {
        let m = case(2);
        for &a in &[0.9, 0.3, 1e-4] {
            let p = cs_rate_point(&m, a).unwrap();
            assert_abs_diff_eq!(cs_key_rate_vs_storage(&m, p.r_j).unwrap(), p.r_s, epsilon = 1e-9);
        }
    }

    #[test]
    fn membership_examples() {
        let m = case(3);
        for kind in [RegionKind::Gs, RegionKind::Cs] {
            assert!(membership(&m, &RateTriple { r_s: 0.0, r_j: 0.0, r_l: 0.0 }, kind));
            assert!(membership(&m, &RateTriple { r_s: 0.0, r_j: 3.0, r_l: 0.2 }, kind));
            let sup = asymptotic_key_rate(&m).unwrap();
            assert!(!membership(&m, &RateTriple { r_s: sup + 0.01, r_j: 100.0, r_l: 100.0 }, kind));
            let b = rate_point_kind(&m, 0.5, kind).unwrap();
            assert!(membership(&m, &b, kind));
            let inside = RateTriple { r_s: b.r_s * 0.9, ..b };
            assert!(membership(&m, &inside, kind));
            let outside = RateTriple { r_s: b.r_s + 1e-3, ..b };
            assert!(!membership(&m, &outside, kind));
            assert!(!membership(&m, &RateTriple { r_s: -0.1, r_j: 1.0, r_l: 1.0 }, kind));
        }
        let bad = CompoundGaussianModel::scalar(5.0, 0.5, 0.8).unwrap();
        assert!(membership(&bad, &RateTriple { r_s: 0.0, r_j: 1.0, r_l: 0.0 }, RegionKind::Gs));
        assert!(!membership(&bad, &RateTriple { r_s: 0.01, r_j: 9.0, r_l: 9.0 }, RegionKind::Gs));
    }

    #[test]
    fn trace_curve_shape() {
        let c = trace_curve(&case(3), RegionKind::Gs, 200).unwrap();
        assert_eq!(c.samples.len(), 200);
        let last = c.samples.last().unwrap();
        assert_eq!(last.alpha, 1.0);
        assert_eq!(last.rates, RateTriple::ZERO);
        assert_abs_diff_eq!(c.samples[0].alpha, 1e-6, epsilon = 1e-18);
        for w in c.samples.windows(2) {
            assert!(w[0].alpha < w[1].alpha);
            assert!(w[0].rates.r_s >= w[1].rates.r_s);
            // key rate increases with storage along the curve
            assert!(w[0].rates.r_j > w[1].rates.r_j);
        }
        let max_rs = c.samples.iter().map(|s| s.rates.r_s).fold(0.0, f64::max);
        assert_abs_diff_eq!(max_rs, 0.2771, epsilon = 5e-4);
        assert!(trace_curve(&case(3), RegionKind::Gs, 1).is_err());
    }

    #[test]
    fn csv_format() {
        let c = trace_curve(&case(1), RegionKind::Gs, 3).unwrap();
        let csv = c.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "alpha,r_s,r_j,r_l");
        assert_eq!(lines[3], "1,0,0,0");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn wa_identity_examples() {
        let (l, r) = wa_identity_check(0.0, &[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(l, 1.0, epsilon = 1e-15);
        assert_eq!(r, 1.0);
        let (l, r) = wa_identity_check(3.0, &[1.0]);
        assert_abs_diff_eq!(l, 4.0, epsilon = 1e-15);
        assert_eq!(r, 4.0);
        let h = [0.3, -1.2, 0.7, 0.05, 2.1, -0.4];
        let (l, r) = wa_identity_check(2.5, &h);
        assert!((l - r).abs() <= 1e-12 * r.max(1.0));
    }

    #[test]
    fn scalarize_case1() {
        let g = scalarize(&case(1));
        assert_abs_diff_eq!(g.nu_y[0], 0.9025, epsilon = 1e-15);
        assert_abs_diff_eq!(g.nu_z[0], 0.64, epsilon = 1e-15);
    }

    #[test]
    fn normalize_diagonal_is_zero_gain() {
        let sigma = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.5, 0.7, 3.0]));
        let c = FullCovariance::new(sigma).unwrap();
        let m = normalize_covariance(&c, &BlockDims { decoder: vec![2], eve: vec![1] }).unwrap();
        assert!(m.decoder_gains()[0].iter().all(|&g| g == 0.0));
        assert_eq!(m.eve_gains()[0], vec![0.0]);
    }

    #[test]
    fn normalize_round_trip() {
        let m = case(3);
        let c = m.induced_covariance();
        let back = normalize_covariance(&c, &m.block_dims()).unwrap();
        let (a, b) = (scalarize(&m), scalarize(&back));
        for (x, y) in a.nu_y.iter().zip(&b.nu_y).chain(a.nu_z.iter().zip(&b.nu_z)) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-10);
        }
    }

    #[test]
    fn not_positive_definite_rejected() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert_eq!(FullCovariance::new(sigma), Err(Error::NotPositiveDefinite));
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.2, 1.0]);
        assert!(FullCovariance::new(asym).is_err());
    }

    #[test]
    fn single_antenna_examples() {
        let (g, c) = single_antenna_region(5.0, 0.95, 0.8, 1.0).unwrap();
        assert_eq!(g, RateTriple::ZERO);
        assert_eq!(c, RateTriple::ZERO);
        let (g, c) = single_antenna_region(5.0, 0.95, 0.8, 0.5).unwrap();
        let m = case(1);
        let (gg, cc) = (gs_rate_point(&m, 0.5).unwrap(), cs_rate_point(&m, 0.5).unwrap());
        for (a, b) in [(g, gg), (c, cc)] {
            assert_abs_diff_eq!(a.r_s, b.r_s, epsilon = 1e-12);
            assert_abs_diff_eq!(a.r_j, b.r_j, epsilon = 1e-12);
            assert_abs_diff_eq!(a.r_l, b.r_l, epsilon = 1e-12);
        }
        // no eavesdropper information: R_S = ½ log2((σ²h²+1)/(ασ²h²+1))
        let (g, _) = single_antenna_region(5.0, 0.95, 0.0, 0.25).unwrap();
        let want = 0.5 * ((5.0 * 0.9025 + 1.0) / (0.25 * 5.0 * 0.9025 + 1.0f64)).log2();
        assert_abs_diff_eq!(g.r_s, want, epsilon = 1e-14);
        assert!(single_antenna_region(5.0, 0.95, 0.8, 0.0).is_err());
    }

    #[test]
    fn region_kind_parse() {
        assert_eq!("GS".parse::<RegionKind>().unwrap(), RegionKind::Gs);
        assert_eq!("cs".parse::<RegionKind>().unwrap(), RegionKind::Cs);
        assert!("xs".parse::<RegionKind>().is_err());
    }
}
