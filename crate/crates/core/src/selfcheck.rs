//! Deterministic identity and property checks over randomly drawn Gaussian
//! models. A [`Mutation`] perturbs one library quantity before comparison so
//! the matching check can be shown to fail.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{
    alpha_from_storage, cs_rate_point, gain_log_ratio, gs_rate_point, log_alpha_grid, normalize_covariance,
    rate_point_kind, scalarize, single_antenna_region, storage_to_alpha, wa_identity_check, BlockDims,
    CompoundGaussianModel, FullCovariance, RegionKind,
};
use crate::info::gaussian_scalar_mi;

const SEED: u64 = 0x5eed;
const PERTURBATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    WaDeterminant,
    Scalarization,
    Normalization,
    SingleAntenna,
    CsStorage,
    AlphaInversion,
    Monotonicity,
}

impl Mutation {
    pub const ALL: [Mutation; 7] = [
        Mutation::WaDeterminant,
        Mutation::Scalarization,
        Mutation::Normalization,
        Mutation::SingleAntenna,
        Mutation::CsStorage,
        Mutation::AlphaInversion,
        Mutation::Monotonicity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mutation::WaDeterminant => "wa-determinant",
            Mutation::Scalarization => "scalarization",
            Mutation::Normalization => "normalization",
            Mutation::SingleAntenna => "single-antenna",
            Mutation::CsStorage => "cs-storage",
            Mutation::AlphaInversion => "alpha-inversion",
            Mutation::Monotonicity => "monotonicity",
        }
    }

    /// Name of the check this mutation should break.
    pub fn target(self) -> &'static str {
        match self {
            Mutation::WaDeterminant => "weinstein-aronszajn",
            Mutation::Scalarization => "scalarization",
            Mutation::Normalization => "normalize-covariance",
            Mutation::SingleAntenna => "single-antenna",
            Mutation::CsStorage => "gs-cs-identities",
            Mutation::AlphaInversion => "alpha-roundtrip",
            Mutation::Monotonicity => "monotonicity",
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mutation::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown mutation {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub cases: usize,
    /// Largest observed error (or violation, for monotonicity).
    pub worst: f64,
    pub tol: f64,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<22} cases={:<5} worst={:.3e} tol={:.0e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst,
            self.tol
        )
    }
}

struct Ctx {
    rng: ChaCha8Rng,
    mutation: Option<Mutation>,
}

impl Ctx {
    fn bump(&self, m: Mutation, x: f64) -> f64 {
        if self.mutation == Some(m) {
            x * (1.0 + PERTURBATION) + PERTURBATION
        } else {
            x
        }
    }

    fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    fn gains(&mut self, dim: usize) -> Vec<f64> {
        (0..dim).map(|_| self.normal()).collect()
    }

    /// Degraded model with `K, L ∈ 1..=3` states of dimension up to 8.
    fn model(&mut self) -> CompoundGaussianModel {
        let sigma_x2 = self.rng.random_range(0.1..10.0);
        let (k, l) = (self.rng.random_range(1..=3), self.rng.random_range(1..=3));
        let (dy, dz) = (self.rng.random_range(1..=8), self.rng.random_range(1..=8));
        let decoder: Vec<Vec<f64>> = (0..k).map(|_| self.gains(dy)).collect();
        let mut eve: Vec<Vec<f64>> = (0..l).map(|_| self.gains(dz)).collect();
        let power = |h: &Vec<f64>| h.iter().map(|v| v * v).sum::<f64>();
        let worst = decoder.iter().map(power).fold(f64::INFINITY, f64::min);
        let best = eve.iter().map(power).fold(0.0, f64::max);
        let target = self.rng.random_range(0.0..1.0) * worst;
        let scale = if best > 0.0 { (target / best).sqrt() } else { 0.0 };
        for h in &mut eve {
            h.iter_mut().for_each(|v| *v *= scale);
        }
        CompoundGaussianModel::new(sigma_x2, decoder, eve).expect("generated model is valid")
    }

    fn alpha(&mut self) -> f64 {
        10f64.powf(self.rng.random_range(-6.0..0.0))
    }
}

fn outcome(name: &'static str, cases: usize, worst: f64, tol: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst <= tol,
        cases,
        worst,
        tol,
    }
}

fn weinstein_aronszajn(c: &mut Ctx) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let cases = 1000;
    for i in 0..cases {
        let dim = 1 + i % 8;
        let a = c.rng.random_range(1e-3..10.0);
        let h = c.gains(dim);
        let (lhs, rhs) = wa_identity_check(a, &h);
        let rhs = c.bump(Mutation::WaDeterminant, rhs);
        worst = worst.max((lhs - rhs).abs() / rhs.abs());
    }
    outcome("weinstein-aronszajn", cases, worst, 1e-12)
}

/// `½ log2 det(I + σ² h hᵀ)` by LU: the vector-channel mutual information.
fn vector_mi(sigma_x2: f64, h: &[f64]) -> f64 {
    let hv = DVector::from_column_slice(h);
    let m = DMatrix::<f64>::identity(h.len(), h.len()) + &hv * hv.transpose() * sigma_x2;
    0.5 * m.lu().determinant().log2()
}

fn scalarization(c: &mut Ctx) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for _ in 0..100 {
        let m = c.model();
        let g = scalarize(&m);
        let pairs = m.decoder_gains().iter().zip(&g.nu_y).chain(m.eve_gains().iter().zip(&g.nu_z));
        for (h, &nu) in pairs {
            let scalar = c.bump(Mutation::Scalarization, gaussian_scalar_mi(m.sigma_x2(), nu).expect("valid"));
            worst = worst.max((scalar - vector_mi(m.sigma_x2(), h)).abs());
            cases += 1;
        }
    }
    outcome("scalarization", cases, worst, 1e-12)
}

/// Random covariance of `(X, Y_1, .., Y_K)` with correlated, coloured
/// noise; returns it with its block sizes.
fn random_covariance(c: &mut Ctx) -> (DMatrix<f64>, BlockDims) {
    let sigma_x2 = c.rng.random_range(0.5..5.0);
    let (k, l) = (c.rng.random_range(1..=2), c.rng.random_range(1..=2));
    let (dy, dz) = (c.rng.random_range(1..=4), c.rng.random_range(1..=4));
    let dims = BlockDims {
        decoder: vec![dy; k],
        eve: vec![dz; l],
    };
    let d = k * dy + l * dz;
    let a = DVector::from_iterator(d, (0..d).map(|_| c.normal()));
    let b = DMatrix::from_fn(d, d, |_, _| c.normal());
    let noise = &b * b.transpose() + DMatrix::identity(d, d) * 0.1;
    let mut s = DMatrix::zeros(d + 1, d + 1);
    s[(0, 0)] = sigma_x2;
    let cross = &a * sigma_x2;
    for i in 0..d {
        s[(i + 1, 0)] = cross[i];
        s[(0, i + 1)] = cross[i];
    }
    let obs = &a * a.transpose() * sigma_x2 + noise;
    s.view_mut((1, 1), (d, d)).copy_from(&obs);
    (s, dims)
}

/// `½ log2(σ² / Var(X | Y))` straight from the covariance.
fn block_mi(s: &DMatrix<f64>, offset: usize, d: usize) -> f64 {
    let sx = s[(0, 0)];
    let cross = s.view((offset, 0), (d, 1)).into_owned();
    let obs = s.view((offset, offset), (d, d)).into_owned();
    let solved = obs.cholesky().expect("positive definite").solve(&cross);
    let cond = sx - (cross.transpose() * solved)[(0, 0)];
    0.5 * (sx / cond).log2()
}

fn covariance_normalization(c: &mut Ctx) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let cases = 100;
    for _ in 0..cases {
        let (s, dims) = random_covariance(c);
        let model = normalize_covariance(&FullCovariance::new(s.clone()).expect("valid"), &dims).expect("normalizes");
        let g = scalarize(&model);
        let mut offset = 1;
        for (&d, &nu) in dims.decoder.iter().chain(&dims.eve).zip(g.nu_y.iter().chain(&g.nu_z)) {
            let mi = c.bump(Mutation::Normalization, gaussian_scalar_mi(model.sigma_x2(), nu).expect("valid"));
            worst = worst.max((mi - block_mi(&s, offset, d)).abs());
            offset += d;
        }
    }
    outcome("normalize-covariance", cases, worst, 1e-10)
}

fn single_antenna(c: &mut Ctx) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let cases = 100;
    for _ in 0..cases {
        let sigma_x2 = c.rng.random_range(0.1..10.0);
        let h = c.normal();
        let ht = h * c.rng.random_range(-1.0..1.0);
        let alpha = c.alpha();
        let (gs, cs) = single_antenna_region(sigma_x2, h, ht, alpha).expect("degraded");
        let m = CompoundGaussianModel::scalar(sigma_x2, h, ht).expect("valid");
        let (gs2, cs2) = (gs_rate_point(&m, alpha).expect("ok"), cs_rate_point(&m, alpha).expect("ok"));
        let r_s = c.bump(Mutation::SingleAntenna, gs.r_s);
        for (a, b) in [
            (r_s, gs2.r_s),
            (gs.r_j, gs2.r_j),
            (gs.r_l, gs2.r_l),
            (cs.r_s, cs2.r_s),
            (cs.r_j, cs2.r_j),
            (cs.r_l, cs2.r_l),
        ] {
            worst = worst.max((a - b).abs());
        }
    }
    outcome("single-antenna", cases, worst, 1e-12)
}

fn gs_cs_identities(c: &mut Ctx) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let cases = 1000;
    for _ in 0..cases {
        let m = c.model();
        let alpha = c.alpha();
        let gs = gs_rate_point(&m, alpha).expect("degraded");
        let cs = cs_rate_point(&m, alpha).expect("degraded");
        let cs_rj = c.bump(Mutation::CsStorage, cs.r_j);
        worst = worst.max((cs_rj - gs.r_j - gs.r_s).abs()).max((cs.r_l - gs.r_l).abs());
    }
    outcome("gs-cs-identities", cases, worst, 1e-10)
}

fn alpha_roundtrip(c: &mut Ctx) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let cases = 1000;
    for i in 0..cases {
        let m = c.model();
        let kind = if i % 2 == 0 { RegionKind::Gs } else { RegionKind::Cs };
        let alpha = c.alpha();
        let r_j = rate_point_kind(&m, alpha, kind).expect("degraded").r_j;
        let back = c.bump(Mutation::AlphaInversion, storage_to_alpha(&m, r_j, kind).expect("valid"));
        worst = worst.max((back - alpha).abs() / alpha);
        let r = c.rng.random_range(0.0..20.0);
        let a = alpha_from_storage(&m, r).expect("valid");
        worst = worst.max((gs_rate_point(&m, a).expect("ok").r_j - r).abs());
    }
    outcome("alpha-roundtrip", cases, worst, 1e-9)
}

fn monotonicity(c: &mut Ctx) -> CheckOutcome {
    let grid = log_alpha_grid(1e-6, 200);
    let mut worst: f64 = 0.0;
    let cases = 100;
    for _ in 0..cases {
        let m = c.model();
        for kind in [RegionKind::Gs, RegionKind::Cs] {
            let pts: Vec<_> = grid.iter().map(|&a| rate_point_kind(&m, a, kind).expect("ok")).collect();
            for w in pts.windows(2) {
                let r_s = c.bump(Mutation::Monotonicity, w[1].r_s);
                // grid is increasing in α: every rate must not increase
                worst = worst
                    .max(r_s - w[0].r_s)
                    .max(w[1].r_j - w[0].r_j)
                    .max(w[1].r_l - w[0].r_l);
            }
        }
        // f(ν, α) nondecreasing in ν
        let s2 = m.sigma_x2();
        for &a in grid.iter().step_by(20) {
            let vals: Vec<f64> = (0..50).map(|i| gain_log_ratio(s2, i as f64 * 0.2, a)).collect();
            for w in vals.windows(2) {
                worst = worst.max(w[0] - w[1]);
            }
        }
    }
    outcome("monotonicity", cases, worst, 1e-12)
}

/// Runs every check; verdicts depend only on the fixed internal seed.
pub fn run(mutation: Option<Mutation>) -> Vec<CheckOutcome> {
    let checks: [fn(&mut Ctx) -> CheckOutcome; 7] = [
        weinstein_aronszajn,
        scalarization,
        covariance_normalization,
        single_antenna,
        gs_cs_identities,
        alpha_roundtrip,
        monotonicity,
    ];
    checks
        .iter()
        .enumerate()
        .map(|(i, check)| {
            let mut rng = ChaCha8Rng::seed_from_u64(SEED);
            rng.set_stream(i as u64);
            check(&mut Ctx { rng, mutation })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_run_passes() {
        for o in run(None) {
            assert!(o.passed, "{o}");
        }
    }

    #[test]
    fn each_mutation_breaks_its_check() {
        for m in Mutation::ALL {
            let out = run(Some(m));
            for o in &out {
                assert_eq!(o.passed, o.name != m.target(), "{m}: {o}");
            }
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(run(None), run(None));
    }

    #[test]
    fn mutation_names_round_trip() {
        for m in Mutation::ALL {
            assert_eq!(m.as_str().parse::<Mutation>().unwrap(), m);
        }
        assert!("nope".parse::<Mutation>().is_err());
    }
}
