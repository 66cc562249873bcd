//! Tables for the built-in Gaussian cases: key rate against storage for all
//! three cases, the `α` sweep of case 3, and the GS/CS comparison of case 2.

use crate::error::{Error, Result};
use crate::gaussian::{
    builtin_case, cs_key_rate_vs_storage, cs_rate_point, gs_rate_point, key_rate_vs_storage, log_alpha_grid,
    storage_to_alpha, RegionKind, CURVE_ALPHA_MIN,
};

pub const STORAGE_MIN: f64 = 1e-3;
pub const STORAGE_MAX: f64 = 50.0;
pub const POINTS: usize = 200;

/// Numeric table with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self
            .columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| Error::InvalidArgument(format!("table {} has no column {name}", self.name)))?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    /// CSV with shortest round-trip float formatting.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// `0` followed by `POINTS − 1` log-spaced storage rates on
/// `[STORAGE_MIN, STORAGE_MAX]`.
pub fn storage_grid() -> Vec<f64> {
    let (a, b) = (STORAGE_MIN.log10(), STORAGE_MAX.log10());
    let m = POINTS - 1;
    std::iter::once(0.0)
        .chain((0..m).map(|i| {
            if i + 1 == m {
                STORAGE_MAX
            } else {
                10f64.powf(a + (b - a) * i as f64 / (m - 1) as f64)
            }
        }))
        .collect()
}

/// Key rate against storage rate for cases 1 to 3.
pub fn key_vs_storage() -> Result<Table> {
    let cases = [builtin_case(1)?, builtin_case(2)?, builtin_case(3)?];
    let rows = storage_grid()
        .into_iter()
        .map(|r_j| {
            let mut row = vec![r_j];
            for c in &cases {
                row.push(key_rate_vs_storage(c, r_j)?);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(Table {
        name: "fig3a",
        columns: vec!["r_j", "r_s_case1", "r_s_case2", "r_s_case3"],
        rows,
    })
}

/// Case 3 GS key and storage rates along a log-spaced `α` grid.
pub fn alpha_sweep() -> Result<Table> {
    let m = builtin_case(3)?;
    let rows = log_alpha_grid(CURVE_ALPHA_MIN, POINTS)
        .into_iter()
        .map(|a| {
            let p = gs_rate_point(&m, a)?;
            Ok(vec![a, p.r_s, p.r_j])
        })
        .collect::<Result<_>>()?;
    Ok(Table {
        name: "fig3b",
        columns: vec!["alpha", "r_s", "r_j"],
        rows,
    })
}

/// Case 2 key rate of both models at a shared storage rate.
pub fn gs_cs_key_rates() -> Result<Table> {
    let m = builtin_case(2)?;
    let rows = storage_grid()
        .into_iter()
        .map(|r_j| Ok(vec![r_j, key_rate_vs_storage(&m, r_j)?, cs_key_rate_vs_storage(&m, r_j)?]))
        .collect::<Result<_>>()?;
    Ok(Table {
        name: "fig3c",
        columns: vec!["r_j", "r_s_gs", "r_s_cs"],
        rows,
    })
}

/// Case 2 leakage of both models at a shared storage rate.
pub fn gs_cs_leakage() -> Result<Table> {
    let m = builtin_case(2)?;
    let rows = storage_grid()
        .into_iter()
        .map(|r_j| {
            let gs = gs_rate_point(&m, storage_to_alpha(&m, r_j, RegionKind::Gs)?)?;
            let cs = cs_rate_point(&m, storage_to_alpha(&m, r_j, RegionKind::Cs)?)?;
            Ok(vec![r_j, gs.r_l, cs.r_l])
        })
        .collect::<Result<_>>()?;
    Ok(Table {
        name: "fig3d",
        columns: vec!["r_j", "r_l_gs", "r_l_cs"],
        rows,
    })
}

pub fn all() -> Result<Vec<Table>> {
    Ok(vec![key_vs_storage()?, alpha_sweep()?, gs_cs_key_rates()?, gs_cs_leakage()?])
}
