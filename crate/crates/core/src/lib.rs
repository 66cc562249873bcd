//! Secret-key, storage and privacy-leakage rate regions for key generation
//! from private identifiers (PUF responses, biometrics) observed through
//! compound channels.
//!
//! - [`info`]: exact entropies and mutual informations on dense joints.
//! - [`gaussian`]: closed-form GS/CS capacity regions for Gaussian sources.
//! - [`discrete`]: inner/outer bound evaluation and search for finite
//!   alphabets.
//! - [`binning`]: a block-length-`n` executable of the two-layer random
//!   binning scheme with exact and Monte-Carlo metrics.
//! - [`selfcheck`]: identity and property checks run by `pufkey selfcheck`.
//!
//! Rates are in bits per source symbol.

pub mod binning;
pub mod discrete;
pub mod error;
pub mod figures;
pub mod gaussian;
pub mod info;
pub mod selfcheck;

use serde::{Deserialize, Serialize};

pub use error::{Error, Result};
pub use gaussian::{CompoundGaussianModel, RegionKind};
pub use info::{CondDist, FiniteDist, JointDist};

/// Secret-key, storage and privacy-leakage rates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RateTriple {
    pub r_s: f64,
    pub r_j: f64,
    pub r_l: f64,
}

impl RateTriple {
    pub const ZERO: RateTriple = RateTriple {
        r_s: 0.0,
        r_j: 0.0,
        r_l: 0.0,
    };

    pub fn new(r_s: f64, r_j: f64, r_l: f64) -> Result<Self> {
        if r_s >= 0.0 && r_j >= 0.0 && r_l >= 0.0 {
            Ok(Self { r_s, r_j, r_l })
        } else {
            Err(Error::InvalidArgument(format!(
                "rates must be non-negative, got ({r_s}, {r_j}, {r_l})"
            )))
        }
    }
}

/// Formats `x` with six significant digits, `%g` style.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        }
    } else {
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{m}e{exp}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(0.277148123), "0.277148");
        assert_eq!(fmt_sig(123456.7), "123457");
        assert_eq!(fmt_sig(1234567.0), "1.23457e6");
        assert_eq!(fmt_sig(1e-6), "1e-6");
        assert_eq!(fmt_sig(-0.5), "-0.5");
        assert_eq!(fmt_sig(19.93), "19.93");
    }

    #[test]
    fn negative_rates_rejected() {
        assert!(RateTriple::new(-0.1, 0.0, 0.0).is_err());
        assert!(RateTriple::new(0.1, 0.2, 0.3).is_ok());
    }
}
