//! Exact degrees-of-freedom accounting.
//!
//! When every transmitted dimension aligns with dimensions of `l - 1` other
//! transmitters at the remaining `K - l` receivers, the achievable sum DoF is
//!
//! ```text
//!            K * l!
//! bound = ----------------
//!         K * l! - K + l
//! ```
//!
//! which is largest at `l = 2`, where it equals `2K / (K + 2)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numfmt::{rational, rational_text};
use crate::scheme::SchemeConfig;

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

fn ratio(n: usize, d: usize) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Sum-DoF bound for alignment sets of size `l`, `2 <= l <= K`.
pub fn bound(users: usize, l: usize) -> Result<BigRational> {
    if users < 3 {
        return Err(Error::DegenerateScheme(users));
    }
    if l < 2 || l > users {
        return Err(Error::AlignmentSetOutOfRange { users, l });
    }
    let kl = BigInt::from(users) * factorial(l);
    let den = &kl - BigInt::from(users) + BigInt::from(l);
    Ok(BigRational::new(kl, den))
}

/// `2K / (K + 2)`.
pub fn target_dof(users: usize) -> BigRational {
    ratio(2 * users, users + 2)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub l: usize,
    #[serde(with = "rational_text")]
    pub bound: BigRational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DofReport {
    #[serde(rename = "K")]
    pub users: usize,
    pub l_sweep: Vec<SweepPoint>,
    pub l_star: usize,
    /// `K(K-1) / m` for the constructed scheme.
    #[serde(with = "rational_text")]
    pub achieved: BigRational,
    #[serde(with = "rational_text")]
    pub baseline_tdma: BigRational,
}

/// Evaluates the bound for `l = 2..=K`; ties go to the smaller `l`.
pub fn sweep(users: usize) -> Result<DofReport> {
    let config = SchemeConfig::new(users)?;
    let l_sweep = (2..=users)
        .map(|l| Ok(SweepPoint { l, bound: bound(users, l)? }))
        .collect::<Result<Vec<_>>>()?;
    let mut best = &l_sweep[0];
    for p in &l_sweep[1..] {
        if p.bound > best.bound {
            best = p;
        }
    }
    Ok(DofReport {
        users,
        l_star: best.l,
        l_sweep: l_sweep.clone(),
        achieved: ratio(config.total_symbols(), config.channel_uses),
        baseline_tdma: BigRational::one(),
    })
}

impl DofReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Rows `K,l,bound_numerator,bound_denominator`.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        write_sweep_csv(std::slice::from_ref(self), w)
    }
}

pub fn write_sweep_csv<W: std::io::Write>(reports: &[DofReport], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["K", "l", "bound_numerator", "bound_denominator"])?;
    for r in reports {
        for p in &r.l_sweep {
            out.write_record([
                r.users.to_string(),
                p.l.to_string(),
                p.bound.numer().to_string(),
                p.bound.denom().to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Text form `p/q`, for display.
pub fn display(q: &BigRational) -> String {
    rational(q)
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
