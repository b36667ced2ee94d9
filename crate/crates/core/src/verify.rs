//! Decodability checks for a constructed scheme.
//!
//! At receiver `j` the block is split into the desired columns
//! `diag(H_jj) u[j][d]` and the interference columns `diag(H_ji) u[i][d]`,
//! `i != j`. A scheme is decodable at `j` when
//!
//! 1. the `K-1` desired columns are independent,
//! 2. the `(K-1)^2` interference columns span only `K(K-1)/2` dimensions, and
//! 3. desired and interference together span all `m` channel uses.
//!
//! Interference columns from the two owners of a pair that excludes `j` are
//! exact multiples of each other (the whole support sees mode 2 at `j`), so
//! the basis used for decoding keeps one of them. Which columns merge is read
//! off the pair map; [`ReceiverDecomposition::max_alignment_residual`]
//! cross-checks it numerically.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::exact::{gauss_rational_rank, GaussRational};
use crate::rng::{stream, trial_seed, Purpose};
use crate::scheme::{BeamSet, PatternMatrix, Scheme, SchemeConfig};

pub type CMatrix = DMatrix<Complex64>;

/// Threshold below which singular values count as zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RankTolerance {
    /// `max(rows, cols) * eps * sigma_max`
    #[default]
    Default,
    Absolute(f64),
    /// `factor * sigma_max`
    Relative(f64),
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Numerical rank.
pub fn rank_of(m: &CMatrix, tol: RankTolerance) -> Result<usize> {
    let sv = singular_values(m)?;
    let top = sv.first().copied().unwrap_or(0.0);
    let threshold = match tol {
        RankTolerance::Default => m.nrows().max(m.ncols()) as f64 * f64::EPSILON * top,
        RankTolerance::Absolute(t) => t,
        RankTolerance::Relative(f) => f * top,
    };
    Ok(sv.iter().filter(|&&s| s > threshold).count())
}

/// Where a basis column came from. Sources are `(user, dim)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisColumn {
    /// Two interferers whose columns coincide up to scale; `kept` is used.
    Aligned { kept: (usize, usize), merged: (usize, usize) },
    /// The interferer's half of the vector it shares with the receiver's
    /// own user.
    Single { source: (usize, usize) },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Ranks {
    pub desired: usize,
    pub interference: usize,
    pub combined: usize,
}

/// The desired / interference split at one receiver.
#[derive(Debug, Clone)]
pub struct ReceiverDecomposition {
    pub rx: usize,
    /// `m x (K-1)`, column `d` carries `s[rx][d]`.
    pub desired: CMatrix,
    /// `m x (K-1)^2`, columns labelled by `raw_sources`.
    pub interference_raw: CMatrix,
    pub raw_sources: Vec<(usize, usize)>,
    /// `m x K(K-1)/2`, columns labelled by `basis_columns`.
    pub interference_basis: CMatrix,
    pub basis_columns: Vec<BasisColumn>,
    pub ranks: Ranks,
    /// Largest relative distance of a merged column from the line of the
    /// column it was merged into. Zero up to rounding for a sound scheme.
    pub max_alignment_residual: f64,
    /// `sigma_min / sigma_max` of `[desired | interference_basis]`.
    pub conditioning: f64,
}

fn masked_column(h: &[Complex64], u: &[u8]) -> Vec<Complex64> {
    h.iter().zip(u).map(|(h, &b)| if b != 0 { *h } else { Complex64::new(0.0, 0.0) }).collect()
}

fn from_columns(m: usize, cols: &[Vec<Complex64>]) -> CMatrix {
    CMatrix::from_fn(m, cols.len(), |r, c| cols[c][r])
}

fn line_residual(a: &[Complex64], b: &[Complex64]) -> f64 {
    let bb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    let ab: Complex64 = a.iter().zip(b).map(|(a, b)| b.conj() * a).sum();
    let scale = ab / bb;
    let err: f64 = a.iter().zip(b).map(|(a, b)| (a - scale * b).norm_sqr()).sum();
    let an: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    (err / an).sqrt()
}

pub fn decompose_receiver(
    ch: &ChannelSet,
    pattern: &PatternMatrix,
    beams: &BeamSet,
    rx: usize,
) -> Result<ReceiverDecomposition> {
    let k = pattern.users();
    let m = pattern.channel_uses();
    let eff: Vec<Vec<Complex64>> = (0..k).map(|i| ch.effective_channel(pattern, rx, i)).collect();
    let column = |user: usize, dim: usize| masked_column(&eff[user], beams.vector(user, dim));

    let desired_cols: Vec<_> = (0..k - 1).map(|d| column(rx, d)).collect();
    let raw_sources: Vec<(usize, usize)> =
        (0..k).filter(|&i| i != rx).flat_map(|i| (0..k - 1).map(move |d| (i, d))).collect();
    let raw_cols: Vec<_> = raw_sources.iter().map(|&(i, d)| column(i, d)).collect();

    let mut basis_cols = Vec::with_capacity(k * (k - 1) / 2);
    let mut basis_columns = Vec::with_capacity(k * (k - 1) / 2);
    let mut max_alignment_residual = 0.0f64;
    for a in beams.pairs() {
        let ((i, j), (di, dj)) = (a.users, a.dims);
        if i == rx || j == rx {
            let source = if i == rx { (j, dj) } else { (i, di) };
            basis_cols.push(column(source.0, source.1));
            basis_columns.push(BasisColumn::Single { source });
        } else {
            let kept = column(i, di);
            let merged = column(j, dj);
            max_alignment_residual = max_alignment_residual.max(line_residual(&merged, &kept));
            basis_cols.push(kept);
            basis_columns.push(BasisColumn::Aligned { kept: (i, di), merged: (j, dj) });
        }
    }

    let desired = from_columns(m, &desired_cols);
    let interference_raw = from_columns(m, &raw_cols);
    let interference_basis = from_columns(m, &basis_cols);
    let all_cols: Vec<_> = desired_cols.iter().chain(&raw_cols).cloned().collect();
    let ranks = Ranks {
        desired: rank_of(&desired, RankTolerance::Default)?,
        interference: rank_of(&interference_raw, RankTolerance::Default)?,
        combined: rank_of(&from_columns(m, &all_cols), RankTolerance::Default)?,
    };
    let square: Vec<_> = desired_cols.into_iter().chain(basis_cols).collect();
    let sv = singular_values(&from_columns(m, &square))?;
    let conditioning = match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    };

    Ok(ReceiverDecomposition {
        rx,
        desired,
        interference_raw,
        raw_sources,
        interference_basis,
        basis_columns,
        ranks,
        max_alignment_residual,
        conditioning,
    })
}

/// Pass/fail of the three conditions at one receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ReceiverCheck {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub draw: Option<usize>,
    /// 1-based in serialized form.
    #[serde(serialize_with = "one_based")]
    pub rx: usize,
    pub rank_desired: usize,
    pub rank_interference: usize,
    pub rank_combined: usize,
    #[serde(skip)]
    pub desired_independent: bool,
    #[serde(skip)]
    pub interference_collapsed: bool,
    #[serde(skip)]
    pub spaces_disjoint: bool,
    pub pass: bool,
}

fn one_based<S: serde::Serializer>(v: &usize, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(*v as u64 + 1)
}

impl ReceiverCheck {
    fn judge(config: &SchemeConfig, rx: usize, ranks: Ranks) -> Self {
        let desired_independent = ranks.desired == config.symbols_per_user;
        let interference_collapsed = ranks.interference == config.pair_count;
        let spaces_disjoint = ranks.combined == config.channel_uses;
        ReceiverCheck {
            draw: None,
            rx,
            rank_desired: ranks.desired,
            rank_interference: ranks.interference,
            rank_combined: ranks.combined,
            desired_independent,
            interference_collapsed,
            spaces_disjoint,
            pass: desired_independent && interference_collapsed && spaces_disjoint,
        }
    }
}

/// Checks every receiver against one channel draw. Failures are reported in
/// the result, not returned as errors.
pub fn check_conditions(ch: &ChannelSet, pattern: &PatternMatrix, beams: &BeamSet) -> Result<Vec<ReceiverCheck>> {
    let config = SchemeConfig::new(pattern.users())?;
    (0..pattern.users())
        .map(|rx| Ok(ReceiverCheck::judge(&config, rx, decompose_receiver(ch, pattern, beams, rx)?.ranks)))
        .collect()
}

/// Channel coefficients with Gaussian-rational entries, for exact checks.
#[derive(Debug, Clone)]
pub struct ExactChannelSet {
    users: usize,
    coeffs: Vec<GaussRational>,
}

impl ExactChannelSet {
    /// Real and imaginary parts `a / q` with `a` uniform in `[-1000, 1000]`,
    /// `q` uniform in `[1, 1000]`.
    pub fn draw(users: usize, seed: u64) -> Self {
        let mut rng = stream(seed, Purpose::ExactChannel, 0);
        let mut part = || BigRational::new(BigInt::from(rng.random_range(-1000i64..=1000)), BigInt::from(rng.random_range(1i64..=1000)));
        let coeffs = (0..users * users * 2).map(|_| GaussRational { re: part(), im: part() }).collect();
        ExactChannelSet { users, coeffs }
    }

    pub fn coeff(&self, rx: usize, tx: usize, mode: u8) -> &GaussRational {
        &self.coeffs[(rx * self.users + tx) * 2 + (mode as usize - 1)]
    }

    pub fn to_f64(&self) -> ChannelSet {
        ChannelSet::from_fn(self.users, 2, |rx, tx, mode| self.coeff(rx, tx, mode).to_f64())
    }
}

/// Exact ranks at receiver `rx` by fraction-free elimination.
pub fn exact_ranks(ch: &ExactChannelSet, pattern: &PatternMatrix, beams: &BeamSet, rx: usize) -> Ranks {
    let k = pattern.users();
    let m = pattern.channel_uses();
    let entry = |r: usize, user: usize, dim: usize| {
        if beams.vector(user, dim)[r] != 0 {
            ch.coeff(rx, user, pattern.mode(r, rx)).clone()
        } else {
            GaussRational::zero()
        }
    };
    let desired: Vec<(usize, usize)> = (0..k - 1).map(|d| (rx, d)).collect();
    let interf: Vec<(usize, usize)> =
        (0..k).filter(|&i| i != rx).flat_map(|i| (0..k - 1).map(move |d| (i, d))).collect();
    let rows = |cols: &[(usize, usize)]| -> Vec<Vec<GaussRational>> {
        (0..m).map(|r| cols.iter().map(|&(u, d)| entry(r, u, d)).collect()).collect()
    };
    let both: Vec<_> = desired.iter().chain(&interf).copied().collect();
    Ranks {
        desired: gauss_rational_rank(&rows(&desired)),
        interference: gauss_rational_rank(&rows(&interf)),
        combined: gauss_rational_rank(&rows(&both)),
    }
}

pub fn check_conditions_exact(ch: &ExactChannelSet, pattern: &PatternMatrix, beams: &BeamSet) -> Result<Vec<ReceiverCheck>> {
    let config = SchemeConfig::new(pattern.users())?;
    Ok((0..pattern.users())
        .map(|rx| ReceiverCheck::judge(&config, rx, exact_ranks(ch, pattern, beams, rx)))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arithmetic {
    #[default]
    Float,
    Exact,
}

/// Outcome of checking a scheme over many channel draws.
#[derive(Debug, Clone)]
pub struct VerifyRun {
    pub users: usize,
    pub draws: usize,
    pub rows: Vec<ReceiverCheck>,
    /// Smallest `sigma_min / sigma_max` seen per draw (float mode only).
    pub conditioning: Vec<f64>,
}

impl VerifyRun {
    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.pass).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.rows)?)
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["draw", "rx", "rank_desired", "rank_interference", "rank_combined", "pass"])?;
        for r in &self.rows {
            out.write_record([
                r.draw.unwrap_or(0).to_string(),
                (r.rx + 1).to_string(),
                r.rank_desired.to_string(),
                r.rank_interference.to_string(),
                r.rank_combined.to_string(),
                r.pass.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Checks all receivers over `draws` channel draws seeded from `seed`.
/// Draws run in parallel; rows come back in draw order.
pub fn verify_draws(scheme: &Scheme, draws: usize, seed: u64, arithmetic: Arithmetic) -> Result<VerifyRun> {
    let k = scheme.config.users;
    let per_draw: Vec<(Vec<ReceiverCheck>, f64)> = (0..draws)
        .into_par_iter()
        .map(|t| -> Result<_> {
            let s = trial_seed(seed, t as u64);
            match arithmetic {
                Arithmetic::Float => {
                    let ch = ChannelSet::draw(k, 2, s);
                    let mut rows = Vec::with_capacity(k);
                    let mut cond = f64::INFINITY;
                    for rx in 0..k {
                        let dec = decompose_receiver(&ch, &scheme.pattern, &scheme.beams, rx)?;
                        cond = cond.min(dec.conditioning);
                        rows.push(ReceiverCheck::judge(&scheme.config, rx, dec.ranks));
                    }
                    Ok((rows, cond))
                }
                Arithmetic::Exact => {
                    let ch = ExactChannelSet::draw(k, s);
                    Ok((check_conditions_exact(&ch, &scheme.pattern, &scheme.beams)?, f64::NAN))
                }
            }
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(draws * k);
    let mut conditioning = Vec::with_capacity(draws);
    for (t, (draw_rows, cond)) in per_draw.into_iter().enumerate() {
        rows.extend(draw_rows.into_iter().map(|r| ReceiverCheck { draw: Some(t), ..r }));
        conditioning.push(cond);
    }
    Ok(VerifyRun { users: k, draws, rows, conditioning })
}

/// Dimension bookkeeping of the pairwise (`l = 2`) alignment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountingReport {
    pub users: usize,
    pub channel_uses: usize,
    /// Number of pairs containing each user; one shared dimension each.
    pub shared_per_user: Vec<usize>,
    /// Every user's shared-dimension count equals its symbol count `K-1`.
    pub per_user_holds: bool,
    /// Per receiver: pairs whose two symbols collapse there.
    pub overlapped_per_receiver: Vec<usize>,
    /// Every receiver: `K(K-1) - overlapped == m`.
    pub per_receiver_holds: bool,
}

pub fn check_counting(config: &SchemeConfig, beams: &BeamSet) -> CountingReport {
    let k = config.users;
    let mut shared = vec![0; k];
    for a in beams.pairs() {
        shared[a.users.0] += 1;
        shared[a.users.1] += 1;
    }
    let overlapped: Vec<usize> = (0..k)
        .map(|j| beams.pairs().iter().filter(|a| a.users.0 != j && a.users.1 != j).count())
        .collect();
    CountingReport {
        users: k,
        channel_uses: config.channel_uses,
        per_user_holds: shared.iter().all(|&s| s == config.symbols_per_user),
        shared_per_user: shared,
        per_receiver_holds: overlapped
            .iter()
            .all(|&o| config.total_symbols().checked_sub(o) == Some(config.channel_uses)),
        overlapped_per_receiver: overlapped,
    }
}
