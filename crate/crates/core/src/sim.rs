//! Monte Carlo sum-rate simulation.
//!
//! Each receiver nulls the interference subspace by orthogonal projection and
//! solves for its `K-1` symbols by least squares. With per-symbol power `P`
//! and unit noise the post-projection SNR of symbol `d` is `P * g_d`, where
//! `1 / g_d` is the `d`-th diagonal entry of `(D'^H D')^{-1}` and `D'` is the
//! projected desired block. Rates are normalised by the `m` channel uses, so
//! the slope of sum rate against `log2(P)` reads directly as sum DoF.

use num_complex::Complex64;
use num_rational::BigRational;
use rayon::prelude::*;

use crate::channel::ChannelSet;
use crate::dof::{self, target_dof};
use crate::error::{Error, Result};
use crate::numfmt::sig17;
use crate::rng::trial_seed;
use crate::scheme::Scheme;
use crate::verify::{decompose_receiver, CMatrix, ReceiverDecomposition};

/// Linear power for an SNR in dB (unit noise variance).
pub fn snr_linear(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// Projector onto the complement of the interference basis, and the
/// projected desired block.
fn null_interference(dec: &ReceiverDecomposition) -> Result<(CMatrix, CMatrix)> {
    let m = dec.desired.nrows();
    if dec.ranks.combined < m {
        return Err(Error::UnverifiableDraw { rx: dec.rx, rank: dec.ranks.combined, needed: m });
    }
    let svd = dec.interference_basis.clone().svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let threshold = m.max(dec.interference_basis.ncols()) as f64 * f64::EPSILON * top;
    let mut proj = CMatrix::identity(m, m);
    for (c, &s) in svd.singular_values.iter().enumerate() {
        if s > threshold {
            let col = u.column(c);
            proj -= col * col.adjoint();
        }
    }
    let projected = &proj * &dec.desired;
    Ok((proj, projected))
}

/// Zero-forcing estimate of the receiver's own symbols from `y`.
pub fn zf_decode(dec: &ReceiverDecomposition, y: &[Complex64]) -> Result<Vec<Complex64>> {
    let (proj, projected) = null_interference(dec)?;
    let y = CMatrix::from_column_slice(y.len(), 1, y);
    let y = &proj * y;
    let sol = projected
        .svd(true, true)
        .solve(&y, 0.0)
        .map_err(|e| Error::InvalidSimConfig(e.to_string()))?;
    Ok(sol.column(0).iter().copied().collect())
}

/// Post-projection gains `g_d`; symbol `d` sees SNR `P * g_d`.
pub fn post_projection_gains(dec: &ReceiverDecomposition) -> Result<Vec<f64>> {
    let (_, projected) = null_interference(dec)?;
    let gram = projected.adjoint() * &projected;
    let needed = dec.desired.nrows();
    let inv = gram
        .cholesky()
        .ok_or(Error::UnverifiableDraw { rx: dec.rx, rank: dec.ranks.combined, needed })?
        .inverse();
    Ok((0..inv.nrows()).map(|d| 1.0 / inv[(d, d)].re).collect())
}

/// Gains for every receiver of one channel draw.
pub fn scheme_gains(scheme: &Scheme, ch: &ChannelSet) -> Result<Vec<Vec<f64>>> {
    (0..scheme.config.users)
        .map(|rx| post_projection_gains(&decompose_receiver(ch, &scheme.pattern, &scheme.beams, rx)?))
        .collect()
}

/// Per-user rates (bits per channel use) of the aligned scheme.
pub fn user_rates(gains: &[Vec<f64>], power: f64, channel_uses: usize) -> Vec<f64> {
    gains
        .iter()
        .map(|g| g.iter().map(|&g| (1.0 + power * g).log2()).sum::<f64>() / channel_uses as f64)
        .collect()
}

/// Orthogonal time sharing: each user gets `1/K` of the block alone and its
/// receiver picks the stronger of its two modes.
pub fn tdma_rates(ch: &ChannelSet, power: f64) -> Vec<f64> {
    let k = ch.users();
    (0..k)
        .map(|i| {
            let g = (1..=ch.modes() as u8).map(|m| ch.coeff(i, i, m).norm_sqr()).fold(0.0, f64::max);
            (1.0 + power * g).log2() / k as f64
        })
        .collect()
}

/// Mean sum rate over `trials` draws at one SNR. Unverifiable draws are
/// skipped.
pub fn sum_rate_point(scheme: &Scheme, snr_db: f64, trials: usize, seed: u64) -> Result<f64> {
    let cfg = SimConfig { snr_db: vec![snr_db], trials, seed, ..SimConfig::new(scheme.config.users) };
    let draws = run_draws(scheme, &cfg)?;
    let p = snr_linear(snr_db);
    let rates: Vec<f64> = draws
        .iter()
        .filter_map(|d| d.gains.as_ref())
        .map(|g| user_rates(g, p, scheme.config.channel_uses).iter().sum())
        .collect();
    Ok(mean(&rates))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlopeWindow {
    /// Least-squares line through every SNR point.
    #[default]
    LeastSquares,
    /// Secant through the two highest SNR points.
    TopTwo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub users: usize,
    /// Strictly increasing.
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub window: SlopeWindow,
}

impl SimConfig {
    /// 30/40/50 dB, 500 trials, seed 0.
    pub fn new(users: usize) -> Self {
        SimConfig { users, snr_db: vec![30.0, 40.0, 50.0], trials: 500, seed: 0, window: SlopeWindow::LeastSquares }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidSimConfig("trials must be >= 1".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidSimConfig("SNR values must be finite".into()));
        }
        if self.snr_db.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSimConfig("SNR points must be strictly increasing".into()));
        }
        Ok(())
    }
}

struct Draw {
    gains: Option<Vec<Vec<f64>>>,
    /// `(rx, rank, needed)` when the draw was excluded.
    unverifiable: Option<(usize, usize, usize)>,
    channels: ChannelSet,
}

fn run_draws(scheme: &Scheme, cfg: &SimConfig) -> Result<Vec<Draw>> {
    cfg.validate()?;
    let k = scheme.config.users;
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let channels = ChannelSet::draw(k, 2, trial_seed(cfg.seed, t as u64));
            let (gains, unverifiable) = match scheme_gains(scheme, &channels) {
                Ok(g) => (Some(g), None),
                Err(Error::UnverifiableDraw { rx, rank, needed }) => (None, Some((rx, rank, needed))),
                Err(e) => return Err(e),
            };
            Ok(Draw { gains, unverifiable, channels })
        })
        .collect()
}

/// Rates of one trial at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRates {
    pub snr_index: usize,
    pub trial: usize,
    pub user_rates: Vec<f64>,
    pub sum_rate: f64,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub users: usize,
    pub channel_uses: usize,
    pub snr_db: Vec<f64>,
    /// Snr-major, trial-minor; excluded trials are absent.
    pub trials: Vec<TrialRates>,
    pub mean_sum_rate: Vec<f64>,
    pub tdma_mean_sum_rate: Vec<f64>,
    /// d(sum rate) / d(log2 SNR).
    pub fitted_slope: f64,
    pub tdma_slope: f64,
    pub target_dof: BigRational,
    /// Draws dropped because some receiver could not separate its symbols.
    pub excluded: usize,
}

impl SimResult {
    /// `(fitted - target) / target`.
    pub fn relative_deviation(&self) -> f64 {
        let target = dof::to_f64(&self.target_dof);
        (self.fitted_slope - target) / target
    }

    /// Long format `K,snr_db,trial,rx,rate`.
    pub fn write_results_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["K", "snr_db", "trial", "rx", "rate"])?;
        for t in &self.trials {
            for (rx, r) in t.user_rates.iter().enumerate() {
                out.write_record([
                    self.users.to_string(),
                    self.snr_db[t.snr_index].to_string(),
                    t.trial.to_string(),
                    (rx + 1).to_string(),
                    sig17(*r),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// `K,snr_db,mean_sum_rate,tdma_mean_sum_rate`.
    pub fn write_summary_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["K", "snr_db", "mean_sum_rate", "tdma_mean_sum_rate"])?;
        for (i, snr) in self.snr_db.iter().enumerate() {
            out.write_record([
                self.users.to_string(),
                snr.to_string(),
                sig17(self.mean_sum_rate[i]),
                sig17(self.tdma_mean_sum_rate[i]),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// JSON digest: slopes and target as text.
    pub fn summary_json(&self) -> Result<String> {
        let v = serde_json::json!({
            "K": self.users,
            "m": self.channel_uses,
            "trials": self.trials.iter().filter(|t| t.snr_index == 0).count(),
            "excluded": self.excluded,
            "snr_db": self.snr_db.iter().map(|s| sig17(*s)).collect::<Vec<_>>(),
            "mean_sum_rate": self.mean_sum_rate.iter().map(|r| sig17(*r)).collect::<Vec<_>>(),
            "fitted_slope": sig17(self.fitted_slope),
            "tdma_slope": sig17(self.tdma_slope),
            "target_dof": dof::display(&self.target_dof),
            "relative_deviation": sig17(self.relative_deviation()),
        });
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

/// A standalone matplotlib script plotting `summary_csv`.
pub fn plot_script(summary_csv: &str, image: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
"""Plot mean sum rate against SNR from a summary CSV."""
import csv
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open({summary_csv:?})))
snr = [float(r["snr_db"]) for r in rows]
bia = [float(r["mean_sum_rate"]) for r in rows]
tdma = [float(r["tdma_mean_sum_rate"]) for r in rows]
k = rows[0]["K"] if rows else "?"

plt.plot(snr, bia, "o-", label="aligned scheme")
plt.plot(snr, tdma, "s--", label="TDMA")
plt.xlabel("SNR (dB)")
plt.ylabel("sum rate (bits / channel use)")
plt.title("K = " + k)
plt.grid(True)
plt.legend()
plt.savefig({image:?}, dpi=150, bbox_inches="tight")
"#
    )
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Least-squares slope of `y` on `x`.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn slope(window: SlopeWindow, snr_db: &[f64], rates: &[f64]) -> f64 {
    let x: Vec<f64> = snr_db.iter().map(|&s| snr_linear(s).log2()).collect();
    match window {
        SlopeWindow::LeastSquares => fit_slope(&x, rates),
        SlopeWindow::TopTwo => {
            let n = x.len();
            (rates[n - 1] - rates[n - 2]) / (x[n - 1] - x[n - 2])
        }
    }
}

/// Sum-rate curve of the aligned scheme and of TDMA over the same draws,
/// with their high-SNR slopes.
pub fn estimate_dof(scheme: &Scheme, cfg: &SimConfig) -> Result<SimResult> {
    if cfg.snr_db.len() < 2 {
        return Err(Error::TooFewSnrPoints(cfg.snr_db.len()));
    }
    let draws = run_draws(scheme, cfg)?;
    let m = scheme.config.channel_uses;
    let excluded = draws.iter().filter(|d| d.gains.is_none()).count();
    if excluded == draws.len() {
        // nothing to average; report the first draw's failure
        if let Some((rx, rank, needed)) = draws[0].unverifiable {
            return Err(Error::UnverifiableDraw { rx, rank, needed });
        }
    }

    let mut trials = Vec::new();
    let mut mean_sum_rate = Vec::with_capacity(cfg.snr_db.len());
    let mut tdma_mean_sum_rate = Vec::with_capacity(cfg.snr_db.len());
    for (si, &snr) in cfg.snr_db.iter().enumerate() {
        let p = snr_linear(snr);
        let mut sums = Vec::with_capacity(draws.len());
        let mut tdma = Vec::with_capacity(draws.len());
        for (t, d) in draws.iter().enumerate() {
            let Some(g) = &d.gains else { continue };
            let rates = user_rates(g, p, m);
            let sum_rate = rates.iter().sum();
            sums.push(sum_rate);
            tdma.push(tdma_rates(&d.channels, p).iter().sum());
            trials.push(TrialRates { snr_index: si, trial: t, user_rates: rates, sum_rate });
        }
        mean_sum_rate.push(mean(&sums));
        tdma_mean_sum_rate.push(mean(&tdma));
    }

    Ok(SimResult {
        users: scheme.config.users,
        channel_uses: m,
        fitted_slope: slope(cfg.window, &cfg.snr_db, &mean_sum_rate),
        tdma_slope: slope(cfg.window, &cfg.snr_db, &tdma_mean_sum_rate),
        snr_db: cfg.snr_db.clone(),
        trials,
        mean_sum_rate,
        tdma_mean_sum_rate,
        target_dof: target_dof(scheme.config.users),
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{receive, Noise, SymbolBlock};

    fn rel_err(a: &[Complex64], b: &[Complex64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
        (num / den).sqrt()
    }

    #[test]
    fn noiseless_round_trip() {
        for k in [3, 4] {
            let s = Scheme::generate_decodable(k).unwrap();
            for seed in 0..20 {
                let ch = ChannelSet::draw(k, 2, seed);
                let sym = SymbolBlock::draw(k, k - 1, 1.0, seed + 1000);
                for rx in 0..k {
                    let dec = decompose_receiver(&ch, &s.pattern, &s.beams, rx).unwrap();
                    let y = receive(&ch, &s.pattern, &s.beams, &sym, rx, Noise::Off);
                    let est = zf_decode(&dec, &y).unwrap();
                    assert!(rel_err(&est, sym.user(rx)) < 1e-9, "K={k} seed={seed} rx={rx}");
                }
            }
        }
    }

    #[test]
    fn canonical_scheme_decodes_only_where_separable() {
        for k in [3, 4, 5] {
            let s = Scheme::generate(k).unwrap();
            let ch = ChannelSet::draw(k, 2, 8);
            let sym = SymbolBlock::draw(k, k - 1, 1.0, 9);
            for rx in 0..k {
                let dec = decompose_receiver(&ch, &s.pattern, &s.beams, rx).unwrap();
                let y = receive(&ch, &s.pattern, &s.beams, &sym, rx, Noise::Off);
                match zf_decode(&dec, &y) {
                    Ok(est) => {
                        assert!(rx >= k - 2);
                        assert!(rel_err(&est, sym.user(rx)) < 1e-9);
                    }
                    Err(Error::UnverifiableDraw { rank, needed, .. }) => {
                        assert!(rx < k - 2);
                        assert_eq!(rank + 1, needed);
                    }
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn zero_symbols_decode_to_zero() {
        let s = Scheme::generate_decodable(4).unwrap();
        let ch = ChannelSet::draw(4, 2, 2);
        let dec = decompose_receiver(&ch, &s.pattern, &s.beams, 0).unwrap();
        let est = zf_decode(&dec, &[Complex64::new(0.0, 0.0); 9]).unwrap();
        assert!(est.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn rank_deficient_draw_is_rejected() {
        // identical coefficients for both modes collapse the switching
        let s = Scheme::generate(4).unwrap();
        let ch = ChannelSet::from_fn(4, 2, |rx, tx, _| Complex64::new(1.0 + rx as f64, tx as f64));
        let dec = decompose_receiver(&ch, &s.pattern, &s.beams, 0).unwrap();
        assert!(matches!(zf_decode(&dec, &[Complex64::new(0.0, 0.0); 9]), Err(Error::UnverifiableDraw { .. })));
    }

    #[test]
    fn noise_error_scales_inversely_with_snr() {
        // Median normalised squared error |s_hat - s|^2 / P at 40 dB and at
        // twice that linear power; the ratio should be ~2.
        let s = Scheme::generate_decodable(4).unwrap();
        let med = |snr_db: f64, noise_base: u64| {
            let p = snr_linear(snr_db);
            let mut errs = Vec::new();
            for t in 0..400u64 {
                let ch = ChannelSet::draw(4, 2, t);
                let sym = SymbolBlock::draw(4, 3, p, t + 5000);
                let dec = decompose_receiver(&ch, &s.pattern, &s.beams, 0).unwrap();
                let y = receive(&ch, &s.pattern, &s.beams, &sym, 0, Noise::On { seed: noise_base + t });
                let est = zf_decode(&dec, &y).unwrap();
                errs.extend(est.iter().zip(sym.user(0)).map(|(a, b)| (a - b).norm_sqr() / p));
            }
            errs.sort_by(f64::total_cmp);
            errs[errs.len() / 2]
        };
        let ratio = med(40.0, 1) / med(40.0 + 10.0 * 2f64.log10(), 1_000_000);
        assert!((1.0..=4.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rate_vanishes_at_low_power() {
        let s = Scheme::generate_decodable(3).unwrap();
        let r = sum_rate_point(&s, -80.0, 20, 1).unwrap();
        assert!((0.0..1e-6).contains(&r), "{r}");
    }

    #[test]
    fn ten_db_increments() {
        for (k, dof) in [(3usize, 1.2f64), (4, 4.0 / 3.0)] {
            let s = Scheme::generate_decodable(k).unwrap();
            let hi = sum_rate_point(&s, 50.0, 300, 3).unwrap();
            let lo = sum_rate_point(&s, 40.0, 300, 3).unwrap();
            let expect = dof * 10f64.log2();
            assert!(((hi - lo) / expect - 1.0).abs() < 0.10, "K={k}: {}", hi - lo);
        }
    }

    #[test]
    fn config_validation() {
        let s = Scheme::generate_decodable(3).unwrap();
        let mut cfg = SimConfig::new(3);
        cfg.snr_db = vec![30.0];
        assert!(matches!(estimate_dof(&s, &cfg), Err(Error::TooFewSnrPoints(1))));
        cfg.snr_db = vec![40.0, 30.0];
        assert!(estimate_dof(&s, &cfg).is_err());
        cfg.snr_db = vec![30.0, 40.0];
        cfg.trials = 0;
        assert!(estimate_dof(&s, &cfg).is_err());
    }

    #[test]
    fn canonical_scheme_has_no_usable_draw() {
        let s = Scheme::generate(4).unwrap();
        let cfg = SimConfig { trials: 5, ..SimConfig::new(4) };
        let e = estimate_dof(&s, &cfg).unwrap_err();
        assert!(matches!(e, Error::UnverifiableDraw { rx: 0, rank: 8, needed: 9 }));
        assert_eq!(e.to_string(), "unverifiable draw at receiver 1: combined rank 8 < 9");
    }

    #[test]
    fn aggregation_ignores_trial_order() {
        let s = Scheme::generate_decodable(3).unwrap();
        let cfg = SimConfig { trials: 40, ..SimConfig::new(3) };
        let r = estimate_dof(&s, &cfg).unwrap();
        let mut at0: Vec<f64> = r.trials.iter().filter(|t| t.snr_index == 0).map(|t| t.sum_rate).collect();
        at0.reverse();
        at0.rotate_left(7);
        assert!((mean(&at0) - r.mean_sum_rate[0]).abs() < 1e-12);
        assert!(r.trials.iter().all(|t| t.user_rates.iter().all(|&x| x >= 0.0)));
    }

    #[test]
    fn slope_fit() {
        let x = [1.0, 2.0, 3.0];
        assert!((fit_slope(&x, &[2.0, 4.0, 6.0]) - 2.0).abs() < 1e-15);
        let snr = [30.0, 40.0, 50.0];
        let rates: Vec<f64> = snr.iter().map(|&d| 1.5 * snr_linear(d).log2() + 3.0).collect();
        assert!((slope(SlopeWindow::TopTwo, &snr, &rates) - 1.5).abs() < 1e-9);
        assert!((slope(SlopeWindow::LeastSquares, &snr, &rates) - 1.5).abs() < 1e-9);
    }

    #[test]
    fn outputs() {
        let s = Scheme::generate_decodable(3).unwrap();
        let cfg = SimConfig { trials: 3, ..SimConfig::new(3) };
        let r = estimate_dof(&s, &cfg).unwrap();
        let mut buf = Vec::new();
        r.write_results_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 3 * 3 * 3);
        assert!(text.starts_with("K,snr_db,trial,rx,rate\n3,30,0,1,"));
        let mut buf = Vec::new();
        r.write_summary_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
        assert!(r.summary_json().unwrap().contains("\"target_dof\": \"6/5\""));
        assert!(plot_script("summary.csv", "plot.png").contains("summary.csv"));
    }
}
