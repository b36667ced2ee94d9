//! The staggered-switching channel.
//!
//! Receiver `k` hears transmitter `i` through one of `M` coefficients
//! `h[k][i][mode]`, picked at each channel use by the receiver's switching
//! pattern. Over a block the link is therefore a diagonal matrix whose
//! diagonal only takes the values `h[k][i][1]` and `h[k][i][2]`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::f64_text;
use crate::rng::{complex_gaussian, stream, Purpose};
use crate::scheme::{BeamSet, PatternMatrix};

/// Block-constant coefficients for every (receiver, transmitter, mode).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    users: usize,
    modes: usize,
    seed: Option<u64>,
    coeffs: Vec<Complex64>,
}

impl ChannelSet {
    /// i.i.d. `CN(0, 1)` coefficients from the channel stream of `seed`.
    pub fn draw(users: usize, modes: usize, seed: u64) -> Self {
        let mut rng = stream(seed, Purpose::Channel, 0);
        let coeffs = (0..users * users * modes).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        ChannelSet { users, modes, seed: Some(seed), coeffs }
    }

    /// Coefficients from a function of `(rx, tx, mode)`; mode is 1-based.
    pub fn from_fn(users: usize, modes: usize, mut f: impl FnMut(usize, usize, u8) -> Complex64) -> Self {
        let mut coeffs = Vec::with_capacity(users * users * modes);
        for rx in 0..users {
            for tx in 0..users {
                for mode in 1..=modes {
                    coeffs.push(f(rx, tx, mode as u8));
                }
            }
        }
        ChannelSet { users, modes, seed: None, coeffs }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `h[rx][tx](mode)` with `mode` in `1..=M`.
    pub fn coeff(&self, rx: usize, tx: usize, mode: u8) -> Complex64 {
        self.coeffs[self.index(rx, tx, mode)]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    fn index(&self, rx: usize, tx: usize, mode: u8) -> usize {
        debug_assert!(mode >= 1 && (mode as usize) <= self.modes);
        (rx * self.users + tx) * self.modes + (mode as usize - 1)
    }

    /// Diagonal of the effective channel from transmitter `i` to receiver
    /// `k` over the block.
    pub fn effective_channel(&self, pattern: &PatternMatrix, k: usize, i: usize) -> Vec<Complex64> {
        (0..pattern.channel_uses()).map(|r| self.coeff(k, i, pattern.mode(r, k))).collect()
    }

    pub fn to_dump(&self) -> ChannelDump {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for rx in 0..self.users {
            for tx in 0..self.users {
                for mode in 1..=self.modes as u8 {
                    let h = self.coeff(rx, tx, mode);
                    coeffs.push(CoeffEntry { rx: rx + 1, tx: tx + 1, mode, re: h.re, im: h.im });
                }
            }
        }
        ChannelDump { seed: self.seed, coeffs }
    }

    pub fn from_dump(dump: &ChannelDump) -> Result<Self> {
        let users = dump.coeffs.iter().map(|c| c.rx.max(c.tx)).max().unwrap_or(0);
        let modes = dump.coeffs.iter().map(|c| c.mode as usize).max().unwrap_or(0);
        if users * users * modes != dump.coeffs.len() {
            return Err(Error::Parse(format!(
                "channel dump has {} entries, expected {}",
                dump.coeffs.len(),
                users * users * modes
            )));
        }
        let mut set = ChannelSet {
            users,
            modes,
            seed: dump.seed,
            coeffs: vec![Complex64::new(f64::NAN, f64::NAN); users * users * modes],
        };
        for c in &dump.coeffs {
            if c.rx == 0 || c.tx == 0 || c.mode == 0 {
                return Err(Error::Parse("channel dump indices are 1-based".into()));
            }
            let idx = set.index(c.rx - 1, c.tx - 1, c.mode);
            set.coeffs[idx] = Complex64::new(c.re, c.im);
        }
        if set.coeffs.iter().any(|h| h.re.is_nan()) {
            return Err(Error::Parse("channel dump has duplicate or missing entries".into()));
        }
        Ok(set)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_dump())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_dump(&serde_json::from_str(text)?)
    }
}

/// JSON form of a [`ChannelSet`], 1-based indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelDump {
    pub seed: Option<u64>,
    pub coeffs: Vec<CoeffEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub rx: usize,
    pub tx: usize,
    pub mode: u8,
    #[serde(with = "f64_text")]
    pub re: f64,
    #[serde(with = "f64_text")]
    pub im: f64,
}

/// Symbols `s[i][d]` for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock {
    symbols: Vec<Vec<Complex64>>,
    power: f64,
}

impl SymbolBlock {
    /// Gaussian symbols with `E|s|^2 = power`.
    pub fn draw(users: usize, per_user: usize, power: f64, seed: u64) -> Self {
        let mut rng = stream(seed, Purpose::Symbols, 0);
        let symbols = (0..users)
            .map(|_| (0..per_user).map(|_| complex_gaussian(&mut rng, power)).collect())
            .collect();
        SymbolBlock { symbols, power }
    }

    pub fn new(symbols: Vec<Vec<Complex64>>, power: f64) -> Self {
        SymbolBlock { symbols, power }
    }

    pub fn zeros(users: usize, per_user: usize) -> Self {
        SymbolBlock { symbols: vec![vec![Complex64::new(0.0, 0.0); per_user]; users], power: 0.0 }
    }

    /// A single unit symbol at `(user, dim)`.
    pub fn one_hot(users: usize, per_user: usize, user: usize, dim: usize) -> Self {
        let mut b = Self::zeros(users, per_user);
        b.symbols[user][dim] = Complex64::new(1.0, 0.0);
        b.power = 1.0;
        b
    }

    pub fn get(&self, user: usize, dim: usize) -> Complex64 {
        self.symbols[user][dim]
    }

    pub fn user(&self, user: usize) -> &[Complex64] {
        &self.symbols[user]
    }

    pub fn power(&self) -> f64 {
        self.power
    }
}

/// Transmit vector of user `i`: `sum_d s[i][d] u[i][d]`.
pub fn transmit(beams: &BeamSet, sym: &SymbolBlock, i: usize) -> Vec<Complex64> {
    let vectors = beams.user_vectors(i);
    let m = vectors.first().map_or(0, Vec::len);
    let mut x = vec![Complex64::new(0.0, 0.0); m];
    for (u, &s) in vectors.iter().zip(sym.user(i)) {
        for (xr, &b) in x.iter_mut().zip(u) {
            if b != 0 {
                *xr += s;
            }
        }
    }
    x
}

/// Receiver noise switch. Noise for receiver `k` comes from the noise stream
/// of `seed` at index `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Noise {
    Off,
    On { seed: u64 },
}

/// Received block at receiver `k`: `sum_i H_ki x_i + n_k` with unit-variance
/// noise when enabled.
pub fn receive(
    ch: &ChannelSet,
    pattern: &PatternMatrix,
    beams: &BeamSet,
    sym: &SymbolBlock,
    k: usize,
    noise: Noise,
) -> Vec<Complex64> {
    let m = pattern.channel_uses();
    let mut y = match noise {
        Noise::Off => vec![Complex64::new(0.0, 0.0); m],
        Noise::On { seed } => {
            let mut rng = stream(seed, Purpose::Noise, k as u64);
            (0..m).map(|_| complex_gaussian(&mut rng, 1.0)).collect()
        }
    };
    for i in 0..ch.users() {
        let h = ch.effective_channel(pattern, k, i);
        let x = transmit(beams, sym, i);
        for ((yr, hr), xr) in y.iter_mut().zip(&h).zip(&x) {
            *yr += hr * xr;
        }
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{user_pairs, Scheme};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn draw_is_reproducible() {
        let a = ChannelSet::draw(3, 2, 42);
        let b = ChannelSet::draw(3, 2, 42);
        assert_eq!(a.coeffs().len(), 18);
        let bits = |s: &ChannelSet| s.coeffs().iter().map(|h| (h.re.to_bits(), h.im.to_bits())).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(ChannelSet::draw(4, 2, 1).coeffs(), ChannelSet::draw(4, 2, 2).coeffs());
    }

    #[test]
    fn draw_power_band() {
        // |h|^2 ~ Exp(1): the mean of 32 of them has sd 1/sqrt(32) ~ 0.18, so
        // [0.3, 3.0] is roughly -3.9 sd .. +11 sd.
        for seed in 0..500 {
            let ch = ChannelSet::draw(4, 2, seed);
            let mean = ch.coeffs().iter().map(|h| h.norm_sqr()).sum::<f64>() / 32.0;
            assert!((0.3..=3.0).contains(&mean), "seed {seed}: {mean}");
        }
    }

    #[test]
    fn effective_channel_follows_pattern() {
        let s = Scheme::four_user_reference();
        let ch = ChannelSet::draw(4, 2, 3);
        let h = ch.effective_channel(&s.pattern, 0, 0);
        let (h1, h2) = (ch.coeff(0, 0, 1), ch.coeff(0, 0, 2));
        assert_eq!(h, vec![h1, h2, h1, h2, h1, h2, h2, h2, h1]);
        for k in 0..4 {
            for i in 0..4 {
                let allowed = [ch.coeff(k, i, 1), ch.coeff(k, i, 2)];
                assert!(ch.effective_channel(&s.pattern, k, i).iter().all(|v| allowed.contains(v)));
            }
        }
    }

    #[test]
    fn single_mode_column() {
        let mut tilde = vec![vec![1u8, 1, 0]; 5];
        for row in &mut tilde {
            row[0] = 0;
        }
        let p = PatternMatrix::unchecked(tilde);
        let ch = ChannelSet::draw(3, 2, 17);
        assert!(ch.effective_channel(&p, 0, 2).iter().all(|&v| v == ch.coeff(0, 2, 1)));
        assert!(ch.effective_channel(&p, 1, 2).iter().all(|&v| v == ch.coeff(1, 2, 2)));
    }

    #[test]
    fn transmit_examples() {
        let s = Scheme::four_user_reference();
        let zero = SymbolBlock::zeros(4, 3);
        assert!(transmit(&s.beams, &zero, 0).iter().all(|v| v.norm() == 0.0));
        for d in 0..3 {
            let x = transmit(&s.beams, &SymbolBlock::one_hot(4, 3, 1, d), 1);
            let expect: Vec<Complex64> = s.beams.vector(1, d).iter().map(|&b| c(b as f64, 0.0)).collect();
            assert_eq!(x, expect);
        }
        let (a, b, cc) = (c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0));
        let sym = SymbolBlock::new(vec![vec![a, b, cc], vec![c(0.0, 0.0); 3], vec![c(0.0, 0.0); 3], vec![c(0.0, 0.0); 3]], 1.0);
        let u1 = [1, 0, 0, 0, 0, 0, 0, 1, 1];
        let u2 = [1, 0, 0, 1, 1, 0, 0, 0, 0];
        let u3 = [1, 1, 1, 0, 0, 0, 0, 0, 0];
        let expect: Vec<Complex64> =
            (0..9).map(|r| a * u1[r] as f64 + b * u2[r] as f64 + cc * u3[r] as f64).collect();
        assert_eq!(transmit(&s.beams, &sym, 0), expect);
    }

    #[test]
    fn receive_basics() {
        let s = Scheme::four_user_reference();
        let ch = ChannelSet::draw(4, 2, 11);
        let y = receive(&ch, &s.pattern, &s.beams, &SymbolBlock::zeros(4, 3), 2, Noise::Off);
        assert!(y.iter().all(|v| v.norm() == 0.0));
        for (i, d) in [(0, 0), (2, 1), (3, 2)] {
            let y = receive(&ch, &s.pattern, &s.beams, &SymbolBlock::one_hot(4, 3, i, d), 0, Noise::Off);
            let h = ch.effective_channel(&s.pattern, 0, i);
            let expect: Vec<Complex64> =
                h.iter().zip(s.beams.vector(i, d)).map(|(h, &b)| h * b as f64).collect();
            assert_eq!(y, expect);
        }
    }

    #[test]
    fn receive_matches_block_form_at_receiver_one() {
        // y_1 = A s^[1] + B [s^[2]; s^[3]; s^[4]] with the columns written
        // out entry by entry from the mode pattern [1 2 1 2 1 2 2 2 1].
        let s = Scheme::four_user_reference();
        let ch = ChannelSet::draw(4, 2, 5);
        let h = |tx: usize, mode: u8| ch.coeff(0, tx, mode);
        let z = c(0.0, 0.0);
        let a = [
            [h(0, 1), h(0, 1), h(0, 1)],
            [z, z, h(0, 2)],
            [z, z, h(0, 1)],
            [z, h(0, 2), z],
            [z, h(0, 1), z],
            [z, z, z],
            [z, z, z],
            [h(0, 2), z, z],
            [h(0, 1), z, z],
        ];
        let sym = SymbolBlock::draw(4, 3, 1.0, 9);
        let y = receive(&ch, &s.pattern, &s.beams, &sym, 0, Noise::Off);
        let only_desired = {
            let mut v = vec![vec![z; 3]; 4];
            v[0] = sym.user(0).to_vec();
            SymbolBlock::new(v, 1.0)
        };
        let yd = receive(&ch, &s.pattern, &s.beams, &only_desired, 0, Noise::Off);
        for r in 0..9 {
            let want: Complex64 = (0..3).map(|d| a[r][d] * sym.get(0, d)).sum();
            assert!((yd[r] - want).norm() < 1e-12);
        }
        // interference rows 6 and 9 (1-based) are h_12(1) s_3^[2] and h_14(1) s_3^[4]
        let yi: Vec<Complex64> = y.iter().zip(&yd).map(|(a, b)| a - b).collect();
        assert!((yi[2] - h(1, 1) * sym.get(1, 2)).norm() < 1e-12);
        assert!((yi[8] - h(3, 1) * sym.get(3, 2)).norm() < 1e-12);
        assert!((yi[4] - h(2, 1) * sym.get(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn receive_is_linear() {
        let s = Scheme::generate(5).unwrap();
        let ch = ChannelSet::draw(5, 2, 8);
        let a = SymbolBlock::draw(5, 4, 2.0, 1);
        let b = SymbolBlock::draw(5, 4, 0.5, 2);
        let alpha = c(0.3, -1.2);
        let sum = SymbolBlock::new(
            (0..5).map(|u| (0..4).map(|d| a.get(u, d) + alpha * b.get(u, d)).collect()).collect(),
            1.0,
        );
        for k in 0..5 {
            let ya = receive(&ch, &s.pattern, &s.beams, &a, k, Noise::Off);
            let yb = receive(&ch, &s.pattern, &s.beams, &b, k, Noise::Off);
            let ys = receive(&ch, &s.pattern, &s.beams, &sum, k, Noise::Off);
            let scale: f64 = ys.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let err: f64 = ys.iter().zip(ya.iter().zip(&yb)).map(|(s, (a, b))| (s - a - alpha * b).norm_sqr()).sum::<f64>().sqrt();
            assert!(err / scale < 1e-12);
        }
    }

    #[test]
    fn noise_is_seeded_per_receiver() {
        let s = Scheme::generate(3).unwrap();
        let ch = ChannelSet::draw(3, 2, 1);
        let z = SymbolBlock::zeros(3, 2);
        let n0 = receive(&ch, &s.pattern, &s.beams, &z, 0, Noise::On { seed: 4 });
        let n0b = receive(&ch, &s.pattern, &s.beams, &z, 0, Noise::On { seed: 4 });
        let n1 = receive(&ch, &s.pattern, &s.beams, &z, 1, Noise::On { seed: 4 });
        assert_eq!(n0, n0b);
        assert_ne!(n0, n1);
        assert!(n0.iter().all(|v| v.norm() > 0.0));
    }

    #[test]
    fn support_sees_mode_two_at_third_receivers() {
        for k in 3..=7 {
            let s = Scheme::generate(k).unwrap();
            let ch = ChannelSet::draw(k, 2, k as u64);
            for (i, j) in user_pairs(k) {
                let v = s.pattern.pair_product(i, j);
                for w in (0..k).filter(|&w| w != i && w != j) {
                    let h = ch.effective_channel(&s.pattern, w, i);
                    for r in 0..v.len() {
                        assert_eq!(h[r] * v[r] as f64, ch.coeff(w, i, 2) * v[r] as f64);
                    }
                }
            }
        }
    }

    #[test]
    fn dump_round_trip() {
        let ch = ChannelSet::draw(3, 2, 42);
        let text = ch.to_json().unwrap();
        assert!(text.contains("\"seed\": 42"));
        let back = ChannelSet::from_json(&text).unwrap();
        assert_eq!(back, ch);
        let bad = r#"{"seed":null,"coeffs":[{"rx":1,"tx":1,"mode":1,"re":"1","im":"0"}, {"rx":1,"tx":1,"mode":1,"re":"1","im":"0"}]}"#;
        assert!(ChannelSet::from_json(bad).is_err());
    }
}
