//! Switching patterns and binary beamformers.
//!
//! A scheme for `K` users runs over `m = (K+2)(K-1)/2` channel uses. Each
//! receiver `k` switches its two-mode antenna according to column `k` of a
//! binary pattern matrix (0 selects mode 1, 1 selects mode 2). Every unordered
//! user pair `{i, j}` shares one beamforming vector: the element-wise product
//! of all pattern columns except `i` and `j`. Its support is exactly the set of
//! channel uses where every *other* receiver sits in mode 2, which is what
//! makes the pair's two symbols collapse onto one dimension at those
//! receivers.
//!
//! Alignment alone does not make a scheme decodable: each receiver also needs
//! its desired columns to stay clear of the interference. For these binary
//! beamformers that is a property of the pattern alone, see
//! [`PatternMatrix::separation_rank`]. The canonical pattern of
//! [`PatternMatrix::generate`] fails it at every receiver outside the one
//! pair it leaves without a private row; [`PatternMatrix::generate_decodable`]
//! searches for a pattern that passes, and one exists only for `K = 3, 4`.
//!
//! Users and dimensions are 0-based in this API and 1-based in the JSON
//! document produced by [`Scheme::to_doc`].

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::binary_rank;

/// Integer skeleton of a scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SchemeConfig {
    pub users: usize,
    /// Antenna modes per receiver; always 2 for the constructive scheme.
    pub modes: usize,
    /// Channel uses per block, `(K+2)(K-1)/2`.
    pub channel_uses: usize,
    /// Symbols each user sends per block, `K-1`.
    pub symbols_per_user: usize,
    /// Distinct beamforming vectors, `C(K,2)`.
    pub pair_count: usize,
}

impl SchemeConfig {
    pub fn new(users: usize) -> Result<Self> {
        if users < 3 {
            return Err(Error::DegenerateScheme(users));
        }
        Ok(SchemeConfig {
            users,
            modes: 2,
            channel_uses: (users + 2) * (users - 1) / 2,
            symbols_per_user: users - 1,
            pair_count: users * (users - 1) / 2,
        })
    }

    pub fn total_symbols(&self) -> usize {
        self.users * self.symbols_per_user
    }
}

/// All unordered pairs `(i, j)`, `i < j`, in lexicographic order.
pub fn user_pairs(users: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..users).tuple_combinations()
}

/// The binary pattern matrix `tilde` (m rows, K columns) and its mode form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatternMatrix {
    tilde: Vec<Vec<u8>>,
    users: usize,
}

impl PatternMatrix {
    /// Canonical construction: the top `K` rows are all-ones minus identity,
    /// the remaining rows are distinct weight-`(K-2)` rows taken in
    /// lexicographic order of their zero positions. If the product matrix is
    /// not full rank, later row combinations are tried in lexicographic order.
    pub fn generate(config: &SchemeConfig) -> Result<Self> {
        let k = config.users;
        let top: Vec<Vec<u8>> =
            (0..k).map(|r| (0..k).map(|c| (r != c) as u8).collect()).collect();
        let candidates: Vec<Vec<u8>> = user_pairs(k)
            .map(|(a, b)| (0..k).map(|c| (c != a && c != b) as u8).collect())
            .collect();
        let needed = config.channel_uses - k;
        for choice in (0..candidates.len()).combinations(needed) {
            let mut tilde = top.clone();
            tilde.extend(choice.iter().map(|&i| candidates[i].clone()));
            let pattern = PatternMatrix { tilde, users: k };
            if pattern.product_rank() == config.pair_count {
                return Ok(pattern);
            }
        }
        Err(Error::ConstructionFailed { users: k, weight: k - 2 })
    }

    /// Exhaustive search for a pattern that passes
    /// [`PatternMatrix::is_decodable`].
    ///
    /// A row with three or more zeros is zero in every pair and exclusion
    /// product, and a repeated row repeats in all of them; either makes the
    /// separation matrix singular. So the candidates are the distinct rows
    /// with at most two zeros, `C(K,2) + K + 1` of them, of which `m` are
    /// kept: every choice of two rows to drop is tried, in lexicographic
    /// order over (ones-minus-identity rows, weight-`(K-2)` rows, all-ones
    /// row).
    pub fn generate_decodable(config: &SchemeConfig) -> Result<Self> {
        let k = config.users;
        let mut candidates: Vec<Vec<u8>> =
            (0..k).map(|r| (0..k).map(|c| (r != c) as u8).collect()).collect();
        candidates.extend(user_pairs(k).map(|(a, b)| (0..k).map(|c| (c != a && c != b) as u8).collect()));
        candidates.push(vec![1; k]);
        for (x, y) in (0..candidates.len()).tuple_combinations() {
            let tilde = (0..candidates.len())
                .filter(|&i| i != x && i != y)
                .map(|i| candidates[i].clone())
                .collect();
            let pattern = PatternMatrix { tilde, users: k };
            if pattern.product_rank() == config.pair_count && pattern.is_decodable() {
                return Ok(pattern);
            }
        }
        Err(Error::NoDecodablePattern(k))
    }

    /// Accepts any binary `m x K` matrix whose product matrix has full column
    /// rank.
    pub fn from_tilde(tilde: Vec<Vec<u8>>) -> Result<Self> {
        let users = tilde.first().map_or(0, Vec::len);
        let config = SchemeConfig::new(users)?;
        if tilde.len() != config.channel_uses {
            return Err(Error::InvalidPattern(format!(
                "expected {} rows for K = {users}, got {}",
                config.channel_uses,
                tilde.len()
            )));
        }
        if let Some(r) = tilde.iter().position(|row| row.len() != users) {
            return Err(Error::InvalidPattern(format!("row {} has the wrong length", r + 1)));
        }
        if tilde.iter().flatten().any(|&b| b > 1) {
            return Err(Error::InvalidPattern("entries must be 0 or 1".into()));
        }
        let pattern = PatternMatrix { tilde, users };
        let rank = pattern.product_rank();
        if rank != config.pair_count {
            return Err(Error::InvalidPattern(format!(
                "product matrix has rank {rank}, need {}",
                config.pair_count
            )));
        }
        Ok(pattern)
    }

    /// Same as [`PatternMatrix::from_tilde`] but from the `{1,2}` mode form.
    pub fn from_modes(modes: &[Vec<u8>]) -> Result<Self> {
        if modes.iter().flatten().any(|&v| v != 1 && v != 2) {
            return Err(Error::InvalidPattern("modes must be 1 or 2".into()));
        }
        Self::from_tilde(modes.iter().map(|r| r.iter().map(|&v| v - 1).collect()).collect())
    }

    #[cfg(test)]
    pub(crate) fn unchecked(tilde: Vec<Vec<u8>>) -> Self {
        let users = tilde[0].len();
        PatternMatrix { tilde, users }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn channel_uses(&self) -> usize {
        self.tilde.len()
    }

    pub fn tilde(&self) -> &[Vec<u8>] {
        &self.tilde
    }

    /// `tilde + 1`, entries in `{1, 2}`.
    pub fn modes(&self) -> Vec<Vec<u8>> {
        self.tilde.iter().map(|r| r.iter().map(|&b| b + 1).collect()).collect()
    }

    /// Antenna mode (1 or 2) of receiver `k` at channel use `r`.
    pub fn mode(&self, r: usize, k: usize) -> u8 {
        self.tilde[r][k] + 1
    }

    /// Switching pattern of receiver `k` as a 0/1 column.
    pub fn column(&self, k: usize) -> Vec<u8> {
        self.tilde.iter().map(|r| r[k]).collect()
    }

    /// Element-wise product of every column except `i` and `j`.
    pub fn pair_product(&self, i: usize, j: usize) -> Vec<u8> {
        self.tilde
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != i && c != j)
                    .all(|(_, &b)| b == 1) as u8
            })
            .collect()
    }

    /// Element-wise product of every column except `a`: the channel uses
    /// where all receivers but `a` sit in mode 2.
    pub fn exclusion_product(&self, a: usize) -> Vec<u8> {
        self.tilde
            .iter()
            .map(|row| row.iter().enumerate().all(|(c, &b)| c == a || b == 1) as u8)
            .collect()
    }

    /// Exact rank of the pair products together with the exclusion products
    /// of every user except `rx`.
    ///
    /// This is the combined desired + interference rank at `rx` for every
    /// channel draw in which no interferer's two mode coefficients are
    /// proportional to the direct link's. User `a` and `rx` send along the
    /// shared vector `v` through different two-mode channels, so together
    /// they span both the mode-1 part of `v` and its mode-2 part, which is
    /// the exclusion product of `a`. Every other pair vector lies wholly in
    /// mode 2 at `rx`. The receiver can separate its symbols only if this
    /// rank reaches `m`.
    pub fn separation_rank(&self, rx: usize) -> usize {
        let mut cols: Vec<Vec<u8>> = user_pairs(self.users).map(|(i, j)| self.pair_product(i, j)).collect();
        cols.extend((0..self.users).filter(|&a| a != rx).map(|a| self.exclusion_product(a)));
        let rows: Vec<Vec<u8>> = (0..self.channel_uses()).map(|r| cols.iter().map(|c| c[r]).collect()).collect();
        binary_rank(&rows)
    }

    /// `separation_rank(rx) == m` at every receiver.
    pub fn is_decodable(&self) -> bool {
        (0..self.users).all(|rx| self.separation_rank(rx) == self.channel_uses())
    }

    /// The `m x C(K,2)` matrix whose columns are the pair products, pairs in
    /// lexicographic order. Returned row-major.
    pub fn product_matrix(&self) -> Vec<Vec<u8>> {
        let cols: Vec<Vec<u8>> = user_pairs(self.users).map(|(i, j)| self.pair_product(i, j)).collect();
        (0..self.channel_uses()).map(|r| cols.iter().map(|c| c[r]).collect()).collect()
    }

    /// Exact column rank of [`PatternMatrix::product_matrix`].
    pub fn product_rank(&self) -> usize {
        binary_rank(&self.product_matrix())
    }
}

/// One shared beamformer: users `users.0 < users.1` use it as their
/// dimensions `dims.0` and `dims.1` respectively.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairAssignment {
    pub users: (usize, usize),
    pub dims: (usize, usize),
}

/// An explicit pair -> dimension assignment, replacing the default
/// first-come labelling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairMap(pub Vec<PairAssignment>);

impl PairMap {
    /// Checks that every pair appears once and that each user's dimensions
    /// form a permutation of `0..K-1`.
    pub fn validate(&self, users: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPairMap(msg));
        let mut seen_pairs = vec![vec![false; users]; users];
        let mut seen_dims = vec![vec![false; users - 1]; users];
        for a in &self.0 {
            let ((i, j), (di, dj)) = (a.users, a.dims);
            if i >= j || j >= users {
                return bad(format!("bad user pair ({}, {})", i + 1, j + 1));
            }
            if di >= users - 1 || dj >= users - 1 {
                return bad(format!("dimension out of range for pair ({}, {})", i + 1, j + 1));
            }
            if std::mem::replace(&mut seen_pairs[i][j], true) {
                return bad(format!("pair ({}, {}) listed twice", i + 1, j + 1));
            }
            for (u, d) in [(i, di), (j, dj)] {
                if std::mem::replace(&mut seen_dims[u][d], true) {
                    return bad(format!("user {} dimension {} assigned twice", u + 1, d + 1));
                }
            }
        }
        if self.0.len() != users * (users - 1) / 2 {
            return bad(format!("expected {} pairs, got {}", users * (users - 1) / 2, self.0.len()));
        }
        Ok(())
    }
}

/// Per-user binary beamformers plus the pair structure that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BeamSet {
    vectors: Vec<Vec<Vec<u8>>>,
    partners: Vec<Vec<usize>>,
    pairs: Vec<PairAssignment>,
}

impl BeamSet {
    /// Pairs in lexicographic order; each user takes dimensions 0, 1, ... in
    /// the order its pairs come up.
    pub fn assign(pattern: &PatternMatrix) -> Self {
        let k = pattern.users();
        let mut next = vec![0usize; k];
        let map = user_pairs(k)
            .map(|(i, j)| {
                let dims = (next[i], next[j]);
                next[i] += 1;
                next[j] += 1;
                PairAssignment { users: (i, j), dims }
            })
            .collect();
        Self::build(pattern, PairMap(map))
    }

    /// Uses the caller's pair -> dimension labelling.
    pub fn assign_with(pattern: &PatternMatrix, map: &PairMap) -> Result<Self> {
        map.validate(pattern.users())?;
        Ok(Self::build(pattern, map.clone()))
    }

    fn build(pattern: &PatternMatrix, map: PairMap) -> Self {
        let k = pattern.users();
        let mut vectors = vec![vec![Vec::new(); k - 1]; k];
        let mut partners = vec![vec![0; k - 1]; k];
        for a in &map.0 {
            let ((i, j), (di, dj)) = (a.users, a.dims);
            let v = pattern.pair_product(i, j);
            vectors[i][di] = v.clone();
            vectors[j][dj] = v;
            partners[i][di] = j;
            partners[j][dj] = i;
        }
        let mut pairs = map.0;
        pairs.sort_by_key(|a| a.users);
        BeamSet { vectors, partners, pairs }
    }

    pub fn users(&self) -> usize {
        self.vectors.len()
    }

    pub fn vector(&self, user: usize, dim: usize) -> &[u8] {
        &self.vectors[user][dim]
    }

    pub fn user_vectors(&self, user: usize) -> &[Vec<u8>] {
        &self.vectors[user]
    }

    /// The other owner of `user`'s `dim`-th vector.
    pub fn partner(&self, user: usize, dim: usize) -> usize {
        self.partners[user][dim]
    }

    /// Pair assignments sorted by user pair.
    pub fn pairs(&self) -> &[PairAssignment] {
        &self.pairs
    }

    pub fn pair_map(&self) -> PairMap {
        PairMap(self.pairs.clone())
    }

    /// Overwrites one user's vectors without touching the pair structure.
    /// Meant for fault injection when exercising the verifier.
    pub fn override_vectors(&mut self, user: usize, vectors: Vec<Vec<u8>>) {
        assert_eq!(vectors.len(), self.vectors[user].len());
        self.vectors[user] = vectors;
    }
}

/// A complete scheme: configuration, pattern, and beamformers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme {
    pub config: SchemeConfig,
    pub pattern: PatternMatrix,
    pub beams: BeamSet,
}

impl Scheme {
    /// Canonical pattern plus lexicographic pair assignment.
    pub fn generate(users: usize) -> Result<Self> {
        let config = SchemeConfig::new(users)?;
        let pattern = PatternMatrix::generate(&config)?;
        let beams = BeamSet::assign(&pattern);
        Ok(Scheme { config, pattern, beams })
    }

    /// [`PatternMatrix::generate_decodable`] plus lexicographic pair
    /// assignment.
    pub fn generate_decodable(users: usize) -> Result<Self> {
        let config = SchemeConfig::new(users)?;
        let pattern = PatternMatrix::generate_decodable(&config)?;
        let beams = BeamSet::assign(&pattern);
        Ok(Scheme { config, pattern, beams })
    }

    /// Wraps an externally supplied pattern, optionally with an explicit
    /// pair map.
    pub fn from_parts(pattern: PatternMatrix, map: Option<&PairMap>) -> Result<Self> {
        let config = SchemeConfig::new(pattern.users())?;
        let beams = match map {
            Some(map) => BeamSet::assign_with(&pattern, map)?,
            None => BeamSet::assign(&pattern),
        };
        Ok(Scheme { config, pattern, beams })
    }

    /// The reference four-user instance: its switching patterns and its
    /// explicit labelling of which dimensions each pair shares.
    pub fn four_user_reference() -> Self {
        const MODES_T: [[u8; 9]; 4] = [
            [1, 2, 1, 2, 1, 2, 2, 2, 1],
            [2, 1, 1, 2, 2, 1, 2, 2, 2],
            [2, 2, 2, 1, 1, 1, 1, 2, 2],
            [2, 2, 2, 2, 2, 2, 1, 1, 1],
        ];
        // (users, dims), 1-based
        const PAIRS: [((usize, usize), (usize, usize)); 6] = [
            ((3, 4), (1, 1)),
            ((2, 4), (1, 2)),
            ((2, 3), (2, 2)),
            ((1, 4), (1, 3)),
            ((1, 3), (2, 3)),
            ((1, 2), (3, 3)),
        ];
        let modes: Vec<Vec<u8>> = (0..9).map(|r| MODES_T.iter().map(|c| c[r]).collect()).collect();
        let pattern = PatternMatrix::from_modes(&modes).expect("reference pattern is valid");
        let map = PairMap(
            PAIRS
                .iter()
                .map(|&((i, j), (di, dj))| PairAssignment {
                    users: (i - 1, j - 1),
                    dims: (di - 1, dj - 1),
                })
                .collect(),
        );
        Scheme::from_parts(pattern, Some(&map)).expect("reference pair map is valid")
    }

    pub fn to_doc(&self) -> SchemeDoc {
        SchemeDoc {
            users: self.config.users,
            channel_uses: self.config.channel_uses,
            tilde: Some(self.pattern.tilde().to_vec()),
            pairs: self
                .beams
                .pairs()
                .iter()
                .map(|a| PairDoc {
                    users: [a.users.0 + 1, a.users.1 + 1],
                    dims: [a.dims.0 + 1, a.dims.1 + 1],
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_doc())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<SchemeDoc>(text)?.into_scheme()
    }
}

/// Serialized scheme: 1-based users and dimensions, row-major `tilde`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeDoc {
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "m")]
    pub channel_uses: usize,
    /// Optional on input: a pair map alone can be applied to a generated
    /// pattern.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tilde: Option<Vec<Vec<u8>>>,
    pub pairs: Vec<PairDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDoc {
    pub users: [usize; 2],
    pub dims: [usize; 2],
}

impl SchemeDoc {
    pub fn pair_map(&self) -> Result<PairMap> {
        let mut out = Vec::with_capacity(self.pairs.len());
        for p in &self.pairs {
            if p.users.contains(&0) || p.dims.contains(&0) {
                return Err(Error::InvalidPairMap("users and dimensions are 1-based".into()));
            }
            let (mut u, mut d) = ((p.users[0] - 1, p.users[1] - 1), (p.dims[0] - 1, p.dims[1] - 1));
            if u.0 > u.1 {
                u = (u.1, u.0);
                d = (d.1, d.0);
            }
            out.push(PairAssignment { users: u, dims: d });
        }
        Ok(PairMap(out))
    }

    /// Builds the scheme; without `tilde` the canonical pattern is used.
    pub fn into_scheme(self) -> Result<Scheme> {
        let map = self.pair_map()?;
        let pattern = match self.tilde {
            Some(t) => PatternMatrix::from_tilde(t)?,
            None => PatternMatrix::generate(&SchemeConfig::new(self.users)?)?,
        };
        if pattern.users() != self.users || pattern.channel_uses() != self.channel_uses {
            return Err(Error::InvalidPattern(format!(
                "document says K = {}, m = {} but pattern is {} x {}",
                self.users,
                self.channel_uses,
                pattern.channel_uses(),
                pattern.users()
            )));
        }
        Scheme::from_parts(pattern, Some(&map))
    }
}
