//! File library, symbol-level cache contents, and the grouping of requested
//! symbols by the exact set of other users that cache them.

use std::collections::BTreeMap;
use std::fmt;

use bitvec::prelude::*;
use itertools::Itertools;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::{Field, FieldElement};
use crate::seed;

/// Users are indexed 0..K; sets are bitmasks, so K is capped at 64.
pub const MAX_USERS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// users
    pub k: usize,
    /// transmitters
    pub l: usize,
    /// files in the library
    pub n: usize,
    /// per-user cache size, in files
    pub m: f64,
    /// file size, in symbols
    pub f: usize,
    pub field_bits: u32,
}

impl SystemConfig {
    pub fn new(k: usize, l: usize, n: usize, m: f64, f: usize) -> Result<SystemConfig> {
        let cfg = SystemConfig {
            k,
            l,
            n,
            m,
            f,
            field_bits: 16,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_field_bits(mut self, bits: u32) -> Result<SystemConfig> {
        self.field_bits = bits;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k == 0 || self.l == 0 || self.n == 0 || self.f == 0 {
            return bad(format!(
                "K, L, N, F must all be positive (K={}, L={}, N={}, F={})",
                self.k, self.l, self.n, self.f
            ));
        }
        if self.k > MAX_USERS {
            return bad(format!(
                "K={} exceeds the supported maximum {MAX_USERS}",
                self.k
            ));
        }
        if self.n < self.k {
            return bad(format!(
                "need N >= K for distinct demands (N={}, K={})",
                self.n, self.k
            ));
        }
        if !(self.m >= 0.0 && self.m <= self.n as f64) {
            return bad(format!("cache size M={} outside [0, N={}]", self.m, self.n));
        }
        if self.f > u32::MAX as usize {
            return bad(format!("F={} too large", self.f));
        }
        Field::new(self.field_bits)?;
        Ok(())
    }

    /// Normalized cache size M/N.
    pub fn p(&self) -> f64 {
        self.m / self.n as f64
    }

    pub fn field(&self) -> Result<Field> {
        Field::new(self.field_bits)
    }

    /// Symbols of each file a decentralized user caches.
    pub fn cached_per_file(&self) -> usize {
        ((self.p() * self.f as f64).round() as usize).min(self.f)
    }
}

/// The worst-case demand pattern: every user asks for a different file.
pub fn distinct_demands(k: usize) -> Vec<usize> {
    (0..k).collect()
}

pub fn validate_demands(demands: &[usize], k: usize, n: usize) -> Result<()> {
    if demands.len() != k {
        return Err(Error::InvalidConfig(format!(
            "demand vector has {} entries for {k} users",
            demands.len()
        )));
    }
    if let Some(&d) = demands.iter().find(|&&d| d >= n) {
        return Err(Error::InvalidConfig(format!(
            "demanded file {d} not in library of {n}"
        )));
    }
    Ok(())
}

/// Set of user indices, ordered lexicographically by sorted members.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct UserSet(u64);

impl UserSet {
    pub const EMPTY: UserSet = UserSet(0);

    pub fn from_bits(bits: u64) -> UserSet {
        UserSet(bits)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn singleton(u: usize) -> UserSet {
        UserSet(1 << u)
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, u: usize) -> bool {
        self.0 >> u & 1 == 1
    }

    pub fn with(self, u: usize) -> UserSet {
        UserSet(self.0 | 1 << u)
    }

    pub fn without(self, u: usize) -> UserSet {
        UserSet(self.0 & !(1 << u))
    }

    pub fn union(self, o: UserSet) -> UserSet {
        UserSet(self.0 | o.0)
    }

    pub fn difference(self, o: UserSet) -> UserSet {
        UserSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: UserSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                return None;
            }
            let u = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(u)
        })
    }
}

impl FromIterator<usize> for UserSet {
    fn from_iter<I: IntoIterator<Item = usize>>(it: I) -> Self {
        it.into_iter().fold(UserSet::EMPTY, UserSet::with)
    }
}

impl Ord for UserSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.iter().cmp(other.iter())
    }
}

impl PartialOrd for UserSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl Serialize for UserSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

/// The N library files, F symbols each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileLibrary {
    files: Vec<Vec<FieldElement>>,
}

impl FileLibrary {
    pub fn random(cfg: &SystemConfig, seed: u64) -> Result<FileLibrary> {
        let field = cfg.field()?;
        let files = (0..cfg.n)
            .map(|n| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(seed::derive(seed, &[0x66696c65, n as u64]));
                (0..cfg.f).map(|_| field.random(&mut rng)).collect()
            })
            .collect();
        Ok(FileLibrary { files })
    }

    pub fn from_files(files: Vec<Vec<FieldElement>>) -> Result<FileLibrary> {
        if let Some(first) = files.first() {
            if let Some(bad) = files.iter().find(|f| f.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    found: bad.len(),
                });
            }
        }
        Ok(FileLibrary { files })
    }

    pub fn file(&self, n: usize) -> &[FieldElement] {
        &self.files[n]
    }

    pub fn num_files(&self) -> usize {
        self.files.len()
    }

    pub fn file_size(&self) -> usize {
        self.files.first().map_or(0, Vec::len)
    }
}

/// For each (user, file), which symbol indices that user holds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheMap {
    users: usize,
    files: usize,
    file_size: usize,
    cached: Vec<BitVec>,
}

impl CacheMap {
    pub fn empty(users: usize, files: usize, file_size: usize) -> CacheMap {
        CacheMap {
            users,
            files,
            file_size,
            cached: vec![bitvec![0; file_size]; users * files],
        }
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn file_size(&self) -> usize {
        self.file_size
    }

    pub fn symbols(&self, user: usize, file: usize) -> &BitSlice {
        &self.cached[user * self.files + file]
    }

    pub fn is_cached(&self, user: usize, file: usize, symbol: usize) -> bool {
        self.cached[user * self.files + file][symbol]
    }

    pub fn insert(&mut self, user: usize, file: usize, symbol: usize) {
        self.cached[user * self.files + file].set(symbol, true);
    }

    pub fn count(&self, user: usize, file: usize) -> usize {
        self.symbols(user, file).count_ones()
    }

    /// Total symbols held by `user` across all files.
    pub fn load(&self, user: usize) -> usize {
        (0..self.files).map(|n| self.count(user, n)).sum()
    }

    /// Users other than `requester`, among `group`, that hold the symbol.
    pub fn holders(&self, group: UserSet, requester: usize, file: usize, symbol: usize) -> UserSet {
        group
            .without(requester)
            .iter()
            .filter(|&u| self.is_cached(u, file, symbol))
            .collect()
    }
}

/// Requested symbols grouped by (requester r, exact caching set S), where S
/// is the set of users in the serving group other than r that hold the symbol.
/// Only nonempty pieces are stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PieceTable {
    group: UserSet,
    demands: Vec<usize>,
    file_size: usize,
    pieces: BTreeMap<(usize, UserSet), Vec<u32>>,
    local: BTreeMap<usize, usize>,
}

impl PieceTable {
    pub fn group(&self) -> UserSet {
        self.group
    }

    pub fn demands(&self) -> &[usize] {
        &self.demands
    }

    pub fn file_size(&self) -> usize {
        self.file_size
    }

    pub fn pieces(&self) -> &BTreeMap<(usize, UserSet), Vec<u32>> {
        &self.pieces
    }

    /// Symbol indices of W_{d_r} cached by exactly `set` (and not by `r`).
    pub fn piece(&self, requester: usize, set: UserSet) -> &[u32] {
        self.pieces
            .get(&(requester, set))
            .map_or(&[][..], Vec::as_slice)
    }

    pub fn piece_len(&self, requester: usize, set: UserSet) -> usize {
        self.piece(requester, set).len()
    }

    /// Symbols of its own demand a requester already holds.
    pub fn locally_cached(&self, requester: usize) -> usize {
        self.local.get(&requester).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Lengths of every piece `(r, S)` of the group with `|S| = alpha - 1`,
    /// empty ones included, requesters ascending and sets in lexicographic
    /// order.
    pub fn piece_length_distribution(&self, alpha: usize) -> Vec<usize> {
        let mut out = Vec::new();
        if alpha == 0 {
            return out;
        }
        for r in self.group.iter() {
            let others: Vec<usize> = self.group.without(r).iter().collect();
            for s in others.into_iter().combinations(alpha - 1) {
                out.push(self.piece_len(r, s.into_iter().collect()));
            }
        }
        out
    }
}

/// Piece table over all users.
pub fn build_piece_table(cache: &CacheMap, demands: &[usize]) -> Result<PieceTable> {
    let all: UserSet = (0..cache.users()).collect();
    build_piece_table_for_group(cache, demands, all)
}

/// Piece table for the users in `group` only. Caching by users outside the
/// group is ignored, as is their demand.
pub fn build_piece_table_for_group(
    cache: &CacheMap,
    demands: &[usize],
    group: UserSet,
) -> Result<PieceTable> {
    validate_demands(demands, cache.users(), cache.files())?;
    if group.iter().any(|u| u >= cache.users()) {
        return Err(Error::InvalidConfig(format!(
            "group {group:?} has unknown users"
        )));
    }
    let mut pieces: BTreeMap<(usize, UserSet), Vec<u32>> = BTreeMap::new();
    let mut local = BTreeMap::new();
    for r in group.iter() {
        let file = demands[r];
        let mut own = 0;
        for sym in 0..cache.file_size() {
            if cache.is_cached(r, file, sym) {
                own += 1;
                continue;
            }
            let s = cache.holders(group, r, file, sym);
            pieces.entry((r, s)).or_default().push(sym as u32);
        }
        local.insert(r, own);
    }
    Ok(PieceTable {
        group,
        demands: demands.to_vec(),
        file_size: cache.file_size(),
        pieces,
        local,
    })
}
