//! Cache placement: decentralized random subsets, coordinated (centralized)
//! subfile labelling, and the two-group hybrid of the two.

use itertools::Itertools;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::content::{CacheMap, SystemConfig, UserSet};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Decentralized,
    Centralized,
    Hybrid,
}

impl std::str::FromStr for Placement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "decentralized" => Ok(Placement::Decentralized),
            "centralized" => Ok(Placement::Centralized),
            "hybrid" => Ok(Placement::Hybrid),
            other => Err(Error::Parse(format!("unknown placement '{other}'"))),
        }
    }
}

fn place_random_subsets(cache: &mut CacheMap, cfg: &SystemConfig, users: UserSet, seed: u64) {
    let per_file = cfg.cached_per_file();
    for u in users.iter() {
        for n in 0..cfg.n {
            // one stream per (user, file): a user's cache does not depend on
            // which other users are placed alongside it
            let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(seed, &[u as u64, n as u64]));
            for sym in index::sample(&mut rng, cfg.f, per_file) {
                cache.insert(u, n, sym);
            }
        }
    }
}

/// Every user caches round(M/N * F) symbols of every file, chosen uniformly
/// without replacement, independently across users and files.
pub fn place_decentralized(cfg: &SystemConfig, seed: u64) -> Result<CacheMap> {
    cfg.validate()?;
    let mut cache = CacheMap::empty(cfg.k, cfg.n, cfg.f);
    place_random_subsets(&mut cache, cfg, (0..cfg.k).collect(), seed);
    Ok(cache)
}

/// Coordinated caching level t = |group| * M/N; must be an integer.
pub fn centralized_level(group_size: usize, cfg: &SystemConfig) -> Result<usize> {
    let t = group_size as f64 * cfg.p();
    let rounded = t.round();
    if (t - rounded).abs() > 1e-9 {
        return Err(Error::InvalidCentralizedParameter {
            users: group_size,
            cache: cfg.m,
            files: cfg.n,
            t,
        });
    }
    Ok(rounded as usize)
}

fn place_coordinated(cache: &mut CacheMap, cfg: &SystemConfig, group: &[usize]) -> Result<()> {
    let t = centralized_level(group.len(), cfg)?;
    if t == 0 {
        return Ok(());
    }
    // Subfile labels are the t-subsets of the group in lexicographic order,
    // laid out contiguously. F mod C(Kc, t) labels take one extra symbol,
    // chosen greedily so no user is loaded twice before all are loaded once.
    let labels: Vec<Vec<usize>> = group.iter().copied().combinations(t).collect();
    let base = cfg.f / labels.len();
    let long = balanced_extras(&labels, cfg.f % labels.len(), cfg.k);
    let mut start = 0;
    for (i, label) in labels.iter().enumerate() {
        let len = base + usize::from(long[i]);
        for &u in label {
            for n in 0..cfg.n {
                for sym in start..start + len {
                    cache.insert(u, n, sym);
                }
            }
        }
        start += len;
    }
    Ok(())
}

fn balanced_extras(labels: &[Vec<usize>], extra: usize, users: usize) -> Vec<bool> {
    let mut chosen = vec![false; labels.len()];
    let mut load = vec![0usize; users];
    for _ in 0..extra {
        let cost = |l: &Vec<usize>| l.iter().map(|&u| load[u]).max().unwrap_or(0);
        let best = (0..labels.len())
            .filter(|&i| !chosen[i])
            .min_by_key(|&i| {
                (
                    cost(&labels[i]),
                    labels[i].iter().map(|&u| load[u]).sum::<usize>(),
                    i,
                )
            })
            .expect("extra < number of labels");
        chosen[best] = true;
        for &u in &labels[best] {
            load[u] += 1;
        }
    }
    chosen
}

/// Classic coordinated placement over all K users.
pub fn place_centralized(cfg: &SystemConfig) -> Result<CacheMap> {
    cfg.validate()?;
    let mut cache = CacheMap::empty(cfg.k, cfg.n, cfg.f);
    let group: Vec<usize> = (0..cfg.k).collect();
    place_coordinated(&mut cache, cfg, &group)?;
    Ok(cache)
}

/// Users 0..kc cache by coordinated placement labelled over that group only;
/// users kc..K cache decentralized.
pub fn place_hybrid(cfg: &SystemConfig, kc: usize, seed: u64) -> Result<CacheMap> {
    cfg.validate()?;
    if kc > cfg.k {
        return Err(Error::InvalidConfig(format!("Kc={kc} exceeds K={}", cfg.k)));
    }
    let mut cache = CacheMap::empty(cfg.k, cfg.n, cfg.f);
    let group_a: Vec<usize> = (0..kc).collect();
    place_coordinated(&mut cache, cfg, &group_a)?;
    place_random_subsets(&mut cache, cfg, (kc..cfg.k).collect(), seed);
    Ok(cache)
}

/// Dispatch on the placement scheme. `kc` is only read for hybrid.
pub fn place(cfg: &SystemConfig, placement: Placement, kc: usize, seed: u64) -> Result<CacheMap> {
    match placement {
        Placement::Decentralized => place_decentralized(cfg, seed),
        Placement::Centralized => place_centralized(cfg),
        Placement::Hybrid => place_hybrid(cfg, kc, seed),
    }
}

/// Size of the coordinated group for a scheme.
pub fn coordinated_group_size(placement: Placement, k: usize, kc: usize) -> usize {
    match placement {
        Placement::Decentralized => 0,
        Placement::Centralized => k,
        Placement::Hybrid => kc,
    }
}
