//! One Monte Carlo trial: placement, delivery, transmission, decoding.

use serde::{Deserialize, Serialize};

use crate::channel::LinearNetwork;
use crate::content::{
    build_piece_table_for_group, validate_demands, CacheMap, FileLibrary, PieceTable, SystemConfig,
    UserSet,
};
use crate::decoder::{decode_user, receive, verify_all};
use crate::delivery::{
    plan_delivery, schedule_delivery, schedule_tdma, DeliveryPlan, TransmissionSchedule,
};
use crate::error::{Error, Result};
use crate::placement::{coordinated_group_size, place, Placement};
use crate::seed;

/// Networks tried before a trial gives up on generic position.
pub const MAX_RESAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delivery {
    /// All users served together.
    Joint,
    /// Coordinated group first, then the decentralized group.
    Tdma,
}

impl std::str::FromStr for Delivery {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Delivery::Joint),
            "tdma" => Ok(Delivery::Tdma),
            other => Err(Error::Parse(format!("unknown delivery '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSetup {
    pub cfg: SystemConfig,
    pub placement: Placement,
    pub kc: usize,
    pub delivery: Delivery,
    pub demands: Vec<usize>,
}

impl TrialSetup {
    pub fn validate(&self) -> Result<()> {
        self.cfg.validate()?;
        validate_demands(&self.demands, self.cfg.k, self.cfg.n)?;
        if self.placement == Placement::Hybrid && self.kc > self.cfg.k {
            return Err(Error::InvalidConfig(format!(
                "Kc={} exceeds K={}",
                self.kc, self.cfg.k
            )));
        }
        Ok(())
    }

    /// Users placed by coordination (group A) and by random subsets (group B).
    pub fn groups(&self) -> (UserSet, UserSet) {
        let kc = coordinated_group_size(self.placement, self.cfg.k, self.kc);
        ((0..kc).collect(), (kc..self.cfg.k).collect())
    }
}

/// Seeds of the independent random streams inside one trial.
#[derive(Clone, Copy, Debug)]
pub struct TrialSeeds {
    pub placement: u64,
    pub library: u64,
    pub coefficients: u64,
    network_root: u64,
}

impl TrialSeeds {
    pub fn new(trial_seed: u64) -> TrialSeeds {
        TrialSeeds {
            placement: seed::derive(trial_seed, &[1]),
            library: seed::derive(trial_seed, &[2]),
            coefficients: seed::derive(trial_seed, &[4]),
            network_root: seed::derive(trial_seed, &[3]),
        }
    }

    pub fn network(&self, attempt: usize) -> u64 {
        seed::derive(self.network_root, &[attempt as u64])
    }
}

/// One table for joint delivery; the two group tables for TDMA.
pub fn piece_tables(setup: &TrialSetup, cache: &CacheMap) -> Result<Vec<PieceTable>> {
    let all: UserSet = (0..setup.cfg.k).collect();
    match setup.delivery {
        Delivery::Joint => Ok(vec![build_piece_table_for_group(
            cache,
            &setup.demands,
            all,
        )?]),
        Delivery::Tdma => {
            let (a, b) = setup.groups();
            Ok(vec![
                build_piece_table_for_group(cache, &setup.demands, a)?,
                build_piece_table_for_group(cache, &setup.demands, b)?,
            ])
        }
    }
}

pub fn place_trial(setup: &TrialSetup, seeds: &TrialSeeds) -> Result<CacheMap> {
    place(&setup.cfg, setup.placement, setup.kc, seeds.placement)
}

/// Delivery plan without symbol values; enough for delay accounting.
pub fn plan_trial(setup: &TrialSetup, trial_seed: u64) -> Result<(DeliveryPlan, Vec<PieceTable>)> {
    setup.validate()?;
    let seeds = TrialSeeds::new(trial_seed);
    let cache = place_trial(setup, &seeds)?;
    let tables = piece_tables(setup, &cache)?;
    let mut plan = DeliveryPlan::default();
    for t in &tables {
        plan.blocks.extend(plan_delivery(t, setup.cfg.l)?.blocks);
    }
    Ok((plan, tables))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub delay_slots: usize,
    pub resamples: usize,
    /// Singular per-block systems, summed over users.
    pub decode_failures: usize,
    /// Blocks decoded, summed over users.
    pub decoded_blocks: usize,
    pub per_user_ok: Vec<bool>,
    pub all_ok: bool,
}

/// Everything a full symbol-level trial produces.
pub struct TrialRun {
    pub cache: CacheMap,
    pub library: FileLibrary,
    pub tables: Vec<PieceTable>,
    pub net: LinearNetwork,
    pub schedule: TransmissionSchedule,
    pub resamples: usize,
}

/// Places, samples a network (resampling while precoders cannot be
/// designed) and builds the symbol-level schedule.
pub fn build_trial(setup: &TrialSetup, trial_seed: u64) -> Result<TrialRun> {
    setup.validate()?;
    let seeds = TrialSeeds::new(trial_seed);
    let field = setup.cfg.field()?;
    let cache = place_trial(setup, &seeds)?;
    let library = FileLibrary::random(&setup.cfg, seeds.library)?;
    let tables = piece_tables(setup, &cache)?;
    for attempt in 0..MAX_RESAMPLES {
        let net = LinearNetwork::sample(field, setup.cfg.k, setup.cfg.l, seeds.network(attempt));
        let scheduled = match tables.as_slice() {
            [t] => schedule_delivery(t, &library, &net, seeds.coefficients),
            [a, b] => schedule_tdma(a, b, &library, &net, seeds.coefficients),
            _ => unreachable!("one or two tables"),
        };
        match scheduled {
            Ok(schedule) => {
                return Ok(TrialRun {
                    cache,
                    library,
                    tables,
                    net,
                    schedule,
                    resamples: attempt,
                })
            }
            Err(Error::DegenerateNetwork) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ResampleLimit(MAX_RESAMPLES))
}

/// Full symbol-exact trial with decoding and verification at every user.
pub fn run_trial(setup: &TrialSetup, trial_seed: u64) -> Result<TrialOutcome> {
    let run = build_trial(setup, trial_seed)?;
    let stream = receive(&run.schedule, &run.net)?;
    let mut decoded = Vec::with_capacity(setup.cfg.k);
    let mut decode_failures = 0;
    let mut decoded_blocks = 0;
    for k in 0..setup.cfg.k {
        let d = decode_user(
            k,
            setup.demands[k],
            stream.user(k),
            &run.cache,
            &run.library,
            &run.schedule,
            &run.net,
        )?;
        decode_failures += d.failed_blocks;
        decoded_blocks += d.blocks;
        decoded.push(d.symbols);
    }
    let verdict = verify_all(&run.library, &setup.demands, &decoded);
    Ok(TrialOutcome {
        delay_slots: run.schedule.total_slots(),
        resamples: run.resamples,
        decode_failures,
        decoded_blocks,
        per_user_ok: verdict.per_user,
        all_ok: verdict.all_ok,
    })
}
