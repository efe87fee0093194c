//! Multi-transmitter coded delivery.
//!
//! For each caching level `alpha` (from the full group size down to 1) and
//! each transmission set `T` of `min(alpha + L - 1, K)` users, the
//! transmitters send `omega = C(|T| - 1, alpha - 1)` coded vectors. Each
//! vector superposes, over every `U` in `T` with `|U| = alpha`, a random
//! combination of the mini-files `W_{d_r, U \ {r}}` (`r` in `U`) precoded by
//! a zero-forcing vector that nulls the users of `T \ U`. A user `k` in `T`
//! only hears the terms with `k` in `U`; it cancels the mini-files it caches
//! and solves an `omega x omega` system for its own.
//!
//! Every piece `W_{d_r, S}` is cut into `C(K - alpha, |T| - alpha)`
//! mini-files, one per transmission set containing `S + r`, taken in the
//! lexicographic order of those sets.

use std::collections::HashMap;
use std::io::Write;

use itertools::Itertools;
use serde::Serialize;

use crate::channel::LinearNetwork;
use crate::combin::binomial;
use crate::content::{FileLibrary, PieceTable, UserSet};
use crate::error::{Error, Result};
use crate::gf::{Field, FieldElement, FieldVector};
use crate::seed;

/// One fragment of a requester's piece, carried in one transmission set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MiniFile {
    pub requester: usize,
    pub file: usize,
    /// Symbol indices into `W_file`.
    pub symbols: Vec<u32>,
}

/// The contribution of one `U` within a block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodedGroup {
    pub users: UserSet,
    /// One mini-file per member of `users`, in ascending user order.
    pub parts: Vec<MiniFile>,
    /// Zero-forcing precoder; absent in accounting-only plans.
    pub precoder: Option<FieldVector>,
}

impl CodedGroup {
    pub fn part_of(&self, user: usize) -> Option<&MiniFile> {
        self.parts.iter().find(|p| p.requester == user)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub alpha: usize,
    pub users: UserSet,
    pub omega: usize,
    /// Slots per repetition: the longest mini-file in the block.
    pub block_len: usize,
    pub groups: Vec<CodedGroup>,
}

impl Block {
    pub fn slots(&self) -> usize {
        self.omega * self.block_len
    }
}

/// Block metadata as dumped for debugging.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockSummary {
    pub alpha: usize,
    #[serde(rename = "T")]
    pub users: UserSet,
    pub omega: usize,
    pub blocklen: usize,
}

impl From<&Block> for BlockSummary {
    fn from(b: &Block) -> Self {
        BlockSummary {
            alpha: b.alpha,
            users: b.users,
            omega: b.omega,
            blocklen: b.block_len,
        }
    }
}

/// Block structure of a delivery without any symbol values.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DeliveryPlan {
    pub blocks: Vec<Block>,
}

impl DeliveryPlan {
    pub fn total_slots(&self) -> usize {
        self.blocks.iter().map(Block::slots).sum()
    }

    pub fn report(&self) -> DeliveryReport {
        DeliveryReport {
            coding_delay_slots: self.total_slots(),
            per_block_lengths: self.blocks.iter().map(BlockSummary::from).collect(),
            resample_events: 0,
        }
    }

    fn append(&mut self, other: DeliveryPlan) {
        self.blocks.extend(other.blocks);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeliveryReport {
    pub coding_delay_slots: usize,
    pub per_block_lengths: Vec<BlockSummary>,
    pub resample_events: usize,
}

/// Full schedule: plan with precoders, the public coefficient seed, and the
/// length-L vector sent in each slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransmissionSchedule {
    pub plan: DeliveryPlan,
    pub coefficient_seed: u64,
    pub slots: Vec<FieldVector>,
}

impl TransmissionSchedule {
    pub fn blocks(&self) -> &[Block] {
        &self.plan.blocks
    }

    pub fn total_slots(&self) -> usize {
        self.slots.len()
    }

    /// One JSON object per block: `{"alpha", "T", "omega", "blocklen"}`.
    pub fn dump_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for b in self.blocks() {
            serde_json::to_writer(&mut out, &BlockSummary::from(b))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn coding_delay_of_schedule(schedule: &TransmissionSchedule) -> DeliveryReport {
    let report = schedule.plan.report();
    debug_assert_eq!(report.coding_delay_slots, schedule.total_slots());
    report
}

/// Size of the transmission sets at caching level `alpha` in a group of `k`.
pub fn transmission_set_size(alpha: usize, transmitters: usize, k: usize) -> usize {
    (alpha + transmitters - 1).min(k)
}

/// Repetitions per transmission set.
pub fn repetitions(alpha: usize, transmitters: usize, k: usize) -> usize {
    binomial(transmission_set_size(alpha, transmitters, k) - 1, alpha - 1) as usize
}

/// Mini-files each piece at level `alpha` is cut into.
pub fn split_count(alpha: usize, transmitters: usize, k: usize) -> usize {
    let t = transmission_set_size(alpha, transmitters, k);
    binomial(k - alpha, t - alpha) as usize
}

/// The `index`-th of `parts` ceil-sized chunks of `piece`; trailing chunks
/// may be short or empty.
fn mini_file(piece: &[u32], parts: usize, index: usize) -> &[u32] {
    if piece.is_empty() {
        return &[];
    }
    let chunk = piece.len().div_ceil(parts);
    let start = (index * chunk).min(piece.len());
    let end = (start + chunk).min(piece.len());
    &piece[start..end]
}

/// Block structure for `table`'s user group with `transmitters` antennas.
/// Blocks whose every mini-file is empty are omitted.
pub fn plan_delivery(table: &PieceTable, transmitters: usize) -> Result<DeliveryPlan> {
    if transmitters == 0 {
        return Err(Error::InvalidConfig("need at least one transmitter".into()));
    }
    let members: Vec<usize> = table.group().iter().collect();
    let k = members.len();
    let mut plan = DeliveryPlan::default();
    if table.is_empty() {
        return Ok(plan);
    }
    for alpha in (1..=k).rev() {
        let t_size = transmission_set_size(alpha, transmitters, k);
        let omega = repetitions(alpha, transmitters, k);
        let parts_per_piece = split_count(alpha, transmitters, k);
        let mut next_mini: HashMap<UserSet, usize> = HashMap::new();
        for t in members.iter().copied().combinations(t_size) {
            let t_set: UserSet = t.iter().copied().collect();
            let mut groups = Vec::with_capacity(binomial(t_size, alpha) as usize);
            let mut block_len = 0;
            for u in t.iter().copied().combinations(alpha) {
                let u_set: UserSet = u.iter().copied().collect();
                let slot = next_mini.entry(u_set).or_insert(0);
                let index = *slot;
                *slot += 1;
                let parts: Vec<MiniFile> = u
                    .iter()
                    .map(|&r| {
                        let piece = table.piece(r, u_set.without(r));
                        MiniFile {
                            requester: r,
                            file: table.demands()[r],
                            symbols: mini_file(piece, parts_per_piece, index).to_vec(),
                        }
                    })
                    .collect();
                block_len = parts
                    .iter()
                    .map(|p| p.symbols.len())
                    .fold(block_len, usize::max);
                groups.push(CodedGroup {
                    users: u_set,
                    parts,
                    precoder: None,
                });
            }
            if block_len > 0 {
                plan.blocks.push(Block {
                    alpha,
                    users: t_set,
                    omega,
                    block_len,
                    groups,
                });
            }
        }
    }
    Ok(plan)
}

/// Precoder that is orthogonal to `h_k` for every `k` in `T \ U` and seen
/// with nonzero gain by every member of `U`.
pub fn design_zf_vector(net: &LinearNetwork, t: UserSet, u: UserSet) -> Result<FieldVector> {
    if !u.is_subset(t) {
        return Err(Error::InvalidConfig(format!(
            "{u:?} is not a subset of {t:?}"
        )));
    }
    let nulled: Vec<usize> = t.difference(u).iter().collect();
    if nulled.len() >= net.transmitters() {
        return Err(Error::InvalidConfig(format!(
            "cannot null {} users with {} transmitters",
            nulled.len(),
            net.transmitters()
        )));
    }
    let constraints = net.matrix().select_rows(&nulled);
    let psi = constraints
        .null_space_vector(net.field())
        .ok_or(Error::DegenerateNetwork)?;
    if u.iter().any(|k| net.gain(k, &psi).is_zero()) {
        return Err(Error::DegenerateNetwork);
    }
    Ok(psi)
}

/// Public combining coefficient for requester `r`'s mini-file in group `U`,
/// repetition `w` of block `(alpha, T)`. Derived from the seed alone, so
/// every user can regenerate it.
pub fn combining_coefficient(
    field: &Field,
    seed: u64,
    alpha: usize,
    t: UserSet,
    w: usize,
    u: UserSet,
    r: usize,
) -> FieldElement {
    field.from_hash(seed::derive(
        seed,
        &[alpha as u64, t.bits(), w as u64, u.bits(), r as u64],
    ))
}

fn attach_precoders(plan: &mut DeliveryPlan, net: &LinearNetwork) -> Result<()> {
    for block in &mut plan.blocks {
        for g in &mut block.groups {
            g.precoder = Some(design_zf_vector(net, block.users, g.users)?);
        }
    }
    Ok(())
}

fn encode(
    plan: &DeliveryPlan,
    library: &FileLibrary,
    net: &LinearNetwork,
    coefficient_seed: u64,
) -> Vec<FieldVector> {
    let field = net.field();
    let l = net.transmitters();
    let mut slots = Vec::with_capacity(plan.total_slots());
    for b in &plan.blocks {
        for w in 0..b.omega {
            let coeffs: Vec<Vec<FieldElement>> = b
                .groups
                .iter()
                .map(|g| {
                    g.parts
                        .iter()
                        .map(|p| {
                            combining_coefficient(
                                field,
                                coefficient_seed,
                                b.alpha,
                                b.users,
                                w,
                                g.users,
                                p.requester,
                            )
                        })
                        .collect()
                })
                .collect();
            for j in 0..b.block_len {
                let mut s = vec![FieldElement::ZERO; l];
                for (g, cs) in b.groups.iter().zip(&coeffs) {
                    let mut combined = FieldElement::ZERO;
                    for (p, &c) in g.parts.iter().zip(cs) {
                        if let Some(&sym) = p.symbols.get(j) {
                            let x = library.file(p.file)[sym as usize];
                            combined = field.add(combined, field.mul(c, x));
                        }
                    }
                    let psi = g.precoder.as_ref().expect("precoders attached");
                    field.axpy(&mut s, combined, psi);
                }
                slots.push(s);
            }
        }
    }
    slots
}

/// Builds the complete symbol-level schedule. Fails with
/// [`Error::DegenerateNetwork`] if some precoder cannot be designed; the
/// caller resamples the network.
pub fn schedule_delivery(
    table: &PieceTable,
    library: &FileLibrary,
    net: &LinearNetwork,
    coefficient_seed: u64,
) -> Result<TransmissionSchedule> {
    let mut plan = plan_delivery(table, net.transmitters())?;
    attach_precoders(&mut plan, net)?;
    let slots = encode(&plan, library, net, coefficient_seed);
    Ok(TransmissionSchedule {
        plan,
        coefficient_seed,
        slots,
    })
}

/// Serves group A's table, then group B's, in disjoint slots.
pub fn plan_tdma(
    table_a: &PieceTable,
    table_b: &PieceTable,
    transmitters: usize,
) -> Result<DeliveryPlan> {
    let mut plan = plan_delivery(table_a, transmitters)?;
    plan.append(plan_delivery(table_b, transmitters)?);
    Ok(plan)
}

pub fn schedule_tdma(
    table_a: &PieceTable,
    table_b: &PieceTable,
    library: &FileLibrary,
    net: &LinearNetwork,
    coefficient_seed: u64,
) -> Result<TransmissionSchedule> {
    let mut plan = plan_tdma(table_a, table_b, net.transmitters())?;
    attach_precoders(&mut plan, net)?;
    let slots = encode(&plan, library, net, coefficient_seed);
    Ok(TransmissionSchedule {
        plan,
        coefficient_seed,
        slots,
    })
}
