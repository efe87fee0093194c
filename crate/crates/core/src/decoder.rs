//! Per-user reconstruction from the received stream, the user's own cache
//! and the public schedule metadata.

use serde::Serialize;

use crate::channel::LinearNetwork;
use crate::content::{CacheMap, FileLibrary};
use crate::delivery::{combining_coefficient, TransmissionSchedule};
use crate::error::{Error, Result};
use crate::gf::{FieldElement, FieldMatrix};

/// What every user heard, one symbol per slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReceivedStream {
    per_user: Vec<Vec<FieldElement>>,
}

impl ReceivedStream {
    pub fn user(&self, k: usize) -> &[FieldElement] {
        &self.per_user[k]
    }

    pub fn len(&self) -> usize {
        self.per_user.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Pushes every slot of the schedule through the network.
pub fn receive(schedule: &TransmissionSchedule, net: &LinearNetwork) -> Result<ReceivedStream> {
    let mut per_user = vec![Vec::with_capacity(schedule.total_slots()); net.users()];
    for s in &schedule.slots {
        for (k, r) in net.transmit_slot(s)?.into_iter().enumerate() {
            per_user[k].push(r);
        }
    }
    Ok(ReceivedStream { per_user })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedFile {
    pub symbols: Vec<FieldElement>,
    /// Blocks whose system was singular.
    pub failed_blocks: usize,
    /// Blocks the user took part in.
    pub blocks: usize,
    /// Symbols obtained over the air.
    pub recovered: usize,
    /// Symbols read from the local cache.
    pub from_cache: usize,
    /// Symbols delivered more than once.
    pub duplicates: usize,
}

impl DecodedFile {
    pub fn is_complete(&self) -> bool {
        self.failed_blocks == 0
            && self.duplicates == 0
            && self.recovered + self.from_cache == self.symbols.len()
    }
}

/// Reconstructs `W_{demand}` for user `k`.
///
/// In each block whose transmission set contains `k`, the groups not
/// containing `k` are zero-forced away. The remaining `omega` groups each
/// hold one unknown mini-file of `k`; everything else in them is cached at
/// `k` and is subtracted. The `omega` repetitions then give a square system
/// per slot, all sharing one coefficient matrix.
pub fn decode_user(
    k: usize,
    demand: usize,
    stream: &[FieldElement],
    cache: &CacheMap,
    library: &FileLibrary,
    schedule: &TransmissionSchedule,
    net: &LinearNetwork,
) -> Result<DecodedFile> {
    let field = net.field();
    let f = cache.file_size();
    if stream.len() != schedule.total_slots() {
        return Err(Error::DimensionMismatch {
            expected: schedule.total_slots(),
            found: stream.len(),
        });
    }
    let side_info = |file: usize, sym: u32| -> Result<FieldElement> {
        if !cache.is_cached(k, file, sym as usize) {
            return Err(Error::MissingSideInformation {
                user: k,
                file,
                symbol: sym as usize,
            });
        }
        Ok(library.file(file)[sym as usize])
    };

    let mut out = vec![FieldElement::ZERO; f];
    let mut have = vec![false; f];
    let mut result = DecodedFile {
        symbols: Vec::new(),
        failed_blocks: 0,
        blocks: 0,
        recovered: 0,
        from_cache: 0,
        duplicates: 0,
    };

    let mut offset = 0;
    for b in schedule.blocks() {
        let start = offset;
        offset += b.slots();
        if !b.users.contains(k) {
            continue;
        }
        result.blocks += 1;
        let own: Vec<_> = b.groups.iter().filter(|g| g.users.contains(k)).collect();
        debug_assert_eq!(own.len(), b.omega);
        let gains: Vec<FieldElement> = own
            .iter()
            .map(|g| {
                net.gain(
                    k,
                    g.precoder.as_deref().expect("schedule carries precoders"),
                )
            })
            .collect();
        let coeff = |w: usize, u, r| {
            combining_coefficient(field, schedule.coefficient_seed, b.alpha, b.users, w, u, r)
        };

        let mut system = FieldMatrix::zeros(b.omega, own.len());
        let mut rhs = FieldMatrix::zeros(b.omega, b.block_len);
        for w in 0..b.omega {
            for (c, g) in own.iter().enumerate() {
                system[(w, c)] = field.mul(gains[c], coeff(w, g.users, k));
            }
            for j in 0..b.block_len {
                rhs[(w, j)] = stream[start + w * b.block_len + j];
            }
            for (c, g) in own.iter().enumerate() {
                for p in g.parts.iter().filter(|p| p.requester != k) {
                    let scale = field.mul(gains[c], coeff(w, g.users, p.requester));
                    for (j, &sym) in p.symbols.iter().enumerate() {
                        let known = field.mul(scale, side_info(p.file, sym)?);
                        rhs[(w, j)] = field.add(rhs[(w, j)], known);
                    }
                }
            }
        }

        let solved = match system.solve_many(field, &rhs) {
            Ok(x) => x,
            Err(Error::SingularSystem) => {
                result.failed_blocks += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        for (c, g) in own.iter().enumerate() {
            let Some(part) = g.part_of(k) else { continue };
            for (j, &sym) in part.symbols.iter().enumerate() {
                let sym = sym as usize;
                if have[sym] {
                    result.duplicates += 1;
                }
                have[sym] = true;
                out[sym] = solved[(c, j)];
                result.recovered += 1;
            }
        }
    }

    for sym in 0..f {
        if cache.is_cached(k, demand, sym) {
            if have[sym] {
                result.duplicates += 1;
            }
            out[sym] = library.file(demand)[sym];
            result.from_cache += 1;
        }
    }
    result.symbols = out;
    Ok(result)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub per_user: Vec<bool>,
    pub all_ok: bool,
}

/// Compares each user's decoded file with the library copy of its demand.
pub fn verify_all(
    library: &FileLibrary,
    demands: &[usize],
    decoded: &[Vec<FieldElement>],
) -> VerifyReport {
    let per_user: Vec<bool> = demands
        .iter()
        .zip(decoded)
        .map(|(&d, got)| library.file(d) == got.as_slice())
        .collect();
    let all_ok = per_user.len() == demands.len() && per_user.iter().all(|&ok| ok);
    VerifyReport { per_user, all_ok }
}
