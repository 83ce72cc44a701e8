//! Windowed co-occurrence counting and the binary record format.
//!
//! A pair of in-vocabulary tokens at distance `d <= window` contributes `1/d`
//! to both `(i, j)` and `(j, i)`. Masses are accumulated as integers in units
//! of `1 / lcm(1..=window)`, so every cell is an exact rational until the
//! single final division. Any partition of the work therefore produces the
//! same bits as a single pass.

use std::io::{self, Read, Write};
use std::thread;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::vocab::VocabTable;

/// Largest supported window; `lcm(1..=20)` still leaves headroom in a `u64`
/// accumulator for billions of pair occurrences per cell.
pub const MAX_WINDOW: usize = 20;

/// Size in bytes of one serialized record: `u32 i`, `u32 j`, `f64 x`, little-endian.
pub const RECORD_BYTES: usize = 16;

/// One nonzero cell of the co-occurrence matrix. Indices are 0-based.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoocRecord {
    pub i: u32,
    pub j: u32,
    pub x: f64,
}

impl CoocRecord {
    pub fn new(i: u32, j: u32, x: f64) -> Self {
        CoocRecord { i, j, x }
    }
}

fn lcm_up_to(window: usize) -> u64 {
    fn gcd(a: u64, b: u64) -> u64 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    (1..=window as u64).fold(1, |acc, d| acc / gcd(acc, d) * d)
}

fn check_window(window: usize) -> Result<()> {
    if window == 0 || window > MAX_WINDOW {
        return Err(Error::InvalidParameter(format!(
            "window must be in 1..={MAX_WINDOW}, got {window}"
        )));
    }
    Ok(())
}

/// Counts co-occurrences of `tokens` restricted to `vocab`, single-threaded.
/// Records come back sorted by `(i, j)`.
pub fn count_cooccurrences<S: AsRef<str>>(
    tokens: &[S],
    vocab: &VocabTable,
    window: usize,
) -> Result<Vec<CoocRecord>> {
    count_encoded(&vocab.encode(tokens), window, 1)
}

/// Counts over a pre-encoded token stream (`None` marks out-of-vocabulary
/// positions). With `threads > 1` the matrix rows are split across workers by
/// `i % threads`; the output is identical for every thread count.
pub fn count_encoded(
    ids: &[Option<u32>],
    window: usize,
    threads: usize,
) -> Result<Vec<CoocRecord>> {
    check_window(window)?;
    let lcm = lcm_up_to(window);
    let units: Vec<u64> = (0..=window as u64)
        .map(|d| lcm.checked_div(d).unwrap_or(0))
        .collect();
    let threads = threads.max(1) as u32;

    let shards: Vec<Result<Vec<(u64, u64)>>> = if threads == 1 {
        vec![count_shard(ids, &units, 0, 1)]
    } else {
        thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let units = &units;
                    s.spawn(move || count_shard(ids, units, t, threads))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("counting worker panicked"))
                .collect()
        })
    };

    let mut cells = Vec::new();
    for shard in shards {
        cells.extend(shard?);
    }
    cells.sort_unstable_by_key(|&(key, _)| key);
    let denom = lcm as f64;
    Ok(cells
        .into_iter()
        .map(|(key, mass)| CoocRecord {
            i: (key >> 32) as u32,
            j: key as u32,
            x: mass as f64 / denom,
        })
        .collect())
}

fn count_shard(
    ids: &[Option<u32>],
    units: &[u64],
    shard: u32,
    shards: u32,
) -> Result<Vec<(u64, u64)>> {
    let window = units.len() - 1;
    let mut cells: FxHashMap<u64, u64> = FxHashMap::default();
    let mut add = |a: u32, b: u32, mass: u64| -> Result<()> {
        if a % shards != shard {
            return Ok(());
        }
        let slot = cells.entry(((a as u64) << 32) | b as u64).or_insert(0);
        *slot = slot.checked_add(mass).ok_or_else(|| {
            Error::InvalidParameter("co-occurrence mass overflow; use a smaller window".into())
        })?;
        Ok(())
    };
    for (q, right) in ids.iter().enumerate() {
        let Some(b) = *right else { continue };
        for d in 1..=window.min(q) {
            if let Some(a) = ids[q - d] {
                add(a, b, units[d])?;
                add(b, a, units[d])?;
            }
        }
    }
    Ok(cells.into_iter().collect())
}

/// Returns a seeded permutation of `records`.
pub fn shuffle_records(mut records: Vec<CoocRecord>, seed: u64) -> Vec<CoocRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records.shuffle(&mut rng);
    records
}

pub fn write_records<W: Write>(mut out: W, records: &[CoocRecord]) -> Result<()> {
    let mut buf = [0u8; RECORD_BYTES];
    for r in records {
        buf[0..4].copy_from_slice(&r.i.to_le_bytes());
        buf[4..8].copy_from_slice(&r.j.to_le_bytes());
        buf[8..16].copy_from_slice(&r.x.to_le_bytes());
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads records until end of input. A trailing partial record or a
/// non-positive mass is reported with its 1-based record number.
pub fn read_records<R: Read>(mut input: R) -> Result<Vec<CoocRecord>> {
    let mut records = Vec::new();
    let mut buf = [0u8; RECORD_BYTES];
    loop {
        let mut filled = 0;
        while filled < RECORD_BYTES {
            match input.read(&mut buf[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        }
        if filled == 0 {
            return Ok(records);
        }
        let recno = records.len() + 1;
        if filled < RECORD_BYTES {
            return Err(Error::parse(recno, "truncated co-occurrence record"));
        }
        let i = u32::from_le_bytes(buf[0..4].try_into().unwrap());
        let j = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        let x = f64::from_le_bytes(buf[8..16].try_into().unwrap());
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::parse(
                recno,
                format!("co-occurrence mass {x} is not positive"),
            ));
        }
        records.push(CoocRecord { i, j, x });
    }
}
