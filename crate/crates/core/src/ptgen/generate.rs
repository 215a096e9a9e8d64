//! Pair enumeration, record construction and sharded output.
//!
//! Each acid and base is prepared once: the acid gets map 1 on its site and
//! map 2 on one explicit acidic hydrogen, the base gets map 3 on its site.
//! Conjugate halves come from pushing the transfer arrow against a probe
//! partner, which is possible because the transfer only touches the three
//! mapped atoms. A pair's record is then plain text assembly.

use std::collections::{HashSet, VecDeque};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chem::{parse_smiles, write_smiles, Atom, Bond, Element, Molecule};
use crate::reaction::{apply_arrow, parse_step_record, ArrowSpec, ElementaryStep, ReactionError};

use super::{InventoryRecord, PtgenConfig, PtgenError, RateEstimate};

/// Base lone pair (map 3) onto the acidic hydrogen (map 2), which leaves the
/// acid site (map 1).
pub const PROTON_TRANSFER_ARROW: &str = "LP:3>SS:2-1";

const ACID_SITE: u32 = 1;
const ACID_H: u32 = 2;
const BASE_SITE: u32 = 3;

struct Half {
    index: usize,
    text: String,
    conjugate: String,
}

fn arrow() -> ArrowSpec {
    PROTON_TRANSFER_ARROW.parse().expect("valid arrow")
}

/// Fragments of `mol` that do not contain an atom mapped `exclude`.
fn without_fragment(mol: &Molecule, exclude: u32) -> Result<Molecule, PtgenError> {
    let keep: Vec<Molecule> = mol
        .fragments()
        .into_iter()
        .filter(|f| f.atom_by_map(exclude).is_none())
        .collect();
    Ok(Molecule::combine(&keep)?)
}

fn prepare_acid(rec: &InventoryRecord, index: usize) -> Result<Half, PtgenError> {
    let mol = rec.molecule.without_maps();
    let site = rec.site();
    let mut atoms = mol.atoms().to_vec();
    let mut bonds = mol.bonds().to_vec();
    let h = match mol
        .neighbors(site)
        .iter()
        .map(|&(n, _)| n)
        .find(|&n| atoms[n].element == Element::H)
    {
        Some(h) => h,
        None if atoms[site].hydrogens > 0 => {
            atoms[site].hydrogens -= 1;
            atoms.push(Atom::new(Element::H));
            bonds.push(Bond::new(site, atoms.len() - 1, 1));
            atoms.len() - 1
        }
        None => {
            return Err(ReactionError::Record(format!("acid site of '{}' bears no hydrogen", rec.smiles)).into());
        }
    };
    atoms[site].map = Some(ACID_SITE);
    atoms[h].map = Some(ACID_H);
    let acid = Molecule::from_parts(atoms, bonds)?;
    let probe = parse_smiles("[OH-:3]")?;
    let pushed = apply_arrow(&Molecule::combine([&acid, &probe])?, &arrow())?;
    let conj = without_fragment(&pushed, BASE_SITE)?;
    Ok(Half {
        index,
        text: write_smiles(&acid),
        conjugate: write_smiles(&conj),
    })
}

fn prepare_base(rec: &InventoryRecord, index: usize) -> Result<Half, PtgenError> {
    if !rec.valid_base() {
        return Err(ReactionError::Record(format!("base site of '{}' has no lone pair", rec.smiles)).into());
    }
    let mut maps: Vec<Option<u32>> = vec![None; rec.molecule.atom_count()];
    maps[rec.site()] = Some(BASE_SITE);
    let base = rec.molecule.with_maps(&maps)?;
    let probe = parse_smiles("[H:2][OH2+:1]")?;
    let pushed = apply_arrow(&Molecule::combine([&probe, &base])?, &arrow())?;
    let conj = without_fragment(&pushed, ACID_SITE)?;
    Ok(Half {
        index,
        text: write_smiles(&base),
        conjugate: write_smiles(&conj),
    })
}

/// One admitted acid/base pair.
#[derive(Clone, Debug, PartialEq)]
pub struct ProtonTransfer {
    /// Index into the acid inventory as given.
    pub acid: usize,
    /// Index into the base inventory as given.
    pub base: usize,
    pub rate: RateEstimate,
    /// Step record line with `role=combinatorial k=<float> model=<tag>`.
    pub record: String,
}

impl ProtonTransfer {
    pub fn to_step(&self) -> Result<ElementaryStep, ReactionError> {
        parse_step_record(&self.record)
    }
}

/// Prepared inventories. Records that cannot serve (no acidic H, no lone
/// pair, valence failure) and repeated records are skipped with a log line.
pub struct Generator<'a> {
    acids: Vec<(Half, &'a InventoryRecord)>,
    bases: Vec<(Half, &'a InventoryRecord)>,
    config: PtgenConfig,
    pub skipped_acids: usize,
    pub skipped_bases: usize,
}

fn prepare_all<'a>(
    records: &'a [InventoryRecord],
    what: &str,
    prep: fn(&InventoryRecord, usize) -> Result<Half, PtgenError>,
) -> (Vec<(Half, &'a InventoryRecord)>, usize) {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut skipped = 0;
    for (i, rec) in records.iter().enumerate() {
        match prep(rec, i) {
            Ok(h) if seen.insert(h.text.clone()) => out.push((h, rec)),
            Ok(_) => {
                log::warn!("{what} {i} ('{}') repeats an earlier record, skipped", rec.smiles);
                skipped += 1;
            }
            Err(e) => {
                log::warn!("{what} {i} ('{}') skipped: {e}", rec.smiles);
                skipped += 1;
            }
        }
    }
    (out, skipped)
}

impl<'a> Generator<'a> {
    pub fn new(acids: &'a [InventoryRecord], bases: &'a [InventoryRecord], config: PtgenConfig) -> Generator<'a> {
        let (acids, skipped_acids) = prepare_all(acids, "acid", prepare_acid);
        let (bases, skipped_bases) = prepare_all(bases, "base", prepare_base);
        Generator {
            acids,
            bases,
            config,
            skipped_acids,
            skipped_bases,
        }
    }

    pub fn pair_count(&self) -> usize {
        self.acids.len() * self.bases.len()
    }

    fn row(&self, a: usize) -> Vec<ProtonTransfer> {
        let (acid, arec) = &self.acids[a];
        let mut out = Vec::new();
        for (base, brec) in &self.bases {
            let (rate, ok) = self.config.admit(arec, brec);
            if !ok {
                continue;
            }
            out.push(ProtonTransfer {
                acid: acid.index,
                base: base.index,
                rate,
                record: format!(
                    "{}.{}>>{}.{} | {} | role=combinatorial k={:e} model={}",
                    acid.text,
                    base.text,
                    acid.conjugate,
                    base.conjugate,
                    PROTON_TRANSFER_ARROW,
                    rate.k,
                    rate.model.tag()
                ),
            });
        }
        out
    }

    /// Admitted pairs, acid-major in inventory order. Rows are built `jobs`
    /// at a time on worker threads; output order does not depend on `jobs`.
    /// Memory is bounded by `jobs` rows.
    pub fn stream(&self, jobs: usize) -> impl Iterator<Item = ProtonTransfer> + '_ {
        Stream {
            gen: self,
            next_acid: 0,
            jobs: jobs.max(1),
            buffer: VecDeque::new(),
        }
    }
}

struct Stream<'g, 'a> {
    gen: &'g Generator<'a>,
    next_acid: usize,
    jobs: usize,
    buffer: VecDeque<ProtonTransfer>,
}

impl Iterator for Stream<'_, '_> {
    type Item = ProtonTransfer;

    fn next(&mut self) -> Option<ProtonTransfer> {
        while self.buffer.is_empty() {
            let n = self.gen.acids.len();
            if self.next_acid >= n {
                return None;
            }
            let block: Vec<usize> = (self.next_acid..(self.next_acid + self.jobs).min(n)).collect();
            self.next_acid += block.len();
            if block.len() == 1 {
                self.buffer.extend(self.gen.row(block[0]));
            } else {
                let gen = self.gen;
                let rows: Vec<Vec<ProtonTransfer>> = std::thread::scope(|s| {
                    let handles: Vec<_> = block.iter().map(|&a| s.spawn(move || gen.row(a))).collect();
                    handles.into_iter().map(|h| h.join().expect("row worker")).collect()
                });
                self.buffer.extend(rows.into_iter().flatten());
            }
        }
        self.buffer.pop_front()
    }
}

/// Uniform sample of `min(n, len)` items in one pass (reservoir sampling).
pub fn sample_for_training<T>(stream: impl IntoIterator<Item = T>, n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n.min(1 << 20));
    if n == 0 {
        return out;
    }
    for (i, item) in stream.into_iter().enumerate() {
        if i < n {
            out.push(item);
        } else {
            let j = rng.gen_range(0..=i);
            if j < n {
                out[j] = item;
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShardInfo {
    pub file: String,
    pub records: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub total: usize,
    pub shards: Vec<ShardInfo>,
    /// Caller-provided run description (inputs, config, seeds, versions).
    pub run: serde_json::Value,
}

fn shard_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("shard-{i:05}.steps"))
}

/// Writes records into `dir/shard-NNNNN.steps` files of at most `shard_size`
/// lines plus `dir/manifest.json`.
pub fn write_sharded(
    records: impl IntoIterator<Item = String>,
    dir: impl AsRef<Path>,
    shard_size: usize,
    run: serde_json::Value,
) -> Result<Manifest, PtgenError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let shard_size = shard_size.max(1);
    let mut shards: Vec<ShardInfo> = Vec::new();
    let mut out: Option<BufWriter<File>> = None;
    let mut total = 0;
    for rec in records {
        if total % shard_size == 0 {
            if let Some(mut w) = out.take() {
                w.flush()?;
            }
            let path = shard_path(dir, shards.len());
            out = Some(BufWriter::new(File::create(&path)?));
            shards.push(ShardInfo {
                file: path.file_name().unwrap().to_string_lossy().into_owned(),
                records: 0,
            });
        }
        let w = out.as_mut().unwrap();
        w.write_all(rec.as_bytes())?;
        w.write_all(b"\n")?;
        shards.last_mut().unwrap().records += 1;
        total += 1;
    }
    if let Some(mut w) = out {
        w.flush()?;
    }
    let manifest = Manifest {
        format: "mechrxn-steps/1".into(),
        total,
        shards,
        run,
    };
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}
