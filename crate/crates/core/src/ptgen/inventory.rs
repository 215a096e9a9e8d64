//! `smiles,site_atom_map,pka,site_class` inventories.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chem::{parse_smiles, Molecule};

use super::{PtgenError, SiteClass};

#[derive(Clone, Debug, PartialEq)]
pub struct InventoryRecord {
    pub smiles: String,
    pub molecule: Molecule,
    /// Map number of the acidic heavy atom (acids) or the basic atom (bases).
    pub site_map: u32,
    /// pKa of the acid, or of the base's conjugate acid.
    pub pka: f64,
    pub site_class: SiteClass,
}

#[derive(Serialize, Deserialize)]
struct Row {
    smiles: String,
    site_atom_map: u32,
    pka: f64,
    site_class: SiteClass,
}

impl InventoryRecord {
    pub fn new(smiles: &str, site_map: u32, pka: f64, site_class: SiteClass) -> Result<InventoryRecord, String> {
        let molecule = parse_smiles(smiles).map_err(|e| e.to_string())?;
        if !pka.is_finite() {
            return Err("pKa must be finite".into());
        }
        if molecule.atom_by_map(site_map).is_none() {
            return Err(format!("no atom carries map {site_map}"));
        }
        Ok(InventoryRecord {
            smiles: smiles.to_string(),
            molecule,
            site_map,
            pka,
            site_class,
        })
    }

    pub fn site(&self) -> usize {
        self.molecule.atom_by_map(self.site_map).expect("checked at construction")
    }

    /// Whether the site bears a hydrogen.
    pub fn valid_acid(&self) -> bool {
        self.molecule.total_hydrogens(self.site()) > 0
    }

    /// Whether the site has a lone pair.
    pub fn valid_base(&self) -> bool {
        self.molecule.lone_pairs(self.site()) > 0
    }
}

/// Reads an inventory. Any malformed row is an error naming its line.
pub fn read_inventory<R: Read>(reader: R, name: &str) -> Result<Vec<InventoryRecord>, PtgenError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            PtgenError::Inventory {
                path: name.to_string(),
                line,
                message: e.to_string(),
            }
        })?;
        let line = out.len() + 2;
        let rec = InventoryRecord::new(&row.smiles, row.site_atom_map, row.pka, row.site_class).map_err(|message| {
            PtgenError::Inventory {
                path: name.to_string(),
                line,
                message,
            }
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_inventory_file(path: impl AsRef<Path>) -> Result<Vec<InventoryRecord>, PtgenError> {
    let path = path.as_ref();
    read_inventory(std::fs::File::open(path)?, &path.display().to_string())
}

pub fn write_inventory<W: Write>(w: W, records: &[InventoryRecord]) -> Result<(), PtgenError> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in records {
        wtr.serialize(Row {
            smiles: r.smiles.clone(),
            site_atom_map: r.site_map,
            pka: r.pka,
            site_class: r.site_class,
        })?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "smiles,site_atom_map,pka,site_class\nC[C:1](=O)O,1,4.76,heteroatom\n";
        // the site is the carbonyl carbon here, which has no H
        let recs = read_inventory(text.as_bytes(), "t").unwrap();
        assert!(!recs[0].valid_acid());
        let mut buf = Vec::new();
        write_inventory(&mut buf, &recs).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
    }

    #[test]
    fn bad_rows_name_their_line() {
        let text = "smiles,site_atom_map,pka,site_class\n[OH2:1],1,15.7,heteroatom\n[OH2:1],2,15.7,heteroatom\n";
        match read_inventory(text.as_bytes(), "inv.csv") {
            Err(PtgenError::Inventory { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let text = "smiles,site_atom_map,pka,site_class\nO,1,abc,heteroatom\n";
        assert!(read_inventory(text.as_bytes(), "x").is_err());
        let text = "smiles,site_atom_map,pka,site_class\n[OH2:1],1,NaN,heteroatom\n";
        assert!(read_inventory(text.as_bytes(), "x").is_err());
    }
}
