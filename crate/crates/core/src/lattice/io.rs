use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{CellSet, ExteriorData, Lattice, ScalarField};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct IndexList {
    lattice: Lattice,
    cells: Vec<Vec<i64>>,
}

#[derive(Serialize, Deserialize)]
struct FieldRow {
    index: usize,
    x0: f64,
    x1: f64,
    value: f64,
}

impl CellSet {
    /// One line per row of axis 1 (a single line in 1D), `1` for members.
    pub fn to_text_grid(&self) -> String {
        let [n0, n1] = self.lattice.shape();
        let mut out = String::with_capacity((n0 + 1) * n1);
        for row in 0..n1 {
            for c in 0..n0 {
                out.push(if self.members[row * n0 + c] { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text_grid(lattice: &Lattice, text: &str) -> Result<Self> {
        let [n0, n1] = lattice.shape();
        let rows: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if rows.len() != n1 {
            return Err(Error::Parse(format!("expected {n1} grid rows, found {}", rows.len())));
        }
        let mut members = Vec::with_capacity(lattice.len());
        for (r, line) in rows.iter().enumerate() {
            if line.chars().count() != n0 {
                return Err(Error::Parse(format!("row {r}: expected {n0} cells")));
            }
            for ch in line.chars() {
                members.push(match ch {
                    '1' => true,
                    '0' => false,
                    other => return Err(Error::Parse(format!("row {r}: unexpected character {other:?}"))),
                });
            }
        }
        Self::from_members(lattice, members)
    }

    /// JSON object with the lattice and the global indices of the members.
    pub fn to_json(&self) -> Result<String> {
        let dim = self.lattice.dim();
        let cells = self.iter().map(|i| self.lattice.global(i)[..dim].to_vec()).collect();
        Ok(serde_json::to_string(&IndexList { lattice: self.lattice, cells })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let list: IndexList = serde_json::from_str(text)?;
        let lat = list.lattice;
        Lattice::new(lat.dim, lat.h, &lat.lo[..lat.dim], &lat.hi[..lat.dim])?;
        let mut set = CellSet::empty(&lat);
        for g in &list.cells {
            if g.len() != lat.dim() {
                return Err(Error::Parse(format!("index {g:?} has the wrong arity")));
            }
            let gi = [g[0], if lat.dim() == 2 { g[1] } else { 0 }];
            let i = lat.index(gi).ok_or_else(|| Error::Parse(format!("index {g:?} outside the box")))?;
            set.insert(i);
        }
        Ok(set)
    }
}

impl ScalarField {
    /// CSV with columns `index,x0,x1,value` (x1 is 0 in 1D).
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for (i, &value) in self.values.iter().enumerate() {
            let c = self.lattice.center(i);
            wr.serialize(FieldRow { index: i, x0: c[0], x1: c[1], value })?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Restore values written by [`ScalarField::write_csv`] onto a known lattice.
    pub fn read_csv<R: Read>(lattice: Lattice, exterior: ExteriorData, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut values = vec![f64::NAN; lattice.len()];
        let mut seen = 0usize;
        for row in rd.deserialize() {
            let row: FieldRow = row?;
            if row.index >= values.len() {
                return Err(Error::Parse(format!("cell index {} outside the lattice", row.index)));
            }
            values[row.index] = row.value;
            seen += 1;
        }
        if seen != lattice.len() {
            return Err(Error::Parse(format!("{seen} rows for {} cells", lattice.len())));
        }
        ScalarField::new(lattice, values, exterior)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ball_mask;

    #[test]
    fn text_grid_round_trip() {
        let l = Lattice::centered(2, 1.0, 4).unwrap();
        let b = ball_mask(&l, [0.0, 0.0], 3.0).unwrap();
        let t = b.to_text_grid();
        assert_eq!(t.lines().count(), 8);
        assert_eq!(CellSet::from_text_grid(&l, &t).unwrap(), b);
        assert!(CellSet::from_text_grid(&l, "0101\n").is_err());
    }

    #[test]
    fn json_round_trip() {
        let l = Lattice::centered(1, 0.5, 6).unwrap();
        let b = ball_mask(&l, [0.5, 0.0], 1.2).unwrap();
        let j = b.to_json().unwrap();
        assert_eq!(CellSet::from_json(&j).unwrap(), b);
    }

    #[test]
    fn field_csv_round_trip() {
        let l = Lattice::centered(2, 1.0, 2).unwrap();
        let vals: Vec<f64> = (0..16).map(|i| (i as f64 - 8.0) / 8.0).collect();
        let f = ScalarField::new(l, vals, ExteriorData::Constant(-1.0)).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let g = ScalarField::read_csv(l, ExteriorData::Constant(-1.0), buf.as_slice()).unwrap();
        assert_eq!(f, g);
    }
}
