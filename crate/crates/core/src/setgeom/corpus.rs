//! Reproducible random voxel sets: unions of random axis-aligned rectangles,
//! kept `margin` cells away from the box boundary.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{CellSet, Lattice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellTarget {
    Any,
    AtMost(usize),
    Exactly(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusParams {
    pub seed: u64,
    pub cases: usize,
    pub min_rects: usize,
    pub max_rects: usize,
    /// Largest rectangle side, in cells.
    pub max_side: i64,
    /// Cells left free between the sets and the box boundary.
    pub margin: i64,
    pub target: CellTarget,
    /// Pairs only: `|B| / |A|` is drawn uniformly from `[0, b_fraction_max]`.
    pub b_fraction_max: f64,
}

impl Default for CorpusParams {
    fn default() -> Self {
        Self {
            seed: 1,
            cases: 50,
            min_rects: 1,
            max_rects: 8,
            max_side: 8,
            margin: 2,
            target: CellTarget::Any,
            b_fraction_max: 0.05,
        }
    }
}

impl CorpusParams {
    fn validate(&self, lattice: &Lattice) -> Result<()> {
        if self.min_rects == 0 || self.max_rects < self.min_rects {
            return Err(Error::Parameter(format!(
                "rectangle count range [{}, {}] is empty or starts at 0",
                self.min_rects, self.max_rects
            )));
        }
        if self.max_side < 1 || self.margin < 0 {
            return Err(Error::Parameter("max_side must be >= 1 and margin >= 0".into()));
        }
        if !(self.b_fraction_max >= 0.0) || !self.b_fraction_max.is_finite() {
            return Err(Error::Parameter(format!("b_fraction_max must be >= 0, got {}", self.b_fraction_max)));
        }
        let [n0, n1] = lattice.shape();
        let free = |n: usize| n as i64 - 2 * self.margin;
        if free(n0) < 1 || (lattice.dim() == 2 && free(n1) < 1) {
            return Err(Error::Parameter(format!("margin {} leaves no room in the lattice box", self.margin)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusCase {
    pub index: usize,
    pub rects_a: usize,
    pub cells_a: usize,
    pub rects_b: usize,
    pub cells_b: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub generator: String,
    pub params: CorpusParams,
    pub lattice: Lattice,
    pub cases: Vec<CorpusCase>,
}

struct Gen<'a> {
    lattice: &'a Lattice,
    params: &'a CorpusParams,
    rng: ChaCha8Rng,
}

impl Gen<'_> {
    fn add_rect(&mut self, set: &mut CellSet, max_side: i64) {
        let (lo, hi) = (self.lattice.lo(), self.lattice.hi());
        let mut a = [0i64, 0];
        let mut b = [1i64, 1];
        for k in 0..self.lattice.dim() {
            let (first, last) = (lo[k] + self.params.margin, hi[k] - self.params.margin);
            let side = self.rng.gen_range(1..=max_side.min(last - first));
            a[k] = self.rng.gen_range(first..=last - side);
            b[k] = a[k] + side;
        }
        let rect = CellSet::index_box(self.lattice, a, b);
        for i in rect.iter() {
            set.insert(i);
        }
    }

    fn rects(&mut self, max_side: i64) -> (CellSet, usize) {
        let k = self.rng.gen_range(self.params.min_rects..=self.params.max_rects);
        let mut set = CellSet::empty(self.lattice);
        for _ in 0..k {
            self.add_rect(&mut set, max_side);
        }
        (set, k)
    }

    fn trim(&mut self, set: &mut CellSet, keep: usize) {
        let mut members = set.indices();
        if members.len() <= keep {
            return;
        }
        members.shuffle(&mut self.rng);
        for &i in &members[..members.len() - keep] {
            set.remove(i);
        }
    }

    fn shaped(&mut self) -> Result<(CellSet, usize)> {
        let side = self.params.max_side;
        let (mut set, mut k) = self.rects(side);
        match self.params.target {
            CellTarget::Any => {}
            CellTarget::AtMost(n) => self.trim(&mut set, n),
            CellTarget::Exactly(n) => {
                let mut guard = 0;
                while set.count() < n {
                    self.add_rect(&mut set, side);
                    k += 1;
                    guard += 1;
                    if guard > 100_000 {
                        return Err(Error::Parameter(format!("cannot reach {n} cells inside the margin")));
                    }
                }
                self.trim(&mut set, n);
            }
        }
        Ok((set, k))
    }
}

fn manifest(lattice: &Lattice, params: &CorpusParams, kind: &str, cases: Vec<CorpusCase>) -> CorpusManifest {
    CorpusManifest { generator: format!("rectangle-union/{kind}"), params: params.clone(), lattice: *lattice, cases }
}

/// Random sets, each a union of `min_rects..=max_rects` rectangles adjusted
/// to the cell target by removing random cells (or adding rectangles).
pub fn generate_sets(lattice: &Lattice, params: &CorpusParams) -> Result<(Vec<CellSet>, CorpusManifest)> {
    params.validate(lattice)?;
    let mut g = Gen { lattice, params, rng: ChaCha8Rng::seed_from_u64(params.seed) };
    let mut sets = Vec::with_capacity(params.cases);
    let mut cases = Vec::with_capacity(params.cases);
    for index in 0..params.cases {
        let (set, k) = g.shaped()?;
        cases.push(CorpusCase { index, rects_a: k, cells_a: set.count(), rects_b: 0, cells_b: 0 });
        sets.push(set);
    }
    Ok((sets, manifest(lattice, params, "sets", cases)))
}

/// Disjoint pairs `(A, B)`: `A` as in [`generate_sets`], `B` a union of
/// smaller rectangles minus `A`, trimmed to a random fraction of `|A|`.
pub fn generate_pairs(lattice: &Lattice, params: &CorpusParams) -> Result<(Vec<(CellSet, CellSet)>, CorpusManifest)> {
    params.validate(lattice)?;
    let mut g = Gen { lattice, params, rng: ChaCha8Rng::seed_from_u64(params.seed) };
    let mut pairs = Vec::with_capacity(params.cases);
    let mut cases = Vec::with_capacity(params.cases);
    for index in 0..params.cases {
        let (a, ka) = g.shaped()?;
        let (b_raw, kb) = g.rects((params.max_side / 2).max(1));
        let mut b = b_raw.difference(&a)?;
        let frac = g.rng.gen_range(0.0..=params.b_fraction_max);
        let keep = (frac * a.count() as f64).floor() as usize;
        g.trim(&mut b, keep);
        cases.push(CorpusCase { index, rects_a: ka, cells_a: a.count(), rects_b: kb, cells_b: b.count() });
        pairs.push((a, b));
    }
    Ok((pairs, manifest(lattice, params, "pairs", cases)))
}
