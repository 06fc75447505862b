//! Discrete geometry substrate: a regular cell grid standing in for R^n
//! (n = 1 or 2), voxel sets on it, scalar fields with analytic exterior data,
//! and the ball / comparison-profile constructors used by the experiments.
//!
//! Cell `i` along an axis has its center at `(i + 1/2) h`, so no center lies
//! on a coordinate hyperplane. One-dimensional lattices are stored as a
//! single row (axis 1 has one cell) and points carry a zero second coordinate.

mod io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the ambient space. In 1D the second coordinate is always 0.
pub type Point = [f64; 2];

pub fn norm(p: Point) -> f64 {
    p[0].hypot(p[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    dim: usize,
    h: f64,
    lo: [i64; 2],
    hi: [i64; 2],
}

impl Lattice {
    pub fn new(dim: usize, h: f64, lo: &[i64], hi: &[i64]) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Parameter(format!("dim must be 1 or 2, got {dim}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Parameter(format!("cell spacing must be positive, got {h}")));
        }
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::Parameter("index bounds must have one entry per axis".into()));
        }
        let mut l = [0i64, 0];
        let mut u = [1i64, 1];
        for k in 0..dim {
            if hi[k] <= lo[k] {
                return Err(Error::Parameter(format!(
                    "empty axis {k}: hi {} <= lo {}",
                    hi[k], lo[k]
                )));
            }
            l[k] = lo[k];
            u[k] = hi[k];
        }
        Ok(Self { dim, h, lo: l, hi: u })
    }

    /// Box of `2 * half` cells per axis, symmetric about the origin.
    pub fn centered(dim: usize, h: f64, half: i64) -> Result<Self> {
        let lo = vec![-half; dim];
        let hi = vec![half; dim];
        Self::new(dim, h, &lo, &hi)
    }

    /// Smallest centered box containing the ball `B_radius` plus `pad` extra cells.
    pub fn covering_ball(dim: usize, h: f64, radius: f64, pad: i64) -> Result<Self> {
        let half = (radius / h).ceil() as i64 + pad;
        Self::centered(dim, h, half.max(1))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> [i64; 2] {
        self.lo
    }

    pub fn hi(&self) -> [i64; 2] {
        self.hi
    }

    /// Number of cells along each axis (axis 1 is 1 in 1D).
    pub fn shape(&self) -> [usize; 2] {
        [
            (self.hi[0] - self.lo[0]) as usize,
            (self.hi[1] - self.lo[1]) as usize,
        ]
    }

    pub fn len(&self) -> usize {
        let [a, b] = self.shape();
        a * b
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Lower corner of the box in coordinates.
    pub fn box_lo(&self) -> Point {
        let mut p = [0.0; 2];
        for (k, pk) in p.iter_mut().enumerate().take(self.dim) {
            *pk = self.lo[k] as f64 * self.h;
        }
        p
    }

    pub fn box_hi(&self) -> Point {
        let mut p = [0.0; 2];
        for (k, pk) in p.iter_mut().enumerate().take(self.dim) {
            *pk = self.hi[k] as f64 * self.h;
        }
        p
    }

    /// Linear index of a global integer index, if inside the box.
    pub fn index(&self, g: [i64; 2]) -> Option<usize> {
        let [n0, _] = self.shape();
        if (0..self.dim).any(|k| g[k] < self.lo[k] || g[k] >= self.hi[k]) {
            return None;
        }
        let i0 = (g[0] - self.lo[0]) as usize;
        let i1 = if self.dim == 2 { (g[1] - self.lo[1]) as usize } else { 0 };
        Some(i0 + n0 * i1)
    }

    /// Global integer index of a linear index.
    pub fn global(&self, i: usize) -> [i64; 2] {
        let [n0, _] = self.shape();
        let g0 = (i % n0) as i64 + self.lo[0];
        let g1 = if self.dim == 2 { (i / n0) as i64 + self.lo[1] } else { 0 };
        [g0, g1]
    }

    /// Local (row-major, axis 0 fastest) coordinates of a linear index.
    pub fn local(&self, i: usize) -> [usize; 2] {
        let [n0, _] = self.shape();
        [i % n0, i / n0]
    }

    pub fn center(&self, i: usize) -> Point {
        let g = self.global(i);
        let mut p = [0.0; 2];
        for (k, pk) in p.iter_mut().enumerate().take(self.dim) {
            *pk = (g[k] as f64 + 0.5) * self.h;
        }
        p
    }

    pub fn centers(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.center(i))
    }

    /// Cell containing a point (half-open cells `[i h, (i+1) h)`).
    pub fn cell_of(&self, p: Point) -> Option<usize> {
        let mut g = [0i64; 2];
        for (k, gk) in g.iter_mut().enumerate().take(self.dim) {
            *gk = (p[k] / self.h).floor() as i64;
        }
        self.index(g)
    }

    pub fn contains_point(&self, p: Point) -> bool {
        let (lo, hi) = (self.box_lo(), self.box_hi());
        (0..self.dim).all(|k| p[k] >= lo[k] && p[k] < hi[k])
    }

    pub fn check_same(&self, other: &Lattice) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::LatticeMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// The same box refined by an integer factor (each cell split `factor` ways per axis).
    pub fn refined(&self, factor: i64) -> Result<Self> {
        if factor < 1 {
            return Err(Error::Parameter(format!("refinement factor must be >= 1, got {factor}")));
        }
        let lo: Vec<i64> = self.lo[..self.dim].iter().map(|&x| x * factor).collect();
        let hi: Vec<i64> = self.hi[..self.dim].iter().map(|&x| x * factor).collect();
        Self::new(self.dim, self.h / factor as f64, &lo, &hi)
    }
}

/// Boolean voxel set on a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSet {
    lattice: Lattice,
    members: Vec<bool>,
}

/// Contiguous run of member cells along axis 0 in one row: local row, column range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub row: usize,
    pub start: usize,
    pub end: usize,
}

impl CellSet {
    pub fn empty(lattice: &Lattice) -> Self {
        Self { lattice: *lattice, members: vec![false; lattice.len()] }
    }

    pub fn full(lattice: &Lattice) -> Self {
        Self { lattice: *lattice, members: vec![true; lattice.len()] }
    }

    pub fn from_fn(lattice: &Lattice, mut f: impl FnMut(usize) -> bool) -> Self {
        Self { lattice: *lattice, members: (0..lattice.len()).map(&mut f).collect() }
    }

    pub fn from_members(lattice: &Lattice, members: Vec<bool>) -> Result<Self> {
        if members.len() != lattice.len() {
            return Err(Error::LatticeMismatch(format!(
                "{} flags for a lattice of {} cells",
                members.len(),
                lattice.len()
            )));
        }
        Ok(Self { lattice: *lattice, members })
    }

    /// Cells whose global indices lie in the half-open index box `[lo, hi)`.
    pub fn index_box(lattice: &Lattice, lo: [i64; 2], hi: [i64; 2]) -> Self {
        Self::from_fn(lattice, |i| {
            let g = lattice.global(i);
            (0..lattice.dim()).all(|k| g[k] >= lo[k] && g[k] < hi[k])
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members[i]
    }

    pub fn insert(&mut self, i: usize) {
        self.members[i] = true;
    }

    pub fn remove(&mut self, i: usize) {
        self.members[i] = false;
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    /// Complement within the lattice box.
    pub fn complement(&self) -> Self {
        Self { lattice: self.lattice, members: self.members.iter().map(|m| !m).collect() }
    }

    fn zip(&self, other: &CellSet, f: impl Fn(bool, bool) -> bool) -> Result<Self> {
        self.lattice.check_same(&other.lattice)?;
        let members = self.members.iter().zip(&other.members).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { lattice: self.lattice, members })
    }

    pub fn union(&self, other: &CellSet) -> Result<Self> {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &CellSet) -> Result<Self> {
        self.zip(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &CellSet) -> Result<Self> {
        self.zip(other, |a, b| a && !b)
    }

    pub fn overlap_count(&self, other: &CellSet) -> Result<usize> {
        Ok(self.intersection(other)?.count())
    }

    pub fn is_subset(&self, other: &CellSet) -> Result<bool> {
        self.lattice.check_same(&other.lattice)?;
        Ok(self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b))
    }

    /// The same point set on `lattice.refined(factor)`.
    pub fn refined(&self, factor: i64) -> Result<Self> {
        let fine = self.lattice.refined(factor)?;
        Ok(Self::from_fn(&fine, |i| {
            let g = fine.global(i);
            let c = [g[0].div_euclid(factor), if fine.dim() == 2 { g[1].div_euclid(factor) } else { g[1] }];
            self.lattice.index(c).is_some_and(|j| self.members[j])
        }))
    }

    /// Maximal runs of members along axis 0, row by row in index order.
    pub fn runs(&self) -> Vec<Run> {
        let [n0, n1] = self.lattice.shape();
        let mut out = Vec::new();
        for row in 0..n1 {
            let base = row * n0;
            let mut c = 0;
            while c < n0 {
                if self.members[base + c] {
                    let start = c;
                    while c < n0 && self.members[base + c] {
                        c += 1;
                    }
                    out.push(Run { row, start, end: c });
                } else {
                    c += 1;
                }
            }
        }
        out
    }
}

/// Lebesgue measure of a voxel set: member count times the cell volume.
pub fn measure(set: &CellSet) -> f64 {
    set.count() as f64 * set.lattice.cell_volume()
}

/// Cells whose centers lie strictly inside the ball.
pub fn ball_mask(lattice: &Lattice, center: Point, radius: f64) -> Result<CellSet> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::Parameter(format!("radius must be finite and >= 0, got {radius}")));
    }
    let (lo, hi) = (lattice.box_lo(), lattice.box_hi());
    let mut deficit: f64 = 0.0;
    for k in 0..lattice.dim() {
        deficit = deficit.max(lo[k] - (center[k] - radius));
        deficit = deficit.max((center[k] + radius) - hi[k]);
    }
    if deficit > 0.0 {
        let padding_cells = (deficit / lattice.h()).ceil() as usize;
        return Err(Error::NotContained { radius, padding_cells });
    }
    Ok(CellSet::from_fn(lattice, |i| {
        let c = lattice.center(i);
        norm([c[0] - center[0], c[1] - center[1]]) < radius
    }))
}

/// Field values prescribed outside the lattice box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ExteriorData {
    Constant(f64),
    /// `+1` where `x[axis] > threshold`, `-1` elsewhere.
    HalfspaceSign { axis: usize, threshold: f64 },
    Sampled(SampledExterior),
}

/// Exterior values sampled on their own grid inside `B_{r_ext}` and equal to
/// `beyond` (which is +1 or -1) outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledExterior {
    lattice: Lattice,
    values: Vec<f64>,
    r_ext: f64,
    beyond: f64,
}

impl SampledExterior {
    pub fn new(lattice: Lattice, values: Vec<f64>, r_ext: f64, beyond: f64) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::LatticeMismatch("sample count differs from lattice size".into()));
        }
        if beyond != 1.0 && beyond != -1.0 {
            return Err(Error::Parameter(format!("beyond-radius value must be +1 or -1, got {beyond}")));
        }
        check_admissible(&values)?;
        if !(r_ext > 0.0) {
            return Err(Error::Parameter(format!("r_ext must be positive, got {r_ext}")));
        }
        ball_mask(&lattice, [0.0, 0.0], r_ext)?;
        Ok(Self { lattice, values, r_ext, beyond })
    }

    pub fn r_ext(&self) -> f64 {
        self.r_ext
    }

    pub fn beyond(&self) -> f64 {
        self.beyond
    }

    fn eval(&self, p: Point) -> f64 {
        if norm(p) >= self.r_ext {
            return self.beyond;
        }
        match self.lattice.cell_of(p) {
            Some(i) => self.values[i],
            None => self.beyond,
        }
    }
}

/// How the exterior beyond a given box looks from the inside: either one
/// constant, or a sign split across an axis-aligned hyperplane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailProfile {
    Uniform(f64),
    Split { axis: usize, threshold: f64 },
}

impl ExteriorData {
    pub fn eval(&self, p: Point) -> f64 {
        match self {
            ExteriorData::Constant(v) => *v,
            ExteriorData::HalfspaceSign { axis, threshold } => {
                if p[*axis] > *threshold {
                    1.0
                } else {
                    -1.0
                }
            }
            ExteriorData::Sampled(s) => s.eval(p),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            ExteriorData::Constant(v) => {
                if !(-1.0..=1.0).contains(v) {
                    return Err(Error::Domain { value: *v, domain: "[-1, 1]" });
                }
            }
            ExteriorData::HalfspaceSign { axis, threshold } => {
                if *axis >= dim {
                    return Err(Error::Parameter(format!("halfspace axis {axis} >= dim {dim}")));
                }
                if !threshold.is_finite() {
                    return Err(Error::NonFinite("halfspace threshold".into()));
                }
            }
            ExteriorData::Sampled(s) => {
                if s.lattice.dim() != dim {
                    return Err(Error::LatticeMismatch("sampled exterior has a different dimension".into()));
                }
            }
        }
        Ok(())
    }

    /// The profile seen beyond `lattice`'s box. Sampled data must be constant
    /// there, i.e. the box must contain `B_{r_ext}`.
    pub fn tail_profile(&self, lattice: &Lattice) -> Result<TailProfile> {
        match self {
            ExteriorData::Constant(v) => Ok(TailProfile::Uniform(*v)),
            ExteriorData::HalfspaceSign { axis, threshold } => {
                Ok(TailProfile::Split { axis: *axis, threshold: *threshold })
            }
            ExteriorData::Sampled(s) => {
                ball_mask(lattice, [0.0, 0.0], s.r_ext)?;
                Ok(TailProfile::Uniform(s.beyond))
            }
        }
    }

    /// The data mirrored through the hyperplane `x[axis] = 0`.
    pub fn reflected(&self, axis: usize) -> Result<Self> {
        match self {
            ExteriorData::Constant(v) => Ok(ExteriorData::Constant(*v)),
            ExteriorData::HalfspaceSign { axis: a, threshold } => {
                if *a == axis {
                    Err(Error::Parameter(format!(
                        "mirrored halfspace data (axis {a}, threshold {threshold}) has the opposite orientation"
                    )))
                } else {
                    Ok(self.clone())
                }
            }
            ExteriorData::Sampled(s) => {
                let values = mirror_values(&s.lattice, &s.values, axis)?;
                Ok(ExteriorData::Sampled(SampledExterior { values, ..s.clone() }))
            }
        }
    }
}

fn mirror_values(lat: &Lattice, values: &[f64], axis: usize) -> Result<Vec<f64>> {
    if axis >= lat.dim() || lat.lo()[axis] != -lat.hi()[axis] {
        return Err(Error::Parameter(format!("box is not symmetric along axis {axis}")));
    }
    Ok((0..lat.len())
        .map(|i| {
            let mut g = lat.global(i);
            g[axis] = -1 - g[axis];
            values[lat.index(g).expect("symmetric box")]
        })
        .collect())
}

fn check_admissible(values: &[f64]) -> Result<()> {
    for &v in values {
        if !v.is_finite() {
            return Err(Error::NonFinite("field value".into()));
        }
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::Domain { value: v, domain: "[-1, 1]" });
        }
    }
    Ok(())
}

/// Cell values of `u` in `[-1, 1]` together with the exterior descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    lattice: Lattice,
    values: Vec<f64>,
    exterior: ExteriorData,
}

impl ScalarField {
    pub fn new(lattice: Lattice, values: Vec<f64>, exterior: ExteriorData) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::LatticeMismatch(format!(
                "{} values for {} cells",
                values.len(),
                lattice.len()
            )));
        }
        check_admissible(&values)?;
        exterior.validate(lattice.dim())?;
        Ok(Self { lattice, values, exterior })
    }

    /// Field equal to the exterior descriptor at every cell center.
    pub fn from_exterior(lattice: Lattice, exterior: ExteriorData) -> Result<Self> {
        exterior.validate(lattice.dim())?;
        let values = lattice.centers().map(|c| exterior.eval(c)).collect();
        Self::new(lattice, values, exterior)
    }

    pub fn constant(lattice: Lattice, value: f64) -> Result<Self> {
        Self::from_exterior(lattice, ExteriorData::Constant(value))
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn exterior(&self) -> &ExteriorData {
        &self.exterior
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Replace the cell values, keeping lattice and exterior.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.lattice, values, self.exterior.clone())
    }

    /// Evaluation anywhere in R^n: cell lookup inside the box, descriptor outside.
    pub fn value_at(&self, p: Point) -> f64 {
        match self.lattice.cell_of(p) {
            Some(i) => self.values[i],
            None => self.exterior.eval(p),
        }
    }

    /// `-u`, with the exterior negated as well.
    pub fn negated(&self) -> Result<Self> {
        let exterior = match &self.exterior {
            ExteriorData::Constant(v) => ExteriorData::Constant(-v),
            ExteriorData::HalfspaceSign { axis, threshold } => {
                // -sign(x - t) is +1 on {x < t}; only representable when mirrored.
                return Err(Error::Parameter(format!(
                    "negating halfspace data (axis {axis}, threshold {threshold}) is not representable as a halfspace descriptor"
                )));
            }
            ExteriorData::Sampled(s) => ExteriorData::Sampled(SampledExterior {
                lattice: s.lattice,
                values: s.values.iter().map(|v| -v).collect(),
                r_ext: s.r_ext,
                beyond: -s.beyond,
            }),
        };
        Self::new(self.lattice, self.values.iter().map(|v| -v).collect(), exterior)
    }

    /// Mirror image through the hyperplane `x[axis] = 0`. Requires a box that is
    /// symmetric along that axis.
    pub fn reflected(&self, axis: usize) -> Result<Self> {
        let values = mirror_values(&self.lattice, &self.values, axis)?;
        Self::new(self.lattice, values, self.exterior.reflected(axis)?)
    }
}

/// The comparison profile `-1 + 2 min{(|x| - R - 1)^+, 1}`: `-1` in `B_{R+1}`,
/// `+1` outside `B_{R+2}`, linear in between; exterior `+1`.
pub fn psi_field(lattice: &Lattice, r: f64) -> Result<ScalarField> {
    if !(r > 0.0) {
        return Err(Error::Parameter(format!("R must be positive, got {r}")));
    }
    ball_mask(lattice, [0.0, 0.0], r + 2.0)?;
    let values = lattice.centers().map(|c| psi_value(norm(c), r)).collect();
    ScalarField::new(*lattice, values, ExteriorData::Constant(1.0))
}

pub fn psi_value(radius: f64, r: f64) -> f64 {
    -1.0 + 2.0 * (radius - r - 1.0).clamp(0.0, 1.0)
}
