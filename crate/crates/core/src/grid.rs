//! Uniform tensor grids in one or two dimensions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform tensor grid on `[lo, hi]` with `n` nodes per axis.
///
/// Nodes are stored row-major: axis 0 is the outer (slow) index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    n: Vec<usize>,
}

impl TryFrom<RawGrid> for Grid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        Grid::new(raw.lo, raw.hi, raw.n)
    }
}

impl From<Grid> for RawGrid {
    fn from(g: Grid) -> Self {
        RawGrid { lo: g.lo, hi: g.hi, n: g.n }
    }
}

impl Grid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        let dim = lo.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if hi.len() != dim || n.len() != dim {
            return Err(Error::InvalidGrid("lo, hi and n must have the same length".into()));
        }
        for axis in 0..dim {
            if !(lo[axis].is_finite() && hi[axis].is_finite()) {
                return Err(Error::InvalidGrid(format!("axis {axis}: bounds must be finite")));
            }
            if lo[axis] >= hi[axis] {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: lo ({}) must be below hi ({})",
                    lo[axis], hi[axis]
                )));
            }
            if n[axis] < 3 {
                return Err(Error::InvalidGrid(format!("axis {axis}: need at least 3 nodes")));
            }
        }
        Ok(Grid { lo, hi, n })
    }

    pub fn line(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Grid::new(vec![lo], vec![hi], vec![n])
    }

    pub fn plane(lo: [f64; 2], hi: [f64; 2], n: [usize; 2]) -> Result<Self> {
        Grid::new(lo.to_vec(), hi.to_vec(), n.to_vec())
    }

    /// Square 2-D grid with the same bounds on both axes.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Grid::plane([lo, lo], [hi, hi], [n, n])
    }

    /// Grid whose nodes are `origin + k * h` for `k` in `kmin..=kmax`, per axis.
    pub fn lattice(origin: &[f64], h: &[f64], kmin: &[i64], kmax: &[i64]) -> Result<Self> {
        let dim = origin.len();
        let mut lo = Vec::with_capacity(dim);
        let mut hi = Vec::with_capacity(dim);
        let mut n = Vec::with_capacity(dim);
        for axis in 0..dim {
            let count = kmax[axis] - kmin[axis] + 1;
            if count < 3 {
                return Err(Error::InvalidGrid("lattice needs at least 3 nodes per axis".into()));
            }
            lo.push(origin[axis] + kmin[axis] as f64 * h[axis]);
            hi.push(origin[axis] + kmax[axis] as f64 * h[axis]);
            n.push(count as usize);
        }
        Grid::new(lo, hi, n)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn shape(&self) -> &[usize] {
        &self.n
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.n[axis] - 1) as f64
    }

    /// Volume of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.n[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + i as f64 * self.spacing(axis)
        }
    }

    pub fn coords(&self, axis: usize) -> Vec<f64> {
        (0..self.n[axis]).map(|i| self.coord(axis, i)).collect()
    }

    /// Flat index of a multi-index.
    pub fn flat(&self, idx: &[usize]) -> usize {
        match self.dim() {
            1 => idx[0],
            _ => idx[0] * self.n[1] + idx[1],
        }
    }

    /// Multi-index of a flat index.
    pub fn unflat(&self, k: usize) -> [usize; 2] {
        match self.dim() {
            1 => [k, 0],
            _ => [k / self.n[1], k % self.n[1]],
        }
    }

    /// Coordinates of node `k` (flat index).
    pub fn point(&self, k: usize) -> Vec<f64> {
        let idx = self.unflat(k);
        (0..self.dim()).map(|a| self.coord(a, idx[a])).collect()
    }

    /// Nearest node index along `axis` (clamped).
    pub fn nearest_index(&self, axis: usize, x: f64) -> usize {
        let t = ((x - self.lo[axis]) / self.spacing(axis)).round();
        t.clamp(0.0, (self.n[axis] - 1) as f64) as usize
    }

    /// Fractional index position of `x` along `axis`.
    pub fn position(&self, axis: usize, x: f64) -> f64 {
        (x - self.lo[axis]) / self.spacing(axis)
    }

    /// Grid with the same spacing and lattice, covering at least `[lo, hi]`.
    pub fn covering(&self, lo: &[f64], hi: &[f64]) -> Result<Grid> {
        let dim = self.dim();
        let h: Vec<f64> = (0..dim).map(|a| self.spacing(a)).collect();
        let mut kmin = Vec::with_capacity(dim);
        let mut kmax = Vec::with_capacity(dim);
        for a in 0..dim {
            let lo_k = ((lo[a] - self.lo[a]) / h[a] - 1e-9).floor() as i64;
            let hi_k = ((hi[a] - self.lo[a]) / h[a] + 1e-9).ceil() as i64;
            kmin.push(lo_k);
            kmax.push(hi_k.max(lo_k + 2));
        }
        Grid::lattice(&self.lo, &h, &kmin, &kmax)
    }

    /// Grid with every coordinate multiplied by `alpha > 0`.
    pub fn scaled(&self, alpha: f64) -> Result<Grid> {
        Grid::new(
            self.lo.iter().map(|v| v * alpha).collect(),
            self.hi.iter().map(|v| v * alpha).collect(),
            self.n.clone(),
        )
    }

    /// Grid translated by `offset`.
    pub fn shifted(&self, offset: &[f64]) -> Result<Grid> {
        Grid::new(
            self.lo.iter().zip(offset).map(|(v, o)| v + o).collect(),
            self.hi.iter().zip(offset).map(|(v, o)| v + o).collect(),
            self.n.clone(),
        )
    }

    /// Same bounds with a different node count per axis.
    pub fn with_counts(&self, n: &[usize]) -> Result<Grid> {
        Grid::new(self.lo.clone(), self.hi.clone(), n.to_vec())
    }

    /// Whether `x` lies inside the grid box (with a relative slack of `1e-9` cells).
    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|a| {
            let eps = 1e-9 * self.spacing(a);
            x[a] >= self.lo[a] - eps && x[a] <= self.hi[a] + eps
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_bounds() {
        assert!(Grid::line(1.0, 1.0, 10).is_err());
        assert!(Grid::line(0.0, 1.0, 2).is_err());
        assert!(Grid::new(vec![0.0; 3], vec![1.0; 3], vec![5; 3]).is_err());
    }

    #[test]
    fn lattice_covering_keeps_alignment() {
        let g = Grid::line(-1.0, 1.0, 21).unwrap();
        let c = g.covering(&[-1.55], &[2.0]).unwrap();
        assert!((c.spacing(0) - 0.1).abs() < 1e-12);
        assert!(c.lo()[0] <= -1.55 && c.hi()[0] >= 2.0 - 1e-12);
        let k = (c.lo()[0] - g.lo()[0]) / 0.1;
        assert!((k - k.round()).abs() < 1e-9);
    }

    #[test]
    fn flat_roundtrip() {
        let g = Grid::plane([0.0, 0.0], [1.0, 2.0], [3, 5]).unwrap();
        for k in 0..g.len() {
            assert_eq!(g.flat(&g.unflat(k)), k);
        }
        assert_eq!(g.point(7), vec![0.5, 1.0]);
    }

    #[test]
    fn serde_uses_lo_hi_n() {
        let g = Grid::line(-2.0, 2.0, 5).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"lo":[-2.0],"hi":[2.0],"n":[5]}"#);
        let back: Grid = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<Grid>(r#"{"lo":[1.0],"hi":[0.0],"n":[5]}"#).is_err());
    }
}
