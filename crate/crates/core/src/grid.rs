//! Regular tensor grids on a box, with vertices on the box faces.

use crate::error::{Error, Result};
use crate::fields::Domain;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub domain: Domain,
    /// points per axis (≥ 2)
    pub n: Vec<usize>,
}

impl Grid {
    pub fn new(domain: Domain, n: Vec<usize>) -> Result<Self> {
        if n.len() != domain.dim() {
            return Err(Error::Dimension {
                expected: domain.dim(),
                got: n.len(),
            });
        }
        if n.iter().any(|&k| k < 2) {
            return Err(Error::InvalidInput("grid needs at least 2 points per axis".into()));
        }
        Ok(Grid { domain, n })
    }

    /// Same resolution on every axis.
    pub fn uniform(domain: Domain, n: usize) -> Result<Self> {
        let d = domain.dim();
        Self::new(domain, vec![n; d])
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn len(&self) -> usize {
        self.n.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.domain.width(axis) / (self.n[axis] - 1) as f64
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        self.domain.lo[axis] + i as f64 * self.spacing(axis)
    }

    /// Multi-index of a flat index; axis 0 varies slowest.
    pub fn unflatten(&self, mut idx: usize, out: &mut [usize]) {
        for a in (0..self.dim()).rev() {
            out[a] = idx % self.n[a];
            idx /= self.n[a];
        }
    }

    pub fn flatten(&self, mi: &[usize]) -> usize {
        let mut idx = 0;
        for a in 0..self.dim() {
            idx = idx * self.n[a] + mi[a];
        }
        idx
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut mi = vec![0; self.dim()];
        self.unflatten(idx, &mut mi);
        mi.iter().enumerate().map(|(a, &i)| self.coord(a, i)).collect()
    }

    /// Flat stride of each axis.
    pub fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1; d];
        for a in (0..d.saturating_sub(1)).rev() {
            s[a] = s[a + 1] * self.n[a + 1];
        }
        s
    }

    pub fn on_boundary(&self, mi: &[usize]) -> bool {
        mi.iter().zip(&self.n).any(|(&i, &n)| i == 0 || i + 1 == n)
    }

    /// Offsets of the full 3^d − 1 neighbourhood.
    pub fn stencil(&self) -> Vec<Vec<isize>> {
        let d = self.dim();
        let mut out = Vec::new();
        let total = 3usize.pow(d as u32);
        for code in 0..total {
            let mut c = code;
            let mut off = vec![0isize; d];
            for o in off.iter_mut() {
                *o = (c % 3) as isize - 1;
                c /= 3;
            }
            if off.iter().any(|&o| o != 0) {
                out.push(off);
            }
        }
        out
    }

    /// Flat neighbour index, or `None` off the grid.
    pub fn neighbor(&self, mi: &[usize], off: &[isize]) -> Option<usize> {
        let mut idx = 0usize;
        for a in 0..self.dim() {
            let j = mi[a] as isize + off[a];
            if j < 0 || j >= self.n[a] as isize {
                return None;
            }
            idx = idx * self.n[a] + j as usize;
        }
        Some(idx)
    }

    /// Sample a scalar function on every vertex.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let mut mi = vec![0; self.dim()];
        let mut x = vec![0.0; self.dim()];
        (0..self.len())
            .map(|idx| {
                self.unflatten(idx, &mut mi);
                for a in 0..self.dim() {
                    x[a] = self.coord(a, mi[a]);
                }
                f(&x)
            })
            .collect()
    }

    /// Largest spacing over the axes.
    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let g = Grid::new(Domain::new(vec![0.0, -1.0], vec![1.0, 1.0]).unwrap(), vec![3, 5]).unwrap();
        let mut mi = vec![0; 2];
        for idx in 0..g.len() {
            g.unflatten(idx, &mut mi);
            assert_eq!(g.flatten(&mi), idx);
        }
        assert_eq!(g.point(7), vec![0.5, 0.0]);
        assert_eq!(g.strides(), vec![5, 1]);
        assert_eq!(g.stencil().len(), 8);
    }
}
