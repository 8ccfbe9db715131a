//! Regular lattice over the capital box, anchored at the upper corner.

use crate::error::{Error, Result};

/// Largest number of lattice points a grid may hold.
pub const MAX_GRID_POINTS: usize = 20_000_000;

/// Points `hi - step * k` for multi-indices `0 <= k <= counts - 1`. The
/// lowest layer reaches at or below `lo`, so every `v` in `[lo, hi]` has a
/// grid point `z` with `v <= z <= v + step`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    lo: Vec<f64>,
    hi: Vec<f64>,
    step: f64,
    counts: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    /// Grid with spacing `epsilon / sqrt(g)`.
    pub fn new(lo: &[f64], hi: &[f64], epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Validation(format!("epsilon must be positive, got {epsilon}")));
        }
        Self::with_step(lo, hi, epsilon / (lo.len() as f64).sqrt())
    }

    pub fn with_step(lo: &[f64], hi: &[f64], step: f64) -> Result<Self> {
        let g = lo.len();
        if g == 0 || hi.len() != g {
            return Err(Error::Validation("grid corners must have the same positive dimension".into()));
        }
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Validation(format!("grid step must be positive, got {step}")));
        }
        if lo.iter().zip(hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
            return Err(Error::Validation("grid needs finite corners with lo <= hi".into()));
        }
        let counts: Vec<usize> = lo
            .iter()
            .zip(hi)
            .map(|(l, h)| {
                let mut k = ((h - l) / step - 1e-9).ceil().max(0.0) as usize;
                while h - step * k as f64 > *l {
                    k += 1;
                }
                k + 1
            })
            .collect();
        let mut strides = vec![1usize; g];
        let mut len: usize = 1;
        for j in (0..g).rev() {
            strides[j] = len;
            len = len
                .checked_mul(counts[j])
                .filter(|&n| n <= MAX_GRID_POINTS)
                .ok_or_else(|| Error::Capacity(format!("grid exceeds {MAX_GRID_POINTS} points")))?;
        }
        Ok(Self { lo: lo.to_vec(), hi: hi.to_vec(), step, counts, strides, len })
    }

    pub fn dim(&self) -> usize {
        self.hi.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// Points per axis.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn index(&self, k: &[usize]) -> usize {
        k.iter().zip(&self.strides).map(|(a, s)| a * s).sum()
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut k = vec![0; self.dim()];
        for j in 0..self.dim() {
            k[j] = idx / self.strides[j];
            idx %= self.strides[j];
        }
        k
    }

    pub fn coord(&self, j: usize, kj: usize) -> f64 {
        self.hi[j] - self.step * kj as f64
    }

    pub fn coords(&self, k: &[usize]) -> Vec<f64> {
        k.iter().enumerate().map(|(j, &kj)| self.coord(j, kj)).collect()
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.coords(&self.multi_index(idx))
    }

    /// Indices ordered by increasing `sum k`, i.e. from the upper corner
    /// down along anti-diagonals; ties by index.
    pub fn diagonal_order(&self) -> Vec<usize> {
        let mut order: Vec<(usize, usize)> = (0..self.len).map(|i| (self.multi_index(i).iter().sum(), i)).collect();
        order.sort_unstable();
        order.into_iter().map(|(_, i)| i).collect()
    }

    /// Largest index per axis whose coordinate is still `>= v_j`, or `None`
    /// when `v` exceeds the upper corner in some coordinate.
    pub fn floor_index(&self, v: &[f64]) -> Option<Vec<usize>> {
        let mut k = Vec::with_capacity(self.dim());
        for j in 0..self.dim() {
            if v[j] > self.hi[j] {
                return None;
            }
            let mut kj = (((self.hi[j] - v[j]) / self.step).floor().max(0.0) as usize).min(self.counts[j] - 1);
            while kj > 0 && self.coord(j, kj) < v[j] {
                kj -= 1;
            }
            while kj + 1 < self.counts[j] && self.coord(j, kj + 1) >= v[j] {
                kj += 1;
            }
            k.push(kj);
        }
        Some(k)
    }
}
