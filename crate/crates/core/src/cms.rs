//! Count-Min Sketch with fixed-width saturating counters.
//!
//! The sketch is a `depth × width` matrix of counters. Each row owns a hash
//! function from the universal family `((a·x + b) mod p) mod width` over the
//! Mersenne prime `p = 2^61 - 1`, with `(a, b)` drawn deterministically from
//! `(seed, row)`. Incrementing a key bumps one counter per row; the estimate
//! is the minimum of those counters, so it never undershoots the true count
//! while no counter on the key's path has saturated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Modulus of the row hash family.
pub const MERSENNE_61: u64 = (1 << 61) - 1;

/// Tolerance applied before ceiling the sizing formulas, so that values a
/// rounding error away from an integer are not bumped to the next one.
const CEIL_GUARD: f64 = 1e-12;

const SNAPSHOT_MAGIC: &[u8; 4] = b"CMS1";
const SNAPSHOT_HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CmsError {
    #[error("invalid sketch parameters: {0}")]
    InvalidParams(String),
    #[error("invalid sketch dimensions: width={width}, depth={depth}")]
    InvalidDims { width: usize, depth: usize },
    #[error("malformed sketch snapshot: {0}")]
    Snapshot(String),
}

/// Width of a single counter cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CellWidth {
    One,
    #[default]
    Two,
    Four,
}

impl CellWidth {
    pub fn bytes(self) -> usize {
        match self {
            CellWidth::One => 1,
            CellWidth::Two => 2,
            CellWidth::Four => 4,
        }
    }

    /// Largest value a cell can hold; increments saturate here.
    pub fn max_value(self) -> u32 {
        match self {
            CellWidth::One => u8::MAX as u32,
            CellWidth::Two => u16::MAX as u32,
            CellWidth::Four => u32::MAX,
        }
    }

    pub fn from_bytes(bytes: usize) -> Option<Self> {
        match bytes {
            1 => Some(CellWidth::One),
            2 => Some(CellWidth::Two),
            4 => Some(CellWidth::Four),
            _ => None,
        }
    }
}

/// Sketch shape: `width` cells per row, `depth` rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SketchDims {
    pub width: usize,
    pub depth: usize,
}

impl SketchDims {
    pub fn new(width: usize, depth: usize) -> Result<Self, CmsError> {
        if width == 0 || depth == 0 || width > u32::MAX as usize || depth > u32::MAX as usize {
            return Err(CmsError::InvalidDims { width, depth });
        }
        Ok(SketchDims { width, depth })
    }

    pub fn cells(&self) -> usize {
        self.width * self.depth
    }

    pub fn memory_bytes(&self, cell_width: CellWidth) -> usize {
        self.cells() * cell_width.bytes()
    }
}

/// Accuracy target: additive error fraction `epsilon` and certainty `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl SketchParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self, CmsError> {
        let params = SketchParams { epsilon, delta };
        params.validate()?;
        Ok(params)
    }

    fn validate(&self) -> Result<(), CmsError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0 && self.epsilon <= 2.0) {
            return Err(CmsError::InvalidParams(format!(
                "epsilon must lie in (0, 2], got {}",
                self.epsilon
            )));
        }
        if !(self.delta.is_finite() && (0.0..1.0).contains(&self.delta)) {
            return Err(CmsError::InvalidParams(format!(
                "delta must lie in [0, 1), got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

fn guarded_ceil(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= CEIL_GUARD * nearest.abs().max(1.0) {
        nearest
    } else {
        x.ceil()
    }
}

/// Sizes a sketch from an accuracy target:
/// `width = ⌈2/ε⌉` and `depth = ⌈log(1−δ) / log(1/2)⌉`.
///
/// `delta = 0` yields a depth of zero and is rejected.
pub fn dims_from_params(params: SketchParams) -> Result<SketchDims, CmsError> {
    params.validate()?;
    let width = guarded_ceil(2.0 / params.epsilon);
    let depth = guarded_ceil((1.0 - params.delta).ln() / 0.5f64.ln());
    if depth < 1.0 {
        return Err(CmsError::InvalidParams(format!(
            "delta={} yields depth {depth}, need at least one row",
            params.delta
        )));
    }
    if width > u32::MAX as f64 || depth > u32::MAX as f64 {
        return Err(CmsError::InvalidParams("sketch dimensions overflow".into()));
    }
    SketchDims::new(width as usize, depth as usize)
}

#[inline]
fn mulmod61(a: u64, b: u64) -> u64 {
    let prod = a as u128 * b as u128;
    let lo = (prod as u64) & MERSENNE_61;
    let hi = (prod >> 61) as u64;
    let s = lo + hi;
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

#[inline]
fn addmod61(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

/// Maps a key's bytes to an element of GF(2^61 - 1).
///
/// Keys are read as big-endian 7-byte limbs folded with base 2^56, seeded
/// with the key length so that keys differing only in leading zero bytes stay
/// distinct. Short keys of equal length map to consecutive field elements
/// when their integer values are consecutive.
pub fn key_to_field(key: &[u8]) -> u64 {
    const BASE: u64 = 1 << 56;
    let mut acc = key.len() as u64 % MERSENNE_61;
    let head = key.len() % 7;
    let (first, rest) = key.split_at(head);
    let mut fold = |limb: &[u8]| {
        let v = limb.iter().fold(0u64, |v, &b| (v << 8) | b as u64);
        acc = addmod61(mulmod61(acc, BASE), v);
    };
    if !first.is_empty() {
        fold(first);
    }
    for limb in rest.chunks_exact(7) {
        fold(limb);
    }
    acc
}

/// One row's hash function `((a·x + b) mod p) mod width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowHash {
    a: u64,
    b: u64,
}

impl RowHash {
    /// Derives the hash for `row` from `seed`.
    pub fn derive(seed: u64, row: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(row as u64);
        RowHash {
            a: rng.random_range(1..MERSENNE_61),
            b: rng.random_range(0..MERSENNE_61),
        }
    }

    #[inline]
    pub fn column(&self, x: u64, width: usize) -> usize {
        (addmod61(mulmod61(self.a, x), self.b) % width as u64) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMinSketch {
    dims: SketchDims,
    cell_width: CellWidth,
    seed: u64,
    rows: Vec<RowHash>,
    // Row-major, depth × width.
    cells: Vec<u32>,
}

impl CountMinSketch {
    pub fn new(dims: SketchDims, cell_width: CellWidth, seed: u64) -> Self {
        let rows = (0..dims.depth).map(|r| RowHash::derive(seed, r)).collect();
        CountMinSketch {
            dims,
            cell_width,
            seed,
            rows,
            cells: vec![0; dims.cells()],
        }
    }

    pub fn from_params(params: SketchParams, cell_width: CellWidth, seed: u64) -> Result<Self, CmsError> {
        Ok(Self::new(dims_from_params(params)?, cell_width, seed))
    }

    pub fn dims(&self) -> SketchDims {
        self.dims
    }

    pub fn cell_width(&self) -> CellWidth {
        self.cell_width
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn memory_bytes(&self) -> usize {
        self.dims.memory_bytes(self.cell_width)
    }

    pub fn row(&self, r: usize) -> &[u32] {
        let w = self.dims.width;
        &self.cells[r * w..(r + 1) * w]
    }

    /// Flat index of `key`'s counter in each row.
    pub fn positions<'a>(&'a self, key: &[u8]) -> impl Iterator<Item = usize> + 'a {
        let x = key_to_field(key);
        let w = self.dims.width;
        self.rows
            .iter()
            .enumerate()
            .map(move |(r, h)| r * w + h.column(x, w))
    }

    /// Adds `amount` to each of `key`'s counters, saturating at the cell maximum.
    pub fn increment(&mut self, key: &[u8], amount: u64) {
        self.increment_estimate(key, amount);
    }

    /// Like [`increment`](Self::increment), returning the post-increment estimate.
    pub fn increment_estimate(&mut self, key: &[u8], amount: u64) -> u64 {
        let x = key_to_field(key);
        let w = self.dims.width;
        let max = self.cell_width.max_value();
        let add = amount.min(max as u64) as u32;
        let mut min = u32::MAX;
        for (r, h) in self.rows.iter().enumerate() {
            let cell = &mut self.cells[r * w + h.column(x, w)];
            *cell = cell.saturating_add(add).min(max);
            min = min.min(*cell);
        }
        min as u64
    }

    /// Minimum over rows of `key`'s counters.
    pub fn estimate(&self, key: &[u8]) -> u64 {
        self.positions(key)
            .map(|i| self.cells[i])
            .min()
            .unwrap_or(0) as u64
    }

    /// Zeroes every counter; hashers and seed are kept.
    pub fn reset(&mut self) {
        self.cells.fill(0);
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(|&c| c == 0)
    }

    /// Serializes to the `CMS1` snapshot layout: magic, then width, depth and
    /// cell width as little-endian u32, the seed as little-endian u64, then
    /// the counters row-major, each `cell_width` bytes little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let cw = self.cell_width.bytes();
        let mut out = Vec::with_capacity(SNAPSHOT_HEADER_LEN + self.cells.len() * cw);
        out.extend_from_slice(SNAPSHOT_MAGIC);
        out.extend_from_slice(&(self.dims.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.dims.depth as u32).to_le_bytes());
        out.extend_from_slice(&(cw as u32).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for &c in &self.cells {
            out.extend_from_slice(&c.to_le_bytes()[..cw]);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CmsError> {
        if bytes.len() < SNAPSHOT_HEADER_LEN {
            return Err(CmsError::Snapshot(format!("short header: {} bytes", bytes.len())));
        }
        if &bytes[..4] != SNAPSHOT_MAGIC {
            return Err(CmsError::Snapshot("bad magic".into()));
        }
        let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
        let width = u32_at(4);
        let depth = u32_at(8);
        let cw = u32_at(12);
        let seed = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let cell_width =
            CellWidth::from_bytes(cw).ok_or_else(|| CmsError::Snapshot(format!("unsupported cell width {cw}")))?;
        let dims = SketchDims::new(width, depth).map_err(|e| CmsError::Snapshot(e.to_string()))?;
        let body = &bytes[SNAPSHOT_HEADER_LEN..];
        if body.len() != dims.cells() * cw {
            return Err(CmsError::Snapshot(format!(
                "expected {} counter bytes, found {}",
                dims.cells() * cw,
                body.len()
            )));
        }
        let mut sketch = CountMinSketch::new(dims, cell_width, seed);
        for (cell, chunk) in sketch.cells.iter_mut().zip(body.chunks_exact(cw)) {
            let mut buf = [0u8; 4];
            buf[..cw].copy_from_slice(chunk);
            *cell = u32::from_le_bytes(buf);
        }
        Ok(sketch)
    }
}
