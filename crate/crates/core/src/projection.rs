//! Sparse random ±1 projections that define each node's candidate split
//! axes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::data::DataMatrix;
use crate::error::CoreError;

/// Sign bit of a packed entry; the low 31 bits hold the feature index.
const NEG_FLAG: u32 = 1 << 31;

/// A p x d matrix with ±1 entries at a sparse set of positions.
///
/// The nominal entry count is `max(1, ceil(lambda * p * d))`, all positions
/// distinct, each value ±1 with equal probability. Every output column is
/// guaranteed at least one nonzero: a column that would project every point
/// to a constant defeats all split criteria. When the nominal count is at
/// least `d` this is achieved by relocating surplus entries out of the
/// fullest columns, which preserves the count; when it is below `d` the
/// matrix gets exactly one entry per column instead, raising the effective
/// count to `d`.
///
/// Entries are stored grouped by output column with ascending feature index
/// inside each column; projection sums follow that order, so results are
/// reproducible bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseProjection {
    p: usize,
    d: usize,
    col_ptr: Vec<u32>,
    /// Packed (sign, feature) per entry, grouped by column.
    packed: Vec<u32>,
}

impl SparseProjection {
    #[inline]
    pub fn input_dims(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn output_dims(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.packed.len()
    }

    /// Triplets (input feature, output column, sign), ordered by
    /// (column, feature).
    pub fn entries(&self) -> Vec<(u32, u32, i8)> {
        let mut out = Vec::with_capacity(self.nnz());
        for c in 0..self.d {
            let lo = self.col_ptr[c] as usize;
            let hi = self.col_ptr[c + 1] as usize;
            for &cell in &self.packed[lo..hi] {
                let sign = if cell & NEG_FLAG != 0 { -1i8 } else { 1i8 };
                out.push((cell & !NEG_FLAG, c as u32, sign));
            }
        }
        out
    }

    /// The nonzero weights of a single output column, ascending by feature.
    pub fn column(&self, col: usize) -> Vec<(u32, i8)> {
        let lo = self.col_ptr[col] as usize;
        let hi = self.col_ptr[col + 1] as usize;
        self.packed[lo..hi]
            .iter()
            .map(|&cell| (cell & !NEG_FLAG, if cell & NEG_FLAG != 0 { -1i8 } else { 1i8 }))
            .collect()
    }

    /// Apply the projection: output is N x d with
    /// `out[n][c] = sum over entries (r, c, s) of s * x[n][r]`,
    /// accumulated in ascending feature order within each column.
    pub fn project(&self, x: &DataMatrix) -> Result<DataMatrix, CoreError> {
        if x.n_features() != self.p {
            return Err(CoreError::DimensionMismatch {
                expected: self.p,
                actual: x.n_features(),
            });
        }
        let n = x.n_points();
        let ids: Vec<u32> = (0..n as u32).collect();
        let values = self.project_rows(x, &ids);
        DataMatrix::new(n, self.d, values)
    }

    /// Project only the rows listed in `ids`; returns a row-major buffer of
    /// `ids.len() * d` values.
    ///
    /// Points are processed four at a time so the packed entry array is
    /// streamed once per quad and the four accumulations proceed
    /// independently; each output scalar still sums its column's entries in
    /// ascending feature order, so results match the one-point-at-a-time
    /// evaluation bit for bit.
    pub(crate) fn project_rows(&self, x: &DataMatrix, ids: &[u32]) -> Vec<f64> {
        debug_assert_eq!(x.n_features(), self.p);
        let d = self.d;
        let mut out = vec![0.0f64; ids.len() * d];
        let mut base = 0usize;
        while base < ids.len() {
            let bs = (ids.len() - base).min(4);
            let rows: [&[f64]; 4] = [
                x.row(ids[base] as usize),
                x.row(ids[base + 1.min(bs - 1)] as usize),
                x.row(ids[base + 2.min(bs - 1)] as usize),
                x.row(ids[base + 3.min(bs - 1)] as usize),
            ];
            for c in 0..d {
                let lo = self.col_ptr[c] as usize;
                let hi = self.col_ptr[c + 1] as usize;
                let mut acc = [0.0f64; 4];
                for &cell in &self.packed[lo..hi] {
                    // Multiplying by ±1 is exactly a sign-bit flip.
                    let sign_bit = u64::from(cell & NEG_FLAG) << 32;
                    let r = (cell & !NEG_FLAG) as usize;
                    // SAFETY: packed feature indices are < p by
                    // construction and every row has exactly p elements.
                    unsafe {
                        acc[0] += f64::from_bits(rows[0].get_unchecked(r).to_bits() ^ sign_bit);
                        acc[1] += f64::from_bits(rows[1].get_unchecked(r).to_bits() ^ sign_bit);
                        acc[2] += f64::from_bits(rows[2].get_unchecked(r).to_bits() ^ sign_bit);
                        acc[3] += f64::from_bits(rows[3].get_unchecked(r).to_bits() ^ sign_bit);
                    }
                }
                for (j, &a) in acc.iter().enumerate().take(bs) {
                    out[(base + j) * d + c] = a;
                }
            }
            base += bs;
        }
        out
    }
}

/// Draw a sparse ±1 projection with `max(1, ceil(lambda * p * d))` nominal
/// nonzeros at distinct uniform positions.
pub fn sample_projection<R: Rng + ?Sized>(
    p: usize,
    d: usize,
    lambda: f64,
    rng: &mut R,
) -> Result<SparseProjection, CoreError> {
    if p < 1 || d < 1 {
        return Err(CoreError::InvalidArgument(format!(
            "projection needs p >= 1 and d >= 1, got p={p}, d={d}"
        )));
    }
    if p as u64 >= u64::from(NEG_FLAG) {
        return Err(CoreError::InvalidArgument(format!(
            "too many input features ({p})"
        )));
    }
    if !(lambda.is_finite() && lambda > 0.0 && lambda <= 1.0) {
        return Err(CoreError::InvalidArgument(format!(
            "sparsity must lie in (0, 1], got {lambda}"
        )));
    }
    let cells_total = (p as u64) * (d as u64);
    // The 1e-12 slack keeps exact integer products (e.g. 1/20 * 80) from
    // rounding up to the next integer.
    let raw = lambda * p as f64 * d as f64;
    let target = (libm::ceil(raw * (1.0 - 1e-12)) as u64).max(1).min(cells_total) as usize;

    // Cell ids are column-major (c * p + r), so ascending id order is the
    // (column, feature) storage order.
    let picked: Vec<u64> = if target < d {
        // Too few entries to cover every column: place one per column.
        (0..d as u64).map(|c| c * p as u64 + rng.random_range(0..p as u64)).collect()
    } else if cells_total <= 1 << 26 {
        sample_cells_bitmap(p as u64, d as u64, cells_total, target, rng)
    } else {
        sample_cells_sorting(p as u64, d as u64, cells_total, target, rng)
    };

    let mut col_ptr = vec![0u32; d + 1];
    let mut packed = Vec::with_capacity(picked.len());
    for &id in &picked {
        let (c, r) = ((id / p as u64) as usize, (id % p as u64) as u32);
        col_ptr[c + 1] += 1;
        packed.push(if rng.random::<bool>() { r } else { r | NEG_FLAG });
    }
    for c in 0..d {
        col_ptr[c + 1] += col_ptr[c];
    }
    Ok(SparseProjection { p, d, col_ptr, packed })
}

/// Uniform draws until `target` distinct cells are seen (the set of first
/// occurrences is a uniform without-replacement sample), deduplicated with
/// a bitmap and emitted in ascending id order.
fn sample_cells_bitmap<R: Rng + ?Sized>(
    p: u64,
    d: u64,
    cells_total: u64,
    target: usize,
    rng: &mut R,
) -> Vec<u64> {
    let words = (cells_total as usize).div_ceil(64);
    let mut bits = vec![0u64; words];
    let mut counts = vec![0u32; d as usize];
    let mut have = 0usize;
    while have < target {
        let id = rng.random_range(0..cells_total);
        let (w, b) = ((id / 64) as usize, id % 64);
        if bits[w] & (1 << b) == 0 {
            bits[w] |= 1 << b;
            counts[(id / p) as usize] += 1;
            have += 1;
        }
    }
    // Relocate entries from the fullest columns into empty ones.
    for empty in 0..d {
        if counts[empty as usize] > 0 {
            continue;
        }
        let donor = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(c, _)| c as u64)
            .expect("at least one column");
        let pick = rng.random_range(0..counts[donor as usize]);
        let victim = nth_set_bit_in_range(&bits, donor * p, p, pick)
            .expect("donor count matches set bits");
        bits[(victim / 64) as usize] &= !(1 << (victim % 64));
        let fresh = empty * p + rng.random_range(0..p);
        bits[(fresh / 64) as usize] |= 1 << (fresh % 64);
        counts[donor as usize] -= 1;
        counts[empty as usize] += 1;
    }
    let mut picked = Vec::with_capacity(target);
    for (w, &word) in bits.iter().enumerate() {
        let mut word = word;
        while word != 0 {
            let b = word.trailing_zeros() as u64;
            picked.push(w as u64 * 64 + b);
            word &= word - 1;
        }
    }
    picked
}

fn nth_set_bit_in_range(bits: &[u64], start: u64, len: u64, mut n: u32) -> Option<u64> {
    for id in start..start + len {
        if bits[(id / 64) as usize] & (1 << (id % 64)) != 0 {
            if n == 0 {
                return Some(id);
            }
            n -= 1;
        }
    }
    None
}

/// Fallback for very large p x d grids where a bitmap would be oversized:
/// draw, sort, dedup, and top up until `target` distinct cells.
fn sample_cells_sorting<R: Rng + ?Sized>(
    p: u64,
    d: u64,
    cells_total: u64,
    target: usize,
    rng: &mut R,
) -> Vec<u64> {
    let mut picked: Vec<u64> = Vec::with_capacity(target + 8);
    for _ in 0..target {
        picked.push(rng.random_range(0..cells_total));
    }
    loop {
        picked.sort_unstable();
        picked.dedup();
        let missing = target - picked.len();
        if missing == 0 {
            break;
        }
        for _ in 0..missing {
            picked.push(rng.random_range(0..cells_total));
        }
    }
    // Relocation pass, as in the bitmap path.
    let mut counts = vec![0u32; d as usize];
    for &id in &picked {
        counts[(id / p) as usize] += 1;
    }
    let mut moved = false;
    for empty in 0..d {
        if counts[empty as usize] > 0 {
            continue;
        }
        let donor = counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .map(|(c, _)| c as u64)
            .expect("at least one column");
        let slots: Vec<usize> = picked
            .iter()
            .enumerate()
            .filter(|(_, &id)| id / p == donor)
            .map(|(i, _)| i)
            .collect();
        let victim = slots[rng.random_range(0..slots.len() as u64) as usize];
        picked[victim] = empty * p + rng.random_range(0..p);
        counts[donor as usize] -= 1;
        counts[empty as usize] += 1;
        moved = true;
    }
    if moved {
        picked.sort_unstable();
    }
    picked
}
