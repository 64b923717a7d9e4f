//! Packed storage for symmetric tensors.
//!
//! An order-`r` symmetric tensor over `d` axes has `C(d+r-1, r)` independent
//! entries, one per nondecreasing multi-index `a_1 <= ... <= a_r`. Entries are
//! stored in colexicographic order of those tuples. Each stored entry stands
//! for `multinomial(r; counts)` positions of the dense tensor, which is what
//! the packed Frobenius product weights by.
//!
//! Axes are 0-based throughout the API.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Max deviation of `OᵀO` from the identity accepted for a rotation.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// `C(n, k)` in exact integer arithmetic.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Number of packed entries of an order-`order` symmetric tensor in `dim` dimensions.
pub fn packed_len(dim: usize, order: usize) -> usize {
    if dim == 0 {
        return usize::from(order == 0);
    }
    binomial(dim + order - 1, order) as usize
}

/// Multinomial coefficient `r! / prod(counts!)` where the counts are taken from
/// a sorted multi-index.
fn multiplicity_of(sorted: &[usize]) -> f64 {
    let mut acc: u128 = 1;
    let mut placed = 0usize;
    let mut i = 0;
    while i < sorted.len() {
        let mut run = 1;
        while i + run < sorted.len() && sorted[i + run] == sorted[i] {
            run += 1;
        }
        placed += run;
        acc *= binomial(placed, run);
        i += run;
    }
    acc as f64
}

/// Index tables shared by every tensor with the same `(dim, order)`.
#[derive(Debug)]
pub struct Layout {
    pub dim: usize,
    pub order: usize,
    /// Nondecreasing multi-indices in packed (colex) order.
    pub tuples: Vec<Vec<usize>>,
    pub multiplicity: Vec<f64>,
    /// Row-major dense offset of each packed tuple.
    pub dense_offset: Vec<usize>,
    /// Packed offset of each row-major dense position.
    pub packed_of_dense: Vec<usize>,
}

impl Layout {
    fn build(dim: usize, order: usize) -> Self {
        let mut tuples = Vec::with_capacity(packed_len(dim, order));
        if dim > 0 || order == 0 {
            colex_tuples(order, dim.saturating_sub(1), &mut tuples);
        }
        let multiplicity = tuples.iter().map(|t| multiplicity_of(t)).collect();
        let dense_offset = tuples.iter().map(|t| dense_offset(dim, t)).collect();
        let n = dim.pow(order as u32);
        let mut packed_of_dense = Vec::with_capacity(n);
        let mut idx = vec![0usize; order];
        let mut sorted = vec![0usize; order];
        for _ in 0..n {
            sorted.copy_from_slice(&idx);
            sorted.sort_unstable();
            packed_of_dense.push(rank_sorted(&sorted));
            increment(&mut idx, dim);
        }
        Layout {
            dim,
            order,
            tuples,
            multiplicity,
            dense_offset,
            packed_of_dense,
        }
    }

    pub fn get(dim: usize, order: usize) -> Arc<Layout> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry((dim, order))
            .or_insert_with(|| Arc::new(Layout::build(dim, order)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn dense_len(&self) -> usize {
        self.dim.pow(self.order as u32)
    }
}

// Appends all nondecreasing tuples of length `len` with entries <= `max`, in colex order.
fn colex_tuples(len: usize, max: usize, out: &mut Vec<Vec<usize>>) {
    if len == 0 {
        out.push(Vec::new());
        return;
    }
    for last in 0..=max {
        let start = out.len();
        colex_tuples(len - 1, last, out);
        for t in &mut out[start..] {
            t.push(last);
        }
    }
}

fn dense_offset(dim: usize, idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &a| acc * dim + a)
}

/// Packed offset of a multi-index (any order of axes).
///
/// The multi-index is sorted, then ranked among nondecreasing tuples in
/// colexicographic order: `rank = sum_k C(a_k + k, k + 1)`.
pub fn pack_index(dim: usize, multi_index: &[usize]) -> Result<usize> {
    if let Some(&axis) = multi_index.iter().find(|&&a| a >= dim) {
        return Err(Error::AxisOutOfRange { axis, dim });
    }
    let mut sorted = multi_index.to_vec();
    sorted.sort_unstable();
    Ok(rank_sorted(&sorted))
}

fn rank_sorted(sorted: &[usize]) -> usize {
    sorted
        .iter()
        .enumerate()
        .map(|(k, &a)| binomial(a + k, k + 1) as usize)
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymTensor {
    dim: usize,
    order: usize,
    entries: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(dim: usize, order: usize) -> Self {
        SymTensor {
            dim,
            order,
            entries: vec![0.0; packed_len(dim, order)],
        }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        SymTensor {
            dim,
            order: 0,
            entries: vec![value],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut t = Self::zeros(dim, 2);
        for a in 0..dim {
            t.set(&[a, a], 1.0).expect("axis in range");
        }
        t
    }

    pub fn from_packed(dim: usize, order: usize, entries: Vec<f64>) -> Result<Self> {
        let expected = packed_len(dim, order);
        if entries.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "order-{order} tensor in {dim} dimensions needs {expected} entries, got {}",
                entries.len()
            )));
        }
        Ok(SymTensor {
            dim,
            order,
            entries,
        })
    }

    /// Builds a tensor by evaluating `f` on each nondecreasing multi-index.
    pub fn from_fn(dim: usize, order: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let layout = Layout::get(dim, order);
        let entries = layout.tuples.iter().map(|t| f(t)).collect();
        SymTensor {
            dim,
            order,
            entries,
        }
    }

    /// Packs a dense row-major tensor, reading the entry at each sorted multi-index.
    /// The input is assumed symmetric.
    pub fn from_dense(dim: usize, order: usize, dense: &[f64]) -> Result<Self> {
        let layout = Layout::get(dim, order);
        if dense.len() != layout.dense_len() {
            return Err(Error::DimensionMismatch(format!(
                "dense tensor has {} entries, expected {}",
                dense.len(),
                layout.dense_len()
            )));
        }
        let entries = layout.dense_offset.iter().map(|&o| dense[o]).collect();
        Ok(SymTensor {
            dim,
            order,
            entries,
        })
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch("matrix is not square".into()));
        }
        let d = m.nrows();
        Ok(Self::from_fn(d, 2, |t| 0.5 * (m[(t[0], t[1])] + m[(t[1], t[0])])))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [f64] {
        &mut self.entries
    }

    pub fn layout(&self) -> Arc<Layout> {
        Layout::get(self.dim, self.order)
    }

    pub fn get(&self, multi_index: &[usize]) -> Result<f64> {
        self.check_arity(multi_index)?;
        Ok(self.entries[pack_index(self.dim, multi_index)?])
    }

    pub fn set(&mut self, multi_index: &[usize], value: f64) -> Result<()> {
        self.check_arity(multi_index)?;
        let k = pack_index(self.dim, multi_index)?;
        self.entries[k] = value;
        Ok(())
    }

    fn check_arity(&self, multi_index: &[usize]) -> Result<()> {
        if multi_index.len() != self.order {
            return Err(Error::DimensionMismatch(format!(
                "multi-index of length {} for order-{} tensor",
                multi_index.len(),
                self.order
            )));
        }
        Ok(())
    }

    /// Row-major dense expansion of length `dim^order`.
    pub fn to_dense(&self) -> Vec<f64> {
        self.layout()
            .packed_of_dense
            .iter()
            .map(|&k| self.entries[k])
            .collect()
    }

    /// Order-2 tensor as a `d x d` matrix.
    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.order != 2 {
            return Err(Error::DimensionMismatch(format!(
                "expected an order-2 tensor, got order {}",
                self.order
            )));
        }
        Ok(DMatrix::from_row_slice(self.dim, self.dim, &self.to_dense()))
    }

    pub fn norm(&self) -> f64 {
        self.frobenius_unchecked(self).sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        self.entries.iter_mut().for_each(|e| *e *= factor);
    }

    /// Packed Frobenius product `sum over all index tuples of p * q`.
    pub fn frobenius(&self, other: &SymTensor) -> Result<f64> {
        if self.dim != other.dim || self.order != other.order {
            return Err(Error::DimensionMismatch(format!(
                "frobenius of (d={}, r={}) with (d={}, r={})",
                self.dim, self.order, other.dim, other.order
            )));
        }
        Ok(self.frobenius_unchecked(other))
    }

    fn frobenius_unchecked(&self, other: &SymTensor) -> f64 {
        let layout = self.layout();
        layout
            .multiplicity
            .iter()
            .zip(self.entries.iter().zip(&other.entries))
            .map(|(m, (a, b))| m * a * b)
            .sum()
    }

    /// Squared Frobenius distance between two tensors of equal shape.
    pub fn distance_squared(&self, other: &SymTensor) -> Result<f64> {
        if self.dim != other.dim || self.order != other.order {
            return Err(Error::DimensionMismatch(format!(
                "distance of (d={}, r={}) with (d={}, r={})",
                self.dim, self.order, other.dim, other.order
            )));
        }
        let layout = self.layout();
        Ok(layout
            .multiplicity
            .iter()
            .zip(self.entries.iter().zip(&other.entries))
            .map(|(m, (a, b))| m * (a - b) * (a - b))
            .sum())
    }

    /// Applies `rot` to every slot: `t'_{i..} = sum O_{i a} ... t_{a..}`.
    ///
    /// Equivalently, the moment tensor of the points `O x` is `rotate(p, O)`.
    pub fn rotate(&self, rot: &DMatrix<f64>) -> Result<SymTensor> {
        check_orthogonal(rot, self.dim)?;
        Ok(self.rotate_unchecked(rot))
    }

    /// `rotate` without the orthogonality check; callers guarantee `rot` is orthogonal.
    pub(crate) fn rotate_unchecked(&self, rot: &DMatrix<f64>) -> SymTensor {
        if self.order == 0 {
            return self.clone();
        }
        let d = self.dim;
        let mut dense = self.to_dense();
        let mut next = vec![0.0; dense.len()];
        // Mode products, one slot at a time.
        for slot in 0..self.order {
            let inner = d.pow((self.order - slot - 1) as u32);
            let outer = d.pow(slot as u32);
            for o in 0..outer {
                for rest in 0..inner {
                    for i in 0..d {
                        let mut acc = 0.0;
                        for a in 0..d {
                            acc += rot[(i, a)] * dense[(o * d + a) * inner + rest];
                        }
                        next[(o * d + i) * inner + rest] = acc;
                    }
                }
            }
            std::mem::swap(&mut dense, &mut next);
        }
        let layout = self.layout();
        SymTensor {
            dim: d,
            order: self.order,
            entries: layout.dense_offset.iter().map(|&o| dense[o]).collect(),
        }
    }
}

pub(crate) fn increment(idx: &mut [usize], dim: usize) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < dim {
            return;
        }
        idx[k] = 0;
    }
}

pub fn check_orthogonal(rot: &DMatrix<f64>, dim: usize) -> Result<()> {
    if rot.nrows() != dim || rot.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "rotation is {}x{}, tensor dimension is {dim}",
            rot.nrows(),
            rot.ncols()
        )));
    }
    let gram = rot.transpose() * rot;
    let dev = (gram - DMatrix::<f64>::identity(dim, dim)).amax();
    if dev > ORTHOGONALITY_TOL {
        return Err(Error::NotOrthogonal(dev));
    }
    Ok(())
}

/// `Tr(P^i)` for an order-2 tensor `P`.
pub fn trace_power(p: &SymTensor, i: usize) -> Result<f64> {
    if i < 1 {
        return Err(Error::InvalidArgument("trace power needs i >= 1".into()));
    }
    let m = p.to_matrix()?;
    let mut acc = m.clone();
    for _ in 1..i {
        acc = &acc * &m;
    }
    Ok(acc.trace())
}
