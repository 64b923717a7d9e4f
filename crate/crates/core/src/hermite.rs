//! Orthonormal Hermite functions and shape expansion in their product basis.
//!
//! `f_j(x) = h_j(x) exp(-x^2/2) / sqrt(2^j j! sqrt(pi))` with physicists'
//! Hermite polynomials `h_j`. A density is represented as
//! `rho(x) = sum_j u_j f_{j_1}(x_1) ... f_{j_d}(x_d)` over multi-degrees with
//! `|j| <= m`, and `u_j = E[f_j(x)]`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shape::{Grid, Shape, ShapeData, TensorSet};
use crate::symtensor::{binomial, SymTensor};

/// `pi^(-1/4)`
const PI_QUARTER_INV: f64 = 0.751_125_544_464_942_5;

/// Value of the orthonormal Hermite function of degree `j` at `x`.
pub fn hermite_fn(j: usize, x: f64) -> f64 {
    let mut out = vec![0.0; j + 1];
    hermite_fns(x, &mut out);
    out[j]
}

/// Fills `out[j] = f_j(x)` for `j < out.len()` with the normalized three-term
/// recurrence `f_{j+1} = x sqrt(2/(j+1)) f_j - sqrt(j/(j+1)) f_{j-1}`.
pub fn hermite_fns(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI_QUARTER_INV * (-0.5 * x * x).exp();
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for j in 1..out.len().saturating_sub(1) {
        let jf = j as f64;
        out[j + 1] = x * (2.0 / (jf + 1.0)).sqrt() * out[j] - (jf / (jf + 1.0)).sqrt() * out[j - 1];
    }
}

/// Integer coefficients of `h_j`, ascending powers, from `h_{j+1} = 2x h_j - 2j h_{j-1}`.
pub fn hermite_poly_coeffs(j: usize) -> Vec<BigInt> {
    let mut prev = vec![BigInt::from(1)];
    if j == 0 {
        return prev;
    }
    let mut cur = vec![BigInt::zero(), BigInt::from(2)];
    for k in 1..j {
        let mut next = vec![BigInt::zero(); k + 2];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += c * 2;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= c * (2 * k);
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Multi-degrees with `|j| <= m`, by total degree, then descending on the first axis.
pub fn multi_degrees(dim: usize, m: usize) -> Vec<Vec<usize>> {
    fn shell(dim: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dim == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            shell(dim - 1, total - first, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for r in 0..=m {
        shell(dim, r, &mut Vec::new(), &mut out);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub j: Vec<usize>,
    pub u: f64,
}

/// Expansion coefficients in the normalized frame `(x - center) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteCoeffs {
    pub dim: usize,
    pub degree_max: usize,
    pub scale: f64,
    #[serde(default)]
    pub center: Vec<f64>,
    pub coeffs: Vec<Coefficient>,
}

impl HermiteCoeffs {
    pub fn zeros(dim: usize, degree_max: usize) -> Self {
        HermiteCoeffs {
            dim,
            degree_max,
            scale: 1.0,
            center: vec![0.0; dim],
            coeffs: multi_degrees(dim, degree_max)
                .into_iter()
                .map(|j| Coefficient { j, u: 0.0 })
                .collect(),
        }
    }

    pub fn get(&self, j: &[usize]) -> Option<f64> {
        self.coeffs.iter().find(|c| c.j == j).map(|c| c.u)
    }

    /// `sum_{|j| = r} u_j^2` for every `r <= degree_max`.
    pub fn shell_energies(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.degree_max + 1];
        for c in &self.coeffs {
            e[c.j.iter().sum::<usize>()] += c.u * c.u;
        }
        e
    }

    /// Keeps only degrees `|j| <= m`.
    pub fn truncated(&self, m: usize) -> HermiteCoeffs {
        HermiteCoeffs {
            degree_max: m.min(self.degree_max),
            coeffs: self
                .coeffs
                .iter()
                .filter(|c| c.j.iter().sum::<usize>() <= m)
                .cloned()
                .collect(),
            ..self.clone()
        }
    }

    /// `sum_j u_j f_j(x)` at a point of the normalized frame.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        let table = basis_table(x, self.degree_max);
        self.coeffs
            .iter()
            .map(|c| c.u * product(&table, &c.j))
            .sum()
    }

    /// Structural validation of deserialized coefficients.
    pub fn check(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale {} must be positive", self.scale)));
        }
        if !self.center.is_empty() && self.center.len() != self.dim {
            return Err(Error::DimensionMismatch("center length differs from dim".into()));
        }
        if self.coeffs.iter().any(|c| c.j.len() != self.dim) {
            return Err(Error::DimensionMismatch(
                "coefficient multi-degree length differs from dim".into(),
            ));
        }
        if self.coeffs.iter().any(|c| c.j.iter().sum::<usize>() > self.degree_max) {
            return Err(Error::InvalidArgument(
                "coefficient degree exceeds degree_max".into(),
            ));
        }
        Ok(())
    }
}

// table[a][j] = f_j(x_a)
fn basis_table(x: &[f64], m: usize) -> Vec<Vec<f64>> {
    x.iter()
        .map(|&xa| {
            let mut row = vec![0.0; m + 1];
            hermite_fns(xa, &mut row);
            row
        })
        .collect()
}

fn product(table: &[Vec<f64>], j: &[usize]) -> f64 {
    j.iter().zip(table).map(|(&ja, row)| row[ja]).product()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodeOptions {
    /// Orthonormalize the sampled basis on the lattice before projecting.
    /// Only meaningful for grid shapes.
    pub gram_schmidt: bool,
}

/// `u_j = E[f_j(x)]` for all `|j| <= m` of an already centered (and scaled) shape.
pub fn encode(shape: &Shape, m: usize) -> Result<HermiteCoeffs> {
    encode_with(shape, m, EncodeOptions::default())
}

pub fn encode_with(shape: &Shape, m: usize, options: EncodeOptions) -> Result<HermiteCoeffs> {
    if !shape.is_centered() {
        return Err(Error::NotCentered("Hermite encoding"));
    }
    let d = shape.dim();
    let degrees = multi_degrees(d, m);
    let u = if options.gram_schmidt {
        let ShapeData::Grid(grid) = shape.data() else {
            return Err(Error::InvalidArgument(
                "Gram-Schmidt orthogonalization needs a grid shape".into(),
            ));
        };
        lattice_projection(grid, &degrees, m)
    } else {
        let mut u = vec![0.0; degrees.len()];
        shape.for_each_sample(|x, w| {
            if w == 0.0 {
                return;
            }
            let table = basis_table(x, m);
            for (uj, j) in u.iter_mut().zip(&degrees) {
                *uj += w * product(&table, j);
            }
        });
        u
    };
    Ok(HermiteCoeffs {
        dim: d,
        degree_max: m,
        scale: 1.0,
        center: vec![0.0; d],
        coeffs: degrees
            .into_iter()
            .zip(u)
            .map(|(j, u)| Coefficient { j, u })
            .collect(),
    })
}

/// Least-squares fit on the lattice via modified Gram-Schmidt in graded order.
/// Basis functions that are numerically dependent on earlier ones are skipped.
fn lattice_projection(grid: &Grid, degrees: &[Vec<usize>], m: usize) -> Vec<f64> {
    let n = grid.len();
    let d = grid.dim();
    let sqrt_cell = grid.cell_volume().sqrt();
    let mut x = vec![0.0; d];
    let tables: Vec<Vec<Vec<f64>>> = (0..n)
        .map(|k| {
            grid.center_of(k, &mut x);
            basis_table(&x, m)
        })
        .collect();
    // density samples scaled so the lattice inner product is a plain dot product
    let target: Vec<f64> = grid.values.iter().map(|w| w / sqrt_cell).collect();

    let nb = degrees.len();
    let mut ortho: Vec<Vec<f64>> = Vec::with_capacity(nb);
    // expansion of each orthonormal vector in the original basis
    let mut expansion: Vec<Vec<f64>> = Vec::with_capacity(nb);
    for (b, j) in degrees.iter().enumerate() {
        let mut v: Vec<f64> = tables.iter().map(|t| product(t, j) * sqrt_cell).collect();
        let norm0 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut coef = vec![0.0; nb];
        coef[b] = 1.0;
        for (g, l) in ortho.iter().zip(&expansion) {
            let c: f64 = v.iter().zip(g).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(g).for_each(|(a, b)| *a -= c * b);
            coef.iter_mut().zip(l).for_each(|(a, b)| *a -= c * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !(norm > 1e-8 * norm0) {
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        coef.iter_mut().for_each(|a| *a /= norm);
        ortho.push(v);
        expansion.push(coef);
    }

    let mut u = vec![0.0; nb];
    for (g, l) in ortho.iter().zip(&expansion) {
        let c: f64 = target.iter().zip(g).map(|(a, b)| a * b).sum();
        u.iter_mut().zip(l).for_each(|(a, b)| *a += c * b);
    }
    u
}

/// Regular sampling lattice; axis 0 varies fastest in the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub extents: Vec<usize>,
}

impl GridSpec {
    pub fn of(grid: &Grid) -> Self {
        GridSpec {
            origin: grid.origin.clone(),
            spacing: grid.spacing.clone(),
            extents: grid.extents.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `rho(x) = sum_j u_j f_j(x)` at every cell center of `grid`, in the
/// normalized frame of `coeffs`. Truncated expansions may go negative.
pub fn reconstruct(coeffs: &HermiteCoeffs, grid: &GridSpec) -> Result<Vec<f64>> {
    coeffs.check()?;
    let d = coeffs.dim;
    if grid.origin.len() != d || grid.spacing.len() != d || grid.extents.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "grid spec does not have dimension {d}"
        )));
    }
    let m = coeffs.degree_max;
    // axis_tables[a][i][j] = f_j(origin_a + i * spacing_a)
    let axis_tables: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|a| {
            (0..grid.extents[a])
                .map(|i| {
                    let mut row = vec![0.0; m + 1];
                    hermite_fns(grid.origin[a] + i as f64 * grid.spacing[a], &mut row);
                    row
                })
                .collect()
        })
        .collect();
    let mut out = vec![0.0; grid.len()];
    let mut idx = vec![0usize; d];
    for cell in out.iter_mut() {
        *cell = coeffs
            .coeffs
            .iter()
            .map(|c| {
                c.u * c
                    .j
                    .iter()
                    .enumerate()
                    .map(|(a, &ja)| axis_tables[a][idx[a]][ja])
                    .product::<f64>()
            })
            .sum();
        // axis 0 fastest
        for a in 0..d {
            idx[a] += 1;
            if idx[a] < grid.extents[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(out)
}

/// Grid spec in the normalized frame of `coeffs` for a lattice given in original coordinates.
pub fn normalized_grid(coeffs: &HermiteCoeffs, original: &GridSpec) -> GridSpec {
    GridSpec {
        origin: original
            .origin
            .iter()
            .zip(coeffs.center.iter().chain(std::iter::repeat(&0.0)))
            .map(|(o, c)| (o - c) / coeffs.scale)
            .collect(),
        spacing: original.spacing.iter().map(|s| s / coeffs.scale).collect(),
        extents: original.extents.clone(),
    }
}

/// L2 distance between the reconstruction and a normalized grid density,
/// `sqrt(sum_cells (rho_hat - w / A)^2 A)` with `A` the cell volume.
pub fn l2_error(coeffs: &HermiteCoeffs, shape: &Shape) -> Result<f64> {
    let ShapeData::Grid(grid) = shape.data() else {
        return Err(Error::InvalidArgument("L2 error needs a grid shape".into()));
    };
    let field = reconstruct(coeffs, &GridSpec::of(grid))?;
    let area = grid.cell_volume();
    let sum: f64 = field
        .iter()
        .zip(&grid.values)
        .map(|(r, w)| {
            let e = r - w / area;
            e * e
        })
        .sum();
    Ok((sum * area).sqrt())
}

/// Polynomial split into homogeneous parts: `p(x) = sum_r p^r(x)`, with
/// `p^r(x) = sum_{a_1..a_r} p_{a_1..a_r} x_{a_1} ... x_{a_r}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    pub dim: usize,
    pub degree_max: usize,
    /// `homogeneous[r]` has order `r`.
    pub homogeneous: Vec<SymTensor>,
}

impl Polynomial {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.homogeneous.iter().map(|t| evaluate_homogeneous(t, x)).sum()
    }
}

/// `p^r(x)` from the packed tensor: `sum multiplicity * entry * prod x`.
pub fn evaluate_homogeneous(t: &SymTensor, x: &[f64]) -> f64 {
    let layout = t.layout();
    layout
        .tuples
        .iter()
        .zip(&layout.multiplicity)
        .zip(t.entries())
        .map(|((tuple, m), e)| m * e * tuple.iter().map(|&a| x[a]).product::<f64>())
        .sum()
}

impl TensorSet for Polynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn max_order(&self) -> usize {
        self.degree_max
    }

    fn tensor(&self, order: usize) -> Option<&SymTensor> {
        self.homogeneous.get(order)
    }
}

/// Monomial coefficients `c_alpha` (keyed by exponent vectors) of
/// `sum_j u_j prod_a f_{j_a}(x_a)` with the Gaussian factor removed.
pub fn monomial_coefficients(coeffs: &HermiteCoeffs) -> Result<BTreeMap<Vec<usize>, f64>> {
    coeffs.check()?;
    let m = coeffs.degree_max;
    // scaled[j][i] = c_{j,i} / sqrt(2^j j!) * pi^(-1/4)
    let scaled: Vec<Vec<f64>> = (0..=m)
        .map(|j| {
            let norm2 = (BigInt::from(1) << j) * (1..=j).fold(BigInt::from(1), |acc, k| acc * k);
            let denom = norm2.to_f64().expect("finite").sqrt();
            hermite_poly_coeffs(j)
                .iter()
                .map(|c| c.to_f64().expect("finite") / denom * PI_QUARTER_INV)
                .collect()
        })
        .collect();

    let mut out: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for c in &coeffs.coeffs {
        if c.u == 0.0 {
            continue;
        }
        // enumerate powers alpha_a <= j_a with matching parity
        let mut alpha: Vec<usize> = c.j.iter().map(|&j| j % 2).collect();
        loop {
            let term: f64 = c
                .j
                .iter()
                .zip(&alpha)
                .map(|(&j, &i)| scaled[j][i])
                .product();
            *out.entry(alpha.clone()).or_insert(0.0) += c.u * term;
            let mut a = 0;
            loop {
                if a == alpha.len() {
                    break;
                }
                if alpha[a] + 2 <= c.j[a] {
                    alpha[a] += 2;
                    break;
                }
                alpha[a] = c.j[a] % 2;
                a += 1;
            }
            if a == alpha.len() {
                break;
            }
        }
    }
    Ok(out)
}

/// Drops the Gaussian weight and regroups the expansion into homogeneous
/// symmetric tensors: packed entry for `alpha` is `c_alpha / multinomial(r; alpha)`.
pub fn to_polynomial(coeffs: &HermiteCoeffs) -> Result<Polynomial> {
    let d = coeffs.dim;
    let m = coeffs.degree_max;
    let monomials = monomial_coefficients(coeffs)?;
    let mut homogeneous: Vec<SymTensor> = (0..=m).map(|r| SymTensor::zeros(d, r)).collect();
    for (alpha, c) in monomials {
        let r: usize = alpha.iter().sum();
        let tuple: Vec<usize> = alpha
            .iter()
            .enumerate()
            .flat_map(|(a, &k)| std::iter::repeat_n(a, k))
            .collect();
        let mut multiplicity: u128 = 1;
        let mut placed = 0;
        for &k in &alpha {
            placed += k;
            multiplicity *= binomial(placed, k);
        }
        homogeneous[r].set(&tuple, c / multiplicity as f64)?;
    }
    Ok(Polynomial {
        dim: d,
        degree_max: m,
        homogeneous,
    })
}
