//! Shapes as normalized measures and their central moment tensors.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symtensor::{Layout, SymTensor};

/// Regular lattice of cell-center samples; axis 0 varies fastest in `values`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub extents: Vec<usize>,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Coordinates of the cell center with flat index `k`.
    pub fn center_of(&self, mut k: usize, out: &mut [f64]) {
        for a in 0..self.dim() {
            let i = k % self.extents[a];
            k /= self.extents[a];
            out[a] = self.origin[a] + i as f64 * self.spacing[a];
        }
    }

    fn validate(&self) -> Result<()> {
        let d = self.extents.len();
        if d == 0 || self.origin.len() != d || self.spacing.len() != d {
            return Err(Error::DimensionMismatch(
                "grid origin, spacing and extents must have the same length".into(),
            ));
        }
        if self.spacing.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidArgument("grid spacing must be positive".into()));
        }
        if self.values.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "grid has {} cells but {} values",
                self.len(),
                self.values.len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ShapeData {
    /// Flat row-major coordinates (`n * dim`) with one weight per point.
    Points { coords: Vec<f64>, weights: Vec<f64> },
    Grid(Grid),
}

/// A normalized measure on `R^d` defining the expectation `E[f(x)]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shape {
    dim: usize,
    data: ShapeData,
    /// Weight sum before normalization.
    total_weight: f64,
    centered: bool,
    scale_normalized: bool,
}

impl Shape {
    /// Weighted point set; weights are normalized to sum to one.
    pub fn from_points(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if coords.len() != weights.len() * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} coordinates for {} points in {dim} dimensions",
                coords.len(),
                weights.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroWeight);
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Shape {
            dim,
            data: ShapeData::Points { coords, weights },
            total_weight: total,
            centered: false,
            scale_normalized: false,
        })
    }

    /// Equal-weight point set.
    pub fn uniform_points(dim: usize, coords: Vec<f64>) -> Result<Self> {
        let n = coords.len().checked_div(dim).unwrap_or(0);
        Self::from_points(dim, coords, vec![1.0; n])
    }

    /// Grid density; cell weights are `value * cell volume`, normalized to sum to one.
    pub fn from_grid(mut grid: Grid) -> Result<Self> {
        grid.validate()?;
        if grid.values.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("grid values must be finite and nonnegative".into()));
        }
        let total: f64 = grid.values.iter().sum::<f64>() * grid.cell_volume();
        if total <= 0.0 {
            return Err(Error::ZeroWeight);
        }
        let sum: f64 = grid.values.iter().sum();
        grid.values.iter_mut().for_each(|v| *v /= sum);
        Ok(Shape {
            dim: grid.dim(),
            data: ShapeData::Grid(grid),
            total_weight: total,
            centered: false,
            scale_normalized: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &ShapeData {
        &self.data
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn is_scale_normalized(&self) -> bool {
        self.scale_normalized
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.data, ShapeData::Grid(_))
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ShapeData::Points { weights, .. } => weights.len(),
            ShapeData::Grid(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Calls `f(x, w)` for every sample (point or cell center) in storage order.
    pub fn for_each_sample(&self, mut f: impl FnMut(&[f64], f64)) {
        match &self.data {
            ShapeData::Points { coords, weights } => {
                for (x, &w) in coords.chunks_exact(self.dim).zip(weights) {
                    f(x, w);
                }
            }
            ShapeData::Grid(g) => {
                let mut x = vec![0.0; self.dim];
                for (k, &w) in g.values.iter().enumerate() {
                    g.center_of(k, &mut x);
                    f(&x, w);
                }
            }
        }
    }

    /// `E[f(x)]` under the normalized measure.
    pub fn expectation(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut acc = 0.0;
        self.for_each_sample(|x, w| acc += w * f(x));
        acc
    }

    pub fn center_of_mass(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        self.for_each_sample(|x, w| {
            for (ca, xa) in c.iter_mut().zip(x) {
                *ca += w * xa;
            }
        });
        c
    }

    /// Equivalent weighted point set at the cell centers.
    pub fn to_point_set(&self) -> Shape {
        match &self.data {
            ShapeData::Points { .. } => self.clone(),
            ShapeData::Grid(g) => {
                let mut coords = Vec::with_capacity(g.len() * self.dim);
                let mut x = vec![0.0; self.dim];
                for k in 0..g.len() {
                    g.center_of(k, &mut x);
                    coords.extend_from_slice(&x);
                }
                Shape {
                    dim: self.dim,
                    data: ShapeData::Points {
                        coords,
                        weights: g.values.clone(),
                    },
                    total_weight: self.total_weight,
                    centered: self.centered,
                    scale_normalized: self.scale_normalized,
                }
            }
        }
    }

    /// Shifts coordinates by `t`.
    pub fn translated(&self, t: &[f64]) -> Result<Shape> {
        if t.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "shift has {} components, shape has dimension {}",
                t.len(),
                self.dim
            )));
        }
        let mut out = self.clone();
        match &mut out.data {
            ShapeData::Points { coords, .. } => {
                for x in coords.chunks_exact_mut(self.dim) {
                    x.iter_mut().zip(t).for_each(|(xa, ta)| *xa += ta);
                }
            }
            ShapeData::Grid(g) => g.origin.iter_mut().zip(t).for_each(|(o, ta)| *o += ta),
        }
        out.centered = false;
        Ok(out)
    }

    /// Multiplies every coordinate by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Shape> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidArgument(format!("scale factor {factor} must be positive")));
        }
        let mut out = self.clone();
        match &mut out.data {
            ShapeData::Points { coords, .. } => coords.iter_mut().for_each(|c| *c *= factor),
            ShapeData::Grid(g) => {
                g.origin.iter_mut().for_each(|c| *c *= factor);
                g.spacing.iter_mut().for_each(|c| *c *= factor);
            }
        }
        out.scale_normalized = false;
        Ok(out)
    }

    /// Applies the linear map `x -> m x` to every point. Grids are converted to
    /// point sets first since a general map does not preserve the lattice.
    pub fn transformed(&self, m: &DMatrix<f64>) -> Result<Shape> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} map applied to a {}-dimensional shape",
                m.nrows(),
                m.ncols(),
                self.dim
            )));
        }
        let mut out = self.to_point_set();
        if let ShapeData::Points { coords, .. } = &mut out.data {
            let d = self.dim;
            let mut y = vec![0.0; d];
            for x in coords.chunks_exact_mut(d) {
                for (i, yi) in y.iter_mut().enumerate() {
                    *yi = (0..d).map(|a| m[(i, a)] * x[a]).sum();
                }
                x.copy_from_slice(&y);
            }
        }
        out.scale_normalized = false;
        Ok(out)
    }

    /// Subtracts the center of mass.
    pub fn center(&self) -> Shape {
        let c = self.center_of_mass();
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        let mut out = self.translated(&neg).expect("matching dimension");
        out.centered = true;
        out.scale_normalized = self.scale_normalized;
        out
    }

    /// Covariance `p_ab = E[x_a x_b]` of a centered shape.
    pub fn covariance(&self) -> Result<SymTensor> {
        self.central_moment(2)
    }

    /// Rescales so that `Tr(cov) = dim`; returns the divisor `sqrt(Tr(cov)/dim)`.
    pub fn scale_normalize(&self) -> Result<(Shape, f64)> {
        self.scale_normalize_to(self.dim as f64)
    }

    /// Rescales so that `Tr(cov) = target`.
    pub fn scale_normalize_to(&self, target: f64) -> Result<(Shape, f64)> {
        if !self.centered {
            return Err(Error::NotCentered("scale normalization"));
        }
        if !(target > 0.0 && target.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "normalization target {target} must be positive"
            )));
        }
        let trace = self.expectation(|x| x.iter().map(|v| v * v).sum());
        if !(trace > 0.0) {
            return Err(Error::Degenerate(
                "covariance trace is zero, cannot normalize scale".into(),
            ));
        }
        let divisor = (trace / target).sqrt();
        let mut out = self.scaled(1.0 / divisor)?;
        out.centered = true;
        out.scale_normalized = true;
        Ok((out, divisor))
    }

    /// Divides coordinates by a fixed `sigma` (size-sensitive comparisons).
    pub fn scale_fixed(&self, sigma: f64) -> Result<Shape> {
        let mut out = self.scaled(1.0 / sigma)?;
        out.centered = self.centered;
        Ok(out)
    }

    /// Central moment tensor of order `r`: `E[x_{a1} ... x_{ar}]` of the centered shape.
    pub fn central_moment(&self, r: usize) -> Result<SymTensor> {
        if !self.centered {
            return Err(Error::NotCentered("computing central moments"));
        }
        if r == 1 {
            // Vanishes by construction; the summed value would be pure rounding
            // noise, which root-normalized invariants amplify.
            return Ok(SymTensor::zeros(self.dim, 1));
        }
        let layout = Layout::get(self.dim, r);
        let mut entries = vec![0.0; layout.len()];
        self.for_each_sample(|x, w| {
            for (e, t) in entries.iter_mut().zip(&layout.tuples) {
                *e += w * t.iter().map(|&a| x[a]).product::<f64>();
            }
        });
        SymTensor::from_packed(self.dim, r, entries)
    }

    /// All central moments of orders `0..=order_max`.
    pub fn moments(&self, order_max: usize) -> Result<MomentSet> {
        let tensors = (0..=order_max)
            .map(|r| self.central_moment(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(MomentSet {
            dim: self.dim,
            order_max,
            tensors,
            centered: true,
            scale_normalized: self.scale_normalized,
        })
    }
}

/// Symmetric tensors indexed by order; the common input of invariants and alignment.
pub trait TensorSet {
    fn dim(&self) -> usize;
    fn max_order(&self) -> usize;
    fn tensor(&self, order: usize) -> Option<&SymTensor>;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub dim: usize,
    pub order_max: usize,
    /// `tensors[r]` has order `r`.
    pub tensors: Vec<SymTensor>,
    pub centered: bool,
    pub scale_normalized: bool,
}

impl MomentSet {
    /// Wraps tensors of orders `0..n` (each `tensors[r]` must have order `r`).
    pub fn from_tensors(tensors: Vec<SymTensor>, scale_normalized: bool) -> Result<Self> {
        let dim = tensors
            .first()
            .map(|t| t.dim())
            .ok_or_else(|| Error::InvalidArgument("empty moment set".into()))?;
        for (r, t) in tensors.iter().enumerate() {
            if t.order() != r || t.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "slot {r} holds an order-{} tensor in {} dimensions",
                    t.order(),
                    t.dim()
                )));
            }
        }
        Ok(MomentSet {
            dim,
            order_max: tensors.len() - 1,
            tensors,
            centered: true,
            scale_normalized,
        })
    }

    /// Rotates every order by `rot` (see [`SymTensor::rotate`]).
    pub fn rotate(&self, rot: &DMatrix<f64>) -> Result<MomentSet> {
        let tensors = self
            .tensors
            .iter()
            .map(|t| t.rotate(rot))
            .collect::<Result<Vec<_>>>()?;
        Ok(MomentSet {
            tensors,
            ..self.clone()
        })
    }
}

impl TensorSet for MomentSet {
    fn dim(&self) -> usize {
        self.dim
    }

    fn max_order(&self) -> usize {
        self.order_max
    }

    fn tensor(&self, order: usize) -> Option<&SymTensor> {
        self.tensors.get(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cross() -> Shape {
        Shape::uniform_points(2, vec![1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0]).unwrap()
    }

    #[test]
    fn expectation_on_cross() {
        let s = cross();
        assert_eq!(s.expectation(|_| 1.0), 1.0);
        assert_eq!(s.expectation(|x| x[0] * x[0]), 0.5);
        assert_eq!(s.expectation(|x| x[0]), 0.0);
    }

    #[test]
    fn center_examples() {
        let s = Shape::uniform_points(2, vec![1.0, 0.0, 3.0, 0.0]).unwrap().center();
        match s.data() {
            ShapeData::Points { coords, .. } => assert_eq!(coords, &vec![-1.0, 0.0, 1.0, 0.0]),
            _ => unreachable!(),
        }
        let c = cross().center();
        assert_eq!(c.data(), cross().data());

        let line = Shape::from_points(1, vec![0.0, 4.0], vec![0.75, 0.25]).unwrap();
        assert_eq!(line.center_of_mass(), vec![1.0]);
        match line.center().data() {
            ShapeData::Points { coords, .. } => assert_eq!(coords, &vec![-1.0, 3.0]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn covariance_examples() {
        let cov = cross().center().covariance().unwrap();
        assert_eq!(cov.entries(), &[0.5, 0.0, 0.5]);
        let single = Shape::uniform_points(2, vec![3.0, -2.0]).unwrap().center();
        assert_eq!(single.covariance().unwrap().entries(), &[0.0, 0.0, 0.0]);
        let pair = Shape::uniform_points(2, vec![1.0, 0.0, -1.0, 0.0]).unwrap().center();
        assert_eq!(pair.covariance().unwrap().entries(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn moments_require_centering() {
        assert!(matches!(cross().central_moment(2), Err(Error::NotCentered(_))));
        assert!(matches!(cross().scale_normalize(), Err(Error::NotCentered(_))));
    }

    #[test]
    fn scale_normalize_examples() {
        let (s, div) = cross().center().scale_normalize().unwrap();
        assert!((div - 0.5f64.sqrt()).abs() < 1e-15);
        let cov = s.covariance().unwrap();
        assert!((cov.entries()[0] - 1.0).abs() < 1e-12);
        assert!((cov.entries()[2] - 1.0).abs() < 1e-12);
        match s.data() {
            ShapeData::Points { coords, .. } => {
                assert!((coords[0] - 2f64.sqrt()).abs() < 1e-12)
            }
            _ => unreachable!(),
        }

        let (again, div2) = s.scale_normalize().unwrap();
        assert!((div2 - 1.0).abs() < 1e-12);
        assert!(again.covariance().unwrap().distance_squared(&cov).unwrap() < 1e-24);

        let single = Shape::uniform_points(2, vec![3.0, -2.0]).unwrap().center();
        assert!(matches!(single.scale_normalize(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn central_moment_examples() {
        let c = cross().center();
        assert_eq!(c.central_moment(0).unwrap().entries(), &[1.0]);
        assert!(c.central_moment(3).unwrap().entries().iter().all(|&e| e == 0.0));

        // center 0.8*1 + 0.2*(-4) = 0; E[x^3] = 0.8 - 12.8 = -12
        let s = Shape::from_points(2, vec![1.0, 0.0, -4.0, 0.0], vec![0.8, 0.2])
            .unwrap()
            .center();
        let m3 = s.central_moment(3).unwrap();
        assert!((m3.get(&[0, 0, 0]).unwrap() - -12.0).abs() < 1e-12);
        assert_eq!(m3.get(&[0, 0, 1]).unwrap(), 0.0);
        assert_eq!(m3.get(&[0, 1, 1]).unwrap(), 0.0);
        assert_eq!(m3.get(&[1, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn grid_matches_point_set() {
        let grid = Grid {
            origin: vec![0.0, 0.0],
            spacing: vec![1.0, 0.5],
            extents: vec![3, 2],
            values: vec![1.0, 2.0, 0.0, 4.0, 1.0, 3.0],
        };
        let g = Shape::from_grid(grid).unwrap();
        let p = g.to_point_set();
        let f = |x: &[f64]| x[0] * x[0] * x[1] + 0.3 * x[1];
        assert!((g.expectation(f) - p.expectation(f)).abs() < 1e-15);
        assert_eq!(g.center_of_mass(), p.center_of_mass());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            Shape::from_points(2, vec![0.0, 0.0], vec![0.0]),
            Err(Error::ZeroWeight)
        ));
        assert!(Shape::from_points(2, vec![0.0, 0.0, 1.0], vec![1.0]).is_err());
        assert!(Shape::from_points(1, vec![0.0], vec![-1.0]).is_err());
    }
}
