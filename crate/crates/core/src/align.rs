//! Explicit rotation alignment of tensor sets.
//!
//! Minimizes `sqrt(sum_r w_r |p^r - rotate(q^r, O)|_F^2)` over `O` in SO(d),
//! parameterized by the `d(d-1)/2` entries of a skew-symmetric generator.
//! Plain gradient descent with central finite differences and a halving line
//! search runs from several starts; the identity is always the first start.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shape::TensorSet;

/// Element of SO(d): generator coordinates and the cached matrix `exp(Omega)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rotation {
    dim: usize,
    params: Vec<f64>,
    matrix: DMatrix<f64>,
}

/// Number of generator coordinates, `d(d-1)/2`.
pub fn param_count(dim: usize) -> usize {
    dim * dim.saturating_sub(1) / 2
}

impl Rotation {
    pub fn identity(dim: usize) -> Self {
        Rotation {
            dim,
            params: vec![0.0; param_count(dim)],
            matrix: DMatrix::identity(dim, dim),
        }
    }

    /// `params[k]` fills `Omega[j][i] = theta`, `Omega[i][j] = -theta` for the
    /// k-th pair `i < j` in lexicographic order. In 2D this is the
    /// counter-clockwise angle.
    pub fn from_params(dim: usize, params: Vec<f64>) -> Result<Self> {
        if params.len() != param_count(dim) {
            return Err(Error::DimensionMismatch(format!(
                "SO({dim}) takes {} parameters, got {}",
                param_count(dim),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("non-finite rotation parameter".into()));
        }
        if params.iter().all(|&p| p == 0.0) {
            return Ok(Rotation {
                dim,
                params,
                matrix: DMatrix::identity(dim, dim),
            });
        }
        let matrix = exp_skew(dim, &params);
        Ok(Rotation {
            dim,
            params,
            matrix,
        })
    }

    pub fn from_angle(theta: f64) -> Self {
        Self::from_params(2, vec![theta]).expect("one parameter in 2D")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn inverse(&self) -> Rotation {
        Rotation {
            dim: self.dim,
            params: self.params.iter().map(|p| -p).collect(),
            matrix: self.matrix.transpose(),
        }
    }
}

fn generator(dim: usize, params: &[f64]) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(dim, dim);
    let mut k = 0;
    for i in 0..dim {
        for j in (i + 1)..dim {
            omega[(j, i)] = params[k];
            omega[(i, j)] = -params[k];
            k += 1;
        }
    }
    omega
}

fn exp_skew(dim: usize, params: &[f64]) -> DMatrix<f64> {
    match dim {
        2 => {
            let (s, c) = params[0].sin_cos();
            DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
        }
        3 => {
            // Rodrigues: I + sin(t)/t W + (1 - cos t)/t^2 W^2
            let w = generator(3, params);
            let t = params.iter().map(|p| p * p).sum::<f64>().sqrt();
            let (a, b) = if t < 1e-8 {
                (1.0 - t * t / 6.0, 0.5 - t * t / 24.0)
            } else {
                (t.sin() / t, (1.0 - t.cos()) / (t * t))
            };
            DMatrix::identity(3, 3) + &w * a + (&w * &w) * b
        }
        _ => generator(dim, params).exp(),
    }
}

impl Serialize for Rotation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            dim: usize,
            params: &'a [f64],
            matrix: Vec<f64>,
        }
        Repr {
            dim: self.dim,
            params: &self.params,
            matrix: row_major(&self.matrix),
        }
        .serialize(s)
    }
}

pub fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)]))
        .collect()
}

fn check_compatible(p: &dyn TensorSet, q: &dyn TensorSet) -> Result<()> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch(format!(
            "aligning {}-dimensional with {}-dimensional tensors",
            p.dim(),
            q.dim()
        )));
    }
    if p.max_order() != q.max_order() {
        return Err(Error::DimensionMismatch(format!(
            "order mismatch: {} vs {}",
            p.max_order(),
            q.max_order()
        )));
    }
    for r in 0..=p.max_order() {
        if p.tensor(r).is_none() {
            return Err(Error::MissingOrder(r));
        }
        if q.tensor(r).is_none() {
            return Err(Error::MissingOrder(r));
        }
    }
    Ok(())
}

fn weight(weights: &[f64], r: usize) -> f64 {
    weights.get(r).copied().unwrap_or(1.0)
}

// Squared objective for an orthogonal matrix; inputs already checked.
fn objective_sq(p: &dyn TensorSet, q: &dyn TensorSet, o: &DMatrix<f64>, weights: &[f64]) -> f64 {
    (0..=p.max_order())
        .map(|r| {
            let w = weight(weights, r);
            if w == 0.0 {
                return 0.0;
            }
            let pr = p.tensor(r).expect("checked");
            let qr = q.tensor(r).expect("checked").rotate_unchecked(o);
            w * pr.distance_squared(&qr).expect("same shape")
        })
        .sum()
}

/// `sqrt(sum_r w_r |p^r - rotate(q^r, O)|^2)`; orders without a weight get 1.
pub fn objective(
    p: &dyn TensorSet,
    q: &dyn TensorSet,
    rotation: &Rotation,
    weights: &[f64],
) -> Result<f64> {
    check_compatible(p, q)?;
    if rotation.dim() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "rotation in {} dimensions for {}-dimensional tensors",
            rotation.dim(),
            p.dim()
        )));
    }
    Ok(objective_sq(p, q, rotation.matrix(), weights).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignConfig {
    /// Number of starts; `None` picks 8 in 2D and 32 otherwise.
    pub restarts: Option<usize>,
    pub max_iter: usize,
    /// Convergence threshold on the residual and on the gradient norm.
    pub tol: f64,
    pub fd_step: f64,
    pub seed: u64,
    /// Also try one start composed with the reflection `diag(-1, 1, ..)`.
    pub allow_reflection: bool,
    /// Per-order weights `w_r`; missing orders weigh 1.
    pub weights: Vec<f64>,
    /// Skip remaining starts once a residual below `tol` is found.
    pub stop_at_tol: bool,
    /// Largest parameter displacement (radians) a line-search step may take;
    /// keeps a descent inside the basin it started in.
    pub max_step: f64,
    /// Sufficient-decrease constant of the line search.
    pub armijo: f64,
    /// Random candidates drawn per start; the lowest-objective ones are
    /// descended from (1 = plain random starts).
    pub screen: usize,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            restarts: None,
            max_iter: 5000,
            tol: 1e-9,
            fd_step: 1e-6,
            seed: 0,
            allow_reflection: false,
            weights: Vec::new(),
            stop_at_tol: true,
            max_step: 0.25,
            armijo: 0.5,
            screen: 64,
        }
    }
}

impl AlignConfig {
    pub fn restarts_for(&self, dim: usize) -> usize {
        self.restarts
            .unwrap_or(if dim <= 2 { 8 } else { 32 })
            .max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AlignmentResult {
    pub rotation: Rotation,
    /// Applied matrix: the rotation, times `diag(-1, 1, ..)` when `reflected`.
    pub matrix: Vec<f64>,
    pub reflected: bool,
    pub residual: f64,
    /// `(iteration, objective)` of the winning start.
    pub trace: Vec<(usize, f64)>,
    pub restarts_used: usize,
    pub winning_restart: usize,
    pub converged: bool,
}

struct Descent {
    params: Vec<f64>,
    value_sq: f64,
    trace: Vec<(usize, f64)>,
    converged: bool,
}

fn reflection(dim: usize) -> DMatrix<f64> {
    let mut d = DMatrix::identity(dim, dim);
    d[(0, 0)] = -1.0;
    d
}

fn descend(
    p: &dyn TensorSet,
    q: &dyn TensorSet,
    start: Vec<f64>,
    reflect: bool,
    config: &AlignConfig,
) -> Descent {
    let dim = p.dim();
    let flip = reflect.then(|| reflection(dim));
    let eval = |params: &[f64]| -> f64 {
        let mut o = if params.iter().all(|&x| x == 0.0) {
            DMatrix::identity(dim, dim)
        } else {
            exp_skew(dim, params)
        };
        if let Some(f) = &flip {
            o *= f;
        }
        objective_sq(p, q, &o, &config.weights)
    };

    let mut params = start;
    let mut value = eval(&params);
    let mut trace = vec![(0, value.sqrt())];
    let mut converged = value.sqrt() < config.tol;
    let h = config.fd_step;
    let mut probe = params.clone();
    for iter in 1..=config.max_iter {
        if converged || params.is_empty() {
            break;
        }
        let grad: Vec<f64> = (0..params.len())
            .map(|k| {
                probe.copy_from_slice(&params);
                probe[k] = params[k] + h;
                let up = eval(&probe);
                probe[k] = params[k] - h;
                let down = eval(&probe);
                (up - down) / (2.0 * h)
            })
            .collect();
        let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
        if gnorm2.sqrt() < config.tol {
            converged = true;
            break;
        }
        // Armijo backtracking, halving from a unit step; steps longer than
        // `max_step` are halved without being tried.
        let mut step = 1.0;
        let gnorm = gnorm2.sqrt();
        while step * gnorm > config.max_step {
            step *= 0.5;
        }
        let mut accepted = None;
        while step > 1e-30 {
            for (x, (p0, g)) in probe.iter_mut().zip(params.iter().zip(&grad)) {
                *x = p0 - step * g;
            }
            let trial = eval(&probe);
            if trial <= value - config.armijo * step * gnorm2 {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }
        let Some(trial) = accepted else {
            // no decrease along the finite-difference gradient
            break;
        };
        params.copy_from_slice(&probe);
        // stalled in a local minimum: the decrease is at rounding level
        let stalled = value - trial <= 1e-15 * value;
        value = trial;
        trace.push((iter, value.sqrt()));
        if value.sqrt() < config.tol {
            converged = true;
        } else if stalled {
            break;
        }
    }
    Descent {
        params,
        value_sq: value,
        trace,
        converged,
    }
}

/// Multi-start gradient descent over SO(d); deterministic for a fixed seed.
/// The best start wins, ties going to the lowest start index.
pub fn optimize(p: &dyn TensorSet, q: &dyn TensorSet, config: &AlignConfig) -> Result<AlignmentResult> {
    check_compatible(p, q)?;
    let dim = p.dim();
    let k = param_count(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let restarts = config.restarts_for(dim);

    let mut starts: Vec<(Vec<f64>, bool)> = vec![(vec![0.0; k], false)];
    if k == 1 {
        // one uniform draw per slice of [-pi, pi): no two starts bunch up
        let n = restarts - 1;
        for i in 0..n {
            let u: f64 = rng.random();
            let theta = -std::f64::consts::PI + std::f64::consts::TAU * (i as f64 + u) / n as f64;
            starts.push((vec![theta], false));
        }
    } else {
        let n = (restarts - 1) * config.screen.max(1);
        let mut candidates: Vec<(f64, Vec<f64>)> = (0..n)
            .map(|_| {
                let x = sample_ball(&mut rng, k, std::f64::consts::PI);
                let o = exp_skew(dim, &x);
                (objective_sq(p, q, &o, &config.weights), x)
            })
            .collect();
        // stable sort keeps draw order among ties
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
        starts.extend(candidates.into_iter().take(restarts - 1).map(|(_, x)| (x, false)));
    }
    if config.allow_reflection && dim > 1 {
        starts.push((vec![0.0; k], true));
    }

    let mut best: Option<(usize, Descent, bool)> = None;
    let mut used = 0;
    for (idx, (start, reflect)) in starts.into_iter().enumerate() {
        used += 1;
        let run = descend(p, q, start, reflect, config);
        let better = best
            .as_ref()
            .is_none_or(|(_, b, _)| run.value_sq < b.value_sq);
        if better {
            best = Some((idx, run, reflect));
        }
        let done = best
            .as_ref()
            .is_some_and(|(_, b, _)| b.value_sq.sqrt() < config.tol);
        if config.stop_at_tol && done {
            break;
        }
    }
    let (winner, run, reflected) = best.expect("at least one start");
    let rotation = Rotation::from_params(dim, run.params)?;
    let mut applied = rotation.matrix().clone();
    if reflected {
        applied *= reflection(dim);
    }
    let residual = objective_sq(p, q, &applied, &config.weights).sqrt();
    Ok(AlignmentResult {
        matrix: row_major(&applied),
        rotation,
        reflected,
        residual,
        trace: run.trace,
        restarts_used: used,
        winning_restart: winner,
        converged: run.converged,
    })
}

fn sample_ball(rng: &mut ChaCha8Rng, k: usize, radius: f64) -> Vec<f64> {
    if k == 0 {
        return Vec::new();
    }
    let dir: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    let norm = dir.iter().map(|x: &f64| x * x).sum::<f64>().sqrt().max(1e-300);
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / k as f64);
    dir.into_iter().map(|x| x / norm * r).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Angle in `[0, 2 pi)`.
    pub angle: f64,
    pub residual: f64,
}

/// Brute-force 2D alignment: the objective at `n` equally spaced angles.
pub fn grid_oracle_2d(
    p: &dyn TensorSet,
    q: &dyn TensorSet,
    n_angles: usize,
    weights: &[f64],
) -> Result<OracleResult> {
    check_compatible(p, q)?;
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch(format!(
            "angle grid oracle needs d = 2, got {}",
            p.dim()
        )));
    }
    if n_angles == 0 {
        return Err(Error::InvalidArgument("need at least one angle".into()));
    }
    let mut best = OracleResult {
        angle: 0.0,
        residual: f64::INFINITY,
    };
    for k in 0..n_angles {
        let angle = k as f64 * std::f64::consts::TAU / n_angles as f64;
        let o = Rotation::from_angle(angle);
        let r = objective_sq(p, q, o.matrix(), weights).sqrt();
        if r < best.residual {
            best = OracleResult { angle, residual: r };
        }
    }
    Ok(best)
}

/// Objective values at every sampled angle; used to inspect minima.
pub fn angle_profile_2d(
    p: &dyn TensorSet,
    q: &dyn TensorSet,
    n_angles: usize,
    weights: &[f64],
) -> Result<Vec<f64>> {
    check_compatible(p, q)?;
    if p.dim() != 2 {
        return Err(Error::DimensionMismatch("angle profile needs d = 2".into()));
    }
    Ok((0..n_angles)
        .map(|k| {
            let o = Rotation::from_angle(k as f64 * std::f64::consts::TAU / n_angles as f64);
            objective_sq(p, q, o.matrix(), weights).sqrt()
        })
        .collect())
}
