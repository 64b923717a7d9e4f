//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::Rng;
use shapeinv::graph::ContractionGraph;
use shapeinv::{MomentSet, SymTensor};

/// `|a - b| / max(1, |a|)`
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1.0)
}

/// Symmetric tensor stored as a map from sorted index tuples to values.
#[derive(Clone, Debug)]
pub struct DenseSym {
    pub dim: usize,
    pub order: usize,
    pub values: HashMap<Vec<usize>, f64>,
}

impl DenseSym {
    pub fn random<R: Rng>(rng: &mut R, dim: usize, order: usize) -> Self {
        let mut values = HashMap::new();
        for idx in all_indices(dim, order) {
            let mut key = idx.clone();
            key.sort_unstable();
            values.entry(key).or_insert_with(|| rng.random_range(-1.0..1.0));
        }
        DenseSym { dim, order, values }
    }

    pub fn at(&self, idx: &[usize]) -> f64 {
        let mut key = idx.to_vec();
        key.sort_unstable();
        self.values[&key]
    }

    pub fn to_symtensor(&self) -> SymTensor {
        SymTensor::from_fn(self.dim, self.order, |idx| self.at(idx))
    }
}

/// Every index tuple in `0..dim` of length `order`, lexicographic.
pub fn all_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..order {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..dim).map(move |a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out
}

pub fn random_set<R: Rng>(rng: &mut R, dim: usize, order_max: usize) -> (Vec<DenseSym>, MomentSet) {
    let dense: Vec<DenseSym> = (0..=order_max).map(|r| DenseSym::random(rng, dim, r)).collect();
    let tensors = dense.iter().map(DenseSym::to_symtensor).collect();
    (dense, MomentSet::from_tensors(tensors, false).unwrap())
}

/// For each vertex, the edge id attached to each of its ports.
fn port_edges(graph: &ContractionGraph) -> Vec<Vec<usize>> {
    let mut ports: Vec<Vec<usize>> = graph.orders().iter().map(|&r| vec![usize::MAX; r]).collect();
    for (e, edge) in graph.edges().iter().enumerate() {
        ports[edge.0.vertex][edge.0.port] = e;
        ports[edge.1.vertex][edge.1.port] = e;
    }
    ports
}

/// Sums over every assignment of an axis to every edge: `dim^edges` terms.
pub fn brute_force(graph: &ContractionGraph, tensors: &[&DenseSym]) -> f64 {
    let dim = tensors[0].dim;
    let ports = port_edges(graph);
    let n_edges = graph.edges().len();
    let mut labels = vec![0usize; n_edges];
    let mut total = 0.0;
    let mut idx = Vec::new();
    loop {
        let mut term = 1.0;
        for (v, pe) in ports.iter().enumerate() {
            idx.clear();
            idx.extend(pe.iter().map(|&e| labels[e]));
            term *= tensors[v].at(&idx);
        }
        total += term;
        // odometer
        let mut k = 0;
        loop {
            if k == n_edges {
                return total;
            }
            labels[k] += 1;
            if labels[k] < dim {
                break;
            }
            labels[k] = 0;
            k += 1;
        }
    }
}

/// Absorbs vertices one at a time, keeping partial sums keyed by the axis
/// values of edges that still have an unabsorbed end.
pub fn absorb(graph: &ContractionGraph, tensors: &[&DenseSym]) -> f64 {
    let dim = tensors[0].dim;
    let ports = port_edges(graph);
    let n = ports.len();
    // vertex at which each edge closes
    let mut last = vec![0usize; graph.edges().len()];
    for (v, pe) in ports.iter().enumerate() {
        for &e in pe {
            last[e] = last[e].max(v);
        }
    }
    let mut state: HashMap<Vec<(usize, usize)>, f64> = HashMap::new();
    state.insert(vec![], 1.0);
    for v in 0..n {
        let mut new_edges: Vec<usize> = ports[v].clone();
        new_edges.sort_unstable();
        new_edges.dedup();
        let mut next: HashMap<Vec<(usize, usize)>, f64> = HashMap::new();
        for (key, weight) in &state {
            let known: HashMap<usize, usize> = key.iter().cloned().collect();
            let fresh: Vec<usize> = new_edges.iter().cloned().filter(|e| !known.contains_key(e)).collect();
            for combo in all_indices(dim, fresh.len()) {
                let mut assign = known.clone();
                for (e, a) in fresh.iter().zip(&combo) {
                    assign.insert(*e, *a);
                }
                let idx: Vec<usize> = ports[v].iter().map(|e| assign[e]).collect();
                let val = weight * tensors[v].at(&idx);
                let mut k: Vec<(usize, usize)> = assign.into_iter().filter(|(e, _)| last[*e] > v).collect();
                k.sort_unstable();
                *next.entry(k).or_insert(0.0) += val;
            }
        }
        state = next;
    }
    state.values().sum()
}

pub fn graph_oracle(graph: &ContractionGraph, tensors: &[&DenseSym]) -> f64 {
    let dim = tensors[0].dim as f64;
    if dim.powi(graph.edges().len() as i32) <= (1u64 << 18) as f64 {
        brute_force(graph, tensors)
    } else {
        absorb(graph, tensors)
    }
}

pub fn matrix2(t: &DenseSym) -> DMatrix<f64> {
    DMatrix::from_fn(t.dim, t.dim, |a, b| t.at(&[a, b]))
}

/// `M_ab = sum_cd p_acd p_bcd`
pub fn gram3(t: &DenseSym) -> DMatrix<f64> {
    let d = t.dim;
    DMatrix::from_fn(d, d, |a, b| {
        let mut s = 0.0;
        for c in 0..d {
            for e in 0..d {
                s += t.at(&[a, c, e]) * t.at(&[b, c, e]);
            }
        }
        s
    })
}

/// `C_(ab),(cd) = sum_ef p_abef p_cdef`
pub fn gram4(t: &DenseSym) -> DMatrix<f64> {
    let d = t.dim;
    DMatrix::from_fn(d * d, d * d, |i, j| {
        let (a, b) = (i / d, i % d);
        let (c, e) = (j / d, j % d);
        let mut s = 0.0;
        for f in 0..d {
            for g in 0..d {
                s += t.at(&[a, b, f, g]) * t.at(&[c, e, f, g]);
            }
        }
        s
    })
}

pub fn trace_pow(m: &DMatrix<f64>, i: usize) -> f64 {
    let mut p = DMatrix::identity(m.nrows(), m.ncols());
    for _ in 0..i {
        p = &p * m;
    }
    p.trace()
}

/// Closed-form value for catalog names that have one, `None` otherwise.
pub fn named_oracle(name: &str, set: &[DenseSym]) -> Option<f64> {
    let power = |prefix: &str, suffix: &str| -> Option<usize> {
        name.strip_prefix(prefix)?.strip_suffix(suffix)?.parse().ok()
    };
    if let Some(i) = power("tr(p2^", ")") {
        return Some(trace_pow(&matrix2(&set[2]), i));
    }
    if let Some(i) = power("tr(M3^", ")") {
        return Some(trace_pow(&gram3(&set[3]), i));
    }
    if let Some(i) = power("tr(C4^", ")") {
        return Some(trace_pow(&gram4(&set[4]), i));
    }
    if let Some(i) = power("p1.p2^", ".p1") {
        let d = set[1].dim;
        let v = DMatrix::from_fn(d, 1, |a, _| set[1].at(&[a]));
        let mut m = DMatrix::identity(d, d);
        for _ in 0..i {
            m = &m * matrix2(&set[2]);
        }
        return Some((v.transpose() * m * v)[(0, 0)]);
    }
    if let Some(r) = power("|p", "|^2") {
        let t = &set[r];
        return Some(all_indices(t.dim, r).iter().map(|i| t.at(i).powi(2)).sum());
    }
    if name == "p0" {
        return Some(set[0].at(&[]));
    }
    None
}
