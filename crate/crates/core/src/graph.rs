//! Contraction graphs over symmetric tensors.
//!
//! A vertex of degree `r` stands for an order-`r` tensor, an edge for a
//! summed index shared by two ports. Every such closed graph evaluates to a
//! scalar invariant under simultaneous rotation of all its tensors, since each
//! edge sees `O` from one side and `Oᵀ` from the other.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symtensor::{increment, SymTensor};

/// One end of an edge: `(vertex, port)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Port {
    pub vertex: usize,
    pub port: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge(pub Port, pub Port);

/// Closed contraction graph: every port of every vertex is matched exactly once.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionGraph {
    orders: Vec<usize>,
    edges: Vec<Edge>,
}

/// JSON form: `{"vertices": [orders], "edges": [[vi, pi, vj, pj], ...], "bind": [slots]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: Vec<usize>,
    pub edges: Vec<[usize; 4]>,
    #[serde(default)]
    pub bind: Vec<String>,
}

impl ContractionGraph {
    pub fn new(orders: Vec<usize>, edges: Vec<Edge>) -> Result<Self> {
        let mut seen: Vec<Vec<bool>> = orders.iter().map(|&r| vec![false; r]).collect();
        for e in &edges {
            for p in [e.0, e.1] {
                let slot = seen
                    .get_mut(p.vertex)
                    .and_then(|ports| ports.get_mut(p.port))
                    .ok_or_else(|| {
                        Error::InvalidGraph(format!(
                            "port ({}, {}) does not exist",
                            p.vertex, p.port
                        ))
                    })?;
                if *slot {
                    return Err(Error::InvalidGraph(format!(
                        "port ({}, {}) used twice",
                        p.vertex, p.port
                    )));
                }
                *slot = true;
            }
            if e.0 == e.1 {
                return Err(Error::InvalidGraph("edge joins a port to itself".into()));
            }
        }
        for (v, ports) in seen.iter().enumerate() {
            if let Some(p) = ports.iter().position(|&used| !used) {
                return Err(Error::InvalidGraph(format!("dangling port ({v}, {p})")));
            }
        }
        Ok(ContractionGraph { orders, edges })
    }

    /// Builds a graph from vertex orders and a list of vertex pairs; ports are
    /// assigned in the order edges mention each vertex.
    pub fn from_vertex_pairs(orders: Vec<usize>, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut next = vec![0usize; orders.len()];
        let mut edges = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a >= orders.len() || b >= orders.len() {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range")));
            }
            let pa = Port {
                vertex: a,
                port: next[a],
            };
            next[a] += 1;
            let pb = Port {
                vertex: b,
                port: next[b],
            };
            next[b] += 1;
            edges.push(Edge(pa, pb));
        }
        Self::new(orders, edges)
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<Self> {
        let edges = spec
            .edges
            .iter()
            .map(|e| {
                Edge(
                    Port {
                        vertex: e[0],
                        port: e[1],
                    },
                    Port {
                        vertex: e[2],
                        port: e[3],
                    },
                )
            })
            .collect();
        Self::new(spec.vertices.clone(), edges)
    }

    pub fn to_spec(&self, bind: Vec<String>) -> GraphSpec {
        GraphSpec {
            vertices: self.orders.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| [e.0.vertex, e.0.port, e.1.vertex, e.1.port])
                .collect(),
            bind,
        }
    }

    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.orders.len()
    }

    /// Connected components as sorted vertex lists, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.orders.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.edges {
            let a = find(&mut parent, e.0.vertex);
            let b = find(&mut parent, e.1.vertex);
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_slot = vec![usize::MAX; n];
        for v in 0..n {
            let r = find(&mut parent, v);
            if root_slot[r] == usize::MAX {
                root_slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[root_slot[r]].push(v);
        }
        groups
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Sums over `0..d` for every edge the product of the bound tensors' entries.
    ///
    /// Components are evaluated separately and multiplied. Within a component,
    /// pairs of intermediate tensors are contracted greedily, smallest result
    /// first, with ties broken by lowest index so the summation order is fixed.
    pub fn evaluate(&self, tensors: &[&SymTensor]) -> Result<f64> {
        if tensors.len() != self.orders.len() {
            return Err(Error::InvalidGraph(format!(
                "graph has {} vertices but {} tensors were bound",
                self.orders.len(),
                tensors.len()
            )));
        }
        let dim = tensors.first().map(|t| t.dim()).unwrap_or(1);
        for (v, (t, &r)) in tensors.iter().zip(&self.orders).enumerate() {
            if t.order() != r {
                return Err(Error::DimensionMismatch(format!(
                    "vertex {v} has degree {r} but the bound tensor has order {}",
                    t.order()
                )));
            }
            if t.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "vertex {v} bound to a {}-dimensional tensor, expected {dim}",
                    t.dim()
                )));
            }
        }

        // Label every port with its edge id.
        let mut labels: Vec<Vec<usize>> = self.orders.iter().map(|&r| vec![0; r]).collect();
        for (id, e) in self.edges.iter().enumerate() {
            labels[e.0.vertex][e.0.port] = id;
            labels[e.1.vertex][e.1.port] = id;
        }

        let mut value = 1.0;
        for component in self.components() {
            let nodes = component
                .iter()
                .map(|&v| Node::from_tensor(tensors[v], &labels[v]))
                .collect();
            value *= contract_all(nodes, dim);
        }
        Ok(value)
    }
}

/// Dense intermediate with one open leg per label, row-major.
#[derive(Debug)]
struct Node {
    labels: Vec<usize>,
    data: Vec<f64>,
}

impl Node {
    /// Expands a packed tensor, tracing out self-loops (labels appearing twice).
    fn from_tensor(t: &SymTensor, port_labels: &[usize]) -> Node {
        let d = t.dim();
        let dense = t.to_dense();
        let looped = |l: usize| port_labels.iter().filter(|&&x| x == l).count() > 1;
        let open: Vec<usize> = port_labels.iter().copied().filter(|&l| !looped(l)).collect();
        if open.len() == port_labels.len() {
            return Node {
                labels: open,
                data: dense,
            };
        }
        let mut out = vec![0.0; d.pow(open.len() as u32)];
        let mut idx = vec![0usize; port_labels.len()];
        for &x in &dense {
            let diagonal = port_labels.iter().enumerate().all(|(i, &li)| {
                port_labels
                    .iter()
                    .enumerate()
                    .all(|(j, &lj)| li != lj || idx[i] == idx[j])
            });
            if diagonal {
                let off = port_labels
                    .iter()
                    .zip(&idx)
                    .filter(|(l, _)| !looped(**l))
                    .fold(0, |acc, (_, &a)| acc * d + a);
                out[off] += x;
            }
            increment(&mut idx, d);
        }
        Node {
            labels: open,
            data: out,
        }
    }
}

fn contract_all(mut nodes: Vec<Node>, dim: usize) -> f64 {
    while nodes.len() > 1 {
        // Prefer pairs sharing a label; among them the smallest result.
        let mut best: Option<(bool, usize, usize, usize)> = None;
        for i in 0..nodes.len() {
            for j in (i + 1)..nodes.len() {
                let shared = nodes[i]
                    .labels
                    .iter()
                    .filter(|l| nodes[j].labels.contains(l))
                    .count();
                let open = nodes[i].labels.len() + nodes[j].labels.len() - 2 * shared;
                let key = (shared == 0, open, i, j);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        let (_, _, i, j) = best.expect("at least two nodes");
        let b = nodes.remove(j);
        let a = nodes.remove(i);
        nodes.insert(i, contract_pair(&a, &b, dim));
    }
    nodes.pop().map(|n| n.data[0]).unwrap_or(1.0)
}

fn contract_pair(a: &Node, b: &Node, d: usize) -> Node {
    let shared: Vec<usize> = a
        .labels
        .iter()
        .copied()
        .filter(|l| b.labels.contains(l))
        .collect();
    let a_free: Vec<usize> = a.labels.iter().copied().filter(|l| !shared.contains(l)).collect();
    let b_free: Vec<usize> = b.labels.iter().copied().filter(|l| !shared.contains(l)).collect();

    let strides = |labels: &[usize]| -> Vec<usize> {
        let mut s = vec![0; labels.len()];
        let mut acc = 1;
        for k in (0..labels.len()).rev() {
            s[k] = acc;
            acc *= d;
        }
        s
    };
    let sa = strides(&a.labels);
    let sb = strides(&b.labels);
    let pos = |labels: &[usize], l: usize| labels.iter().position(|&x| x == l).unwrap();

    // Stride of each free/shared leg inside a and b.
    let a_free_stride: Vec<usize> = a_free.iter().map(|&l| sa[pos(&a.labels, l)]).collect();
    let b_free_stride: Vec<usize> = b_free.iter().map(|&l| sb[pos(&b.labels, l)]).collect();
    let a_sh_stride: Vec<usize> = shared.iter().map(|&l| sa[pos(&a.labels, l)]).collect();
    let b_sh_stride: Vec<usize> = shared.iter().map(|&l| sb[pos(&b.labels, l)]).collect();

    let n_out = d.pow((a_free.len() + b_free.len()) as u32);
    let n_sum = d.pow(shared.len() as u32);
    let mut data = vec![0.0; n_out];

    let mut fa = vec![0usize; a_free.len()];
    let mut fb = vec![0usize; b_free.len()];
    let mut sh = vec![0usize; shared.len()];
    let dot = |idx: &[usize], st: &[usize]| idx.iter().zip(st).map(|(i, s)| i * s).sum::<usize>();

    let n_a = d.pow(a_free.len() as u32);
    let n_b = d.pow(b_free.len() as u32);
    let mut out = 0;
    for _ in 0..n_a {
        let base_a = dot(&fa, &a_free_stride);
        fb.iter_mut().for_each(|x| *x = 0);
        for _ in 0..n_b {
            let base_b = dot(&fb, &b_free_stride);
            sh.iter_mut().for_each(|x| *x = 0);
            let mut acc = 0.0;
            for _ in 0..n_sum {
                let oa = base_a + dot(&sh, &a_sh_stride);
                let ob = base_b + dot(&sh, &b_sh_stride);
                acc += a.data[oa] * b.data[ob];
                increment(&mut sh, d);
            }
            data[out] = acc;
            out += 1;
            increment(&mut fb, d);
        }
        increment(&mut fa, d);
    }

    let mut labels = a_free;
    labels.extend(b_free);
    Node { labels, data }
}
