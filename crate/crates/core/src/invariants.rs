//! Rotation-invariant features built from contraction graphs.
//!
//! Each catalog entry binds one graph to homogeneous tensors by order. The
//! raw graph value `v` becomes the feature `sign(v) |v|^(1/root) * weight`,
//! with `root` defaulting to the number of vertices so every feature scales
//! like a generalized mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ContractionGraph, GraphSpec};
use crate::shape::{MomentSet, TensorSet};
use crate::symtensor::SymTensor;

#[derive(Clone, Debug, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    pub graph: ContractionGraph,
    /// Tensor order bound at each vertex (equal to the vertex degree).
    pub binding: Vec<usize>,
    pub root: u32,
    pub weight: f64,
}

impl CatalogEntry {
    pub fn new(name: impl Into<String>, graph: ContractionGraph) -> Result<Self> {
        if !graph.is_connected() {
            return Err(Error::InvalidGraph("catalog graphs must be connected".into()));
        }
        let binding = graph.orders().to_vec();
        let root = graph.vertex_count().max(1) as u32;
        Ok(CatalogEntry {
            name: name.into(),
            graph,
            binding,
            root,
            weight: 1.0,
        })
    }

    /// Distinct tensor orders this entry reads, ascending.
    pub fn orders(&self) -> Vec<usize> {
        let mut o = self.binding.clone();
        o.sort_unstable();
        o.dedup();
        o
    }

    pub fn raw_value(&self, set: &dyn TensorSet) -> Result<f64> {
        let tensors = self
            .binding
            .iter()
            .map(|&r| set.tensor(r).ok_or(Error::MissingOrder(r)))
            .collect::<Result<Vec<&SymTensor>>>()?;
        self.graph.evaluate(&tensors)
    }

    pub fn feature(&self, raw: f64) -> f64 {
        signed_root(raw, self.root) * self.weight
    }
}

/// `sign(v) |v|^(1/root)`
pub fn signed_root(v: f64, root: u32) -> f64 {
    match root {
        1 => v,
        2 => v.signum() * v.abs().sqrt(),
        3 => v.cbrt(),
        k => v.signum() * v.abs().powf(1.0 / k as f64),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct InvariantCatalog {
    pub entries: Vec<CatalogEntry>,
}

/// JSON form of one catalog entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntrySpec {
    pub name: String,
    pub graph: GraphSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

fn parse_slot(slot: &str) -> Result<usize> {
    slot.strip_prefix('p')
        .and_then(|r| r.parse().ok())
        .ok_or_else(|| Error::InvalidGraph(format!("unknown tensor slot '{slot}', expected p<order>")))
}

impl InvariantCatalog {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    pub fn max_order(&self) -> usize {
        self.entries
            .iter()
            .flat_map(|e| e.binding.iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn to_specs(&self) -> Vec<EntrySpec> {
        self.entries
            .iter()
            .map(|e| EntrySpec {
                name: e.name.clone(),
                graph: e
                    .graph
                    .to_spec(e.binding.iter().map(|r| format!("p{r}")).collect()),
                root: Some(e.root),
                weight: Some(e.weight),
            })
            .collect()
    }

    pub fn from_specs(specs: &[EntrySpec]) -> Result<Self> {
        let mut entries = Vec::with_capacity(specs.len());
        for s in specs {
            let graph = ContractionGraph::from_spec(&s.graph)?;
            let mut entry = CatalogEntry::new(s.name.clone(), graph)?;
            if !s.graph.bind.is_empty() {
                if s.graph.bind.len() != s.graph.vertices.len() {
                    return Err(Error::InvalidGraph(format!(
                        "entry '{}' binds {} slots for {} vertices",
                        s.name,
                        s.graph.bind.len(),
                        s.graph.vertices.len()
                    )));
                }
                let binding = s
                    .graph
                    .bind
                    .iter()
                    .map(|b| parse_slot(b))
                    .collect::<Result<Vec<_>>>()?;
                if binding != s.graph.vertices {
                    return Err(Error::InvalidGraph(format!(
                        "entry '{}' binds tensors whose orders differ from the vertex degrees",
                        s.name
                    )));
                }
                entry.binding = binding;
            }
            if let Some(root) = s.root {
                if root == 0 {
                    return Err(Error::InvalidGraph(format!("entry '{}' has root 0", s.name)));
                }
                entry.root = root;
            }
            if let Some(w) = s.weight {
                entry.weight = w;
            }
            entries.push(entry);
        }
        Ok(InvariantCatalog { entries })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let specs: Vec<EntrySpec> = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        Self::from_specs(&specs)
    }

    fn push(&mut self, name: String, orders: Vec<usize>, pairs: &[(usize, usize)]) {
        let graph = ContractionGraph::from_vertex_pairs(orders, pairs).expect("well-formed graph");
        self.entries
            .push(CatalogEntry::new(name, graph).expect("connected graph"));
    }
}

/// Graph for `Tr(P^i)`: a cycle of `i` order-2 vertices.
fn matrix_cycle(i: usize) -> Vec<(usize, usize)> {
    (0..i).map(|k| (k, (k + 1) % i)).collect()
}

/// Graph for `Tr(X^i)` where `X` joins two copies of an order-`2 + k` tensor
/// over `k` shared ports and is indexed by the `open` remaining ports on each side.
fn gram_cycle(i: usize, shared: usize, open: usize) -> Vec<(usize, usize)> {
    let n = 2 * i;
    let mut pairs = Vec::new();
    for k in 0..i {
        let (a, b) = (2 * k, 2 * k + 1);
        pairs.extend(std::iter::repeat_n((a, b), shared));
        pairs.extend(std::iter::repeat_n((b, (b + 1) % n), open));
    }
    pairs
}

/// Default invariant catalog for dimension `dim` and tensors up to order `m >= 2`.
///
/// * `p0`; `|p1|^2`; `tr(p2^i)` for `i = 1..=d`; `p1.p2^i.p1` for `i = 0..=d`.
/// * order 3: `|p3|^2`, `tr(M3^i)` for `i = 1..=d` with `M_ab = sum_cd p_acd p_bcd`,
///   `|tr p3|^2`, `p1.tr p3`, `<p2,M3>`.
/// * order 4: `|p4|^2`, `tr(C4^i)` for `i = 1..=d^2` with
///   `C_(ab),(cd) = sum_ef p_abef p_cdef`, `<p2,tr p4>`, `p2.p2.p4`, `tr tr p4`.
/// * orders above 4: `|pr|^2`.
pub fn default_catalog(dim: usize, m: usize) -> Result<InvariantCatalog> {
    if dim < 1 || m < 2 {
        return Err(Error::InvalidArgument(format!(
            "default catalog needs dim >= 1 and order >= 2 (got dim={dim}, order={m})"
        )));
    }
    let mut c = InvariantCatalog::default();
    c.push("p0".into(), vec![0], &[]);
    c.push("|p1|^2".into(), vec![1, 1], &[(0, 1)]);
    for i in 1..=dim {
        c.push(format!("tr(p2^{i})"), vec![2; i], &matrix_cycle(i));
    }
    for i in 0..=dim {
        let mut orders = vec![1];
        orders.extend(std::iter::repeat_n(2, i));
        orders.push(1);
        let pairs: Vec<_> = (0..=i).map(|k| (k, k + 1)).collect();
        c.push(format!("p1.p2^{i}.p1"), orders, &pairs);
    }
    if m >= 3 {
        c.push("|p3|^2".into(), vec![3, 3], &[(0, 1); 3]);
        for i in 1..=dim {
            c.push(format!("tr(M3^{i})"), vec![3; 2 * i], &gram_cycle(i, 2, 1));
        }
        c.push("|tr p3|^2".into(), vec![3, 3], &[(0, 0), (1, 1), (0, 1)]);
        c.push("p1.tr p3".into(), vec![1, 3], &[(1, 1), (0, 1)]);
        c.push(
            "<p2,M3>".into(),
            vec![2, 3, 3],
            &[(1, 2), (1, 2), (0, 1), (0, 2)],
        );
    }
    if m >= 4 {
        c.push("|p4|^2".into(), vec![4, 4], &[(0, 1); 4]);
        for i in 1..=dim * dim {
            c.push(format!("tr(C4^{i})"), vec![4; 2 * i], &gram_cycle(i, 2, 2));
        }
        c.push("<p2,tr p4>".into(), vec![2, 4], &[(1, 1), (0, 1), (0, 1)]);
        c.push(
            "p2.p2.p4".into(),
            vec![2, 2, 4],
            &[(0, 2), (0, 2), (1, 2), (1, 2)],
        );
        c.push("tr tr p4".into(), vec![4], &[(0, 0), (0, 0)]);
    }
    for r in 5..=m {
        c.push(format!("|p{r}|^2"), vec![r, r], &vec![(0, 1); r]);
    }
    Ok(c)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorMeta {
    pub dim: usize,
    pub orders: Vec<usize>,
    pub scale_normalized: bool,
}

/// Feature values aligned with the catalog entries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// Graph values before the root and weight are applied.
    pub raw: Vec<f64>,
    pub meta: VectorMeta,
}

pub fn feature_vector(
    set: &dyn TensorSet,
    catalog: &InvariantCatalog,
    scale_normalized: bool,
) -> Result<InvariantVector> {
    let raw = catalog
        .entries
        .iter()
        .map(|e| e.raw_value(set))
        .collect::<Result<Vec<_>>>()?;
    let values = catalog
        .entries
        .iter()
        .zip(&raw)
        .map(|(e, &v)| e.feature(v))
        .collect();
    Ok(InvariantVector {
        names: catalog.names(),
        values,
        raw,
        meta: VectorMeta {
            dim: set.dim(),
            orders: (0..=catalog.max_order()).collect(),
            scale_normalized,
        },
    })
}

/// Feature vector of a moment set, carrying its normalization flag.
pub fn moment_features(moments: &MomentSet, catalog: &InvariantCatalog) -> Result<InvariantVector> {
    feature_vector(moments, catalog, moments.scale_normalized)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L2,
    Linf,
}

pub fn similarity_distance(f: &InvariantVector, g: &InvariantVector, norm: Norm) -> Result<f64> {
    if f.names != g.names {
        return Err(Error::CatalogMismatch(
            "feature vectors come from different catalogs".into(),
        ));
    }
    let diffs = f.values.iter().zip(&g.values).map(|(a, b)| (a - b).abs());
    Ok(match norm {
        Norm::L2 => diffs.map(|x| x * x).sum::<f64>().sqrt(),
        Norm::Linf => diffs.fold(0.0, f64::max),
    })
}

/// Relative deviation when `|reference| > 1`, absolute otherwise.
pub fn deviation(reference: f64, other: f64) -> f64 {
    (reference - other).abs() / reference.abs().max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantDeviation {
    pub name: String,
    pub orders: Vec<usize>,
    pub a: f64,
    pub b: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub equivalent: bool,
    pub tolerance: f64,
    pub worst: Option<InvariantDeviation>,
    pub deviations: Vec<InvariantDeviation>,
}

/// Checks agreement of every default-catalog invariant. Agreement is
/// necessary for `p` and `q` to differ by a rotation; for orders >= 3 it is
/// not known to be sufficient.
pub fn rotation_equivalence_test(p: &MomentSet, q: &MomentSet, tol: f64) -> Result<EquivalenceReport> {
    let catalog = default_catalog(p.dim, p.order_max)?;
    rotation_equivalence_test_with(p, q, &catalog, tol)
}

pub fn rotation_equivalence_test_with(
    p: &MomentSet,
    q: &MomentSet,
    catalog: &InvariantCatalog,
    tol: f64,
) -> Result<EquivalenceReport> {
    if p.dim != q.dim || p.order_max != q.order_max {
        return Err(Error::DimensionMismatch(format!(
            "(d={}, m={}) vs (d={}, m={})",
            p.dim, p.order_max, q.dim, q.order_max
        )));
    }
    if p.centered != q.centered || p.scale_normalized != q.scale_normalized {
        return Err(Error::FlagMismatch(format!(
            "centered {}/{}, scale_normalized {}/{}",
            p.centered, q.centered, p.scale_normalized, q.scale_normalized
        )));
    }
    let mut deviations = Vec::with_capacity(catalog.len());
    for e in &catalog.entries {
        let a = e.raw_value(p)?;
        let b = e.raw_value(q)?;
        deviations.push(InvariantDeviation {
            name: e.name.clone(),
            orders: e.orders(),
            a,
            b,
            deviation: deviation(a, b),
        });
    }
    let worst = deviations
        .iter()
        .fold(None::<&InvariantDeviation>, |best, d| match best {
            Some(b) if b.deviation >= d.deviation => Some(b),
            _ => Some(d),
        })
        .cloned();
    let equivalent = deviations.iter().all(|d| d.deviation <= tol);
    Ok(EquivalenceReport {
        equivalent,
        tolerance: tol,
        worst,
        deviations,
    })
}
