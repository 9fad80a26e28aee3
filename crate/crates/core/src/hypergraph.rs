//! The essential hypergraph `Γ(F,σ)`.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CspModel, Property, SignVector};
use crate::sampler::CspInstance;

/// Edge type `(s, a, b)`: sign of the essential vertex, and the number of
/// non-essential vertices of each sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeType {
    pub s: i8,
    pub a: u32,
    pub b: u32,
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+},{},{})", self.s, self.a, self.b)
    }
}

/// Hyperedges with one distinguished essential vertex, stored flat with the
/// essential vertex first, plus per-vertex incidence lists split by role.
#[derive(Clone, Debug)]
pub struct EssentialHypergraph {
    k: usize,
    signs: Vec<i8>,
    vertices: Vec<u32>,
    source: Vec<u32>,
    ess_start: Vec<u32>,
    ess_list: Vec<u32>,
    non_start: Vec<u32>,
    non_list: Vec<u32>,
}

fn csr(n: usize, pairs: impl Iterator<Item = (u32, u32)> + Clone) -> (Vec<u32>, Vec<u32>) {
    let mut start = vec![0u32; n + 1];
    for (v, _) in pairs.clone() {
        start[v as usize + 1] += 1;
    }
    for i in 0..n {
        start[i + 1] += start[i];
    }
    let mut fill = start.clone();
    let mut list = vec![0u32; start[n] as usize];
    for (v, e) in pairs {
        list[fill[v as usize] as usize] = e;
        fill[v as usize] += 1;
    }
    (start, list)
}

impl EssentialHypergraph {
    /// Builds a hypergraph from edges given essential-vertex-first, each
    /// tagged with the index of the constraint it came from.
    pub fn from_edges(k: usize, signs: Vec<i8>, edges: Vec<(Vec<u32>, u32)>) -> Result<Self> {
        if k < 2 {
            return Err(Error::Input(format!(
                "edge size must be at least 2, got {k}"
            )));
        }
        let n = signs.len();
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Input("vertex signs must be -1 or +1".into()));
        }
        let mut vertices = Vec::with_capacity(edges.len() * k);
        let mut source = Vec::with_capacity(edges.len());
        for (e, src) in edges {
            if e.len() != k {
                return Err(Error::Input(format!(
                    "edge has {} vertices, expected {k}",
                    e.len()
                )));
            }
            if let Some(v) = e.iter().find(|&&v| v as usize >= n) {
                return Err(Error::Input(format!("vertex {v} out of range (n = {n})")));
            }
            for (i, v) in e.iter().enumerate() {
                if e[..i].contains(v) {
                    return Err(Error::Input(format!("edge repeats vertex {v}")));
                }
            }
            vertices.extend_from_slice(&e);
            source.push(src);
        }
        Ok(Self::assemble(k, signs, vertices, source))
    }

    fn assemble(k: usize, signs: Vec<i8>, vertices: Vec<u32>, source: Vec<u32>) -> Self {
        let n = signs.len();
        let ess = vertices
            .chunks(k)
            .enumerate()
            .map(|(e, c)| (c[0], e as u32));
        let non = vertices
            .chunks(k)
            .enumerate()
            .flat_map(|(e, c)| c[1..].iter().map(move |&v| (v, e as u32)));
        let (ess_start, ess_list) = csr(n, ess);
        let (non_start, non_list) = csr(n, non);
        EssentialHypergraph {
            k,
            signs,
            vertices,
            source,
            ess_start,
            ess_list,
            non_start,
            non_list,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.signs.len()
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn edge_count(&self) -> usize {
        self.source.len()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn sign(&self, v: u32) -> i8 {
        self.signs[v as usize]
    }

    /// Vertices of edge `e`, essential vertex first.
    pub fn edge(&self, e: u32) -> &[u32] {
        let e = e as usize;
        &self.vertices[e * self.k..(e + 1) * self.k]
    }

    pub fn essential(&self, e: u32) -> u32 {
        self.vertices[e as usize * self.k]
    }

    pub fn non_essential(&self, e: u32) -> &[u32] {
        &self.edge(e)[1..]
    }

    /// Index of the constraint of `F` the edge came from.
    pub fn source(&self, e: u32) -> u32 {
        self.source[e as usize]
    }

    pub fn edge_type(&self, e: u32) -> EdgeType {
        let a = self
            .non_essential(e)
            .iter()
            .filter(|&&v| self.sign(v) > 0)
            .count() as u32;
        EdgeType {
            s: self.sign(self.essential(e)),
            a,
            b: self.k as u32 - 1 - a,
        }
    }

    /// Edges in which `v` is the essential vertex.
    pub fn essential_edges(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.ess_list[self.ess_start[v] as usize..self.ess_start[v + 1] as usize]
    }

    /// Edges in which `v` is a non-essential vertex.
    pub fn nonessential_edges(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.non_list[self.non_start[v] as usize..self.non_start[v + 1] as usize]
    }

    pub fn incident_edges(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.essential_edges(v)
            .iter()
            .chain(self.nonessential_edges(v))
            .copied()
    }

    pub fn type_histogram(&self) -> BTreeMap<EdgeType, usize> {
        let mut out = BTreeMap::new();
        for e in 0..self.edge_count() as u32 {
            *out.entry(self.edge_type(e)).or_insert(0) += 1;
        }
        out
    }

    /// Number of edges whose essential vertex is in `Λ⁺` and in `Λ⁻`.
    pub fn essential_sign_split(&self) -> (usize, usize) {
        let plus = (0..self.edge_count() as u32)
            .filter(|&e| self.sign(self.essential(e)) > 0)
            .count();
        (plus, self.edge_count() - plus)
    }

    /// Vertices sharing an edge with `v`.
    pub fn neighbours(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.incident_edges(v)
            .flat_map(move |e| self.edge(e).iter().copied())
            .filter(move |&u| u != v)
    }
}

/// One hyperedge per constraint that has an essential variable under `σ`.
pub fn build_gamma(
    f: &CspInstance,
    sigma: &SignVector,
    m: &CspModel,
) -> Result<EssentialHypergraph> {
    m.properties().require(&[Property::OneEssential])?;
    if sigma.len() != f.n() {
        return Err(Error::Input(format!(
            "assignment has length {} but the instance has {} variables",
            sigma.len(),
            f.n()
        )));
    }
    if f.arity() != m.arity() {
        return Err(Error::Input("instance and model arities differ".into()));
    }
    if f.constraints()
        .any(|(member, _)| member >= m.members().len())
    {
        return Err(Error::Input(
            "constraint refers to a missing model member".into(),
        ));
    }
    let s = sigma.as_slice();
    let k = f.arity();
    let mut vertices = Vec::new();
    let mut source = Vec::new();
    for (c, (member, vars)) in f.constraints().enumerate() {
        let phi = m.member(member);
        let x = f.local_index(c, s);
        if !phi.eval_index(x) {
            return Err(Error::Contract(format!(
                "assignment violates constraint {c}"
            )));
        }
        if let Some(i) = phi.first_essential_position(x) {
            vertices.push(vars[i]);
            vertices.extend(
                vars.iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &v)| v),
            );
            source.push(c as u32);
        }
    }
    Ok(EssentialHypergraph::assemble(
        k,
        s.to_vec(),
        vertices,
        source,
    ))
}
