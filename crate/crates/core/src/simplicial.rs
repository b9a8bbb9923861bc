//! Finite simplicial complexes, crosscomplex recognition and combinatorial
//! cube recognition for simple polytopes.
//!
//! A complex is stored as its maximal faces over vertices `0..vertices`,
//! each face a bit mask. The complex `{∅}` (one empty face, no vertices) is
//! allowed; it is the link of a vertex in a 0-dimensional complex.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_VERTICES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimplicialError {
    #[error("{0} vertices exceed the supported maximum {MAX_VERTICES}")]
    TooManyVertices(usize),
    #[error("face {face} uses vertex {vertex}, but there are only {vertices} vertices")]
    VertexOutOfRange { face: usize, vertex: usize, vertices: usize },
    #[error("face {0} repeats a vertex")]
    RepeatedVertex(usize),
    #[error("vertex {0} lies in no face")]
    UnusedVertex(usize),
    #[error("vertex {0} is not in the complex")]
    VertexAbsent(usize),
    #[error("polytope vertex {vertex} lies on {got} facets, expected {expected}")]
    NotSimple { vertex: usize, got: usize, expected: usize },
    #[error("polytope has no vertices")]
    NoVertices,
    #[error("polytope vertices {0} and {1} lie on the same facets")]
    DuplicateVertex(usize, usize),
}

fn mask_of(face: &[usize]) -> u64 {
    face.iter().fold(0u64, |m, &v| m | 1 << v)
}

fn indices_of(mask: u64) -> Vec<usize> {
    (0..64).filter(|&i| mask >> i & 1 == 1).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ComplexJson", into = "ComplexJson")]
pub struct SimplicialComplex {
    vertices: usize,
    /// Maximal faces, sorted and distinct.
    facets: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    vertices: usize,
    facets: Vec<Vec<usize>>,
}

impl TryFrom<ComplexJson> for SimplicialComplex {
    type Error = SimplicialError;
    fn try_from(j: ComplexJson) -> Result<Self, SimplicialError> {
        SimplicialComplex::new(j.vertices, j.facets)
    }
}

impl From<SimplicialComplex> for ComplexJson {
    fn from(k: SimplicialComplex) -> Self {
        ComplexJson { vertices: k.vertices, facets: k.facets() }
    }
}

impl SimplicialComplex {
    /// Faces that are contained in other listed faces are dropped.
    pub fn new(vertices: usize, faces: Vec<Vec<usize>>) -> Result<Self, SimplicialError> {
        if vertices > MAX_VERTICES {
            return Err(SimplicialError::TooManyVertices(vertices));
        }
        let mut masks = Vec::with_capacity(faces.len());
        for (f, face) in faces.iter().enumerate() {
            if let Some(&v) = face.iter().find(|&&v| v >= vertices) {
                return Err(SimplicialError::VertexOutOfRange { face: f, vertex: v, vertices });
            }
            let m = mask_of(face);
            if m.count_ones() as usize != face.len() {
                return Err(SimplicialError::RepeatedVertex(f));
            }
            masks.push(m);
        }
        let used = masks.iter().fold(0u64, |a, &m| a | m);
        if let Some(v) = (0..vertices).find(|&v| used >> v & 1 == 0) {
            return Err(SimplicialError::UnusedVertex(v));
        }
        Ok(Self::from_masks(vertices, masks))
    }

    fn from_masks(vertices: usize, masks: Vec<u64>) -> Self {
        let set: BTreeSet<u64> = masks.iter().copied().collect();
        let facets: Vec<u64> = set.iter().copied().filter(|&m| !set.iter().any(|&o| o != m && o & m == m)).collect();
        SimplicialComplex { vertices, facets }
    }

    /// Boundary of the `k+1`-dimensional crosspolytope: the join of `k+1`
    /// antipodal pairs `{2i, 2i+1}`.
    pub fn crosscomplex(k: usize) -> Self {
        let pairs = k + 1;
        let facets = (0..1u64 << pairs)
            .map(|choice| (0..pairs).fold(0u64, |m, i| m | 1 << (2 * i + (choice >> i & 1) as usize)))
            .collect();
        Self::from_masks(2 * pairs, facets)
    }

    /// Boundary of the simplex on `m ≥ 2` vertices.
    pub fn simplex_boundary(m: usize) -> Self {
        assert!(m >= 2);
        let full = (1u64 << m) - 1;
        Self::from_masks(m, (0..m).map(|i| full & !(1 << i)).collect())
    }

    /// Join, with the second complex's vertices shifted past the first's.
    pub fn join(&self, other: &SimplicialComplex) -> Self {
        assert!(self.vertices + other.vertices <= MAX_VERTICES);
        let facets =
            self.facets.iter().flat_map(|&a| other.facets.iter().map(move |&b| a | b << self.vertices)).collect();
        Self::from_masks(self.vertices + other.vertices, facets)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn facets(&self) -> Vec<Vec<usize>> {
        self.facets.iter().map(|&m| indices_of(m)).collect()
    }

    pub fn facet_masks(&self) -> &[u64] {
        &self.facets
    }

    /// Largest face size minus one; `-1` for `{∅}` or the void complex.
    pub fn dimension(&self) -> i64 {
        self.facets.iter().map(|m| m.count_ones() as i64).max().unwrap_or(0) - 1
    }

    pub fn is_pure(&self) -> bool {
        let d = self.dimension();
        self.facets.iter().all(|m| m.count_ones() as i64 - 1 == d)
    }

    pub fn contains_face(&self, face: u64) -> bool {
        self.facets.iter().any(|&m| m & face == face)
    }

    pub fn are_adjacent(&self, u: usize, v: usize) -> bool {
        self.contains_face(1 << u | 1 << v)
    }

    /// Faces not containing `v` whose union with `v` is a face, with the
    /// remaining vertices renumbered in increasing order.
    pub fn link(&self, v: usize) -> Result<SimplicialComplex, SimplicialError> {
        if v >= self.vertices {
            return Err(SimplicialError::VertexAbsent(v));
        }
        let faces: Vec<u64> = self.facets.iter().filter(|&&m| m >> v & 1 == 1).map(|&m| m & !(1 << v)).collect();
        let used = faces.iter().fold(0u64, |a, &m| a | m);
        let keep = indices_of(used);
        let relabel = |m: u64| keep.iter().enumerate().fold(0u64, |acc, (new, &old)| acc | (m >> old & 1) << new);
        Ok(Self::from_masks(keep.len(), faces.into_iter().map(relabel).collect()))
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices == 0 {
            return true;
        }
        let mut reached = 1u64;
        loop {
            let next = self.facets.iter().filter(|&&m| m & reached != 0).fold(reached, |a, &m| a | m);
            if next == reached {
                break;
            }
            reached = next;
        }
        reached.count_ones() as usize == self.vertices
    }

    /// `f[j]` is the number of `j`-dimensional faces.
    pub fn f_vector(&self) -> Vec<usize> {
        let mut faces = HashSet::new();
        for &m in &self.facets {
            let mut sub = m;
            loop {
                faces.insert(sub);
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & m;
            }
        }
        let top = (self.dimension() + 1).max(0) as usize;
        let mut f = vec![0; top];
        for s in faces {
            let size = s.count_ones() as usize;
            if size > 0 {
                f[size - 1] += 1;
            }
        }
        f
    }

    /// The vertex not adjacent to `v`, when there is exactly one.
    pub fn antipode(&self, v: usize) -> Option<usize> {
        let mut found = None;
        for u in (0..self.vertices).filter(|&u| u != v) {
            if !self.are_adjacent(u, v) {
                if found.is_some() {
                    return None;
                }
                found = Some(u);
            }
        }
        found
    }

    /// Boundary of a crosspolytope: `2(k+1)` vertices in antipodal pairs,
    /// and the maximal faces are exactly the sets meeting every pair once.
    pub fn is_crosscomplex(&self) -> bool {
        let d = self.dimension();
        if d < 0 {
            return false;
        }
        let pairs = (d + 1) as usize;
        if self.vertices != 2 * pairs || self.facets.len() != 1 << pairs {
            return false;
        }
        let mut antipode = vec![0usize; self.vertices];
        for (v, slot) in antipode.iter_mut().enumerate() {
            match self.antipode(v) {
                Some(u) => *slot = u,
                None => return false,
            }
        }
        // facets are distinct, so 2^pairs transversals of size `pairs` are all of them
        self.facets
            .iter()
            .all(|&m| m.count_ones() as usize == pairs && indices_of(m).iter().all(|&v| m >> antipode[v] & 1 == 0))
    }

    /// Dimensions 0 and 1 by the direct test; from dimension 2 on, a
    /// connected complex whose vertex links are all crosscomplexes of one
    /// dimension less.
    pub fn is_crosscomplex_recursive(&self) -> bool {
        let d = self.dimension();
        if d <= 1 {
            return self.is_crosscomplex();
        }
        self.is_connected()
            && (0..self.vertices).all(|v| {
                let l = self.link(v).expect("vertex in range");
                l.dimension() == d - 1 && l.is_crosscomplex_recursive()
            })
    }
}

/// A simple polytope given by which facets meet at each vertex.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PolytopeJson", into = "PolytopeJson")]
pub struct SimplePolytopeCombinatorics {
    facets: usize,
    vertex_facets: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct PolytopeJson {
    facets: usize,
    vertex_facets: Vec<Vec<usize>>,
}

impl TryFrom<PolytopeJson> for SimplePolytopeCombinatorics {
    type Error = SimplicialError;
    fn try_from(j: PolytopeJson) -> Result<Self, SimplicialError> {
        SimplePolytopeCombinatorics::new(j.facets, j.vertex_facets)
    }
}

impl From<SimplePolytopeCombinatorics> for PolytopeJson {
    fn from(p: SimplePolytopeCombinatorics) -> Self {
        PolytopeJson { facets: p.facets, vertex_facets: p.vertex_facets }
    }
}

impl SimplePolytopeCombinatorics {
    pub fn new(facets: usize, vertex_facets: Vec<Vec<usize>>) -> Result<Self, SimplicialError> {
        let Some(first) = vertex_facets.first() else {
            return Err(SimplicialError::NoVertices);
        };
        let n = first.len();
        // reuse the complex checks on the dual
        SimplicialComplex::new(facets, vertex_facets.clone())?;
        let mut seen = std::collections::HashMap::new();
        for (v, fs) in vertex_facets.iter().enumerate() {
            if fs.len() != n {
                return Err(SimplicialError::NotSimple { vertex: v, got: fs.len(), expected: n });
            }
            if let Some(u) = seen.insert(mask_of(fs), v) {
                return Err(SimplicialError::DuplicateVertex(u, v));
            }
        }
        Ok(SimplePolytopeCombinatorics { facets, vertex_facets })
    }

    /// The `n`-cube with facets `i` and `n + i` opposite, vertices indexed by
    /// bit masks.
    pub fn cube(n: usize) -> Self {
        let vf = (0..1usize << n).map(|m| (0..n).map(|i| if m >> i & 1 == 1 { n + i } else { i }).collect()).collect();
        Self::new(2 * n, vf).expect("cube incidences are valid")
    }

    /// Polygon with `m` edges.
    pub fn polygon(m: usize) -> Self {
        Self::new(m, (0..m).map(|i| vec![i, (i + 1) % m]).collect()).expect("polygon incidences are valid")
    }

    pub fn dimension(&self) -> usize {
        self.vertex_facets[0].len()
    }

    pub fn facet_count(&self) -> usize {
        self.facets
    }

    pub fn vertex_facets(&self) -> &[Vec<usize>] {
        &self.vertex_facets
    }

    /// Boundary complex of the dual simplicial polytope.
    pub fn dual_complex(&self) -> SimplicialComplex {
        SimplicialComplex::new(self.facets, self.vertex_facets.clone()).expect("validated on construction")
    }

    pub fn is_combinatorial_cube(&self) -> bool {
        self.dual_complex().is_crosscomplex()
    }
}
