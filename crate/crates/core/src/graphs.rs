//! Bipartite graph states and the built-in lattices.
//!
//! Vertices are split into a black set B and a white set W. The adjacency
//! matrix has one row per B vertex and one column per W vertex, so entry
//! `(j, i)` is set iff black vertex `j` is joined to white vertex `i`.
//! Within each colour class vertices are numbered in position (row-major)
//! order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::{BitMatrix, BitVector};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("adjacency is {rows}x{cols} but the graph declares n_b={n_b}, n_w={n_w}")]
    AdjacencyShape {
        rows: usize,
        cols: usize,
        n_b: usize,
        n_w: usize,
    },
    #[error("edge ({b}, {w}) out of range for n_b={n_b}, n_w={n_w}")]
    EdgeOutOfRange {
        b: usize,
        w: usize,
        n_b: usize,
        n_w: usize,
    },
    #[error("{0} must have every dimension >= 1")]
    ZeroDimension(&'static str),
    #[error("invalid graph spec {0:?}: expected path:N, grid:WxH, rhg:XxYxZ or edgeless:N")]
    BadSpec(String),
    #[error("graph JSON: {0}")]
    Json(String),
}

/// Optional human-readable vertex names, one list per colour class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexLabels {
    pub black: Vec<String>,
    pub white: Vec<String>,
}

#[derive(Clone, PartialEq, Eq)]
pub struct BipartiteGraphState {
    n_b: usize,
    n_w: usize,
    adjacency: BitMatrix,
    adjacency_t: BitMatrix,
    labels: Option<VertexLabels>,
}

/// Outcome of [`BipartiteGraphState::validate`]. Isolated vertices are legal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub isolated_black: Vec<usize>,
    pub isolated_white: Vec<usize>,
}

impl ValidationReport {
    pub fn has_isolated(&self) -> bool {
        !self.isolated_black.is_empty() || !self.isolated_white.is_empty()
    }
}

impl BipartiteGraphState {
    pub fn new(n_b: usize, n_w: usize, adjacency: BitMatrix) -> Result<Self, GraphError> {
        Self::validate(n_b, n_w, &adjacency)?;
        let adjacency_t = adjacency.transpose();
        Ok(Self {
            n_b,
            n_w,
            adjacency,
            adjacency_t,
            labels: None,
        })
    }

    /// Builds a graph from `(black, white)` index pairs. Duplicate edges are
    /// ignored.
    pub fn from_edges(
        n_b: usize,
        n_w: usize,
        edges: &[(usize, usize)],
    ) -> Result<Self, GraphError> {
        let mut a = BitMatrix::zeros(n_b, n_w);
        for &(b, w) in edges {
            if b >= n_b || w >= n_w {
                return Err(GraphError::EdgeOutOfRange { b, w, n_b, n_w });
            }
            a.set(b, w, true);
        }
        Self::new(n_b, n_w, a)
    }

    pub fn with_labels(mut self, labels: VertexLabels) -> Result<Self, GraphError> {
        if labels.black.len() != self.n_b || labels.white.len() != self.n_w {
            return Err(GraphError::AdjacencyShape {
                rows: labels.black.len(),
                cols: labels.white.len(),
                n_b: self.n_b,
                n_w: self.n_w,
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Checks that `adjacency` is `n_b x n_w` and lists isolated vertices.
    pub fn validate(
        n_b: usize,
        n_w: usize,
        adjacency: &BitMatrix,
    ) -> Result<ValidationReport, GraphError> {
        if adjacency.rows() != n_b || adjacency.cols() != n_w {
            return Err(GraphError::AdjacencyShape {
                rows: adjacency.rows(),
                cols: adjacency.cols(),
                n_b,
                n_w,
            });
        }
        let isolated_black = (0..n_b).filter(|&j| adjacency.row(j).is_zero()).collect();
        let isolated_white = (0..n_w)
            .filter(|&i| adjacency.column(i).is_zero())
            .collect();
        Ok(ValidationReport {
            isolated_black,
            isolated_white,
        })
    }

    pub fn report(&self) -> ValidationReport {
        Self::validate(self.n_b, self.n_w, &self.adjacency)
            .expect("constructed graphs are always well-formed")
    }

    /// Linear chain of `n` vertices; odd positions (1-based) are black.
    pub fn path(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::ZeroDimension("path"));
        }
        let n_b = n.div_ceil(2);
        let n_w = n / 2;
        // position p (0-based): black index p/2 when p even, white index p/2 when odd
        let edges: Vec<(usize, usize)> = (0..n - 1).map(|p| (p.div_ceil(2), p / 2)).collect();
        Self::from_edges(n_b, n_w, &edges)
    }

    /// `w x h` square lattice with a checkerboard colouring:
    /// `(row + col)` even is black.
    pub fn grid(w: usize, h: usize) -> Result<Self, GraphError> {
        if w == 0 || h == 0 {
            return Err(GraphError::ZeroDimension("grid"));
        }
        let mut index = vec![0usize; w * h];
        let (mut n_b, mut n_w) = (0, 0);
        for r in 0..h {
            for c in 0..w {
                let slot = &mut index[r * w + c];
                if (r + c) % 2 == 0 {
                    *slot = n_b;
                    n_b += 1;
                } else {
                    *slot = n_w;
                    n_w += 1;
                }
            }
        }
        let mut edges = Vec::new();
        for r in 0..h {
            for c in 0..w {
                if (r + c) % 2 != 0 {
                    continue;
                }
                let b = index[r * w + c];
                if c + 1 < w {
                    edges.push((b, index[r * w + c + 1]));
                }
                if c > 0 {
                    edges.push((b, index[r * w + c - 1]));
                }
                if r + 1 < h {
                    edges.push((b, index[(r + 1) * w + c]));
                }
                if r > 0 {
                    edges.push((b, index[(r - 1) * w + c]));
                }
            }
        }
        Self::from_edges(n_b, n_w, &edges)
    }

    /// Cluster state on the cell complex of an `lx x ly x lz` cubic lattice
    /// with open boundaries: one qubit per face (black) and per edge
    /// (white), each face joined to the four edges bounding it.
    ///
    /// Cells are addressed in doubled coordinates on `[0, 2l]` per axis: an
    /// edge has exactly one odd coordinate, a face exactly two. Cells are
    /// numbered in z-major, then y, then x order of those coordinates.
    pub fn rhg(lx: usize, ly: usize, lz: usize) -> Result<Self, GraphError> {
        if lx == 0 || ly == 0 || lz == 0 {
            return Err(GraphError::ZeroDimension("rhg lattice"));
        }
        let (nx, ny, nz) = (2 * lx + 1, 2 * ly + 1, 2 * lz + 1);
        let flat = |x: usize, y: usize, z: usize| (z * ny + y) * nx + x;
        let mut black = vec![usize::MAX; nx * ny * nz];
        let mut white = vec![usize::MAX; nx * ny * nz];
        let (mut n_b, mut n_w) = (0, 0);
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    match x % 2 + y % 2 + z % 2 {
                        2 => {
                            black[flat(x, y, z)] = n_b;
                            n_b += 1;
                        }
                        1 => {
                            white[flat(x, y, z)] = n_w;
                            n_w += 1;
                        }
                        _ => {}
                    }
                }
            }
        }
        let mut edges = Vec::with_capacity(4 * n_b);
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let f = black[flat(x, y, z)];
                    if f == usize::MAX {
                        continue;
                    }
                    // step +-1 along each odd axis of the face
                    let coords = [x, y, z];
                    for axis in 0..3 {
                        if coords[axis] % 2 == 0 {
                            continue;
                        }
                        for up in [false, true] {
                            let mut c = coords;
                            c[axis] = if up { c[axis] + 1 } else { c[axis] - 1 };
                            edges.push((f, white[flat(c[0], c[1], c[2])]));
                        }
                    }
                }
            }
        }
        Self::from_edges(n_b, n_w, &edges)
    }

    /// `n` isolated vertices, coloured alternately like [`Self::path`].
    pub fn edgeless(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::ZeroDimension("edgeless"));
        }
        Self::from_edges(n.div_ceil(2), n / 2, &[])
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn n_w(&self) -> usize {
        self.n_w
    }

    /// Total number of qubits, which is also the number of stabilizer
    /// generators `X_j Z_{N(j)}`.
    pub fn n(&self) -> usize {
        self.n_b + self.n_w
    }

    pub fn adjacency(&self) -> &BitMatrix {
        &self.adjacency
    }

    /// Cached transpose: rows are W vertices.
    pub fn adjacency_t(&self) -> &BitMatrix {
        &self.adjacency_t
    }

    pub fn labels(&self) -> Option<&VertexLabels> {
        self.labels.as_ref()
    }

    pub fn black_neighbors(&self, j: usize) -> &BitVector {
        self.adjacency.row(j)
    }

    pub fn white_neighbors(&self, i: usize) -> &BitVector {
        self.adjacency_t.row(i)
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n_b)
            .map(|j| self.adjacency.row(j).count_ones())
            .sum()
    }

    /// Edge list as `(black, white)` pairs in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n_b)
            .flat_map(|j| self.adjacency.row(j).iter_ones().map(move |i| (j, i)))
            .collect()
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            n_b: self.n_b,
            n_w: self.n_w,
            edges: self.edges().into_iter().map(|(b, w)| [b, w]).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("graph document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let doc: GraphDocument =
            serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
        doc.into_graph()
    }
}

impl fmt::Debug for BipartiteGraphState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BipartiteGraphState")
            .field("n_b", &self.n_b)
            .field("n_w", &self.n_w)
            .field("adjacency", &self.adjacency)
            .finish()
    }
}

/// JSON interchange form: `{"n_b":…, "n_w":…, "edges":[[b, w], …]}` with
/// zero-based black and white indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub n_b: usize,
    pub n_w: usize,
    pub edges: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<VertexLabels>,
}

impl GraphDocument {
    pub fn into_graph(self) -> Result<BipartiteGraphState, GraphError> {
        let edges: Vec<(usize, usize)> = self.edges.iter().map(|e| (e[0], e[1])).collect();
        let g = BipartiteGraphState::from_edges(self.n_b, self.n_w, &edges)?;
        match self.labels {
            Some(l) => g.with_labels(l),
            None => Ok(g),
        }
    }
}

/// A built-in graph family with its size, e.g. `path:5` or `grid:3x3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphSpec {
    Path(usize),
    Grid(usize, usize),
    Rhg(usize, usize, usize),
    Edgeless(usize),
}

impl GraphSpec {
    pub fn build(&self) -> Result<BipartiteGraphState, GraphError> {
        match *self {
            GraphSpec::Path(n) => BipartiteGraphState::path(n),
            GraphSpec::Grid(w, h) => BipartiteGraphState::grid(w, h),
            GraphSpec::Rhg(x, y, z) => BipartiteGraphState::rhg(x, y, z),
            GraphSpec::Edgeless(n) => BipartiteGraphState::edgeless(n),
        }
    }
}

impl FromStr for GraphSpec {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || GraphError::BadSpec(s.to_string());
        let (kind, size) = s.split_once(':').ok_or_else(bad)?;
        let dims: Vec<usize> = size
            .split('x')
            .map(|d| d.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        match (kind.trim(), dims.as_slice()) {
            ("path", [n]) => Ok(GraphSpec::Path(*n)),
            ("grid", [w, h]) => Ok(GraphSpec::Grid(*w, *h)),
            ("rhg", [x, y, z]) => Ok(GraphSpec::Rhg(*x, *y, *z)),
            ("edgeless", [n]) => Ok(GraphSpec::Edgeless(*n)),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSpec::Path(n) => write!(f, "path:{n}"),
            GraphSpec::Grid(w, h) => write!(f, "grid:{w}x{h}"),
            GraphSpec::Rhg(x, y, z) => write!(f, "rhg:{x}x{y}x{z}"),
            GraphSpec::Edgeless(n) => write!(f, "edgeless:{n}"),
        }
    }
}
