//! Graphs, cluster stabilizers and cluster-state construction.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};
use crate::qstate::{check_register, ComplexMatrix, DensityMatrix};
use crate::scalar::Real;

/// Undirected simple graph on vertices `0..num_vertices`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    num_vertices: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    /// Edges are normalized to `(min, max)` and deduplicated.
    pub fn new(
        num_vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::arg(format!("self-loop on vertex {a}")));
            }
            if a >= num_vertices || b >= num_vertices {
                return Err(Error::arg(format!(
                    "edge ({a}, {b}) out of range for {num_vertices} vertices"
                )));
            }
            set.insert((a.min(b), a.max(b)));
        }
        Ok(Self {
            num_vertices,
            edges: set,
        })
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (i - 1, i))).expect("valid chain")
    }

    /// `rows × cols` square lattice, vertex `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let v = r * cols + c;
                if c + 1 < cols {
                    edges.push((v, v + 1));
                }
                if r + 1 < rows {
                    edges.push((v, v + cols));
                }
            }
        }
        Self::new(rows * cols, edges).expect("valid grid")
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, i: usize) -> Result<BTreeSet<usize>> {
        self.check_vertex(i)?;
        Ok(self
            .edges
            .iter()
            .filter_map(|&(a, b)| match (a == i, b == i) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect())
    }

    fn check_vertex(&self, i: usize) -> Result<()> {
        if i >= self.num_vertices {
            return Err(Error::arg(format!(
                "vertex {i} out of range for {} vertices",
                self.num_vertices
            )));
        }
        Ok(())
    }

    /// Parses the line format `n <count>` followed by `e <i> <j>` lines.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut count: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| {
                s.parse::<usize>().map_err(|_| {
                    Error::parse(line_no, format!("expected a vertex index, got {s:?}"))
                })
            };
            match fields.as_slice() {
                ["n", v] => {
                    if count.is_some() {
                        return Err(Error::parse(line_no, "vertex count given twice"));
                    }
                    count = Some(num(v)?);
                }
                ["e", a, b] => {
                    if count.is_none() {
                        return Err(Error::parse(line_no, "edge before vertex count"));
                    }
                    edges.push((num(a)?, num(b)?));
                }
                _ => return Err(Error::parse(line_no, format!("unrecognized line {line:?}"))),
            }
        }
        let n = count.ok_or_else(|| Error::parse(0, "missing `n <count>` line"))?;
        Self::new(n, edges)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("n {}\n", self.num_vertices);
        for (a, b) in &self.edges {
            s.push_str(&format!("e {a} {b}\n"));
        }
        s
    }
}

impl FromStr for Graph {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// `K_i = X_i ⊗_{j ∈ N(i)} Z_j`.
pub fn stabilizer(g: &Graph, i: usize) -> Result<PauliString> {
    g.check_vertex(i)?;
    let mut letters = vec![Pauli::I; g.num_vertices()];
    letters[i] = Pauli::X;
    for j in g.neighbors(i)? {
        letters[j] = Pauli::Z;
    }
    Ok(PauliString::new(letters, Default::default()))
}

/// All cluster stabilizers of `g`, in vertex order.
pub fn stabilizers(g: &Graph) -> Vec<PauliString> {
    (0..g.num_vertices())
        .map(|i| stabilizer(g, i).expect("vertex in range"))
        .collect()
}

/// Cluster state `∏_{(a,b)} CZ_ab |+⟩^⊗n`.
pub fn build_cluster_state<T: Real>(g: &Graph) -> Result<DensityMatrix<T>> {
    let n = g.num_vertices();
    check_register(n, "cluster state")?;
    if n == 0 {
        return Err(Error::arg("cluster state needs at least one vertex"));
    }
    let dim = 1usize << n;
    let bit = |q: usize| 1usize << (n - 1 - q);
    let amp = T::one() / T::from_usize(dim).expect("dimension fits").sqrt();
    let amplitudes: Vec<Complex<T>> = (0..dim)
        .map(|b| {
            let flips = g
                .edges()
                .filter(|&(a, c)| b & bit(a) != 0 && b & bit(c) != 0)
                .count();
            let s = if flips % 2 == 0 { amp } else { -amp };
            Complex::new(s, T::zero())
        })
        .collect();
    DensityMatrix::from_pure(&amplitudes)
}

/// The same state as [`build_cluster_state`], built as the normalized
/// product of stabilizer projectors `∏_i (I + K_i)/2`.
pub fn cluster_state_from_stabilizers<T: Real>(g: &Graph) -> Result<DensityMatrix<T>> {
    let n = g.num_vertices();
    check_register(n, "cluster state")?;
    if n == 0 {
        return Err(Error::arg("cluster state needs at least one vertex"));
    }
    let dim = 1usize << n;
    let half = T::lit(0.5);
    let mut proj = ComplexMatrix::<T>::identity(dim);
    for k in stabilizers(g) {
        proj = (&proj + &k.right_mul(&proj)?).scale_real(half);
    }
    let tr = proj.trace().re;
    if tr <= T::branch_eps() {
        return Err(Error::arg("stabilizer projector product vanished"));
    }
    DensityMatrix::new(proj.scale_real(T::one() / tr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stabilizer_examples() {
        let g = Graph::chain(3);
        assert_eq!(stabilizer(&g, 1).unwrap(), "ZXZ".parse().unwrap());
        assert_eq!(
            stabilizer(&Graph::chain(1), 0).unwrap(),
            "X".parse().unwrap()
        );
        assert_eq!(
            stabilizer(&Graph::chain(2), 0).unwrap(),
            "XZ".parse().unwrap()
        );
        assert!(stabilizer(&g, 3).is_err());
    }

    #[test]
    fn neighbor_examples() {
        let g = Graph::chain(3);
        assert_eq!(g.neighbors(1).unwrap(), BTreeSet::from([0, 2]));
        let isolated = Graph::new(2, []).unwrap();
        assert!(isolated.neighbors(0).unwrap().is_empty());
        let grid = Graph::grid(3, 3);
        assert_eq!(grid.neighbors(0).unwrap(), BTreeSet::from([1, 3]));
        assert_eq!(grid.neighbors(4).unwrap().len(), 4);
        assert!(g.neighbors(9).is_err());
    }

    #[test]
    fn graph_validation() {
        assert!(Graph::new(2, [(0, 0)]).is_err());
        assert!(Graph::new(2, [(0, 2)]).is_err());
        let g = Graph::new(3, [(0, 1), (1, 0), (2, 1)]).unwrap();
        assert_eq!(g.num_edges(), 2);
    }

    #[test]
    fn graph_text_format() {
        let g = Graph::parse("# a triangle\nn 3\ne 0 1\ne 1 2 # tail\n\ne 2 0\n").unwrap();
        assert_eq!(g.num_edges(), 3);
        assert_eq!(Graph::parse(&g.to_text()).unwrap(), g);
        assert!(Graph::parse("e 0 1\nn 2").is_err());
        assert!(Graph::parse("n 2\ne 0 x").is_err());
        assert!(Graph::parse("n 2\nn 3").is_err());
        assert!(Graph::parse("").is_err());
        assert!(Graph::parse("n 2\nq 1").is_err());
    }

    #[test]
    fn single_vertex_is_plus() {
        let rho = build_cluster_state::<f64>(&Graph::chain(1)).unwrap();
        let plus =
            DensityMatrix::from_pure(&[Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)]).unwrap();
        assert!(rho.matrix().max_abs_diff(plus.matrix()) < 1e-15);
    }

    #[test]
    fn two_vertex_chain() {
        // (|0+⟩ + |1−⟩)/√2 has amplitudes (1, 1, 1, -1)/2.
        let rho = build_cluster_state::<f64>(&Graph::chain(2)).unwrap();
        let c = |x: f64| Complex::new(x, 0.0);
        let expected = DensityMatrix::from_pure(&[c(1.0), c(1.0), c(1.0), c(-1.0)]).unwrap();
        assert!(rho.matrix().max_abs_diff(expected.matrix()) < 1e-15);
        let alt = cluster_state_from_stabilizers::<f64>(&Graph::chain(2)).unwrap();
        assert!(rho.matrix().max_abs_diff(alt.matrix()) < 1e-12);
    }

    #[test]
    fn chain_of_five_is_stabilized() {
        let g = Graph::chain(5);
        let rho = build_cluster_state::<f64>(&g).unwrap();
        for k in stabilizers(&g) {
            let e = k.expectation(&rho).unwrap();
            assert!((e.re - 1.0).abs() < 1e-12 && e.im.abs() < 1e-12);
        }
        assert!((rho.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn capacity_limit() {
        let g = Graph::chain(13);
        assert!(matches!(
            build_cluster_state::<f64>(&g),
            Err(Error::Capacity { .. })
        ));
    }
}
