//! Network graphs, gossip matrices and Chebyshev-accelerated gossip.
//!
//! A gossip matrix is `U = I − W` where `W` is a symmetric mixing matrix
//! supported on the edges of a connected graph. `U` is positive semidefinite
//! with null space `span{1}`; one multiplication `Z·U` of a `d × n` matrix is
//! one communication round in which every worker sends a `d`-vector to each
//! of its neighbors.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attempts made by [`build_graph`] before giving up on a connected random graph.
const RANDOM_GRAPH_RETRIES: u64 = 100;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphKind {
    Grid2d { rows: usize, cols: usize },
    Path { n: usize },
    Complete { n: usize },
    ErdosRenyi { n: usize, p: f64, seed: u64 },
}

/// Undirected simple graph. Neighbor lists exclude the node itself.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from undirected pairs. Rejects self-loops, duplicates,
    /// out-of-range endpoints and disconnected results.
    pub fn from_edges(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Graph("graph needs at least one node".into()));
        }
        let mut edges = Vec::with_capacity(pairs.len());
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::Graph(format!("edge ({a},{b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::Graph(format!("self-loop at node {a}")));
            }
            let e = (a.min(b), a.max(b));
            if adjacency[e.0].contains(&e.1) {
                return Err(Error::Graph(format!("duplicate edge ({},{})", e.0, e.1)));
            }
            adjacency[e.0].push(e.1);
            adjacency[e.1].push(e.0);
            edges.push(e);
        }
        edges.sort_unstable();
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let g = Self { n, edges, adjacency };
        if !g.is_connected() {
            return Err(Error::Graph(format!(
                "graph with {n} nodes and {} edges is disconnected",
                g.edges.len()
            )));
        }
        Ok(g)
    }

    /// Parses the edge-list text format: one `i j` pair per line, 0-indexed.
    /// Blank lines and lines starting with `#` are ignored. The node count is
    /// one more than the largest index seen.
    pub fn parse_edge_list(text: &str, source: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |msg: &str| Error::Parse {
                path: source.to_string(),
                line: lineno + 1,
                msg: msg.to_string(),
            };
            let mut it = line.split_whitespace();
            let a = it.next().ok_or_else(|| parse_err("missing endpoint"))?;
            let b = it.next().ok_or_else(|| parse_err("missing second endpoint"))?;
            if it.next().is_some() {
                return Err(parse_err("expected exactly two indices"));
            }
            let a: usize = a.parse().map_err(|_| parse_err("bad node index"))?;
            let b: usize = b.parse().map_err(|_| parse_err("bad node index"))?;
            pairs.push((a, b));
        }
        let n = pairs.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
        Self::from_edges(n, &pairs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Edges as `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Neighbors of `i`, excluding `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Directed messages in one full round: every worker to every neighbor.
    pub fn full_round_messages(&self) -> u64 {
        2 * self.edges.len() as u64
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Same graph with node `i` renamed to `perm[i]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let pairs: Vec<_> = self.edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect();
        Self::from_edges(self.n, &pairs)
    }
}

pub fn build_graph(kind: &GraphKind) -> Result<Graph> {
    match *kind {
        GraphKind::Grid2d { rows, cols } => {
            if rows == 0 || cols == 0 {
                return Err(Error::Graph("grid dimensions must be positive".into()));
            }
            let id = |r: usize, c: usize| r * cols + c;
            let mut pairs = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        pairs.push((id(r, c), id(r, c + 1)));
                    }
                    if r + 1 < rows {
                        pairs.push((id(r, c), id(r + 1, c)));
                    }
                }
            }
            Graph::from_edges(rows * cols, &pairs)
        }
        GraphKind::Path { n } => {
            let pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
            Graph::from_edges(n, &pairs)
        }
        GraphKind::Complete { n } => {
            let mut pairs = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    pairs.push((i, j));
                }
            }
            Graph::from_edges(n, &pairs)
        }
        GraphKind::ErdosRenyi { n, p, seed } => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Graph(format!("edge probability {p} outside [0, 1]")));
            }
            for attempt in 0..RANDOM_GRAPH_RETRIES {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
                let mut pairs = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        if rng.random::<f64>() < p {
                            pairs.push((i, j));
                        }
                    }
                }
                match Graph::from_edges(n, &pairs) {
                    Ok(g) => return Ok(g),
                    Err(Error::Graph(_)) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(Error::Graph(format!(
                "no connected G({n}, {p}) sample after {RANDOM_GRAPH_RETRIES} seeds starting at {seed}"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Largest eigenvalue.
    pub sigma1: f64,
    /// Smallest nonzero eigenvalue.
    pub sigma_nm1: f64,
    /// Normalized eigengap `sigma_nm1 / sigma1`.
    pub zeta: f64,
}

/// Spectrum of a symmetric PSD matrix whose null space is one-dimensional.
///
/// Eigenvalues below `1e-9·σ₁` count as zero; anything other than exactly
/// one zero eigenvalue is rejected.
pub fn spectrum(u: &DMatrix<f64>) -> Result<Spectrum> {
    let n = u.nrows();
    if n != u.ncols() {
        return Err(Error::Dimension {
            expected: "square matrix".into(),
            got: format!("{}x{}", u.nrows(), u.ncols()),
        });
    }
    if n < 2 {
        return Err(Error::InvalidGossip("need at least two nodes".into()));
    }
    let mut eig: Vec<f64> = SymmetricEigen::new(u.clone()).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let sigma1 = eig[n - 1];
    if !(sigma1 > 0.0) {
        return Err(Error::InvalidGossip("largest eigenvalue is not positive".into()));
    }
    let tol = 1e-9 * sigma1;
    if eig[0] < -tol {
        return Err(Error::InvalidGossip(format!("negative eigenvalue {:e}", eig[0])));
    }
    let zeros = eig.iter().filter(|&&v| v.abs() <= tol).count();
    if zeros != 1 {
        return Err(Error::InvalidGossip(format!(
            "expected a one-dimensional null space, found {zeros} zero eigenvalues"
        )));
    }
    let sigma_nm1 = eig[1];
    Ok(Spectrum { sigma1, sigma_nm1, zeta: sigma_nm1 / sigma1 })
}

/// `U = I − W` for a connected graph together with its spectrum.
#[derive(Clone, Debug)]
pub struct GossipMatrix {
    graph: Graph,
    u: DMatrix<f64>,
    spectrum: Spectrum,
}

impl GossipMatrix {
    /// Validates a user-supplied `U` against the graph: symmetry, support on
    /// edges and the diagonal, `U·1 = 0`, and a one-dimensional null space.
    pub fn from_matrix(graph: Graph, u: DMatrix<f64>) -> Result<Self> {
        let n = graph.n();
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::Dimension {
                expected: format!("{n}x{n}"),
                got: format!("{}x{}", u.nrows(), u.ncols()),
            });
        }
        let scale = u.amax().max(1.0);
        for i in 0..n {
            for j in 0..n {
                if (u[(i, j)] - u[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidGossip(format!("not symmetric at ({i},{j})")));
                }
                if i != j && u[(i, j)] != 0.0 && !graph.neighbors(i).contains(&j) {
                    return Err(Error::InvalidGossip(format!("entry ({i},{j}) off the edge set")));
                }
            }
            let row_sum: f64 = u.row(i).iter().sum();
            if row_sum.abs() > 1e-12 * scale {
                return Err(Error::InvalidGossip(format!("row {i} sums to {row_sum:e}")));
            }
        }
        let spectrum = spectrum(&u)?;
        Ok(Self { graph, u, spectrum })
    }

    /// Metropolis–Hastings weights: `W_ij = 1/(1 + max(deg_i, deg_j))` on edges.
    pub fn metropolis(graph: &Graph) -> Result<Self> {
        let w = |i: usize, j: usize| 1.0 / (1 + graph.degree(i).max(graph.degree(j))) as f64;
        Self::from_edge_weights(graph, w)
    }

    /// Maximum-degree weights: `W_ij = 1/(1 + max_k deg_k)` on edges.
    pub fn max_degree(graph: &Graph) -> Result<Self> {
        let weight = 1.0 / (1 + graph.max_degree()) as f64;
        Self::from_edge_weights(graph, |_, _| weight)
    }

    fn from_edge_weights(graph: &Graph, weight: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let n = graph.n();
        let mut u = DMatrix::zeros(n, n);
        for &(i, j) in graph.edges() {
            let w = weight(i, j);
            u[(i, j)] = -w;
            u[(j, i)] = -w;
            u[(i, i)] += w;
            u[(j, j)] += w;
        }
        Self::from_matrix(graph.clone(), u)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn spectrum(&self) -> Spectrum {
        self.spectrum
    }

    pub fn sigma1(&self) -> f64 {
        self.spectrum.sigma1
    }

    pub fn sigma_nm1(&self) -> f64 {
        self.spectrum.sigma_nm1
    }

    pub fn zeta(&self) -> f64 {
        self.spectrum.zeta
    }

    /// `‖√U‖⁴ = σ₁(U)²`.
    pub fn sqrt_u_norm4(&self) -> f64 {
        self.spectrum.sigma1 * self.spectrum.sigma1
    }

    /// `U_ij`.
    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.u[(i, j)]
    }

    /// One full gossip round: `Z·U`.
    pub fn apply(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_cols(z, self.n())?;
        Ok(z * &self.u)
    }
}

fn check_cols(z: &DMatrix<f64>, n: usize) -> Result<()> {
    if z.ncols() != n {
        return Err(Error::Dimension { expected: format!("{n} columns"), got: format!("{}", z.ncols()) });
    }
    Ok(())
}

/// Constants of the Chebyshev-accelerated gossip procedure.
///
/// When the eigengap is already 1 the constants are undefined (`c₂` divides
/// by `1 − ζ`); the plan then runs in bypass mode with `K = 1` and gossip
/// matrix `U` itself.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChebyshevPlan {
    pub k: usize,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    /// `a_0, …, a_K` from `a_{l+1} = 2c₂a_l − a_{l−1}`, `a_0 = 1`, `a_1 = c₂`.
    pub a: Vec<f64>,
    pub bypass: bool,
}

impl ChebyshevPlan {
    pub fn a_k(&self) -> f64 {
        self.a[self.k]
    }

    /// Communication rounds per gossip application.
    pub fn rounds(&self) -> usize {
        self.k
    }

    /// Same constants with a different round count. Bypass plans keep `K = 1`.
    pub fn with_rounds(&self, k: usize) -> Self {
        if self.bypass || k == 0 {
            return self.clone();
        }
        let mut a = vec![1.0, self.c2];
        for l in 1..k {
            a.push(2.0 * self.c2 * a[l] - a[l - 1]);
        }
        Self { k, a, ..self.clone() }
    }
}

pub fn chebyshev_plan(gm: &GossipMatrix) -> ChebyshevPlan {
    chebyshev_plan_from(gm.zeta(), gm.sigma1())
}

pub fn chebyshev_plan_from(zeta: f64, sigma1: f64) -> ChebyshevPlan {
    if zeta >= 1.0 - 1e-12 {
        return ChebyshevPlan { k: 1, c1: 0.0, c2: 1.0, c3: 1.0, a: vec![1.0, 1.0], bypass: true };
    }
    let sz = zeta.sqrt();
    // the small slack keeps exact squares such as ζ = 1/4 from rounding down
    let k = ((1.0 / sz) + 1e-12).floor().max(1.0) as usize;
    let c1 = (1.0 - sz) / (1.0 + sz);
    let c2 = (1.0 + zeta) / (1.0 - zeta);
    let c3 = 2.0 / ((1.0 + zeta) * sigma1);
    let mut a = Vec::with_capacity(k + 1);
    a.push(1.0);
    a.push(c2);
    for l in 1..k {
        a.push(2.0 * c2 * a[l] - a[l - 1]);
    }
    ChebyshevPlan { k, c1, c2, c3, a, bypass: false }
}

/// Explicit `P_K(U) = I − T_K(c₂(I − c₃U)) / T_K(c₂)`, or `U` in bypass mode.
pub fn pk_matrix(plan: &ChebyshevPlan, gm: &GossipMatrix) -> DMatrix<f64> {
    let u = gm.matrix();
    if plan.bypass {
        return u.clone();
    }
    let n = gm.n();
    let eye = DMatrix::<f64>::identity(n, n);
    let m = (&eye - u * plan.c3) * plan.c2;
    let mut t_prev = eye.clone();
    let mut t_cur = m.clone();
    for _ in 1..plan.k {
        let t_next = &m * &t_cur * 2.0 - &t_prev;
        t_prev = t_cur;
        t_cur = t_next;
    }
    eye - t_cur / plan.a_k()
}

/// Reference path: `Z·P_K(U)` by dense polynomial evaluation.
pub fn apply_pk(z: &DMatrix<f64>, plan: &ChebyshevPlan, gm: &GossipMatrix) -> Result<DMatrix<f64>> {
    check_cols(z, gm.n())?;
    Ok(z * pk_matrix(plan, gm))
}

/// Distributed Chebyshev gossip: `K` rounds of the `z`-recursion.
///
/// `first_round` stands in for `Z·U` in the first round, which lets a lazy
/// neighbor cache replace the first exchange. Without it the first round is
/// computed exactly.
pub fn accelerated_gossip(
    z: &DMatrix<f64>,
    gm: &GossipMatrix,
    plan: &ChebyshevPlan,
    first_round: Option<&DMatrix<f64>>,
) -> Result<DMatrix<f64>> {
    check_cols(z, gm.n())?;
    if let Some(p) = first_round {
        if p.shape() != z.shape() {
            return Err(Error::Dimension {
                expected: format!("{}x{}", z.nrows(), z.ncols()),
                got: format!("{}x{}", p.nrows(), p.ncols()),
            });
        }
    }
    let u = gm.matrix();
    let zu;
    let p = match first_round {
        Some(p) => p,
        None => {
            zu = z * u;
            &zu
        }
    };
    if plan.bypass {
        return Ok(p.clone());
    }
    let (c2, c3) = (plan.c2, plan.c3);
    let mut z_prev = z.clone();
    let mut z_cur = z * c2 - p * (c2 * c3);
    for _ in 1..plan.k {
        let round = &z_cur * u;
        let z_next = (&z_cur - round * c3) * (2.0 * c2) - &z_prev;
        z_prev = z_cur;
        z_cur = z_next;
    }
    Ok(z - z_cur / plan.a_k())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
        let mut e: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn graph_sizes() {
        let g = build_graph(&GraphKind::Grid2d { rows: 5, cols: 5 }).unwrap();
        assert_eq!((g.n(), g.num_edges()), (25, 40));
        let g = build_graph(&GraphKind::Path { n: 2 }).unwrap();
        assert_eq!((g.n(), g.num_edges()), (2, 1));
        let g = build_graph(&GraphKind::Complete { n: 3 }).unwrap();
        assert_eq!((g.n(), g.num_edges()), (3, 3));
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(Graph::from_edges(3, &[(0, 0), (1, 2)]), Err(Error::Graph(_))));
        assert!(matches!(Graph::from_edges(2, &[(0, 1), (1, 0)]), Err(Error::Graph(_))));
        assert!(matches!(Graph::from_edges(4, &[(0, 1), (2, 3)]), Err(Error::Graph(_))));
        assert!(matches!(Graph::from_edges(2, &[(0, 2)]), Err(Error::Graph(_))));
    }

    #[test]
    fn erdos_renyi_is_deterministic_and_connected() {
        let kind = GraphKind::ErdosRenyi { n: 12, p: 0.3, seed: 5 };
        let a = build_graph(&kind).unwrap();
        let b = build_graph(&kind).unwrap();
        assert_eq!(a, b);
        assert!(a.is_connected());
        assert!(build_graph(&GraphKind::ErdosRenyi { n: 5, p: 0.0, seed: 1 }).is_err());
    }

    #[test]
    fn edge_list_format() {
        let g = Graph::parse_edge_list("# ring\n0 1\n1 2\n\n2 0\n", "mem").unwrap();
        assert_eq!((g.n(), g.num_edges()), (3, 3));
        let err = Graph::parse_edge_list("0 1\n1 x\n", "mem").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn metropolis_path2_closed_form() {
        let g = build_graph(&GraphKind::Path { n: 2 }).unwrap();
        let gm = GossipMatrix::metropolis(&g).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        assert_relative_eq!(*gm.matrix(), expected, epsilon = 1e-15);
        assert_relative_eq!(gm.sigma1(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(gm.sigma_nm1(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(gm.zeta(), 1.0, epsilon = 1e-12);
        let md = GossipMatrix::max_degree(&g).unwrap();
        assert_relative_eq!(*md.matrix(), expected, epsilon = 1e-15);
    }

    #[test]
    fn metropolis_path3_is_scaled_laplacian() {
        let g = build_graph(&GraphKind::Path { n: 3 }).unwrap();
        let gm = GossipMatrix::metropolis(&g).unwrap();
        let lap = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        assert_relative_eq!(*gm.matrix(), lap / 3.0, epsilon = 1e-15);
        // path Laplacian eigenvalues {0, 1, 3}
        assert_relative_eq!(gm.sigma1(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(gm.sigma_nm1(), 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(gm.zeta(), 1.0 / 3.0, epsilon = 1e-12);
        let md = GossipMatrix::max_degree(&g).unwrap();
        assert_relative_eq!(md.weight(0, 1), -1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn max_degree_complete3() {
        let g = build_graph(&GraphKind::Complete { n: 3 }).unwrap();
        let gm = GossipMatrix::max_degree(&g).unwrap();
        let w = DMatrix::<f64>::identity(3, 3) - gm.matrix();
        for v in w.iter() {
            assert_relative_eq!(*v, 1.0 / 3.0, epsilon = 1e-15);
        }
        let e = eigenvalues(gm.matrix());
        assert_relative_eq!(e[0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(e[1], 1.0, epsilon = 1e-12);
        assert_relative_eq!(e[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn averaging_matrix_has_unit_gap() {
        let n = 5;
        let u = DMatrix::<f64>::identity(n, n) - DMatrix::from_element(n, n, 1.0 / n as f64);
        let s = spectrum(&u).unwrap();
        assert_relative_eq!(s.zeta, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spectrum_rejects_disconnected() {
        // two disjoint edges: null space of dimension two
        let block = DMatrix::from_row_slice(2, 2, &[0.5, -0.5, -0.5, 0.5]);
        let mut u = DMatrix::zeros(4, 4);
        u.view_mut((0, 0), (2, 2)).copy_from(&block);
        u.view_mut((2, 2), (2, 2)).copy_from(&block);
        assert!(matches!(spectrum(&u), Err(Error::InvalidGossip(_))));
    }

    #[test]
    fn from_matrix_rejects_off_edge_support() {
        let g = build_graph(&GraphKind::Path { n: 3 }).unwrap();
        let u = DMatrix::<f64>::identity(3, 3) - DMatrix::from_element(3, 3, 1.0 / 3.0);
        assert!(matches!(GossipMatrix::from_matrix(g, u), Err(Error::InvalidGossip(_))));
    }

    #[test]
    fn chebyshev_constants() {
        let plan = chebyshev_plan_from(1.0 / 3.0, 1.0);
        assert_eq!(plan.k, 1);
        assert_relative_eq!(plan.c2, 2.0, epsilon = 1e-14);
        assert_relative_eq!(plan.c3, 1.5, epsilon = 1e-14);
        assert!(!plan.bypass);

        let plan = chebyshev_plan_from(1.0 / 4.0, 1.0);
        assert_eq!(plan.k, 2);

        // a-sequence with c2 = 2
        let plan = chebyshev_plan_from(1.0 / 3.0 / 9.0, 1.0);
        assert!(plan.k >= 2);
        let c2 = plan.c2;
        assert_relative_eq!(plan.a[2], 2.0 * c2 * c2 - 1.0, epsilon = 1e-12);
        let mut a = vec![1.0, 2.0];
        a.push(2.0 * 2.0 * a[1] - a[0]);
        assert_eq!(a, vec![1.0, 2.0, 7.0]);
        assert!(plan.a.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn bypass_when_gap_is_one() {
        let g = build_graph(&GraphKind::Path { n: 2 }).unwrap();
        let gm = GossipMatrix::metropolis(&g).unwrap();
        let plan = chebyshev_plan(&gm);
        assert!(plan.bypass);
        assert_eq!(plan.k, 1);
        let z = DMatrix::from_row_slice(1, 2, &[3.0, -1.0]);
        let out = accelerated_gossip(&z, &gm, &plan, None).unwrap();
        assert_relative_eq!(out, &z * gm.matrix(), epsilon = 1e-15);
    }

    #[test]
    fn k1_polynomial_is_scaled_u() {
        let g = build_graph(&GraphKind::Path { n: 3 }).unwrap();
        let gm = GossipMatrix::metropolis(&g).unwrap();
        let plan = chebyshev_plan(&gm);
        assert_eq!(plan.k, 1);
        // T_1(x) = x, so P_1(U) = I − (I − c3 U) = c3 U
        let p = pk_matrix(&plan, &gm);
        assert_relative_eq!(p, gm.matrix() * plan.c3, epsilon = 1e-14);
    }

    #[test]
    fn consensus_columns_are_annihilated() {
        let g = build_graph(&GraphKind::Path { n: 10 }).unwrap();
        let gm = GossipMatrix::metropolis(&g).unwrap();
        let plan = chebyshev_plan(&gm);
        let z = DMatrix::from_fn(3, 10, |r, _| 1.0 + r as f64);
        let a = accelerated_gossip(&z, &gm, &plan, None).unwrap();
        let b = apply_pk(&z, &plan, &gm).unwrap();
        assert!(a.amax() < 1e-12);
        assert!(b.amax() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let g = build_graph(&GraphKind::Path { n: 3 }).unwrap();
        let gm = GossipMatrix::metropolis(&g).unwrap();
        let plan = chebyshev_plan(&gm);
        let z = DMatrix::zeros(2, 4);
        assert!(matches!(apply_pk(&z, &plan, &gm), Err(Error::Dimension { .. })));
        let z = DMatrix::zeros(2, 3);
        let p = DMatrix::zeros(3, 3);
        assert!(matches!(accelerated_gossip(&z, &gm, &plan, Some(&p)), Err(Error::Dimension { .. })));
    }
}
