//! Grounded Laplacians and their inverses.
//!
//! The inverse of the grounded Laplacian is the payoff kernel of the
//! placement game. It can be computed three ways:
//!
//! * [`invert_numeric`]: LU with partial pivoting, any connected graph;
//! * [`closed_form_undirected`]: on an undirected tree, entry `(i, j)` counts
//!   the followers shared by the leader paths of `i` and `j`;
//! * [`closed_form_directed`]: on a directed tree, entry `(i, j)` is 1 when
//!   `j` reaches `i` along directed edges and 0 otherwise.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::{LeaderNetwork, Mode};

/// Pivots below this magnitude mean the grounded Laplacian is singular.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct GroundedSystem {
    /// Follower block of the Laplacian.
    pub lg: DMatrix<f64>,
    /// Coupling of each follower to the leader.
    pub l12: DVector<f64>,
    pub follower_order: Vec<usize>,
}

impl GroundedSystem {
    /// The same system with followers permuted into `order` (node indices).
    pub fn reordered(&self, order: &[usize]) -> Result<GroundedSystem> {
        let index = positions_of(&self.follower_order, order)?;
        let n = index.len();
        let lg = DMatrix::from_fn(n, n, |r, c| self.lg[(index[r], index[c])]);
        let l12 = DVector::from_fn(n, |r, _| self.l12[index[r]]);
        Ok(GroundedSystem { lg, l12, follower_order: order.to_vec() })
    }
}

fn positions_of(current: &[usize], order: &[usize]) -> Result<Vec<usize>> {
    if order.len() != current.len() {
        return Err(Error::KernelMismatch("reordering changes the follower count".into()));
    }
    order
        .iter()
        .map(|v| {
            current
                .iter()
                .position(|w| w == v)
                .ok_or_else(|| Error::KernelMismatch(format!("node {v} is not a follower")))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMethod {
    Numeric,
    PathOverlap,
    Reachability,
}

impl KernelMethod {
    pub fn name(self) -> &'static str {
        match self {
            KernelMethod::Numeric => "numeric",
            KernelMethod::PathOverlap => "path-overlap",
            KernelMethod::Reachability => "reachability",
        }
    }
}

impl std::str::FromStr for KernelMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(KernelMethod::Numeric),
            "path-overlap" => Ok(KernelMethod::PathOverlap),
            "reachability" => Ok(KernelMethod::Reachability),
            other => Err(Error::Parse(format!("unknown kernel method {other:?}"))),
        }
    }
}

/// Inverse grounded Laplacian; rows are detector positions, columns attacker positions.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundedKernel {
    pub inv: DMatrix<f64>,
    pub method: KernelMethod,
    pub follower_order: Vec<usize>,
}

impl GroundedKernel {
    pub fn size(&self) -> usize {
        self.inv.nrows()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.inv[(row, col)]
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.inv[(rows[r], cols[c])])
    }

    /// Largest absolute entrywise difference against another kernel with the same ordering.
    pub fn max_discrepancy(&self, other: &GroundedKernel) -> f64 {
        max_abs_diff(&self.inv, &other.inv)
    }
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Grounded Laplacian `D - A` over the followers (in-degrees when directed).
pub fn grounded_system(net: &LeaderNetwork) -> Result<GroundedSystem> {
    match net.mode() {
        Mode::Undirected if !net.is_connected() => return Err(Error::Disconnected),
        Mode::Directed => {
            if let Some(v) = net.first_unreachable() {
                return Err(Error::LeaderUnreachable(v));
            }
        }
        _ => {}
    }
    let order = net.followers();
    let m = order.len();
    let mut lg = DMatrix::zeros(m, m);
    let mut l12 = DVector::zeros(m);
    for (r, &v) in order.iter().enumerate() {
        lg[(r, r)] = net.degree(v) as f64;
        for &u in net.in_neighbors(v) {
            match net.follower_position(u) {
                Some(c) => lg[(r, c)] -= 1.0,
                None => l12[r] -= 1.0,
            }
        }
    }
    Ok(GroundedSystem { lg, l12, follower_order: order })
}

/// LU factorization with partial pivoting, `P A = L U` packed in one matrix.
#[derive(Clone, Debug)]
pub struct Lu {
    lu: DMatrix<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &DMatrix<f64>) -> Result<Lu> {
        if a.nrows() == 0 || a.nrows() != a.ncols() {
            return Err(Error::EmptyMatrix);
        }
        let n = a.nrows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (pivot_row, pivot) = (k..n)
                .map(|r| (r, lu[(r, k)]))
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .expect("non-empty column");
            if pivot.abs() < PIVOT_TOLERANCE {
                return Err(Error::Singular { pivot });
            }
            if pivot_row != k {
                lu.swap_rows(k, pivot_row);
                perm.swap(k, pivot_row);
            }
            for r in k + 1..n {
                let factor = lu[(r, k)] / pivot;
                lu[(r, k)] = factor;
                if factor != 0.0 {
                    for c in k + 1..n {
                        lu[(r, c)] -= factor * lu[(k, c)];
                    }
                }
            }
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.perm.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            for c in 0..r {
                x[r] -= self.lu[(r, c)] * x[c];
            }
        }
        for r in (0..n).rev() {
            for c in r + 1..n {
                x[r] -= self.lu[(r, c)] * x[c];
            }
            x[r] /= self.lu[(r, r)];
        }
        x
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for c in 0..b.ncols() {
            let col: Vec<f64> = b.column(c).iter().copied().collect();
            for (r, v) in self.solve_vec(&col).into_iter().enumerate() {
                out[(r, c)] = v;
            }
        }
        out
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.solve(&DMatrix::identity(self.perm.len(), self.perm.len()))
    }
}

pub fn invert_numeric(sys: &GroundedSystem) -> Result<GroundedKernel> {
    let inv = Lu::factor(&sys.lg)?.inverse();
    Ok(GroundedKernel { inv, method: KernelMethod::Numeric, follower_order: sys.follower_order.clone() })
}

/// Undirected-tree kernel from leader-path overlaps.
pub fn closed_form_undirected(net: &LeaderNetwork) -> Result<GroundedKernel> {
    if net.mode() != Mode::Undirected {
        return Err(Error::WrongMode { expected: Mode::Undirected });
    }
    let tree = net.require_tree()?;
    let order = net.followers();
    let n = net.node_count();
    let paths: Vec<_> = order.iter().map(|&v| tree.path_to_leader(v)).collect();
    let m = order.len();
    let mut inv = DMatrix::zeros(m, m);
    let mut marks = vec![false; n];
    for (r, pr) in paths.iter().enumerate() {
        for &v in &pr.nodes {
            marks[v] = true;
        }
        for (c, pc) in paths.iter().enumerate() {
            inv[(r, c)] = pc.nodes.iter().filter(|&&v| marks[v]).count() as f64;
        }
        for &v in &pr.nodes {
            marks[v] = false;
        }
    }
    Ok(GroundedKernel { inv, method: KernelMethod::PathOverlap, follower_order: order })
}

/// Directed-tree kernel from reachability.
pub fn closed_form_directed(net: &LeaderNetwork) -> Result<GroundedKernel> {
    if net.mode() != Mode::Directed {
        return Err(Error::WrongMode { expected: Mode::Directed });
    }
    let tree = net.require_tree()?;
    let order = net.followers();
    let m = order.len();
    let inv = DMatrix::from_fn(m, m, |r, c| {
        if tree.is_ancestor_or_self(order[c], order[r]) {
            1.0
        } else {
            0.0
        }
    });
    Ok(GroundedKernel { inv, method: KernelMethod::Reachability, follower_order: order })
}

/// Best available kernel: the closed form on trees, numeric inversion otherwise.
pub fn kernel_for(net: &LeaderNetwork) -> Result<GroundedKernel> {
    match (net.validate_tree(), net.mode()) {
        (true, Mode::Undirected) => closed_form_undirected(net),
        (true, Mode::Directed) => closed_form_directed(net),
        (false, _) => invert_numeric(&grounded_system(net)?),
    }
}

/// `max |L_d^T L_d - L_u|` for a directed tree and its undirected counterpart.
pub fn factorization_check(net: &LeaderNetwork) -> Result<f64> {
    if net.mode() != Mode::Directed {
        return Err(Error::WrongMode { expected: Mode::Directed });
    }
    net.require_tree()?;
    let directed = grounded_system(net)?.lg;
    let undirected = grounded_system(&net.undirected_counterpart())?.lg;
    Ok(max_abs_diff(&(directed.transpose() * &directed), &undirected))
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut a = a.clone();
    let scale = a.iter().map(|x| x * x).sum::<f64>();
    if scale == 0.0 {
        return vec![0.0; n];
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n).flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q))).map(|(p, q)| a[(p, q)].powi(2)).sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

/// Largest singular value via the eigenvalues of the smaller Gram matrix.
pub fn sigma_max(m: &DMatrix<f64>) -> Result<f64> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    if rows == 1 || cols == 1 {
        return Ok(m.norm());
    }
    let gram = if rows < cols { m * m.transpose() } else { m.transpose() * m };
    let top = symmetric_eigenvalues(&gram).into_iter().fold(0.0, f64::max);
    Ok(top.max(0.0).sqrt())
}

/// Largest singular value of `re + j·im`.
///
/// The Hermitian Gram matrix `H = A + jB` is embedded as the real symmetric
/// block matrix `[[A, -B], [B, A]]`, which has the eigenvalues of `H` twice.
pub fn sigma_max_complex(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Result<f64> {
    assert_eq!(re.shape(), im.shape());
    let (rows, cols) = re.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::EmptyMatrix);
    }
    let a = re.transpose() * re + im.transpose() * im;
    let b = re.transpose() * im - im.transpose() * re;
    let k = cols;
    let mut embed = DMatrix::zeros(2 * k, 2 * k);
    embed.view_mut((0, 0), (k, k)).copy_from(&a);
    embed.view_mut((k, k), (k, k)).copy_from(&a);
    embed.view_mut((0, k), (k, k)).copy_from(&(-&b));
    embed.view_mut((k, 0), (k, k)).copy_from(&b);
    let top = symmetric_eigenvalues(&embed).into_iter().fold(0.0, f64::max);
    Ok(top.max(0.0).sqrt())
}

/// Spanning 2-trees of a tree with nodes `i`, `j` on one side and the leader on the other.
///
/// Every 2-tree of a tree is the tree minus one edge, so this deletes each
/// edge in turn and checks which side each node lands on.
pub fn two_tree_count(net: &LeaderNetwork, i: usize, j: usize) -> Result<usize> {
    if net.mode() != Mode::Undirected {
        return Err(Error::WrongMode { expected: Mode::Undirected });
    }
    for index in [i, j] {
        if index >= net.node_count() {
            return Err(Error::IndexOutOfRange { index, node_count: net.node_count() });
        }
    }
    net.require_tree()?;
    let n = net.node_count();
    let edges = net.edges();
    let mut count = 0;
    for skip in 0..edges.len() {
        let mut component: Vec<usize> = (0..n).collect();
        fn find(c: &mut [usize], mut x: usize) -> usize {
            while c[x] != x {
                c[x] = c[c[x]];
                x = c[x];
            }
            x
        }
        for (k, &(u, v)) in edges.iter().enumerate() {
            if k != skip {
                let (ru, rv) = (find(&mut component, u), find(&mut component, v));
                component[ru] = rv;
            }
        }
        let (ci, cj, cl) = (find(&mut component, i), find(&mut component, j), find(&mut component, net.leader()));
        if ci == cj && ci != cl {
            count += 1;
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{generate, TreeKind};
    use approx::assert_relative_eq;

    fn dm(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c])
    }

    #[test]
    fn grounded_laplacians_by_hand() {
        // leader 0 - 1 - 2
        let path = generate(TreeKind::Path, 3, 0, Mode::Undirected, None).unwrap();
        let sys = grounded_system(&path).unwrap();
        assert_eq!(sys.lg, dm(&[&[2.0, -1.0], &[-1.0, 1.0]]));
        assert_eq!(sys.l12, DVector::from_vec(vec![-1.0, 0.0]));

        let star = generate(TreeKind::Star, 4, 0, Mode::Undirected, None).unwrap();
        assert_eq!(grounded_system(&star).unwrap().lg, DMatrix::identity(3, 3));

        let directed = generate(TreeKind::Path, 4, 0, Mode::Directed, None).unwrap();
        let sys = grounded_system(&directed).unwrap();
        assert_eq!(sys.lg, dm(&[&[1.0, 0.0, 0.0], &[-1.0, 1.0, 0.0], &[0.0, -1.0, 1.0]]));
    }

    #[test]
    fn row_sums_vanish() {
        let net = generate(TreeKind::RandomTree, 12, 5, Mode::Undirected, Some(3)).unwrap();
        let sys = grounded_system(&net).unwrap();
        for r in 0..sys.lg.nrows() {
            assert_eq!(sys.lg.row(r).sum() + sys.l12[r], 0.0);
        }
        assert_eq!(sys.lg, sys.lg.transpose());
    }

    #[test]
    fn grounded_system_rejects_invalid_networks() {
        let split = LeaderNetwork::new(4, &[(0, 1), (2, 3)], Mode::Undirected, 0).unwrap();
        assert!(matches!(grounded_system(&split), Err(Error::Disconnected)));
        let toward = LeaderNetwork::new(3, &[(1, 0), (2, 1)], Mode::Directed, 0).unwrap();
        assert!(matches!(grounded_system(&toward), Err(Error::LeaderUnreachable(_))));
    }

    #[test]
    fn numeric_inverse_small_cases() {
        let sys = GroundedSystem { lg: dm(&[&[2.0, -1.0], &[-1.0, 1.0]]), l12: DVector::zeros(2), follower_order: vec![1, 2] };
        let k = invert_numeric(&sys).unwrap();
        assert!(max_abs_diff(&k.inv, &dm(&[&[1.0, 1.0], &[1.0, 2.0]])) < 1e-12);

        let id = GroundedSystem { lg: DMatrix::identity(3, 3), l12: DVector::zeros(3), follower_order: vec![0, 1, 2] };
        assert_eq!(invert_numeric(&id).unwrap().inv, DMatrix::identity(3, 3));

        // Follower 2 has no edges at all.
        let singular = GroundedSystem {
            lg: dm(&[&[2.0, -1.0, 0.0], &[-1.0, 1.0, 0.0], &[0.0, 0.0, 0.0]]),
            l12: DVector::zeros(3),
            follower_order: vec![0, 1, 2],
        };
        assert!(matches!(invert_numeric(&singular), Err(Error::Singular { .. })));
    }

    #[test]
    fn numeric_inverse_residual() {
        let net = generate(TreeKind::RandomTree, 200, 17, Mode::Undirected, Some(11)).unwrap();
        let sys = grounded_system(&net).unwrap();
        let k = invert_numeric(&sys).unwrap();
        let residual = max_abs_diff(&(&sys.lg * &k.inv), &DMatrix::identity(199, 199));
        assert!(residual <= 1e-9, "residual {residual}");
    }

    #[test]
    fn path_overlap_on_a_path() {
        let net = generate(TreeKind::Path, 5, 0, Mode::Undirected, None).unwrap();
        let k = closed_form_undirected(&net).unwrap();
        let expected = DMatrix::from_fn(4, 4, |r, c| (r.min(c) + 1) as f64);
        assert_eq!(k.inv, expected);
        let numeric = invert_numeric(&grounded_system(&net).unwrap()).unwrap();
        assert!(k.max_discrepancy(&numeric) < 1e-9);
    }

    #[test]
    fn path_overlap_on_a_star_is_identity() {
        let star = generate(TreeKind::Star, 6, 0, Mode::Undirected, None).unwrap();
        assert_eq!(closed_form_undirected(&star).unwrap().inv, DMatrix::identity(5, 5));
    }

    #[test]
    fn leader_neighbor_columns_cover_their_subtrees() {
        for seed in 0..20 {
            let net = generate(TreeKind::RandomTree, 15, (seed % 15) as usize, Mode::Undirected, Some(seed)).unwrap();
            let k = closed_form_undirected(&net).unwrap();
            let depths = crate::topology::leader_depths(&net).unwrap();
            for (c, &v) in k.follower_order.iter().enumerate() {
                if depths[v] != 1 {
                    continue;
                }
                for (r, &w) in k.follower_order.iter().enumerate() {
                    let below = net.path_to_leader(w).unwrap().contains(v);
                    assert_eq!(k.entry(r, c), if below { 1.0 } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn reachability_kernels() {
        let path = generate(TreeKind::Path, 4, 0, Mode::Directed, None).unwrap();
        let k = closed_form_directed(&path).unwrap();
        assert_eq!(k.inv, DMatrix::from_fn(3, 3, |r, c| if c <= r { 1.0 } else { 0.0 }));
        let numeric = invert_numeric(&grounded_system(&path).unwrap()).unwrap();
        assert!(k.max_discrepancy(&numeric) < 1e-9);

        let star = generate(TreeKind::Star, 5, 0, Mode::Directed, None).unwrap();
        assert_eq!(closed_form_directed(&star).unwrap().inv, DMatrix::identity(4, 4));

        assert!(matches!(closed_form_directed(&path.undirected_counterpart()), Err(Error::WrongMode { .. })));
        assert!(matches!(closed_form_undirected(&path), Err(Error::WrongMode { .. })));
    }

    #[test]
    fn directed_tree_is_unit_lower_triangular_in_topological_order() {
        let net = generate(TreeKind::RandomTree, 20, 4, Mode::Directed, Some(9)).unwrap();
        let order = crate::topology::topological_order(&net).unwrap();
        let sys = grounded_system(&net).unwrap().reordered(&order).unwrap();
        for r in 0..sys.lg.nrows() {
            assert_eq!(sys.lg[(r, r)], 1.0);
            for c in r + 1..sys.lg.ncols() {
                assert_eq!(sys.lg[(r, c)], 0.0);
            }
        }
    }

    #[test]
    fn factorization_identity_by_hand() {
        let path = generate(TreeKind::Path, 4, 0, Mode::Directed, None).unwrap();
        let lg = grounded_system(&path).unwrap().lg;
        assert_eq!(lg.transpose() * &lg, dm(&[&[2.0, -1.0, 0.0], &[-1.0, 2.0, -1.0], &[0.0, -1.0, 1.0]]));
        assert_eq!(factorization_check(&path).unwrap(), 0.0);
        let star = generate(TreeKind::Star, 6, 0, Mode::Directed, None).unwrap();
        assert_eq!(factorization_check(&star).unwrap(), 0.0);
    }

    #[test]
    fn sigma_max_by_hand() {
        assert_relative_eq!(sigma_max(&dm(&[&[1.0, 2.0], &[1.0, 2.0]])).unwrap(), 10f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(sigma_max(&DMatrix::identity(4, 4)).unwrap(), 1.0, max_relative = 1e-12);
        assert_eq!(sigma_max(&dm(&[&[3.5]])).unwrap(), 3.5);
        assert!(matches!(sigma_max(&DMatrix::zeros(0, 2)), Err(Error::EmptyMatrix)));
        assert_eq!(sigma_max(&DMatrix::zeros(3, 3)).unwrap(), 0.0);
    }

    #[test]
    fn complex_sigma_reduces_to_real() {
        let m = dm(&[&[1.0, 2.0], &[3.0, 4.0], &[0.5, 0.0]]);
        let zero = DMatrix::zeros(3, 2);
        assert_relative_eq!(sigma_max_complex(&m, &zero).unwrap(), sigma_max(&m).unwrap(), max_relative = 1e-12);
        // j·M has the same singular values as M.
        assert_relative_eq!(sigma_max_complex(&zero, &m).unwrap(), sigma_max(&m).unwrap(), max_relative = 1e-12);
        // diag(1+j, 2) has singular values {sqrt 2, 2}.
        let re = dm(&[&[1.0, 0.0], &[0.0, 2.0]]);
        let im = dm(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert_relative_eq!(sigma_max_complex(&re, &im).unwrap(), 2.0, max_relative = 1e-12);
    }

    #[test]
    fn two_tree_counts_small() {
        // leader 0 - 1 - 2: deleting either edge separates 2 from the leader.
        let path = generate(TreeKind::Path, 3, 0, Mode::Undirected, None).unwrap();
        assert_eq!(two_tree_count(&path, 2, 2).unwrap(), 2);
        assert_eq!(two_tree_count(&path, 1, 2).unwrap(), 1);
        let star = generate(TreeKind::Star, 5, 0, Mode::Undirected, None).unwrap();
        assert_eq!(two_tree_count(&star, 1, 2).unwrap(), 0);
        assert_eq!(two_tree_count(&star, 3, 3).unwrap(), 1);
    }
}
