//! Full binary tree combinatorics: enumeration, the integer embedding, leaf
//! expansion, the recursive mass functional, and the one-leaf-at-a-time
//! decomposition of the (n+1)-leaf trees.
//!
//! Embedding. Vertices are numbered by in-order traversal and shifted so the
//! root sits at 0 (ι_Z(root) = 0). In a full binary tree the in-order
//! sequence strictly alternates leaf, interior, leaf, …, leaf; with the root
//! (interior for n ≥ 2) at an odd raw position, the shift puts every leaf on
//! an odd integer and every interior vertex on an even one. The single-vertex
//! tree is the lone exception (its root is a leaf at 0).
//!
//! Masses. The measure attached to a tree with horizon t has total mass
//! given by the recursion mass(T, t) = t·∫₀ᵗ mass(T_L, s)·mass(T_R, t−s) ds
//! with mass(leaf, t) = 1. Each mass is a *monomial* c_T·t^{2n−2} whose
//! rational coefficient is computed exactly (big rationals) and evaluated at
//! float t last — the bound t^{2n−2}/(2n−3)!! is attained by comb trees, so
//! float recursion error could otherwise fake a violation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

/// Largest leaf count `enumerate_trees` accepts (Catalan growth).
pub const MAX_ENUM_LEAVES: usize = 10;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("enumeration capped at {cap} leaves, got {n}")]
    CapExceeded { n: usize, cap: usize },
    #[error("bad arguments: {0}")]
    BadArgs(String),
    #[error("vertex {0} is not a leaf of this tree")]
    NotALeaf(i64),
    #[error("vertex {0} is not an interior vertex with two leaf children")]
    NotASimpleBranch(i64),
    #[error("invalid duration assignment: {0}")]
    BadPartition(String),
}

/// Recursive canonical form: a vertex is a leaf or has exactly two children.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Shape {
    Leaf,
    Node(Box<Shape>, Box<Shape>),
}

impl Shape {
    fn num_leaves(&self) -> usize {
        match self {
            Shape::Leaf => 1,
            Shape::Node(l, r) => l.num_leaves() + r.num_leaves(),
        }
    }
}

/// One vertex in embedded coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexInfo {
    /// Embedded position (root = 0; consecutive integers).
    pub z: i64,
    pub is_leaf: bool,
    /// Embedded positions of the children (interior vertices only).
    pub left: Option<i64>,
    pub right: Option<i64>,
}

/// A full binary tree together with its in-order integer embedding.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FullBinaryTree {
    shape: Shape,
}

impl FullBinaryTree {
    pub fn new(shape: Shape) -> Self {
        Self { shape }
    }

    pub fn leaf() -> Self {
        Self { shape: Shape::Leaf }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn num_leaves(&self) -> usize {
        self.shape.num_leaves()
    }

    pub fn num_vertices(&self) -> usize {
        2 * self.num_leaves() - 1
    }

    fn root_raw(&self) -> i64 {
        // In-order position of the root = size of the left subtree.
        match &self.shape {
            Shape::Leaf => 0,
            Shape::Node(l, _) => 2 * l.num_leaves() as i64 - 1,
        }
    }

    /// All vertices in ascending embedded order.
    pub fn vertices(&self) -> Vec<VertexInfo> {
        fn record(shape: &Shape, next: &mut i64, rows: &mut Vec<VertexInfo>) -> i64 {
            match shape {
                Shape::Leaf => {
                    let pos = *next;
                    *next += 1;
                    rows.push(VertexInfo { z: pos, is_leaf: true, left: None, right: None });
                    pos
                }
                Shape::Node(l, r) => {
                    let lp = record(l, next, rows);
                    let pos = *next;
                    *next += 1;
                    rows.push(VertexInfo { z: pos, is_leaf: false, left: Some(lp), right: None });
                    let rp = record(r, next, rows);
                    let row = rows.iter_mut().find(|v| v.z == pos).expect("just pushed");
                    row.right = Some(rp);
                    pos
                }
            }
        }
        let mut rows = Vec::with_capacity(self.num_vertices());
        let mut next = 0i64;
        record(&self.shape, &mut next, &mut rows);
        let shift = self.root_raw();
        for row in &mut rows {
            row.z -= shift;
            row.left = row.left.map(|p| p - shift);
            row.right = row.right.map(|p| p - shift);
        }
        rows.sort_by_key(|v| v.z);
        rows
    }

    /// Embedded positions of the leaves, ascending.
    pub fn leaves(&self) -> Vec<i64> {
        self.vertices().into_iter().filter(|v| v.is_leaf).map(|v| v.z).collect()
    }

    /// The last simple branching point: the largest interior vertex whose
    /// two children are both leaves. None (standing in for −∞) only for the
    /// single-vertex tree — every tree with ≥ 2 leaves has such a vertex.
    pub fn last_simple_branch(&self) -> Option<i64> {
        let verts = self.vertices();
        let leaf_at = |z: i64| verts.iter().any(|v| v.z == z && v.is_leaf);
        verts
            .iter()
            .filter(|v| {
                !v.is_leaf
                    && v.left.map(&leaf_at).unwrap_or(false)
                    && v.right.map(&leaf_at).unwrap_or(false)
            })
            .map(|v| v.z)
            .max()
    }

    /// |{leaves w : w < v}| in embedded order.
    pub fn leaves_before(&self, v: i64) -> usize {
        self.leaves().into_iter().filter(|&w| w < v).count()
    }

    /// Append two leaves to the leaf at embedded position `v`.
    pub fn expand(&self, v: i64) -> Result<FullBinaryTree, TreeError> {
        let target = v + self.root_raw();
        let is_leaf_here = self
            .vertices()
            .iter()
            .any(|vertex| vertex.z == v && vertex.is_leaf);
        if !is_leaf_here {
            return Err(TreeError::NotALeaf(v));
        }
        fn rebuild(shape: &Shape, next: &mut i64, target: i64) -> Shape {
            match shape {
                Shape::Leaf => {
                    let pos = *next;
                    *next += 1;
                    if pos == target {
                        Shape::Node(Box::new(Shape::Leaf), Box::new(Shape::Leaf))
                    } else {
                        Shape::Leaf
                    }
                }
                Shape::Node(l, r) => {
                    let nl = rebuild(l, next, target);
                    *next += 1;
                    let nr = rebuild(r, next, target);
                    Shape::Node(Box::new(nl), Box::new(nr))
                }
            }
        }
        let mut next = 0i64;
        Ok(FullBinaryTree::new(rebuild(&self.shape, &mut next, target)))
    }

    /// Remove the two leaf children of the simple branching point at `v`
    /// (the inverse of `expand`).
    pub fn contract(&self, v: i64) -> Result<FullBinaryTree, TreeError> {
        let verts = self.vertices();
        let leaf_at = |z: i64| verts.iter().any(|w| w.z == z && w.is_leaf);
        let ok = verts.iter().any(|vertex| {
            vertex.z == v
                && !vertex.is_leaf
                && vertex.left.map(&leaf_at).unwrap_or(false)
                && vertex.right.map(&leaf_at).unwrap_or(false)
        });
        if !ok {
            return Err(TreeError::NotASimpleBranch(v));
        }
        let target = v + self.root_raw();
        fn rebuild(shape: &Shape, next: &mut i64, target: i64) -> Shape {
            match shape {
                Shape::Leaf => {
                    *next += 1;
                    Shape::Leaf
                }
                Shape::Node(l, r) => {
                    let nl = rebuild(l, next, target);
                    let pos = *next;
                    *next += 1;
                    let nr = rebuild(r, next, target);
                    if pos == target {
                        Shape::Leaf
                    } else {
                        Shape::Node(Box::new(nl), Box::new(nr))
                    }
                }
            }
        }
        let mut next = 0i64;
        Ok(FullBinaryTree::new(rebuild(&self.shape, &mut next, target)))
    }
}

/// All full binary trees with exactly n leaves, in the canonical order
/// (by left-subtree size, then recursively), duplicate-free by construction.
pub fn enumerate_trees(n: usize) -> Result<Vec<FullBinaryTree>, TreeError> {
    if n == 0 {
        return Err(TreeError::BadArgs("trees need at least one leaf".into()));
    }
    if n > MAX_ENUM_LEAVES {
        return Err(TreeError::CapExceeded { n, cap: MAX_ENUM_LEAVES });
    }
    let mut table: Vec<Vec<Shape>> = vec![vec![], vec![Shape::Leaf]];
    for m in 2..=n {
        let mut level = Vec::new();
        for k in 1..m {
            for l in &table[k] {
                for r in &table[m - k] {
                    level.push(Shape::Node(Box::new(l.clone()), Box::new(r.clone())));
                }
            }
        }
        table.push(level);
    }
    Ok(table.pop().expect("n ≥ 1").into_iter().map(FullBinaryTree::new).collect())
}

/// Left comb: every right child is a leaf.
pub fn left_comb(n: usize) -> FullBinaryTree {
    assert!(n >= 1);
    let mut shape = Shape::Leaf;
    for _ in 1..n {
        shape = Shape::Node(Box::new(shape), Box::new(Shape::Leaf));
    }
    FullBinaryTree::new(shape)
}

/// Right comb: every left child is a leaf.
pub fn right_comb(n: usize) -> FullBinaryTree {
    assert!(n >= 1);
    let mut shape = Shape::Leaf;
    for _ in 1..n {
        shape = Shape::Node(Box::new(Shape::Leaf), Box::new(shape));
    }
    FullBinaryTree::new(shape)
}

/// n! as a big integer.
pub fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// k!! with the convention (−1)!! = 1 (and 0!! = 1).
pub fn double_factorial(k: i64) -> BigInt {
    if k <= 0 {
        return BigInt::one();
    }
    let mut acc = BigInt::one();
    let mut m = k;
    while m > 0 {
        acc *= BigInt::from(m);
        m -= 2;
    }
    acc
}

/// n-th Catalan number (2n)!/(n!(n+1)!).
pub fn catalan(n: usize) -> BigInt {
    factorial(2 * n) / (factorial(n) * factorial(n + 1))
}

/// Total mass of the tree measure as an exact monomial c·t^degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeMass {
    pub coefficient: BigRational,
    pub degree: usize,
}

impl TreeMass {
    pub fn eval(&self, t: f64) -> f64 {
        self.coefficient.to_f64().expect("coefficient fits in f64") * t.powi(self.degree as i32)
    }
}

/// mass(T, ·) via the convolution recursion, carried out on monomials:
/// T = (L, R) with n = n_L + n_R leaves has
/// c_T = c_L·c_R·(2n_L−2)!·(2n_R−2)!/(2n−3)! and degree 2n−2.
pub fn tree_mass_exact(tree: &FullBinaryTree) -> TreeMass {
    fn rec(shape: &Shape) -> (BigRational, usize) {
        match shape {
            Shape::Leaf => (BigRational::one(), 1),
            Shape::Node(l, r) => {
                let (cl, nl) = rec(l);
                let (cr, nr) = rec(r);
                let n = nl + nr;
                let num = factorial(2 * nl - 2) * factorial(2 * nr - 2);
                let den = factorial(2 * n - 3);
                (cl * cr * BigRational::new(num, den), n)
            }
        }
    }
    let (coefficient, n) = rec(&tree.shape);
    TreeMass { coefficient, degree: 2 * n - 2 }
}

/// mass(T, t): exact coefficient, float evaluation last.
pub fn tree_mass(tree: &FullBinaryTree, t: f64) -> f64 {
    assert!(t >= 0.0, "mass horizons are nonnegative, got {t}");
    tree_mass_exact(tree).eval(t)
}

/// Result of checking that the (n+1)-leaf trees are produced exactly once by
/// expanding each n-leaf tree at its admissible leaves (those at or right of
/// the last simple branching point minus one).
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub n: usize,
    /// |set of (n+1)-leaf trees|.
    pub expected: usize,
    /// Number of expansions generated.
    pub produced: usize,
    pub all_multiplicity_one: bool,
    pub pass: bool,
}

/// Verify the disjoint-union decomposition at level n → n+1.
pub fn check_decomposition(n: usize) -> Result<DecompositionReport, TreeError> {
    if n > 8 {
        return Err(TreeError::CapExceeded { n, cap: 8 });
    }
    let level = enumerate_trees(n)?;
    let next = enumerate_trees(n + 1)?;
    let mut multiplicity: HashMap<Shape, usize> = HashMap::new();
    let mut produced = 0usize;
    for tree in &level {
        // −∞ for the single-vertex tree: every leaf qualifies.
        let cutoff = tree.last_simple_branch().map(|b| b - 1).unwrap_or(i64::MIN);
        for v in tree.leaves() {
            if v >= cutoff {
                let expanded = tree.expand(v)?;
                *multiplicity.entry(expanded.shape.clone()).or_insert(0) += 1;
                produced += 1;
            }
        }
    }
    let all_multiplicity_one = next
        .iter()
        .all(|t| multiplicity.get(&t.shape).copied() == Some(1))
        && multiplicity.len() == next.len();
    Ok(DecompositionReport {
        n,
        expected: next.len(),
        produced,
        all_multiplicity_one,
        pass: all_multiplicity_one && produced == next.len(),
    })
}

/// Duration assignment on a tree: the root carries the full horizon and
/// every interior vertex splits its duration between its children.
#[derive(Debug, Clone)]
pub struct TPartition {
    tree: FullBinaryTree,
    durations: BTreeMap<i64, f64>,
    horizon: f64,
}

impl TPartition {
    pub fn new(
        tree: FullBinaryTree,
        durations: BTreeMap<i64, f64>,
        horizon: f64,
    ) -> Result<Self, TreeError> {
        let verts = tree.vertices();
        for v in &verts {
            let s = durations
                .get(&v.z)
                .copied()
                .ok_or_else(|| TreeError::BadPartition(format!("vertex {} missing", v.z)))?;
            if !(s >= 0.0) {
                return Err(TreeError::BadPartition(format!(
                    "duration at {} is negative: {s}",
                    v.z
                )));
            }
        }
        if durations.len() != verts.len() {
            return Err(TreeError::BadPartition("extra vertices in the assignment".into()));
        }
        let root = durations[&0];
        if (root - horizon).abs() > 1e-12 * horizon.max(1.0) {
            return Err(TreeError::BadPartition(format!(
                "root duration {root} must equal the horizon {horizon}"
            )));
        }
        for v in verts.iter().filter(|v| !v.is_leaf) {
            let (l, r) = (v.left.unwrap(), v.right.unwrap());
            let gap = (durations[&l] + durations[&r] - durations[&v.z]).abs();
            if gap > 1e-12 * horizon.max(1.0) {
                return Err(TreeError::BadPartition(format!(
                    "children of {} sum to {} ≠ {}",
                    v.z,
                    durations[&l] + durations[&r],
                    durations[&v.z]
                )));
            }
        }
        Ok(Self { tree, durations, horizon })
    }

    /// The even split: every interior vertex gives each child half.
    pub fn halving(tree: FullBinaryTree, horizon: f64) -> Self {
        fn assign(
            verts: &[VertexInfo],
            z: i64,
            amount: f64,
            out: &mut BTreeMap<i64, f64>,
        ) {
            out.insert(z, amount);
            let v = verts.iter().find(|v| v.z == z).expect("vertex exists");
            if let (Some(l), Some(r)) = (v.left, v.right) {
                assign(verts, l, amount / 2.0, out);
                assign(verts, r, amount / 2.0, out);
            }
        }
        let verts = tree.vertices();
        let mut durations = BTreeMap::new();
        assign(&verts, 0, horizon, &mut durations);
        Self { tree, durations, horizon }
    }

    pub fn tree(&self) -> &FullBinaryTree {
        &self.tree
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn duration(&self, z: i64) -> Option<f64> {
        self.durations.get(&z).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_traits::Zero;

    #[test]
    fn enumeration_matches_catalan_counts() {
        // |trees with n leaves| = C_{n−1} = (2(n−1))!/(n!(n−1)!).
        for n in 1..=8usize {
            let trees = enumerate_trees(n).unwrap();
            let expected = (factorial(2 * (n - 1)) / (factorial(n) * factorial(n - 1)))
                .to_usize()
                .unwrap();
            assert_eq!(trees.len(), expected, "n = {n}");
            // Duplicate-free.
            let distinct: std::collections::HashSet<_> =
                trees.iter().map(|t| t.shape().clone()).collect();
            assert_eq!(distinct.len(), trees.len());
        }
        assert_eq!(enumerate_trees(4).unwrap().len(), 5);
        assert!(matches!(enumerate_trees(11), Err(TreeError::CapExceeded { .. })));
        assert!(enumerate_trees(0).is_err());
    }

    #[test]
    fn embedding_shape() {
        for n in 1..=6usize {
            for tree in enumerate_trees(n).unwrap() {
                let verts = tree.vertices();
                // Consecutive integers with the root at 0.
                for (i, w) in verts.windows(2).enumerate() {
                    let _ = i;
                    assert_eq!(w[1].z - w[0].z, 1);
                }
                assert!(verts.iter().any(|v| v.z == 0));
                // Alternation: leaves at odd positions, interior at even —
                // single-vertex tree excepted (its root-leaf sits at 0).
                if n >= 2 {
                    for v in &verts {
                        assert_eq!(v.is_leaf, v.z.rem_euclid(2) == 1, "vertex {}", v.z);
                    }
                    assert_eq!(verts.first().unwrap().is_leaf, true);
                    assert_eq!(verts.last().unwrap().is_leaf, true);
                }
            }
        }
    }

    #[test]
    fn last_simple_branch_cases() {
        // Single vertex: no interior vertices at all (−∞ case).
        assert_eq!(FullBinaryTree::leaf().last_simple_branch(), None);
        // Two leaves: the root is the branching point, one leaf before it.
        let two = enumerate_trees(2).unwrap().pop().unwrap();
        assert_eq!(two.last_simple_branch(), Some(0));
        assert_eq!(two.leaves_before(0), 1);
        // Every tree with ≥ 2 leaves has one, it is interior, and its
        // children are leaves.
        for n in 2..=6usize {
            for tree in enumerate_trees(n).unwrap() {
                let b = tree.last_simple_branch().expect("n ≥ 2 always has one");
                let verts = tree.vertices();
                let vb = verts.iter().find(|v| v.z == b).unwrap();
                assert!(!vb.is_leaf);
                for child in [vb.left.unwrap(), vb.right.unwrap()] {
                    assert!(verts.iter().any(|v| v.z == child && v.is_leaf));
                }
            }
        }
    }

    #[test]
    fn expansion_round_trip_and_leaf_counting() {
        for n in 1..=6usize {
            for tree in enumerate_trees(n).unwrap() {
                let cutoff = tree.last_simple_branch().map(|b| b - 1).unwrap_or(i64::MIN);
                for v in tree.leaves() {
                    let expanded = tree.expand(v).unwrap();
                    assert_eq!(expanded.num_leaves(), n + 1);
                    if v >= cutoff {
                        // The fresh pair of leaves forms the *last* simple
                        // branch, and it gained exactly one leaf before it.
                        let b = expanded.last_simple_branch().unwrap();
                        assert_eq!(
                            expanded.leaves_before(b),
                            tree.leaves_before(v) + 1,
                            "n = {n}, v = {v}"
                        );
                        assert_eq!(expanded.contract(b).unwrap(), tree);
                    }
                }
            }
        }
        // Error paths.
        let two = enumerate_trees(2).unwrap().pop().unwrap();
        assert!(matches!(two.expand(0), Err(TreeError::NotALeaf(0))));
        assert!(matches!(two.contract(1), Err(TreeError::NotASimpleBranch(1))));
    }

    #[test]
    fn masses_in_closed_form() {
        // Single vertex: mass 1 at every horizon.
        assert_relative_eq!(tree_mass(&FullBinaryTree::leaf(), 3.7), 1.0);
        // Two leaves: t·∫₀ᵗ 1 ds = t².
        let two = enumerate_trees(2).unwrap().pop().unwrap();
        for t in [0.3, 1.0, 2.5] {
            assert_relative_eq!(tree_mass(&two, t), t * t, max_relative = 1e-14);
        }
        // Three-leaf combs: t·∫₀ᵗ s² ds = t⁴/3.
        for comb in [left_comb(3), right_comb(3)] {
            let mass = tree_mass_exact(&comb);
            assert_eq!(mass.degree, 4);
            assert_eq!(mass.coefficient, BigRational::new(BigInt::from(1), BigInt::from(3)));
        }
    }

    #[test]
    fn mass_bound_with_comb_equality() {
        // mass(T, t) ≤ t^{2n−2}/(2n−3)!!, equality exactly for combs.
        for n in 1..=8usize {
            let bound_coeff = BigRational::new(BigInt::one(), double_factorial(2 * n as i64 - 3));
            for tree in enumerate_trees(n).unwrap() {
                let mass = tree_mass_exact(&tree);
                assert_eq!(mass.degree, 2 * n - 2);
                assert!(mass.coefficient > BigRational::zero());
                assert!(
                    mass.coefficient <= bound_coeff,
                    "n = {n}: coefficient {} exceeds {}",
                    mass.coefficient,
                    bound_coeff
                );
                for t in [0.1f64, 0.5, 1.0] {
                    let bound = bound_coeff.to_f64().unwrap() * t.powi(2 * n as i32 - 2);
                    assert!(tree_mass(&tree, t) <= bound * (1.0 + 1e-12));
                }
            }
            assert_eq!(tree_mass_exact(&left_comb(n)).coefficient, bound_coeff);
            assert_eq!(tree_mass_exact(&right_comb(n)).coefficient, bound_coeff);
        }
    }

    #[test]
    fn decomposition_is_a_disjoint_union() {
        for n in 1..=8usize {
            let report = check_decomposition(n).unwrap();
            assert!(report.pass, "n = {n}: {report:?}");
            assert_eq!(report.produced, report.expected);
            assert_eq!(report.expected, catalan(n).to_usize().unwrap());
        }
        assert!(check_decomposition(9).is_err());
    }

    #[test]
    fn catalan_double_factorial_identity() {
        // |trees with n+1 leaves| / (2n−1)!! = 2ⁿ/(n+1)!, exactly.
        for n in 1..=7usize {
            let lhs = BigRational::new(
                catalan(n),
                double_factorial(2 * n as i64 - 1),
            );
            let rhs = BigRational::new(BigInt::from(1usize << n), factorial(n + 1));
            assert_eq!(lhs, rhs, "n = {n}");
        }
    }

    #[test]
    fn truncated_series_stays_below_double_exponential() {
        // 2·Σ_{k=0}^{N} x^k/(k+1)! ≤ 2e^x for every truncation N.
        for x in [0.5f64, 2.88, 10.0] {
            let mut partial = 0.0f64;
            let mut term = 1.0f64; // x^k/(k+1)! at k = 0
            for k in 0..60usize {
                partial += term;
                assert!(
                    2.0 * partial <= 2.0 * x.exp() + 1e-12,
                    "x = {x}, N = {k}: partial {partial}"
                );
                term *= x / (k as f64 + 2.0);
            }
        }
    }

    #[test]
    fn partitions_validate() {
        let tree = left_comb(3);
        let part = TPartition::halving(tree.clone(), 2.0);
        assert_relative_eq!(part.duration(0).unwrap(), 2.0);
        // Rebuilding through the validating constructor succeeds…
        let durations: BTreeMap<i64, f64> =
            tree.vertices().iter().map(|v| (v.z, part.duration(v.z).unwrap())).collect();
        assert!(TPartition::new(tree.clone(), durations.clone(), 2.0).is_ok());
        // …and tampering is caught.
        let mut bad = durations.clone();
        *bad.get_mut(&0).unwrap() = 1.5;
        assert!(TPartition::new(tree.clone(), bad, 2.0).is_err());
        let mut bad = durations;
        let leaf = tree.leaves()[0];
        *bad.get_mut(&leaf).unwrap() += 0.3;
        assert!(matches!(
            TPartition::new(tree, bad, 2.0),
            Err(TreeError::BadPartition(_))
        ));
    }
}
