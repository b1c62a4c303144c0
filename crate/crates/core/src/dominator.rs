//! Dominator trees of seller-rooted graphs.
//!
//! Computed with the iterative data-flow formulation of Cooper, Harvey and
//! Kennedy over a reverse postorder. Subtree membership (`y ∈ α(x)`) is an
//! O(1) interval test on a preorder numbering of the tree.

use fixedbitset::FixedBitSet;

use crate::graph::DirectedGraph;

const UNDEF: usize = usize::MAX;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DominatorTree {
    root: usize,
    idom: Vec<usize>,
    children: Vec<Vec<usize>>,
    pre: Vec<usize>,
    size: Vec<usize>,
    depth: Vec<usize>,
}

/// Dominator tree of `g` rooted at `root`. Every vertex of `g` must be
/// reachable from `root`.
pub fn dominator_tree(g: &DirectedGraph, root: usize) -> DominatorTree {
    let n = g.len();
    let order = reverse_postorder(g, root);
    assert_eq!(order.len(), n, "every vertex must be reachable from the root");
    let mut rpo = vec![0usize; n];
    for (k, &v) in order.iter().enumerate() {
        rpo[v] = k;
    }

    let mut idom = vec![UNDEF; n];
    idom[root] = root;
    let mut changed = true;
    while changed {
        changed = false;
        for &b in order.iter().skip(1) {
            let mut new_idom = UNDEF;
            for &p in g.pred(b) {
                if idom[p] == UNDEF {
                    continue;
                }
                new_idom = if new_idom == UNDEF { p } else { intersect(&idom, &rpo, p, new_idom) };
            }
            if idom[b] != new_idom {
                idom[b] = new_idom;
                changed = true;
            }
        }
    }

    let mut children = vec![Vec::new(); n];
    for v in 0..n {
        if v != root {
            children[idom[v]].push(v);
        }
    }

    let mut pre = vec![0usize; n];
    let mut size = vec![1usize; n];
    let mut depth = vec![0usize; n];
    let mut counter = 0;
    // (vertex, next child position)
    let mut stack = vec![(root, 0usize)];
    pre[root] = counter;
    counter += 1;
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        if *next < children[v].len() {
            let c = children[v][*next];
            *next += 1;
            pre[c] = counter;
            counter += 1;
            depth[c] = depth[v] + 1;
            stack.push((c, 0));
        } else {
            stack.pop();
            if let Some(&(parent, _)) = stack.last() {
                size[parent] += size[v];
            }
        }
    }

    DominatorTree { root, idom, children, pre, size, depth }
}

fn intersect(idom: &[usize], rpo: &[usize], mut a: usize, mut b: usize) -> usize {
    while a != b {
        while rpo[a] > rpo[b] {
            a = idom[a];
        }
        while rpo[b] > rpo[a] {
            b = idom[b];
        }
    }
    a
}

fn reverse_postorder(g: &DirectedGraph, root: usize) -> Vec<usize> {
    let mut seen = FixedBitSet::with_capacity(g.len());
    let mut post = Vec::with_capacity(g.len());
    let mut stack = vec![(root, 0usize)];
    seen.insert(root);
    while let Some(&mut (v, ref mut next)) = stack.last_mut() {
        let succ = g.succ(v);
        if *next < succ.len() {
            let w = succ[*next];
            *next += 1;
            if !seen.contains(w) {
                seen.insert(w);
                stack.push((w, 0));
            }
        } else {
            post.push(v);
            stack.pop();
        }
    }
    post.reverse();
    post
}

impl DominatorTree {
    pub fn root(&self) -> usize {
        self.root
    }

    pub fn len(&self) -> usize {
        self.idom.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idom.is_empty()
    }

    /// Immediate dominator; `None` for the root.
    pub fn idom(&self, v: usize) -> Option<usize> {
        (v != self.root).then(|| self.idom[v])
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    /// True iff `x` dominates `y` (reflexive).
    pub fn dominates(&self, x: usize, y: usize) -> bool {
        self.pre[x] <= self.pre[y] && self.pre[y] < self.pre[x] + self.size[x]
    }

    /// `α(x)`: the vertices `x` dominates, `x` included.
    pub fn dominated_set(&self, x: usize) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.len());
        for y in 0..self.len() {
            if self.dominates(x, y) {
                out.insert(y);
            }
        }
        out
    }

    /// `A(x)`: the complement of `α(x)`.
    pub fn undominated_set(&self, x: usize) -> FixedBitSet {
        let mut out = self.dominated_set(x);
        out.toggle_range(..);
        out
    }

    pub fn subtree_size(&self, x: usize) -> usize {
        self.size[x]
    }

    /// Root-to-`x` path in the tree: `[root, …, idom(x), x]`.
    pub fn dominator_sequence(&self, x: usize) -> Vec<usize> {
        let mut seq = Vec::with_capacity(self.depth[x] + 1);
        let mut v = x;
        seq.push(v);
        while v != self.root {
            v = self.idom[v];
            seq.push(v);
        }
        seq.reverse();
        seq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::reachable_subgraph;
    use proptest::prelude::*;

    /// `y ∈ α(x)` iff `y` is unreachable from the root once `x` is deleted.
    fn deletion_oracle(g: &DirectedGraph, root: usize, x: usize) -> FixedBitSet {
        if x == root {
            let mut all = FixedBitSet::with_capacity(g.len());
            all.insert_range(..);
            return all;
        }
        let reach = g.reachable_avoiding(root, |v| v == x);
        let mut out = FixedBitSet::with_capacity(g.len());
        for y in 0..g.len() {
            if !reach.contains(y) {
                out.insert(y);
            }
        }
        out
    }

    fn named(p: &crate::ReportProfile) -> (crate::ReachableGraph, DominatorTree) {
        let g = reachable_subgraph(p).unwrap();
        let t = dominator_tree(g.graph(), 0);
        (g, t)
    }

    #[test]
    fn theta1_idoms_match_the_deletion_oracle() {
        let (g, t) = named(&fixtures::theta1());
        let ix = |v: &str| g.index_of(&v.into()).unwrap();
        assert_eq!(t.idom(ix("a")), Some(0));
        assert_eq!(t.idom(ix("b")), Some(0));
        assert_eq!(t.idom(ix("c")), Some(ix("a")));
        assert_eq!(t.idom(ix("d")), Some(ix("a")));
        for x in 0..g.len() {
            assert_eq!(t.dominated_set(x), deletion_oracle(g.graph(), 0, x));
        }
        let alpha_a: Vec<_> = t.dominated_set(ix("a")).ones().map(|v| g.id(v).to_string()).collect();
        assert_eq!(alpha_a, ["a", "c", "d"]);
        assert_eq!(t.dominator_sequence(ix("d")), vec![0, ix("a"), ix("d")]);
        assert_eq!(t.dominator_sequence(0), vec![0]);
    }

    #[test]
    fn theta2_everyone_hangs_off_the_seller() {
        let (g, t) = named(&fixtures::theta2());
        for v in g.buyers() {
            assert_eq!(t.idom(v), Some(0));
            assert_eq!(t.dominated_set(v), deletion_oracle(g.graph(), 0, v));
        }
        let c = g.index_of(&"c".into()).unwrap();
        assert_eq!(t.dominated_set(c).ones().collect::<Vec<_>>(), vec![c]);
        let d = g.index_of(&"d".into()).unwrap();
        assert_eq!(t.dominator_sequence(d), vec![0, d]);
        assert_eq!(t.dominated_set(0).count_ones(..), g.len());
    }

    #[test]
    fn chain() {
        let g = DirectedGraph::from_arcs(3, [(0, 1), (1, 2)]);
        let t = dominator_tree(&g, 0);
        assert_eq!(t.idom(2), Some(1));
        assert_eq!(t.dominated_set(1).ones().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(t.undominated_set(1).ones().collect::<Vec<_>>(), vec![0]);
    }

    fn arb_rooted(max_n: usize) -> impl Strategy<Value = DirectedGraph> {
        crate::graph::tests::arb_digraph(max_n).prop_map(|g| {
            // restrict to what the root reaches, keeping the index order
            let reach = g.reachable_from(0);
            let map: Vec<usize> = reach.ones().collect();
            let mut local = vec![usize::MAX; g.len()];
            for (i, &v) in map.iter().enumerate() {
                local[v] = i;
            }
            DirectedGraph::from_arcs(
                map.len(),
                g.arcs().filter(|&(u, v)| reach.contains(u) && reach.contains(v)).map(|(u, v)| (local[u], local[v])),
            )
        })
    }

    proptest! {
        #[test]
        fn dominated_sets_match_deletion_oracle(g in arb_rooted(10)) {
            let t = dominator_tree(&g, 0);
            for x in 0..g.len() {
                prop_assert_eq!(t.dominated_set(x), deletion_oracle(&g, 0, x));
            }
        }

        #[test]
        fn dominator_sequences_are_strict_chains(g in arb_rooted(10)) {
            let t = dominator_tree(&g, 0);
            for x in 0..g.len() {
                let seq = t.dominator_sequence(x);
                prop_assert_eq!(seq[0], 0);
                prop_assert_eq!(*seq.last().unwrap(), x);
                for w in seq.windows(2) {
                    prop_assert_eq!(t.idom(w[1]), Some(w[0]));
                    let (outer, inner) = (t.dominated_set(w[0]), t.dominated_set(w[1]));
                    prop_assert!(inner.is_subset(&outer) && inner != outer);
                }
            }
        }
    }
}
