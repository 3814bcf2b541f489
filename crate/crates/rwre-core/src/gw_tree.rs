//! Lazily grown Galton-Watson tree whose non-root vertices carry marks `A(x)`
//! and quenched transition probabilities.
//!
//! Vertices live in an arena: slot 0 is the artificial parent of the root
//! (the walk reflects off it back to the root with probability 1), slot 1 is
//! the root. Every vertex owns a stream key chained from its parent's key and
//! its child index, so a tree realization is a pure function of
//! `(laws, seed)` regardless of the order in which vertices are expanded.

use std::io::{self, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::law::{ALaw, OffspringLaw};
use crate::seeding::{domain, mix, rng_from_key};

/// Hard cap on lazy growth; see `MarkedTree::with_budget`.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// Handle to a vertex of a [`MarkedTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId(u32);

impl VertexId {
    /// The artificial parent of the root.
    pub const PARENT_OF_ROOT: VertexId = VertexId(0);
    pub const ROOT: VertexId = VertexId(1);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_parent_of_root(self) -> bool {
        self.0 == 0
    }
}

struct Node {
    parent: u32,
    child_index: u32,
    depth: i32,
    key: u64,
    mark: f64,
    expansion: Option<Expansion>,
}

#[derive(Clone)]
struct Expansion {
    children_start: u32,
    offspring: u32,
    p_parent: f64,
    child_probs: Box<[f64]>,
}

/// Public view of an expanded vertex: offspring count, children marks, and
/// the quenched transition row.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub offspring: usize,
    pub marks: Vec<f64>,
    pub p_parent: f64,
    pub p_children: Vec<f64>,
}

pub struct MarkedTree {
    a_law: ALaw,
    offspring: OffspringLaw,
    seed: u64,
    budget: usize,
    nodes: Vec<Node>,
}

impl MarkedTree {
    pub fn new(a_law: ALaw, offspring: OffspringLaw, seed: u64) -> Self {
        Self::with_budget(a_law, offspring, seed, DEFAULT_NODE_BUDGET)
    }

    /// `budget` bounds the number of arena nodes; breadth-first operations on
    /// supercritical trees fail with `BudgetExceeded` instead of exhausting
    /// memory.
    pub fn with_budget(a_law: ALaw, offspring: OffspringLaw, seed: u64, budget: usize) -> Self {
        let base = mix(seed, domain::TREE);
        let nodes = vec![
            Node {
                parent: u32::MAX,
                child_index: 0,
                depth: -1,
                key: mix(base, 0),
                mark: f64::NAN,
                expansion: None,
            },
            Node {
                parent: 0,
                child_index: 0,
                depth: 0,
                key: mix(base, 1),
                mark: f64::NAN,
                expansion: None,
            },
        ];
        MarkedTree { a_law, offspring, seed, budget, nodes }
    }

    pub fn root(&self) -> VertexId {
        VertexId::ROOT
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn a_law(&self) -> &ALaw {
        &self.a_law
    }

    pub fn offspring_law(&self) -> &OffspringLaw {
        &self.offspring
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn node(&self, v: VertexId) -> &Node {
        &self.nodes[v.index()]
    }

    /// Generation `|x|`; the artificial parent sits at -1.
    pub fn generation(&self, v: VertexId) -> i32 {
        self.node(v).depth
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        if v.is_parent_of_root() {
            None
        } else {
            Some(VertexId(self.node(v).parent))
        }
    }

    /// Mark `A(x)`; NaN for the root and the artificial parent, which carry
    /// no mark.
    pub fn mark(&self, v: VertexId) -> f64 {
        self.node(v).mark
    }

    /// Child-index path from the root ("address"); empty for the root.
    pub fn address(&self, v: VertexId) -> Vec<u32> {
        let mut addr = Vec::new();
        let mut cur = v;
        while cur != VertexId::ROOT && !cur.is_parent_of_root() {
            addr.push(self.node(cur).child_index);
            cur = VertexId(self.node(cur).parent);
        }
        addr.reverse();
        addr
    }

    /// Sample `(nu, marks)` for `v` if not already done and memoize.
    pub fn expand(&mut self, v: VertexId) -> Result<()> {
        if v.is_parent_of_root() {
            return Err(Error::InvalidVertex(
                "the artificial parent of the root cannot be expanded".into(),
            ));
        }
        if self.nodes[v.index()].expansion.is_some() {
            return Ok(());
        }
        let key = self.nodes[v.index()].key;
        let depth = self.nodes[v.index()].depth;
        let mut rng = rng_from_key(key);
        let nu = self.offspring.sample(&mut rng);
        if self.nodes.len() + nu > self.budget {
            return Err(Error::BudgetExceeded { budget: self.budget });
        }
        let mut marks = Vec::with_capacity(nu);
        let mut total = 0.0;
        for _ in 0..nu {
            let a = self.a_law.sample(&mut rng);
            total += a;
            marks.push(a);
        }
        let p_parent = 1.0 / (1.0 + total);
        let child_probs: Box<[f64]> = marks.iter().map(|a| a / (1.0 + total)).collect();
        let children_start = self.nodes.len() as u32;
        for (i, &mark) in marks.iter().enumerate() {
            let child_index = (i + 1) as u32;
            self.nodes.push(Node {
                parent: v.0,
                child_index,
                depth: depth + 1,
                key: mix(key, child_index as u64),
                mark,
                expansion: None,
            });
        }
        self.nodes[v.index()].expansion = Some(Expansion {
            children_start,
            offspring: nu as u32,
            p_parent,
            child_probs,
        });
        Ok(())
    }

    fn expansion(&mut self, v: VertexId) -> Result<&Expansion> {
        self.expand(v)?;
        Ok(self.nodes[v.index()].expansion.as_ref().expect("just expanded"))
    }

    /// Offspring count `nu(v)`.
    pub fn offspring_count(&mut self, v: VertexId) -> Result<usize> {
        Ok(self.expansion(v)?.offspring as usize)
    }

    pub fn children(&mut self, v: VertexId) -> Result<Vec<VertexId>> {
        let e = self.expansion(v)?;
        let start = e.children_start;
        let nu = e.offspring;
        Ok((0..nu).map(|i| VertexId(start + i)).collect())
    }

    /// Assembled transition row for `v`.
    pub fn record(&mut self, v: VertexId) -> Result<NodeRecord> {
        let e = self.expansion(v)?.clone();
        let start = e.children_start as usize;
        let marks = (0..e.offspring as usize)
            .map(|i| self.nodes[start + i].mark)
            .collect();
        Ok(NodeRecord {
            offspring: e.offspring as usize,
            marks,
            p_parent: e.p_parent,
            p_children: e.child_probs.to_vec(),
        })
    }

    /// One quenched step of the walk from `v`. At the artificial parent the
    /// only move is back to the root, with probability 1.
    pub fn step<R: Rng + ?Sized>(&mut self, v: VertexId, rng: &mut R) -> Result<VertexId> {
        if v.is_parent_of_root() {
            return Ok(VertexId::ROOT);
        }
        let parent = self.nodes[v.index()].parent;
        let e = self.expansion(v)?;
        let u: f64 = rng.random();
        if u < e.p_parent {
            return Ok(VertexId(parent));
        }
        let mut rest = u - e.p_parent;
        let start = e.children_start;
        let last = e.offspring - 1;
        for (i, &p) in e.child_probs.iter().enumerate() {
            if rest < p || i as u32 == last {
                return Ok(VertexId(start + i as u32));
            }
            rest -= p;
        }
        unreachable!("child probabilities cover the remaining mass")
    }

    /// Walk an address down from the root, expanding as needed.
    pub fn resolve(&mut self, address: &[u32]) -> Result<VertexId> {
        let mut cur = VertexId::ROOT;
        for &idx in address {
            let e = self.expansion(cur)?;
            if idx == 0 || idx > e.offspring {
                return Err(Error::InvalidVertex(format!(
                    "child index {idx} out of range 1..={}",
                    e.offspring
                )));
            }
            cur = VertexId(e.children_start + idx - 1);
        }
        Ok(cur)
    }

    /// Number of descendants of `u` exactly `n` levels below it, by
    /// breadth-first expansion.
    pub fn count_descendants(&mut self, u: VertexId, n: usize) -> Result<u64> {
        let mut frontier = vec![u];
        for _ in 0..n {
            let mut next = Vec::new();
            for v in frontier {
                next.extend(self.children(v)?);
            }
            frontier = next;
            if frontier.is_empty() {
                return Ok(0);
            }
        }
        Ok(frontier.len() as u64)
    }

    /// Generation size `Z_n`.
    pub fn generation_size(&mut self, n: usize) -> Result<u64> {
        self.count_descendants(VertexId::ROOT, n)
    }

    /// Debug dump: one line per expanded vertex, `address TAB nu TAB marks`.
    pub fn dump<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            let Some(e) = &node.expansion else { continue };
            let v = VertexId(i as u32);
            let addr = self.address(v);
            let addr_str = if addr.is_empty() {
                "e".to_string()
            } else {
                addr.iter().map(u32::to_string).collect::<Vec<_>>().join(".")
            };
            let marks = (0..e.offspring as usize)
                .map(|k| format!("{}", self.nodes[e.children_start as usize + k].mark))
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(w, "{addr_str}\t{}\t{marks}", e.offspring)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_key;

    fn line_tree(mark: f64, seed: u64) -> MarkedTree {
        MarkedTree::new(ALaw::constant(mark).unwrap(), OffspringLaw::line(), seed)
    }

    #[test]
    fn expand_symmetric_split() {
        // nu = 1 and A(child) = 1: both transition probabilities are 1/2.
        let mut tree = line_tree(1.0, 1);
        let rec = tree.record(tree.root()).unwrap();
        assert_eq!(rec.offspring, 1);
        assert_eq!(rec.p_parent, 0.5);
        assert_eq!(rec.p_children, vec![0.5]);
    }

    #[test]
    fn expand_two_children_marks_two() {
        // Marks (2, 2): parent 1/5, children 2/5 each.
        let mut tree = MarkedTree::new(
            ALaw::constant(2.0).unwrap(),
            OffspringLaw::regular(2),
            3,
        );
        let rec = tree.record(tree.root()).unwrap();
        assert_eq!(rec.offspring, 2);
        assert!((rec.p_parent - 0.2).abs() < 1e-15);
        for p in &rec.p_children {
            assert!((p - 0.4).abs() < 1e-15);
        }
    }

    #[test]
    fn artificial_parent_reflects_to_root() {
        let mut tree = line_tree(1.0, 4);
        let mut rng = rng_from_key(0);
        let next = tree.step(VertexId::PARENT_OF_ROOT, &mut rng).unwrap();
        assert_eq!(next, tree.root());
        assert!(tree.expand(VertexId::PARENT_OF_ROOT).is_err());
    }

    #[test]
    fn descendant_counts() {
        let mut tree = MarkedTree::new(
            ALaw::constant(1.0).unwrap(),
            OffspringLaw::regular(2),
            9,
        );
        let root = tree.root();
        assert_eq!(tree.count_descendants(root, 0).unwrap(), 1);
        assert_eq!(tree.count_descendants(root, 3).unwrap(), 8);
        let mut line = line_tree(2.0, 10);
        assert_eq!(line.count_descendants(VertexId::ROOT, 10).unwrap(), 1);
        let mut ternary = MarkedTree::new(
            ALaw::constant(1.0).unwrap(),
            OffspringLaw::regular(3),
            11,
        );
        assert_eq!(ternary.generation_size(0).unwrap(), 1);
        assert_eq!(ternary.generation_size(2).unwrap(), 9);
    }

    #[test]
    fn budget_guard_trips() {
        let mut tree = MarkedTree::with_budget(
            ALaw::constant(1.0).unwrap(),
            OffspringLaw::regular(2),
            5,
            200,
        );
        let err = tree.generation_size(12).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }

    #[test]
    fn transition_rows_sum_to_one() {
        let a = ALaw::uniform(0.5, 2.0).unwrap();
        let off = OffspringLaw::new(&[0.3, 0.4, 0.3]).unwrap();
        let mut tree = MarkedTree::new(a, off, 21);
        let mut frontier = vec![tree.root()];
        let mut checked = 0;
        'outer: loop {
            let mut next = Vec::new();
            for v in frontier {
                let rec = tree.record(v).unwrap();
                let total: f64 = rec.p_parent + rec.p_children.iter().sum::<f64>();
                assert!((total - 1.0).abs() <= 1e-12, "row sums to {total}");
                next.extend(tree.children(v).unwrap());
                checked += 1;
                if checked >= 10_000 {
                    break 'outer;
                }
            }
            frontier = next;
        }
    }

    #[test]
    fn seed_determinism_is_query_order_independent() {
        let a = ALaw::uniform(0.5, 2.0).unwrap();
        let off = OffspringLaw::new(&[0.5, 0.5]).unwrap();
        let mut t1 = MarkedTree::new(a.clone(), off.clone(), 77);
        let mut t2 = MarkedTree::new(a, off, 77);

        // Expand t1 depth-first down the first-child spine, then siblings;
        // expand t2 breadth-first. Records must agree bit for bit.
        let mut spine = vec![t1.root()];
        for _ in 0..6 {
            let v = *spine.last().unwrap();
            let kids = t1.children(v).unwrap();
            spine.push(kids[0]);
        }
        let mut frontier = vec![t2.root()];
        for _ in 0..7 {
            let mut next = Vec::new();
            for v in frontier {
                next.extend(t2.children(v).unwrap());
            }
            frontier = next;
        }

        // Compare along addresses.
        let mut addr = Vec::new();
        for depth in 0..6 {
            let v1 = t1.resolve(&addr).unwrap();
            let v2 = t2.resolve(&addr).unwrap();
            assert_eq!(t1.record(v1).unwrap(), t2.record(v2).unwrap(), "depth {depth}");
            addr.push(1);
        }
    }

    #[test]
    fn empirical_generation_mean_matches_branching_mean() {
        // E[Z_n] = m^n; three standard errors at n <= 6.
        let off = OffspringLaw::new(&[0.5, 0.5]).unwrap();
        let a = ALaw::constant(1.0).unwrap();
        let replicates = 20_000u64;
        for n in [1usize, 3, 6] {
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for k in 0..replicates {
                let mut tree = MarkedTree::new(a.clone(), off.clone(), 1000 + k);
                let z = tree.generation_size(n).unwrap() as f64;
                sum += z;
                sumsq += z * z;
            }
            let mean = sum / replicates as f64;
            let var = sumsq / replicates as f64 - mean * mean;
            let se = (var / replicates as f64).sqrt();
            let expected = 1.5f64.powi(n as i32);
            assert!(
                (mean - expected).abs() <= 3.0 * se,
                "n={n}: mean {mean}, expected {expected}, se {se}"
            );
        }
    }

    #[test]
    fn small_generation_bound_holds() {
        // E[Z_n 1{Z_n <= b}] <= b n^b q1^(n-b) plus Monte Carlo slack.
        let n = 12usize;
        let replicates = 100_000u64;
        for &q1 in &[0.5, 0.9] {
            let off = OffspringLaw::new(&[q1, 1.0 - q1]).unwrap();
            let a = ALaw::constant(1.0).unwrap();
            let mut zs = Vec::with_capacity(replicates as usize);
            for k in 0..replicates {
                let mut tree = MarkedTree::new(a.clone(), off.clone(), 555_000 + k);
                zs.push(tree.generation_size(n).unwrap());
            }
            for b in [1u64, 2, 3] {
                let samples: Vec<f64> = zs
                    .iter()
                    .map(|&z| if z <= b { z as f64 } else { 0.0 })
                    .collect();
                let mean = samples.iter().sum::<f64>() / samples.len() as f64;
                let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                    / (samples.len() - 1) as f64;
                let se = (var / samples.len() as f64).sqrt();
                let bound = b as f64 * (n as f64).powi(b as i32) * q1.powi(n as i32 - b as i32);
                assert!(
                    mean <= bound + 3.0 * se,
                    "q1={q1} b={b}: mean {mean} > bound {bound} + 3se {se}"
                );
            }
        }
    }

    #[test]
    fn dump_lists_expanded_vertices() {
        let mut tree = MarkedTree::new(
            ALaw::constant(2.0).unwrap(),
            OffspringLaw::regular(2),
            8,
        );
        let root = tree.root();
        let kids = tree.children(root).unwrap();
        tree.children(kids[0]).unwrap();
        let mut buf = Vec::new();
        tree.dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("e\t2\t"));
        assert!(lines[1].starts_with("1\t2\t"));
    }
}
