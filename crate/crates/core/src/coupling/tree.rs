//! Family trees labelled by strings of positive integers, and the
//! relabelling that turns same-instant children into siblings of their
//! parent.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::point_process::{sample_edge_life, ModelParams};
use crate::rng;

use super::advance_births;

/// `label` is `(a_1, ..., a_k)`: the `a_k`-th child of `(a_1, ..., a_{k-1})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeNode {
    pub label: Vec<u32>,
    pub birth_time: f64,
}

#[derive(Debug, Clone)]
struct Node {
    birth_time: f64,
    parent: Option<usize>,
    children: Vec<usize>,
}

/// A finite family tree. Children are kept in birth order; the JSON form lists
/// nodes in shortlex order of their labels.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawTree", into = "RawTree")]
pub struct FamilyTree {
    arena: Vec<Node>,
    roots: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct RawTree {
    nodes: Vec<TreeNode>,
}

impl TryFrom<RawTree> for FamilyTree {
    type Error = Error;

    fn try_from(raw: RawTree) -> Result<Self> {
        FamilyTree::from_nodes(&raw.nodes)
    }
}

impl From<FamilyTree> for RawTree {
    fn from(t: FamilyTree) -> Self {
        RawTree { nodes: t.nodes() }
    }
}

impl PartialEq for FamilyTree {
    fn eq(&self, other: &Self) -> bool {
        self.nodes() == other.nodes()
    }
}

fn malformed(label: &[u32], reason: impl Into<String>) -> Error {
    Error::MalformedTree {
        label: label.to_vec(),
        reason: reason.into(),
    }
}

impl FamilyTree {
    /// Validates and builds a tree; the error names the first offending node
    /// in input order.
    pub fn from_nodes(nodes: &[TreeNode]) -> Result<Self> {
        let mut index: HashMap<&[u32], usize> = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if n.label.is_empty() {
                return Err(malformed(&n.label, "empty label"));
            }
            if n.label.contains(&0) {
                return Err(malformed(&n.label, "label entries must be positive"));
            }
            if !(n.birth_time.is_finite() && n.birth_time >= 0.0) {
                return Err(malformed(
                    &n.label,
                    format!("birth time {} is not finite and nonnegative", n.birth_time),
                ));
            }
            if index.insert(&n.label, i).is_some() {
                return Err(malformed(&n.label, "duplicate label"));
            }
        }
        for n in nodes {
            let (last, prefix) = n.label.split_last().expect("nonempty");
            if !prefix.is_empty() {
                match index.get(prefix) {
                    None => return Err(malformed(&n.label, "parent label missing")),
                    Some(&p) if nodes[p].birth_time > n.birth_time => {
                        return Err(malformed(&n.label, "born before its parent"));
                    }
                    _ => {}
                }
            }
            if *last > 1 {
                let mut prev = n.label.clone();
                *prev.last_mut().expect("nonempty") -= 1;
                match index.get(prev.as_slice()) {
                    None => return Err(malformed(&n.label, "sibling indices are not contiguous from 1")),
                    Some(&s) if nodes[s].birth_time > n.birth_time => {
                        return Err(malformed(&n.label, "siblings are not in birth order"));
                    }
                    _ => {}
                }
            }
        }
        let mut arena: Vec<Node> = nodes
            .iter()
            .map(|n| Node {
                birth_time: n.birth_time,
                parent: None,
                children: Vec::new(),
            })
            .collect();
        let mut roots: Vec<(u32, usize)> = Vec::new();
        let mut kids: Vec<Vec<(u32, usize)>> = vec![Vec::new(); nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            let (last, prefix) = n.label.split_last().expect("nonempty");
            if prefix.is_empty() {
                roots.push((*last, i));
            } else {
                let p = index[prefix];
                arena[i].parent = Some(p);
                kids[p].push((*last, i));
            }
        }
        for (p, mut ks) in kids.into_iter().enumerate() {
            ks.sort_unstable();
            arena[p].children = ks.into_iter().map(|k| k.1).collect();
        }
        roots.sort_unstable();
        Ok(Self {
            arena,
            roots: roots.into_iter().map(|r| r.1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.arena.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arena.is_empty()
    }

    /// `(arena index, depth)` in shortlex order of labels.
    fn shortlex(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let mut queue: VecDeque<(usize, usize)> = self.roots.iter().map(|&r| (r, 1)).collect();
        std::iter::from_fn(move || {
            let (i, d) = queue.pop_front()?;
            queue.extend(self.arena[i].children.iter().map(|&c| (c, d + 1)));
            Some((i, d))
        })
    }

    /// Nodes with their current labels, in shortlex order.
    pub fn nodes(&self) -> Vec<TreeNode> {
        let mut labels: Vec<Vec<u32>> = vec![Vec::new(); self.arena.len()];
        for (pos, &r) in self.roots.iter().enumerate() {
            labels[r] = vec![pos as u32 + 1];
        }
        let mut out = Vec::with_capacity(self.arena.len());
        for (i, _) in self.shortlex() {
            for (pos, &c) in self.arena[i].children.iter().enumerate() {
                let mut l = labels[i].clone();
                l.push(pos as u32 + 1);
                labels[c] = l;
            }
            out.push(TreeNode {
                label: labels[i].clone(),
                birth_time: self.arena[i].birth_time,
            });
        }
        out
    }

    fn is_red(&self, i: usize) -> bool {
        self.arena[i]
            .parent
            .is_some_and(|p| self.arena[p].birth_time == self.arena[i].birth_time)
    }

    /// First node, in shortlex order, born at the same instant as its parent.
    fn first_red(&self) -> Option<(usize, usize)> {
        self.shortlex().find(|&(i, _)| self.is_red(i))
    }

    /// Labels of length at most `depth` that contain a red position.
    pub fn red_within(&self, depth: usize) -> usize {
        self.shortlex().filter(|&(i, d)| d <= depth && self.is_red(i)).count()
    }

    /// Sorted birth times.
    pub fn birth_times(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.arena.iter().map(|n| n.birth_time).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn max_depth(&self) -> usize {
        self.shortlex().map(|(_, d)| d).max().unwrap_or(0)
    }
}

/// Relabelled tree. `cap_hit` means a red label longer than the cap remains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelabelOutcome {
    pub tree: FamilyTree,
    pub cap_hit: bool,
    pub steps: usize,
}

/// Repeatedly takes the first red label `(B, a, r)` in shortlex order and
/// makes it the sibling `(B, b)` of its parent, where `b - 1` is the largest
/// index among `(B, x)` born at the same instant; later siblings shift up and
/// the parent's remaining children close the gap. Stops when the first red
/// label is longer than `depth_cap`.
pub fn relabel_tree(tree: &FamilyTree, depth_cap: usize) -> Result<RelabelOutcome> {
    if depth_cap == 0 {
        return Err(param("depth_cap", "must be positive"));
    }
    let mut t = tree.clone();
    let mut steps = 0;
    loop {
        let Some((a, depth)) = t.first_red() else {
            return Ok(RelabelOutcome {
                tree: t,
                cap_hit: false,
                steps,
            });
        };
        if depth > depth_cap {
            return Ok(RelabelOutcome {
                tree: t,
                cap_hit: true,
                steps,
            });
        }
        let p = t.arena[a].parent.expect("red nodes have a parent");
        let g = t.arena[p].parent;
        let birth = t.arena[a].birth_time;
        t.arena[p].children.retain(|&c| c != a);
        let arena = &t.arena;
        let siblings = match g {
            Some(g) => &arena[g].children,
            None => &t.roots,
        };
        let b = 1
            + siblings
                .iter()
                .rposition(|&s| arena[s].birth_time == birth)
                .expect("the parent is a coeval sibling")
            + 1;
        match g {
            Some(g) => t.arena[g].children.insert(b - 1, a),
            None => t.roots.insert(b - 1, a),
        }
        t.arena[a].parent = g;
        steps += 1;
    }
}

/// Nodes born at or before `t`.
pub fn births_up_to(tree: &FamilyTree, t: f64) -> usize {
    tree.arena.iter().filter(|n| n.birth_time <= t).count()
}

/// Family tree of a single-ancestor process whose lives are advanced with
/// `advance_births(life, t_adv, eps)`, so that children born at age 0 tie
/// with their parent. Growth stops at `horizon` or `max_nodes`.
pub fn random_tied_tree(
    params: &ModelParams,
    horizon: f64,
    t_adv: f64,
    eps: f64,
    max_nodes: usize,
    seed: u64,
) -> Result<FamilyTree> {
    if max_nodes == 0 {
        return Err(param("max_nodes", "must be positive"));
    }
    let mut arena = vec![Node {
        birth_time: 0.0,
        parent: None,
        children: Vec::new(),
    }];
    let mut queue = VecDeque::from([0usize]);
    'grow: while let Some(i) = queue.pop_front() {
        let birth = arena[i].birth_time;
        let remaining = horizon - birth;
        if remaining <= 0.0 {
            continue;
        }
        let life = sample_edge_life(params, remaining, &mut rng::individual_stream(seed, i as u64))?;
        let life = advance_births(&life, t_adv, eps)?;
        for (&age, &jump) in life.event_ages.iter().zip(&life.jump_sizes) {
            for _ in 0..jump {
                if arena.len() == max_nodes {
                    break 'grow;
                }
                let c = arena.len();
                arena.push(Node {
                    birth_time: birth + age,
                    parent: Some(i),
                    children: Vec::new(),
                });
                arena[i].children.push(c);
                queue.push_back(c);
            }
        }
    }
    Ok(FamilyTree { arena, roots: vec![0] })
}
