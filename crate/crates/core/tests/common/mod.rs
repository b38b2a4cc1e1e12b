//! Reference implementations used as test oracles. They share no code with
//! the library's graph or fold routines.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use competency_core::{CompetencyId, RelationType};

pub type Edge = (String, String, RelationType);

/// Connected components of the Matches edges, by breadth-first search.
/// Components are sorted by smallest member; members ascending.
pub fn components(nodes: &[String], edges: &[Edge]) -> Vec<Vec<String>> {
    let mut adjacent: BTreeMap<&str, Vec<&str>> =
        nodes.iter().map(|n| (n.as_str(), vec![])).collect();
    for (a, b, kind) in edges {
        if *kind == RelationType::Matches {
            adjacent.get_mut(a.as_str()).unwrap().push(b);
            adjacent.get_mut(b.as_str()).unwrap().push(a);
        }
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut sorted: Vec<&String> = nodes.iter().collect();
    sorted.sort();
    for start in sorted {
        if !seen.insert(start.as_str()) {
            continue;
        }
        let mut component = vec![start.clone()];
        let mut queue = VecDeque::from([start.as_str()]);
        while let Some(n) = queue.pop_front() {
            for m in &adjacent[n] {
                if seen.insert(m) {
                    component.push(m.to_string());
                    queue.push_back(m);
                }
            }
        }
        component.sort();
        out.push(component);
    }
    out
}

pub fn component_of(components: &[Vec<String>]) -> BTreeMap<String, usize> {
    components
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.iter().map(move |m| (m.clone(), i)))
        .collect()
}

/// (before, after) pairs between components induced by Assumes/Extends.
pub fn ordering_pairs(nodes: &[String], edges: &[Edge]) -> (Vec<Vec<String>>, Vec<(usize, usize)>) {
    let comps = components(nodes, edges);
    let of = component_of(&comps);
    let pairs = edges
        .iter()
        .filter(|(_, _, k)| matches!(k, RelationType::Assumes | RelationType::Extends))
        .map(|(tail, head, _)| (of[head], of[tail]))
        .collect();
    (comps, pairs)
}

/// Acyclicity via transitive closure (Floyd-Warshall style).
pub fn is_acyclic(nodes: &[String], edges: &[Edge]) -> bool {
    let (comps, pairs) = ordering_pairs(nodes, edges);
    let n = comps.len();
    let mut reach = vec![vec![false; n]; n];
    for (a, b) in pairs {
        reach[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    (0..n).all(|i| !reach[i][i])
}

/// Whether a relation set satisfies every graph rule.
pub fn is_valid(nodes: &[String], edges: &[Edge]) -> bool {
    let mut seen = BTreeSet::new();
    for (tail, head, kind) in edges {
        if tail == head {
            return false;
        }
        let key = match kind {
            RelationType::Relates | RelationType::Matches => {
                let (a, b) = if tail < head {
                    (tail, head)
                } else {
                    (head, tail)
                };
                (a.clone(), b.clone(), *kind)
            }
            _ => (tail.clone(), head.clone(), *kind),
        };
        if !seen.insert(key) {
            return false;
        }
    }
    is_acyclic(nodes, edges)
}

/// Every permutation of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, items: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(items.clone());
            return;
        }
        heap(k - 1, items, out);
        for i in 0..k - 1 {
            if k.is_multiple_of(2) {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
            heap(k - 1, items, out);
        }
    }
    let mut items: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    heap(n, &mut items, &mut out);
    out
}

/// All orders of `0..n` in which each `(before, after)` pair is respected.
pub fn valid_orders(n: usize, pairs: &[(usize, usize)]) -> Vec<Vec<usize>> {
    permutations(n)
        .into_iter()
        .filter(|order| {
            let mut pos = vec![0; n];
            for (i, c) in order.iter().enumerate() {
                pos[*c] = i;
            }
            pairs.iter().all(|(a, b)| pos[*a] < pos[*b])
        })
        .collect()
}

pub fn ids(names: &[String]) -> Vec<CompetencyId> {
    names
        .iter()
        .map(|n| CompetencyId::from(n.as_str()))
        .collect()
}
