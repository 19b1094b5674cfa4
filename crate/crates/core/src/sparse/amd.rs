//! Approximate minimum degree ordering.
//!
//! Quotient-graph minimum degree in the style of Amestoy, Davis and Duff: eliminated
//! variables become elements, external degrees are replaced by the usual upper bound
//! `min(n_rem - |i|, d_i + |Lp \ i|, |Ai \ i| + |Lp \ i| + Σ |Le \ Lp|)`, elements whose
//! members are all covered by the new element are absorbed, and indistinguishable variables
//! are merged into supervariables and eliminated together.
//!
//! Rows that are dense (adjacent to every other vertex, or with degree above
//! `max(16, 10·sqrt(n))`) are removed up front and ordered last. Ties in the minimum degree are
//! broken by the lowest original index, so the ordering is deterministic.

use std::collections::{BTreeSet, HashMap};

use super::{CscMatrix, Permutation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Variable,
    Element,
    /// Element absorbed into a later element.
    Dead,
    /// Variable merged into a supervariable.
    Merged,
}

/// Symmetric adjacency lists (no self loops) of the pattern `A + Aᵀ`.
pub(crate) fn symmetric_adjacency(pattern: &CscMatrix) -> Result<Vec<Vec<usize>>> {
    if !pattern.is_square() {
        return Err(Error::NotSquare {
            nrows: pattern.nrows(),
            ncols: pattern.ncols(),
        });
    }
    let n = pattern.ncols();
    let mut adj = vec![Vec::new(); n];
    for (i, j, _) in pattern.iter() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    Ok(adj)
}

fn dense_threshold(n: usize) -> usize {
    ((10.0 * (n as f64).sqrt()) as usize).max(16)
}

/// Computes an approximate-minimum-degree ordering of a square pattern. The pattern is
/// symmetrized internally; values are ignored.
pub fn amd_order(pattern: &CscMatrix) -> Result<Permutation> {
    let adj = symmetric_adjacency(pattern)?;
    let n = adj.len();
    if n == 0 {
        return Ok(Permutation::identity(0));
    }

    let threshold = dense_threshold(n);
    let dense: Vec<bool> = adj
        .iter()
        .map(|a| n > 2 && (a.len() + 1 == n || a.len() > threshold))
        .collect();

    let mut kind = vec![Node::Variable; n];
    let mut nv = vec![1usize; n];
    let mut vadj: Vec<Vec<usize>> = adj
        .iter()
        .map(|a| a.iter().copied().filter(|&v| !dense[v]).collect())
        .collect();
    let mut eadj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut lmembers: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut degree: Vec<usize> = vadj.iter().map(Vec::len).collect();

    let mut queue = BTreeSet::new();
    let mut remaining = 0usize;
    for i in 0..n {
        if dense[i] {
            vadj[i].clear();
        } else {
            queue.insert((degree[i], i));
            remaining += 1;
        }
    }

    let mut order = Vec::with_capacity(n);
    let mut mark = vec![0usize; n];
    let mut stamp = 0usize;
    let mut outside: Vec<Option<usize>> = vec![None; n];

    while let Some((_, p)) = queue.pop_first() {
        let mut pivot_members = std::mem::take(&mut members[p]);
        pivot_members.sort_unstable();
        order.extend_from_slice(&pivot_members);
        remaining -= nv[p];

        // Lp: union of the pivot's elements and variable neighbours.
        stamp += 1;
        mark[p] = stamp;
        let mut lp = Vec::new();
        for &e in &eadj[p] {
            for &v in &lmembers[e] {
                if mark[v] != stamp && kind[v] == Node::Variable {
                    mark[v] = stamp;
                    lp.push(v);
                }
            }
            kind[e] = Node::Dead;
            lmembers[e].clear();
        }
        for &v in &vadj[p] {
            if mark[v] != stamp {
                mark[v] = stamp;
                lp.push(v);
            }
        }
        lp.sort_unstable();
        kind[p] = Node::Element;
        vadj[p].clear();
        eadj[p].clear();

        // Prune: Lp variables are now reachable through element p.
        for &i in &lp {
            vadj[i].retain(|&v| mark[v] != stamp);
            eadj[i].retain(|&e| kind[e] == Node::Element);
            eadj[i].push(p);
        }

        // |Le \ Lp| for every element touching Lp.
        let mut touched = Vec::new();
        for &i in &lp {
            for &e in &eadj[i] {
                if e == p {
                    continue;
                }
                let w = outside[e].get_or_insert_with(|| {
                    touched.push(e);
                    lmembers[e].iter().map(|&v| nv[v]).sum()
                });
                *w -= nv[i];
            }
        }

        // Aggressive absorption of elements entirely inside Lp.
        let mut absorbed = false;
        for &e in &touched {
            if outside[e] == Some(0) {
                kind[e] = Node::Dead;
                lmembers[e].clear();
                absorbed = true;
            }
        }
        if absorbed {
            for &i in &lp {
                eadj[i].retain(|&e| kind[e] == Node::Element);
            }
        }

        let lp_weight: usize = lp.iter().map(|&v| nv[v]).sum();
        let mut new_degree = HashMap::with_capacity(lp.len());
        for &i in &lp {
            let external_lp = lp_weight - nv[i];
            let a_weight: usize = vadj[i].iter().map(|&v| nv[v]).sum();
            let e_weight: usize = eadj[i]
                .iter()
                .filter(|&&e| e != p)
                .map(|&e| outside[e].unwrap_or(0))
                .sum();
            let bound = (remaining - nv[i])
                .min(degree[i] + external_lp)
                .min(a_weight + external_lp + e_weight);
            new_degree.insert(i, bound);
        }
        for &e in &touched {
            outside[e] = None;
        }

        // Supervariable detection: identical element and variable adjacency.
        let mut groups: HashMap<(Vec<usize>, Vec<usize>), usize> = HashMap::new();
        let mut principals = Vec::with_capacity(lp.len());
        for &i in &lp {
            let mut ekey = eadj[i].clone();
            ekey.sort_unstable();
            let mut vkey = vadj[i].clone();
            vkey.sort_unstable();
            match groups.get(&(ekey.clone(), vkey.clone())) {
                Some(&principal) => {
                    let weight = nv[i];
                    nv[principal] += weight;
                    nv[i] = 0;
                    kind[i] = Node::Merged;
                    let moved = std::mem::take(&mut members[i]);
                    members[principal].extend(moved);
                    *new_degree.get_mut(&principal).unwrap() -= weight;
                    queue.remove(&(degree[i], i));
                    for &e in &eadj[i] {
                        lmembers[e].retain(|&v| v != i);
                    }
                    for v in std::mem::take(&mut vadj[i]) {
                        vadj[v].retain(|&u| u != i);
                    }
                    eadj[i].clear();
                }
                None => {
                    groups.insert((ekey, vkey), i);
                    principals.push(i);
                }
            }
        }

        for &i in &principals {
            queue.remove(&(degree[i], i));
            degree[i] = new_degree[&i];
            queue.insert((degree[i], i));
        }
        lmembers[p] = principals;
    }

    order.extend((0..n).filter(|&i| dense[i]));
    Permutation::from_vec(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arrow(n: usize, hub: usize) -> CscMatrix {
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 4.0));
            if i != hub {
                trip.push((i.max(hub), i.min(hub), 1.0));
            }
        }
        CscMatrix::from_triplets(n, n, &trip).unwrap()
    }

    #[test]
    fn diagonal_pattern_gives_identity() {
        let d = CscMatrix::identity(7);
        assert!(amd_order(&d).unwrap().is_identity());
    }

    #[test]
    fn arrow_vertex_is_ordered_last() {
        for hub in [0, 3, 9] {
            let p = amd_order(&arrow(10, hub)).unwrap();
            assert_eq!(p.perm()[9], hub);
        }
    }

    #[test]
    fn path_graph_has_no_fill_choice() {
        // A path eliminated from its ends produces no fill.
        let n = 12;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 2.0));
            if i + 1 < n {
                trip.push((i + 1, i, -1.0));
            }
        }
        let a = CscMatrix::from_triplets(n, n, &trip).unwrap();
        let p = amd_order(&a).unwrap();
        let sym = crate::sparse::symbolic_cholesky(&a, &p).unwrap();
        assert_eq!(sym.factor_nnz(), 2 * n - 1);
    }

    #[test]
    fn rejects_rectangular() {
        assert!(amd_order(&CscMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn empty_matrix() {
        assert!(amd_order(&CscMatrix::zeros(0, 0)).unwrap().is_empty());
    }
}
