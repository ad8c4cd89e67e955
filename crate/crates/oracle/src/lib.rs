//! Slow, exhaustive reference implementations.
//!
//! Nothing here shares code with `mbr-ot-core`; every routine works directly
//! on `Vec<Vec<f64>>` / `&[f64]` so the tests that compare against it are
//! checking two independent derivations of the same number.

/// Minimum of `sum_i p_h[i] * cost[i][f(i)]` over every map `f: rows -> cols`
/// that is injective when `m <= n` and surjective when `m >= n`.
///
/// Enumerates all `n^m` maps, so keep `m, n` small.
pub fn assignment_by_enumeration(cost: &[Vec<f64>], p_h: &[f64]) -> f64 {
    let m = cost.len();
    let n = cost[0].len();
    let mut best = f64::INFINITY;
    let mut map = vec![0usize; m];
    let total = n.pow(m as u32);
    for code in 0..total {
        let mut c = code;
        for slot in map.iter_mut() {
            *slot = c % n;
            c /= n;
        }
        let mut hits = vec![0usize; n];
        for &j in &map {
            hits[j] += 1;
        }
        let injective = hits.iter().all(|&h| h <= 1);
        let surjective = hits.iter().all(|&h| h >= 1);
        let admissible = match m.cmp(&n) {
            std::cmp::Ordering::Less => injective,
            std::cmp::Ordering::Greater => surjective,
            std::cmp::Ordering::Equal => injective && surjective,
        };
        if !admissible {
            continue;
        }
        let value: f64 = map.iter().enumerate().map(|(i, &j)| p_h[i] * cost[i][j]).sum();
        if value < best {
            best = value;
        }
    }
    best
}

/// Exact optimal transport cost by enumerating every basic feasible solution
/// of the transportation polytope.
///
/// A basis is a set of `m + n - 1` cells forming a spanning tree of the
/// bipartite row/column graph; its flows are fixed by peeling leaves. The
/// minimum over the non-negative ones is the LP optimum.
pub fn transport_by_vertex_enumeration(cost: &[Vec<f64>], a: &[f64], b: &[f64]) -> f64 {
    let m = a.len();
    let n = b.len();
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let k = m + n - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(k);
    enumerate_subsets(&cells, k, 0, &mut chosen, &mut |basis| {
        if let Some(flows) = tree_flows(basis, a, b) {
            if flows.iter().all(|&f| f >= -1e-12) {
                let value: f64 = basis
                    .iter()
                    .zip(&flows)
                    .map(|(&(i, j), &f)| f.max(0.0) * cost[i][j])
                    .sum();
                if value < best {
                    best = value;
                }
            }
        }
    });
    best
}

fn enumerate_subsets<F: FnMut(&[(usize, usize)])>(
    cells: &[(usize, usize)],
    k: usize,
    start: usize,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut F,
) {
    if chosen.len() == k {
        visit(chosen);
        return;
    }
    let need = k - chosen.len();
    for idx in start..=cells.len().saturating_sub(need) {
        chosen.push(cells[idx]);
        enumerate_subsets(cells, k, idx + 1, chosen, visit);
        chosen.pop();
    }
}

/// Flows on a spanning-tree basis, or `None` if the cells contain a cycle.
fn tree_flows(basis: &[(usize, usize)], a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let m = a.len();
    let n = b.len();
    // union-find over m row nodes followed by n column nodes
    let mut parent: Vec<usize> = (0..m + n).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut x = x;
        while parent[x] != r {
            let next = parent[x];
            parent[x] = r;
            x = next;
        }
        r
    }
    for &(i, j) in basis {
        let ri = find(&mut parent, i);
        let rj = find(&mut parent, m + j);
        if ri == rj {
            return None;
        }
        parent[ri] = rj;
    }

    let mut residual: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let mut degree = vec![0usize; m + n];
    for &(i, j) in basis {
        degree[i] += 1;
        degree[m + j] += 1;
    }
    let mut flows = vec![0.0; basis.len()];
    let mut done = vec![false; basis.len()];
    for _ in 0..basis.len() {
        let (e, leaf) = basis
            .iter()
            .enumerate()
            .filter(|(e, _)| !done[*e])
            .find_map(|(e, &(i, j))| {
                if degree[i] == 1 {
                    Some((e, i))
                } else if degree[m + j] == 1 {
                    Some((e, m + j))
                } else {
                    None
                }
            })?;
        let (i, j) = basis[e];
        let other = if leaf == i { m + j } else { i };
        let f = residual[leaf];
        flows[e] = f;
        residual[leaf] = 0.0;
        residual[other] -= f;
        degree[i] -= 1;
        degree[m + j] -= 1;
        done[e] = true;
    }
    Some(flows)
}

/// Row means of a square utility matrix: the Monte Carlo expected utility of
/// each candidate against every pseudo-reference, itself included.
pub fn expected_utilities(utility: &[Vec<f64>]) -> Vec<f64> {
    let n = utility.len() as f64;
    utility.iter().map(|row| row.iter().sum::<f64>() / n).collect()
}

/// First index attaining the maximum.
pub fn first_argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Sample Pearson correlation written out term by term.
pub fn pearson_direct(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for k in 0..x.len() {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
    }
    sxy / (sxx.sqrt() * syy.sqrt())
}

/// Token-level F1 over whitespace tokens, matching tokens by removing each
/// matched reference token from a list (quadratic, no hashing).
pub fn token_f1_by_matching(hyp: &str, reference: &str) -> f64 {
    let hyp: Vec<&str> = hyp.split_whitespace().collect();
    let mut pool: Vec<&str> = reference.split_whitespace().collect();
    let ref_len = pool.len();
    let mut overlap = 0usize;
    for tok in &hyp {
        if let Some(pos) = pool.iter().position(|r| r == tok) {
            pool.remove(pos);
            overlap += 1;
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / hyp.len() as f64;
    let r = overlap as f64 / ref_len as f64;
    2.0 * p * r / (p + r)
}
