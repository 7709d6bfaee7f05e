//! Exact hitting, commute and difference times, effective resistances and
//! expected cover times.
//!
//! **Index convention.** `H[(u, v)]` is the expected number of steps for a
//! walk *started at `v`* to first reach `u`. Rows are targets, columns are
//! starts. `C = H + Hᵀ` and `D = H − Hᵀ` inherit the same ordering, so
//! `D[(u, v)] = E_v T_u − E_u T_v`.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{solve_small, GroundedLaplacian};

/// Default max-norm residual accepted from each linear solve, relative to
/// `1 + max |x|`.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-10;

/// Default vertex cap for [`exact_cover_time`].
pub const DEFAULT_COVER_CAP: usize = 12;

/// Hard limit for the visited-set recursion (2^n states per vertex).
pub const MAX_COVER_CAP: usize = 24;

/// Dense row-major `n × n` table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    n: usize,
    data: Vec<f64>,
}

impl Table {
    pub fn zeros(n: usize) -> Self {
        Table {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = Table::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[i * n + j] = f(i, j);
            }
        }
        t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Rows as comma-separated values, one line per row, preceded by `#` header lines.
    pub fn to_csv(&self, header: &str) -> String {
        let mut out = String::new();
        for line in header.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Table {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Table {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.rows())
    }
}

/// Hitting (`h`), commute (`c`), difference (`d`) times and effective
/// resistances (`r`) for one connected graph.
#[derive(Debug, Clone, Serialize)]
pub struct WalkTables {
    #[serde(rename = "H")]
    pub h: Table,
    #[serde(rename = "C")]
    pub c: Table,
    #[serde(rename = "D")]
    pub d: Table,
    #[serde(rename = "R")]
    pub r: Table,
}

impl WalkTables {
    pub fn compute(graph: &Graph) -> Result<Self> {
        Self::compute_with_tol(graph, DEFAULT_RESIDUAL_TOL)
    }

    pub fn compute_with_tol(graph: &Graph, tol: f64) -> Result<Self> {
        let h = hitting_times_with_tol(graph, tol)?;
        let (c, d) = commute_difference(&h);
        let r = effective_resistance_with_tol(graph, tol)?;
        Ok(WalkTables { h, c, d, r })
    }
}

pub fn hitting_times(graph: &Graph) -> Result<Table> {
    hitting_times_with_tol(graph, DEFAULT_RESIDUAL_TOL)
}

/// Solves, for every target `u`, the first-step system
/// `h(u) = 0`, `h(v) = 1 + (1/d_v) Σ_{w∼v} h(w)`.
pub fn hitting_times_with_tol(graph: &Graph, tol: f64) -> Result<Table> {
    graph.require_connected()?;
    let n = graph.n();
    let rhs: Vec<f64> = graph.degrees().iter().map(|&d| d as f64).collect();
    let columns: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|u| {
            let h = GroundedLaplacian::new(graph, u)?.solve(&rhs)?;
            let scale = 1.0 + h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let residual = (0..n)
                .filter(|&v| v != u)
                .map(|v| {
                    let mean = graph.neighbors(v).iter().map(|&w| h[w]).sum::<f64>()
                        / graph.degree(v) as f64;
                    (h[v] - 1.0 - mean).abs()
                })
                .fold(0.0f64, f64::max);
            if residual > tol * scale {
                return Err(Error::NonConvergence(format!(
                    "hitting-time system for target {u} has residual {residual:.3e}"
                )));
            }
            Ok(h)
        })
        .collect::<Result<_>>()?;
    Ok(Table::from_fn(n, |u, v| columns[u][v]))
}

/// `C = H + Hᵀ`, `D = H − Hᵀ`.
pub fn commute_difference(h: &Table) -> (Table, Table) {
    let n = h.n();
    (
        Table::from_fn(n, |u, v| h[(u, v)] + h[(v, u)]),
        Table::from_fn(n, |u, v| h[(u, v)] - h[(v, u)]),
    )
}

pub fn effective_resistance(graph: &Graph) -> Result<Table> {
    effective_resistance_with_tol(graph, DEFAULT_RESIDUAL_TOL)
}

/// All-pairs effective resistance from Laplacian solves grounded at vertex 0:
/// with `G` the grounded Green's function, injecting unit current at `u` and
/// extracting at `v` gives potential drop `G_uu + G_vv − 2 G_uv`.
pub fn effective_resistance_with_tol(graph: &Graph, tol: f64) -> Result<Table> {
    graph.require_connected()?;
    let n = graph.n();
    let lap = GroundedLaplacian::new(graph, 0)?;
    let green: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|v| {
            if v == 0 {
                return Ok(vec![0.0; n]);
            }
            let mut e = vec![0.0; n];
            e[v] = 1.0;
            let x = lap.solve(&e)?;
            check_laplacian_residual(graph, 0, &x, &e, tol)?;
            Ok(x)
        })
        .collect::<Result<_>>()?;
    Ok(Table::from_fn(n, |u, v| {
        if u == v {
            0.0
        } else {
            green[u][u] + green[v][v] - 2.0 * green[v][u]
        }
    }))
}

/// Effective resistance of one pair: ground at `w`, inject unit current at `u`.
pub fn resistance_between(graph: &Graph, u: usize, w: usize) -> Result<f64> {
    graph.require_connected()?;
    let n = graph.n();
    if u >= n || w >= n {
        return Err(Error::pre(format!("vertex pair ({u},{w}) outside 0..{n}")));
    }
    if u == w {
        return Ok(0.0);
    }
    let mut e = vec![0.0; n];
    e[u] = 1.0;
    let x = GroundedLaplacian::new(graph, w)?.solve(&e)?;
    check_laplacian_residual(graph, w, &x, &e, DEFAULT_RESIDUAL_TOL)?;
    Ok(x[u])
}

fn check_laplacian_residual(
    graph: &Graph,
    ground: usize,
    x: &[f64],
    b: &[f64],
    tol: f64,
) -> Result<()> {
    let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in (0..graph.n()).filter(|&v| v != ground) {
        let lx =
            graph.degree(v) as f64 * x[v] - graph.neighbors(v).iter().map(|&w| x[w]).sum::<f64>();
        let res = (lx - b[v]).abs();
        if res > tol * scale {
            return Err(Error::NonConvergence(format!(
                "Laplacian solve grounded at {ground} has residual {res:.3e} at vertex {v}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    pub max_abs: f64,
    /// `max |C − 2|E|R| / (1 + |C|)`
    pub max_rel: f64,
}

/// Measures `C(u,v) = 2|E| R(u,v)` over all pairs.
pub fn verify_commute_resistance(graph: &Graph, c: &Table, r: &Table) -> Residual {
    let two_e = 2.0 * graph.edge_count() as f64;
    let mut out = Residual {
        max_abs: 0.0,
        max_rel: 0.0,
    };
    for u in 0..c.n() {
        for v in 0..c.n() {
            let diff = (c[(u, v)] - two_e * r[(u, v)]).abs();
            out.max_abs = out.max_abs.max(diff);
            out.max_rel = out.max_rel.max(diff / (1.0 + c[(u, v)].abs()));
        }
    }
    out
}

/// Hitting times recovered from resistances,
/// `H(u,v) = ½ Σ_w d_w (R(u,v) + R(u,w) − R(v,w))`, i.e. `E_v T_u`.
pub fn hitting_from_resistance(graph: &Graph, r: &Table) -> Table {
    let n = r.n();
    let deg: Vec<f64> = graph.degrees().iter().map(|&d| d as f64).collect();
    let two_e: f64 = deg.iter().sum();
    // Σ_w d_w R(x,w) for each x
    let weighted: Vec<f64> = (0..n)
        .map(|x| (0..n).map(|w| deg[w] * r[(x, w)]).sum())
        .collect();
    Table::from_fn(n, |u, v| {
        0.5 * (two_e * r[(u, v)] + weighted[u] - weighted[v])
    })
}

/// Largest relative entrywise gap `|a − b| / (1 + |b|)`.
pub fn max_relative_gap(a: &Table, b: &Table) -> f64 {
    a.data
        .iter()
        .zip(&b.data)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs() / (1.0 + y.abs())))
}

/// `max |D(u,v) + D(v,w) − D(u,w)|` over all triples.
pub fn triangle_equation_residual(d: &Table) -> f64 {
    let n = d.n();
    let mut worst = 0.0f64;
    for u in 0..n {
        for v in 0..n {
            let duv = d[(u, v)];
            let dv = d.row(v);
            let du = d.row(u);
            for w in 0..n {
                worst = worst.max((duv + dv[w] - du[w]).abs());
            }
        }
    }
    worst
}

/// `max (R(u,v) − R(u,w) − R(w,v))` over all triples; non-positive when the
/// triangle inequality holds.
pub fn resistance_triangle_excess(r: &Table) -> f64 {
    let n = r.n();
    let mut worst = f64::NEG_INFINITY;
    for u in 0..n {
        let ru = r.row(u);
        for v in 0..n {
            let rv = r.row(v);
            for w in 0..n {
                worst = worst.max(ru[v] - ru[w] - rv[w]);
            }
        }
    }
    worst
}

/// Expected cover times from every start.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverResult {
    pub per_start: Vec<f64>,
    /// `max_v E_v(C)`
    pub cover_time: f64,
    pub worst_start: usize,
}

pub fn exact_cover_time(graph: &Graph) -> Result<CoverResult> {
    exact_cover_time_with_cap(graph, DEFAULT_COVER_CAP)
}

/// Visited-set recursion. For every connected visited set `S` (visited sets
/// reachable by a walk are always connected) and current vertex `v ∈ S`:
/// `E[S, v] = 0` if `S = V`, otherwise
/// `E[S, v] = 1 + (1/d_v) Σ_{w∼v} E[S ∪ {w}, w]`.
/// Sets are processed in decreasing numeric order, which visits every
/// superset first; the terms with `w ∈ S` form one small linear system per set.
pub fn exact_cover_time_with_cap(graph: &Graph, cap: usize) -> Result<CoverResult> {
    let n = graph.n();
    if cap > MAX_COVER_CAP {
        return Err(Error::pre(format!(
            "cover-time cap {cap} exceeds hard limit {MAX_COVER_CAP}"
        )));
    }
    if n > cap {
        return Err(Error::pre(format!(
            "exact cover time limited to n <= {cap}, graph has n = {n}"
        )));
    }
    graph.require_connected()?;
    let full: usize = (1 << n) - 1;
    let nbr_mask: Vec<usize> = (0..n)
        .map(|v| graph.neighbors(v).iter().fold(0, |m, &w| m | (1 << w)))
        .collect();
    let mut value = vec![f64::NAN; (full + 1) * n];
    for v in 0..n {
        value[full * n + v] = 0.0;
    }
    let mut members = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n * n);
    let mut b = Vec::with_capacity(n);
    for set in (1..full).rev() {
        if !induced_connected(set, &nbr_mask) {
            continue;
        }
        members.clear();
        members.extend((0..n).filter(|&v| set & (1 << v) != 0));
        let m = members.len();
        a.clear();
        a.resize(m * m, 0.0);
        b.clear();
        b.resize(m, 1.0);
        for (i, &v) in members.iter().enumerate() {
            let d = graph.degree(v) as f64;
            a[i * m + i] = 1.0;
            for &w in graph.neighbors(v) {
                if set & (1 << w) != 0 {
                    let j = members.binary_search(&w).expect("member");
                    a[i * m + j] -= 1.0 / d;
                } else {
                    b[i] += value[(set | (1 << w)) * n + w] / d;
                }
            }
        }
        solve_small(&mut a, &mut b, m)?;
        for (i, &v) in members.iter().enumerate() {
            value[set * n + v] = b[i];
        }
    }
    let per_start: Vec<f64> = (0..n).map(|v| value[(1 << v) * n + v]).collect();
    let (worst_start, cover_time) =
        per_start
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (v, e)| {
                if e > best.1 {
                    (v, e)
                } else {
                    best
                }
            });
    Ok(CoverResult {
        per_start,
        cover_time,
        worst_start,
    })
}

fn induced_connected(set: usize, nbr_mask: &[usize]) -> bool {
    let start = set.trailing_zeros() as usize;
    let mut seen = 1usize << start;
    let mut frontier = seen;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let fresh = nbr_mask[v] & set & !seen;
        seen |= fresh;
        frontier |= fresh;
    }
    seen == set
}

/// `h_m = Σ_{i=1}^m 1/i`.
pub fn harmonic(m: usize) -> f64 {
    (1..=m).map(|i| 1.0 / i as f64).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MatthewsBounds {
    pub lower: f64,
    pub upper: f64,
}

/// `lower = h_{|V₀|−1} · min_{u≠v ∈ V₀} H(u,v)`,
/// `upper = h_{n−1} · max_{u,v ∈ V} H(u,v)`.
pub fn matthews_bounds(h: &Table, subset: &[usize]) -> Result<MatthewsBounds> {
    let n = h.n();
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != subset.len() || sorted.iter().any(|&v| v >= n) {
        return Err(Error::pre(
            "Matthews subset must hold distinct vertices of the graph",
        ));
    }
    if subset.len() < 2 {
        return Err(Error::pre(
            "Matthews lower bound needs a subset of at least 2 vertices",
        ));
    }
    let mut min_h = f64::INFINITY;
    for &u in subset {
        for &v in subset {
            if u != v {
                min_h = min_h.min(h[(u, v)]);
            }
        }
    }
    Ok(MatthewsBounds {
        lower: harmonic(subset.len() - 1) * min_h,
        upper: harmonic(n - 1) * h.max_abs(),
    })
}

/// Vertices sorted by `D(a, ·)`, ties broken by index. Values are compared
/// after rounding to a grid of `1e-9·(1 + max |D(a,·)|)` so rounding noise
/// in exactly tied entries does not reorder them.
pub fn order_by_difference_time(d: &Table, anchor: usize) -> Vec<usize> {
    let row = d.row(anchor);
    let quantum = 1e-9 * (1.0 + row.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    let mut order: Vec<usize> = (0..d.n()).collect();
    order.sort_by_key(|&v| ((row[v] / quantum).round() as i64, v));
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{complete, lollipop, path, torus_grid, Graph};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * (1.0 + b.abs())
    }

    #[test]
    fn hitting_examples() {
        let h = hitting_times(&path(2).unwrap()).unwrap();
        assert!(close(h[(1, 0)], 1.0));
        let h = hitting_times(&complete(3).unwrap()).unwrap();
        for u in 0..3 {
            assert_eq!(h[(u, u)], 0.0);
            for v in (0..3).filter(|&v| v != u) {
                assert!(close(h[(u, v)], 2.0));
            }
        }
        let h = hitting_times(&path(3).unwrap()).unwrap();
        assert!(close(h[(2, 0)], 4.0));
        // from the middle of path(3) the endpoint is hit in 3 steps
        assert!(close(h[(2, 1)], 3.0));
    }

    #[test]
    fn convention_is_start_column() {
        // star with centre 0: leaf -> centre takes exactly one step,
        // centre -> a given leaf takes 2·3 − 1 = 5 steps
        let star = Graph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let h = hitting_times(&star).unwrap();
        assert!(close(h[(0, 1)], 1.0));
        assert!(close(h[(1, 0)], 5.0));
        let r = effective_resistance(&star).unwrap();
        let h2 = hitting_from_resistance(&star, &r);
        assert!(max_relative_gap(&h2, &h) < 1e-12);
    }

    #[test]
    fn commute_and_difference_examples() {
        let (c, d) = commute_difference(&hitting_times(&path(2).unwrap()).unwrap());
        assert!(close(c[(0, 1)], 2.0) && d[(0, 1)].abs() < 1e-12);
        let (c, _) = commute_difference(&hitting_times(&path(3).unwrap()).unwrap());
        assert!(close(c[(0, 2)], 8.0));
    }

    #[test]
    fn resistance_examples() {
        assert!(close(
            effective_resistance(&path(2).unwrap()).unwrap()[(0, 1)],
            1.0
        ));
        assert!(close(
            effective_resistance(&path(3).unwrap()).unwrap()[(0, 2)],
            2.0
        ));
        let r = effective_resistance(&complete(3).unwrap()).unwrap();
        assert!(close(r[(1, 2)], 2.0 / 3.0));
        assert!(close(
            resistance_between(&complete(3).unwrap(), 0, 2).unwrap(),
            2.0 / 3.0
        ));
    }

    #[test]
    fn commute_resistance_identity() {
        for g in [
            path(2).unwrap(),
            complete(3).unwrap(),
            torus_grid(3).unwrap(),
        ] {
            let t = WalkTables::compute(&g).unwrap();
            assert!(verify_commute_resistance(&g, &t.c, &t.r).max_rel <= 1e-8);
        }
        let g = complete(3).unwrap();
        let t = WalkTables::compute(&g).unwrap();
        assert!(close(t.c[(0, 1)], 4.0));
    }

    #[test]
    fn hitting_from_resistance_examples() {
        let g = path(2).unwrap();
        let hp = hitting_from_resistance(&g, &effective_resistance(&g).unwrap());
        assert!(close(hp[(1, 0)], 1.0));
        let g = complete(3).unwrap();
        let hp = hitting_from_resistance(&g, &effective_resistance(&g).unwrap());
        assert!(close(hp[(0, 1)], 2.0));
    }

    #[test]
    fn disconnected_is_rejected() {
        let g = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(hitting_times(&g), Err(Error::Disconnected)));
        assert!(matches!(effective_resistance(&g), Err(Error::Disconnected)));
        assert!(matches!(exact_cover_time(&g), Err(Error::Disconnected)));
    }

    #[test]
    fn cover_examples() {
        let c = exact_cover_time(&path(2).unwrap()).unwrap();
        assert_eq!(c.per_start, vec![1.0, 1.0]);
        assert_eq!(c.cover_time, 1.0);
        let c = exact_cover_time(&complete(3).unwrap()).unwrap();
        assert!(c.per_start.iter().all(|&e| close(e, 3.0)));
        let c = exact_cover_time(&path(3).unwrap()).unwrap();
        assert!(close(c.per_start[0], 4.0) && close(c.per_start[2], 4.0));
        assert!(close(c.per_start[1], 5.0));
        assert_eq!(c.worst_start, 1);
    }

    #[test]
    fn cover_cap_enforced() {
        let g = path(13).unwrap();
        assert!(matches!(exact_cover_time(&g), Err(Error::Precondition(_))));
        assert!(exact_cover_time_with_cap(&g, 13).is_ok());
        assert!(exact_cover_time_with_cap(&g, 40).is_err());
    }

    #[test]
    fn matthews_examples() {
        let h = hitting_times(&complete(3).unwrap()).unwrap();
        let b = matthews_bounds(&h, &[0, 1, 2]).unwrap();
        assert!(close(b.lower, 3.0) && close(b.upper, 3.0));
        let h = hitting_times(&path(2).unwrap()).unwrap();
        let b = matthews_bounds(&h, &[0, 1]).unwrap();
        assert!(close(b.lower, 1.0) && close(b.upper, 1.0));
        let h = hitting_times(&path(3).unwrap()).unwrap();
        assert!(close(matthews_bounds(&h, &[0, 2]).unwrap().lower, 4.0));
        assert!(matthews_bounds(&h, &[0]).is_err());
        assert!(matthews_bounds(&h, &[0, 0]).is_err());
    }

    #[test]
    fn ordering_examples() {
        let t = WalkTables::compute(&torus_grid(3).unwrap()).unwrap();
        assert_eq!(
            order_by_difference_time(&t.d, 0),
            (0..9).collect::<Vec<_>>()
        );

        let g = lollipop(4, 3).unwrap();
        let tip = g.n() - 1;
        let t = WalkTables::compute(&g).unwrap();
        let order = order_by_difference_time(&t.d, tip);
        let first_clique = order.iter().position(|&v| v < 4).unwrap();
        assert!(order[first_clique..].iter().all(|&v| v < 4), "{order:?}");
        for i in 0..order.len() {
            for j in i..order.len() {
                assert!(t.d[(order[i], order[j])] >= -1e-9);
            }
        }
    }
}
