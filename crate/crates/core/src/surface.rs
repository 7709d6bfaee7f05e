//! Oriented triangulations of closed orientable surfaces and the
//! combinatorial side of branched coverings.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A validated oriented triangulation of a closed orientable surface.
///
/// Every directed edge `a → b` occurs in exactly one face and its reverse in
/// exactly one other, vertex links are single cycles, and the complex is
/// connected. Non-orientable input fails the first check and is rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triangulation {
    n: usize,
    faces: Vec<[usize; 3]>,
    edges: Vec<(usize, usize)>,
    genus: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TriangulationFile {
    pub n: usize,
    pub faces: Vec<[usize; 3]>,
}

/// `(|V|, |E|, |F|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CellCounts {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
}

impl CellCounts {
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices as i64 - self.edges as i64 + self.faces as i64
    }
}

impl Triangulation {
    pub fn new(n: usize, faces: Vec<[usize; 3]>) -> Result<Self> {
        let bad = |msg: String| Error::InvalidTriangulation(msg);
        if faces.is_empty() {
            return Err(bad("no faces".into()));
        }
        let mut half_edges: HashMap<(usize, usize), usize> =
            HashMap::with_capacity(3 * faces.len());
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(bad(format!("face {fi} has a vertex outside 0..{n}")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(bad(format!("face {fi} repeats a vertex")));
            }
            for k in 0..3 {
                let e = (f[k], f[(k + 1) % 3]);
                if half_edges.insert(e, fi).is_some() {
                    return Err(bad(format!(
                        "directed edge {}->{} lies in two faces (inconsistent orientation, \
                         non-orientable, or non-manifold edge)",
                        e.0, e.1
                    )));
                }
            }
        }
        for &(a, b) in half_edges.keys() {
            if !half_edges.contains_key(&(b, a)) {
                return Err(bad(format!(
                    "edge {{{a},{b}}} lies in only one face or its faces disagree in orientation"
                )));
            }
        }

        // vertex links: next[b] = c for each face (v, b, c)
        let mut link: Vec<HashMap<usize, usize>> = vec![HashMap::new(); n];
        for f in &faces {
            for k in 0..3 {
                link[f[k]].insert(f[(k + 1) % 3], f[(k + 2) % 3]);
            }
        }
        for (v, next) in link.iter().enumerate() {
            let Some(&start) = next.keys().min() else {
                return Err(bad(format!("vertex {v} lies in no face")));
            };
            let mut cur = start;
            let mut len = 0;
            loop {
                cur = *next
                    .get(&cur)
                    .ok_or_else(|| bad(format!("link of vertex {v} is not closed")))?;
                len += 1;
                if cur == start || len > next.len() {
                    break;
                }
            }
            if cur != start || len != next.len() {
                return Err(bad(format!("link of vertex {v} is not a single cycle")));
            }
        }

        let edges: Vec<(usize, usize)> = half_edges
            .keys()
            .filter(|(a, b)| a < b)
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        // connectivity through edges
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut components = n;
        for &(a, b) in &edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                components -= 1;
            }
        }
        if components != 1 {
            return Err(bad(format!(
                "complex has {components} connected components"
            )));
        }

        let chi = n as i64 - edges.len() as i64 + faces.len() as i64;
        if chi > 2 || chi % 2 != 0 {
            return Err(bad(format!(
                "Euler characteristic {chi} is not 2 - 2g for an orientable closed surface"
            )));
        }
        let genus = ((2 - chi) / 2) as u32;
        Ok(Triangulation {
            n,
            faces,
            edges,
            genus,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.edges.clone()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn counts(&self) -> CellCounts {
        CellCounts {
            vertices: self.n,
            edges: self.edges.len(),
            faces: self.faces.len(),
        }
    }

    /// Genus from χ = 2 − 2g, computed during validation.
    pub fn genus(&self) -> u32 {
        self.genus
    }

    /// Number of faces incident to each vertex (equal to the vertex degree).
    pub fn face_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for f in &self.faces {
            for &v in f {
                deg[v] += 1;
            }
        }
        deg
    }

    pub fn to_file(&self) -> TriangulationFile {
        TriangulationFile {
            n: self.n,
            faces: self.faces.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(&self.to_file()).expect("triangulation serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TriangulationFile = serde_json::from_str(text)?;
        Triangulation::new(file.n, file.faces)
    }
}

/// Genus of a validated triangulation via Euler's polyhedron formula.
pub fn euler_genus(tri: &Triangulation) -> u32 {
    tri.genus()
}

/// Boundary of the tetrahedron, the smallest triangulated sphere.
pub fn tetrahedron() -> Triangulation {
    Triangulation::new(4, vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]])
        .expect("tetrahedron is a valid sphere")
}

/// Quotient of the triangular lattice by `k·(Z + Zω)`, ω = e^{iπ/3}.
///
/// Vertex `(i, j)` (lattice point `i + jω`) has index `i + k·j`. Each
/// rhombus `(i, j)` contributes the counterclockwise faces
/// `[(i,j), (i+1,j), (i,j+1)]` and `[(i+1,j), (i+1,j+1), (i,j+1)]`.
pub fn triangular_torus(k: usize) -> Result<Triangulation> {
    if k < 3 {
        return Err(Error::pre("triangular_torus needs k >= 3"));
    }
    let idx = |i: usize, j: usize| (i % k) + k * (j % k);
    let mut faces = Vec::with_capacity(2 * k * k);
    for j in 0..k {
        for i in 0..k {
            faces.push([idx(i, j), idx(i + 1, j), idx(i, j + 1)]);
            faces.push([idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    Triangulation::new(k * k, faces)
}

/// Midpoint (1 → 4) subdivision. The midpoint of the `e`-th sorted edge
/// gets index `n + e`.
pub fn hex_refine(tri: &Triangulation) -> Triangulation {
    let n = tri.n();
    let mid: HashMap<(usize, usize), usize> = tri
        .edges
        .iter()
        .enumerate()
        .map(|(i, &e)| (e, n + i))
        .collect();
    let m = |a: usize, b: usize| mid[&(a.min(b), a.max(b))];
    let faces = tri
        .faces()
        .iter()
        .flat_map(|&[a, b, c]| {
            let (ab, bc, ca) = (m(a, b), m(b, c), m(c, a));
            [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        })
        .collect();
    Triangulation::new(n + tri.edge_count(), faces)
        .expect("refinement of a valid triangulation is valid")
}

/// Connected sum: removes the first face of each input and glues along the
/// resulting triangular boundaries. Genus adds.
pub fn connected_sum(first: &Triangulation, second: &Triangulation) -> Triangulation {
    let [a, b, c] = first.faces()[0];
    let [x, y, z] = second.faces()[0];
    let n1 = first.n();
    let mut map = vec![usize::MAX; second.n()];
    map[x] = a;
    map[y] = c;
    map[z] = b;
    let mut next = n1;
    for slot in map.iter_mut() {
        if *slot == usize::MAX {
            *slot = next;
            next += 1;
        }
    }
    let faces = first.faces()[1..]
        .iter()
        .copied()
        .chain(second.faces()[1..].iter().map(|f| f.map(|v| map[v])))
        .collect();
    Triangulation::new(next, faces).expect("connected sum of valid triangulations is valid")
}

/// Bookkeeping for a claimed branched covering `f: S₁ → S₂`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringLedger {
    pub g1: u32,
    pub g2: u32,
    pub deg: u32,
    /// Ramification indices `e_P` of the points over each listed target point.
    pub fibers: Vec<Vec<u32>>,
}

impl CoveringLedger {
    pub fn new(g1: u32, g2: u32, deg: u32, fibers: Vec<Vec<u32>>) -> Result<Self> {
        let ledger = CoveringLedger {
            g1,
            g2,
            deg,
            fibers,
        };
        ledger.check()?;
        Ok(ledger)
    }

    pub fn check(&self) -> Result<()> {
        if self.deg < 1 {
            return Err(Error::pre("covering degree must be >= 1"));
        }
        if self.fibers.iter().flatten().any(|&e| e < 1) {
            return Err(Error::pre("ramification indices must be >= 1"));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ledger: CoveringLedger = serde_json::from_str(text)?;
        ledger.check()?;
        Ok(ledger)
    }

    /// `Σ_P (e_P − 1)` over every listed point.
    pub fn ramification_sum(&self) -> i64 {
        self.fibers.iter().flatten().map(|&e| e as i64 - 1).sum()
    }
}

/// `(2 − 2g₁) − [deg·(2 − 2g₂) − Σ (e_P − 1)]`; zero exactly when the
/// ledger satisfies Riemann–Hurwitz.
pub fn riemann_hurwitz_residual(ledger: &CoveringLedger) -> i64 {
    let chi1 = 2 - 2 * ledger.g1 as i64;
    let chi2 = 2 - 2 * ledger.g2 as i64;
    chi1 - (ledger.deg as i64 * chi2 - ledger.ramification_sum())
}

/// Every listed fiber's indices sum to the degree.
pub fn degree_constancy_check(ledger: &CoveringLedger) -> bool {
    ledger
        .fibers
        .iter()
        .all(|fiber| fiber.iter().map(|&e| e as u64).sum::<u64>() == ledger.deg as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BranchBudget {
    /// `2·deg − (2 − 2g)`: total ramification of a degree-`deg` map from a
    /// genus-`g` surface onto the sphere.
    pub ramification: i64,
    /// `4g`.
    pub cap: i64,
    /// `deg ≤ g + 1`, the degree available for every genus-`g` surface.
    pub degree_within_bound: bool,
    pub warning: Option<String>,
}

pub fn branch_point_budget(g: u32, deg: u32) -> BranchBudget {
    let ramification = 2 * deg as i64 - (2 - 2 * g as i64);
    let degree_within_bound = deg <= g + 1;
    BranchBudget {
        ramification,
        cap: 4 * g as i64,
        degree_within_bound,
        warning: (!degree_within_bound).then(|| {
            format!(
                "degree {deg} exceeds g + 1 = {}; the 4g cap need not hold",
                g + 1
            )
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tetrahedron_is_a_sphere() {
        let t = tetrahedron();
        assert_eq!(euler_genus(&t), 0);
        assert_eq!(
            t.counts(),
            CellCounts {
                vertices: 4,
                edges: 6,
                faces: 4
            }
        );
    }

    #[test]
    fn rejects_inconsistent_orientation() {
        let err =
            Triangulation::new(4, vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 2, 3]]).unwrap_err();
        assert!(matches!(err, Error::InvalidTriangulation(_)));
    }

    #[test]
    fn rejects_open_surface() {
        assert!(Triangulation::new(4, vec![[0, 1, 2], [0, 2, 3], [0, 3, 1]]).is_err());
    }

    #[test]
    fn rejects_pinched_vertex() {
        // two tetrahedra sharing vertex 0: every edge is fine but the link of 0 is two cycles
        let mut faces = vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
        faces.extend([[0, 4, 5], [0, 5, 6], [0, 6, 4], [4, 6, 5]]);
        let err = Triangulation::new(7, faces).unwrap_err().to_string();
        assert!(err.contains("single cycle"), "{err}");
    }

    #[test]
    fn rejects_unused_vertex() {
        let faces = tetrahedron().faces().to_vec();
        assert!(Triangulation::new(5, faces).is_err());
    }

    #[test]
    fn triangular_torus_counts() {
        for (k, counts) in [(3, (9, 27, 18)), (4, (16, 48, 32))] {
            let t = triangular_torus(k).unwrap();
            let c = t.counts();
            assert_eq!((c.vertices, c.edges, c.faces), counts);
            assert_eq!(c.euler_characteristic(), 0);
            assert_eq!(euler_genus(&t), 1);
            assert!(t.face_degrees().iter().all(|&d| d == 6));
        }
        assert!(triangular_torus(2).is_err());
    }

    #[test]
    fn hex_refine_counts() {
        let t = hex_refine(&tetrahedron());
        let c = t.counts();
        assert_eq!((c.vertices, c.edges, c.faces), (10, 24, 16));
        assert_eq!(t.genus(), 0);
        assert_eq!(hex_refine(&t).genus(), 0);

        let r = hex_refine(&triangular_torus(3).unwrap());
        let c = r.counts();
        assert_eq!((c.vertices, c.edges, c.faces), (36, 108, 72));
        assert_eq!(r.genus(), 1);
    }

    #[test]
    fn connected_sum_of_tori_has_genus_two() {
        let t = triangular_torus(3).unwrap();
        let s = connected_sum(&t, &t);
        assert_eq!(s.counts().euler_characteristic(), -2);
        assert_eq!(euler_genus(&s), 2);
    }

    #[test]
    fn riemann_hurwitz_examples() {
        let square = CoveringLedger::new(0, 0, 2, vec![vec![2], vec![2]]).unwrap();
        assert_eq!(riemann_hurwitz_residual(&square), 0);
        let trigonal = CoveringLedger::new(2, 0, 3, vec![vec![2, 1]; 8]).unwrap();
        assert_eq!(trigonal.ramification_sum(), 8);
        assert_eq!(riemann_hurwitz_residual(&trigonal), 0);
        let isogeny = CoveringLedger::new(1, 1, 2, vec![vec![1, 1]]).unwrap();
        assert_eq!(riemann_hurwitz_residual(&isogeny), 0);
        let off = CoveringLedger::new(0, 0, 2, vec![vec![2]]).unwrap();
        assert_eq!(riemann_hurwitz_residual(&off), -1);
        assert!(CoveringLedger::new(0, 0, 0, vec![]).is_err());
        assert!(CoveringLedger::new(0, 0, 1, vec![vec![0]]).is_err());
    }

    #[test]
    fn degree_constancy_examples() {
        let l = |deg, fibers| CoveringLedger::new(0, 0, deg, fibers).unwrap();
        assert!(degree_constancy_check(&l(2, vec![vec![2], vec![1, 1]])));
        assert!(!degree_constancy_check(&l(2, vec![vec![1]])));
        assert!(degree_constancy_check(&l(
            3,
            vec![vec![3], vec![2, 1], vec![1, 1, 1]]
        )));
    }

    #[test]
    fn branch_budget_examples() {
        let b = branch_point_budget(1, 2);
        assert_eq!((b.ramification, b.cap), (4, 4));
        let b = branch_point_budget(0, 1);
        assert_eq!((b.ramification, b.cap), (0, 0));
        let b = branch_point_budget(2, 3);
        assert_eq!((b.ramification, b.cap), (8, 8));
        assert!(b.warning.is_none());
        assert!(branch_point_budget(1, 3).warning.is_some());
    }

    #[test]
    fn json_roundtrip_validates() {
        let t = triangular_torus(3).unwrap();
        assert_eq!(Triangulation::from_json(&t.to_json()).unwrap(), t);
        assert!(Triangulation::from_json("{\"n\":3,\"faces\":[[0,1,2]]}").is_err());
    }
}
