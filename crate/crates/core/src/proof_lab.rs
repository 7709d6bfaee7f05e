//! Computational pieces of the cover-time lower-bound argument: Dirichlet
//! certificates for effective resistance, the logarithmic cutoff test
//! function, and extraction of well-separated vertex subsets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{dirichlet_energy, Graph, VertexFunction};
use crate::packing::{Packing, Point};

/// Image points and inner radii of a set of vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackedConfiguration {
    pub points: Vec<Point>,
    /// Radius of the largest disk about each point inside the vertex's image.
    pub radii: Vec<f64>,
    pub genus: u32,
    pub eps: f64,
}

impl PackedConfiguration {
    pub fn new(points: Vec<Point>, radii: Vec<f64>, genus: u32, eps: f64) -> Result<Self> {
        let cfg = PackedConfiguration {
            points,
            radii,
            genus,
            eps,
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if self.points.len() != self.radii.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                actual: self.radii.len(),
            });
        }
        if self.points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::pre("configuration points must be finite"));
        }
        if self.radii.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::pre(
                "configuration radii must be positive and finite",
            ));
        }
        if !(self.eps > 0.0) {
            return Err(Error::pre("eps must be positive"));
        }
        Ok(())
    }

    /// Configuration of a torus packing seen from vertex `u`: points are
    /// minimal-image positions relative to `u`'s center.
    pub fn from_packing_around(packing: &Packing, u: usize, genus: u32, eps: f64) -> Result<Self> {
        if u >= packing.centers.len() {
            return Err(Error::pre(format!("vertex {u} outside the packing")));
        }
        Self::new(packing.centers_around(u), packing.radii.clone(), genus, eps)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PackedConfiguration = serde_json::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Surrogate for the largest image diameter: `max_v 2 r'_v (1 + ε)`.
    pub fn delta_tilde(&self) -> f64 {
        self.radii
            .iter()
            .fold(0.0f64, |m, &r| m.max(2.0 * r * (1.0 + self.eps)))
    }
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResistanceCertificate {
    pub u: usize,
    pub w: usize,
    pub f: VertexFunction,
    pub energy: f64,
    /// `(f(u) − f(w))² / D(f)`, a lower bound on `R(u, w)`.
    pub bound: f64,
}

pub fn dirichlet_lower_bound(
    graph: &Graph,
    f: &VertexFunction,
    u: usize,
    w: usize,
) -> Result<ResistanceCertificate> {
    if u >= graph.n() || w >= graph.n() {
        return Err(Error::pre(format!(
            "pair ({u},{w}) outside 0..{}",
            graph.n()
        )));
    }
    if u == w {
        return Err(Error::pre("certificate pair must be distinct"));
    }
    let energy = dirichlet_energy(graph, f)?;
    if !(energy > 0.0) {
        return Err(Error::pre("test function has zero Dirichlet energy"));
    }
    let gap = f[u] - f[w];
    Ok(ResistanceCertificate {
        u,
        w,
        f: f.clone(),
        energy,
        bound: gap * gap / energy,
    })
}

/// Cutoff levels for [`log_cutoff_function`]; `None` selects the default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CutoffLevels {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogCutoff {
    pub g: VertexFunction,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Surrogate value used in the `c > a + 2δ̃` check.
    pub delta_tilde: f64,
}

/// `g(u) = a` and `g(v) = min(max(ln|p_v − p_u|, c), b)` elsewhere.
///
/// Defaults: `a = ln r'_u`, `b = ln|p_w − p_u|` and `c` just above
/// `a + 2δ̃`, at `a + 2δ̃ + 10⁻⁶ (b − a − 2δ̃)`.
pub fn log_cutoff_function(
    graph: &Graph,
    cfg: &PackedConfiguration,
    u: usize,
    w: usize,
    levels: CutoffLevels,
) -> Result<LogCutoff> {
    let n = graph.n();
    if cfg.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: cfg.len(),
        });
    }
    if u >= n || w >= n || u == w {
        return Err(Error::pre(format!(
            "cutoff pair ({u},{w}) must be distinct vertices in 0..{n}"
        )));
    }
    let pu = cfg.points[u];
    if let Some(v) = (0..n).find(|&v| v != u && dist(cfg.points[v], pu) == 0.0) {
        return Err(Error::pre(format!(
            "image of vertex {v} coincides with that of {u}"
        )));
    }
    let delta_tilde = cfg.delta_tilde();
    let a = levels.a.unwrap_or(cfg.radii[u].ln());
    let b = levels.b.unwrap_or(dist(cfg.points[w], pu).ln());
    let floor = a + 2.0 * delta_tilde;
    let c = levels.c.unwrap_or(floor + 1e-6 * (b - floor));
    if !(floor < c && c < b) {
        return Err(Error::pre(format!(
            "cutoff levels need a + 2δ̃ < c < b, got a = {a}, δ̃ = {delta_tilde}, c = {c}, b = {b}"
        )));
    }
    let values = (0..n)
        .map(|v| {
            if v == u {
                a
            } else {
                dist(cfg.points[v], pu).ln().max(c).min(b)
            }
        })
        .collect();
    Ok(LogCutoff {
        g: VertexFunction::new(values)?,
        a,
        b,
        c,
        delta_tilde,
    })
}

/// One radius bin `W_j = { v : r'_v ∈ (n^{s(j−1)}, n^{sj}] }`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinDiagnostics {
    pub j: i64,
    pub radius_range: (f64, f64),
    pub members: Vec<usize>,
    /// Greedy maximal subset with pairwise distance at least `separation`.
    pub selected: Vec<usize>,
    pub separation: f64,
    pub chosen: bool,
    /// `4(1+ε)² n^{4s} |Z_j|`, to be compared with `|W_j|`.
    pub packing_bound: f64,
    pub bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extraction {
    pub n: usize,
    pub s: f64,
    pub eps: f64,
    /// `"even"` or `"odd"`.
    pub parity: String,
    pub z: Vec<usize>,
    pub bins: Vec<BinDiagnostics>,
}

impl Extraction {
    pub fn bounds_hold(&self) -> bool {
        self.bins.iter().all(|b| b.bound_holds)
    }
}

fn bin_index(r: f64, base: f64) -> i64 {
    let j = (r.ln() / base).ceil() as i64;
    // guard the right-closed endpoint against rounding in the logarithm
    if r > (base * j as f64).exp() {
        j + 1
    } else if r <= (base * (j - 1) as f64).exp() {
        j - 1
    } else {
        j
    }
}

/// Splits `vertices` into radius bins, keeps the parity class (even or odd
/// `j`) with more vertices, ties going to even, and greedily selects a
/// maximal separated subset of every bin in vertex-index order.
pub fn extract_separated_subset(
    cfg: &PackedConfiguration,
    vertices: &[usize],
    s: f64,
) -> Result<Extraction> {
    cfg.check()?;
    if vertices.is_empty() {
        return Err(Error::pre("vertex set must be nonempty"));
    }
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::pre(format!("s must lie in (0,1), got {s}")));
    }
    if let Some(&v) = vertices.iter().find(|&&v| v >= cfg.len()) {
        return Err(Error::pre(format!("vertex {v} outside the configuration")));
    }
    let mut members = vertices.to_vec();
    members.sort_unstable();
    members.dedup();
    let n = members.len();
    let nf = n as f64;
    // for n = 1 every radius falls in one bin; any positive base works
    let base = if n > 1 { s * nf.ln() } else { 1.0 };

    let mut by_bin: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
    for &v in &members {
        by_bin
            .entry(bin_index(cfg.radii[v], base))
            .or_default()
            .push(v);
    }
    let even: usize = by_bin
        .iter()
        .filter(|(j, _)| *j % 2 == 0)
        .map(|(_, m)| m.len())
        .sum();
    let parity_even = 2 * even >= n;
    let factor = 4.0 * (1.0 + cfg.eps).powi(2) * nf.powf(4.0 * s);

    let mut bins = Vec::with_capacity(by_bin.len());
    let mut z = Vec::new();
    for (j, members) in by_bin {
        let separation = (1.0 + cfg.eps) * (base * (j + 1) as f64).exp();
        let mut selected: Vec<usize> = Vec::new();
        for &v in &members {
            if selected
                .iter()
                .all(|&x| dist(cfg.points[x], cfg.points[v]) >= separation)
            {
                selected.push(v);
            }
        }
        let chosen = (j % 2 == 0) == parity_even;
        if chosen {
            z.extend_from_slice(&selected);
        }
        let packing_bound = factor * selected.len() as f64;
        bins.push(BinDiagnostics {
            j,
            radius_range: ((base * (j - 1) as f64).exp(), (base * j as f64).exp()),
            bound_holds: packing_bound >= members.len() as f64,
            members,
            selected,
            separation,
            chosen,
            packing_bound,
        });
    }
    z.sort_unstable();
    Ok(Extraction {
        n,
        s,
        eps: cfg.eps,
        parity: if parity_even { "even" } else { "odd" }.into(),
        z,
        bins,
    })
}
