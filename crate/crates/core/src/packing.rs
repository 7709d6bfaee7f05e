//! Euclidean circle packings of triangulated tori.
//!
//! Radii are found by the uniform-neighbor angle-sum iteration, then laid out
//! breadth-first over faces in the universal cover. The deck translations
//! picked up along non-tree dual edges generate the period lattice.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::surface::Triangulation;

pub type Point = [f64; 2];

/// Sweep cap for [`solve_radii`].
pub const MAX_SWEEPS: usize = 100_000;

/// Relative tolerance for holonomy consistency and lattice membership.
const LAYOUT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packing {
    pub radii: Vec<f64>,
    /// One center per vertex, reduced into the fundamental parallelogram
    /// spanned by the lattice vectors at the origin.
    pub centers: Vec<Point>,
    pub lattice: [Point; 2],
    /// Max |angle sum − 2π| over vertices.
    pub angle_residual: f64,
}

impl Packing {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("packing serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Packing = serde_json::from_str(text)?;
        if p.radii.len() != p.centers.len() {
            return Err(Error::LengthMismatch {
                expected: p.radii.len(),
                actual: p.centers.len(),
            });
        }
        if p.radii.iter().any(|&r| !(r > 0.0)) {
            return Err(Error::pre("packing radii must be positive"));
        }
        if cross(p.lattice[0], p.lattice[1]).abs()
            <= 1e-12 * norm(p.lattice[0]) * norm(p.lattice[1])
        {
            return Err(Error::pre("packing lattice vectors are linearly dependent"));
        }
        Ok(p)
    }

    /// The same packing scaled so the first period has length 1, together
    /// with the factor applied.
    pub fn normalized(&self) -> (Packing, f64) {
        let f = 1.0 / norm(self.lattice[0]);
        let p = Packing {
            radii: self.radii.iter().map(|r| r * f).collect(),
            centers: self.centers.iter().map(|&c| scale(c, f)).collect(),
            lattice: [scale(self.lattice[0], f), scale(self.lattice[1], f)],
            angle_residual: self.angle_residual,
        };
        (p, f)
    }

    /// Displacement from `a` to `b` minimized over lattice translates.
    pub fn min_image(&self, a: Point, b: Point) -> Point {
        min_image(&self.lattice, sub(b, a))
    }

    /// Centers re-expressed relative to vertex `u`: each point is the
    /// minimal-image displacement from `u`'s center, so `u` sits at the
    /// origin and distances from `u` are torus distances.
    pub fn centers_around(&self, u: usize) -> Vec<Point> {
        let cu = self.centers[u];
        self.centers
            .iter()
            .map(|&c| self.min_image(cu, c))
            .collect()
    }

    /// `Im(b₂/b₁) > 0` modulus of the lattice, reduced to the standard
    /// fundamental domain.
    pub fn modulus(&self) -> (f64, f64) {
        modulus(&self.lattice)
    }
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

/// Angle at `v` of the triangle formed by mutually tangent circles of radii
/// `rv`, `ru`, `rw`.
pub fn corner_angle(rv: f64, ru: f64, rw: f64) -> f64 {
    let (a, b, c) = (rv + ru, rv + rw, ru + rw);
    ((a * a + b * b - c * c) / (2.0 * a * b))
        .clamp(-1.0, 1.0)
        .acos()
}

/// Angle sum at every vertex for the given radii.
pub fn angle_sums(tri: &Triangulation, radii: &[f64]) -> Vec<f64> {
    let mut sums = vec![0.0; tri.n()];
    for &[a, b, c] in tri.faces() {
        sums[a] += corner_angle(radii[a], radii[b], radii[c]);
        sums[b] += corner_angle(radii[b], radii[c], radii[a]);
        sums[c] += corner_angle(radii[c], radii[a], radii[b]);
    }
    sums
}

fn angle_residual(sums: &[f64]) -> f64 {
    sums.iter().fold(0.0, |m, s| m.max((s - TAU).abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiiSolution {
    /// Normalized so the largest radius is 1.
    pub radii: Vec<f64>,
    pub angle_residual: f64,
    pub sweeps: usize,
}

fn require_torus(tri: &Triangulation) -> Result<()> {
    if tri.genus() != 1 {
        return Err(Error::pre(format!(
            "Euclidean packing needs a genus-1 triangulation, got genus {}",
            tri.genus()
        )));
    }
    Ok(())
}

/// Solves for radii with every angle sum equal to 2π, starting from all ones.
pub fn solve_radii(tri: &Triangulation, tol: f64) -> Result<RadiiSolution> {
    solve_radii_from(tri, tol, vec![1.0; tri.n()])
}

/// As [`solve_radii`] from a caller-supplied positive initialization.
///
/// Each sweep visits vertices in index order. A vertex of degree `k` with
/// angle sum `θ` is compared with a flower of `k` equal neighbors of radius
/// `ρ = r β / (1 − β)`, `β = sin(θ / 2k)`, which has the same angle sum; its
/// radius is then replaced by the one giving that flower angle sum 2π,
/// `r' = ρ (1 − δ) / δ` with `δ = sin(π / k)`.
pub fn solve_radii_from(tri: &Triangulation, tol: f64, init: Vec<f64>) -> Result<RadiiSolution> {
    require_torus(tri)?;
    if !(tol > 0.0) {
        return Err(Error::pre("solver tolerance must be positive"));
    }
    let n = tri.n();
    if init.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: init.len(),
        });
    }
    if init.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(Error::pre("initial radii must be positive and finite"));
    }
    // corners[v] = (u, w) for every face (v, u, w)
    let mut corners: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &[a, b, c] in tri.faces() {
        corners[a].push((b, c));
        corners[b].push((c, a));
        corners[c].push((a, b));
    }
    let target: Vec<f64> = corners
        .iter()
        .map(|c| (PI / c.len() as f64).sin())
        .collect();
    let mut radii = init;
    normalize(&mut radii);

    let mut sums = angle_sums(tri, &radii);
    let mut residual = angle_residual(&sums);
    let mut sweeps = 0;
    while residual >= tol {
        if sweeps == MAX_SWEEPS {
            return Err(Error::NonConvergence(format!(
                "radius iteration stopped at angle residual {residual:.3e} after {MAX_SWEEPS} sweeps"
            )));
        }
        for v in 0..n {
            let r = radii[v];
            let k = corners[v].len() as f64;
            let theta: f64 = corners[v]
                .iter()
                .map(|&(u, w)| corner_angle(r, radii[u], radii[w]))
                .sum();
            let beta = (theta / (2.0 * k)).sin();
            let rho = r * beta / (1.0 - beta);
            let delta = target[v];
            radii[v] = rho * (1.0 - delta) / delta;
        }
        normalize(&mut radii);
        sweeps += 1;
        sums = angle_sums(tri, &radii);
        residual = angle_residual(&sums);
        // on a torus the angle excesses always sum to zero
        let excess: f64 = sums.iter().map(|s| s - TAU).sum();
        if excess.abs() > 1e-8 * (1.0 + n as f64) {
            return Err(Error::NonConvergence(format!(
                "angle excess sums to {excess:.3e}; torus angle total violated"
            )));
        }
    }
    Ok(RadiiSolution {
        radii,
        angle_residual: residual,
        sweeps,
    })
}

fn normalize(radii: &mut [f64]) {
    let max = radii.iter().fold(0.0f64, |m, &r| m.max(r));
    for r in radii.iter_mut() {
        *r /= max;
    }
}

/// Centers, periods and diagnostics of a laid-out packing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Layout {
    pub centers: Vec<Point>,
    pub lattice: [Point; 2],
    /// Torus modulus `τ = b₂/b₁` as `(re, im)`.
    pub modulus: (f64, f64),
    /// Max over edges of `|dist − (r_u + r_v)| / (r_u + r_v)`.
    pub tangency_residual: f64,
}

/// Third vertex of the counterclockwise triangle `(a, b, c)` of tangent circles.
fn place_third(pa: Point, pb: Point, ra: f64, rb: f64, rc: f64) -> Point {
    let alpha = corner_angle(ra, rb, rc);
    let dir = sub(pb, pa);
    let dir = scale(dir, 1.0 / norm(dir));
    let (s, c) = alpha.sin_cos();
    let rotated = [c * dir[0] - s * dir[1], s * dir[0] + c * dir[1]];
    add(pa, scale(rotated, ra + rc))
}

/// Lays the packing out in the plane. Vertex 0 sits at the origin and its
/// first edge points along the positive x-axis.
pub fn layout(tri: &Triangulation, radii: &[f64]) -> Result<Layout> {
    require_torus(tri)?;
    let n = tri.n();
    if radii.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: radii.len(),
        });
    }
    let faces = tri.faces();
    let mut half_edge = std::collections::HashMap::with_capacity(3 * faces.len());
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            half_edge.insert((f[k], f[(k + 1) % 3]), fi);
        }
    }
    let corner_of = |fi: usize, v: usize| {
        faces[fi]
            .iter()
            .position(|&x| x == v)
            .expect("vertex in face")
    };

    let mut placed: Vec<Option<[Point; 3]>> = vec![None; faces.len()];
    let mut parent: Vec<usize> = vec![usize::MAX; faces.len()];
    let first = faces
        .iter()
        .position(|f| f.contains(&0))
        .expect("vertex 0 lies in a face");
    {
        let k0 = corner_of(first, 0);
        let (a, b, c) = (
            faces[first][k0],
            faces[first][(k0 + 1) % 3],
            faces[first][(k0 + 2) % 3],
        );
        let pa = [0.0, 0.0];
        let pb = [radii[a] + radii[b], 0.0];
        let pc = place_third(pa, pb, radii[a], radii[b], radii[c]);
        let mut pos = [[0.0; 2]; 3];
        pos[k0] = pa;
        pos[(k0 + 1) % 3] = pb;
        pos[(k0 + 2) % 3] = pc;
        placed[first] = Some(pos);
    }
    let mut centers: Vec<Option<Point>> = vec![None; n];
    let mut queue = VecDeque::from([first]);
    let mut translations = Vec::new();
    while let Some(fi) = queue.pop_front() {
        let pos = placed[fi].expect("queued faces are placed");
        for k in 0..3 {
            let v = faces[fi][k];
            if centers[v].is_none() {
                centers[v] = Some(pos[k]);
            }
        }
        for k in 0..3 {
            let (x, y) = (faces[fi][k], faces[fi][(k + 1) % 3]);
            let (px, py) = (pos[k], pos[(k + 1) % 3]);
            let gi = half_edge[&(y, x)];
            match placed[gi] {
                None => {
                    let ky = corner_of(gi, y);
                    let z = faces[gi][(ky + 2) % 3];
                    let pz = place_third(py, px, radii[y], radii[x], radii[z]);
                    let mut gpos = [[0.0; 2]; 3];
                    gpos[ky] = py;
                    gpos[(ky + 1) % 3] = px;
                    gpos[(ky + 2) % 3] = pz;
                    placed[gi] = Some(gpos);
                    parent[gi] = fi;
                    queue.push_back(gi);
                }
                Some(gpos) if parent[gi] != fi && parent[fi] != gi => {
                    let tx = sub(gpos[corner_of(gi, x)], px);
                    let ty = sub(gpos[corner_of(gi, y)], py);
                    let gap = norm(sub(tx, ty));
                    if gap > LAYOUT_TOL * (radii[x] + radii[y]) {
                        return Err(Error::NonConvergence(format!(
                            "inconsistent holonomy across edge {{{x},{y}}} (gap {gap:.3e}); radii not converged"
                        )));
                    }
                    translations.push(tx);
                }
                Some(_) => {}
            }
        }
    }
    let centers: Vec<Point> = centers
        .into_iter()
        .map(|c| c.expect("every vertex placed"))
        .collect();
    let length_scale = radii.iter().fold(0.0f64, |m, &r| m.max(r));
    let eps = LAYOUT_TOL * length_scale;
    let mut lattice = lattice_basis(&translations, eps).ok_or_else(|| {
        Error::NonConvergence("deck translations do not span a rank-2 lattice".into())
    })?;
    orient(&mut lattice);

    // every placement of a vertex must be a lattice translate of its center
    for (fi, pos) in placed.iter().enumerate() {
        let pos = pos.expect("all faces placed");
        for k in 0..3 {
            let d = sub(pos[k], centers[faces[fi][k]]);
            let (x, y) = lattice_coords(&lattice, d);
            let off = sub(
                d,
                add(scale(lattice[0], x.round()), scale(lattice[1], y.round())),
            );
            if norm(off) > eps {
                return Err(Error::NonConvergence(format!(
                    "placement of vertex {} is off the period lattice by {:.3e}",
                    faces[fi][k],
                    norm(off)
                )));
            }
        }
    }
    let centers: Vec<Point> = centers
        .iter()
        .map(|&c| reduce_to_domain(&lattice, c))
        .collect();
    let tangency = tangency_residual(&tri.edges(), radii, &centers, &lattice);
    Ok(Layout {
        modulus: modulus(&lattice),
        centers,
        lattice,
        tangency_residual: tangency,
    })
}

/// Solves radii and lays out the packing.
pub fn pack(tri: &Triangulation, tol: f64) -> Result<(Packing, Layout)> {
    let sol = solve_radii(tri, tol)?;
    let lay = layout(tri, &sol.radii)?;
    Ok((
        Packing {
            radii: sol.radii,
            centers: lay.centers.clone(),
            lattice: lay.lattice,
            angle_residual: sol.angle_residual,
        },
        lay,
    ))
}

/// The explicit packing of the grid graph `(Z/kZ)²` on `C/(Z + iZ)`: vertex
/// `i + k·j` is centered at `(i/k, j/k)` with radius `1/(2k)`.
///
/// The grid graph is not a triangulation, so no angle condition applies and
/// `angle_residual` is reported as 0.
pub fn grid_torus_packing(k: usize) -> Result<Packing> {
    if k < 3 {
        return Err(Error::pre("grid_torus_packing needs k >= 3"));
    }
    let kf = k as f64;
    let centers = (0..k * k)
        .map(|v| [(v % k) as f64 / kf, (v / k) as f64 / kf])
        .collect();
    Ok(Packing {
        radii: vec![1.0 / (2.0 * kf); k * k],
        centers,
        lattice: [[1.0, 0.0], [0.0, 1.0]],
        angle_residual: 0.0,
    })
}

fn lattice_coords(lattice: &[Point; 2], d: Point) -> (f64, f64) {
    let det = cross(lattice[0], lattice[1]);
    (cross(d, lattice[1]) / det, cross(lattice[0], d) / det)
}

fn reduce_to_domain(lattice: &[Point; 2], c: Point) -> Point {
    let (x, y) = lattice_coords(lattice, c);
    let (fx, fy) = ((x + 1e-9).floor(), (y + 1e-9).floor());
    sub(c, add(scale(lattice[0], fx), scale(lattice[1], fy)))
}

fn min_image(lattice: &[Point; 2], d: Point) -> Point {
    let (x, y) = lattice_coords(lattice, d);
    let base = sub(
        d,
        add(scale(lattice[0], x.round()), scale(lattice[1], y.round())),
    );
    let mut best = base;
    for i in -1..=1 {
        for j in -1..=1 {
            let cand = add(
                base,
                add(scale(lattice[0], i as f64), scale(lattice[1], j as f64)),
            );
            if norm(cand) < norm(best) {
                best = cand;
            }
        }
    }
    best
}

/// Max over edges of `|‖c_v − c_u‖ − (r_u + r_v)| / (r_u + r_v)`, distances
/// minimized over lattice translates.
pub fn tangency_residual(
    edges: &[(usize, usize)],
    radii: &[f64],
    centers: &[Point],
    lattice: &[Point; 2],
) -> f64 {
    edges.iter().fold(0.0, |m, &(u, v)| {
        let d = norm(min_image(lattice, sub(centers[v], centers[u])));
        let s = radii[u] + radii[v];
        m.max((d - s).abs() / s)
    })
}

fn gauss_reduce(b: &mut [Point; 2]) {
    for _ in 0..10_000 {
        if norm(b[1]) < norm(b[0]) {
            b.swap(0, 1);
        }
        let mu = (dot(b[0], b[1]) / dot(b[0], b[0])).round();
        if mu == 0.0 {
            break;
        }
        b[1] = sub(b[1], scale(b[0], mu));
    }
}

fn parallel(a: Point, b: Point) -> bool {
    cross(a, b).abs() <= 1e-6 * norm(a) * norm(b)
}

/// Basis of the rank-2 lattice generated by `gens`, or `None` if they span
/// less. Vectors shorter than `eps` count as zero.
fn lattice_basis(gens: &[Point], eps: f64) -> Option<[Point; 2]> {
    let mut pool: Vec<Point> = Vec::new();
    for &g in gens {
        pool.push(g);
        for _ in 0..10_000 {
            pool.retain(|&p| norm(p) > eps);
            pool.sort_by(|a, b| norm(*a).total_cmp(&norm(*b)));
            if pool.len() <= 1 {
                break;
            }
            if parallel(pool[0], pool[1]) {
                let mu = (dot(pool[0], pool[1]) / dot(pool[0], pool[0])).round();
                pool[1] = sub(pool[1], scale(pool[0], mu));
                if mu == 0.0 {
                    // opposite-signed halves: replace by the difference
                    pool[1] = add(pool[1], pool[0]);
                }
                continue;
            }
            let mut b = [pool[0], pool[1]];
            gauss_reduce(&mut b);
            pool[0] = b[0];
            pool[1] = b[1];
            if pool.len() == 2 {
                break;
            }
            let (x, y) = lattice_coords(&b, pool[2]);
            pool[2] = sub(pool[2], add(scale(b[0], x.round()), scale(b[1], y.round())));
        }
    }
    if pool.len() == 2 && !parallel(pool[0], pool[1]) {
        let mut b = [pool[0], pool[1]];
        gauss_reduce(&mut b);
        Some(b)
    } else {
        None
    }
}

/// Orients and reduces a basis so that `τ = b₂/b₁` lies in the closed
/// standard fundamental domain with `Re τ ∈ (−½, ½]`, taking `Re τ ≥ 0` on
/// the unit circle.
fn orient(b: &mut [Point; 2]) {
    gauss_reduce(b);
    if cross(b[0], b[1]) < 0.0 {
        b[1] = scale(b[1], -1.0);
    }
    if modulus_raw(b).0 < -0.5 + 1e-9 {
        b[1] = add(b[1], b[0]);
    }
    let (re, im) = modulus_raw(b);
    if re * re + im * im < 1.0 + 1e-9 && re < -1e-12 {
        // τ → −1/τ
        let old0 = b[0];
        b[0] = b[1];
        b[1] = scale(old0, -1.0);
    }
}

fn modulus_raw(b: &[Point; 2]) -> (f64, f64) {
    let n0 = dot(b[0], b[0]);
    (dot(b[1], b[0]) / n0, cross(b[0], b[1]) / n0)
}

/// Torus modulus of a lattice, reduced to the standard fundamental domain.
pub fn modulus(lattice: &[Point; 2]) -> (f64, f64) {
    let mut b = *lattice;
    orient(&mut b);
    modulus_raw(&b)
}

/// One fundamental parallelogram with every circle (and its translates)
/// clipped to it.
pub fn to_svg(packing: &Packing) -> String {
    let [b1, b2] = packing.lattice;
    let corners = [[0.0, 0.0], b1, add(b1, b2), b2];
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in corners {
        for i in 0..2 {
            lo[i] = lo[i].min(c[i]);
            hi[i] = hi[i].max(c[i]);
        }
    }
    let margin = 0.05 * (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let (w, h) = (hi[0] - lo[0] + 2.0 * margin, hi[1] - lo[1] + 2.0 * margin);
    let stroke = 0.002 * w.max(h);
    let poly: Vec<String> = corners
        .iter()
        .map(|c| format!("{},{}", c[0], c[1]))
        .collect();
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n\
         <defs><clipPath id=\"domain\"><polygon points=\"{}\"/></clipPath></defs>\n\
         <g transform=\"translate(0,{}) scale(1,-1)\">\n\
         <polygon points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{stroke}\"/>\n\
         <g clip-path=\"url(#domain)\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"{stroke}\">\n",
        lo[0] - margin,
        lo[1] - margin,
        w,
        h,
        poly.join(" "),
        lo[1] + hi[1],
        poly.join(" ")
    );
    for (c, r) in packing.centers.iter().zip(&packing.radii) {
        for i in -1..=1 {
            for j in -1..=1 {
                let p = add(*c, add(scale(b1, i as f64), scale(b2, j as f64)));
                out.push_str(&format!(
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>\n",
                    p[0], p[1], r
                ));
            }
        }
    }
    out.push_str("</g>\n</g>\n</svg>\n");
    out
}
