use std::io::{Read, Write};
use std::path::Path;

use serde_json::{json, Value};

use covertime::bounds::{bound_report, Observed};
use covertime::exact::{
    exact_cover_time_with_cap, hitting_times, matthews_bounds, resistance_between, Table,
    WalkTables,
};
use covertime::graph::{self, Graph, GraphFile};
use covertime::mc::{estimate_cover_time, McConfig};
use covertime::packing::{layout, solve_radii, to_svg, Packing};
use covertime::proof_lab::{
    dirichlet_lower_bound, extract_separated_subset, log_cutoff_function, CutoffLevels,
    PackedConfiguration,
};
use covertime::surface::{self, Triangulation};
use covertime::{CoveringLedger, Error};

use crate::{verify, Cli, Command, Family, Format, McArgs, SurfaceArgs, TableChoice};

/// A command that could not produce its document.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_numerical() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

pub fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

type Outcome = Result<(String, bool), Failure>;

pub fn run(cli: Cli) -> Result<u8, Failure> {
    let format = cli.format;
    let (doc, ok) = match cli.command {
        Command::Gen { family } => gen(format, family),
        Command::Validate { graph, tri } => validate(format, graph, tri),
        Command::Exact { graph, tol, table } => exact(format, &graph, tol, table),
        Command::CoverExact { graph, cap } => cover_exact(format, &graph, cap),
        Command::CoverMc { graph, mc } => cover_mc(format, &graph, &mc),
        Command::Bounds {
            graph,
            observed,
            c,
            cap,
            mc,
        } => bounds(format, &graph, &observed, c, cap, &mc),
        Command::Genus { tri, refine } => genus(format, &tri, refine),
        Command::RhCheck { ledger, budget } => rh_check(format, ledger, budget),
        Command::Pack { tri, tol, svg } => pack(format, &tri, tol, svg.as_deref()),
        Command::Certify {
            graph,
            packing,
            pair,
            a,
            b,
            c,
            eps,
            genus,
        } => certify(
            format,
            &graph,
            &packing,
            &pair,
            CutoffLevels { a, b, c },
            eps,
            genus,
        ),
        Command::Extract {
            config,
            s,
            eps,
            vertices,
        } => extract(format, &config, s, eps, vertices),
        Command::Verify => verify::run(format),
    }?;
    match cli.out {
        Some(path) => std::fs::write(&path, doc)
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(doc.as_bytes())
                .map_err(|e| usage(format!("cannot write stdout: {e}")))?;
        }
    }
    Ok(if ok { 0 } else { 1 })
}

/// Resolves the output format, rejecting ones the command cannot emit.
pub fn resolve(
    format: Option<Format>,
    allowed: &[Format],
    command: &str,
) -> Result<Format, Failure> {
    let f = format.unwrap_or(allowed[0]);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(usage(format!(
            "{command} does not support --format {}",
            format!("{f:?}").to_lowercase()
        )))
    }
}

pub fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json serializes");
    s.push('\n');
    s
}

struct Input {
    path: String,
    text: String,
}

impl Input {
    fn read(path: &str) -> Result<Self, Failure> {
        let text = if path == "-" {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| usage(format!("cannot read stdin: {e}")))?;
            s
        } else {
            std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {path}: {e}")))?
        };
        Ok(Input {
            path: path.to_string(),
            text,
        })
    }

    /// Path plus a content digest, so a record pins the exact input it used.
    fn source(&self) -> Value {
        // 64-bit FNV-1a
        let digest = self.text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
        });
        json!({ "path": self.path, "fnv1a64": format!("{digest:016x}") })
    }

    fn graph(&self) -> Result<Graph, Failure> {
        Graph::from_json(&self.text).map_err(|e| usage(format!("{}: {e}", self.path)))
    }

    fn triangulation(&self) -> Result<Triangulation, Failure> {
        Triangulation::from_json(&self.text).map_err(|e| usage(format!("{}: {e}", self.path)))
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            usage(format!(
                "{what} must be comma-separated non-negative integers, got `{s}`"
            ))
        })
}

fn parse_pair(s: &str, what: &str) -> Result<(usize, usize), Failure> {
    match parse_list(s, what)?[..] {
        [a, b] => Ok((a, b)),
        _ => Err(usage(format!(
            "{what} must be two comma-separated integers, got `{s}`"
        ))),
    }
}

fn surface_output(tri: Triangulation, args: &SurfaceArgs) -> String {
    let tri = (0..args.refine).fold(tri, |t, _| surface::hex_refine(&t));
    if args.skeleton {
        graph::skeleton(&tri).to_json()
    } else {
        tri.to_json()
    }
}

fn gen(format: Option<Format>, family: Family) -> Outcome {
    resolve(format, &[Format::Json], "gen")?;
    let doc = match family {
        Family::Path { n } => graph::path(n)?.to_json(),
        Family::Complete { n } => graph::complete(n)?.to_json(),
        Family::TorusGrid { k } => graph::torus_grid(k)?.to_json(),
        Family::Lollipop { clique, path } => graph::lollipop(clique, path)?.to_json(),
        Family::TreePlusK5 { n, g } => graph::tree_plus_k5(n, g)?.to_json(),
        Family::Random { n, p, seed } => covertime::corpus::random_connected(n, p, seed)?.to_json(),
        Family::TriangularTorus { k, surface } => {
            surface_output(surface::triangular_torus(k)?, &surface)
        }
        Family::Tetrahedron { surface } => surface_output(surface::tetrahedron(), &surface),
    };
    Ok((doc, true))
}

fn validate(format: Option<Format>, graph: Option<String>, tri: Option<String>) -> Outcome {
    resolve(format, &[Format::Json], "validate")?;
    if let Some(path) = graph {
        let input = Input::read(&path)?;
        let file: GraphFile = serde_json::from_str(&input.text)
            .map_err(|e| usage(format!("{path}: malformed graph JSON: {e}")))?;
        let report = graph::validate_file(&file);
        let ok = report.ok();
        let doc = json!({
            "command": "validate",
            "config": { "graph": input.source() },
            "ok": ok,
            "report": report,
        });
        return Ok((pretty(&doc), ok));
    }
    let path = tri.expect("clap requires --graph or --tri");
    let input = Input::read(&path)?;
    let (ok, report) = match Triangulation::from_json(&input.text) {
        Ok(t) => {
            let c = t.counts();
            (
                true,
                json!({
                    "vertices": c.vertices,
                    "edges": c.edges,
                    "faces": c.faces,
                    "euler_characteristic": c.euler_characteristic(),
                    "genus": t.genus(),
                    "failures": [],
                }),
            )
        }
        Err(e) => (false, json!({ "failures": [e.to_string()] })),
    };
    let doc = json!({
        "command": "validate",
        "config": { "tri": input.source() },
        "ok": ok,
        "report": report,
    });
    Ok((pretty(&doc), ok))
}

const H_HEADER: &str = "H: hitting times, H[u][v] = E_v T_u (row u = target, column v = start)";

fn exact(format: Option<Format>, path: &str, tol: f64, table: TableChoice) -> Outcome {
    let format = resolve(format, &[Format::Json, Format::Csv], "exact")?;
    let input = Input::read(path)?;
    let g = input.graph()?;
    let t = WalkTables::compute_with_tol(&g, tol)?;
    let chosen: Vec<(&str, &Table, &str)> = [
        ("H", &t.h, H_HEADER),
        ("C", &t.c, "C: commute times, C = H + H^T"),
        ("D", &t.d, "D: difference times, D = H - H^T"),
        ("R", &t.r, "R: effective resistances"),
    ]
    .into_iter()
    .filter(|(name, _, _)| match table {
        TableChoice::All => true,
        TableChoice::H => *name == "H",
        TableChoice::C => *name == "C",
        TableChoice::D => *name == "D",
        TableChoice::R => *name == "R",
    })
    .collect();
    let table_name = format!("{table:?}").to_lowercase();
    if format == Format::Csv {
        let mut out = format!(
            "# covertime exact --graph {path} --tol {tol:e} --table {table_name}\n# input {}\n",
            input.source()["fnv1a64"].as_str().unwrap()
        );
        for (_, tab, header) in chosen {
            out.push_str(&tab.to_csv(header));
        }
        return Ok((out, true));
    }
    let mut doc = json!({
        "command": "exact",
        "config": { "graph": input.source(), "tol": tol, "table": table_name },
        "convention": H_HEADER,
    });
    for (name, tab, _) in chosen {
        doc[name] = serde_json::to_value(tab).expect("table serializes");
    }
    Ok((pretty(&doc), true))
}

fn cover_exact(format: Option<Format>, path: &str, cap: usize) -> Outcome {
    let format = resolve(format, &[Format::Json, Format::Csv], "cover-exact")?;
    let input = Input::read(path)?;
    let g = input.graph()?;
    let res = exact_cover_time_with_cap(&g, cap)?;
    let all: Vec<usize> = (0..g.n()).collect();
    let m = matthews_bounds(&hitting_times(&g)?, &all)?;
    if format == Format::Csv {
        let mut out = format!(
            "# covertime cover-exact --graph {path} --cap {cap}\nstart,expected_cover_time\n"
        );
        for (v, x) in res.per_start.iter().enumerate() {
            out.push_str(&format!("{v},{x:?}\n"));
        }
        return Ok((out, true));
    }
    let doc = json!({
        "command": "cover-exact",
        "config": { "graph": input.source(), "cap": cap },
        "cover_time": res.cover_time,
        "worst_start": res.worst_start,
        "per_start": res.per_start,
        "matthews": m,
    });
    Ok((pretty(&doc), true))
}

fn mc_config(g: &Graph, mc: &McArgs) -> McConfig {
    McConfig::new(
        mc.seed,
        mc.replicas,
        mc.start,
        mc.max_steps
            .unwrap_or_else(|| McConfig::default_max_steps(g.n())),
    )
}

fn cover_mc(format: Option<Format>, path: &str, mc: &McArgs) -> Outcome {
    resolve(format, &[Format::Json], "cover-mc")?;
    let input = Input::read(path)?;
    let g = input.graph()?;
    let cfg = mc_config(&g, mc);
    let est = estimate_cover_time(&g, &cfg)?;
    let doc = json!({
        "command": "cover-mc",
        "config": { "graph": input.source(), "mc": cfg },
        "estimate": est,
        "ci99": est.ci99(),
    });
    Ok((pretty(&doc), true))
}

fn bounds(
    format: Option<Format>,
    path: &str,
    observed: &str,
    c: f64,
    cap: usize,
    mc: &McArgs,
) -> Outcome {
    let format = resolve(format, &[Format::Json, Format::Text], "bounds")?;
    let input = Input::read(path)?;
    let g = input.graph()?;
    let (obs, how) = if observed == "auto" {
        if g.n() <= cap {
            let exact = exact_cover_time_with_cap(&g, cap)?;
            (
                Observed::Exact {
                    value: exact.cover_time,
                },
                json!({ "auto": "exact", "cap": cap }),
            )
        } else {
            let cfg = mc_config(&g, mc);
            let est = estimate_cover_time(&g, &cfg)?;
            (
                Observed::from_estimate(&est),
                json!({ "auto": "monte_carlo", "mc": cfg }),
            )
        }
    } else {
        let value: f64 = observed.parse().map_err(|_| {
            usage(format!(
                "--observed must be a number or `auto`, got `{observed}`"
            ))
        })?;
        (Observed::Exact { value }, json!({ "value": value }))
    };
    let report = bound_report(&g, obs, c)?;
    let ok = report.passed();
    let config = json!({ "graph": input.source(), "observed": how, "c": c });
    let doc = if format == Format::Text {
        format!(
            "# covertime bounds {}\n{}",
            serde_json::to_string(&config).unwrap(),
            report.to_text()
        )
    } else {
        pretty(&json!({ "command": "bounds", "config": config, "passed": ok, "report": report }))
    };
    Ok((doc, ok))
}

fn genus(format: Option<Format>, path: &str, refine: usize) -> Outcome {
    resolve(format, &[Format::Json], "genus")?;
    let input = Input::read(path)?;
    let tri = (0..refine).fold(input.triangulation()?, |t, _| surface::hex_refine(&t));
    let c = tri.counts();
    let g = tri.genus() as i64;
    let doc = json!({
        "command": "genus",
        "config": { "tri": input.source(), "refine": refine },
        "vertices": c.vertices,
        "edges": c.edges,
        "faces": c.faces,
        "euler_characteristic": c.euler_characteristic(),
        "genus": g,
        "max_degree": tri.face_degrees().into_iter().max(),
        "edge_identity_holds": c.edges as i64 == 3 * c.vertices as i64 + 6 * g - 6,
    });
    Ok((pretty(&doc), true))
}

fn rh_check(format: Option<Format>, ledger: Option<String>, budget: Option<String>) -> Outcome {
    resolve(format, &[Format::Json], "rh-check")?;
    let mut ok = true;
    let mut doc = json!({ "command": "rh-check", "config": {} });
    if let Some(path) = ledger {
        let input = Input::read(&path)?;
        let l =
            CoveringLedger::from_json(&input.text).map_err(|e| usage(format!("{path}: {e}")))?;
        let residual = surface::riemann_hurwitz_residual(&l);
        let constant = surface::degree_constancy_check(&l);
        ok &= residual == 0 && constant;
        doc["config"]["ledger"] = input.source();
        doc["ledger"] = json!({
            "g1": l.g1,
            "g2": l.g2,
            "deg": l.deg,
            "ramification_sum": l.ramification_sum(),
            "residual": residual,
            "degree_constant": constant,
            "consistent": residual == 0 && constant,
        });
    }
    if let Some(spec) = budget {
        let (g, deg) = parse_pair(&spec, "--budget")?;
        let (g, deg) = (
            u32::try_from(g).map_err(|_| usage("--budget genus too large"))?,
            u32::try_from(deg).map_err(|_| usage("--budget degree too large"))?,
        );
        let b = surface::branch_point_budget(g, deg);
        let within = b.ramification <= b.cap;
        ok &= within || !b.degree_within_bound;
        doc["config"]["budget"] = json!({ "g": g, "deg": deg });
        doc["budget"] = json!({
            "ramification": b.ramification,
            "cap": b.cap,
            "within_cap": within,
            "degree_within_bound": b.degree_within_bound,
            "warning": b.warning,
        });
    }
    Ok((pretty(&doc), ok))
}

fn pack(format: Option<Format>, path: &str, tol: f64, svg: Option<&Path>) -> Outcome {
    resolve(format, &[Format::Json], "pack")?;
    let input = Input::read(path)?;
    let tri = input.triangulation()?;
    let sol = solve_radii(&tri, tol)?;
    let lay = layout(&tri, &sol.radii)?;
    let packing = Packing {
        radii: sol.radii,
        centers: lay.centers.clone(),
        lattice: lay.lattice,
        angle_residual: sol.angle_residual,
    };
    if let Some(svg) = svg {
        std::fs::write(svg, to_svg(&packing))
            .map_err(|e| usage(format!("cannot write {}: {e}", svg.display())))?;
    }
    let mut doc = serde_json::to_value(&packing).expect("packing serializes");
    doc["command"] = json!("pack");
    doc["config"] =
        json!({ "tri": input.source(), "tol": tol, "svg": svg.map(|p| p.display().to_string()) });
    doc["modulus"] = json!(lay.modulus);
    doc["tangency_residual"] = json!(lay.tangency_residual);
    doc["sweeps"] = json!(sol.sweeps);
    Ok((pretty(&doc), true))
}

fn certify(
    format: Option<Format>,
    graph_path: &str,
    packing_path: &str,
    pair: &str,
    levels: CutoffLevels,
    eps: f64,
    genus: Option<u32>,
) -> Outcome {
    resolve(format, &[Format::Json], "certify")?;
    let graph_input = Input::read(graph_path)?;
    let g = graph_input.graph()?;
    let packing_input = Input::read(packing_path)?;
    let raw = Packing::from_json(&packing_input.text)
        .map_err(|e| usage(format!("{packing_path}: {e}")))?;
    // cutoff levels mix log-distances with absolute radii; fix the scale
    let (packing, scale) = raw.normalized();
    if packing.radii.len() != g.n() {
        return Err(usage(format!(
            "packing has {} circles but the graph has {} vertices",
            packing.radii.len(),
            g.n()
        )));
    }
    let (u, w) = parse_pair(pair, "--pair")?;
    let genus = genus.or(g.genus_hint()).unwrap_or(1);
    let cfg = PackedConfiguration::from_packing_around(&packing, u, genus, eps)?;
    let cut = log_cutoff_function(&g, &cfg, u, w, levels)?;
    let cert = dirichlet_lower_bound(&g, &cut.g, u, w)?;
    let exact = resistance_between(&g, u, w)?;
    let valid = cert.bound <= exact + 1e-9;
    let doc = json!({
        "command": "certify",
        "config": {
            "graph": graph_input.source(),
            "packing": packing_input.source(),
            "pair": [u, w],
            "a": levels.a,
            "b": levels.b,
            "c": levels.c,
            "eps": eps,
            "genus": genus,
        },
        "levels": {
            "a": cut.a,
            "b": cut.b,
            "c": cut.c,
            "delta_tilde": cut.delta_tilde,
            "delta_tilde_source": "surrogate max_v 2 r'_v (1 + eps)",
        },
        "points": "minimal-image centers relative to u, scaled so the first period has length 1",
        "scale": scale,
        "certificate": cert,
        "exact_resistance": exact,
        "valid": valid,
    });
    Ok((pretty(&doc), valid))
}

fn extract(
    format: Option<Format>,
    path: &str,
    s: f64,
    eps: Option<f64>,
    vertices: Option<String>,
) -> Outcome {
    resolve(format, &[Format::Json], "extract")?;
    let input = Input::read(path)?;
    let mut cfg =
        PackedConfiguration::from_json(&input.text).map_err(|e| usage(format!("{path}: {e}")))?;
    if let Some(eps) = eps {
        cfg.eps = eps;
    }
    let set = match &vertices {
        Some(list) => parse_list(list, "--vertices")?,
        None => (0..cfg.len()).collect(),
    };
    let ex = extract_separated_subset(&cfg, &set, s)?;
    let ok = ex.bounds_hold();
    let doc = json!({
        "command": "extract",
        "config": { "config": input.source(), "s": s, "eps": cfg.eps, "vertices": vertices },
        "bounds_hold": ok,
        "extraction": ex,
    });
    Ok((pretty(&doc), ok))
}
