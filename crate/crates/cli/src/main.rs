//! `trinion`: JSON front end and seeded verification campaigns.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};

use trinion::alcove::{glue_partner, random_alcove_point, torus_exp, torus_log, AlcovePoint};
use trinion::double::{
    normalize_frame, random_normalized_triple, relation_residual, solve_trinion, FramedTriple, NormalizedTriple,
};
use trinion::glue::{assemble_moment_polytope, glue_residual, trinion_graph, validate_framed_sheaf, FramedSheafDescriptor};
use trinion::integrable::{bracket_table, Chart, HamiltonianIndex};
use trinion::matgroup::{
    complex_gaussian, dexp, dlog, gauss_decompose, inf_norm, max_abs, nilpotent_exp, random_sl, random_su,
    ComplexSquareMatrix, CMat, GaussOrder, NilpotentMatrix, C64,
};
use trinion::okounkov::{lattice_count, okounkov_body_report, MonomialSystem, Rational, RationalPolytope};
use trinion::volumes::{hg, hg_closed_form, hgg, recover_unipotent, VolumeTable};

#[derive(Parser)]
#[command(name = "trinion", version, about = "Framed trinion computations and verification campaigns")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 2)]
    n: usize,
    #[arg(long, global = true, default_value_t = 100)]
    samples: usize,
    /// Override a tolerance, e.g. --tolerance bracket=1e-6.
    #[arg(long = "tolerance", global = true, value_name = "KEY=VAL")]
    tolerances: Vec<String>,
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    UpperDiagLower,
    LowerDiagUpper,
}

#[derive(Subcommand)]
enum Command {
    /// Gauss decomposition of an input matrix, or a random campaign over
    /// Gauss factors, dexp/dlog and the trinion relation.
    Decompose {
        #[arg(long, value_enum, default_value = "upper-diag-lower")]
        order: Order,
    },
    /// All Hamiltonian values at a triple.
    Hamiltonians,
    /// Poisson brackets of the commuting families over random triples.
    PoissonCheck,
    /// Reconstruct the unipotent factor from determinant values.
    Recover,
    /// Newton–Okounkov body of a linear system.
    Okounkov {
        #[arg(long, default_value_t = 3)]
        levels: u32,
        #[arg(long, default_value_t = 1)]
        scale: u64,
    },
    /// Trinion graph, glued weight polytope and weight matching.
    Glue {
        #[arg(long, default_value_t = 2)]
        genus: usize,
    },
    /// Torsion pattern check of a framed sheaf descriptor.
    ValidateSheaf,
}

/// Failure to run at all (exit 2).
struct SchemaError(String);

impl<E: std::fmt::Display> From<E> for SchemaError {
    fn from(e: E) -> Self {
        SchemaError(e.to_string())
    }
}

struct Report {
    body: Value,
    pass: bool,
}

const DEFAULT_TOLERANCES: [(&str, f64); 6] = [
    ("reconstruction", 1e-9),
    ("dexp", 1e-9),
    ("relation", 1e-9),
    ("bracket", 1e-8),
    ("recovery", 1e-9),
    ("glue", 0.0),
];

struct Config {
    seed: u64,
    n: usize,
    samples: usize,
    tolerances: BTreeMap<String, f64>,
    input: Option<String>,
}

impl Config {
    fn tol(&self, key: &str) -> f64 {
        self.tolerances[key]
    }

    fn group_rank(&self) -> Result<usize, SchemaError> {
        if self.n < 2 {
            return Err(SchemaError(format!("--n must be at least 2, got {}", self.n)));
        }
        Ok(self.n)
    }

    fn parse<T: for<'de> Deserialize<'de>>(&self) -> Result<Option<T>, SchemaError> {
        self.input.as_deref().map(serde_json::from_str).transpose().map_err(SchemaError::from)
    }
}

fn sample_rng(seed: u64, sample: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(sample as u64);
    r
}

/// Runs `f` over all samples in parallel; results come back in sample order.
fn campaign<T: Send>(cfg: &Config, f: impl Fn(&mut ChaCha8Rng) -> T + Sync) -> Vec<T> {
    (0..cfg.samples).into_par_iter().map(|s| f(&mut sample_rng(cfg.seed, s))).collect()
}

fn max_of(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, f64::max)
}

fn cplx(z: C64) -> [f64; 2] {
    [z.re + 0.0, z.im + 0.0]
}

fn matrix(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| cplx(m[(i, j)])).collect()).collect()
}

fn checked(checks: &BTreeMap<&str, (f64, f64)>) -> (Value, bool) {
    let pass = checks.values().all(|(value, tol)| value <= tol);
    let table: BTreeMap<&str, Value> = checks
        .iter()
        .map(|(k, (value, tol))| (*k, json!({"max_residual": value, "tolerance": tol, "pass": value <= tol})))
        .collect();
    (json!(table), pass)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecomposeInput {
    matrix: ComplexSquareMatrix,
    order: Option<GaussOrder>,
}

fn decompose(cfg: &Config, order: Order) -> Result<Report, SchemaError> {
    let order = match order {
        Order::UpperDiagLower => GaussOrder::UpperDiagLower,
        Order::LowerDiagUpper => GaussOrder::LowerDiagUpper,
    };
    if let Some(input) = cfg.parse::<DecomposeInput>()? {
        let g: CMat = input.matrix.into_inner();
        let order = input.order.unwrap_or(order);
        return Ok(match gauss_decompose(&g, order) {
            Ok(f) => {
                let residual = max_abs(&(f.reconstruct() - &g)) / inf_norm(&g).max(1.0);
                let (checks, pass) = checked(&BTreeMap::from([("reconstruction", (residual, cfg.tol("reconstruction")))]));
                Report {
                    body: json!({
                        "order": order,
                        "upper_unipotent": matrix(&f.upper_unipotent),
                        "diagonal": f.diagonal_entries().into_iter().map(cplx).collect::<Vec<_>>(),
                        "lower_unipotent": matrix(&f.lower_unipotent),
                        "checks": checks,
                    }),
                    pass,
                }
            }
            Err(e) => Report { body: json!({"order": order, "error": e.to_string()}), pass: false },
        });
    }
    let n = cfg.group_rank()?;
    let rows = campaign(cfg, |r| {
        let g = random_sl(n, r);
        let gauss = max_of([GaussOrder::UpperDiagLower, GaussOrder::LowerDiagUpper].into_iter().map(|o| {
            gauss_decompose(g.matrix(), o)
                .map(|f| max_abs(&(f.reconstruct() - g.matrix())) / inf_norm(g.matrix()))
                .unwrap_or(f64::INFINITY)
        }));
        let xi = NilpotentMatrix::strictly_upper_part(&CMat::from_fn(n, n, |_, _| complex_gaussian(r)));
        let w = CMat::from_fn(n, n, |_, _| complex_gaussian(r));
        let series = dlog(&xi, &w)
            .and_then(|eta| dexp(&xi, &eta))
            .map(|lhs| max_abs(&(lhs - nilpotent_exp(&xi) * &w)) / inf_norm(&w))
            .unwrap_or(f64::INFINITY);
        let (u1, u2) = (random_su(n, r), random_su(n, r));
        let (v1, v2) = (torus_exp(&random_alcove_point(n, r)), torus_exp(&random_alcove_point(n, r)));
        let relation = solve_trinion(&u1, &v1, &u2, &v2)
            .map(|(u3, a3)| {
                relation_residual(u1.matrix(), &v1.matrix(), u2.matrix(), &v2.matrix(), u3.matrix(), &torus_exp(&a3).matrix())
            })
            .unwrap_or(f64::INFINITY);
        (gauss, series, relation)
    });
    let (checks, pass) = checked(&BTreeMap::from([
        ("reconstruction", (max_of(rows.iter().map(|r| r.0)), cfg.tol("reconstruction"))),
        ("dexp", (max_of(rows.iter().map(|r| r.1)), cfg.tol("dexp"))),
        ("relation", (max_of(rows.iter().map(|r| r.2)), cfg.tol("relation"))),
    ]));
    Ok(Report { body: json!({"n": n, "samples": cfg.samples, "seed": cfg.seed, "checks": checks}), pass })
}

/// A normalized triple, a framed triple to normalize, or a random one.
fn input_triple(cfg: &Config) -> Result<NormalizedTriple, SchemaError> {
    match cfg.input.as_deref() {
        Some(text) => {
            let value: Value = serde_json::from_str(text)?;
            if value.get("b1_plus").is_some() {
                Ok(serde_json::from_value(value)?)
            } else {
                let framed: FramedTriple = serde_json::from_value(value)?;
                Ok(normalize_frame(&framed)?)
            }
        }
        None => Ok(random_normalized_triple(cfg.group_rank()?, &mut sample_rng(cfg.seed, 0))),
    }
}

fn weights(t: &NormalizedTriple) -> Result<[AlcovePoint; 3], SchemaError> {
    Ok([torus_log(&t.v1)?, torus_log(&t.v2)?, torus_log(&t.v3)?])
}

fn hamiltonians(cfg: &Config) -> Result<Report, SchemaError> {
    let t = input_triple(cfg)?;
    let n = t.rank();
    let chart = Chart::from_triple(&t)?;
    let mut family = HamiltonianIndex::locals(n);
    family.extend(HamiltonianIndex::tori(n));
    family.extend(HamiltonianIndex::diagonals(n));
    family.extend(HamiltonianIndex::globals(n));
    let mut values = BTreeMap::new();
    for idx in family {
        values.insert(idx.to_string(), cplx(chart.value(idx)?));
    }
    let alphas = weights(&t)?;
    let real = hgg(&t, [&alphas[0], &alphas[1], &alphas[2]]);
    let (checks, pass) = checked(&BTreeMap::from([("relation", (t.residual(), cfg.tol("relation")))]));
    Ok(Report {
        body: json!({"n": n, "triple": t, "weights": alphas, "values": values, "real_globals": real, "checks": checks}),
        pass,
    })
}

fn poisson_check(cfg: &Config) -> Result<Report, SchemaError> {
    let n = cfg.group_rank()?;
    let families = |n: usize| {
        let mut with_tori = HamiltonianIndex::locals(n);
        with_tori.extend(HamiltonianIndex::tori(n));
        let mut with_globals = HamiltonianIndex::locals(n);
        with_globals.extend(HamiltonianIndex::diagonals(n));
        with_globals.extend(HamiltonianIndex::globals(n));
        [("locals+tori", with_tori), ("locals+diagonals+globals", with_globals)]
    };
    let rows = campaign(cfg, |r| {
        let chart = Chart::from_triple(&random_normalized_triple(n, r)).map_err(|e| e.to_string())?;
        families(n)
            .into_iter()
            .map(|(name, fam)| {
                let table = bracket_table(&chart, &fam).map_err(|e| e.to_string())?;
                let worst = table.into_iter().max_by(|a, b| a.2.total_cmp(&b.2)).expect("nonempty family");
                Ok((name, worst))
            })
            .collect::<Result<Vec<_>, String>>()
    });
    let mut failures = Vec::new();
    let mut worst: BTreeMap<&str, (f64, String)> = BTreeMap::new();
    for (sample, row) in rows.into_iter().enumerate() {
        match row {
            Ok(per_family) => {
                for (name, (f, g, value)) in per_family {
                    let entry = worst.entry(name).or_insert((0.0, String::new()));
                    if value > entry.0 || entry.1.is_empty() {
                        *entry = (value, format!("{{{f}, {g}}}"));
                    }
                }
            }
            Err(e) => failures.push(json!({"sample": sample, "error": e})),
        }
    }
    let tol = cfg.tol("bracket");
    let overall = max_of(worst.values().map(|w| w.0));
    let families: BTreeMap<&str, Value> =
        worst.iter().map(|(k, (v, pair))| (*k, json!({"max_residual": v, "worst_pair": pair}))).collect();
    let (checks, pass) = checked(&BTreeMap::from([("bracket", (overall, tol))]));
    Ok(Report {
        body: json!({"n": n, "samples": cfg.samples, "seed": cfg.seed, "families": families, "failures": failures, "checks": checks}),
        pass: pass && failures.is_empty(),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecoverInput {
    table: VolumeTable,
    d1: Vec<[f64; 2]>,
    d3: Vec<[f64; 2]>,
}

fn complex_list(v: &[[f64; 2]]) -> Vec<C64> {
    v.iter().map(|[re, im]| C64::new(*re, *im)).collect()
}

fn recover(cfg: &Config) -> Result<Report, SchemaError> {
    let tol = cfg.tol("recovery");
    if let Some(input) = cfg.parse::<RecoverInput>()? {
        let (d1, d3) = (complex_list(&input.d1), complex_list(&input.d3));
        let n = input.table.rank();
        if d1.len() != n || d3.len() != n {
            return Err(SchemaError(format!("d1 and d3 need {n} entries")));
        }
        return Ok(match recover_unipotent(&input.table, &d1, &d3) {
            Ok(n3) => {
                let b3 = n3.matrix() * trinion::matgroup::diagonal(&d3);
                let err = hg_closed_form(&d1, &b3).max_difference(&input.table);
                let (checks, pass) = checked(&BTreeMap::from([("recovery", (err, tol))]));
                Report { body: json!({"n3_plus": matrix(n3.matrix()), "checks": checks}), pass }
            }
            Err(e) => Report { body: json!({"error": e.to_string()}), pass: false },
        });
    }
    let n = cfg.group_rank()?;
    let errors = campaign(cfg, |r| {
        let t = random_normalized_triple(n, r);
        let table = hg(&t);
        recover_unipotent(&table, &t.d1(), &t.d3())
            .map(|n3| {
                let b3 = n3.matrix() * trinion::matgroup::diagonal(&t.d3());
                hg_closed_form(&t.d1(), &b3).max_difference(&table)
            })
            .unwrap_or(f64::INFINITY)
    });
    let (checks, pass) = checked(&BTreeMap::from([("recovery", (max_of(errors), tol))]));
    Ok(Report { body: json!({"n": n, "samples": cfg.samples, "seed": cfg.seed, "checks": checks}), pass })
}

fn okounkov(cfg: &Config, levels: u32, scale: u64) -> Result<Report, SchemaError> {
    if levels == 0 {
        return Err(SchemaError("--levels must be positive".into()));
    }
    let system = match cfg.input.as_deref() {
        Some(text) => MonomialSystem::from_json(text).map_err(SchemaError)?,
        None => MonomialSystem::blown_up_plane(),
    };
    let report = okounkov_body_report(&system, levels);
    let count = lattice_count(&report.body, scale);
    Ok(Report {
        body: json!({
            "dimension": system.dimension(),
            "levels": levels,
            "vertices": report.body.vertex_strings(),
            "affine_dimension": report.body.affine_dimension(),
            "previous_vertices": report.previous.as_ref().map(|p| p.vertex_strings()),
            "stabilized": report.stabilized,
            "scale": scale,
            "lattice_points": count,
        }),
        pass: true,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GlueInput {
    genus: Option<usize>,
    n: Option<usize>,
    trinion_polytope: Option<Vec<Vec<Value>>>,
}

fn rational(v: &Value) -> Result<Rational, SchemaError> {
    match v {
        Value::String(s) => s.trim().parse().map_err(|_| SchemaError(format!("bad rational {s:?}"))),
        Value::Number(k) => {
            k.as_i64().map(|k| Rational::from_integer(k.into())).ok_or_else(|| SchemaError(format!("bad rational {k}")))
        }
        other => Err(SchemaError(format!("bad rational {other}"))),
    }
}

fn glue(cfg: &Config, genus: usize) -> Result<Report, SchemaError> {
    let input = cfg.parse::<GlueInput>()?.unwrap_or(GlueInput { genus: None, n: None, trinion_polytope: None });
    let genus = input.genus.unwrap_or(genus);
    let n = input.n.unwrap_or(cfg.n);
    let polytope = match input.trinion_polytope {
        Some(vertices) => {
            let d = vertices.first().map_or(0, |v| v.len());
            let pts = vertices.iter().map(|v| v.iter().map(rational).collect()).collect::<Result<Vec<Vec<_>>, _>>()?;
            RationalPolytope::from_points(d, pts)?
        }
        None if n == 2 => RationalPolytope::standard_simplex(3),
        None => return Err(SchemaError(format!("rank {n} needs an explicit trinion_polytope"))),
    };
    let graph = trinion_graph(genus)?;
    let glued = assemble_moment_polytope(&graph, &polytope, n)?;
    let euler = 3 * graph.trinion_count() == 2 * graph.edges().len() + graph.free_punctures().len();
    let residuals = campaign(cfg, |r| {
        let a = random_alcove_point(n, r);
        glue_residual(&a, &glue_partner(&a)).unwrap_or(f64::INFINITY)
    });
    let (checks, pass) = checked(&BTreeMap::from([("glue", (max_of(residuals), cfg.tol("glue")))]));
    Ok(Report {
        body: json!({
            "genus": genus,
            "n": n,
            "graph": graph,
            "adjacency": graph.adjacency(),
            "euler_count": euler,
            "trinion_vertices": polytope.vertex_strings(),
            "glued_vertices": glued.vertex_strings(),
            "glued_dimension": glued.affine_dimension(),
            "checks": checks,
        }),
        pass: pass && euler,
    })
}

fn validate_sheaf(cfg: &Config) -> Result<Report, SchemaError> {
    let d: FramedSheafDescriptor = cfg.parse()?.ok_or_else(|| SchemaError("validate-sheaf needs --input".into()))?;
    Ok(match validate_framed_sheaf(d) {
        Ok(d) => Report { body: json!({"valid": true, "descriptor": d}), pass: true },
        Err(e) => Report { body: json!({"valid": false, "error": e.to_string()}), pass: false },
    })
}

fn config(cli: &Cli) -> Result<Config, SchemaError> {
    if cli.samples == 0 {
        return Err(SchemaError("--samples must be at least 1".into()));
    }
    let mut tolerances: BTreeMap<String, f64> = DEFAULT_TOLERANCES.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    for item in &cli.tolerances {
        let (key, value) = item.split_once('=').ok_or_else(|| SchemaError(format!("expected KEY=VAL, got {item:?}")))?;
        let value: f64 = value.parse().map_err(|_| SchemaError(format!("bad tolerance value {value:?}")))?;
        if value.is_nan() || value < 0.0 {
            return Err(SchemaError(format!("tolerance {key} must be non-negative")));
        }
        match tolerances.get_mut(key) {
            Some(slot) => *slot = value,
            None => return Err(SchemaError(format!("unknown tolerance {key:?}"))),
        }
    }
    let input = cli.input.as_ref().map(fs::read_to_string).transpose()?;
    Ok(Config { seed: cli.seed, n: cli.n, samples: cli.samples, tolerances, input })
}

fn run(cli: &Cli) -> Result<Report, SchemaError> {
    let cfg = config(cli)?;
    let mut report = match &cli.command {
        Command::Decompose { order } => decompose(&cfg, *order)?,
        Command::Hamiltonians => hamiltonians(&cfg)?,
        Command::PoissonCheck => poisson_check(&cfg)?,
        Command::Recover => recover(&cfg)?,
        Command::Okounkov { levels, scale } => okounkov(&cfg, *levels, *scale)?,
        Command::Glue { genus } => glue(&cfg, *genus)?,
        Command::ValidateSheaf => validate_sheaf(&cfg)?,
    };
    if let Value::Object(map) = &mut report.body {
        map.insert("pass".into(), json!(report.pass));
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(SchemaError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let text = serde_json::to_string_pretty(&report.body).expect("report serializes") + "\n";
    let written = match &cli.output {
        Some(path) => fs::write(path, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
