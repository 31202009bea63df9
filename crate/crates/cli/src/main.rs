//! `hrmod`: command-line toolkit for Hüsler–Reiss graphical models.
//!
//! Subcommands wrap the library operations and emit machine-readable JSON
//! reports. Exit codes: 0 success (or verdict "holds"), 1 usage/IO/schema
//! error, 2 negative verdict on valid input, 3 criterion disagreement.

mod model_file;
mod parse;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hrmod_core::ci::{
    check_global_markov, ci_general_mhr, ci_sigma2, ci_singleton, CiError, CiStatement, Ternary,
};
use hrmod_core::elliptope::{evaluate_f3_point, sample_boundary_excluded, sample_f3, F3Filters};
use hrmod_core::gen::{random_connected_graph, random_laplacian, random_variogram};
use hrmod_core::index_set::IndexSet;
use hrmod_core::model::{fiedler_bapat, Variogram};
use hrmod_core::setfn::{
    evaluate_tagged, m_hr, sigma2, MhrRep, SetFnError, SetFunctionKind, Sigma2Rep,
};
use hrmod_core::tol::Tol;

use model_file::{load, validation_code, LoadedModel, ModelFile, ModelKind};
use report::{
    envelope, print_line, print_report, residuals_json, set_json, ternary_str, verdict_json,
};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_NEGATIVE: u8 = 2;
const EXIT_DISAGREEMENT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "hrmod",
    version,
    about = "Hüsler–Reiss graphical model toolkit"
)]
struct Cli {
    /// Relative tolerance for all zero tests (default 1e-9, or HRMOD_TOL).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a model file (variogram or precision kind).
    Validate { file: PathBuf },
    /// Evaluate a set function over margins.
    Setfn {
        file: PathBuf,
        /// Which set function to evaluate.
        #[arg(long = "fn", value_enum)]
        function: FnKind,
        /// `all` or a semicolon-separated list of one-based subsets.
        #[arg(long, default_value = "all")]
        subsets: String,
        /// Also evaluate every equivalent representation (integral forms
        /// only for margins of size at most 3).
        #[arg(long)]
        reps: bool,
    },
    /// Decide an extremal conditional-independence statement.
    Ci {
        file: PathBuf,
        /// One-based indices of A, like `1` or `1,2`.
        #[arg(long)]
        a: String,
        /// One-based indices of B.
        #[arg(long)]
        b: String,
        /// One-based indices of C (must be nonempty).
        #[arg(long)]
        c: String,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
    },
    /// Extract the pairwise Markov graph; with --graph, verify the global
    /// Markov property against it.
    Markov {
        file: PathBuf,
        /// Candidate graph: `cycle4`, `path3`, `complete5`, or `1-2,2-3`.
        #[arg(long)]
        graph: Option<String>,
        /// Sweep size limit.
        #[arg(long, default_value_t = 7)]
        max_d: usize,
    },
    /// Generate a model file on standard output.
    Gen {
        #[arg(long, value_enum)]
        mode: GenMode,
        /// Model dimension (optional when --graph fixes it).
        #[arg(long)]
        d: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Graph for laplacian mode: named spec, edge list, or `random`.
        #[arg(long)]
        graph: Option<String>,
    },
    /// Sample the 3-dimensional elliptope into a CSV point cloud.
    Elliptope {
        /// Number of raw draws from the sampling box.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep only points whose precision matrix is an M-matrix.
        #[arg(long)]
        emtp2: bool,
        /// Keep only points in the band around sigma^2 = 1.
        #[arg(long)]
        boundary_only: bool,
        /// Additionally emit this many excluded-boundary (red locus) points.
        #[arg(long, default_value_t = 0)]
        red_locus: usize,
        /// Rescale every accepted point to its sigma^2 = 1 representative.
        #[arg(long)]
        normalized: bool,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FnKind {
    Mhr,
    Sigma2,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Method {
    Auto,
    Mhr,
    Sigma2,
    Singleton,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenMode {
    Points,
    Laplacian,
}

/// A terminal failure with its exit code; the message goes to stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let kind = e.kind();
            let _ = e.print();
            return if matches!(kind, ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                ExitCode::from(EXIT_OK)
            } else {
                ExitCode::from(EXIT_USAGE)
            };
        }
    };
    let tol = match resolve_tol(cli.tol) {
        Ok(t) => t,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    match run(cli.command, tol) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn resolve_tol(flag: Option<f64>) -> Result<Tol, Failure> {
    let rel = match flag {
        Some(t) => t,
        None => match std::env::var("HRMOD_TOL") {
            Ok(s) => s
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("HRMOD_TOL is not a number: `{s}`")))?,
            Err(_) => hrmod_core::tol::DEFAULT_REL_TOL,
        },
    };
    if !(rel > 0.0 && rel < 0.1) {
        return Err(Failure::usage(format!(
            "tolerance {rel} out of range (0, 0.1)"
        )));
    }
    Ok(Tol { rel })
}

fn run(command: Command, tol: Tol) -> Result<u8, Failure> {
    match command {
        Command::Validate { file } => cmd_validate(&file, tol),
        Command::Setfn {
            file,
            function,
            subsets,
            reps,
        } => cmd_setfn(&file, function, &subsets, reps, tol),
        Command::Ci {
            file,
            a,
            b,
            c,
            method,
        } => cmd_ci(&file, &a, &b, &c, method, tol),
        Command::Markov { file, graph, max_d } => cmd_markov(&file, graph.as_deref(), max_d, tol),
        Command::Gen {
            mode,
            d,
            seed,
            graph,
        } => cmd_gen(mode, d, seed, graph.as_deref()),
        Command::Elliptope {
            n,
            seed,
            emtp2,
            boundary_only,
            red_locus,
            normalized,
            out,
        } => cmd_elliptope(
            n,
            seed,
            emtp2,
            boundary_only,
            red_locus,
            normalized,
            &out,
            tol,
        ),
    }
}

fn load_model(path: &Path) -> Result<LoadedModel, Failure> {
    load(path).map_err(Failure::usage)
}

/// Load and semantically convert; semantic failures print a report and exit 2.
fn require_variogram(command: &str, model: &LoadedModel, tol: Tol) -> Result<Variogram, Failure> {
    match model.file.to_variogram(tol) {
        Ok(v) => Ok(v),
        Err(e) => {
            let report = envelope(
                command,
                tol.rel,
                Some(model),
                json!({ "valid": false, "code": validation_code(&e), "reason": e.to_string() }),
            );
            print_report(&report);
            Err(Failure {
                code: EXIT_NEGATIVE,
                message: format!("invalid model: {e}"),
            })
        }
    }
}

fn cmd_validate(path: &Path, tol: Tol) -> Result<u8, Failure> {
    let model = load_model(path)?;
    match model.file.to_variogram(tol) {
        Ok(v) => {
            let d = v.dim();
            let block =
                fiedler_bapat(&v, &IndexSet::full(d)).map_err(|e| Failure::usage(e.to_string()))?;
            let emtp2 = hrmod_core::ci::is_emtp2(&block.theta, tol);
            let report = envelope(
                "validate",
                tol.rel,
                Some(&model),
                json!({
                    "valid": true,
                    "d": d,
                    "sigma2": block.sigma2,
                    "p": block.p.iter().copied().collect::<Vec<f64>>(),
                    "emtp2": emtp2.emtp2,
                    "emtp2_boundary": emtp2.boundary,
                }),
            );
            print_report(&report);
            Ok(EXIT_OK)
        }
        Err(e) => {
            let report = envelope(
                "validate",
                tol.rel,
                Some(&model),
                json!({ "valid": false, "code": validation_code(&e), "reason": e.to_string() }),
            );
            print_report(&report);
            Ok(EXIT_NEGATIVE)
        }
    }
}

fn setfn_error(e: SetFnError) -> Failure {
    Failure::usage(e.to_string())
}

fn cmd_setfn(
    path: &Path,
    function: FnKind,
    subsets_arg: &str,
    with_reps: bool,
    tol: Tol,
) -> Result<u8, Failure> {
    let model = load_model(path)?;
    let v = require_variogram("setfn", &model, tol)?;
    let subsets = parse::subsets(subsets_arg, v.dim(), 12).map_err(Failure::usage)?;

    let mut values = Vec::with_capacity(subsets.len());
    for set in &subsets {
        let value = match function {
            FnKind::Mhr => m_hr(&v, set).map_err(setfn_error)?,
            FnKind::Sigma2 => sigma2(&v, set).map_err(setfn_error)?,
        };
        let mut entry = json!({ "subset": set_json(set), "value": value });
        if with_reps && set.len() >= 2 {
            let kind = match function {
                FnKind::Mhr => SetFunctionKind::Mhr,
                FnKind::Sigma2 => SetFunctionKind::Sigma2,
            };
            let tags: Vec<&'static str> = match function {
                FnKind::Mhr => MhrRep::ALL
                    .iter()
                    .filter(|rep| match rep {
                        MhrRep::Integral => set.len() <= 3,
                        MhrRep::SpanningTree => set.len() <= 8,
                        _ => true,
                    })
                    .map(|rep| rep.tag())
                    .collect(),
                FnKind::Sigma2 => Sigma2Rep::ALL
                    .iter()
                    .filter(|rep| !matches!(rep, Sigma2Rep::Integral) || set.len() <= 3)
                    .map(|rep| rep.tag())
                    .collect(),
            };
            let mut reps = serde_json::Map::new();
            for tag in tags {
                let tagged = evaluate_tagged(&v, set, kind, Some(tag), tol).map_err(setfn_error)?;
                reps.insert(tagged.representation.into(), tagged.value.into());
            }
            entry["reps"] = Value::Object(reps);
        }
        values.push(entry);
    }
    let fn_tag = match function {
        FnKind::Mhr => "mhr",
        FnKind::Sigma2 => "sigma2",
    };
    let report = envelope(
        "setfn",
        tol.rel,
        Some(&model),
        json!({ "fn": fn_tag, "values": values }),
    );
    print_report(&report);
    Ok(EXIT_OK)
}

fn ci_error(e: CiError) -> Failure {
    match e {
        CiError::CriterionDisagreement { residuals } => Failure {
            code: EXIT_DISAGREEMENT,
            message: format!(
                "criteria disagree at the working tolerance: {}",
                serde_json::to_string(&residuals_json(&residuals)).unwrap_or_default()
            ),
        },
        other => Failure::usage(other.to_string()),
    }
}

fn cmd_ci(path: &Path, a: &str, b: &str, c: &str, method: Method, tol: Tol) -> Result<u8, Failure> {
    let model = load_model(path)?;
    let v = require_variogram("ci", &model, tol)?;
    let d = v.dim();
    let a = parse::index_set(a, d).map_err(Failure::usage)?;
    let b = parse::index_set(b, d).map_err(Failure::usage)?;
    let c = parse::index_set(c, d).map_err(Failure::usage)?;
    if !a.is_disjoint(&b) || !a.is_disjoint(&c) || !b.is_disjoint(&c) {
        return Err(Failure::usage("A, B and C must be pairwise disjoint"));
    }
    let statement = CiStatement::new(a.clone(), b.clone(), c.clone());

    let mut verdicts: Vec<Value> = Vec::new();
    let primary: Ternary;
    let mut disagreement = false;

    match method {
        Method::Singleton => {
            if a.len() != 1 || b.len() != 1 {
                return Err(Failure::usage("--method singleton needs singleton A and B"));
            }
            let verdict = ci_singleton(&v, a.first().unwrap(), b.first().unwrap(), &c, tol)
                .map_err(ci_error)?;
            primary = verdict.verdict;
            verdicts.push(verdict_json(&verdict));
        }
        Method::Mhr => {
            let verdict = ci_general_mhr(&v, &statement, tol).map_err(ci_error)?;
            primary = verdict.verdict;
            verdicts.push(verdict_json(&verdict));
        }
        Method::Sigma2 => {
            let verdict = ci_sigma2(&v, &statement, tol).map_err(ci_error)?;
            primary = verdict.verdict;
            verdicts.push(verdict_json(&verdict));
        }
        Method::Auto => {
            let mhr = ci_general_mhr(&v, &statement, tol).map_err(ci_error)?;
            let sig = ci_sigma2(&v, &statement, tol).map_err(ci_error)?;
            let applicable = sig
                .applicability
                .map(|x| x.emtp2_on_margin && x.p_positive_on_margin)
                .unwrap_or(false);
            if applicable
                && mhr.verdict != Ternary::Indeterminate
                && sig.verdict != Ternary::Indeterminate
                && mhr.verdict != sig.verdict
            {
                disagreement = true;
            }
            primary = mhr.verdict;
            verdicts.push(verdict_json(&mhr));
            verdicts.push(verdict_json(&sig));
        }
    }

    let report = envelope(
        "ci",
        tol.rel,
        Some(&model),
        json!({
            "statement": {
                "a": set_json(&statement.a),
                "b": set_json(&statement.b),
                "c": set_json(&statement.c),
            },
            "verdict": ternary_str(primary),
            "agreement": !disagreement,
            "methods": verdicts,
        }),
    );
    print_report(&report);
    if disagreement {
        return Ok(EXIT_DISAGREEMENT);
    }
    Ok(match primary {
        Ternary::Holds => EXIT_OK,
        _ => EXIT_NEGATIVE,
    })
}

fn cmd_markov(path: &Path, graph_arg: Option<&str>, max_d: usize, tol: Tol) -> Result<u8, Failure> {
    let model = load_model(path)?;
    let v = require_variogram("markov", &model, tol)?;
    let pairwise = hrmod_core::ci::pairwise_markov_graph(&v, tol)
        .map_err(|e| Failure::usage(e.to_string()))?;
    let edges_json: Vec<Value> = pairwise
        .edges()
        .iter()
        .zip(pairwise.weights())
        .map(|(&(i, j), &w)| json!({ "edge": [i + 1, j + 1], "weight": w }))
        .collect();

    let mut results = json!({ "pairwise_graph": { "edges": edges_json } });
    let mut exit = EXIT_OK;
    if let Some(spec) = graph_arg {
        let g = parse::graph(spec, Some(v.dim())).map_err(Failure::usage)?;
        let sweep = check_global_markov(&v, &g, max_d, tol).map_err(|e| match e {
            CiError::TooLarge { d, max } => {
                Failure::usage(format!("dimension {d} exceeds --max-d {max}"))
            }
            other => ci_error(other),
        })?;
        let violations: Vec<Value> = sweep
            .violations
            .iter()
            .map(|viol| {
                json!({
                    "a": set_json(&viol.statement.a),
                    "b": set_json(&viol.statement.b),
                    "c": set_json(&viol.statement.c),
                    "gap": if viol.gap.is_finite() { Value::from(viol.gap) } else { Value::Null },
                    "note": viol.note,
                })
            })
            .collect();
        results["global_markov"] = json!({
            "graph_edges": g.edges().iter().map(|&(i, j)| vec![i + 1, j + 1]).collect::<Vec<_>>(),
            "triples_checked": sweep.triples_checked,
            "separated": sweep.separated,
            "passed": sweep.passed(),
            "violations": violations,
        });
        if !sweep.passed() {
            exit = EXIT_NEGATIVE;
        }
    }
    let report = envelope("markov", tol.rel, Some(&model), results);
    print_report(&report);
    Ok(exit)
}

fn cmd_gen(
    mode: GenMode,
    d: Option<usize>,
    seed: u64,
    graph_arg: Option<&str>,
) -> Result<u8, Failure> {
    let file = match mode {
        GenMode::Points => {
            if graph_arg.is_some() {
                return Err(Failure::usage("--graph only applies to laplacian mode"));
            }
            let d = d.ok_or_else(|| Failure::usage("points mode needs --d"))?;
            if d < 2 {
                return Err(Failure::usage("--d must be at least 2"));
            }
            let v = random_variogram(d, seed);
            ModelFile::from_matrix(
                ModelKind::Variogram,
                v.gamma().as_dmatrix(),
                Some(format!("points-d{d}-seed{seed}")),
            )
        }
        GenMode::Laplacian => {
            let (g, label) = match graph_arg {
                None | Some("random") => {
                    let d =
                        d.ok_or_else(|| Failure::usage("laplacian mode needs --d or --graph"))?;
                    if d < 2 {
                        return Err(Failure::usage("--d must be at least 2"));
                    }
                    (
                        random_connected_graph(d, seed, 0.35),
                        format!("random-d{d}"),
                    )
                }
                Some(spec) => {
                    let g = parse::graph(spec, d).map_err(Failure::usage)?;
                    (g, spec.to_string())
                }
            };
            if !g.is_connected() {
                return Err(Failure::usage("laplacian mode needs a connected graph"));
            }
            let lap = random_laplacian(&g, seed);
            ModelFile::from_matrix(
                ModelKind::Precision,
                lap.as_dmatrix(),
                Some(format!("laplacian-{label}-seed{seed}")),
            )
        }
    };
    print_line(&serde_json::to_string_pretty(&file).expect("model serializes"));
    Ok(EXIT_OK)
}

fn fmt_sig(x: f64) -> String {
    format!("{:.11e}", x)
}

#[allow(clippy::too_many_arguments)]
fn cmd_elliptope(
    n: usize,
    seed: u64,
    emtp2: bool,
    boundary_only: bool,
    red_locus: usize,
    normalized: bool,
    out: &Path,
    tol: Tol,
) -> Result<u8, Failure> {
    if n == 0 {
        return Err(Failure::usage("--n must be positive"));
    }
    // normalized points all land in the sigma^2 = 1 band, so the raw-scale
    // boundary filter is skipped in that mode
    let filters = F3Filters {
        emtp2,
        boundary_only: boundary_only && !normalized,
    };
    let mut points = sample_f3(n, seed, filters, tol);
    if normalized {
        points = points
            .into_iter()
            .filter_map(|p| {
                let s = p.sigma2;
                evaluate_f3_point([p.coords[0] / s, p.coords[1] / s, p.coords[2] / s], tol)
            })
            .collect();
    }
    let accepted = points.len();

    let mut csv = String::new();
    csv.push_str("g12,g13,g23,in_f3,sigma2,emtp2,p_nonneg,ci12_3,ci13_2,ci23_1,boundary_flag\n");
    let mut boundary_rows = 0usize;
    for p in &points {
        let flag = if p.boundary {
            boundary_rows += 1;
            1
        } else {
            0
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            fmt_sig(p.coords[0]),
            fmt_sig(p.coords[1]),
            fmt_sig(p.coords[2]),
            p.in_f3 as u8,
            fmt_sig(p.sigma2),
            p.emtp2 as u8,
            p.p_nonneg as u8,
            fmt_sig(p.ci_plane_residuals[0]),
            fmt_sig(p.ci_plane_residuals[1]),
            fmt_sig(p.ci_plane_residuals[2]),
            flag,
        ));
    }
    for r in sample_boundary_excluded(red_locus, seed) {
        let [g12, g13, g23] = r.coords;
        csv.push_str(&format!(
            "{},{},{},0,{},0,0,{},{},{},2\n",
            fmt_sig(g12),
            fmt_sig(g13),
            fmt_sig(g23),
            fmt_sig(f64::NAN),
            fmt_sig(g12 - g13 - g23),
            fmt_sig(g13 - g12 - g23),
            fmt_sig(g23 - g12 - g13),
        ));
    }
    std::fs::write(out, csv)
        .map_err(|e| Failure::usage(format!("cannot write {}: {e}", out.display())))?;

    let report = envelope(
        "elliptope",
        tol.rel,
        None,
        json!({
            "out": out.display().to_string(),
            "draws": n,
            "seed": seed,
            "accepted": accepted,
            "acceptance_rate": accepted as f64 / n as f64,
            "boundary_rows": boundary_rows,
            "red_locus_rows": red_locus,
            "normalized": normalized,
            "filters": { "emtp2": emtp2, "boundary_only": boundary_only },
        }),
    );
    print_report(&report);
    Ok(EXIT_OK)
}
