use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use cubetoric::acceptance::Suite;
use cubetoric::census::{classify, classify_timed, run_census, CensusOptions, MatrixInput};
use cubetoric::cohomology::{
    build_ring, build_ring_from_lambda, find_square_zero_basis, iso_to_product_test, GradedRing, DEFAULT_SEARCH_BOUND,
};
use cubetoric::fan2d::{classification_holds, fan_census, Fan2D};
use cubetoric::intmat::Coefficients;
use cubetoric::quasitoric::{BottMatrix, CharMatrixCube};
use cubetoric::semifree::SemifreeReport;
use cubetoric::simplicial::{SimplePolytopeCombinatorics, SimplicialComplex};

#[derive(Parser)]
#[command(name = "cubetoric", version, about = "Quasitoric manifolds over cubes: classification and censuses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Io {
    /// Inline JSON or a file path; `-` or absent reads standard input
    #[arg(long)]
    input: Option<String>,
    /// Write the report here instead of standard output
    #[arg(long)]
    output: Option<PathBuf>,
    /// Human-readable tables instead of JSON
    #[arg(long)]
    pretty: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Full record for one matrix ({"n","a"} or {"n","lambda_star"})
    Classify {
        #[command(flatten)]
        io: Io,
        /// Include the classification time in microseconds
        #[arg(long)]
        timing: bool,
    },
    /// Semifree circle vectors and factorization verdicts
    Semifree {
        #[command(flatten)]
        io: Io,
    },
    /// Ring dump, graded ranks, BQ verdicts and the product test
    Cohomology {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value_t = Coeffs::Z)]
        coeffs: Coeffs,
        /// Entry bound for the square-zero basis search
        #[arg(long, default_value_t = DEFAULT_SEARCH_BOUND)]
        bound: i64,
    },
    /// Every valid reduced matrix in a range, as JSON lines and a summary
    Census {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 2)]
        rank: usize,
        #[arg(long, default_value_t = -2, allow_hyphen_values = true)]
        entry_min: i64,
        #[arg(long, default_value_t = 2, allow_hyphen_values = true)]
        entry_max: i64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Crosscomplex and cube recognition ({"vertices","facets"} or {"facets","vertex_facets"})
    Crosscomplex {
        #[command(flatten)]
        io: Io,
    },
    /// One fan ({"rays"}), or the census of all fans with --sweep
    Fan2d {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        sweep: bool,
        #[arg(long, default_value_t = 10)]
        max_rays: usize,
        #[arg(long, default_value_t = 6)]
        bound: i64,
    },
    /// Runs the acceptance suite
    Selfcheck {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Coeffs {
    Z,
    Z2,
}

impl From<Coeffs> for Coefficients {
    fn from(c: Coeffs) -> Self {
        match c {
            Coeffs::Z => Coefficients::Integers,
            Coeffs::Z2 => Coefficients::Mod2,
        }
    }
}

enum Failure {
    Input(anyhow::Error),
    Internal(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

type Outcome = Result<(), Failure>;

fn read_input(io: &Io) -> anyhow::Result<Value> {
    let text = match io.input.as_deref() {
        None | Some("-") => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("reading standard input")?;
            s
        }
        Some(s) if s.trim_start().starts_with(['{', '[']) => s.to_string(),
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
    };
    serde_json::from_str(&text).context("parsing input JSON")
}

fn open_output(io: &Io) -> anyhow::Result<Box<dyn Write>> {
    Ok(match &io.output {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn emit_report(io: &Io, value: &Value) -> anyhow::Result<()> {
    let mut out = open_output(io)?;
    if io.pretty {
        pretty_object(&mut out, value, 0)?;
    } else {
        emit(&mut out, value)?;
    }
    out.flush()?;
    Ok(())
}

fn pretty_object(out: &mut dyn Write, value: &Value, indent: usize) -> io::Result<()> {
    match value {
        Value::Object(map) => {
            let width = map.keys().map(|k| k.len()).max().unwrap_or(0);
            for (k, v) in map {
                if v.is_object() {
                    writeln!(out, "{:indent$}{k}", "")?;
                    pretty_object(out, v, indent + 2)?;
                } else {
                    writeln!(out, "{:indent$}{k:<width$}  {v}", "")?;
                }
            }
            Ok(())
        }
        other => writeln!(out, "{:indent$}{other}", ""),
    }
}

fn parse_matrix(v: &Value) -> anyhow::Result<MatrixInput> {
    MatrixInput::from_json(v).map_err(|e| anyhow!(e))
}

/// The valid characteristic matrix of an input, and its Bott matrix when it
/// came as one.
fn characteristic(m: &MatrixInput) -> anyhow::Result<(CharMatrixCube, Option<BottMatrix>)> {
    Ok(match m {
        MatrixInput::Bott { a, .. } => {
            let b = BottMatrix::new(a.clone())?;
            (b.characteristic(), Some(b))
        }
        MatrixInput::Lambda { lambda_star, .. } => (CharMatrixCube::new(lambda_star.clone())?, None),
    })
}

fn cmd_classify(io: &Io, timing: bool) -> Outcome {
    let m = parse_matrix(&read_input(io)?)?;
    let r = if timing { classify_timed(&m) } else { classify(&m) }.map_err(|e| anyhow!(e))?;
    let bad = cubetoric::census::check_record(&r);
    emit_report(io, &serde_json::to_value(&r).map_err(anyhow::Error::from)?)?;
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Failure::Internal(bad.join("; ")))
    }
}

fn cmd_semifree(io: &Io) -> Outcome {
    let m = parse_matrix(&read_input(io)?)?;
    let (c, bott) = characteristic(&m)?;
    let report = match &bott {
        Some(a) => SemifreeReport::for_bott(a),
        None => match c.bott_matrix_from() {
            Ok((a, _)) => SemifreeReport::for_bott(&a),
            Err(_) => SemifreeReport::for_lambda(&c),
        },
    };
    emit_report(io, &serde_json::to_value(&report).map_err(anyhow::Error::from)?)?;
    Ok(())
}

fn cmd_cohomology(io: &Io, coeffs: Coeffs, bound: i64) -> Outcome {
    let v = read_input(io)?;
    let coeffs = Coefficients::from(coeffs);
    let (ring, bott): (GradedRing, Option<BottMatrix>) = if v.get("square_rules").is_some() {
        let ring: GradedRing = serde_json::from_value(v).context("reading ring")?;
        let ring = match coeffs {
            Coefficients::Mod2 => ring.mod2().map_err(|e| anyhow!(e))?,
            Coefficients::Integers => ring,
        };
        (ring, None)
    } else {
        let (c, bott) = characteristic(&parse_matrix(&v)?)?;
        let bott = bott.or_else(|| c.bott_matrix_from().ok().map(|(a, _)| a));
        match &bott {
            Some(a) => (build_ring(a, coeffs), bott),
            None => (build_ring_from_lambda(&c, coeffs).map_err(|e| anyhow!(e))?, None),
        }
    };
    let mut report = json!({
        "ring": ring,
        "engine": ring.engine(),
        "graded_ranks": ring.graded_ranks(),
        "bq_algebra_mod2": ring.is_bq_algebra_mod2(),
        "bq_ordering_mod2": ring.bq_ordering_mod2(),
        "top_product": ring.top_product(),
    });
    match &bott {
        Some(a) if coeffs == Coefficients::Integers => {
            let iso = iso_to_product_test(a);
            report["iso_to_product"] = json!(iso.iso);
            report["factorization"] = json!(iso.factorization);
            report["basis"] = json!(iso.basis);
        }
        _ => {
            let basis = find_square_zero_basis(&ring, bound);
            report["iso_to_product"] = json!(basis.is_some());
            report["basis"] = json!(basis.map(|b| b.vectors));
        }
    }
    emit_report(io, &report)?;
    Ok(())
}

fn cmd_census(io: &Io, opts: CensusOptions) -> Outcome {
    opts.validate().map_err(|e| anyhow!(e))?;
    let mut out = open_output(io)?;
    let mut write_err: Option<anyhow::Error> = None;
    let mut violations = Vec::new();
    if io.pretty {
        let _ = writeln!(
            out,
            "{:<32} {:>5} {:>5} {:>5} {:>8} {:>5} {:>5}",
            "lambda_star", "bott", "omni", "sf", "strict", "iso", "bq"
        );
    }
    let summary = run_census(opts, |r| {
        if write_err.is_some() {
            return;
        }
        let rec = &r.record;
        let res = if io.pretty {
            let key = match &rec.input {
                MatrixInput::Lambda { lambda_star, .. } => format!("{:?}", lambda_star.rows()),
                MatrixInput::Bott { a, .. } => format!("{:?}", a.rows()),
            };
            writeln!(
                out,
                "{key:<32} {:>5} {:>5} {:>5} {:>8} {:>5} {:>5}",
                rec.bott,
                rec.bott_up_to_omniorientation,
                rec.semifree_vectors.len(),
                rec.strict_factorization,
                rec.ring_iso_to_product,
                rec.bq_ordering_mod2.is_some()
            )
            .map_err(anyhow::Error::from)
        } else {
            emit(&mut out, rec)
        };
        if let Err(e) = res {
            write_err = Some(e);
        }
        if !r.violations.is_empty() {
            violations.push(format!("{:?}: {}", rec.input, r.violations.join("; ")));
        }
    })
    .map_err(|e| anyhow!(e))?;
    if let Some(e) = write_err {
        return Err(Failure::Input(e));
    }
    if io.pretty {
        writeln!(out).map_err(anyhow::Error::from)?;
        pretty_object(&mut out, &serde_json::to_value(&summary).map_err(anyhow::Error::from)?, 0)
            .map_err(anyhow::Error::from)?;
    } else {
        emit(&mut out, &json!({ "summary": summary }))?;
    }
    out.flush().map_err(anyhow::Error::from)?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Internal(violations.join("\n")))
    }
}

fn cmd_crosscomplex(io: &Io) -> Outcome {
    let v = read_input(io)?;
    let report = if v.get("vertex_facets").is_some() {
        let p: SimplePolytopeCombinatorics = serde_json::from_value(v).context("reading polytope")?;
        let k = p.dual_complex();
        json!({
            "dimension": p.dimension(),
            "facets": p.facet_count(),
            "combinatorial_cube": p.is_combinatorial_cube(),
            "dual_crosscomplex": k.is_crosscomplex(),
            "dual_crosscomplex_recursive": k.is_crosscomplex_recursive(),
        })
    } else {
        let k: SimplicialComplex = serde_json::from_value(v).context("reading complex")?;
        json!({
            "dimension": k.dimension(),
            "f_vector": k.f_vector(),
            "pure": k.is_pure(),
            "connected": k.is_connected(),
            "crosscomplex": k.is_crosscomplex(),
            "crosscomplex_recursive": k.is_crosscomplex_recursive(),
        })
    };
    let direct = report.get("crosscomplex").or(report.get("dual_crosscomplex"));
    let recursive = report.get("crosscomplex_recursive").or(report.get("dual_crosscomplex_recursive"));
    emit_report(io, &report)?;
    if direct == recursive {
        Ok(())
    } else {
        Err(Failure::Internal("crosscomplex recognizers disagree".into()))
    }
}

fn cmd_fan_sweep(io: &Io, max_rays: usize, bound: i64) -> Outcome {
    if max_rays > 12 || !(1..=8).contains(&bound) {
        return Err(Failure::Input(anyhow!("sweep limits: max_rays <= 12, 1 <= bound <= 8")));
    }
    let (records, summary) = fan_census(max_rays, bound);
    let mut out = open_output(io)?;
    if io.pretty {
        for r in records.iter().filter(|r| !r.semifree.is_empty()) {
            writeln!(out, "{:?}  semifree {:?}", r.rays, r.semifree).map_err(anyhow::Error::from)?;
        }
        pretty_object(&mut out, &serde_json::to_value(&summary).map_err(anyhow::Error::from)?, 0)
            .map_err(anyhow::Error::from)?;
    } else {
        for r in &records {
            emit(&mut out, r)?;
        }
        emit(&mut out, &json!({ "summary": summary }))?;
    }
    out.flush().map_err(anyhow::Error::from)?;
    if summary.violations == 0 {
        Ok(())
    } else {
        Err(Failure::Internal(format!("{} semifree fans violate the classification", summary.violations)))
    }
}

fn cmd_fan(io: &Io) -> Outcome {
    let v = read_input(io)?;
    let f: Fan2D = serde_json::from_value(v).context("reading fan")?;
    if !f.is_complete_smooth() {
        emit_report(io, &json!({ "rays": f.rays, "complete_smooth": false }))?;
        return Ok(());
    }
    let semifree = f.semifree_vectors().map_err(|e| anyhow!(e))?;
    let normal_forms: Vec<Value> = semifree
        .iter()
        .map(|&nu| {
            let g = f.normalized_at(nu).expect("semifree vectors come from this fan");
            json!({ "nu": nu, "rays": g.rays, "reduced_matrix": g.reduced_matrix() })
        })
        .collect();
    let holds = semifree.is_empty() || classification_holds(&f, &semifree);
    emit_report(
        io,
        &json!({
            "rays": f.rays,
            "complete_smooth": true,
            "semifree": semifree,
            "normalized": normal_forms,
            "canonical_form": f.canonical_form(),
            "classification_holds": holds,
        }),
    )?;
    if holds {
        Ok(())
    } else {
        Err(Failure::Internal("semifree fan violates the classification".into()))
    }
}

fn cmd_selfcheck(io: &Io, jobs: usize) -> Outcome {
    let suite = Suite::new(jobs);
    let mut out = open_output(io)?;
    let mut failed = Vec::new();
    for id in cubetoric::acceptance::criterion_ids() {
        let r = suite.run(id).expect("listed criterion");
        if io.pretty {
            writeln!(out, "{r}").map_err(anyhow::Error::from)?;
        } else {
            emit(&mut out, &r)?;
        }
        out.flush().map_err(anyhow::Error::from)?;
        if !r.passed {
            failed.push(r.id);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Internal(format!("failed criteria {failed:?}")))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Classify { io, timing } => cmd_classify(io, *timing),
        Command::Semifree { io } => cmd_semifree(io),
        Command::Cohomology { io, coeffs, bound } => cmd_cohomology(io, *coeffs, *bound),
        Command::Census { io, rank, entry_min, entry_max, jobs } => {
            cmd_census(io, CensusOptions { n: *rank, entry_min: *entry_min, entry_max: *entry_max, jobs: *jobs })
        }
        Command::Crosscomplex { io } => cmd_crosscomplex(io),
        Command::Fan2d { io, sweep: true, max_rays, bound } => cmd_fan_sweep(io, *max_rays, *bound),
        Command::Fan2d { io, .. } => cmd_fan(io),
        Command::Selfcheck { io, jobs } => cmd_selfcheck(io, *jobs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            let msg = json!({ "error": "input", "message": format!("{e:#}") });
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(m)) => {
            let msg = json!({ "error": "invariant", "message": m });
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
