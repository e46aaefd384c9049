//! The `fbt` command-line front end.
//!
//! Exit codes: 0 success, 1 argument/parse/domain errors, 2 failed
//! verification, 3 convergence or resource limits.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::bijection::{decomposition_to_tree, parens_to_decomposition};
use crate::branching::{
    count_fathers_survivals, map_replicates, SampleStatus, SurvivalParams, DEFAULT_MAX_VERTICES,
};
use crate::combinatorics::{
    enumerate_decompositions, gf_coefficients, narayana, Decomposition, DEFAULT_ENUMERATION_CAP,
};
use crate::error::{Error, Result};
use crate::inference::{
    extinction_probability, ln_father_pmf, ln_likelihood, mgf_fixed_point, mle, no_father_mass,
    FatherStat, LikelihoodParams, MgfQuery, LOG_REPORT_THRESHOLD,
};
use crate::montecarlo::{mc_compare, McConfig};
use crate::parens::{
    decode_parens, encode_parens, enumerate_full_binary_trees, ParenString, DEFAULT_TREE_CAP,
};
use crate::tree::MultitypeTree;
use crate::verify::{run_verify, Level, VerifyOptions, DEFAULT_VERIFY_SEED};

const AFTER_HELP: &str = "\
Environment overrides for default tolerances:
  FBT_MGF_TOLERANCE        sup-norm stopping tolerance of the mgf iteration (1e-12)
  FBT_MGF_MAX_ITERATIONS   iteration budget of the mgf iteration (1000000)
  FBT_MIN_CELL_MASS        smallest theoretical mass reported by mc-compare (0.001)

Exit codes: 0 ok, 1 bad arguments or input, 2 verification failed,
3 convergence or resource limit hit.";

#[derive(Debug, Parser)]
#[command(
    name = "fbt",
    version,
    about = "Full binary multitype Galton-Watson trees"
)]
#[command(after_help = AFTER_HELP)]
struct Cli {
    /// Worker threads for sampling (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write standard output to this file instead.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Narayana number N(n, k).
    Narayana { n: u64, k: u64 },
    /// Coefficients of the decomposition generating function, ascending.
    GfCoeffs {
        d: usize,
        c: usize,
        #[arg(long, value_enum, default_value_t = ListFormat::Lines)]
        format: ListFormat,
    },
    /// All 2 x d decompositions with entries at most c.
    EnumDecomp {
        d: usize,
        c: u32,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
        cap: u64,
        #[arg(long, value_enum, default_value_t = MatrixFormat::Matrix)]
        format: MatrixFormat,
    },
    /// All full binary trees with n left and m right fathers.
    EnumTrees {
        n: usize,
        m: usize,
        #[arg(long, default_value_t = DEFAULT_TREE_CAP)]
        cap: u64,
        #[arg(long, value_enum, default_value_t = TreeFormat::Parens)]
        format: TreeFormat,
    },
    /// Tree to decomposition and back.
    Bijection {
        /// Parenthesis encoding of a full binary tree.
        #[arg(long, conflicts_with = "to_tree", required_unless_present = "to_tree")]
        to_matrix: Option<String>,
        /// File holding a decomposition (`d c` header, top row, bottom row).
        #[arg(long)]
        to_tree: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = TreeFormat::Parens)]
        format: TreeFormat,
    },
    /// Sample trees of the two-type model with survivals.
    Sample {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1)]
        root_type: u32,
        #[arg(long, default_value_t = DEFAULT_VERIFY_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_VERTICES)]
        max_vertices: usize,
        /// `csv` writes one summary row per tree; `json` adds the tree records.
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
    },
    /// Contour heights of a tree given as records or a parenthesis string.
    Contour {
        #[arg(long)]
        tree_file: PathBuf,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
    },
    /// Extinction probabilities for both root types.
    Extinction {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
    },
    /// Transform E[exp(2 s ||tau||)] of the contour period, for s <= 0.
    Mgf {
        #[command(flatten)]
        params: ParamArgs,
        /// Comma-separated values of s.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        s: Vec<f64>,
        #[command(flatten)]
        mgf: MgfArgs,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
    },
    /// Joint law of the father counts (D1, D2) on a grid.
    FatherPmf {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 5)]
        max_n: u64,
        #[arg(long, default_value_t = 5)]
        max_m: u64,
        #[arg(long, value_enum, default_value_t = TableFormat::Csv)]
        format: TableFormat,
    },
    /// Likelihood of (P, Q) given n left and m right fathers.
    Likelihood {
        #[arg(long = "P", alias = "p")]
        big_p: f64,
        #[arg(long = "Q", alias = "q")]
        big_q: f64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
    },
    /// Maximum likelihood estimates from n left and m right fathers.
    Estimate {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
        #[arg(long, value_enum, default_value_t = KvFormat::Text)]
        format: KvFormat,
    },
    /// Compare sampled trees with the closed forms.
    McCompare {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 100_000)]
        replicates: usize,
        #[arg(long, default_value_t = DEFAULT_VERIFY_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        root_type: u32,
        #[arg(long, default_value_t = 10_000)]
        max_vertices: usize,
        /// Comma-separated values of s for the transform cells.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            default_value = "-0.05,-0.2"
        )]
        s: Vec<f64>,
        #[arg(long, env = "FBT_MIN_CELL_MASS", default_value_t = 1e-3)]
        min_cell_mass: f64,
        #[command(flatten)]
        mgf: MgfArgs,
        #[arg(long, value_enum, default_value_t = ReportFormat::Csv)]
        format: ReportFormat,
    },
    /// Run the built-in checks.
    Verify {
        #[arg(long, default_value = "quick")]
        level: String,
        #[arg(long, default_value_t = DEFAULT_VERIFY_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        replicates: usize,
        #[arg(long, value_enum, default_value_t = KvFormat::Text)]
        format: KvFormat,
    },
}

/// Offspring parameters, either as six flags or one `--params` list.
/// Without either, `p = q = (0.5, 0.2, 0.3)`.
#[derive(Debug, Args)]
struct ParamArgs {
    /// `p0,p1,p2,q0,q1,q2`.
    #[arg(long, conflicts_with_all = ["p0", "p1", "p2", "q0", "q1", "q2"])]
    params: Option<String>,
    #[arg(long, requires_all = ["p1", "p2", "q0", "q1", "q2"])]
    p0: Option<f64>,
    #[arg(long, requires = "p0")]
    p1: Option<f64>,
    #[arg(long, requires = "p0")]
    p2: Option<f64>,
    #[arg(long, requires = "p0")]
    q0: Option<f64>,
    #[arg(long, requires = "p0")]
    q1: Option<f64>,
    #[arg(long, requires = "p0")]
    q2: Option<f64>,
}

pub const DEFAULT_PARAMS: [f64; 6] = [0.5, 0.2, 0.3, 0.5, 0.2, 0.3];

impl ParamArgs {
    fn resolve(&self) -> Result<SurvivalParams> {
        if let Some(list) = &self.params {
            return SurvivalParams::parse_list(list);
        }
        match (self.p0, self.p1, self.p2, self.q0, self.q1, self.q2) {
            (Some(p0), Some(p1), Some(p2), Some(q0), Some(q1), Some(q2)) => {
                SurvivalParams::new(p0, p1, p2, q0, q1, q2)
            }
            _ => {
                let [p0, p1, p2, q0, q1, q2] = DEFAULT_PARAMS;
                SurvivalParams::new(p0, p1, p2, q0, q1, q2)
            }
        }
    }
}

#[derive(Debug, Args)]
struct MgfArgs {
    #[arg(long, env = "FBT_MGF_TOLERANCE", default_value_t = crate::inference::DEFAULT_MGF_TOLERANCE)]
    tolerance: f64,
    #[arg(long, env = "FBT_MGF_MAX_ITERATIONS", default_value_t = crate::inference::DEFAULT_MGF_MAX_ITERATIONS)]
    max_iterations: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ListFormat {
    Lines,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MatrixFormat {
    Matrix,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TreeFormat {
    Parens,
    Records,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TableFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KvFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Csv,
    Summary,
    Json,
}

/// Parses `argv` (program name first) and runs the command.
pub fn run(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    let mut buf = Vec::new();
    let result = match cli.threads {
        Some(0) => Err(Error::arg("--threads must be positive")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| dispatch(cli.command, &mut buf))),
        None => dispatch(cli.command, &mut buf),
    };
    if let Err(e) = result {
        let _ = writeln!(err, "error: {e}");
        return e.exit_code();
    }
    let write_result = match &cli.output {
        Some(path) => fs::write(path, &buf)
            .map_err(|e| Error::arg(format!("cannot write {}: {e}", path.display()))),
        None => out
            .write_all(&buf)
            .and_then(|_| out.flush())
            .map_err(|e| Error::Internal(format!("write failed: {e}"))),
    };
    match result.and_then(|code| write_result.map(|_| code)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Internal(format!("write failed: {e}"))
}

fn json_line(out: &mut dyn Write, v: &impl serde::Serialize) -> Result<()> {
    let s = serde_json::to_string(v).map_err(|e| Error::Internal(e.to_string()))?;
    writeln!(out, "{s}").map_err(io)
}

/// Prints a probability, with its logarithm when it underflows.
fn prob_text(ln: f64) -> String {
    let v = ln.exp();
    if v < LOG_REPORT_THRESHOLD {
        format!("0 (ln = {ln})")
    } else {
        format!("{v}")
    }
}

fn read_file(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::arg(format!("cannot read {}: {e}", path.display())))
}

fn write_tree(out: &mut dyn Write, tree: &MultitypeTree, format: TreeFormat) -> Result<()> {
    match format {
        TreeFormat::Parens => writeln!(out, "{}", encode_parens(tree)?).map_err(io),
        TreeFormat::Records => write!(out, "{}", tree.to_records()).map_err(io),
        TreeFormat::Json => json_line(
            out,
            &json!({ "parens": encode_parens(tree)?, "records": tree.to_records() }),
        ),
    }
}

/// Returns the exit code on success.
fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Narayana { n, k } => {
            writeln!(out, "{}", narayana(n, k)?).map_err(io)?;
        }
        Command::GfCoeffs { d, c, format } => {
            let poly = gf_coefficients(d, c)?;
            match format {
                ListFormat::Lines => write!(out, "{poly}").map_err(io)?,
                ListFormat::Json => {
                    let v: Vec<String> = poly.coeffs().iter().map(|x| x.to_string()).collect();
                    json_line(out, &json!({ "d": d, "c": c, "coefficients": v }))?
                }
            }
        }
        Command::EnumDecomp { d, c, cap, format } => {
            for (i, dec) in enumerate_decompositions(d, c, cap)?.iter().enumerate() {
                match format {
                    MatrixFormat::Matrix => {
                        if i > 0 {
                            writeln!(out).map_err(io)?;
                        }
                        write!(out, "{dec}").map_err(io)?
                    }
                    MatrixFormat::Json => json_line(out, dec)?,
                }
            }
        }
        Command::EnumTrees { n, m, cap, format } => {
            for tree in enumerate_full_binary_trees(n, m, cap)? {
                write_tree(out, &tree, format)?;
            }
        }
        Command::Bijection {
            to_matrix,
            to_tree,
            format,
        } => match (to_matrix, to_tree) {
            (Some(s), _) => {
                let ps: ParenString = s.trim().parse()?;
                let dec = parens_to_decomposition(&ps)?;
                match format {
                    TreeFormat::Json => json_line(out, &dec)?,
                    _ => write!(out, "{dec}").map_err(io)?,
                }
            }
            (None, Some(path)) => {
                let dec: Decomposition = read_file(&path)?.parse()?;
                write_tree(out, &decomposition_to_tree(&dec)?, format)?;
            }
            (None, None) => return Err(Error::arg("pass --to-matrix or --to-tree")),
        },
        Command::Sample {
            params,
            root_type,
            seed,
            count,
            max_vertices,
            format,
        } => sample(
            out,
            &params.resolve()?,
            root_type,
            seed,
            count,
            max_vertices,
            format,
        )?,
        Command::Contour { tree_file, format } => {
            let text = read_file(&tree_file)?;
            let tree = if text.trim_start().starts_with('(') {
                decode_parens(&text.trim().parse()?)
            } else {
                MultitypeTree::from_records(&text)?
            };
            let path = tree.contour();
            match format {
                TableFormat::Csv => write!(out, "{}", path.to_csv()).map_err(io)?,
                TableFormat::Json => json_line(out, &path)?,
            }
        }
        Command::Extinction { params, format } => {
            let p = params.resolve()?;
            let e = extinction_probability(&p);
            match format {
                TableFormat::Csv => writeln!(
                    out,
                    "root_type,extinction\n1,{}\n2,{}\nclass,{:?}",
                    e[0],
                    e[1],
                    p.classify()
                )
                .map_err(io)?,
                TableFormat::Json => json_line(
                    out,
                    &json!({ "extinction": e, "criticality": p.classify() }),
                )?,
            }
        }
        Command::Mgf {
            params,
            s,
            mgf,
            format,
        } => {
            let dist = params.resolve()?.distribution();
            if let TableFormat::Csv = format {
                writeln!(out, "s,F1,F2,iterations,last_update").map_err(io)?;
            }
            for s in s {
                let q = MgfQuery {
                    s,
                    tolerance: mgf.tolerance,
                    max_iterations: mgf.max_iterations,
                };
                let sol = mgf_fixed_point(&dist, &q)?;
                match format {
                    TableFormat::Csv => writeln!(
                        out,
                        "{s},{},{},{},{}",
                        sol.values[0], sol.values[1], sol.iterations, sol.last_update
                    )
                    .map_err(io)?,
                    TableFormat::Json => json_line(out, &json!({ "s": s, "solution": sol }))?,
                }
            }
        }
        Command::FatherPmf {
            params,
            max_n,
            max_m,
            format,
        } => {
            let p = params.resolve()?;
            let mut rows = vec![(0, 0, no_father_mass(&p)?.ln())];
            for n in 1..=max_n {
                for m in 0..=max_m {
                    rows.push((n, m, ln_father_pmf(&p, n, m)?));
                }
            }
            if let TableFormat::Csv = format {
                writeln!(out, "n,m,pmf,ln_pmf").map_err(io)?;
            }
            for (n, m, ln) in rows {
                match format {
                    TableFormat::Csv => writeln!(out, "{n},{m},{},{ln}", ln.exp()).map_err(io)?,
                    TableFormat::Json => json_line(
                        out,
                        &json!({ "n": n, "m": m, "pmf": ln.exp(), "ln_pmf": ln }),
                    )?,
                }
            }
        }
        Command::Likelihood { big_p, big_q, n, m } => {
            let ln = ln_likelihood(&LikelihoodParams::new(big_p, big_q)?, n, m)?;
            writeln!(out, "likelihood={}\nln_likelihood={ln}", prob_text(ln)).map_err(io)?;
        }
        Command::Estimate { n, m, format } => {
            let e = mle(&FatherStat::new(n, m)?)?;
            match format {
                KvFormat::Text => writeln!(
                    out,
                    "P_hat={}\nQ_hat={}\nratio_p={}\nratio_q={}",
                    e.p_hat, e.q_hat, e.ratio_p, e.ratio_q
                )
                .map_err(io)?,
                KvFormat::Json => json_line(out, &e)?,
            }
        }
        Command::McCompare {
            params,
            replicates,
            seed,
            root_type,
            max_vertices,
            s,
            min_cell_mass,
            mgf,
            format,
        } => {
            let mut cfg = McConfig::new(replicates, seed);
            cfg.root_type = root_type;
            cfg.max_vertices = max_vertices;
            cfg.s_values = s;
            cfg.min_cell_mass = min_cell_mass;
            cfg.mgf_tolerance = mgf.tolerance;
            cfg.mgf_max_iterations = mgf.max_iterations;
            let report = mc_compare(&params.resolve()?, &cfg)?;
            match format {
                ReportFormat::Csv => write!(out, "{}", report.to_csv()).map_err(io)?,
                ReportFormat::Summary => write!(out, "{}", report.summary()).map_err(io)?,
                ReportFormat::Json => json_line(out, &report)?,
            }
        }
        Command::Verify {
            level,
            seed,
            replicates,
            format,
        } => {
            let mut opts = VerifyOptions::new(level.parse::<Level>()?);
            opts.seed = seed;
            opts.replicates = replicates;
            let report = run_verify(&opts);
            match format {
                KvFormat::Text => {
                    for c in &report.checks {
                        writeln!(out, "{c}").map_err(io)?;
                    }
                    writeln!(
                        out,
                        "{} of {} checks passed",
                        report.checks.len() - report.failures(),
                        report.checks.len()
                    )
                    .map_err(io)?;
                }
                KvFormat::Json => json_line(out, &report)?,
            }
            if !report.passed() {
                return Ok(2);
            }
        }
    }
    Ok(0)
}

fn sample(
    out: &mut dyn Write,
    params: &SurvivalParams,
    root_type: u32,
    seed: u64,
    count: usize,
    max_vertices: usize,
    format: TableFormat,
) -> Result<()> {
    if count == 0 {
        return Err(Error::arg("--count must be positive"));
    }
    let dist = params.distribution();
    let rows = map_replicates(&dist, root_type, seed, count, max_vertices, |o| {
        let counts = match o.status {
            SampleStatus::Complete => count_fathers_survivals(&o.tree).ok(),
            SampleStatus::Truncated => None,
        };
        let line = match format {
            TableFormat::Csv => {
                let c = counts
                    .map(|c| format!("{},{},{},{}", c.d1, c.d2, c.s1, c.s2))
                    .unwrap_or_else(|| ",,,".into());
                format!(
                    "{},{},{},{},{c}",
                    o.rng_seed,
                    o.status.as_str(),
                    o.vertex_count,
                    o.edge_count
                )
            }
            TableFormat::Json => json!({
                "seed": o.rng_seed,
                "status": o.status.as_str(),
                "vertex_count": o.vertex_count,
                "edge_count": o.edge_count,
                "counts": counts,
                "records": o.tree.to_records(),
            })
            .to_string(),
        };
        line
    })?;
    if let TableFormat::Csv = format {
        writeln!(out, "seed,status,vertex_count,edge_count,d1,d2,s1,s2").map_err(io)?;
    }
    for line in rows {
        writeln!(out, "{line}").map_err(io)?;
    }
    Ok(())
}
