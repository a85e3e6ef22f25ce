use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use stablepca::error::Error;
use stablepca::estimate::{fit_spectral_model, SampleMatrix};
use stablepca::io::{read_matrix_csv, read_model_json, to_canonical_json, write_matrix_csv, CellRule};
use stablepca::model::{normalize, sample_model};
use stablepca::pca::{
    barvinok_pca, exhaustive_pca, forward_pca, gaussian_classic_pca, Diagnostics, PcaSolution, SolverConfig,
};
use stablepca::report::{render_solution, write_per_atom_csv, Format};
use stablepca::selection::{best_subset, forward_select, weighted_pca_regression, RegressionModel};
use stablepca::semimodule::{independence_check, lemma2_permutation, thm3_family};
use stablepca::semiring::{SemiVector, SemiringSpec};
use stablepca::verify;

/// Relative output paths are resolved against this directory when set.
const OUT_DIR_ENV: &str = "STABLEPCA_OUT_DIR";

#[derive(Parser)]
#[command(name = "stablepca", version, about = "PCA for max-stable and other stable models")]
struct Cli {
    /// Worker threads for independent solver restarts.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Exhaustive,
    Forward,
    Barvinok,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    BestSubset,
    Forward,
    Weighted,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Draw samples from a Frechet model and write them as CSV.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a spectral model to positive samples.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value = "1", value_parser = parse_q)]
        q: f64,
        /// Number of exceedances kept.
        #[arg(long)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Max-stable PCA of a model.
    Pca {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        p: usize,
        #[arg(long, value_enum, default_value = "exhaustive")]
        variant: Variant,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = 20_000)]
        max_iters: usize,
        /// Norm used to report basis columns (`inf` for the sup norm).
        #[arg(long, default_value = "inf", value_parser = parse_q)]
        q: f64,
        /// Normalize and merge the model's columns before solving.
        #[arg(long)]
        normalize: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: OutFormat,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-atom distances and coefficients as CSV.
        #[arg(long)]
        per_atom: Option<PathBuf>,
    },
    /// Classic PCA of a covariance matrix.
    ClassicPca {
        #[arg(long)]
        cov: PathBuf,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Variable selection in a linear regression model.
    Select {
        /// Covariance of (eps, X_1..X_{k-1}) as CSV.
        #[arg(long, conflicts_with = "data", requires_all = ["sigma", "beta"])]
        cov: Option<PathBuf>,
        #[arg(long)]
        sigma: Option<f64>,
        /// Comma-separated coefficients of X_1..X_{k-1}.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        beta: Option<Vec<f64>>,
        /// Data CSV with the response in the first column.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        p: usize,
        #[arg(long, value_enum, default_value = "best-subset")]
        method: Method,
        #[arg(long, default_value_t = 1.0)]
        wy: f64,
        #[arg(long, default_value_t = 1.0)]
        wx: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Independence and rank checks in max-times.
    RankCheck {
        /// Check the family (1, delta^i, delta^2i), i = 1..n.
        #[arg(long, requires_all = ["n", "delta"])]
        thm3: bool,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        /// Check the three-vector ordering on random triples.
        #[arg(long, requires = "seed")]
        lemma2: bool,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Check independence of the rows of a CSV file.
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: OutFormat,
    },
    /// Run the built-in acceptance suite.
    Verify {
        #[arg(long)]
        seed: u64,
        /// Run a single criterion (1..=10).
        #[arg(long)]
        criterion: Option<usize>,
        #[arg(long, value_enum, default_value = "table")]
        format: OutFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_q(s: &str) -> Result<f64, String> {
    let q = match s {
        "inf" | "Inf" | "infinity" => f64::INFINITY,
        _ => s.parse::<f64>().map_err(|e| e.to_string())?,
    };
    if q >= 1.0 {
        Ok(q)
    } else {
        Err(format!("q must be >= 1, got {s}"))
    }
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) | Error::Unsupported(_) | Error::DegenerateDenominator(_) => 2,
            Error::Internal(_) => 1,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn data_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: 3,
        message: format!("{}: {e}", path.display()),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| data_error(path, e))
}

fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => {
            let p = resolve(p);
            std::fs::write(&p, text).map_err(|e| data_error(&p, e))
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure {
            code: 1,
            message: e.to_string(),
        }),
    }
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), Failure> {
    emit(out, &to_canonical_json(value)?)
}

#[derive(Serialize)]
struct AtomDistance {
    atom: usize,
    distance: f64,
}

#[derive(Serialize)]
struct BarvinokReport {
    variant: &'static str,
    h1: Vec<Vec<f64>>,
    h2: Vec<Vec<f64>>,
    objective: f64,
    per_atom: Vec<AtomDistance>,
    diagnostics: Diagnostics,
}

#[derive(Serialize)]
struct CheckLine {
    name: String,
    passed: bool,
    detail: String,
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let threads = cli.threads;
    if threads == 0 {
        return Err(Error::InvalidParameter("--threads must be >= 1".into()).into());
    }
    match cli.command {
        Command::Simulate {
            model,
            count,
            seed,
            out,
        } => {
            let m = read_model_json(open(&model)?)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = sample_model(&m, count, &mut rng)?;
            let mut buf = Vec::new();
            write_matrix_csv(&mut buf, &x, "x")?;
            emit(out.as_deref(), &String::from_utf8_lossy(&buf))?;
            Ok(0)
        }
        Command::Fit { data, alpha, q, k, out } => {
            let x = read_matrix_csv(open(&data)?, CellRule::Positive).map_err(|e| data_error(&data, e))?;
            let m = fit_spectral_model(&SampleMatrix::new(x)?, alpha, q, k)?;
            emit_json(out.as_deref(), &m)?;
            Ok(0)
        }
        Command::Pca {
            model,
            p,
            variant,
            seed,
            restarts,
            max_iters,
            q,
            normalize: norm,
            format,
            out,
            per_atom,
        } => {
            let mut m = read_model_json(open(&model)?)?;
            if norm {
                m = normalize(&m)?;
            }
            let cfg = SolverConfig {
                restarts,
                max_iters,
                seed,
                threads,
                q,
                ..SolverConfig::default()
            };
            let (text, converged, sol): (String, bool, Option<PcaSolution>) = match variant {
                Variant::Exhaustive | Variant::Forward => {
                    let sol = if matches!(variant, Variant::Forward) {
                        forward_pca(&m, p, &cfg)?
                    } else {
                        exhaustive_pca(&m, p, &cfg)?
                    };
                    let fmt = match format {
                        OutFormat::Json => Format::Json,
                        OutFormat::Table => Format::Table,
                    };
                    (render_solution(&sol, fmt)?, sol.diagnostics.converged, Some(sol))
                }
                Variant::Barvinok => {
                    let sol = barvinok_pca(&m, p, &cfg)?;
                    let h = sol.reconstruction_map();
                    let per_atom = (0..m.n())
                        .map(|j| {
                            let u = m.column(j);
                            let distance = (0..m.d())
                                .map(|i| {
                                    let r = (0..m.d()).fold(0.0f64, |acc, l| acc.max(h[(i, l)] * u[l]));
                                    (u[i] - r).abs()
                                })
                                .sum();
                            AtomDistance { atom: j, distance }
                        })
                        .collect();
                    let converged = sol.diagnostics.converged;
                    let report = BarvinokReport {
                        variant: "barvinok",
                        h1: sol.h1,
                        h2: sol.h2,
                        objective: sol.objective,
                        per_atom,
                        diagnostics: sol.diagnostics,
                    };
                    (to_canonical_json(&report)?, converged, None)
                }
            };
            emit(out.as_deref(), &text)?;
            if let (Some(path), Some(sol)) = (per_atom, sol.as_ref()) {
                let path = resolve(&path);
                let f = File::create(&path).map_err(|e| data_error(&path, e))?;
                write_per_atom_csv(f, sol, m.mu())?;
            }
            if converged {
                Ok(0)
            } else {
                eprintln!("warning: solver did not converge within {max_iters} iterations");
                Ok(4)
            }
        }
        Command::ClassicPca { cov, p, out } => {
            let c = read_matrix_csv(open(&cov)?, CellRule::Finite).map_err(|e| data_error(&cov, e))?;
            let sol = gaussian_classic_pca(&c, p).map_err(|e| match e {
                Error::InvalidParameter(m) if m.contains("symmetric") || m.contains("semidefinite") => Error::Data(m),
                other => other,
            })?;
            emit_json(out.as_deref(), &sol)?;
            Ok(0)
        }
        Command::Select {
            cov,
            sigma,
            beta,
            data,
            p,
            method,
            wy,
            wx,
            out,
        } => {
            let model = match (cov, data) {
                (Some(path), None) => {
                    let c = read_matrix_csv(open(&path)?, CellRule::Finite).map_err(|e| data_error(&path, e))?;
                    RegressionModel::new(c, sigma.unwrap_or(0.0), beta.unwrap_or_default())?
                }
                (None, Some(path)) => {
                    let d = read_matrix_csv(open(&path)?, CellRule::Finite).map_err(|e| data_error(&path, e))?;
                    if d.ncols() < 2 {
                        return Err(data_error(&path, "need a response and at least one predictor"));
                    }
                    let y: Vec<f64> = d.column(0).iter().copied().collect();
                    let x: DMatrix<f64> = d.columns(1, d.ncols() - 1).into_owned();
                    RegressionModel::from_data(&y, &x)?
                }
                _ => {
                    return Err(Failure {
                        code: 2,
                        message: "select needs --cov (with --sigma and --beta) or --data".into(),
                    })
                }
            };
            match method {
                Method::BestSubset => emit_json(out.as_deref(), &best_subset(&model, p)?)?,
                Method::Forward => emit_json(out.as_deref(), &forward_select(&model, p)?)?,
                Method::Weighted => {
                    let w = weighted_pca_regression(&model, p, wy, wx)?;
                    emit_json(out.as_deref(), &w)?;
                    if !w.converged {
                        return Ok(4);
                    }
                }
            }
            Ok(0)
        }
        Command::RankCheck {
            thm3,
            n,
            delta,
            lemma2,
            trials,
            seed,
            vectors,
            format,
        } => {
            let mt = SemiringSpec::MaxTimes;
            let mut lines = Vec::new();
            if thm3 {
                let (n, delta) = (n.unwrap_or(0), delta.unwrap_or(0.0));
                let fam = thm3_family(n, delta)?;
                let ok = independence_check(&fam, mt)?;
                lines.push(CheckLine {
                    name: "independent".into(),
                    passed: ok,
                    detail: format!("(1, delta^i, delta^2i), i = 1..{n}, delta = {delta}"),
                });
            }
            if lemma2 {
                use rand::Rng;
                let mut rng = ChaCha8Rng::seed_from_u64(seed.unwrap_or(0));
                let mut found = 0;
                for _ in 0..trials {
                    let mut v =
                        || SemiVector::max_times(vec![rng.random_range(0.01..1.0), rng.random_range(0.01..1.0)]);
                    let (a, b, c) = (v()?, v()?, v()?);
                    if lemma2_permutation(&a, &b, &c, mt).is_ok() {
                        found += 1;
                    }
                }
                lines.push(CheckLine {
                    name: "lemma2".into(),
                    passed: found == trials,
                    detail: format!("ordering witness found for {found}/{trials} random triples"),
                });
            }
            if let Some(path) = vectors {
                let rows = read_matrix_csv(open(&path)?, CellRule::Finite).map_err(|e| data_error(&path, e))?;
                let vs = (0..rows.nrows())
                    .map(|r| SemiVector::max_times(rows.row(r).iter().copied().collect()))
                    .collect::<Result<Vec<_>, _>>()?;
                let ok = independence_check(&vs, mt)?;
                lines.push(CheckLine {
                    name: "independent".into(),
                    passed: ok,
                    detail: format!("{} vectors from {}", vs.len(), path.display()),
                });
            }
            if lines.is_empty() {
                return Err(Failure {
                    code: 2,
                    message: "rank-check needs --thm3, --lemma2 or --vectors".into(),
                });
            }
            let all = lines.iter().all(|l| l.passed);
            match format {
                OutFormat::Json => emit_json(None, &lines)?,
                OutFormat::Table => {
                    let text: String = lines
                        .iter()
                        .map(|l| format!("{}: {}    {}\n", l.name, l.passed, l.detail))
                        .collect();
                    emit(None, &text)?;
                }
            }
            Ok(if all { 0 } else { 1 })
        }
        Command::Verify {
            seed,
            criterion,
            format,
            out,
        } => {
            let reports = match criterion {
                Some(id) => vec![verify::run_criterion(id, seed, threads)?],
                None => verify::run_all(seed, threads),
            };
            let text = match format {
                OutFormat::Json => to_canonical_json(&reports)?,
                OutFormat::Table => reports
                    .iter()
                    .map(|r| {
                        format!(
                            "{:>2}  {:<34} {}  {}\n",
                            r.id,
                            r.title,
                            if r.passed { "PASS" } else { "FAIL" },
                            r.detail
                        )
                    })
                    .collect(),
            };
            emit(out.as_deref(), &text)?;
            Ok(if reports.iter().all(|r| r.passed) { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
