use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use dercalc::algebra;
use dercalc::calculus::{koszul_d, wedge, DerivationFrame};
use dercalc::connections::{curvature_on_a, flat_gauge_equivalent, gauge_transform, module_curvature};
use dercalc::io::{self, AnyConnection, AnyForm, ComplexJson, ConnectionJson, MatrixJson};
use dercalc::matrix_functions::{
    demo_connection, nc_integrate_inner, ymh_action, BoxDomain, MixedFrame, WeightedMetric, DEFAULT_MAX_DEGREE,
};
use dercalc::matrix_geometry::{cohomology, nc_integrate, CohomologyConfig, IntegrationConfig, MatrixFrame};
use dercalc::moyal::{self, IspFrame, MoyalConfig, MoyalPoly};
use dercalc::{Error, Tolerance};

/// Derivation-based noncommutative differential calculus.
#[derive(Debug, Parser)]
#[command(name = "dercalc", version)]
struct Cli {
    /// Emit compact JSON instead of the default human-readable output.
    #[arg(long, global = true)]
    json: bool,

    /// Tolerance for approximate predicates (overrides DERCALC_TOL).
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generalized Gell-Mann basis of sl_n with structure constants and metric.
    Basis(SizeArg),
    /// Koszul differential of a form file.
    D { form: String },
    /// Wedge product of two form files on the same frame.
    Wedge { left: String, right: String },
    /// Betti numbers of the calculus on M_n.
    Cohomology {
        #[arg(long)]
        n: usize,
        /// Highest degree to compute (defaults to n^2 - 1).
        #[arg(long)]
        max_degree: Option<usize>,
        /// Largest cochain space dimension allowed.
        #[arg(long, default_value_t = CohomologyConfig::default().dimension_cap)]
        cap: usize,
    },
    /// Curvature of a connection file.
    Curvature { connection: String },
    /// Gauge transform of a connection file by a matrix file.
    Gauge { connection: String, matrix: String },
    /// Decide whether two flat module connections are gauge equivalent.
    FlatEquiv { left: String, right: String },
    /// Noncommutative integral of a form file.
    Integrate { form: String },
    /// Yang-Mills-Higgs models on matrix-valued functions.
    Ymh {
        #[command(subcommand)]
        command: YmhCommand,
    },
    /// Polynomial Moyal plane.
    Moyal {
        #[command(subcommand)]
        command: MoyalCommand,
    },
}

#[derive(Debug, Args)]
struct SizeArg {
    #[arg(long)]
    n: usize,
}

#[derive(Debug, Subcommand)]
enum YmhCommand {
    /// Action of a sample connection with all three curvature parts.
    Demo {
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Shrinking of the Higgs field: A_k = epsilon iE_k.
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
    },
}

#[derive(Debug, Args)]
struct PairArgs {
    #[arg(long)]
    theta: f64,
    left: String,
    right: String,
}

#[derive(Debug, Subcommand)]
enum MoyalCommand {
    /// Star product P*Q.
    Star(PairArgs),
    /// Star commutator [P, Q].
    Commutator(PairArgs),
    /// Poisson bracket {P, Q}.
    Poisson(PairArgs),
    /// Curvature of the canonical connection on the isp(2) frame.
    Curvature {
        #[arg(long)]
        theta: f64,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_input_error() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn input_failure(message: String) -> Failure {
    Failure { code: 2, message }
}

fn read(path: &str) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_failure(format!("cannot read {path}: {e}")))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, Failure> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| input_failure(format!("{path}: {e}")))
}

struct Output {
    json: bool,
}

impl Output {
    /// Structured values: indented JSON by default, compact with `--json`.
    fn value<T: serde::Serialize>(&self, v: &T) -> String {
        if self.json {
            io::to_compact(v)
        } else {
            io::to_pretty(v)
        }
    }
}

fn run(cli: Cli) -> Result<String, Failure> {
    let tol = match cli.tol {
        Some(t) if t.is_finite() && t > 0.0 => t,
        Some(t) => return Err(input_failure(format!("--tol must be positive, got {t}"))),
        None => Tolerance::from_env().value(),
    };
    let out = Output { json: cli.json };
    match cli.command {
        Command::Basis(SizeArg { n }) => {
            let b = algebra::build_basis(n)?;
            Ok(out.value(&io::basis_to_json(&b)))
        }
        Command::D { form } => {
            let result = match io::parse_form(&read(&form)?)? {
                AnyForm::Matrix(f, w) => AnyForm::Matrix(f.clone(), koszul_d(&f, &w)?),
                AnyForm::Mixed(f, w) => AnyForm::Mixed(f.clone(), koszul_d(&f, &w)?),
                AnyForm::Spatial(f, w) => AnyForm::Spatial(f.clone(), koszul_d(&f, &w)?),
                AnyForm::Isp(f, w) => AnyForm::Isp(f.clone(), koszul_d(&f, &w)?),
            };
            Ok(out.value(&result.to_json_value()))
        }
        Command::Wedge { left, right } => {
            let a = io::parse_form(&read(&left)?)?;
            let b = io::parse_form(&read(&right)?)?;
            let result = match (a, b) {
                (AnyForm::Matrix(f, x), AnyForm::Matrix(_, y)) => AnyForm::Matrix(f.clone(), wedge(&f, &x, &y)?),
                (AnyForm::Mixed(f, x), AnyForm::Mixed(_, y)) => AnyForm::Mixed(f.clone(), wedge(&f, &x, &y)?),
                (AnyForm::Spatial(f, x), AnyForm::Spatial(_, y)) => AnyForm::Spatial(f.clone(), wedge(&f, &x, &y)?),
                (AnyForm::Isp(f, x), AnyForm::Isp(_, y)) => AnyForm::Isp(f.clone(), wedge(&f, &x, &y)?),
                (a, b) => {
                    return Err(Error::FrameMismatch {
                        left: frame_name(&a),
                        right: frame_name(&b),
                    }
                    .into())
                }
            };
            Ok(out.value(&result.to_json_value()))
        }
        Command::Cohomology { n, max_degree, cap } => {
            let mf = MatrixFrame::gell_mann(n)?;
            let cfg = CohomologyConfig {
                dimension_cap: cap,
                ..CohomologyConfig::default()
            };
            let report = cohomology(&mf, max_degree.unwrap_or(mf.dim()), &cfg)?;
            if cli.json {
                Ok(io::to_compact(&json!({
                    "n": n,
                    "betti": report.betti,
                    "dims": report.dims,
                    "ranks": report.ranks,
                })))
            } else {
                Ok(io::to_compact(&report.betti))
            }
        }
        Command::Curvature { connection } => {
            let c = io::connection_from_json(&read_json(&connection)?)?;
            let form = match &c {
                AnyConnection::OnA { frame, conn } => curvature_on_a(frame, conn)?,
                AnyConnection::Module { frame, conn } => module_curvature(conn, frame)?,
            };
            Ok(out.value(&io::form_to_json(&form)))
        }
        Command::Gauge { connection, matrix } => {
            let c = io::connection_from_json(&read_json(&connection)?)?;
            let g = io::matrix_from_json(&read_json::<MatrixJson>(&matrix)?)?;
            let moved = match c {
                AnyConnection::OnA { frame, conn } => {
                    let conn = gauge_transform(&frame, &conn, &g)?;
                    AnyConnection::OnA { frame, conn }
                }
                AnyConnection::Module { frame, conn } => {
                    let conn = conn.gauge(&g)?;
                    AnyConnection::Module { frame, conn }
                }
            };
            Ok(out.value(&io::connection_to_json(&moved)))
        }
        Command::FlatEquiv { left, right } => {
            let a = module_connection(&read_json(&left)?)?;
            let b = module_connection(&read_json(&right)?)?;
            if a.0.n() != b.0.n() {
                return Err(Error::FrameMismatch {
                    left: a.0.frame_id(),
                    right: b.0.frame_id(),
                }
                .into());
            }
            let eq = flat_gauge_equivalent(&a.1, &b.1, &a.0, tol)?;
            if cli.json {
                Ok(io::to_compact(&json!({ "equivalent": eq })))
            } else {
                Ok(eq.to_string())
            }
        }
        Command::Integrate { form } => match io::parse_form(&read(&form)?)? {
            AnyForm::Matrix(f, w) => {
                let z: ComplexJson = nc_integrate(&f, &w, &IntegrationConfig::from_basis(f.basis())).into();
                Ok(io::to_compact(&z))
            }
            AnyForm::Mixed(f, w) => {
                let sqrt_g = IntegrationConfig::from_basis(f.inner().basis()).sqrt_det_g();
                Ok(out.value(&io::form_to_json(&nc_integrate_inner(&f, &w, sqrt_g)?)))
            }
            other => Err(Error::Precondition(format!(
                "noncommutative integration needs a matrix or mixed frame, got `{}`",
                frame_name(&other)
            ))
            .into()),
        },
        Command::Ymh {
            command: YmhCommand::Demo { n, m, lambda, epsilon },
        } => {
            let mf = MixedFrame::gell_mann(m, n)?;
            let wm = WeightedMetric::euclidean(m, lambda)?;
            let conn = demo_connection(&mf, epsilon)?;
            let s = ymh_action(&mf, &conn, &wm, &BoxDomain::unit(m), DEFAULT_MAX_DEGREE)?;
            Ok(out.value(&json!({
                "n": n,
                "m": m,
                "lambda": lambda,
                "epsilon": epsilon,
                "yang_mills": s.yang_mills,
                "covariant": s.covariant,
                "potential": s.potential,
                "total": s.total(),
            })))
        }
        Command::Moyal { command } => run_moyal(command, cli.json),
    }
}

fn run_moyal(command: MoyalCommand, as_json: bool) -> Result<String, Failure> {
    let show = |p: &MoyalPoly| {
        if as_json {
            io::to_compact(&io::moyal_to_json(p))
        } else {
            p.to_string()
        }
    };
    let pair = |args: &PairArgs| -> Result<(MoyalConfig, MoyalPoly, MoyalPoly), Failure> {
        let cfg = MoyalConfig::new(args.theta)?;
        Ok((cfg, args.left.parse()?, args.right.parse()?))
    };
    match command {
        MoyalCommand::Star(args) => {
            let (cfg, p, q) = pair(&args)?;
            Ok(show(&moyal::star(&p, &q, &cfg)))
        }
        MoyalCommand::Commutator(args) => {
            let (cfg, p, q) = pair(&args)?;
            Ok(show(&moyal::star_commutator(&p, &q, &cfg)))
        }
        MoyalCommand::Poisson(args) => {
            let (cfg, p, q) = pair(&args)?;
            Ok(show(&moyal::poisson_bracket(&p, &q, &cfg)))
        }
        MoyalCommand::Curvature { theta } => {
            let frame = IspFrame::new(MoyalConfig::new(theta)?)?;
            let omega = moyal::canonical_curvature(&frame);
            if as_json {
                return Ok(io::to_compact(&io::form_to_json(&omega)));
            }
            let lines: Vec<String> = omega
                .components()
                .map(|(k, v)| {
                    let names: Vec<String> = k.iter().map(|&a| frame.label(a)).collect();
                    format!("({}): {}", names.join(", "), v)
                })
                .collect();
            Ok(if lines.is_empty() { "0".into() } else { lines.join("\n") })
        }
    }
}

fn module_connection(j: &ConnectionJson) -> Result<(MatrixFrame, dercalc::connections::ModuleConnection), Failure> {
    match io::connection_from_json(j)? {
        AnyConnection::Module { frame, conn } => Ok((frame, conn)),
        AnyConnection::OnA { .. } => Err(input_failure("flat-equiv expects connections of type \"module\"".into())),
    }
}

fn frame_name(f: &AnyForm) -> String {
    match f {
        AnyForm::Matrix(g, _) => g.frame_id(),
        AnyForm::Mixed(g, _) => g.frame_id(),
        AnyForm::Spatial(g, _) => g.frame_id(),
        AnyForm::Isp(g, _) => g.frame_id(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

