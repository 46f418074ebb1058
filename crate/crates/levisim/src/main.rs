//! Command-line surface: derive, rates, expand, scan, simulate.
//!
//! Exit codes: 0 success, 1 validation error (usage, config, I/O),
//! 2 numerical-consistency failure (pulse-plan bands, slit outside the
//! operational window) unless --force.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use levisim::gaussian::GaussianState;
use levisim::manifest::RunManifest;
use levisim::params::{self, ExperimentConfig, SlitSpec};
use levisim::protocol::{self, ProtocolError};
use levisim::rates;
use levisim::wavesim::{self, SimulateError};

#[derive(Parser)]
#[command(name = "levisim", version, about = "Pulse planning and interference simulation for levitated-nanosphere superpositions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Print derived cavity and sphere quantities as JSON.
    Derive {
        #[command(flatten)]
        common: Common,
    },
    /// Print every coupling and localization rate as JSON, with the formula behind each value.
    Rates {
        #[command(flatten)]
        common: Common,
        /// Pulse photon number; defaults to the planned value.
        #[arg(long)]
        nph: Option<f64>,
        /// Pre-pulse packet width [m]; defaults to the planned value.
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Print the free-fall moment trajectory as CSV (t, vx, vp, cxp, xi_l).
    Expand {
        #[command(flatten)]
        common: Common,
        /// Final time [s].
        #[arg(long)]
        t: f64,
        /// Number of time steps (rows = steps + 1).
        #[arg(long, default_value_t = 200)]
        points: usize,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan sphere diameters and report the slit bounds per diameter as CSV.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Smallest diameter [nm].
        #[arg(long, default_value_t = 10.0)]
        dmin_nm: f64,
        /// Largest diameter [nm].
        #[arg(long, default_value_t = 200.0)]
        dmax_nm: f64,
        /// Number of log-spaced diameters.
        #[arg(long, default_value_t = 30)]
        points: usize,
        /// Collapse-rate enhancement override lambda/lambda_0.
        #[arg(long)]
        csl_factor: Option<f64>,
        /// Worker threads for the scan (LEVISIM_JOBS as fallback; default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the interference pattern for one slit separation.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Slit separation as a multiple of the sphere diameter, overriding the config.
        #[arg(long = "d-over-D")]
        d_over_d: Option<f64>,
        /// Collapse-rate enhancement override lambda/lambda_0.
        #[arg(long)]
        csl_factor: Option<f64>,
        /// CSV destination for the pattern; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run even when consistency checks fail (band, trap phase, window).
        #[arg(long)]
        force: bool,
    },
}

/// Failures split by exit code: 1 for validation, 2 for consistency.
enum Failure {
    Validation(String),
    Consistency(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Consistency(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Consistency(m) => m,
        }
    }
}

impl From<params::ConfigError> for Failure {
    fn from(e: params::ConfigError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        Failure::Consistency(format!("{e} (use --force to run anyway)"))
    }
}

impl From<SimulateError> for Failure {
    fn from(e: SimulateError) -> Self {
        Failure::Consistency(format!("{e} (use --force to run anyway)"))
    }
}

fn validate(cond: bool, msg: &str) -> Result<(), Failure> {
    if cond {
        Ok(())
    } else {
        Err(Failure::Validation(msg.to_string()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return ExitCode::from(u8::from(!ok));
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load(common: &Common) -> Result<(ExperimentConfig, RunManifest), Failure> {
    let text = std::fs::read_to_string(&common.config).map_err(|e| {
        Failure::Validation(format!("cannot read {}: {e}", common.config.display()))
    })?;
    let cfg = params::parse_config(&text)?;
    Ok((cfg, RunManifest::new(&text, std::env::args())))
}

/// Write CSV either to the given file (with a `<path>.manifest.json` sidecar,
/// printing the report to stdout) or to stdout (report to stderr).
fn emit(csv: &str, report: &Value, out: Option<&Path>) -> Result<(), Failure> {
    let pretty = serde_json::to_string_pretty(report).expect("report is plain data");
    match out {
        Some(path) => {
            std::fs::write(path, csv)
                .map_err(|e| Failure::Validation(format!("cannot write {}: {e}", path.display())))?;
            let sidecar = PathBuf::from(format!("{}.manifest.json", path.display()));
            std::fs::write(&sidecar, &pretty).map_err(|e| {
                Failure::Validation(format!("cannot write {}: {e}", sidecar.display()))
            })?;
            println!("{pretty}");
        }
        None => {
            print!("{csv}");
            std::io::stdout().flush()?;
            eprintln!("{pretty}");
        }
    }
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Derive { common } => {
            let (cfg, manifest) = load(&common)?;
            let dq = params::derive(&cfg);
            let report = json!({
                "manifest": manifest,
                "config": cfg,
                "derived": dq,
                "kappa_over_2pi": dq.kappa / (2.0 * std::f64::consts::PI),
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("plain data"));
            Ok(())
        }
        Command::Rates { common, nph, sigma } => {
            let (cfg, manifest) = load(&common)?;
            let dq = params::derive(&cfg);
            let plan = protocol::plan_pulse_unchecked(&cfg, &dq);
            let n_ph = nph.unwrap_or(plan.n_ph);
            let sigma = sigma.unwrap_or(plan.sigma);
            validate(n_ph > 0.0 && n_ph.is_finite(), "--nph must be positive")?;
            validate(sigma > 0.0 && sigma.is_finite(), "--sigma must be positive")?;
            let cr = rates::coupling_rates(&dq, n_ph, sigma);
            let lr = rates::localization_rates(&cfg, &dq, n_ph);
            let (n_floor, resolved) = rates::cooling_occupation(&dq, cr.c_l);
            let entry = |value: f64, formula: &str| json!({ "value": value, "formula": formula });
            let report = json!({
                "manifest": manifest,
                "config": cfg,
                "derived": dq,
                "inputs": { "n_ph": n_ph, "sigma": sigma },
                "coupling": {
                    "g": entry(cr.g, "sqrt(n_ph) x0 eps_c k_c^2 c V / (4 V_c)"),
                    "g_q": entry(cr.g_q, "k_c x0 g"),
                    "g_q_bar": entry(cr.g_q_bar, "g_q (sigma/x0)^2"),
                    "c_l": entry(cr.c_l, "g^2 / (kappa Lambda_sc x0^2) = 3 pi c / (8 V_c k_c^2 kappa)"),
                    "c_q_bar": entry(cr.c_q_bar, "c_l (k_c sigma)^2"),
                },
                "cavity": {
                    "kappa_mirror": entry(dq.kappa_mirror, "pi c / (2 L F)"),
                    "kappa_sc": entry(dq.kappa_sc, "eps_c^2 V^2 k_c^4 c / (16 pi V_c)"),
                    "kappa": entry(dq.kappa, "kappa_mirror + kappa_sc"),
                },
                "localization": {
                    "lambda_sc": entry(lr.lambda_sc, "eps_c^2 n_ph c V^2 k_c^6 / (6 pi V_c)"),
                    "lambda_air": entry(lr.lambda_air, "8 sqrt(2 pi) m_a vbar P R^2 / (3 sqrt(3) hbar^2)"),
                    "lambda_bb_scattering": entry(lr.lambda_bb_scattering, "8! zeta(9) (8/(9 pi)) c R^6 Re[(eps_bb-1)/(eps_bb+2)]^2 (k_B T_e/(hbar c))^9"),
                    "lambda_bb_emission": entry(lr.lambda_bb_emission, "(16 pi^5/189) c R^3 Im[(eps_bb-1)/(eps_bb+2)] (k_B T_i/(hbar c))^6"),
                    "lambda_bb_absorption": entry(lr.lambda_bb_absorption, "(16 pi^5/189) c R^3 Im[(eps_bb-1)/(eps_bb+2)] (k_B T_e/(hbar c))^6"),
                    "lambda_sd": entry(lr.lambda_sd, "lambda_air + lambda_bb_scattering + lambda_bb_emission + lambda_bb_absorption"),
                    "lambda_csl": entry(lr.lambda_csl, "(m/m_0)^2 enhancement lambda_0 alpha f(sqrt(alpha) R) / 2"),
                },
                "cooling": {
                    "occupation_floor": entry(n_floor, "(kappa / 4 omega_t)^2 + 1/c_l"),
                    "resolved_sideband": resolved,
                },
            });
            println!("{}", serde_json::to_string_pretty(&report).expect("plain data"));
            Ok(())
        }
        Command::Expand { common, t, points, out } => {
            let (cfg, manifest) = load(&common)?;
            validate(t > 0.0 && t.is_finite(), "--t must be positive")?;
            validate(points >= 1, "--points must be at least 1")?;
            let dq = params::derive(&cfg);
            let plan = protocol::plan_pulse_unchecked(&cfg, &dq);
            let lambda_sd = rates::localization_rates(&cfg, &dq, plan.n_ph).lambda_sd;
            let state = GaussianState::thermal(dq.x0, cfg.trap.occupation, dq.mass);
            let mut csv = String::from("t,vx,vp,cxp,xi_l\n");
            for i in 0..=points {
                let ti = t * i as f64 / points as f64;
                let s = state.evolve(ti, lambda_sd);
                csv.push_str(&format!(
                    "{:e},{:e},{:e},{:e},{:e}\n",
                    ti,
                    s.vx,
                    s.vp,
                    s.cxp,
                    s.coherence_length()
                ));
            }
            let report = json!({
                "manifest": manifest,
                "config": cfg,
                "lambda_sd": lambda_sd,
                "t_final": t,
                "rows": points + 1,
            });
            emit(&csv, &report, out.as_deref())
        }
        Command::Scan { common, dmin_nm, dmax_nm, points, csl_factor, jobs, out } => {
            let (mut cfg, manifest) = load(&common)?;
            validate(dmin_nm > 0.0 && dmin_nm.is_finite(), "--dmin-nm must be positive")?;
            validate(dmax_nm > dmin_nm && dmax_nm.is_finite(), "--dmax-nm must exceed --dmin-nm")?;
            validate(points >= 2, "--points must be at least 2")?;
            if let Some(f) = csl_factor {
                validate(f >= 0.0 && f.is_finite(), "--csl-factor must be nonnegative")?;
                cfg.protocol.csl_enhancement = f;
            }
            let diameters = protocol::log_spaced(dmin_nm * 1e-9, dmax_nm * 1e-9, points);
            let jobs = jobs.or_else(|| {
                std::env::var("LEVISIM_JOBS").ok().and_then(|s| s.parse().ok())
            });
            let rows = match jobs {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Failure::Validation(format!("--jobs: {e}")))?
                    .install(|| protocol::scan_regime(&cfg, &diameters)),
                None => protocol::scan_regime(&cfg, &diameters),
            };
            let mut csv = String::from(
                "D,d_min,d_max_a,d_max_b,d_max_c,d_max_d,d_max_csl,operational,n_ph,t1,t2,chi,error\n",
            );
            for r in &rows {
                csv.push_str(&format!(
                    "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{:e},{:e},{:e},{:e},{}\n",
                    r.diameter,
                    r.bounds.d_min,
                    r.bounds.d_max_a,
                    r.bounds.d_max_b,
                    r.bounds.d_max_c,
                    r.bounds.d_max_d,
                    r.bounds.d_max_csl,
                    r.bounds.operational,
                    r.n_ph,
                    r.t1,
                    r.t2,
                    r.chi,
                    r.error.as_deref().unwrap_or(""),
                ));
            }
            let report = json!({
                "manifest": manifest,
                "config": cfg,
                "diameters": { "min": dmin_nm * 1e-9, "max": dmax_nm * 1e-9, "points": points },
                "operational_rows": rows.iter().filter(|r| r.bounds.operational).count(),
            });
            emit(&csv, &report, out.as_deref())
        }
        Command::Simulate { common, d_over_d, csl_factor, out, force } => {
            let (mut cfg, manifest) = load(&common)?;
            if let Some(r) = d_over_d {
                validate(r > 0.0 && r.is_finite(), "--d-over-D must be positive")?;
                cfg.protocol.slit = SlitSpec::OverDiameter(r);
            }
            if let Some(f) = csl_factor {
                validate(f >= 0.0 && f.is_finite(), "--csl-factor must be nonnegative")?;
                cfg.protocol.csl_enhancement = f;
            }
            let sim = wavesim::simulate_protocol(&cfg, force)?;
            let grid = sim.ideal.grid;
            let mut csv = String::from("x,q_ideal,q_standard,q_csl\n");
            for j in 0..grid.n {
                csv.push_str(&format!(
                    "{:e},{:e},{:e},{:e}\n",
                    grid.x(j),
                    sim.ideal.q[j],
                    sim.standard.q[j],
                    sim.csl.q[j],
                ));
            }
            let report = json!({
                "manifest": manifest,
                "config": cfg,
                "plan": sim.plan,
                "slit": sim.slit,
                "bounds": sim.bounds,
                "rates": sim.rates,
                "blur": {
                    "sigma_b_standard": sim.sigma_b_standard,
                    "sigma_b_csl": sim.sigma_b_csl,
                    "sigma_b_detector": sim.sigma_b_detector,
                },
                "fringes": {
                    "ideal": sim.fringes_ideal,
                    "standard": sim.fringes_standard,
                    "csl": sim.fringes_csl,
                },
                "folded": {
                    "ideal": sim.folded_ideal,
                    "standard": sim.folded_standard,
                    "csl": sim.folded_csl,
                },
            });
            emit(&csv, &report, out.as_deref())
        }
    }
}
