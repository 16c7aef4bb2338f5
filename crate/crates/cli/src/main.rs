//! Command-line front end: witness tables, certified searches, certificate
//! derivation and verification, gap scans, and phase sweeps.
//!
//! Exit codes:
//!   search: 0 solutions found, 1 certified empty, 2 undecided
//!   certify: 0
//!   verify: 0 clean, 3 anomalies, 4 partial (budget gaps)
//!   scan/phase: 0 complete, 4 partial (budget)
//!    5 config or validation error, 6 search budget refusal, 7 internal

mod config;

use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};

use config::{parse_rat, Config};
use shifted_waring::certify::{
    check_certificate, derive_constants, gap_constants, verify_certificate,
};
use shifted_waring::model::BoundSpec;
use shifted_waring::report::{self, Provenance};
use shifted_waring::scan::{gap_scan, phase_sweep};
use shifted_waring::search::{
    min_residual_profile, search, Algorithm, SearchError, SearchSpec, Status, TauValue,
};
use shifted_waring::witness::tau_m;
use shifted_waring::{Parallelism, Rat};

#[derive(Parser)]
#[command(
    name = "shifted-waring",
    version,
    about = "Certified search laboratory for the diagonally constrained shifted Waring problem"
)]
struct Cli {
    /// TOML config file; flags override file values
    #[arg(long, global = true)]
    config: Option<String>,
    /// Output directory for JSON/CSV/SVG artifacts
    #[arg(long, global = true, default_value = "out")]
    out: String,
    /// Worker threads (0 = all cores, 1 = sequential). Env:
    /// SHIFTED_WARING_WORKERS
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Number of variables (overrides config)
    #[arg(long, global = true)]
    s: Option<u32>,
    /// Power k (overrides config)
    #[arg(long, global = true)]
    k: Option<u32>,
    /// Comma-separated shifts, e.g. 0.3,0.7 (overrides config)
    #[arg(long, global = true)]
    theta: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate witness values tau_m and their diagonal centers
    Witness {
        #[arg(long)]
        m_lo: Option<u64>,
        #[arg(long)]
        m_hi: Option<u64>,
    },
    /// Certified window search at one tau, or a profile over tau_m
    Search {
        #[arg(long)]
        tau: Option<String>,
        /// Absolute tolerance eta
        #[arg(long)]
        eta: Option<String>,
        /// Tolerance rule eta = coeff * tau^(1-2/k)
        #[arg(long)]
        eta_coeff: Option<String>,
        /// Absolute window radius
        #[arg(long)]
        radius: Option<String>,
        /// Window rule radius = coeff * tau^(1/(2k))
        #[arg(long)]
        radius_coeff: Option<String>,
        /// auto | dfs | mitm
        #[arg(long)]
        algorithm: Option<String>,
        /// Profile mode: sweep m in [m_lo, m_hi] at tau = tau_m
        #[arg(long)]
        m_lo: Option<u64>,
        #[arg(long)]
        m_hi: Option<u64>,
    },
    /// Derive the effective constant chain (c, c', m0) for the instance
    Certify {
        #[arg(long)]
        headroom: Option<String>,
    },
    /// Exercise a certificate by exhaustive search over an m range
    Verify {
        #[arg(long)]
        m_lo: Option<u64>,
        #[arg(long)]
        m_hi: Option<u64>,
        #[arg(long)]
        headroom: Option<String>,
    },
    /// Measure the solution-free gap around a certified witness
    Scan {
        #[arg(long)]
        m: Option<u64>,
        #[arg(long)]
        grid_points: Option<u32>,
        #[arg(long)]
        c0: Option<String>,
        #[arg(long)]
        headroom: Option<String>,
    },
    /// Exploratory solvability phase diagram over exponent grids
    Phase {
        /// Comma-separated m samples, e.g. 20,40,60
        #[arg(long)]
        m_samples: Option<String>,
        /// Comma-separated window exponents, e.g. 0,1/2,3/2
        #[arg(long)]
        alphas: Option<String>,
        /// Comma-separated tolerance exponents, e.g. -1,0,1
        #[arg(long)]
        betas: Option<String>,
        #[arg(long)]
        coeff: Option<String>,
    },
}

struct Failure {
    code: i32,
    err: anyhow::Error,
}

trait OrCode<T> {
    fn or_code(self, code: i32) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrCode<T> for Result<T, E> {
    fn or_code(self, code: i32) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, err: e.into() })
    }
}

fn main() {
    // dying quietly on a closed pipe beats a panic from println!
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            std::process::exit(f.code);
        }
    }
}

fn merge_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::from_file(path)?,
        None => {
            let theta = cli
                .theta
                .as_ref()
                .ok_or_else(|| anyhow!("no config file: --s/--k/--theta required"))?;
            let theta: Vec<String> = theta.split(',').map(|t| t.trim().to_string()).collect();
            let s = cli.s.unwrap_or(theta.len() as u32);
            let k = cli.k.ok_or_else(|| anyhow!("no config file: --k required"))?;
            Config::parse_toml(&format!(
                "[instance]\ns = {s}\nk = {k}\ntheta = [{}]\n",
                theta.iter().map(|t| format!("{t:?}")).collect::<Vec<_>>().join(", ")
            ))?
        }
    };
    if let Some(s) = cli.s {
        cfg.instance.s = s;
    }
    if let Some(k) = cli.k {
        cfg.instance.k = k;
    }
    if let Some(theta) = &cli.theta {
        cfg.instance.theta = theta.split(',').map(|t| t.trim().to_string()).collect();
        if cli.s.is_none() {
            cfg.instance.s = cfg.instance.theta.len() as u32;
        }
    }
    Ok(cfg)
}

fn resolve_parallelism(cli: &Cli) -> Parallelism {
    let workers = cli.workers.or_else(|| {
        std::env::var("SHIFTED_WARING_WORKERS").ok().and_then(|v| v.parse().ok())
    });
    match workers {
        Some(1) => Parallelism::Sequential,
        Some(n) if n > 1 => {
            // pool size is best-effort; output bytes never depend on it
            shifted_waring::configure_workers(n);
            Parallelism::Parallel
        }
        _ => Parallelism::Parallel,
    }
}

struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    fn new(dir: &str) -> Self {
        Outputs { dir: PathBuf::from(dir), files: Vec::new() }
    }

    fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    /// Write everything at once; nothing is written if validation failed
    /// earlier.
    fn flush(&self) -> Result<()> {
        fs::create_dir_all(&self.dir)
            .with_context(|| format!("cannot create output dir {}", self.dir.display()))?;
        for (name, contents) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, contents)
                .with_context(|| format!("cannot write {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        Ok(())
    }
}

fn run(cli: Cli) -> Result<i32, Failure> {
    let cfg = merge_config(&cli).or_code(5)?;
    let inst = cfg.instance().or_code(5)?;
    let prec = cfg.precision();
    let budget = cfg.budget.max_candidates;
    let parallelism = resolve_parallelism(&cli);
    let config_toml = cfg.to_toml();
    let prov = Provenance::new(&config_toml);
    let mut outputs = Outputs::new(&cli.out);

    let code = match &cli.command {
        Command::Witness { m_lo, m_hi } => {
            let lo = m_lo.or(cfg.witness.m_lo).unwrap_or(1);
            let hi = m_hi.or(cfg.witness.m_hi).unwrap_or(lo + 19);
            if lo < 1 || lo > hi {
                return Err(Failure { code: 5, err: anyhow!("need 1 <= m_lo <= m_hi") });
            }
            let mut rows = Vec::new();
            for m in lo..=hi {
                rows.push(tau_m(&inst, m, &prec).or_code(7)?);
            }
            for r in &rows {
                println!(
                    "m={} tau={} ({}) m_hat={}",
                    r.m,
                    r.tau,
                    r.tau.to_decimal_string(12),
                    r.m_hat
                );
            }
            outputs.add("witness.json", report::witness_json(&rows, &inst, &prov));
            outputs.add("witness.csv", report::witness_csv(&rows, &prov));
            0
        }
        Command::Search {
            tau,
            eta,
            eta_coeff,
            radius,
            radius_coeff,
            algorithm,
            m_lo,
            m_hi,
        } => {
            let sc = &cfg.search;
            let eta_spec = bound_from(
                eta.as_deref().or(sc.eta.as_deref()),
                eta_coeff.as_deref().or(sc.eta_coeff.as_deref()),
                inst.k(),
                true,
            )
            .or_code(5)?;
            let radius_spec = bound_from(
                radius.as_deref().or(sc.radius.as_deref()),
                radius_coeff.as_deref().or(sc.radius_coeff.as_deref()),
                inst.k(),
                false,
            )
            .or_code(5)?;
            let algo = match algorithm.as_deref().or(sc.algorithm.as_deref()).unwrap_or("auto") {
                "auto" => Algorithm::Auto,
                "dfs" => Algorithm::DepthFirst,
                "mitm" => Algorithm::MeetInMiddle,
                other => {
                    return Err(Failure {
                        code: 5,
                        err: anyhow!("unknown algorithm {other:?} (auto|dfs|mitm)"),
                    })
                }
            };
            let profile_lo = m_lo.or(sc.m_lo);
            let profile_hi = m_hi.or(sc.m_hi);
            if let (Some(lo), Some(hi)) = (profile_lo, profile_hi) {
                // profile mode over the witness family
                let eta_spec = eta_spec.unwrap_or_else(|| {
                    BoundSpec::absolute(Rat::ratio(1, 1_048_576))
                });
                let radius_spec = radius_spec
                    .ok_or_else(|| anyhow!("profile needs --radius or --radius-coeff"))
                    .or_code(5)?;
                let rows = min_residual_profile(
                    &inst, lo..=hi, &radius_spec, &eta_spec, &prec, budget, parallelism,
                )
                .map_err(classify_search_err)?;
                for r in &rows {
                    println!(
                        "m={} tau={} min_residual={}",
                        r.m,
                        r.tau,
                        r.min_residual_exact
                            .as_ref()
                            .map(|v| v.to_decimal_string(12))
                            .unwrap_or_else(|| "-".into())
                    );
                }
                outputs.add("profile.json", report::profile_json(&rows, &inst, &prov));
                outputs.add("profile.csv", report::profile_csv(&rows, &prov));
                let any_solutions =
                    rows.iter().any(|r| matches!(r.status, Status::Solutions));
                let any_undecided =
                    rows.iter().any(|r| matches!(r.status, Status::Undecided));
                if any_solutions {
                    0
                } else if any_undecided {
                    2
                } else {
                    1
                }
            } else {
                let tau_text = tau
                    .as_deref()
                    .or(sc.tau.as_deref())
                    .ok_or_else(|| anyhow!("search needs --tau (or search.tau in config)"))
                    .or_code(5)?;
                let tau_rat = parse_rat(tau_text, "tau").or_code(5)?;
                let eta_spec = eta_spec
                    .ok_or_else(|| anyhow!("search needs --eta or --eta-coeff"))
                    .or_code(5)?;
                let radius_spec = radius_spec
                    .ok_or_else(|| anyhow!("search needs --radius or --radius-coeff"))
                    .or_code(5)?;
                let mut spec = SearchSpec::new(
                    inst.clone(),
                    TauValue::exact(tau_rat.clone()),
                    eta_spec.clone(),
                    radius_spec.clone(),
                );
                spec.prec = prec;
                spec.budget = budget;
                spec.algorithm = algo;
                spec.parallelism = parallelism;
                let outcome = search(&spec).map_err(classify_search_err)?;
                println!(
                    "status={:?} candidates={} min_residual={}",
                    outcome.status,
                    outcome.stats.enumerated,
                    outcome
                        .min_residual_exact
                        .as_ref()
                        .map(|v| v.to_decimal_string(12))
                        .unwrap_or_else(|| "-".into())
                );
                outputs.add(
                    "search.json",
                    report::search_json(
                        &outcome,
                        &inst,
                        &tau_rat.to_string(),
                        &eta_spec.describe("tau"),
                        &radius_spec.describe("tau"),
                        &prov,
                    ),
                );
                match outcome.status {
                    Status::Solutions => 0,
                    Status::Empty => 1,
                    Status::Undecided => 2,
                }
            }
        }
        Command::Certify { headroom } => {
            let h = parse_rat(
                headroom.as_deref().unwrap_or(&cfg.certify.headroom),
                "headroom",
            )
            .or_code(5)?;
            let cert = derive_constants(&inst, &h).or_code(7)?;
            println!(
                "certificate: c={} c'={} m0={} L={}",
                cert.c, cert.c_prime, cert.m0, cert.theta_gap
            );
            let audit = check_certificate(&cert, cert.m0);
            for e in &audit {
                println!("  [{}] {}: {} {} {}", if e.holds { "ok" } else { "FAIL" }, e.name, e.lhs, e.cmp, e.rhs);
            }
            outputs.add("certificate.json", report::certificate_json(&cert));
            0
        }
        Command::Verify { m_lo, m_hi, headroom } => {
            let h = parse_rat(
                headroom.as_deref().unwrap_or(&cfg.certify.headroom),
                "headroom",
            )
            .or_code(5)?;
            let cert = derive_constants(&inst, &h).or_code(7)?;
            let lo = m_lo.or(cfg.verify.m_lo).unwrap_or(cert.m0);
            let hi = m_hi.or(cfg.verify.m_hi).unwrap_or(cert.m0 + 10);
            if lo < 1 || lo > hi {
                return Err(Failure { code: 5, err: anyhow!("need 1 <= m_lo <= m_hi") });
            }
            let report_v =
                verify_certificate(&cert, lo, hi, &prec, budget, parallelism).or_code(7)?;
            let prov = prov.clone().with_certificate(&cert);
            for (m, v) in &report_v.verdicts {
                println!("m={m}: {v:?}");
            }
            println!(
                "anomalies: {:?} gaps: {:?}",
                report_v.anomalies, report_v.gaps
            );
            outputs.add("certificate.json", report::certificate_json(&cert));
            outputs.add("verify.json", report::verification_json(&report_v, &prov));
            outputs.add("verify.csv", report::verification_csv(&report_v, &prov));
            if !report_v.anomalies.is_empty() {
                3
            } else if !report_v.gaps.is_empty() {
                4
            } else {
                0
            }
        }
        Command::Scan { m, grid_points, c0, headroom } => {
            let h = parse_rat(
                headroom.as_deref().unwrap_or(&cfg.certify.headroom),
                "headroom",
            )
            .or_code(5)?;
            let c0 = parse_rat(c0.as_deref().unwrap_or(&cfg.certify.c0), "c0").or_code(5)?;
            let cert = derive_constants(&inst, &h).or_code(7)?;
            let gc = gap_constants(&cert, &c0).or_code(7)?;
            let m_used = m.or(cfg.scan.m).unwrap_or_else(|| cert.m0.max(50));
            let grid = grid_points.or(cfg.scan.grid_points).unwrap_or(101);
            let report_g = gap_scan(&gc, m_used, grid, &prec, budget, parallelism)
                .map_err(classify_scan_err)?;
            let prov = prov.clone().with_certificate(&cert);
            println!(
                "m={} tau0={} predicted_radius={} measured_gap={} complete={}",
                report_g.m,
                report_g.tau0,
                report_g.predicted_radius.to_decimal_string(12),
                report_g.measured_gap.to_decimal_string(12),
                report_g.complete
            );
            outputs.add("certificate.json", report::certificate_json(&cert));
            outputs.add("scan.json", report::gap_json(&report_g, &prov));
            outputs.add("scan.csv", report::gap_csv(&report_g, &prov));
            outputs.add("scan.svg", report::gap_svg(&report_g, &prov));
            if report_g.complete {
                0
            } else {
                4
            }
        }
        Command::Phase { m_samples, alphas, betas, coeff } => {
            let ms: Vec<u64> = match m_samples {
                Some(text) => text
                    .split(',')
                    .map(|t| t.trim().parse::<u64>().map_err(|e| anyhow!("m_samples: {e}")))
                    .collect::<Result<_>>()
                    .or_code(5)?,
                None => cfg.phase.m_samples.clone(),
            };
            let parse_list = |text: Option<&String>, fallback: &[String], what: &str| {
                let items: Vec<String> = match text {
                    Some(t) => t.split(',').map(|x| x.trim().to_string()).collect(),
                    None => fallback.to_vec(),
                };
                items
                    .iter()
                    .map(|t| parse_rat(t, what))
                    .collect::<Result<Vec<Rat>>>()
            };
            let alphas = parse_list(alphas.as_ref(), &cfg.phase.alphas, "alphas").or_code(5)?;
            let betas = parse_list(betas.as_ref(), &cfg.phase.betas, "betas").or_code(5)?;
            let coeff = parse_rat(
                coeff.as_deref().unwrap_or(&cfg.phase.coeff),
                "coeff",
            )
            .or_code(5)?;
            let matrix = phase_sweep(
                &inst, &ms, &alphas, &betas, &coeff, &prec, budget, parallelism,
            )
            .map_err(classify_scan_err)?;
            for c in &matrix.cells {
                println!(
                    "alpha={} beta={} density={} undecided={}",
                    c.alpha,
                    c.beta,
                    c.density.as_ref().map(|d| d.to_decimal_string(4)).unwrap_or_else(|| "skip".into()),
                    c.undecided
                );
            }
            outputs.add("phase.json", report::phase_json(&matrix, &prov));
            outputs.add("phase.csv", report::phase_csv(&matrix, &prov));
            outputs.add("phase.svg", report::phase_svg(&matrix, &prov));
            if matrix.complete {
                0
            } else {
                4
            }
        }
    };

    outputs.flush().or_code(7)?;
    Ok(code)
}

fn bound_from(
    absolute: Option<&str>,
    coeff: Option<&str>,
    k: u32,
    is_eta: bool,
) -> Result<Option<BoundSpec>> {
    match (absolute, coeff) {
        (Some(_), Some(_)) => Err(anyhow!(
            "give either an absolute value or a coefficient rule, not both"
        )),
        (Some(v), None) => {
            let r = parse_rat(v, if is_eta { "eta" } else { "radius" })?;
            if !r.is_positive() {
                return Err(anyhow!("bound must be positive"));
            }
            Ok(Some(BoundSpec::absolute(r)))
        }
        (None, Some(cf)) => {
            let c = parse_rat(cf, "coefficient")?;
            if !c.is_positive() {
                return Err(anyhow!("coefficient must be positive"));
            }
            Ok(Some(if is_eta {
                BoundSpec::eta_rule(c, k)
            } else {
                BoundSpec::radius_rule(c, k)
            }))
        }
        (None, None) => Ok(None),
    }
}

fn classify_scan_err(e: shifted_waring::scan::ScanError) -> Failure {
    use shifted_waring::scan::ScanError;
    let code = match &e {
        ScanError::BadGrid(_)
        | ScanError::BelowThreshold { .. }
        | ScanError::BadExponent(_)
        | ScanError::SideCondition => 5,
        ScanError::Search(SearchError::BudgetExceeded { .. }) => 6,
        _ => 7,
    };
    Failure { code, err: e.into() }
}

fn classify_search_err(e: SearchError) -> Failure {
    let code = match &e {
        SearchError::BudgetExceeded { .. } => 6,
        SearchError::NonPositiveEta
        | SearchError::NonPositiveRadius
        | SearchError::NonPositiveTau => 5,
        _ => 7,
    };
    Failure { code, err: e.into() }
}
