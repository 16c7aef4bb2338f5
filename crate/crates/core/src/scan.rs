//! Empirical exploration around certificates: solution-free gap measurement
//! and solvability phase diagrams.
//!
//! `gap_scan` samples a rational tau grid around a certified witness and
//! checks that every grid point inside the predicted radius is certifiably
//! solution-free. `phase_sweep` maps solvability density as the window and
//! tolerance exponents vary; it proves nothing and is labeled exploratory in
//! all outputs.

use serde::Serialize;
use thiserror::Error;

use crate::ball::Rat;
use crate::certify::{CertifyError, GapConstants, Verdict};
use crate::model::{BoundSpec, BoundValue, Instance, Precision};
use crate::search::{search, SearchError, SearchSpec, TauValue};
use crate::witness::tau_m_value;
use crate::{run_jobs, Parallelism};

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("grid_points must be odd and >= 3 (got {0})")]
    BadGrid(u32),
    #[error("m = {m} is below the certificate threshold m0 = {m0}")]
    BelowThreshold { m: u64, m0: u64 },
    #[error("gap side condition violated: C0*tau0^(1-2/k) > tau0/2")]
    SideCondition,
    #[error("solution found at grid offset {j} inside the certified radius: certificate or search bug")]
    GapViolation { j: i64 },
    #[error("density not monotone in beta at alpha = {alpha} between beta = {lo} and {hi}")]
    DensityMonotonicity { alpha: String, lo: String, hi: String },
    #[error("phase exponent out of supported range: {0}")]
    BadExponent(String),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Certify(#[from] Box<CertifyError>),
    #[error(transparent)]
    Witness(#[from] crate::witness::WitnessError),
    #[error(transparent)]
    Ball(#[from] crate::ball::BallError),
}

/// One grid point of a gap scan.
#[derive(Debug, Clone, Serialize)]
pub struct GapPoint {
    pub j: i64,
    pub tau: Rat,
    pub status: Verdict,
    pub min_residual_exact: Option<Rat>,
}

/// Measured solution-free interval around a certified witness.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub constants: GapConstants,
    pub m: u64,
    pub tau0: Rat,
    /// Certified rational lower bound of `C0 * tau0^(1-2/k)`.
    pub predicted_radius: Rat,
    pub step: Rat,
    pub grid_points: u32,
    pub points: Vec<GapPoint>,
    /// Radius of the largest symmetric all-Empty run around tau0.
    pub measured_gap: Rat,
    /// True when the grid is too narrow to reach the certified radius
    /// (fewer than 51 points), so measured_gap is grid-limited.
    pub grid_truncated: bool,
    /// False when budget limits skipped grid points.
    pub complete: bool,
}

/// Certified rational lower bound of `coeff * base^(1-2/k)`, positive.
fn predicted_radius(coeff: &Rat, base: &Rat, k: u32, prec: &Precision) -> Result<Rat, ScanError> {
    let rule = BoundSpec::eta_rule(coeff.clone(), k);
    for p in prec.ladder() {
        match rule.eval(base, p)? {
            BoundValue::Exact(v) => return Ok(v),
            BoundValue::Enclosure(b) => {
                let lb = b.inf_rat();
                if lb.is_positive() {
                    return Ok(lb);
                }
            }
        }
    }
    Err(ScanError::SideCondition)
}

/// Scan a symmetric rational tau grid around `tau0 = tau_m` with the
/// gap-constant tolerance and window rules. Grid step is
/// `predicted_radius / 25`, so offsets `|j| <= 25` lie inside the certified
/// interval.
pub fn gap_scan(
    gc: &GapConstants,
    m: u64,
    grid_points: u32,
    prec: &Precision,
    budget: u64,
    parallelism: Parallelism,
) -> Result<GapReport, ScanError> {
    if grid_points < 3 || grid_points.is_multiple_of(2) {
        return Err(ScanError::BadGrid(grid_points));
    }
    let cert = &gc.cert;
    if m < cert.m0 {
        return Err(ScanError::BelowThreshold { m, m0: cert.m0 });
    }
    let inst = &cert.inst;
    let k = inst.k();
    let tau0 = tau_m_value(inst, m)?;
    // delta <= tau0/2, exactly: (2*C0)^k <= tau0^2
    if (&Rat::from_int(2) * &gc.c0).pow_i(k as i64) > tau0.pow_i(2) {
        return Err(ScanError::SideCondition);
    }
    let predicted = predicted_radius(&gc.c0, &tau0, k, prec)?;
    let step = &predicted / &Rat::from_int(25);
    let h = (grid_points as i64 - 1) / 2;

    let offsets: Vec<i64> = (-h..=h).collect();
    let results = run_jobs(offsets, parallelism.is_parallel(), |j| -> Result<GapPoint, ScanError> {
        let tau = &tau0 + &(&Rat::from_int(j) * &step);
        assert!(tau.is_positive());
        let spec = SearchSpec {
            inst: inst.clone(),
            tau: TauValue::exact(tau.clone()),
            eta: BoundSpec::eta_rule(gc.c_sys.clone(), k),
            radius: BoundSpec::radius_rule(gc.c_prime_sys.clone(), k),
            rule_base: None,
            prec: *prec,
            budget,
            algorithm: crate::search::Algorithm::Auto,
            parallelism: Parallelism::Sequential,
            prune: true,
        };
        match search(&spec) {
            Ok(out) => Ok(GapPoint {
                j,
                tau,
                status: Verdict::from(out.status),
                min_residual_exact: out.min_residual_exact,
            }),
            Err(SearchError::BudgetExceeded { .. }) => Ok(GapPoint {
                j,
                tau,
                status: Verdict::Skipped,
                min_residual_exact: None,
            }),
            Err(e) => Err(ScanError::Search(e)),
        }
    });
    let mut points = Vec::with_capacity(results.len());
    for r in results {
        points.push(r?);
    }

    // hard consistency gate: Solutions inside the certified radius is a bug
    for p in &points {
        if p.j.unsigned_abs() <= 25 && p.status == Verdict::Solutions {
            return Err(ScanError::GapViolation { j: p.j });
        }
    }

    let mut d_max = 0i64;
    'outer: for d in 1..=h {
        for p in points.iter().filter(|p| p.j.abs() <= d) {
            if p.status != Verdict::Empty {
                break 'outer;
            }
        }
        d_max = d;
    }
    let measured_gap = &Rat::from_int(d_max) * &step;
    let complete = points.iter().all(|p| p.status != Verdict::Skipped);
    Ok(GapReport {
        constants: gc.clone(),
        m,
        tau0,
        predicted_radius: predicted,
        step,
        grid_points,
        points,
        measured_gap,
        grid_truncated: h < 25,
        complete,
    })
}

/// One cell of the solvability phase diagram: window exponent alpha,
/// tolerance exponent beta, solvability counts over the m samples.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseCell {
    pub alpha: Rat,
    pub beta: Rat,
    pub solutions: u32,
    pub empty: u32,
    pub undecided: u32,
    pub skipped: bool,
    pub density: Option<Rat>,
    pub empty_fraction: Option<Rat>,
    pub undecided_fraction: Option<Rat>,
}

/// Exploratory solvability map over (alpha, beta) exponent pairs with
/// radius = coeff * m^alpha and eta = coeff * m^beta at tau = tau_m.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseMatrix {
    pub inst: Instance,
    pub coeff: Rat,
    pub m_samples: Vec<u64>,
    pub alphas: Vec<Rat>,
    pub betas: Vec<Rat>,
    pub cells: Vec<PhaseCell>,
    pub complete: bool,
    /// This sweep demonstrates, it does not prove.
    pub exploratory: bool,
}

/// Convert a rational exponent into a `Pow` rule over the base m.
fn exponent_rule(coeff: &Rat, e: &Rat) -> Result<BoundSpec, ScanError> {
    let num = i64::try_from(e.numer()).map_err(|_| ScanError::BadExponent(e.to_string()))?;
    let den = u64::try_from(e.denom()).map_err(|_| ScanError::BadExponent(e.to_string()))?;
    if num.abs() > 64 || den > 64 {
        return Err(ScanError::BadExponent(e.to_string()));
    }
    Ok(BoundSpec::pow(coeff.clone(), num, den))
}

#[allow(clippy::too_many_arguments)]
pub fn phase_sweep(
    inst: &Instance,
    m_samples: &[u64],
    alphas: &[Rat],
    betas: &[Rat],
    coeff: &Rat,
    prec: &Precision,
    budget: u64,
    parallelism: Parallelism,
) -> Result<PhaseMatrix, ScanError> {
    let mut alphas = alphas.to_vec();
    let mut betas = betas.to_vec();
    alphas.sort();
    alphas.dedup();
    betas.sort();
    betas.dedup();

    let mut jobs = Vec::new();
    if !m_samples.is_empty() {
        for a in &alphas {
            for b in &betas {
                for m in m_samples {
                    jobs.push((a.clone(), b.clone(), *m));
                }
            }
        }
    }
    let results = run_jobs(jobs, parallelism.is_parallel(), |(a, b, m)| -> Result<Verdict, ScanError> {
        let tau = tau_m_value(inst, m)?;
        let m_rat = Rat::from_bigint(m.into());
        let spec = SearchSpec {
            inst: inst.clone(),
            tau: TauValue::exact(tau),
            eta: exponent_rule(coeff, &b)?,
            radius: exponent_rule(coeff, &a)?,
            rule_base: Some(m_rat),
            prec: *prec,
            budget,
            algorithm: crate::search::Algorithm::Auto,
            parallelism: Parallelism::Sequential,
            prune: true,
        };
        match search(&spec) {
            Ok(out) => Ok(Verdict::from(out.status)),
            Err(SearchError::BudgetExceeded { .. }) => Ok(Verdict::Skipped),
            Err(e) => Err(ScanError::Search(e)),
        }
    });
    let mut verdicts = Vec::with_capacity(results.len());
    for r in results {
        verdicts.push(r?);
    }

    let n = m_samples.len() as u32;
    let n_rat = Rat::from_int(n as i64);
    let mut cells = Vec::new();
    let mut idx = 0usize;
    if !m_samples.is_empty() {
        for a in &alphas {
            for b in &betas {
                let slice = &verdicts[idx..idx + m_samples.len()];
                idx += m_samples.len();
                let skipped = slice.contains(&Verdict::Skipped);
                let count = |t: Verdict| slice.iter().filter(|v| **v == t).count() as u32;
                let (solutions, empty, undecided) =
                    (count(Verdict::Solutions), count(Verdict::Empty), count(Verdict::Undecided));
                let frac = |c: u32| {
                    if skipped {
                        None
                    } else {
                        Some(&Rat::from_int(c as i64) / &n_rat)
                    }
                };
                cells.push(PhaseCell {
                    alpha: a.clone(),
                    beta: b.clone(),
                    solutions,
                    empty,
                    undecided,
                    skipped,
                    density: frac(solutions),
                    empty_fraction: frac(empty),
                    undecided_fraction: frac(undecided),
                });
            }
        }
    }

    // exhaustive search makes density monotone in beta (larger eta admits
    // weakly more solutions); check row-wise over fully decided cells
    for a in &alphas {
        let row: Vec<&PhaseCell> = cells.iter().filter(|c| &c.alpha == a).collect();
        for pair in row.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            if lo.skipped || hi.skipped || lo.undecided > 0 || hi.undecided > 0 {
                continue;
            }
            if lo.solutions > hi.solutions {
                return Err(ScanError::DensityMonotonicity {
                    alpha: a.to_string(),
                    lo: lo.beta.to_string(),
                    hi: hi.beta.to_string(),
                });
            }
        }
    }

    let complete = cells.iter().all(|c| !c.skipped);
    Ok(PhaseMatrix {
        inst: inst.clone(),
        coeff: coeff.clone(),
        m_samples: m_samples.to_vec(),
        alphas,
        betas,
        cells,
        complete,
        exploratory: true,
    })
}
