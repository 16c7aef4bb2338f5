//! Deterministic rendering of results to JSON, CSV, and SVG strings, plus
//! provenance stamping.
//!
//! Identical inputs produce byte-identical outputs: all numerals are
//! rendered from exact rationals, struct field order fixes JSON key order,
//! and nothing time- or machine-dependent is embedded. The CLI writes these
//! strings to files; the acceptance suite compares them across sequential
//! and parallel runs.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::ball::Rat;
use crate::certify::{Certificate, Verdict, VerificationReport};
use crate::model::Instance;
use crate::scan::{GapReport, PhaseMatrix};
use crate::search::{ProfileRow, SearchOutcome};
use crate::witness::WitnessTau;

pub const SCHEMA_VERSION: u32 = 1;

/// Digits used when rendering non-terminating decimals.
const DECIMAL_PLACES: usize = 24;

pub fn sha256_hex(data: &str) -> String {
    let mut h = Sha256::new();
    h.update(data.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance block embedded in every output document.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub generator: String,
    pub config_toml: String,
    pub config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_sha256: Option<String>,
}

impl Provenance {
    pub fn new(config_toml: &str) -> Self {
        Provenance {
            schema_version: SCHEMA_VERSION,
            generator: format!("shifted-waring {}", env!("CARGO_PKG_VERSION")),
            config_toml: config_toml.to_string(),
            config_sha256: sha256_hex(config_toml),
            certificate_sha256: None,
        }
    }

    pub fn with_certificate(mut self, cert: &Certificate) -> Self {
        self.certificate_sha256 = Some(certificate_sha256(cert));
        self
    }

    fn csv_comments(&self) -> String {
        let mut s = format!(
            "# schema_version={}\n# generator={}\n# config_sha256={}\n",
            self.schema_version, self.generator, self.config_sha256
        );
        if let Some(h) = &self.certificate_sha256 {
            s.push_str(&format!("# certificate_sha256={h}\n"));
        }
        s
    }
}

fn pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn certificate_json(cert: &Certificate) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        schema_version: u32,
        command: &'static str,
        certificate: &'a Certificate,
    }
    pretty(&Doc { schema_version: SCHEMA_VERSION, command: "certify", certificate: cert })
}

/// Canonical certificate hash: SHA-256 of the certificate JSON document.
pub fn certificate_sha256(cert: &Certificate) -> String {
    sha256_hex(&certificate_json(cert))
}

#[derive(Serialize)]
struct SearchDoc<'a> {
    schema_version: u32,
    command: &'static str,
    instance: &'a Instance,
    tau: String,
    eta_rule: String,
    radius_rule: String,
    outcome: &'a SearchOutcome,
    provenance: &'a Provenance,
}

pub fn search_json(
    outcome: &SearchOutcome,
    instance: &Instance,
    tau: &str,
    eta_rule: &str,
    radius_rule: &str,
    prov: &Provenance,
) -> String {
    pretty(&SearchDoc {
        schema_version: SCHEMA_VERSION,
        command: "search",
        instance,
        tau: tau.to_string(),
        eta_rule: eta_rule.to_string(),
        radius_rule: radius_rule.to_string(),
        outcome,
        provenance: prov,
    })
}

pub fn witness_json(rows: &[WitnessTau], instance: &Instance, prov: &Provenance) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        schema_version: u32,
        command: &'static str,
        instance: &'a Instance,
        rows: &'a [WitnessTau],
        provenance: &'a Provenance,
    }
    pretty(&Doc {
        schema_version: SCHEMA_VERSION,
        command: "witness",
        instance,
        rows,
        provenance: prov,
    })
}

pub fn witness_csv(rows: &[WitnessTau], prov: &Provenance) -> String {
    let mut s = prov.csv_comments();
    s.push_str("m,tau,tau_decimal,center_mid,center_rad,m_hat\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.m,
            r.tau,
            r.tau.to_decimal_string(DECIMAL_PLACES),
            r.center.mid_rat().to_decimal_string(DECIMAL_PLACES),
            Rat::from_dyadic(r.center.rad()).to_decimal_string(DECIMAL_PLACES),
            r.m_hat
        ));
    }
    s
}

pub fn profile_json(rows: &[ProfileRow], instance: &Instance, prov: &Provenance) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        schema_version: u32,
        command: &'static str,
        instance: &'a Instance,
        rows: &'a [ProfileRow],
        provenance: &'a Provenance,
    }
    pretty(&Doc {
        schema_version: SCHEMA_VERSION,
        command: "profile",
        instance,
        rows,
        provenance: prov,
    })
}

fn join_vec(v: &Option<Vec<i64>>) -> String {
    match v {
        None => String::new(),
        Some(xs) => xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
    }
}

pub fn profile_csv(rows: &[ProfileRow], prov: &Provenance) -> String {
    let mut s = prov.csv_comments();
    s.push_str("m,tau,status,min_residual,min_residual_decimal,argmin\n");
    for r in rows {
        let (mr, mrd) = match &r.min_residual_exact {
            Some(v) => (v.to_string(), v.to_decimal_string(DECIMAL_PLACES)),
            None => (String::new(), String::new()),
        };
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.m,
            r.tau,
            status_str(&verdict_of(r.status)),
            mr,
            mrd,
            join_vec(&r.argmin)
        ));
    }
    s
}

fn verdict_of(s: crate::search::Status) -> Verdict {
    Verdict::from(s)
}

fn status_str(v: &Verdict) -> &'static str {
    match v {
        Verdict::Empty => "empty",
        Verdict::Solutions => "solutions",
        Verdict::Undecided => "undecided",
        Verdict::Skipped => "skipped",
    }
}

pub fn verification_json(report: &VerificationReport, prov: &Provenance) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        schema_version: u32,
        command: &'static str,
        report: &'a VerificationReport,
        provenance: &'a Provenance,
    }
    pretty(&Doc { schema_version: SCHEMA_VERSION, command: "verify", report, provenance: prov })
}

pub fn verification_csv(report: &VerificationReport, prov: &Provenance) -> String {
    let mut s = prov.csv_comments();
    s.push_str("m,verdict,counted_for_anomalies\n");
    for (m, v) in &report.verdicts {
        s.push_str(&format!(
            "{},{},{}\n",
            m,
            status_str(v),
            if *m >= report.cert.m0 { "yes" } else { "no" }
        ));
    }
    s
}

pub fn gap_json(report: &GapReport, prov: &Provenance) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        schema_version: u32,
        command: &'static str,
        report: &'a GapReport,
        provenance: &'a Provenance,
    }
    pretty(&Doc { schema_version: SCHEMA_VERSION, command: "scan", report, provenance: prov })
}

pub fn gap_csv(report: &GapReport, prov: &Provenance) -> String {
    let mut s = prov.csv_comments();
    s.push_str("j,tau,status,min_residual\n");
    for p in &report.points {
        let mr = p
            .min_residual_exact
            .as_ref()
            .map(|v| v.to_string())
            .unwrap_or_default();
        s.push_str(&format!("{},{},{},{}\n", p.j, p.tau, status_str(&p.status), mr));
    }
    s
}

pub fn phase_json(matrix: &PhaseMatrix, prov: &Provenance) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        schema_version: u32,
        command: &'static str,
        matrix: &'a PhaseMatrix,
        provenance: &'a Provenance,
    }
    pretty(&Doc { schema_version: SCHEMA_VERSION, command: "phase", matrix, provenance: prov })
}

pub fn phase_csv(matrix: &PhaseMatrix, prov: &Provenance) -> String {
    let mut s = prov.csv_comments();
    s.push_str("alpha,beta,solutions,empty,undecided,skipped,density,undecided_fraction\n");
    for c in &matrix.cells {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            c.alpha,
            c.beta,
            c.solutions,
            c.empty,
            c.undecided,
            c.skipped,
            c.density.as_ref().map(|d| d.to_decimal_string(6)).unwrap_or_default(),
            c.undecided_fraction
                .as_ref()
                .map(|d| d.to_decimal_string(6))
                .unwrap_or_default(),
        ));
    }
    s
}

/// Deterministic color scale white -> red by density.
fn density_color(d: &Rat) -> String {
    // channel = 255 - round(d * 208) for g and b; red channel stays high
    let scaled = d * &Rat::from_int(208);
    let rounded = (&scaled + &Rat::ratio(1, 2)).floor_bigint();
    let v = 255i64 - i64::try_from(&rounded).unwrap_or(208).clamp(0, 208);
    format!("rgb(214,{v},{v})")
}

fn svg_header(width: u32, height: u32, title: &str, prov: &Provenance) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n\
         <!-- config_sha256={} -->\n\
         <desc>{title}</desc>\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>\n",
        prov.config_sha256
    )
}

fn verdict_color(v: &Verdict) -> &'static str {
    match v {
        Verdict::Empty => "#74add1",
        Verdict::Solutions => "#d73027",
        Verdict::Undecided => "#fee090",
        Verdict::Skipped => "#9e9e9e",
    }
}

/// Strip chart of gap-scan statuses with the witness and the certified
/// radius marked.
pub fn gap_svg(report: &GapReport, prov: &Provenance) -> String {
    let width = 800u32;
    let height = 220u32;
    let plot_x0 = 50i64;
    let plot_w = 700i64;
    let n = report.points.len() as i64;
    let mut s = svg_header(width, height, "solution-free gap around a certified witness", prov);
    let cell_w = plot_w / n.max(1);
    for (i, p) in report.points.iter().enumerate() {
        let x = plot_x0 + (i as i64) * cell_w;
        s.push_str(&format!(
            "<rect x=\"{x}\" y=\"60\" width=\"{cell_w}\" height=\"60\" fill=\"{}\" stroke=\"none\"/>\n",
            verdict_color(&p.status)
        ));
    }
    // witness marker at the central grid point
    let center_x = plot_x0 + (n / 2) * cell_w + cell_w / 2;
    s.push_str(&format!(
        "<line x1=\"{center_x}\" y1=\"50\" x2=\"{center_x}\" y2=\"130\" stroke=\"black\" stroke-width=\"2\"/>\n"
    ));
    // certified radius: 25 grid steps on each side
    for sign in [-1i64, 1] {
        let x = center_x + sign * 25 * cell_w;
        if x >= plot_x0 && x <= plot_x0 + plot_w {
            s.push_str(&format!(
                "<line x1=\"{x}\" y1=\"55\" x2=\"{x}\" y2=\"125\" stroke=\"black\" stroke-width=\"1\" stroke-dasharray=\"4,3\"/>\n"
            ));
        }
    }
    s.push_str(&format!(
        "<text x=\"50\" y=\"30\" font-family=\"monospace\" font-size=\"13\">m={} tau0={} predicted_radius={} measured_gap={}</text>\n",
        report.m,
        report.tau0.to_decimal_string(8),
        report.predicted_radius.to_decimal_string(8),
        report.measured_gap.to_decimal_string(8),
    ));
    s.push_str(
        "<text x=\"50\" y=\"160\" font-family=\"monospace\" font-size=\"12\">empty=#74add1 solutions=#d73027 undecided=#fee090 skipped=#9e9e9e</text>\n",
    );
    s.push_str(&format!(
        "<text x=\"50\" y=\"180\" font-family=\"monospace\" font-size=\"12\">grid step {} over {} points</text>\n",
        report.step.to_decimal_string(8),
        report.grid_points,
    ));
    s.push_str("</svg>\n");
    s
}

/// Heatmap of the phase matrix: rows are window exponents alpha, columns are
/// tolerance exponents beta, fill by solution density.
pub fn phase_svg(matrix: &PhaseMatrix, prov: &Provenance) -> String {
    let cell_w = 96u32;
    let cell_h = 48u32;
    let left = 90u32;
    let top = 60u32;
    let cols = matrix.betas.len() as u32;
    let rows = matrix.alphas.len() as u32;
    let width = left + cols * cell_w + 30;
    let height = top + rows * cell_h + 60;
    let mut s = svg_header(width, height, "exploratory solvability phase diagram", prov);
    s.push_str(&format!(
        "<text x=\"{left}\" y=\"25\" font-family=\"monospace\" font-size=\"13\">density of m with solutions; radius={}*m^alpha eta={}*m^beta (exploratory)</text>\n",
        matrix.coeff, matrix.coeff
    ));
    for (ri, a) in matrix.alphas.iter().enumerate() {
        let y = top + ri as u32 * cell_h;
        s.push_str(&format!(
            "<text x=\"10\" y=\"{}\" font-family=\"monospace\" font-size=\"12\">a={a}</text>\n",
            y + cell_h / 2 + 4
        ));
        for (ci, b) in matrix.betas.iter().enumerate() {
            let x = left + ci as u32 * cell_w;
            let cell = matrix
                .cells
                .iter()
                .find(|c| &c.alpha == a && &c.beta == b)
                .expect("cell exists");
            let (fill, label) = match (&cell.density, cell.skipped) {
                (_, true) => ("#9e9e9e".to_string(), "skip".to_string()),
                (Some(d), false) => (density_color(d), d.to_decimal_string(3)),
                (None, false) => ("#9e9e9e".to_string(), String::new()),
            };
            s.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y}\" width=\"{cell_w}\" height=\"{cell_h}\" fill=\"{fill}\" stroke=\"#555\"/>\n"
            ));
            let mark = if cell.undecided > 0 { "?" } else { "" };
            s.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">{label}{mark}</text>\n",
                x + cell_w / 2,
                y + cell_h / 2 + 4
            ));
        }
    }
    for (ci, b) in matrix.betas.iter().enumerate() {
        let x = left + ci as u32 * cell_w + cell_w / 2;
        s.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"middle\">b={b}</text>\n",
            top + rows * cell_h + 20
        ));
    }
    s.push_str("</svg>\n");
    s
}
