//! Regime maps over the `(lambda, p)` plane.
//!
//! Each cell records the equilibrium structure, boundedness verdicts for a
//! fixed seed set and the existence status of stationary solutions. Cells are
//! computed independently on a dedicated thread pool and assembled in
//! row-major order (`p` outer, `lambda` inner), so the output does not depend
//! on the worker count.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barriers::{
    axis_start_threshold, certify_bounded_lneg, certify_bounded_pge3, certify_unbounded_axis_start,
    certify_unbounded_u_axis_start, u_axis_start_data, Certificate, Verdict,
};
use crate::error::{Error, Result};
use crate::flow::{integrate, Crossing, EventSpec, EventSurface, IntegrationOptions, Terminal};
use crate::model::{classify_equilibria, EquilibriumKind, ModelParams, PhasePoint};
use crate::stationary::{
    existence_claim, solve_bvp, write_profile_csv, BcKind, Claim, ProfileSample, ShootingOptions, SignKind,
};

/// Largest profile residual accepted as a witness.
pub const WITNESS_RESIDUAL: f64 = 1e-6;

/// Most samples written to a witness file; the residual is always measured
/// on the full profile before thinning.
pub const WITNESS_SAMPLES: usize = 1001;

/// Evenly spaced (by index) subset of `profile` keeping both ends.
fn thinned(profile: &[ProfileSample], max: usize) -> Vec<ProfileSample> {
    if profile.len() <= max {
        return profile.to_vec();
    }
    let last = profile.len() - 1;
    (0..max).map(|k| profile[k * last / (max - 1)]).collect()
}

/// Seeds probed for boundedness in every cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeedPolicy {
    /// Number of v-axis starts `(0, v0)`, geometrically spaced.
    pub axis_seeds: usize,
    pub v0_min: f64,
    pub v0_max: f64,
    /// Adds a start just above the v-axis threshold and the u-axis start of
    /// the power-curve construction when `1 < p < 3`.
    pub threshold_probes: bool,
    /// Steepness of the u-axis probe's power curve (must exceed 1).
    pub u_axis_beta: f64,
}

impl Default for SeedPolicy {
    fn default() -> Self {
        Self {
            axis_seeds: 8,
            v0_min: 0.1,
            v0_max: 100.0,
            threshold_probes: true,
            u_axis_beta: 2.0,
        }
    }
}

impl SeedPolicy {
    fn axis_values(&self) -> Vec<f64> {
        let n = self.axis_seeds;
        if n == 1 {
            return vec![self.v0_min];
        }
        let ratio = self.v0_max / self.v0_min;
        (0..n)
            .map(|k| self.v0_min * ratio.powf(k as f64 / (n - 1) as f64))
            .collect()
    }
}

/// Grid and policy of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub lambda_range: [f64; 2],
    pub p_range: [f64; 2],
    /// Number of `lambda` and `p` values, in that order.
    pub resolution: [usize; 2],
    pub seeds: SeedPolicy,
    /// Runs the shooting solvers for every theorem-backed existence flag and
    /// keeps the flag only when a profile passes the residual check.
    pub witnesses: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            lambda_range: [-2.0, 2.0],
            p_range: [1.0, 4.0],
            resolution: [21, 21],
            seeds: SeedPolicy::default(),
            witnesses: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let [nl, np] = self.resolution;
        if nl < 2 || np < 2 {
            return Err(Error::Config(format!(
                "resolution must be at least 2 per axis, got {nl} x {np}"
            )));
        }
        let finite = self.lambda_range.iter().chain(&self.p_range).all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("parameter ranges must be finite".into()));
        }
        if self.p_range[0] < 1.0 || self.p_range[1] < self.p_range[0] {
            return Err(Error::Config(format!(
                "p range must be an ordered subset of [1, inf), got {:?}",
                self.p_range
            )));
        }
        if self.lambda_range[1] < self.lambda_range[0] {
            return Err(Error::Config(format!(
                "lambda range must be ordered, got {:?}",
                self.lambda_range
            )));
        }
        let s = &self.seeds;
        if s.axis_seeds == 0 || !(s.v0_min > 0.0 && s.v0_max >= s.v0_min) || s.u_axis_beta <= 1.0 {
            return Err(Error::Config(format!("invalid seed policy {s:?}")));
        }
        Ok(())
    }

    fn axis(range: [f64; 2], n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn lambda_values(&self) -> Vec<f64> {
        Self::axis(self.lambda_range, self.resolution[0])
    }

    pub fn p_values(&self) -> Vec<f64> {
        Self::axis(self.p_range, self.resolution[1])
    }
}

/// Existence flags, one per boundary condition; positive profiles except for
/// the periodic column, whose solutions change sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExistenceFlags {
    pub dirichlet: Claim,
    pub neumann: Claim,
    pub mixed1: Claim,
    pub mixed2: Claim,
    pub periodic: Claim,
}

/// Columns of [`ExistenceFlags`] with the sign used for each.
pub const FLAG_COLUMNS: [(BcKind, SignKind); 5] = [
    (BcKind::Dirichlet, SignKind::Positive),
    (BcKind::Neumann, SignKind::Positive),
    (BcKind::Mixed1, SignKind::Positive),
    (BcKind::Mixed2, SignKind::Positive),
    (BcKind::Periodic, SignKind::SignChanging),
];

impl ExistenceFlags {
    pub fn get(&self, bc: BcKind) -> Option<Claim> {
        match bc {
            BcKind::Dirichlet => Some(self.dirichlet),
            BcKind::Neumann => Some(self.neumann),
            BcKind::Mixed1 => Some(self.mixed1),
            BcKind::Mixed2 => Some(self.mixed2),
            BcKind::Periodic => Some(self.periodic),
            _ => None,
        }
    }

    fn set(&mut self, bc: BcKind, claim: Claim) {
        match bc {
            BcKind::Dirichlet => self.dirichlet = claim,
            BcKind::Neumann => self.neumann = claim,
            BcKind::Mixed1 => self.mixed1 = claim,
            BcKind::Mixed2 => self.mixed2 = claim,
            BcKind::Periodic => self.periodic = claim,
            _ => {}
        }
    }
}

/// A stationary profile that backs an `exists` flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub bc: BcKind,
    pub residual: f64,
    pub half_width: f64,
    pub amplitude: f64,
    /// Profile CSV written for this witness, relative to the witness
    /// directory; at most [`WITNESS_SAMPLES`] points of the solved profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

/// Boundedness verdicts over the seed set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SeedTally {
    pub bounded: usize,
    pub unbounded: usize,
    pub undetermined: usize,
    /// Verdicts settled by integration rather than a certificate.
    pub by_integration: usize,
}

impl SeedTally {
    /// Bounded share of the decided seeds.
    pub fn bounded_fraction(&self) -> Option<f64> {
        let decided = self.bounded + self.unbounded;
        (decided > 0).then(|| self.bounded as f64 / decided as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCell {
    pub lambda: f64,
    pub p: f64,
    /// `None` when the equilibria form a continuum (`p = 1`, `lambda = 1`).
    pub n_equilibria: Option<usize>,
    pub kinds: Vec<EquilibriumKind>,
    pub discriminant: Option<f64>,
    pub seeds: SeedTally,
    pub flags: ExistenceFlags,
    pub witnesses: Vec<Witness>,
    /// Failures local to this cell; the sweep never aborts on them.
    pub failures: Vec<String>,
}

impl RegimeCell {
    fn kinds_label(&self) -> String {
        self.kinds.iter().map(|k| k.label()).collect::<Vec<_>>().join(";")
    }
}

/// Cells in row-major order: `p` outer, `lambda` inner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeMap {
    pub config: SweepConfig,
    pub lambda_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub cells: Vec<RegimeCell>,
}

impl RegimeMap {
    pub fn cell(&self, lambda_index: usize, p_index: usize) -> &RegimeCell {
        &self.cells[p_index * self.lambda_values.len() + lambda_index]
    }
}

fn seed_integration() -> IntegrationOptions {
    IntegrationOptions::default()
        .with_max_parameter(200.0)
        .with_events(vec![
            EventSpec::stop(EventSurface::Nullcline, Crossing::Falling),
            EventSpec::stop(EventSurface::UAxis, Crossing::Falling),
        ])
}

/// Verdict from the first decisive certificate, falling back to integration.
fn seed_verdict(start: PhasePoint, certificates: &[Result<Certificate>], m: &ModelParams) -> (Verdict, bool) {
    for c in certificates.iter().flatten() {
        if c.verdict != Verdict::Undetermined {
            return (c.verdict, false);
        }
    }
    match integrate(start, m, &seed_integration()) {
        Ok(t) => match t.terminal {
            Terminal::EventStop => (Verdict::Bounded, true),
            Terminal::Escape => (Verdict::Unbounded, true),
            _ => (Verdict::Undetermined, true),
        },
        Err(_) => (Verdict::Undetermined, true),
    }
}

fn tally_seeds(m: &ModelParams, policy: &SeedPolicy) -> SeedTally {
    let (p, lambda) = (m.p(), m.lambda());
    let superlinear = p > 1.0;
    let mut starts: Vec<(PhasePoint, Vec<Result<Certificate>>)> = Vec::new();
    let axis_certificates = |v0: f64| -> Vec<Result<Certificate>> {
        if !superlinear {
            return Vec::new();
        }
        let mut out = Vec::new();
        if lambda > 0.0 && p >= 3.0 {
            out.push(certify_bounded_pge3(v0, m));
        }
        if lambda <= 0.0 && v0 > -lambda {
            out.push(certify_bounded_lneg(v0, m));
        }
        if p < 3.0 {
            out.push(certify_unbounded_axis_start(v0, m));
        }
        out
    };
    for v0 in policy.axis_values() {
        starts.push((PhasePoint::new(0.0, v0), axis_certificates(v0)));
    }
    if policy.threshold_probes && superlinear && p < 3.0 {
        if let Ok(threshold) = axis_start_threshold(m) {
            let v0 = 1.05 * threshold;
            starts.push((PhasePoint::new(0.0, v0), axis_certificates(v0)));
        }
        if let Ok((u0, _)) = u_axis_start_data(policy.u_axis_beta, m) {
            starts.push((
                PhasePoint::new(u0, 0.0),
                vec![certify_unbounded_u_axis_start(policy.u_axis_beta, m)],
            ));
        }
    }
    let mut tally = SeedTally::default();
    for (start, certificates) in &starts {
        let (verdict, integrated) = seed_verdict(*start, certificates, m);
        if integrated {
            tally.by_integration += 1;
        }
        match verdict {
            Verdict::Bounded => tally.bounded += 1,
            Verdict::Unbounded => tally.unbounded += 1,
            Verdict::Undetermined => tally.undetermined += 1,
        }
    }
    tally
}

fn witness_name(lambda_index: usize, p_index: usize, bc: BcKind) -> String {
    format!("witness_p{p_index:03}_l{lambda_index:03}_{}.csv", bc.label())
}

fn compute_cell(
    lambda_index: usize,
    p_index: usize,
    lambda: f64,
    p: f64,
    config: &SweepConfig,
    witness_dir: Option<&Path>,
) -> RegimeCell {
    let unknown = ExistenceFlags {
        dirichlet: Claim::Unknown,
        neumann: Claim::Unknown,
        mixed1: Claim::Unknown,
        mixed2: Claim::Unknown,
        periodic: Claim::Unknown,
    };
    let m = match ModelParams::new(p, lambda) {
        Ok(m) => m,
        Err(e) => {
            return RegimeCell {
                lambda,
                p,
                n_equilibria: None,
                kinds: Vec::new(),
                discriminant: None,
                seeds: SeedTally::default(),
                flags: unknown,
                witnesses: Vec::new(),
                failures: vec![e.to_string()],
            }
        }
    };
    let equilibria = classify_equilibria(&m);
    let kinds: Vec<EquilibriumKind> = equilibria.iter().map(|e| e.kind).collect();
    let n_equilibria = if kinds.contains(&EquilibriumKind::ContinuumMember) {
        None
    } else {
        Some(equilibria.len())
    };
    let mut flags = unknown;
    let mut witnesses = Vec::new();
    let mut failures = Vec::new();
    for (bc, sign) in FLAG_COLUMNS {
        let claim = existence_claim(bc, sign, &m).claim;
        flags.set(bc, claim);
        if claim != Claim::Exists || !config.witnesses {
            continue;
        }
        match solve_bvp(bc, &m, sign, &ShootingOptions::default()) {
            Ok(sol) if sol.residual <= WITNESS_RESIDUAL => {
                let mut file = None;
                if let Some(dir) = witness_dir {
                    let name = witness_name(lambda_index, p_index, bc);
                    let written = File::create(dir.join(&name))
                        .map_err(Error::from)
                        .and_then(|f| write_profile_csv(&thinned(&sol.profile, WITNESS_SAMPLES), BufWriter::new(f)));
                    match written {
                        Ok(()) => file = Some(name),
                        Err(e) => failures.push(format!("{}: witness file: {e}", bc.label())),
                    }
                }
                witnesses.push(Witness {
                    bc,
                    residual: sol.residual,
                    half_width: sol.half_width,
                    amplitude: sol.amplitude(),
                    file,
                });
            }
            Ok(sol) => {
                flags.set(bc, Claim::Unknown);
                failures.push(format!(
                    "{}: witness residual {:.3e} above {WITNESS_RESIDUAL:e}",
                    bc.label(),
                    sol.residual
                ));
            }
            Err(e) => {
                flags.set(bc, Claim::Unknown);
                failures.push(format!("{}: no witness: {e}", bc.label()));
            }
        }
    }
    RegimeCell {
        lambda,
        p,
        n_equilibria,
        kinds,
        discriminant: m.discriminant(),
        seeds: tally_seeds(&m, &config.seeds),
        flags,
        witnesses,
        failures,
    }
}

/// Fills every cell of the grid on a pool of `threads` workers.
///
/// Witness profiles are written to `witness_dir` when it is given; with
/// `config.witnesses` false the flags are the theorem claims alone.
pub fn regime_map(config: &SweepConfig, threads: usize, witness_dir: Option<&Path>) -> Result<RegimeMap> {
    config.validate()?;
    if threads == 0 {
        return Err(Error::Config("thread count must be positive".into()));
    }
    if let Some(dir) = witness_dir {
        std::fs::create_dir_all(dir)?;
    }
    let lambda_values = config.lambda_values();
    let p_values = config.p_values();
    let jobs: Vec<(usize, usize)> = (0..p_values.len())
        .flat_map(|j| (0..lambda_values.len()).map(move |i| (i, j)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    let cells = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, j)| compute_cell(i, j, lambda_values[i], p_values[j], config, witness_dir))
            .collect()
    });
    Ok(RegimeMap {
        config: config.clone(),
        lambda_values,
        p_values,
        cells,
    })
}

fn claim_label(c: Claim) -> &'static str {
    match c {
        Claim::Exists => "exists",
        Claim::NotExists => "not-exists",
        Claim::Unknown => "unknown",
    }
}

pub const CSV_HEADER: [&str; 10] = [
    "lambda",
    "p",
    "n_equilibria",
    "kinds",
    "dirichlet",
    "neumann",
    "mixed1",
    "mixed2",
    "periodic",
    "bounded_seed_fraction",
];

/// Writes the regime CSV. A continuum of equilibria is written as
/// `continuum`; a cell without decided seeds leaves the fraction empty.
pub fn write_regime_csv<W: Write>(map: &RegimeMap, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for c in &map.cells {
        let count = c
            .n_equilibria
            .map_or_else(|| "continuum".to_string(), |n| n.to_string());
        let fraction = c.seeds.bounded_fraction().map_or_else(String::new, |f| f.to_string());
        w.write_record([
            c.lambda.to_string(),
            c.p.to_string(),
            count,
            c.kinds_label(),
            claim_label(c.flags.dirichlet).to_string(),
            claim_label(c.flags.neumann).to_string(),
            claim_label(c.flags.mixed1).to_string(),
            claim_label(c.flags.mixed2).to_string(),
            claim_label(c.flags.periodic).to_string(),
            fraction,
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed row of the regime CSV.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct RegimeRow {
    pub lambda: f64,
    pub p: f64,
    pub n_equilibria: String,
    pub kinds: String,
    pub dirichlet: Claim,
    pub neumann: Claim,
    pub mixed1: Claim,
    pub mixed2: Claim,
    pub periodic: Claim,
    pub bounded_seed_fraction: Option<f64>,
}

pub fn read_regime_csv<R: std::io::Read>(reader: R) -> Result<Vec<RegimeRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected regime header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Layer shown by [`write_regime_svg`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapLayer {
    Equilibria,
    Flag(BcKind),
    BoundedFraction,
}

fn layer_color(cell: &RegimeCell, layer: MapLayer) -> (String, String) {
    match layer {
        MapLayer::Equilibria => match cell.n_equilibria {
            None => ("#7f3b08".into(), "continuum".into()),
            Some(1) => ("#2166ac".into(), "1".into()),
            Some(3) => ("#b2182b".into(), "3".into()),
            Some(n) => ("#999999".into(), n.to_string()),
        },
        MapLayer::Flag(bc) => match cell.flags.get(bc) {
            Some(Claim::Exists) => ("#1b7837".into(), "exists".into()),
            Some(Claim::NotExists) => ("#762a83".into(), "not-exists".into()),
            _ => ("#d9d9d9".into(), "unknown".into()),
        },
        MapLayer::BoundedFraction => match cell.seeds.bounded_fraction() {
            Some(f) => {
                let level = (255.0 * (1.0 - f)).round() as u8;
                (format!("#{level:02x}{level:02x}ff"), format!("{f:.2}"))
            }
            None => ("#d9d9d9".into(), "undecided".into()),
        },
    }
}

/// Static heat map with `lambda` across and `p` upward.
pub fn regime_svg(map: &RegimeMap, layer: MapLayer) -> String {
    const CELL: usize = 20;
    const MARGIN: usize = 60;
    let (nl, np) = (map.lambda_values.len(), map.p_values.len());
    let width = 2 * MARGIN + nl * CELL;
    let height = 2 * MARGIN + np * CELL;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let mut legend: Vec<(String, String)> = Vec::new();
    for j in 0..np {
        for i in 0..nl {
            let cell = map.cell(i, j);
            let (color, label) = layer_color(cell, layer);
            let x = MARGIN + i * CELL;
            let y = MARGIN + (np - 1 - j) * CELL;
            let _ = writeln!(
                svg,
                r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{color}"><title>lambda={} p={} {label}</title></rect>"#,
                cell.lambda, cell.p
            );
            if layer != MapLayer::BoundedFraction && !legend.iter().any(|(_, l)| *l == label) {
                legend.push((color, label));
            }
        }
    }
    let bottom = MARGIN + np * CELL;
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN}" y="{}">lambda {} .. {}</text>"#,
        bottom + 16,
        map.lambda_values[0],
        map.lambda_values[nl - 1]
    );
    let _ = writeln!(
        svg,
        r#"<text x="4" y="{}">p {} .. {}</text>"#,
        MARGIN - 8,
        map.p_values[0],
        map.p_values[np - 1]
    );
    for (k, (color, label)) in legend.iter().enumerate() {
        let x = MARGIN + k * 90;
        let y = bottom + 28;
        let _ = writeln!(svg, r#"<rect x="{x}" y="{y}" width="10" height="10" fill="{color}"/>"#);
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{label}</text>"#, x + 14, y + 9);
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_regime_svg(map: &RegimeMap, layer: MapLayer, path: &Path) -> Result<PathBuf> {
    std::fs::write(path, regime_svg(map, layer))?;
    Ok(path.to_path_buf())
}
