//! Explicit super-solutions and their numerical certification.
//!
//! A function `v >= 0` is a super-solution when
//! `v_t - v_xx + v v_x - v^p + lambda v >= 0` in the domain and the boundary
//! inequality of the chosen condition holds at the finite ends. Three closed
//! forms are catalogued:
//!
//! * the constant `lambda^(1/(p-1))` (for `lambda > 0`);
//! * `A exp(a x + (t + t0)^n)` on a half-line (`n >= 2` an integer);
//! * the decaying Gaussian `A (t+1)^(-gamma) exp(-(x+y)^2 / (4t+4))` on
//!   `(-inf, 0]` for `lambda = 0`, `p > 3`, with `gamma = 1/(p-1)` and
//!   `y = -2 sigma gamma`.
//!
//! For the Gaussian the operator evaluates to
//! `v/(2(t+1)) (1 - 2 gamma - (x+y) v - 2 (t+1) v^(p-1))`, and since
//! `(t+1) v^(p-1) <= A^(p-1)` the amplitude must satisfy
//! `2 A^(p-1) <= 1 - 2 gamma`. The weaker bound `A^(p-1) <= 1 - 2 gamma` is
//! reported alongside for reference.
//!
//! Certification uses the hand-derived partial derivatives below. Residuals
//! and boundary margins are normalized by the sum of the magnitudes of their
//! terms so that the `-1e-12` acceptance threshold is meaningful for values
//! that range over many orders of magnitude.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::model::ModelParams;
use crate::parabolic::EndCondition;

/// Where a super-solution lives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SuperDomain {
    /// `(0, inf)`; the finite end is `x = 0` with outward normal `-d/dx`.
    RightHalfLine,
    /// `(-inf, 0)`; the finite end is `x = 0` with outward normal `+d/dx`.
    LeftHalfLine,
    WholeLine,
    /// A bounded interval with both ends carrying the condition.
    Interval {
        left: f64,
        right: f64,
    },
}

/// What to build.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SuperRequest {
    ConstantRoot,
    ExpGrowth {
        rate: f64,
        #[serde(default = "default_power")]
        power: u32,
        /// Overrides the smallest admissible amplitude.
        #[serde(default)]
        amplitude: Option<f64>,
    },
    GaussianDecay {
        /// Overrides the largest admissible amplitude.
        #[serde(default)]
        amplitude: Option<f64>,
    },
}

fn default_power() -> u32 {
    2
}

/// A closed-form candidate with its parameters filled in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SuperForm {
    ConstantRoot {
        value: f64,
    },
    ExpGrowth {
        amplitude: f64,
        rate: f64,
        t0: f64,
        power: u32,
    },
    GaussianDecay {
        amplitude: f64,
        gamma: f64,
        shift: f64,
    },
}

impl SuperForm {
    pub fn label(&self) -> &'static str {
        match self {
            Self::ConstantRoot { .. } => "constant-root",
            Self::ExpGrowth { .. } => "exp-growth",
            Self::GaussianDecay { .. } => "gaussian-decay",
        }
    }

    /// `(v, v_t, v_x, v_xx)` from the closed forms.
    pub fn derivatives(&self, x: f64, t: f64) -> [f64; 4] {
        match *self {
            Self::ConstantRoot { value } => [value, 0.0, 0.0, 0.0],
            Self::ExpGrowth {
                amplitude,
                rate,
                t0,
                power,
            } => {
                let s = t + t0;
                let v = amplitude * (rate * x + s.powi(power as i32)).exp();
                let growth = power as f64 * s.powi(power as i32 - 1);
                [v, growth * v, rate * v, rate * rate * v]
            }
            Self::GaussianDecay {
                amplitude,
                gamma,
                shift,
            } => {
                let tau = t + 1.0;
                let z = x + shift;
                let v = amplitude * tau.powf(-gamma) * (-z * z / (4.0 * tau)).exp();
                let vt = v * (-gamma / tau + z * z / (4.0 * tau * tau));
                let vx = -v * z / (2.0 * tau);
                let vxx = v * (z * z / (4.0 * tau * tau) - 1.0 / (2.0 * tau));
                [v, vt, vx, vxx]
            }
        }
    }

    pub fn evaluate(&self, x: f64, t: f64) -> f64 {
        self.derivatives(x, t)[0]
    }
}

/// A recorded hypothesis with its slack (`>= 0` when satisfied).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub satisfied: bool,
    pub margin: f64,
    /// Informational entries are reported but not required.
    #[serde(default)]
    pub informational: bool,
}

/// A constraint `lhs <= rhs` recorded through its margin `rhs - lhs`;
/// rounding at the level of `scale` counts as equality.
fn constraint(name: &str, margin: f64, scale: f64) -> Constraint {
    Constraint {
        name: name.to_string(),
        satisfied: margin >= -4.0 * f64::EPSILON * scale.abs().max(1.0),
        margin,
        informational: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperSolutionSpec {
    pub form: SuperForm,
    pub params: ModelParams,
    pub bc: EndCondition,
    pub domain: SuperDomain,
    pub constraints: Vec<Constraint>,
}

impl SuperSolutionSpec {
    pub fn evaluate(&self, x: f64, t: f64) -> f64 {
        self.form.evaluate(x, t)
    }
}

fn sigma_of(bc: EndCondition) -> Option<f64> {
    match bc {
        EndCondition::Dirichlet | EndCondition::Neumann => Some(0.0),
        EndCondition::Dynamical { sigma } => Some(sigma),
        _ => None,
    }
}

fn regime(name: &str, detail: String) -> Error {
    Error::Precondition(format!("constraint `{name}` violated: {detail}"))
}

/// Fills in a catalogue entry for the given parameters, boundary condition
/// and bound on the initial data.
pub fn build(
    request: SuperRequest,
    m: &ModelParams,
    bc: EndCondition,
    domain: SuperDomain,
    phi_sup: f64,
) -> Result<SuperSolutionSpec> {
    ensure_finite("phi_sup", phi_sup)?;
    let (p, lambda) = (m.p(), m.lambda());
    let (form, constraints) = match request {
        SuperRequest::ConstantRoot => {
            let value = m
                .equilibrium_abscissa()
                .filter(|_| p > 1.0)
                .ok_or_else(|| regime("lambda > 0", format!("lambda = {lambda}, p = {p}")))?;
            if phi_sup > value {
                return Err(regime(
                    "phi <= lambda^(1/(p-1))",
                    format!("sup phi = {phi_sup} exceeds {value}"),
                ));
            }
            (
                SuperForm::ConstantRoot { value },
                vec![
                    constraint("lambda > 0", lambda, 0.0),
                    constraint("phi <= lambda^(1/(p-1))", value - phi_sup, value),
                ],
            )
        }
        SuperRequest::ExpGrowth { rate, power, amplitude } => {
            ensure_finite("rate", rate)?;
            if rate <= 0.0 {
                return Err(regime("a > 0", format!("a = {rate}")));
            }
            if power < 2 {
                return Err(regime("n >= 2", format!("n = {power}")));
            }
            let allowed = match domain {
                SuperDomain::RightHalfLine => {
                    p > 1.0 && p <= 2.0 && matches!(bc, EndCondition::Dirichlet | EndCondition::Dynamical { .. })
                }
                SuperDomain::LeftHalfLine => p == 2.0 && sigma_of(bc).is_some(),
                SuperDomain::WholeLine => p == 2.0,
                SuperDomain::Interval { .. } => false,
            };
            if !allowed {
                return Err(regime(
                    "p in (1,2] with Dirichlet/dynamical on (0,inf), or p = 2 with Dirichlet/Neumann/dynamical on (-inf,0) or R",
                    format!("p = {p}, {bc:?} on {domain:?}"),
                ));
            }
            if lambda > 0.0 {
                return Err(regime("lambda <= 0", format!("lambda = {lambda}")));
            }
            let n = power as f64;
            let mut t0: f64 = 0.0;
            let interior_need = rate * rate - lambda;
            if interior_need > 0.0 {
                t0 = t0.max((interior_need / n).powf(1.0 / (n - 1.0)));
            }
            let needs_sigma = domain == SuperDomain::RightHalfLine;
            let mut boundary_t0 = None;
            if let (true, EndCondition::Dynamical { sigma }) = (needs_sigma, bc) {
                if sigma <= 0.0 {
                    return Err(regime("sigma > 0", format!("sigma = {sigma}")));
                }
                let need = (rate / (n * sigma)).powf(1.0 / (n - 1.0));
                boundary_t0 = Some(need);
                t0 = t0.max(need);
            }
            // A^(p-2) <= a; for p = 2 this is a >= 1 and any A works.
            let a_min = if p < 2.0 { rate.powf(1.0 / (p - 2.0)) } else { 1.0 };
            if p == 2.0 && rate < 1.0 {
                return Err(regime("A^(p-2) <= a", format!("p = 2 needs a >= 1, got {rate}")));
            }
            let amp = amplitude.unwrap_or_else(|| a_min.max(phi_sup));
            ensure_finite("amplitude", amp)?;
            let mut cs = vec![
                constraint(
                    "n t0^(n-1) >= a^2 - lambda",
                    n * t0.powf(n - 1.0) - interior_need,
                    interior_need,
                ),
                constraint("A^(p-2) <= a", rate - amp.powf(p - 2.0), rate),
                constraint("A >= sup phi", amp - phi_sup, amp),
            ];
            if let Some(need) = boundary_t0 {
                cs.push(constraint("t0 >= (a/(n sigma))^(1/(n-1))", t0 - need, need));
            }
            if let Some(bad) = cs.iter().find(|c| !c.satisfied) {
                return Err(regime(&bad.name, format!("margin {}", bad.margin)));
            }
            (
                SuperForm::ExpGrowth {
                    amplitude: amp,
                    rate,
                    t0,
                    power,
                },
                cs,
            )
        }
        SuperRequest::GaussianDecay { amplitude } => {
            if lambda != 0.0 {
                return Err(regime("lambda = 0", format!("lambda = {lambda}")));
            }
            if p <= 3.0 {
                return Err(regime("p > 3", format!("p = {p}")));
            }
            if domain != SuperDomain::LeftHalfLine {
                return Err(regime("domain (-inf, 0)", format!("{domain:?}")));
            }
            let sigma = sigma_of(bc).ok_or_else(|| regime("Dirichlet, Neumann or dynamical end", format!("{bc:?}")))?;
            let gamma = 1.0 / (p - 1.0);
            let shift = -2.0 * sigma * gamma;
            let room = 1.0 - 2.0 * gamma;
            let a_max = (0.5 * room).powf(1.0 / (p - 1.0));
            let amp = amplitude.unwrap_or(a_max);
            ensure_finite("amplitude", amp)?;
            let mut cs = vec![
                constraint("2 A^(p-1) <= 1 - 2 gamma", room - 2.0 * amp.powf(p - 1.0), room),
                constraint("A >= sup phi", amp - phi_sup, amp),
            ];
            if let Some(bad) = cs.iter().find(|c| !c.satisfied) {
                return Err(regime(&bad.name, format!("margin {}", bad.margin)));
            }
            cs.push(Constraint {
                informational: true,
                ..constraint("A^(p-1) <= 1 - 2 gamma", room - amp.powf(p - 1.0), room)
            });
            (
                SuperForm::GaussianDecay {
                    amplitude: amp,
                    gamma,
                    shift,
                },
                cs,
            )
        }
    };
    Ok(SuperSolutionSpec {
        form,
        params: *m,
        bc,
        domain,
        constraints,
    })
}

/// The amplitude bound `(1 - 2 gamma)^(1/(p-1))` without the factor two.
pub fn gaussian_reference_bound(p: f64) -> f64 {
    (1.0 - 2.0 / (p - 1.0)).powf(1.0 / (p - 1.0))
}

/// Space-time window and resolution for [`validate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationGrid {
    /// Extent of the window into the domain (a half-line becomes `[0, L]`
    /// or `[-L, 0]`, the whole line `[-L, L]`).
    pub extent: f64,
    pub final_time: f64,
    pub nx: usize,
    pub nt: usize,
    /// Seed of the finite-difference cross-check points.
    pub seed: u64,
}

impl Default for ValidationGrid {
    fn default() -> Self {
        Self {
            extent: 10.0,
            final_time: 5.0,
            nx: 256,
            nt: 256,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub kind: String,
    pub constraints: Vec<Constraint>,
    /// Smallest normalized interior residual.
    pub min_interior_residual: f64,
    /// Smallest raw interior residual.
    pub min_interior_residual_raw: f64,
    /// Smallest normalized boundary margin (`None` without finite ends).
    pub min_boundary_margin: Option<f64>,
    pub worst_point: (f64, f64),
    /// Largest relative gap between closed-form and finite-difference derivatives.
    pub derivative_check: f64,
    pub certified: bool,
}

/// Threshold on normalized residuals and margins.
pub const CERTIFY_TOL: f64 = 1e-12;

fn window(domain: SuperDomain, extent: f64) -> (f64, f64) {
    match domain {
        SuperDomain::RightHalfLine => (0.0, extent),
        SuperDomain::LeftHalfLine => (-extent, 0.0),
        SuperDomain::WholeLine => (-extent, extent),
        SuperDomain::Interval { left, right } => (left, right),
    }
}

/// Finite ends with their outward-normal sign.
fn ends(domain: SuperDomain) -> Vec<(f64, f64)> {
    match domain {
        SuperDomain::RightHalfLine => vec![(0.0, -1.0)],
        SuperDomain::LeftHalfLine => vec![(0.0, 1.0)],
        SuperDomain::WholeLine => vec![],
        SuperDomain::Interval { left, right } => vec![(left, -1.0), (right, 1.0)],
    }
}

/// Normalized boundary margin of `v` at an end with outward sign `nu`.
fn boundary_margin(form: &SuperForm, bc: EndCondition, sigma_t: Option<f64>, x: f64, nu: f64, t: f64) -> (f64, f64) {
    let [v, vt, vx, _] = form.derivatives(x, t);
    let dn = nu * vx;
    let terms: Vec<f64> = match bc {
        EndCondition::Dirichlet => vec![v],
        EndCondition::Neumann => vec![dn],
        EndCondition::Robin { a } => vec![dn, a * v],
        EndCondition::Dynamical { sigma } => vec![sigma_t.unwrap_or(sigma) * vt, dn],
        EndCondition::NonlinearFlux { c2, c1 } => vec![dn, -c2 * v * v, -c1 * v],
    };
    let raw: f64 = terms.iter().sum();
    let scale: f64 = terms.iter().map(|x| x.abs()).sum();
    (raw, if scale > 0.0 { raw / scale } else { raw })
}

/// Checks the operator and boundary inequalities on a space-time grid.
///
/// `sigma_of_t` replaces a constant dynamical coefficient by a function of
/// time. Failures are reported, never raised.
pub fn validate(
    spec: &SuperSolutionSpec,
    grid: &ValidationGrid,
    sigma_of_t: Option<&dyn Fn(f64) -> f64>,
) -> ValidationReport {
    let m = &spec.params;
    let (p, lambda) = (m.p(), m.lambda());
    let (lo, hi) = window(spec.domain, grid.extent);
    let nx = grid.nx.max(2);
    let nt = grid.nt.max(2);
    let mut min_norm = f64::INFINITY;
    let mut min_raw = f64::INFINITY;
    let mut worst = (lo, 0.0);
    let mut min_margin: Option<f64> = None;
    for j in 0..nt {
        let t = grid.final_time * j as f64 / (nt - 1) as f64;
        for i in 0..nx {
            let x = lo + (hi - lo) * i as f64 / (nx - 1) as f64;
            let [v, vt, vx, vxx] = spec.form.derivatives(x, t);
            let reaction = v.abs().powf(p - 1.0) * v;
            let terms = [vt, -vxx, v * vx, -reaction, lambda * v];
            let raw: f64 = terms.iter().sum();
            let scale: f64 = terms.iter().map(|x| x.abs()).sum();
            let norm = if scale > 0.0 { raw / scale } else { raw };
            min_raw = min_raw.min(raw);
            if norm < min_norm {
                min_norm = norm;
                worst = (x, t);
            }
        }
        for (x, nu) in ends(spec.domain) {
            let (_, norm) = boundary_margin(&spec.form, spec.bc, sigma_of_t.map(|f| f(t)), x, nu, t);
            min_margin = Some(min_margin.map_or(norm, |m: f64| m.min(norm)));
        }
    }
    let derivative_check = finite_difference_check(&spec.form, lo, hi, grid.final_time, grid.seed);
    let certified = min_norm >= -CERTIFY_TOL && min_margin.map_or(true, |m| m >= -CERTIFY_TOL);
    ValidationReport {
        kind: spec.form.label().to_string(),
        constraints: spec.constraints.clone(),
        min_interior_residual: min_norm,
        min_interior_residual_raw: min_raw,
        min_boundary_margin: min_margin,
        worst_point: worst,
        derivative_check,
        certified,
    }
}

/// Compares the closed-form derivatives with central differences at 16
/// random points of the window; returns the largest relative gap.
pub fn finite_difference_check(form: &SuperForm, lo: f64, hi: f64, final_time: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..16 {
        let x = rng.gen_range(lo..=hi);
        let t = rng.gen_range(0.0..=final_time);
        let [v, vt, vx, vxx] = form.derivatives(x, t);
        let h = 1e-4;
        let f = |x: f64, t: f64| form.evaluate(x, t);
        let fd_t = (f(x, t + h) - f(x, t - h)) / (2.0 * h);
        let fd_x = (f(x + h, t) - f(x - h, t)) / (2.0 * h);
        let fd_xx = (f(x + h, t) - 2.0 * v + f(x - h, t)) / (h * h);
        let scale = v.abs() + vt.abs() + vx.abs() + vxx.abs();
        if scale == 0.0 {
            continue;
        }
        for (exact, approx) in [(vt, fd_t), (vx, fd_x), (vxx, fd_xx)] {
            worst = worst.max((exact - approx).abs() / scale);
        }
    }
    worst
}
