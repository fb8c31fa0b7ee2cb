//! Parameters, the stationary vector field and equilibrium classification.
//!
//! Stationary solutions of `u_t = u_xx - u u_x + u|u|^{p-1} - lambda u`
//! satisfy the planar system
//!
//! ```text
//! u' = v
//! v' = u v - u |u|^{p-1} + lambda u
//! ```
//!
//! which for `p = 1` collapses to `v' = u (v + lambda - 1)`.
//! Powers of negative numbers are always taken as `|u|^(p-1)`, and the sign
//! is carried by the explicit factor `u`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Absolute tolerance for deciding that the node discriminant vanishes.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// The exponent `p` and the linear reaction coefficient `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    p: f64,
    lambda: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    p: f64,
    lambda: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.p, raw.lambda)
    }
}

impl From<ModelParams> for RawParams {
    fn from(m: ModelParams) -> Self {
        RawParams {
            p: m.p,
            lambda: m.lambda,
        }
    }
}

impl ModelParams {
    /// Validated constructor: `p >= 1` and both values finite.
    pub fn new(p: f64, lambda: f64) -> Result<Self> {
        ensure_finite("p", p)?;
        ensure_finite("lambda", lambda)?;
        if p < 1.0 {
            return Err(Error::Domain(format!("exponent p must be >= 1, got {p}")));
        }
        Ok(Self { p, lambda })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// True for the degenerate linear-growth case `p = 1`.
    pub fn is_linear_case(&self) -> bool {
        self.p == 1.0
    }

    /// Abscissa `lambda^(1/(p-1))` of the nontrivial equilibria, when they exist.
    pub fn equilibrium_abscissa(&self) -> Option<f64> {
        (self.p > 1.0 && self.lambda > 0.0).then(|| self.lambda.powf(1.0 / (self.p - 1.0)))
    }

    /// Normalized discriminant `1 - 4(p-1) lambda^((p-3)/(p-1))` of the
    /// linearization at the nontrivial equilibria (negative means spiral).
    ///
    /// At `p = 3` the power is taken as exactly one.
    pub fn discriminant(&self) -> Option<f64> {
        if !(self.p > 1.0 && self.lambda > 0.0) {
            return None;
        }
        let power = if self.p == 3.0 {
            1.0
        } else {
            self.lambda.powf((self.p - 3.0) / (self.p - 1.0))
        };
        Some(1.0 - 4.0 * (self.p - 1.0) * power)
    }

    /// Returns a contract error unless `p > 1`.
    pub fn require_superlinear(&self, op: &str) -> Result<()> {
        if self.p > 1.0 {
            Ok(())
        } else {
            Err(Error::Contract(format!("{op} requires p > 1 (got p = {})", self.p)))
        }
    }

    /// Returns a precondition error unless `1 < p < 3`.
    pub fn require_subcubic(&self, op: &str) -> Result<()> {
        if self.p > 1.0 && self.p < 3.0 {
            Ok(())
        } else {
            Err(Error::Precondition(format!(
                "{op} requires 1 < p < 3 (got p = {})",
                self.p
            )))
        }
    }
}

/// A state `(u, u')` of the stationary system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub u: f64,
    pub v: f64,
}

impl PhasePoint {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    /// The point reflected through the ordinate axis.
    pub fn mirrored(self) -> Self {
        Self::new(-self.u, self.v)
    }

    pub fn is_finite(self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn l1_norm(self) -> f64 {
        self.u.abs() + self.v.abs()
    }

    pub fn distance(self, other: PhasePoint) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// `u |u|^(p-1)`, computed without raising a negative base to a real power.
pub fn signed_power(u: f64, p: f64) -> f64 {
    u * u.abs().powf(p - 1.0)
}

/// Vector field valid for every `p >= 1` (the `p = 1` formula is the same
/// expression with `|u|^0 = 1`). Inputs are not checked.
pub(crate) fn field_unchecked(u: f64, v: f64, m: &ModelParams) -> (f64, f64) {
    (v, u * v - signed_power(u, m.p) + m.lambda * u)
}

/// The stationary vector field for `p > 1`.
pub fn vector_field(s: PhasePoint, m: &ModelParams) -> Result<(f64, f64)> {
    m.require_superlinear("vector_field (use vector_field_p1 for p = 1)")?;
    ensure_finite("u", s.u)?;
    ensure_finite("v", s.v)?;
    Ok(field_unchecked(s.u, s.v, m))
}

/// The stationary vector field of the `p = 1` system, `(v, u (v + lambda - 1))`.
pub fn vector_field_p1(s: PhasePoint, m: &ModelParams) -> Result<(f64, f64)> {
    if !m.is_linear_case() {
        return Err(Error::Contract(format!(
            "vector_field_p1 requires p = 1 (got p = {})",
            m.p
        )));
    }
    ensure_finite("u", s.u)?;
    ensure_finite("v", s.v)?;
    Ok((s.v, s.u * (s.v + m.lambda - 1.0)))
}

/// Value of `dv/du` along an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Slope {
    Finite(f64),
    PositiveInfinite,
    NegativeInfinite,
    /// `0/0` at an equilibrium.
    Indeterminate,
}

/// `dv/du = (u/v)(v - |u|^(p-1) + lambda)`.
pub fn slope(s: PhasePoint, m: &ModelParams) -> Result<Slope> {
    m.require_superlinear("slope")?;
    ensure_finite("u", s.u)?;
    ensure_finite("v", s.v)?;
    if s.v != 0.0 {
        return Ok(Slope::Finite(s.u / s.v * (s.v - nullcline_unchecked(s.u, m))));
    }
    // On the u-axis the numerator is u (lambda - |u|^(p-1)).
    let numerator = s.u * (m.lambda - s.u.abs().powf(m.p - 1.0));
    let scale = 1.0 + m.lambda.abs();
    if s.u == 0.0 || numerator.abs() <= 1e-14 * scale * s.u.abs() {
        Ok(Slope::Indeterminate)
    } else if numerator > 0.0 {
        Ok(Slope::PositiveInfinite)
    } else {
        Ok(Slope::NegativeInfinite)
    }
}

/// Second derivative `d^2 v / du^2` along an orbit, `None` on the u-axis.
///
/// Uses `d^2v/du^2 = 1 + [(lambda - p|u|^(p-1)) v - u (lambda - |u|^(p-1)) dv/du] / v^2`,
/// which also holds for `p = 1`.
pub fn curvature(s: PhasePoint, m: &ModelParams) -> Result<Option<f64>> {
    ensure_finite("u", s.u)?;
    ensure_finite("v", s.v)?;
    if s.v == 0.0 {
        return Ok(None);
    }
    let power = s.u.abs().powf(m.p - 1.0);
    let dvdu = s.u + s.u * (m.lambda - power) / s.v;
    let bracket = (m.lambda - m.p * power) * s.v - s.u * (m.lambda - power) * dvdu;
    Ok(Some(1.0 + bracket / (s.v * s.v)))
}

pub(crate) fn nullcline_unchecked(u: f64, m: &ModelParams) -> f64 {
    u.abs().powf(m.p - 1.0) - m.lambda
}

/// The curve `v = |u|^(p-1) - lambda` on which `dv/du` vanishes.
pub fn nullcline(u: f64, m: &ModelParams) -> Result<f64> {
    m.require_superlinear("nullcline")?;
    ensure_finite("u", u)?;
    Ok(nullcline_unchecked(u, m))
}

/// Jacobian of the vector field at `(u, v)` for any `p >= 1`.
///
/// The `u`-derivative of `u|u|^(p-1)` is `p|u|^(p-1)`, which vanishes at the
/// origin for `p > 1`.
pub fn jacobian(s: PhasePoint, m: &ModelParams) -> [[f64; 2]; 2] {
    let power = if m.p > 1.0 && s.u == 0.0 {
        0.0
    } else {
        m.p * s.u.abs().powf(m.p - 1.0)
    };
    [[0.0, 1.0], [s.v - power + m.lambda, s.u]]
}

/// Qualitative type of an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquilibriumKind {
    Saddle,
    VortexRepulsive,
    VortexAttractive,
    NodeUnstable,
    NodeStable,
    DegenerateNode,
    Center,
    ContinuumMember,
}

impl EquilibriumKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Saddle => "saddle",
            Self::VortexRepulsive => "vortex-repulsive",
            Self::VortexAttractive => "vortex-attractive",
            Self::NodeUnstable => "node-unstable",
            Self::NodeStable => "node-stable",
            Self::DegenerateNode => "degenerate-node",
            Self::Center => "center",
            Self::ContinuumMember => "continuum-member",
        }
    }
}

/// One equilibrium with its linearization data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumInfo {
    pub location: PhasePoint,
    pub kind: EquilibriumKind,
    /// Normalized discriminant, for the nontrivial equilibria only.
    pub discriminant: Option<f64>,
    pub eigenvalues: [Complex64; 2],
    /// Set when the degenerate-node verdict relied on the tolerance.
    pub within_tolerance: bool,
}

/// Eigenvalues of `[[0, 1], [c, d]]`, i.e. roots of `z^2 - d z - c`.
fn companion_eigenvalues(c: f64, d: f64) -> [Complex64; 2] {
    let disc = d * d + 4.0 * c;
    if disc >= 0.0 {
        // Larger-magnitude root first, the other from the product `-c`, so
        // that neither suffers cancellation.
        let big = 0.5 * (d + d.signum() * disc.sqrt());
        let small = if big == 0.0 { 0.0 } else { -c / big };
        let (hi, lo) = if big >= small { (big, small) } else { (small, big) };
        [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
    } else {
        let root = (-disc).sqrt();
        [
            Complex64::new(0.5 * d, 0.5 * root),
            Complex64::new(0.5 * d, -0.5 * root),
        ]
    }
}

/// Lists the equilibria of the stationary system with their types.
///
/// For `p = 1, lambda = 1` the whole u-axis consists of equilibria; this is
/// reported as a single `ContinuumMember` entry located at the origin.
pub fn classify_equilibria(m: &ModelParams) -> Vec<EquilibriumInfo> {
    let origin = PhasePoint::new(0.0, 0.0);
    if m.is_linear_case() {
        let c = m.lambda - 1.0;
        let kind = if c == 0.0 {
            EquilibriumKind::ContinuumMember
        } else if c < 0.0 {
            EquilibriumKind::Center
        } else {
            EquilibriumKind::Saddle
        };
        return vec![EquilibriumInfo {
            location: origin,
            kind,
            discriminant: None,
            eigenvalues: companion_eigenvalues(c, 0.0),
            within_tolerance: false,
        }];
    }
    if m.lambda <= 0.0 {
        return vec![EquilibriumInfo {
            location: origin,
            kind: EquilibriumKind::Center,
            discriminant: None,
            eigenvalues: companion_eigenvalues(m.lambda, 0.0),
            within_tolerance: false,
        }];
    }
    let root = m.lambda.powf(1.0 / (m.p - 1.0));
    let d = m.discriminant().expect("discriminant exists for p > 1 and lambda > 0");
    let degenerate = d.abs() <= DEGENERACY_TOL;
    let lateral = |u: f64| {
        let repelling = u > 0.0;
        let kind = if degenerate {
            EquilibriumKind::DegenerateNode
        } else if d < 0.0 {
            if repelling {
                EquilibriumKind::VortexRepulsive
            } else {
                EquilibriumKind::VortexAttractive
            }
        } else if repelling {
            EquilibriumKind::NodeUnstable
        } else {
            EquilibriumKind::NodeStable
        };
        EquilibriumInfo {
            location: PhasePoint::new(u, 0.0),
            kind,
            discriminant: Some(d),
            eigenvalues: companion_eigenvalues(-(m.p - 1.0) * m.lambda, u),
            within_tolerance: degenerate,
        }
    };
    vec![
        EquilibriumInfo {
            location: origin,
            kind: EquilibriumKind::Saddle,
            discriminant: None,
            eigenvalues: companion_eigenvalues(m.lambda, 0.0),
            within_tolerance: false,
        },
        lateral(root),
        lateral(-root),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(p: f64, lambda: f64) -> ModelParams {
        ModelParams::new(p, lambda).unwrap()
    }

    #[test]
    fn rejects_subunit_exponent_and_nonfinite_values() {
        assert!(matches!(ModelParams::new(0.5, 1.0), Err(Error::Domain(_))));
        assert!(matches!(ModelParams::new(f64::NAN, 1.0), Err(Error::Domain(_))));
        assert!(matches!(ModelParams::new(2.0, f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn params_round_trip_through_json_and_validate() {
        let m = params(2.5, -0.75);
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<ModelParams>(&text).unwrap(), m);
        assert!(serde_json::from_str::<ModelParams>(r#"{"p":0.2,"lambda":1}"#).is_err());
    }

    #[test]
    fn vector_field_examples() {
        let any = params(2.7, -1.3);
        assert_eq!(vector_field(PhasePoint::new(0.0, 5.0), &any).unwrap(), (5.0, 0.0));
        assert_eq!(
            vector_field(PhasePoint::new(1.0, 0.0), &params(3.0, 1.0)).unwrap(),
            (0.0, 0.0)
        );
        assert_eq!(
            vector_field(PhasePoint::new(2.0, 1.0), &params(2.0, 0.0)).unwrap(),
            (1.0, -2.0)
        );
        assert!(matches!(
            vector_field(PhasePoint::new(f64::NAN, 0.0), &any),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            vector_field(PhasePoint::new(1.0, 0.0), &params(1.0, 0.0)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn negative_abscissa_uses_absolute_power() {
        let m = params(2.5, 0.0);
        let (_, dv) = vector_field(PhasePoint::new(-4.0, 0.0), &m).unwrap();
        // -u|u|^{p-1} at u=-4 is 4 * 4^{1.5} = 32.
        assert!((dv - 32.0).abs() < 1e-12);
    }

    #[test]
    fn linear_case_field_examples() {
        let m1 = params(1.0, 1.0);
        assert_eq!(vector_field_p1(PhasePoint::new(3.0, 0.0), &m1).unwrap(), (0.0, 0.0));
        let m0 = params(1.0, 0.0);
        assert_eq!(vector_field_p1(PhasePoint::new(1.0, 1.0), &m0).unwrap(), (1.0, 0.0));
        assert!(matches!(
            vector_field_p1(PhasePoint::new(1.0, 1.0), &params(2.0, 0.0)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn linear_case_explicit_line_is_invariant() {
        // Along u = (1 - lambda) x, v = 1 - lambda the field is (1 - lambda, 0),
        // which is the derivative of the parametrization.
        for &lambda in &[-2.0, 0.0, 0.5, 3.0] {
            let m = params(1.0, lambda);
            for i in -10..=10 {
                let x = 0.37 * i as f64;
                let s = PhasePoint::new((1.0 - lambda) * x, 1.0 - lambda);
                let (du, dv) = vector_field_p1(s, &m).unwrap();
                assert!((du - (1.0 - lambda)).abs() < 1e-14);
                assert_eq!(dv, 0.0);
            }
        }
    }

    #[test]
    fn slope_examples() {
        let m = params(2.0, 0.0);
        assert_eq!(slope(PhasePoint::new(1.0, 1.0), &m).unwrap(), Slope::Finite(0.0));
        assert_eq!(slope(PhasePoint::new(0.0, 3.0), &m).unwrap(), Slope::Finite(0.0));
        let m = params(3.0, 2.0);
        let u = 1.3;
        let on_nullcline = PhasePoint::new(u, nullcline(u, &m).unwrap());
        assert_eq!(slope(on_nullcline, &m).unwrap(), Slope::Finite(0.0));
        // Between the origin and the equilibrium the u-axis is crossed vertically upward.
        assert_eq!(slope(PhasePoint::new(0.5, 0.0), &m).unwrap(), Slope::PositiveInfinite);
        assert_eq!(slope(PhasePoint::new(3.0, 0.0), &m).unwrap(), Slope::NegativeInfinite);
        let root = m.equilibrium_abscissa().unwrap();
        assert_eq!(slope(PhasePoint::new(root, 0.0), &m).unwrap(), Slope::Indeterminate);
        assert_eq!(slope(PhasePoint::new(0.0, 0.0), &m).unwrap(), Slope::Indeterminate);
    }

    #[test]
    fn nullcline_examples() {
        assert_eq!(nullcline(0.0, &params(2.0, 1.0)).unwrap(), -1.0);
        assert_eq!(nullcline(2.0, &params(3.0, 0.0)).unwrap(), 4.0);
        let m = params(3.7, 2.2);
        let root = m.equilibrium_abscissa().unwrap();
        assert!(nullcline(root, &m).unwrap().abs() < 1e-14);
    }

    #[test]
    fn classification_examples() {
        let eq = classify_equilibria(&params(3.0, 1.0));
        let locations: Vec<f64> = eq.iter().map(|e| e.location.u).collect();
        assert_eq!(locations, vec![0.0, 1.0, -1.0]);
        assert_eq!(eq[0].kind, EquilibriumKind::Saddle);
        assert_eq!(eq[1].kind, EquilibriumKind::VortexRepulsive);
        assert_eq!(eq[2].kind, EquilibriumKind::VortexAttractive);
        assert_eq!(eq[1].discriminant, Some(-7.0));

        let eq = classify_equilibria(&params(2.0, -0.5));
        assert_eq!(eq.len(), 1);
        assert_eq!(eq[0].kind, EquilibriumKind::Center);
        assert_eq!(eq[0].location, PhasePoint::new(0.0, 0.0));

        let eq = classify_equilibria(&params(1.0, 1.0));
        assert_eq!(eq.len(), 1);
        assert_eq!(eq[0].kind, EquilibriumKind::ContinuumMember);

        let eq = classify_equilibria(&params(1.0, 0.5));
        assert_eq!(eq.len(), 1);
        assert_eq!(eq[0].kind, EquilibriumKind::Center);
    }

    #[test]
    fn nodes_and_degenerate_nodes() {
        // p = 2: D = 1 - 4/lambda, zero at lambda = 4 and positive beyond.
        let eq = classify_equilibria(&params(2.0, 4.0));
        assert_eq!(eq[1].kind, EquilibriumKind::DegenerateNode);
        assert!(eq[1].within_tolerance);
        let eq = classify_equilibria(&params(2.0, 5.0));
        assert_eq!(eq[1].kind, EquilibriumKind::NodeUnstable);
        assert_eq!(eq[2].kind, EquilibriumKind::NodeStable);
        let d = eq[1].discriminant.unwrap();
        assert!((d - 0.2).abs() < 1e-15);
    }

    #[test]
    fn small_lambda_with_p2_gives_vortices() {
        let m = params(2.0, 0.1);
        assert!((m.discriminant().unwrap() + 39.0).abs() < 1e-12);
        assert_eq!(classify_equilibria(&m)[1].kind, EquilibriumKind::VortexRepulsive);
    }

    #[test]
    fn curvature_matches_difference_of_slopes() {
        let m = params(2.6, 0.8);
        let s = PhasePoint::new(0.9, 1.7);
        let dvdu = |u: f64, v: f64| u / v * (v - nullcline_unchecked(u, &m));
        // Move along the orbit: dv = slope * du.
        let h = 1e-5;
        let k0 = dvdu(s.u, s.v);
        let ahead = dvdu(s.u + h, s.v + h * k0);
        let behind = dvdu(s.u - h, s.v - h * k0);
        let fd = (ahead - behind) / (2.0 * h);
        let exact = curvature(s, &m).unwrap().unwrap();
        assert!((fd - exact).abs() < 1e-6 * exact.abs().max(1.0));
        assert_eq!(curvature(PhasePoint::new(1.0, 0.0), &m).unwrap(), None);
    }

    proptest! {
        #[test]
        fn equilibria_annihilate_the_field(p in 1.0001f64..6.0, lambda in -4.0f64..4.0) {
            let m = params(p, lambda);
            for e in classify_equilibria(&m) {
                let (du, dv) = field_unchecked(e.location.u, e.location.v, &m);
                let scale = 1.0 + e.location.u.abs() * (1.0 + lambda.abs());
                prop_assert!(du.abs() <= 1e-14 * scale);
                prop_assert!(dv.abs() <= 1e-13 * scale);
            }
        }

        #[test]
        fn slope_agrees_with_field_ratio(
            p in 1.0001f64..6.0,
            lambda in -4.0f64..4.0,
            u in -3.0f64..3.0,
            v in prop_oneof![-3.0f64..-1e-3, 1e-3f64..3.0],
        ) {
            let m = params(p, lambda);
            let (du, dv) = vector_field(PhasePoint::new(u, v), &m).unwrap();
            match slope(PhasePoint::new(u, v), &m).unwrap() {
                Slope::Finite(k) => {
                    let ratio = dv / du;
                    prop_assert!((k - ratio).abs() <= 1e-10 * (1.0 + ratio.abs()));
                }
                other => prop_assert!(false, "unexpected slope {:?}", other),
            }
        }

        #[test]
        fn eigenvalues_solve_the_characteristic_polynomial(
            p in 1.0f64..6.0,
            lambda in -4.0f64..4.0,
        ) {
            let m = params(p, lambda);
            for e in classify_equilibria(&m) {
                let j = jacobian(e.location, &m);
                let trace = j[0][0] + j[1][1];
                let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
                for z in e.eigenvalues {
                    let residual = z * z - z * trace + det;
                    let terms = z.norm_sqr() + z.norm() * trace.abs() + det.abs();
                    prop_assert!(residual.norm() <= 1e-12 * (1.0 + terms));
                }
            }
        }
    }
}
