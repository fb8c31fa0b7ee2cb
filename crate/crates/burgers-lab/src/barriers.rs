//! Closed-form boundedness certificates for orbits of the stationary system.
//!
//! Four barrier constructions are implemented:
//!
//! * [`certify_bounded_pge3`]: `lambda > 0, p >= 3`, orbit from `(0, v0)`
//!   stays under the parabola `v = (1 + lambda/v0) u^2 / 2 + v0`;
//! * [`certify_bounded_lneg`]: `lambda <= 0`, orbit from `(0, v0)` stays under
//!   `v = u^2/2 + v0`;
//! * [`certify_unbounded_axis_start`]: `1 < p < 3`, orbit from `(0, v0)` stays
//!   above `v = 2 u^(p-1) + 2 max(-lambda, 0)`;
//! * [`certify_unbounded_u_axis_start`]: `1 < p < 3`, orbit from `(u0, 0)`
//!   stays above `v = beta u^(p-1) - lambda`.
//!
//! [`confirm`] integrates the certified orbit and checks the verdict.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::flow::{
    integrate, BarrierCurve, Crossing, EventKind, EventSpec, EventSurface, IntegrationOptions, Terminal, Trajectory,
};
use crate::model::{ModelParams, PhasePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Bounded,
    Unbounded,
    Undetermined,
}

/// Which barrier construction produced a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Lemma {
    /// Parabolic upper barrier, `lambda > 0`, `p >= 3`.
    BoundedPge3,
    /// Parabolic upper barrier, `lambda <= 0`.
    BoundedLneg,
    /// Power-curve lower barrier for starts on the v-axis.
    UnboundedAxisStart,
    /// Power-curve lower barrier for starts on the u-axis.
    UnboundedUAxisStart,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BarrierKind {
    /// `v = a u^2 + c`, coefficients `[a, c]`.
    Parabola,
    /// `v = a |u|^e + c`, coefficients `[a, e, c]`.
    PowerCurve,
}

/// A barrier curve in serializable form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Barrier {
    pub kind: BarrierKind,
    pub coefficients: Vec<f64>,
}

impl Barrier {
    fn parabola(a: f64, c: f64) -> Self {
        Self {
            kind: BarrierKind::Parabola,
            coefficients: vec![a, c],
        }
    }

    fn power(a: f64, e: f64, c: f64) -> Self {
        Self {
            kind: BarrierKind::PowerCurve,
            coefficients: vec![a, e, c],
        }
    }

    pub fn curve(&self) -> BarrierCurve {
        let c = &self.coefficients;
        match self.kind {
            BarrierKind::Parabola => BarrierCurve {
                coefficient: c[0],
                exponent: 2.0,
                offset: c[1],
            },
            BarrierKind::PowerCurve => BarrierCurve {
                coefficient: c[0],
                exponent: c[1],
                offset: c[2],
            },
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        self.curve().eval(u)
    }
}

/// Outcome of a barrier construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub lemma: Lemma,
    pub barrier: Barrier,
    /// The closed-form threshold the hypothesis compares against.
    pub threshold: f64,
    /// Start point of the certified orbit.
    pub start: PhasePoint,
    /// Numerical extension of boundedness to starts the closed form leaves
    /// open; `None` until [`bounded_by_uniqueness`] has been run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounded_by_uniqueness: Option<bool>,
}

/// Certificate for `lambda > 0`, `p >= 3`, start `(0, v0)`.
///
/// For `p > 3` every start is bounded. For `p = 3` the parabola coefficient
/// `(1 + lambda/v0)/2` must be below one, i.e. `v0 > lambda`; the threshold
/// field records `lambda` in that case and `0` for `p > 3`.
pub fn certify_bounded_pge3(v0: f64, m: &ModelParams) -> Result<Certificate> {
    ensure_finite("v0", v0)?;
    let (p, lambda) = (m.p(), m.lambda());
    if !(lambda > 0.0 && p >= 3.0 && v0 > 0.0) {
        return Err(Error::Precondition(format!(
            "parabolic barrier for p >= 3 needs lambda > 0, p >= 3, v0 > 0 (got p = {p}, lambda = {lambda}, v0 = {v0})"
        )));
    }
    let coefficient = 0.5 * (1.0 + lambda / v0);
    let (verdict, threshold) = if p > 3.0 {
        (Verdict::Bounded, 0.0)
    } else if coefficient < 1.0 {
        (Verdict::Bounded, lambda)
    } else {
        (Verdict::Undetermined, lambda)
    };
    Ok(Certificate {
        verdict,
        lemma: Lemma::BoundedPge3,
        barrier: Barrier::parabola(coefficient, v0),
        threshold,
        start: PhasePoint::new(0.0, v0),
        bounded_by_uniqueness: None,
    })
}

/// Largest `v0 + lambda` for which the barrier argument works when
/// `lambda <= 0` and `p < 3`: the maximum of `u^(p-1) - u^2/2` over `u > 0`.
pub fn bounded_lneg_margin(p: f64) -> f64 {
    (p - 1.0).powf((p - 1.0) / (3.0 - p)) - 0.5 * (p - 1.0).powf(2.0 / (3.0 - p))
}

/// Certificate for `lambda <= 0`, start `(0, v0)` with `v0 > -lambda`.
pub fn certify_bounded_lneg(v0: f64, m: &ModelParams) -> Result<Certificate> {
    ensure_finite("v0", v0)?;
    let (p, lambda) = (m.p(), m.lambda());
    if lambda > 0.0 {
        return Err(Error::Precondition(format!(
            "parabolic barrier for lambda <= 0 called with lambda = {lambda}"
        )));
    }
    if v0 <= -lambda {
        return Err(Error::Precondition(format!(
            "start (0, {v0}) lies below the nullcline value {} and never enters the region above it",
            -lambda
        )));
    }
    let (verdict, threshold) = if p >= 3.0 {
        (Verdict::Bounded, -lambda)
    } else {
        let threshold = -lambda + bounded_lneg_margin(p);
        let verdict = if v0 <= threshold {
            Verdict::Bounded
        } else {
            Verdict::Undetermined
        };
        (verdict, threshold)
    };
    Ok(Certificate {
        verdict,
        lemma: Lemma::BoundedLneg,
        barrier: Barrier::parabola(0.5, v0),
        threshold,
        start: PhasePoint::new(0.0, v0),
        bounded_by_uniqueness: None,
    })
}

/// Threshold on `v0` above which an orbit from `(0, v0)` is unbounded.
pub fn axis_start_threshold(m: &ModelParams) -> Result<f64> {
    m.require_subcubic("axis-start unboundedness threshold")?;
    let p = m.p();
    Ok(2.0 * (-m.lambda()).max(0.0) + 2.0 * 8f64.powf((p - 1.0) / (3.0 - p)))
}

/// Certificate for `1 < p < 3`, start `(0, v0)`.
pub fn certify_unbounded_axis_start(v0: f64, m: &ModelParams) -> Result<Certificate> {
    ensure_finite("v0", v0)?;
    let threshold = axis_start_threshold(m)?;
    if v0 <= 0.0 {
        return Err(Error::Precondition(format!("v0 must be positive, got {v0}")));
    }
    let verdict = if v0 > threshold {
        Verdict::Unbounded
    } else {
        Verdict::Undetermined
    };
    Ok(Certificate {
        verdict,
        lemma: Lemma::UnboundedAxisStart,
        barrier: Barrier::power(2.0, m.p() - 1.0, 2.0 * (-m.lambda()).max(0.0)),
        threshold,
        start: PhasePoint::new(0.0, v0),
        bounded_by_uniqueness: None,
    })
}

/// Start abscissa `(2 beta^2 / (beta - 1))^(1/(3-p))` and the `lambda`
/// threshold for the u-axis construction.
pub fn u_axis_start_data(beta: f64, m: &ModelParams) -> Result<(f64, f64)> {
    ensure_finite("beta", beta)?;
    m.require_subcubic("u-axis unboundedness construction")?;
    if beta <= 1.0 {
        return Err(Error::Precondition(format!("beta must exceed 1, got {beta}")));
    }
    let p = m.p();
    let u0 = (2.0 * beta * beta / (beta - 1.0)).powf(1.0 / (3.0 - p));
    let lambda_threshold = ((beta - 1.0) / (2.0 * beta) * u0).max(beta * u0.powf(p - 1.0));
    Ok((u0, lambda_threshold))
}

/// Certificate for `1 < p < 3`, `beta > 1`, start `(u0, 0)`.
pub fn certify_unbounded_u_axis_start(beta: f64, m: &ModelParams) -> Result<Certificate> {
    let (u0, threshold) = u_axis_start_data(beta, m)?;
    let verdict = if m.lambda() > threshold {
        Verdict::Unbounded
    } else {
        Verdict::Undetermined
    };
    Ok(Certificate {
        verdict,
        lemma: Lemma::UnboundedUAxisStart,
        barrier: Barrier::power(beta, m.p() - 1.0, -m.lambda()),
        threshold,
        start: PhasePoint::new(u0, 0.0),
        bounded_by_uniqueness: None,
    })
}

/// Numerical check of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfirmationReport {
    pub certificate: Certificate,
    /// True when the integrated orbit behaves as certified.
    pub consistent: bool,
    pub terminal: Terminal,
    /// Parameter value of the nullcline crossing, if one occurred.
    pub nullcline_crossing: Option<f64>,
    /// Smallest signed gap to the barrier over the samples (orbit minus
    /// barrier for lower barriers, barrier minus orbit for upper ones).
    pub min_barrier_gap: f64,
    pub detail: String,
}

/// Integrates the certified orbit and checks it against the verdict.
///
/// A bounded verdict requires a nullcline crossing before the escape cap; an
/// unbounded verdict requires escape with every sample above the barrier.
pub fn confirm(c: &Certificate, m: &ModelParams, opts: &IntegrationOptions) -> Result<ConfirmationReport> {
    let curve = c.barrier.curve();
    let trajectory = match c.verdict {
        Verdict::Undetermined => return Err(Error::Precondition("cannot confirm an undetermined certificate".into())),
        Verdict::Bounded => {
            let events = vec![EventSpec::stop(EventSurface::Nullcline, Crossing::Falling)];
            integrate(c.start, m, &opts.clone().with_events(events))?
        }
        Verdict::Unbounded => {
            let events = vec![
                EventSpec::record(EventSurface::Nullcline, Crossing::Falling),
                EventSpec::record(EventSurface::Barrier { curve }, Crossing::Falling),
            ];
            integrate(c.start, m, &opts.clone().with_events(events))?
        }
    };
    Ok(assess(c, trajectory))
}

fn assess(c: &Certificate, t: Trajectory) -> ConfirmationReport {
    let nullcline_crossing = t.first_event(EventKind::Nullcline).map(|e| e.s);
    let curve = c.barrier.curve();
    let (consistent, min_gap, detail) = match c.verdict {
        Verdict::Bounded => {
            let gap = t
                .samples
                .iter()
                .filter(|s| s.point.u >= 0.0)
                .map(|s| curve.eval(s.point.u) - s.point.v)
                .fold(f64::INFINITY, f64::min);
            let ok = t.terminal == Terminal::EventStop && nullcline_crossing.is_some();
            let detail = if ok {
                format!("nullcline reached at s = {}", nullcline_crossing.unwrap_or(f64::NAN))
            } else {
                format!("no nullcline crossing; integration ended with {:?}", t.terminal)
            };
            (ok, gap, detail)
        }
        _ => {
            let gap = t
                .samples
                .iter()
                .map(|s| s.point.v - curve.eval(s.point.u))
                .fold(f64::INFINITY, f64::min);
            let exits = t.first_event(EventKind::BarrierExit);
            let escaped = t.terminal == Terminal::Escape;
            let ok = escaped && exits.is_none() && nullcline_crossing.is_none();
            let detail = if ok {
                format!(
                    "escaped at |u|+|v| = {:.3e} above the barrier",
                    t.last().point.l1_norm()
                )
            } else if let Some(e) = exits {
                format!("orbit dropped below the barrier at s = {}", e.s)
            } else if nullcline_crossing.is_some() {
                "orbit crossed the nullcline".to_string()
            } else {
                format!("integration ended with {:?} before escaping", t.terminal)
            };
            (ok, gap, detail)
        }
    };
    ConfirmationReport {
        certificate: c.clone(),
        consistent,
        terminal: t.terminal,
        nullcline_crossing,
        min_barrier_gap: min_gap,
        detail,
    }
}

/// Witness-based extension of a `p = 3` certificate left undetermined by the
/// parabola: the orbit is integrated and the flag is set when it reaches the
/// nullcline before escaping.
pub fn bounded_by_uniqueness(c: &Certificate, m: &ModelParams, opts: &IntegrationOptions) -> Result<Certificate> {
    if c.lemma != Lemma::BoundedPge3 || c.verdict != Verdict::Undetermined {
        return Err(Error::Contract(
            "the uniqueness extension applies to undetermined p >= 3 certificates only".into(),
        ));
    }
    let events = vec![EventSpec::stop(EventSurface::Nullcline, Crossing::Falling)];
    let t = integrate(c.start, m, &opts.clone().with_events(events))?;
    let witnessed = t.terminal == Terminal::EventStop;
    Ok(Certificate {
        bounded_by_uniqueness: Some(witnessed),
        ..c.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(p: f64, lambda: f64) -> ModelParams {
        ModelParams::new(p, lambda).unwrap()
    }

    #[test]
    fn bounded_pge3_examples() {
        let c = certify_bounded_pge3(0.1, &params(4.0, 1.0)).unwrap();
        assert_eq!(c.verdict, Verdict::Bounded);
        let c = certify_bounded_pge3(2.0, &params(3.0, 1.0)).unwrap();
        assert_eq!(c.verdict, Verdict::Bounded);
        assert_eq!(c.barrier.coefficients[0], 0.75);
        let c = certify_bounded_pge3(0.5, &params(3.0, 1.0)).unwrap();
        assert_eq!(c.verdict, Verdict::Undetermined);
        assert_eq!(c.barrier.coefficients[0], 1.5);
        assert!(matches!(
            certify_bounded_pge3(1.0, &params(2.5, 1.0)),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            certify_bounded_pge3(1.0, &params(3.5, -1.0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn bounded_lneg_examples() {
        let m = params(2.0, 0.0);
        let c = certify_bounded_lneg(0.4, &m).unwrap();
        assert_eq!(c.verdict, Verdict::Bounded);
        assert!((c.threshold - 0.5).abs() < 1e-15);
        assert_eq!(certify_bounded_lneg(1.0, &m).unwrap().verdict, Verdict::Undetermined);
        let c = certify_bounded_lneg(2.0, &params(3.5, -1.0)).unwrap();
        assert_eq!(c.verdict, Verdict::Bounded);
        assert!(matches!(
            certify_bounded_lneg(0.5, &params(2.0, -1.0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn bounded_lneg_margin_is_maximum_of_power_minus_parabola() {
        for &p in &[1.1, 1.5, 2.0, 2.5, 2.9] {
            // The maximizer (p-1)^(1/(3-p)) grows quickly as p approaches 3.
            let top = 3.0 * (p - 1.0_f64).powf(1.0 / (3.0 - p));
            let best = (1..200_000)
                .map(|i| i as f64 * top / 200_000.0)
                .map(|u: f64| u.powf(p - 1.0) - 0.5 * u * u)
                .fold(f64::NEG_INFINITY, f64::max);
            let exact = bounded_lneg_margin(p);
            assert!((best - exact).abs() < 1e-6 * exact.max(1.0), "p = {p}");
        }
    }

    #[test]
    fn axis_start_examples() {
        let m = params(2.0, 0.0);
        let c = certify_unbounded_axis_start(17.0, &m).unwrap();
        assert_eq!(c.verdict, Verdict::Unbounded);
        assert_eq!(c.threshold, 16.0);
        assert_eq!(
            certify_unbounded_axis_start(10.0, &m).unwrap().verdict,
            Verdict::Undetermined
        );
        let c = certify_unbounded_axis_start(23.0, &params(2.0, -3.0)).unwrap();
        assert_eq!(c.verdict, Verdict::Unbounded);
        assert_eq!(c.threshold, 22.0);
        assert!(matches!(
            certify_unbounded_axis_start(23.0, &params(3.0, 0.0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn u_axis_start_examples() {
        let (u0, thr) = u_axis_start_data(2.0, &params(2.0, 17.0)).unwrap();
        assert_eq!(u0, 8.0);
        assert_eq!(thr, 16.0);
        let c = certify_unbounded_u_axis_start(2.0, &params(2.0, 17.0)).unwrap();
        assert_eq!(c.verdict, Verdict::Unbounded);
        assert_eq!(c.start, PhasePoint::new(8.0, 0.0));
        // The barrier sits below the start point.
        assert!(c.barrier.eval(u0) < 0.0);
        assert_eq!(
            certify_unbounded_u_axis_start(2.0, &params(2.0, 10.0)).unwrap().verdict,
            Verdict::Undetermined
        );
        assert!(matches!(
            certify_unbounded_u_axis_start(1.0, &params(2.0, 17.0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn confirm_examples() {
        let opts = IntegrationOptions::default();
        let m = params(2.0, 0.0);
        let c = certify_unbounded_axis_start(17.0, &m).unwrap();
        let r = confirm(&c, &m, &opts).unwrap();
        assert!(r.consistent, "{}", r.detail);
        assert!(r.min_barrier_gap > 0.0);

        let m = params(4.0, 1.0);
        let c = certify_bounded_pge3(0.1, &m).unwrap();
        let r = confirm(&c, &m, &opts).unwrap();
        assert!(r.consistent, "{}", r.detail);
        assert!(r.nullcline_crossing.unwrap().is_finite());

        let m = params(2.0, 0.0);
        let c = certify_bounded_lneg(0.4, &m).unwrap();
        assert!(confirm(&c, &m, &opts).unwrap().consistent);

        let c = certify_bounded_lneg(1.0, &m).unwrap();
        assert!(matches!(confirm(&c, &m, &opts), Err(Error::Precondition(_))));
    }

    #[test]
    fn confirm_u_axis_start() {
        let m = params(2.0, 17.0);
        let c = certify_unbounded_u_axis_start(2.0, &m).unwrap();
        let r = confirm(&c, &m, &IntegrationOptions::default()).unwrap();
        assert!(r.consistent, "{}", r.detail);
    }

    #[test]
    fn uniqueness_extension_for_cubic_exponent() {
        let m = params(3.0, 1.0);
        let c = certify_bounded_pge3(0.5, &m).unwrap();
        let ext = bounded_by_uniqueness(&c, &m, &IntegrationOptions::default()).unwrap();
        assert_eq!(ext.bounded_by_uniqueness, Some(true));
        assert_eq!(ext.verdict, Verdict::Undetermined);
        let bounded = certify_bounded_pge3(2.0, &m).unwrap();
        assert!(bounded_by_uniqueness(&bounded, &m, &IntegrationOptions::default()).is_err());
    }

    #[test]
    fn certificate_json_shape() {
        let c = certify_unbounded_axis_start(17.0, &params(2.0, 0.0)).unwrap();
        let value = serde_json::to_value(&c).unwrap();
        assert_eq!(value["verdict"], "unbounded");
        assert_eq!(value["lemma"], "unbounded-axis-start");
        assert_eq!(value["barrier"]["kind"], "power-curve");
        assert_eq!(value["threshold"], 16.0);
        let back: Certificate = serde_json::from_value(value).unwrap();
        assert_eq!(back, c);
    }

    proptest! {
        #[test]
        fn axis_threshold_monotone_in_negative_lambda(
            p in 1.05f64..2.9,
            a in -5.0f64..5.0,
            b in -5.0f64..5.0,
        ) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let t_lo = axis_start_threshold(&params(p, lo)).unwrap();
            let t_hi = axis_start_threshold(&params(p, hi)).unwrap();
            // Larger -lambda never lowers the threshold.
            prop_assert!(t_lo >= t_hi);
            if lo >= 0.0 {
                prop_assert_eq!(t_lo, t_hi);
            }
        }

        #[test]
        fn certificates_never_overlap(
            p in 1.01f64..4.5,
            lambda in -3.0f64..3.0,
            v0 in 0.001f64..1e4,
        ) {
            let m = params(p, lambda);
            let bounded = [certify_bounded_pge3(v0, &m), certify_bounded_lneg(v0, &m)]
                .into_iter()
                .filter_map(|c| c.ok())
                .any(|c| c.verdict == Verdict::Bounded);
            let unbounded = certify_unbounded_axis_start(v0, &m)
                .map(|c| c.verdict == Verdict::Unbounded)
                .unwrap_or(false);
            prop_assert!(!(bounded && unbounded));
        }
    }
}
