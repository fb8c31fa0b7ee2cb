//! Parsers for the compact argument syntaxes of the command line.

use std::path::PathBuf;

use burgers_lab::config::InitialData;
use burgers_lab::parabolic::EndCondition;
use burgers_lab::stationary::BcKind;
use burgers_lab::supersolutions::SuperDomain;
use burgers_lab::sweep::MapLayer;
use serde::de::DeserializeOwned;

/// Parses a kebab-case enum name through its serde representation.
pub fn kebab<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unrecognised value `{s}`"))
}

fn numbers(s: &str, count: usize, what: &str) -> Result<Vec<f64>, String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{what}: `{v}`: {e}")))
        .collect::<Result<_, _>>()?;
    if values.len() != count {
        return Err(format!("{what} takes {count} comma-separated numbers, got `{s}`"));
    }
    Ok(values)
}

fn split(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((head, tail)) => (head, Some(tail)),
        None => (s, None),
    }
}

/// `dirichlet`, `neumann`, `robin:A`, `dynamical:SIGMA` or `flux:C2,C1`.
pub fn end_condition(s: &str) -> Result<EndCondition, String> {
    match split(s) {
        ("dirichlet", None) => Ok(EndCondition::Dirichlet),
        ("neumann", None) => Ok(EndCondition::Neumann),
        ("robin", Some(a)) => Ok(EndCondition::Robin {
            a: numbers(a, 1, "robin")?[0],
        }),
        ("dynamical", Some(sigma)) => Ok(EndCondition::Dynamical {
            sigma: numbers(sigma, 1, "dynamical")?[0],
        }),
        ("flux", Some(c)) => {
            let c = numbers(c, 2, "flux")?;
            Ok(EndCondition::NonlinearFlux { c2: c[0], c1: c[1] })
        }
        _ => Err(format!(
            "boundary condition `{s}` is not one of dirichlet, neumann, robin:A, dynamical:SIGMA, flux:C2,C1"
        )),
    }
}

/// `constant:V`, `gaussian:A,CENTER,WIDTH`, `expdecay:A,K` or `samples:PATH`.
pub fn initial_data(s: &str) -> Result<InitialData, String> {
    match split(s) {
        ("constant", Some(v)) => Ok(InitialData::Constant {
            value: numbers(v, 1, "constant")?[0],
        }),
        ("gaussian", Some(v)) => {
            let v = numbers(v, 3, "gaussian")?;
            Ok(InitialData::Gaussian {
                amplitude: v[0],
                center: v[1],
                width: v[2],
            })
        }
        ("expdecay", Some(v)) => {
            let v = numbers(v, 2, "expdecay")?;
            Ok(InitialData::ExpDecay {
                amplitude: v[0],
                rate: v[1],
            })
        }
        ("samples", Some(path)) => Ok(InitialData::Samples {
            path: PathBuf::from(path),
        }),
        _ => Err(format!(
            "initial data `{s}` is not one of constant:V, gaussian:A,C,W, expdecay:A,K, samples:PATH"
        )),
    }
}

/// `right`, `left`, `whole` or `interval:A,B`.
pub fn super_domain(s: &str) -> Result<SuperDomain, String> {
    match split(s) {
        ("right", None) => Ok(SuperDomain::RightHalfLine),
        ("left", None) => Ok(SuperDomain::LeftHalfLine),
        ("whole", None) => Ok(SuperDomain::WholeLine),
        ("interval", Some(v)) => {
            let v = numbers(v, 2, "interval")?;
            Ok(SuperDomain::Interval {
                left: v[0],
                right: v[1],
            })
        }
        _ => Err(format!("domain `{s}` is not one of right, left, whole, interval:A,B")),
    }
}

/// `equilibria`, `bounded-fraction` or a boundary-condition column name.
pub fn map_layer(s: &str) -> Result<MapLayer, String> {
    match s {
        "equilibria" => Ok(MapLayer::Equilibria),
        "bounded-fraction" => Ok(MapLayer::BoundedFraction),
        other => kebab::<BcKind>(other).map(MapLayer::Flag),
    }
}
