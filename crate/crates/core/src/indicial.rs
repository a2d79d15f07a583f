//! Frobenius exponents at the origin and which of them a boundary policy admits.
//!
//! Near the origin `u ~ r^s` with `s(s - 1) = l(l + 1) - 2 m v0`, so the two
//! branches are `s = 1/2 +- P` with `P = sqrt((l + 1/2)^2 - 2 m v0)`. A regular
//! origin is the special case `v0 = 0`, giving `l + 1` and `-l`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::IndicialError;
use crate::model::OriginClass;

/// What the solution is allowed to do at `r = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum BoundaryPolicy {
    /// `u(0) = 0`: only exponents `s > 0` survive.
    DirichletOrigin,
    /// Square integrability only (`s > -1/2`); when both branches survive the
    /// solution is `cos(theta) u_+ + sin(theta) u_-`, with `r_ref` fixing the
    /// relative scale of the branches.
    SquareIntegrableOnly { theta: f64, r_ref: f64 },
}

impl BoundaryPolicy {
    pub fn square_integrable(theta: f64, r_ref: f64) -> Result<Self, IndicialError> {
        let p = BoundaryPolicy::SquareIntegrableOnly { theta, r_ref };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), IndicialError> {
        if let BoundaryPolicy::SquareIntegrableOnly { theta, r_ref } = *self {
            if !(0.0..PI).contains(&theta) {
                return Err(IndicialError::InvalidPolicy(format!(
                    "theta = {theta} is outside [0, pi)"
                )));
            }
            if !(r_ref > 0.0 && r_ref.is_finite()) {
                return Err(IndicialError::InvalidPolicy(format!(
                    "r_ref = {r_ref} must be a positive length"
                )));
            }
        }
        Ok(())
    }

    /// Whether a branch `u ~ r^s` is allowed under this policy.
    pub fn admits(&self, s: f64) -> bool {
        match self {
            BoundaryPolicy::DirichletOrigin => vanishes_at_origin(s),
            BoundaryPolicy::SquareIntegrableOnly { .. } => square_integrable(s),
        }
    }
}

impl fmt::Display for BoundaryPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryPolicy::DirichletOrigin => f.write_str("dirichlet"),
            BoundaryPolicy::SquareIntegrableOnly { theta, r_ref } => {
                write!(f, "si:theta={theta},rref={r_ref}")
            }
        }
    }
}

impl FromStr for BoundaryPolicy {
    type Err = IndicialError;

    /// `dirichlet` or `si:theta=<f>,rref=<f>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "dirichlet" {
            return Ok(BoundaryPolicy::DirichletOrigin);
        }
        let bad = |why: &str| IndicialError::InvalidPolicy(format!("`{s}`: {why}"));
        let body = s
            .strip_prefix("si:")
            .ok_or_else(|| bad("expected `dirichlet` or `si:theta=<f>,rref=<f>`"))?;
        let (mut theta, mut r_ref) = (None, None);
        for item in body.split(',') {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| bad("expected key=value"))?;
            let x: f64 = v.parse().map_err(|_| bad("not a number"))?;
            match k {
                "theta" => theta = Some(x),
                "rref" => r_ref = Some(x),
                _ => return Err(bad("unknown key")),
            }
        }
        let theta = theta.ok_or_else(|| bad("missing theta"))?;
        BoundaryPolicy::square_integrable(theta, r_ref.unwrap_or(1.0))
    }
}

impl From<BoundaryPolicy> for String {
    fn from(p: BoundaryPolicy) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for BoundaryPolicy {
    type Error = IndicialError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// `int_0 r^{2s} dr` converges.
pub fn square_integrable(s: f64) -> bool {
    s > -0.5
}

pub fn vanishes_at_origin(s: f64) -> bool {
    s > 0.0
}

/// Classification of the exponents of one origin problem.
///
/// Flags are `None` until [`admissibility`] has been applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicialReport {
    pub l: u32,
    pub mass: f64,
    pub s_plus: Option<f64>,
    /// Absent for fall to center and for the degenerate double root.
    pub s_minus: Option<f64>,
    /// `P`, present for transitive-singular origins only.
    pub p_value: Option<f64>,
    pub fall_to_center: bool,
    /// `P = 0`: a single exponent 1/2 (the log partner is not represented).
    pub degenerate: bool,
    pub policy: Option<BoundaryPolicy>,
    pub s_plus_square_integrable: Option<bool>,
    pub s_plus_vanishes_at_origin: Option<bool>,
    pub s_plus_admissible: Option<bool>,
    pub s_minus_square_integrable: Option<bool>,
    pub s_minus_vanishes_at_origin: Option<bool>,
    pub s_minus_admissible: Option<bool>,
    /// Both exponents admissible: the policy does not fix the solution.
    pub ambiguous: Option<bool>,
}

impl IndicialReport {
    fn new(l: u32, mass: f64) -> Self {
        IndicialReport {
            l,
            mass,
            s_plus: None,
            s_minus: None,
            p_value: None,
            fall_to_center: false,
            degenerate: false,
            policy: None,
            s_plus_square_integrable: None,
            s_plus_vanishes_at_origin: None,
            s_plus_admissible: None,
            s_minus_square_integrable: None,
            s_minus_vanishes_at_origin: None,
            s_minus_admissible: None,
            ambiguous: None,
        }
    }

    /// Exponents of `s(s - 1) = (l + 1/2)^2 - 1/4 - coupling`, where coupling
    /// is `2 m v0` for Schrodinger and `alpha^2` for Klein-Gordon Coulomb.
    pub(crate) fn from_coupling(l: u32, mass: f64, coupling: f64, with_p: bool) -> Self {
        let mut report = IndicialReport::new(l, mass);
        let half = l as f64 + 0.5;
        let threshold = half * half;
        if coupling > threshold {
            report.fall_to_center = true;
            return report;
        }
        let p = (threshold - coupling).sqrt();
        if with_p {
            report.p_value = Some(p);
        }
        if p == 0.0 {
            report.degenerate = true;
            report.s_plus = Some(0.5);
        } else {
            report.s_plus = Some(0.5 + p);
            report.s_minus = Some(0.5 - p);
        }
        report
    }

    /// Whether the flags say the policy admits the subdominant branch.
    pub fn minus_admissible(&self) -> bool {
        self.s_minus_admissible == Some(true)
    }
}

/// Frobenius exponents for an origin class.
pub fn indicial_exponents(
    origin: OriginClass,
    l: u32,
    mass: f64,
) -> Result<IndicialReport, IndicialError> {
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(IndicialError::InvalidMass(mass));
    }
    match origin {
        OriginClass::Regular => {
            let mut report = IndicialReport::new(l, mass);
            report.s_plus = Some(l as f64 + 1.0);
            report.s_minus = Some(-(l as f64));
            Ok(report)
        }
        OriginClass::TransitiveSingular { v0 } => Ok(IndicialReport::from_coupling(
            l,
            mass,
            2.0 * mass * v0,
            true,
        )),
        OriginClass::StronglySingular { n, g } => {
            Err(IndicialError::StronglySingularUnsupported { n, g })
        }
    }
}

/// Fills the per-exponent flags and the ambiguity summary for `policy`.
pub fn admissibility(
    report: &IndicialReport,
    policy: BoundaryPolicy,
) -> Result<IndicialReport, IndicialError> {
    policy.validate()?;
    let s_plus = match (report.fall_to_center, report.s_plus) {
        (false, Some(s)) => s,
        _ => {
            let half = report.l as f64 + 0.5;
            return Err(IndicialError::FallToCenter {
                coupling: report.p_value.map_or(f64::NAN, |p| half * half - p * p),
                threshold: half * half,
            });
        }
    };
    let mut out = report.clone();
    out.policy = Some(policy);
    out.s_plus_square_integrable = Some(square_integrable(s_plus));
    out.s_plus_vanishes_at_origin = Some(vanishes_at_origin(s_plus));
    out.s_plus_admissible = Some(policy.admits(s_plus));
    match report.s_minus {
        Some(s) => {
            out.s_minus_square_integrable = Some(square_integrable(s));
            out.s_minus_vanishes_at_origin = Some(vanishes_at_origin(s));
            out.s_minus_admissible = Some(policy.admits(s));
            out.ambiguous = Some(policy.admits(s_plus) && policy.admits(s));
        }
        None => {
            out.s_minus_square_integrable = None;
            out.s_minus_vanishes_at_origin = None;
            out.s_minus_admissible = None;
            out.ambiguous = Some(false);
        }
    }
    Ok(out)
}
