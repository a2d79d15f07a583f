//! The point defect hidden in `Delta_r (u / r) = (1 / r) u''`.
//!
//! Away from the origin the two sides agree. Integrated over a small ball
//! around `r = 0` they differ by `-4 pi u(0)`: the flux of `grad (u / r)`
//! through the sphere of radius `a` minus the volume integral of `u'' / r`
//! collapses to `-4 pi u(0)` for every `a`. The routines here measure that
//! difference on sampled data, and evaluate the small-sphere asymptotics
//! for `u ~ r^s`, `V ~ g / r^n`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::ProbeError;
use crate::model::RadialGrid;

/// Convention for reducing the 3D delta to the half line.
///
/// `FourPi` takes `delta3 = delta(r) / (4 pi r^2)` and predicts a defect of
/// `-4 pi u(0)`; `TwoPi` takes `delta(r) / (2 pi r^2)` with a full-weight
/// radial delta, which doubles the predicted point weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaConvention {
    #[default]
    FourPi,
    TwoPi,
}

impl DeltaConvention {
    fn weight(self) -> f64 {
        match self {
            DeltaConvention::FourPi => 1.0,
            DeltaConvention::TwoPi => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// Node actually used as the sphere radius (nearest node to the request).
    pub probe_radius: f64,
    /// `4 pi [a^2 (u/r)'(a) - int_0^a u'' r dr]`
    pub integral: f64,
    /// `-4 pi u(0)` (times the convention weight).
    pub predicted: f64,
    pub relative_error: f64,
    pub grid_spacing: f64,
    /// Quadratic extrapolation of the samples to `r = 0`.
    pub u0_extrapolated: f64,
}

fn check_samples(grid: &RadialGrid, u: &[f64]) -> Result<(), ProbeError> {
    if u.len() != grid.len() {
        return Err(ProbeError::SampleCount {
            expected: grid.len(),
            got: u.len(),
        });
    }
    Ok(())
}

/// Value at `r = 0` of the parabola through the first three samples.
pub fn extrapolate_to_origin(grid: &RadialGrid, u: &[f64]) -> f64 {
    let (r0, r1, r2) = (grid.node(0), grid.node(1), grid.node(2));
    // Lagrange basis evaluated at zero
    let w0 = r1 * r2 / ((r0 - r1) * (r0 - r2));
    let w1 = r0 * r2 / ((r1 - r0) * (r1 - r2));
    let w2 = r0 * r1 / ((r2 - r0) * (r2 - r1));
    w0 * u[0] + w1 * u[1] + w2 * u[2]
}

/// Small-sphere integral of `Delta_r (u / r) - u'' / r` with the default
/// convention.
pub fn numeric_delta_residual(
    grid: &RadialGrid,
    u: &[f64],
    a: f64,
) -> Result<ResidualReport, ProbeError> {
    numeric_delta_residual_with(grid, u, a, DeltaConvention::FourPi)
}

pub fn numeric_delta_residual_with(
    grid: &RadialGrid,
    u: &[f64],
    a: f64,
    convention: DeltaConvention,
) -> Result<ResidualReport, ProbeError> {
    check_samples(grid, u)?;
    let h = grid.spacing();
    if !(a >= 4.0 * h) {
        return Err(ProbeError::GridTooCoarse { a, h });
    }
    let k = grid.nearest_index(a);
    if k < 2 || k + 1 >= grid.len() || (grid.node(k) - a).abs() > 0.5 * h + 1e-12 * a {
        return Err(ProbeError::ProbeOutsideGrid { a });
    }
    let r = |i: usize| grid.node(i);
    let a_node = r(k);

    // flux of grad(u/r) through the sphere, per unit solid angle
    let g = |i: usize| u[i] / r(i);
    let slope = (g(k + 1) - g(k - 1)) / (2.0 * h);
    let flux = a_node * a_node * slope;

    // int_0^a u'' r dr: trapezoid on nodes 1..=k, one panel from the origin
    // where the integrand vanishes
    let f = |i: usize| (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h) * r(i);
    let mut volume = 0.5 * r(1) * f(1);
    for i in 1..k {
        volume += 0.5 * h * (f(i) + f(i + 1));
    }

    let integral = 4.0 * PI * (flux - volume);
    let u0 = extrapolate_to_origin(grid, u);
    let predicted = -4.0 * PI * u0 * convention.weight();
    Ok(ResidualReport {
        probe_radius: a_node,
        integral,
        predicted,
        relative_error: (integral - predicted).abs() / predicted.abs().max(1e-300),
        grid_spacing: h,
        u0_extrapolated: u0,
    })
}

/// Max-norm of `Delta_r (u / r) - u'' / r` over nodes `r >= r_low`.
///
/// The left side uses the conservative radial Laplacian
/// `r^-2 D(r^2 D g)` with fluxes at the half nodes, the right side the
/// central second difference of `u`. The two discretizations differ at
/// `O(h^2)` (they agree exactly when `u / r` is linear); the expanded form
/// `D^2 g + (2/r) D g` would reproduce `D^2 u / r` identically and detect
/// nothing.
pub fn identity_defect_away_from_origin(
    grid: &RadialGrid,
    u: &[f64],
    r_low: f64,
) -> Result<f64, ProbeError> {
    check_samples(grid, u)?;
    let h = grid.spacing();
    if r_low < grid.r_min() + 2.0 * h * (1.0 - 1e-9) {
        return Err(ProbeError::InvalidInput(format!(
            "r_low = {r_low} must be at least r_min + 2h = {}",
            grid.r_min() + 2.0 * h
        )));
    }
    let nodes = grid.nodes();
    let g: Vec<f64> = u.iter().zip(&nodes).map(|(u, r)| u / r).collect();
    let mut worst = 0.0_f64;
    for i in 1..grid.len() - 1 {
        let r = nodes[i];
        if r < r_low {
            continue;
        }
        let (rp, rm) = (r + 0.5 * h, r - 0.5 * h);
        let lap = (rp * rp * (g[i + 1] - g[i]) - rm * rm * (g[i] - g[i - 1])) / (h * h * r * r);
        let rhs = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h) / r;
        worst = worst.max((lap - rhs).abs());
    }
    Ok(worst)
}

/// Limit of the small-sphere bracket as the radius shrinks to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "limit", rename_all = "snake_case")]
pub enum LimitClass {
    Zero,
    Finite { value: f64 },
    Infinite,
}

/// Inputs to [`asymptotic_origin_limit`]: `u ~ r^s` against `V ~ g / r^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticParams {
    pub s: f64,
    pub l: u32,
    pub n: f64,
    pub g: f64,
    pub mass: f64,
    pub energy: f64,
    /// Sphere radius.
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginLimit {
    pub value_at_a: f64,
    pub classification: LimitClass,
}

const EXPONENT_TOL: f64 = 1e-12;

fn same_exponent(x: f64, y: f64) -> bool {
    (x - y).abs() <= EXPONENT_TOL * x.abs().max(y.abs()).max(1.0)
}

/// Evaluates
/// `[(s(s-1) - l(l+1))/s] a^s + [2mE/(s+2)] a^{s+2} - [2mg/(s+2-n)] a^{s+2-n}`
/// and classifies its `a -> 0` limit. Terms sharing an exponent are merged
/// before the limit is taken, so exact cancellations are honoured.
pub fn asymptotic_origin_limit(p: AsymptoticParams) -> Result<OriginLimit, ProbeError> {
    let AsymptoticParams {
        s,
        l,
        n,
        g,
        mass,
        energy,
        a,
    } = p;
    for (name, x) in [
        ("s", s),
        ("n", n),
        ("g", g),
        ("mass", mass),
        ("energy", energy),
        ("a", a),
    ] {
        if !x.is_finite() {
            return Err(ProbeError::InvalidInput(format!(
                "{name} = {x} is not finite"
            )));
        }
    }
    if a <= 0.0 {
        return Err(ProbeError::InvalidInput(format!(
            "radius a = {a} must be positive"
        )));
    }
    let centrifugal = (l as f64) * (l as f64 + 1.0);

    let mut terms: Vec<(f64, f64)> = Vec::with_capacity(3);
    if s == 0.0 {
        if l == 0 && g == 0.0 {
            // (s(s-1) - 0)/s = s - 1 stays finite
            terms.push((0.0, -1.0));
        } else {
            return Err(ProbeError::LogCase(format!(
                "s = 0 with l = {l}, g = {g}: the r^s antiderivative is logarithmic"
            )));
        }
    } else {
        let num = s * (s - 1.0) - centrifugal;
        let c1 = if num.abs() <= EXPONENT_TOL * centrifugal.max(s * s).max(1.0) {
            0.0
        } else {
            num / s
        };
        terms.push((s, c1));
    }
    if energy != 0.0 {
        if s + 2.0 == 0.0 {
            return Err(ProbeError::LogCase(
                "s + 2 = 0: the energy term integrates to a logarithm".into(),
            ));
        }
        terms.push((s + 2.0, 2.0 * mass * energy / (s + 2.0)));
    }
    if g != 0.0 {
        let e = s + 2.0 - n;
        if e.abs() <= EXPONENT_TOL * n.abs().max(1.0) {
            return Err(ProbeError::LogCase(format!(
                "s + 2 - n = 0 (s = {s}, n = {n}): the potential term integrates to a logarithm"
            )));
        }
        terms.push((e, -2.0 * mass * g / e));
    }

    let value_at_a: f64 = terms.iter().map(|(e, c)| c * a.powf(*e)).sum();

    // merge equal exponents, then drop cancelled coefficients
    let mut merged: Vec<(f64, f64, f64)> = Vec::new(); // (exponent, coefficient, magnitude)
    for (e, c) in terms {
        match merged.iter_mut().find(|(x, _, _)| same_exponent(*x, e)) {
            Some(slot) => {
                slot.1 += c;
                slot.2 += c.abs();
            }
            None => merged.push((e, c, c.abs())),
        }
    }
    let lowest = merged
        .into_iter()
        .filter(|(_, c, mag)| *c != 0.0 && c.abs() > EXPONENT_TOL * mag)
        .map(|(e, c, _)| (e, c))
        .min_by(|x, y| x.0.total_cmp(&y.0));

    let classification = match lowest {
        None => LimitClass::Zero,
        Some((e, _)) if e > EXPONENT_TOL => LimitClass::Zero,
        Some((e, c)) if e.abs() <= EXPONENT_TOL => LimitClass::Finite { value: c },
        Some(_) => LimitClass::Infinite,
    };
    Ok(OriginLimit {
        value_at_a,
        classification,
    })
}

/// Strict lower bound on `s` keeping the potential term finite: `s > n - 2`.
pub fn min_exponent_bound(n: f64) -> f64 {
    n - 2.0
}
