//! Bound states of the radial equation `u'' = Q(r, E) u` by Numerov shooting.
//!
//! The outward solution starts from the Frobenius branches allowed by the
//! boundary policy; the inward one starts from a decaying tail (or a hard
//! wall for boxed problems). Eigenvalues are located through the counting
//! function
//!
//! `N(E) = nodes(u_out on [r_min, r_m]) + nodes(u_in on [r_m, r_max]) + [L_out < L_in]`
//!
//! where `L` are the discrete log-derivatives `u(r_m + h) / u(r_m)` at the
//! matching node. `N` is the number of states below `E`, is monotone in `E`,
//! and jumps exactly where the two log-derivatives agree, so a bisection on
//! `N(E) >= k` converges onto the `k`-th eigenvalue of the Numerov problem.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{IndicialError, SolverError};
use crate::indicial::{admissibility, indicial_exponents, BoundaryPolicy, IndicialReport};
use crate::model::{Potential, RadialGrid};

/// Maximum Frobenius order used for start values.
const SERIES_ORDER: usize = 8;
/// Rescale a running solution once it exceeds this magnitude.
const OVERFLOW_GUARD: f64 = 1e150;
/// Matching node stays this many steps away from either end.
const MATCH_MARGIN: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquationKind {
    /// `u'' = [l(l+1)/r^2 + 2m(V - E)] u`
    Schrodinger,
    /// `u'' = [l(l+1)/r^2 + m^2 - (E - V)^2] u`
    KleinGordon,
}

/// Condition imposed at `r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterBoundary {
    /// WKB-decaying tail; needs a classically forbidden end point.
    Decaying,
    /// `u(r_max) = 0`.
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Outward,
    Inward,
}

/// Radial equation for one partial wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialEquation {
    pub potential: Potential,
    pub l: u32,
    pub mass: f64,
    pub kind: EquationKind,
}

impl RadialEquation {
    pub fn schrodinger(potential: Potential, l: u32, mass: f64) -> Self {
        RadialEquation {
            potential,
            l,
            mass,
            kind: EquationKind::Schrodinger,
        }
    }

    pub fn klein_gordon(potential: Potential, l: u32, mass: f64) -> Self {
        RadialEquation {
            potential,
            l,
            mass,
            kind: EquationKind::KleinGordon,
        }
    }

    fn validate(&self) -> Result<(), SolverError> {
        self.potential.validate()?;
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(IndicialError::InvalidMass(self.mass).into());
        }
        if self.kind == EquationKind::KleinGordon
            && !matches!(self.potential, Potential::Coulomb { .. })
        {
            return Err(SolverError::InvalidInput(
                "Klein-Gordon mode supports the Coulomb potential only".into(),
            ));
        }
        Ok(())
    }

    fn centrifugal(&self) -> f64 {
        let l = self.l as f64;
        l * (l + 1.0)
    }

    /// `Q(r, E)` with `u'' = Q u`.
    #[inline]
    pub fn q(&self, r: f64, energy: f64) -> f64 {
        let v = self.potential.value_unchecked(r, self.mass);
        let cf = self.centrifugal() / (r * r);
        match self.kind {
            EquationKind::Schrodinger => cf + 2.0 * self.mass * (v - energy),
            EquationKind::KleinGordon => {
                let d = energy - v;
                cf + self.mass * self.mass - d * d
            }
        }
    }

    fn q_on(&self, nodes: &[f64], energy: f64) -> Vec<f64> {
        nodes.iter().map(|&r| self.q(r, energy)).collect()
    }

    /// Frobenius exponents of the origin.
    pub fn indicial(&self) -> Result<IndicialReport, SolverError> {
        self.validate()?;
        match self.kind {
            EquationKind::Schrodinger => {
                let origin = self.potential.classify_origin()?;
                Ok(indicial_exponents(origin, self.l, self.mass)?)
            }
            EquationKind::KleinGordon => {
                let alpha = match self.potential {
                    Potential::Coulomb { alpha } => alpha,
                    _ => unreachable!("validated above"),
                };
                let limit = self.l as f64 + 0.5;
                if alpha.abs() >= limit {
                    return Err(SolverError::KgFallToCenter { alpha, limit });
                }
                Ok(IndicialReport::from_coupling(
                    self.l,
                    self.mass,
                    alpha * alpha,
                    true,
                ))
            }
        }
    }

    /// Coefficients `q_k` of `r^2 Q(r, E) = sum_k q_k r^k` near the origin.
    fn origin_series(&self, energy: f64) -> Vec<f64> {
        let mut q = vec![0.0; SERIES_ORDER + 1];
        match self.kind {
            EquationKind::Schrodinger => {
                q[0] = self.centrifugal();
                for (k, c) in self.potential.origin_series(self.mass) {
                    if k <= SERIES_ORDER {
                        q[k] += c;
                    }
                }
                q[2] -= 2.0 * self.mass * energy;
            }
            EquationKind::KleinGordon => {
                let alpha = match self.potential {
                    Potential::Coulomb { alpha } => alpha,
                    _ => 0.0,
                };
                q[0] = self.centrifugal() - alpha * alpha;
                q[1] = -2.0 * energy * alpha;
                q[2] = self.mass * self.mass - energy * energy;
            }
        }
        q
    }
}

/// Frobenius coefficients `c_0..c_J` of the branch with leading exponent `s`,
/// cut at the first resonant order (where the partner carries a logarithm).
fn frobenius_coefficients(s: f64, q: &[f64]) -> Vec<f64> {
    let mut c = vec![1.0];
    for j in 1..=SERIES_ORDER {
        let denom = j as f64 * (2.0 * s + j as f64 - 1.0);
        if denom.abs() < 1e-10 {
            break;
        }
        let acc: f64 = (1..=j).map(|k| q[k] * c[j - k]).sum();
        c.push(acc / denom);
    }
    c
}

/// `r^s * sum_j c_j r^j` and a bound on the relative size of the last two
/// terms (infinite for a series cut short by a resonance).
fn frobenius_branch(s: f64, c: &[f64], r: f64) -> (f64, f64) {
    let mut sum = 0.0;
    let mut rp = 1.0;
    let mut last = 0.0_f64;
    for (j, cj) in c.iter().enumerate() {
        let term = cj * rp;
        sum += term;
        if j + 2 >= c.len() {
            last = last.max(term.abs());
        }
        rp *= r;
    }
    let tail = if c.len() <= SERIES_ORDER {
        f64::INFINITY
    } else {
        last / sum.abs()
    };
    (r.powf(s) * sum, tail)
}

/// Start of the outward integration: `cos(theta) u_+ + sin(theta) u_-`, the
/// subdominant branch scaled as `(r / r_ref)^{s_-} r_ref^{s_+}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrobeniusStart {
    pub s_plus: f64,
    pub s_minus: Option<f64>,
    /// Mixing angle; zero is the pure dominant branch.
    pub theta: f64,
    pub r_ref: f64,
}

impl FrobeniusStart {
    /// Pure dominant branch.
    pub fn dominant(s_plus: f64) -> Self {
        FrobeniusStart {
            s_plus,
            s_minus: None,
            theta: 0.0,
            r_ref: 1.0,
        }
    }

    /// Start prescribed by `policy`. Under `DirichletOrigin` the dominant
    /// branch is used unless `dirichlet_mixing` supplies an angle, which is
    /// only accepted when the subdominant branch also vanishes at the origin.
    pub fn for_policy(
        report: &IndicialReport,
        policy: BoundaryPolicy,
        dirichlet_mixing: Option<(f64, f64)>,
    ) -> Result<Self, SolverError> {
        let flagged = admissibility(report, policy)?;
        let s_plus = flagged.s_plus.expect("admissibility checked the exponents");
        let (theta, r_ref) = match policy {
            BoundaryPolicy::DirichletOrigin => dirichlet_mixing.unwrap_or((0.0, 1.0)),
            BoundaryPolicy::SquareIntegrableOnly { theta, r_ref } => (theta, r_ref),
        };
        if !(0.0..std::f64::consts::PI).contains(&theta) || !(r_ref > 0.0) {
            return Err(SolverError::InvalidInput(format!(
                "mixing angle {theta} / reference length {r_ref} out of range"
            )));
        }
        if theta == 0.0 {
            return Ok(FrobeniusStart {
                s_plus,
                s_minus: flagged.s_minus,
                theta,
                r_ref,
            });
        }
        let s_minus = match flagged.s_minus {
            Some(s) => s,
            None => {
                return Err(SolverError::InvalidInput(
                    "degenerate double root has no second branch to mix".into(),
                ))
            }
        };
        if !flagged.minus_admissible() {
            return Err(SolverError::InadmissibleBranch { exponent: s_minus });
        }
        Ok(FrobeniusStart {
            s_plus,
            s_minus: Some(s_minus),
            theta,
            r_ref,
        })
    }

    fn value(&self, plus: &[f64], minus: &[f64], r: f64, use_series: bool) -> (f64, f64) {
        let eval = |s: f64, c: &[f64]| {
            if use_series {
                frobenius_branch(s, c, r)
            } else {
                (r.powf(s), f64::INFINITY)
            }
        };
        let (up, tp) = eval(self.s_plus, plus);
        if self.theta == 0.0 {
            return (up, tp);
        }
        let s_minus = self.s_minus.unwrap_or(self.s_plus);
        let (um, tm) = eval(s_minus, minus);
        let um = um * self.r_ref.powf(self.s_plus - s_minus);
        let (a, b) = (self.theta.cos() * up, self.theta.sin() * um);
        let total = a + b;
        let err = (a.abs() * tp + b.abs() * tm) / total.abs();
        (total, err)
    }
}

/// Samples produced by [`numerov_integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Integration {
    pub u: Vec<f64>,
    /// The running solution was renormalized to avoid overflow.
    pub rescaled: bool,
}

/// Numerov recurrence from the seeds `u[..=seeded]` up to `u[last]`, rescaling
/// the whole prefix on overflow.
fn numerov_forward(q: &[f64], h: f64, u: &mut [f64], seeded: usize, last: usize) -> bool {
    let c = h * h / 12.0;
    let mut rescaled = false;
    for i in seeded..last {
        let f_prev = 1.0 - c * q[i - 1];
        let f_cur = 1.0 - c * q[i];
        let f_next = 1.0 - c * q[i + 1];
        u[i + 1] = ((12.0 - 10.0 * f_cur) * u[i] - f_prev * u[i - 1]) / f_next;
        if u[i + 1].abs() > OVERFLOW_GUARD {
            let scale = 1.0 / u[i + 1].abs();
            u[..=i + 1].iter_mut().for_each(|x| *x *= scale);
            rescaled = true;
        }
    }
    rescaled
}

/// Mirror of [`numerov_forward`]: seeds at the two last nodes, down to `u[first]`.
fn numerov_backward(q: &[f64], h: f64, u: &mut [f64], first: usize) -> bool {
    let c = h * h / 12.0;
    let n = u.len();
    let mut rescaled = false;
    for i in (first + 1..n - 1).rev() {
        let f_prev = 1.0 - c * q[i + 1];
        let f_cur = 1.0 - c * q[i];
        let f_next = 1.0 - c * q[i - 1];
        u[i - 1] = ((12.0 - 10.0 * f_cur) * u[i] - f_prev * u[i + 1]) / f_next;
        if u[i - 1].abs() > OVERFLOW_GUARD {
            let scale = 1.0 / u[i - 1].abs();
            u[i - 1..].iter_mut().for_each(|x| *x *= scale);
            rescaled = true;
        }
    }
    rescaled
}

/// Minimum number of leading nodes filled from the Frobenius series. Seeding
/// at least three keeps the recurrence away from `Q(r_min)`, which is huge
/// when `r_min << h`.
const SEEDS: usize = 3;
/// Further nodes are seeded while the truncated series stays this accurate.
const SERIES_ACCURACY: f64 = 1e-13;

/// Fills the leading nodes of `u` from the Frobenius start and returns the
/// index of the last seeded node. Seeding goes past [`SEEDS`] for as long as
/// the series is accurate to roundoff, since Numerov steps taken close to a
/// singular origin leak the growing branch into a mixed start.
fn start_values(
    eq: &RadialEquation,
    grid: &RadialGrid,
    energy: f64,
    start: &FrobeniusStart,
    u: &mut [f64],
) -> usize {
    let q = eq.origin_series(energy);
    let plus = frobenius_coefficients(start.s_plus, &q);
    let minus = frobenius_coefficients(start.s_minus.unwrap_or(start.s_plus), &q);
    let radius = eq.potential.origin_series_radius();
    let cap = u.len().saturating_sub(2).max(SEEDS);
    let mut last = 0;
    for (i, slot) in u.iter_mut().enumerate().take(cap) {
        let r = grid.node(i);
        let use_series = r < radius || i < SEEDS;
        let (v, err) = start.value(&plus, &minus, r, use_series && r < radius);
        if i >= SEEDS && !(use_series && err < SERIES_ACCURACY) {
            break;
        }
        *slot = v;
        last = i;
    }
    last
}

impl RadialEquation {
    /// `lim Q(r, E)` as `r -> infinity` when the potential vanishes there.
    fn asymptotic_q(&self, energy: f64) -> Option<f64> {
        match (self.kind, self.potential) {
            (_, Potential::Harmonic { .. }) => None,
            (EquationKind::Schrodinger, _) => Some(-2.0 * self.mass * energy),
            (EquationKind::KleinGordon, _) => Some(self.mass * self.mass - energy * energy),
        }
    }
}

/// Seeds `(u(r_max), u(r_max - h))` of a decaying tail.
fn tail_values(
    eq: &RadialEquation,
    q_last: f64,
    q_prev: f64,
    h: f64,
    energy: f64,
) -> Result<(f64, f64), SolverError> {
    if q_last > 0.0 && q_prev > 0.0 {
        // WKB: u ~ Q^{-1/4} exp(-int sqrt(Q))
        let growth =
            (0.5 * h * (q_last.sqrt() + q_prev.sqrt())).exp() * (q_last / q_prev).powf(0.25);
        return Ok((1.0, growth));
    }
    // r_max still classically allowed: fall back to the free decay exp(-kappa r)
    match eq.asymptotic_q(energy) {
        Some(k2) if k2 > 0.0 => Ok((1.0, (k2.sqrt() * h).exp())),
        _ => Err(SolverError::NonDecayingTail { energy }),
    }
}

/// Numerov samples of `u` on `grid` at energy `energy`.
///
/// Outward runs start from `start`; inward runs start from a decaying WKB
/// tail at `r_max` (or from `u(r_max) = 0` for [`OuterBoundary::Wall`]).
pub fn numerov_integrate(
    eq: &RadialEquation,
    energy: f64,
    grid: &RadialGrid,
    start: &FrobeniusStart,
    direction: Direction,
    outer: OuterBoundary,
) -> Result<Integration, SolverError> {
    eq.validate()?;
    let nodes = grid.nodes();
    let q = eq.q_on(&nodes, energy);
    let h = grid.spacing();
    let n = nodes.len();
    let mut u = vec![0.0; n];
    let rescaled = match direction {
        Direction::Outward => {
            let seeded = start_values(eq, grid, energy, start, &mut u);
            numerov_forward(&q, h, &mut u, seeded, n - 1)
        }
        Direction::Inward => {
            let (a, b) = match outer {
                OuterBoundary::Decaying => tail_values(eq, q[n - 1], q[n - 2], h, energy)?,
                OuterBoundary::Wall => (0.0, 1.0),
            };
            u[n - 1] = a;
            u[n - 2] = b;
            numerov_backward(&q, h, &mut u, 0)
        }
    };
    Ok(Integration { u, rescaled })
}

fn sign_changes(u: &[f64]) -> usize {
    let mut count = 0;
    let mut last = 0.0_f64;
    for &x in u {
        if x == 0.0 {
            continue;
        }
        if last != 0.0 && (x > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = x;
    }
    count
}

/// Knobs of the shooting driver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootingOptions {
    /// Stop bisecting once the bracket is below `rel_tolerance * max(1, |E|)`.
    pub rel_tolerance: f64,
    /// Uniform energies sampled before bisection.
    pub prescan_points: usize,
    /// `None` picks a wall for the pure inverse square and a decaying tail otherwise.
    pub outer: Option<OuterBoundary>,
    /// Mixing angle and reference length for the Dirichlet policy when both
    /// branches vanish at the origin.
    pub dirichlet_mixing: Option<(f64, f64)>,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            rel_tolerance: 1e-10,
            prescan_points: 256,
            outer: None,
            dirichlet_mixing: None,
        }
    }
}

fn default_outer(p: &Potential) -> OuterBoundary {
    match p {
        Potential::InverseSquare { .. } => OuterBoundary::Wall,
        _ => OuterBoundary::Decaying,
    }
}

/// One shooting setup: equation, grid, start and outer boundary.
struct Shooter<'a> {
    eq: &'a RadialEquation,
    grid: &'a RadialGrid,
    nodes: Vec<f64>,
    start: FrobeniusStart,
    outer: OuterBoundary,
}

struct Shot {
    count: usize,
    matching: usize,
    out: Vec<f64>,
    inw: Vec<f64>,
    rescaled: bool,
}

impl<'a> Shooter<'a> {
    fn new(
        eq: &'a RadialEquation,
        grid: &'a RadialGrid,
        start: FrobeniusStart,
        outer: OuterBoundary,
    ) -> Result<Self, SolverError> {
        if grid.len() < 2 * MATCH_MARGIN + 3 {
            return Err(SolverError::InvalidInput(format!(
                "grid needs at least {} points for shooting",
                2 * MATCH_MARGIN + 3
            )));
        }
        Ok(Shooter {
            eq,
            grid,
            nodes: grid.nodes(),
            start,
            outer,
        })
    }

    fn shoot(&self, energy: f64) -> Result<Shot, SolverError> {
        let q = self.eq.q_on(&self.nodes, energy);
        let n = q.len();
        let h = self.grid.spacing();

        // outermost classically allowed node
        let turning = q.iter().rposition(|&x| x < 0.0).unwrap_or(0);
        let m = turning.clamp(MATCH_MARGIN, n - 1 - MATCH_MARGIN);

        let mut out = vec![0.0; m + 2];
        let seeded = start_values(self.eq, self.grid, energy, &self.start, &mut out);
        let r1 = numerov_forward(&q, h, &mut out, seeded, m + 1);

        let mut inw = vec![0.0; n];
        let (a, b) = match self.outer {
            OuterBoundary::Decaying => tail_values(self.eq, q[n - 1], q[n - 2], h, energy)?,
            OuterBoundary::Wall => (0.0, 1.0),
        };
        inw[n - 1] = a;
        inw[n - 2] = b;
        let r2 = numerov_backward(&q, h, &mut inw, m);

        // [L_out < L_in] with L = u(m+1)/u(m), written without division
        let tiny = f64::MIN_POSITIVE;
        let (om, om1) = (nonzero(out[m], tiny), out[m + 1]);
        let (im, im1) = (nonzero(inw[m], tiny), inw[m + 1]);
        let w = om1 * im - om * im1;
        let below = (w > 0.0) != (om * im > 0.0) && w != 0.0;
        let count = sign_changes(&out[..=m]) + sign_changes(&inw[m..]) + usize::from(below);
        Ok(Shot {
            count,
            matching: m,
            out,
            inw,
            rescaled: r1 || r2,
        })
    }

    fn count(&self, energy: f64) -> Result<usize, SolverError> {
        Ok(self.shoot(energy)?.count)
    }

    /// Matched, unit-norm eigenfunction candidate at `energy`.
    fn assemble(&self, energy: f64) -> Result<(Vec<f64>, bool), SolverError> {
        let shot = self.shoot(energy)?;
        let m = shot.matching;
        let (o, i) = (&shot.out, &shot.inw);
        let den = i[m] * i[m] + i[m + 1] * i[m + 1];
        let scale = if den > 0.0 {
            (o[m] * i[m] + o[m + 1] * i[m + 1]) / den
        } else {
            0.0
        };
        let mut u: Vec<f64> = o[..=m].to_vec();
        u.extend(i[m + 1..].iter().map(|x| x * scale));
        let h = self.grid.spacing();
        let norm2: f64 = u.iter().map(|x| x * x).sum::<f64>() * h;
        if norm2 > 0.0 && norm2.is_finite() {
            let first = u.iter().find(|x| **x != 0.0).copied().unwrap_or(1.0);
            let k = first.signum() / norm2.sqrt();
            u.iter_mut().for_each(|x| *x *= k);
        }
        Ok((u, shot.rescaled))
    }
}

fn nonzero(x: f64, tiny: f64) -> f64 {
    if x == 0.0 {
        tiny
    } else {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    /// 1-based position in the full spectrum of this partial wave.
    pub index: usize,
    pub energy: f64,
    pub node_count: usize,
    pub converged: bool,
    pub bisection_width: f64,
}

/// Bound states found in an energy window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub entries: Vec<SpectrumEntry>,
    pub equation: EquationKind,
    pub policy: BoundaryPolicy,
    pub potential: Potential,
    pub l: u32,
    pub mass: f64,
    pub grid: RadialGrid,
    pub start: FrobeniusStart,
    pub outer_boundary: OuterBoundary,
    pub window: (f64, f64),
}

impl Spectrum {
    pub fn energies(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.energy).collect()
    }

    pub fn ground(&self) -> Option<&SpectrumEntry> {
        self.entries.first()
    }
}

fn solve_window(
    shooter: &Shooter<'_>,
    window: (f64, f64),
    k_max: usize,
    options: &ShootingOptions,
) -> Result<Vec<SpectrumEntry>, SolverError> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(SolverError::InvalidInput(format!(
            "energy window [{lo}, {hi}] must be finite with lo < hi"
        )));
    }
    let points = options.prescan_points.max(2);
    let energies: Vec<f64> = (0..points)
        .map(|j| lo + (hi - lo) * j as f64 / (points - 1) as f64)
        .collect();
    let counts: Vec<usize> = energies
        .par_iter()
        .map(|&e| shooter.count(e))
        .collect::<Result<_, _>>()?;
    let (first, last) = (counts[0], counts[points - 1]);
    if last <= first || k_max == 0 {
        return Err(SolverError::WindowEmpty { lo, hi });
    }

    let targets: Vec<usize> = (first + 1..=last).take(k_max).collect();
    targets
        .par_iter()
        .map(|&k| {
            let j = counts
                .iter()
                .position(|&c| c >= k)
                .expect("k <= last count");
            let (mut a, mut b) = (energies[j - 1], energies[j]);
            loop {
                let tol = options.rel_tolerance * a.abs().max(b.abs()).max(1.0);
                let mid = 0.5 * (a + b);
                if b - a <= tol || mid <= a || mid >= b {
                    break;
                }
                if shooter.count(mid)? >= k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            let energy = 0.5 * (a + b);
            let width = b - a;
            let (u, _) = shooter.assemble(energy)?;
            Ok(SpectrumEntry {
                index: k,
                energy,
                node_count: sign_changes(&u),
                converged: width <= options.rel_tolerance * energy.abs().max(1.0),
                bisection_width: width,
            })
        })
        .collect()
}

fn spectrum_for(
    eq: RadialEquation,
    policy: BoundaryPolicy,
    window: (f64, f64),
    k_max: usize,
    grid: &RadialGrid,
    options: &ShootingOptions,
) -> Result<Spectrum, SolverError> {
    let report = eq.indicial()?;
    let start = FrobeniusStart::for_policy(&report, policy, options.dirichlet_mixing)?;
    let outer = options
        .outer
        .unwrap_or_else(|| default_outer(&eq.potential));
    let shooter = Shooter::new(&eq, grid, start, outer)?;
    let entries = solve_window(&shooter, window, k_max, options)?;
    Ok(Spectrum {
        entries,
        equation: eq.kind,
        policy,
        potential: eq.potential,
        l: eq.l,
        mass: eq.mass,
        grid: *grid,
        start,
        outer_boundary: outer,
        window,
    })
}

/// Up to `k_max` Schrodinger bound states in `window` under `policy`.
pub fn bound_states(
    potential: Potential,
    l: u32,
    mass: f64,
    policy: BoundaryPolicy,
    window: (f64, f64),
    k_max: usize,
    grid: &RadialGrid,
) -> Result<Spectrum, SolverError> {
    bound_states_with(
        potential,
        l,
        mass,
        policy,
        window,
        k_max,
        grid,
        &ShootingOptions::default(),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn bound_states_with(
    potential: Potential,
    l: u32,
    mass: f64,
    policy: BoundaryPolicy,
    window: (f64, f64),
    k_max: usize,
    grid: &RadialGrid,
    options: &ShootingOptions,
) -> Result<Spectrum, SolverError> {
    spectrum_for(
        RadialEquation::schrodinger(potential, l, mass),
        policy,
        window,
        k_max,
        grid,
        options,
    )
}

/// Klein-Gordon bound states of a Coulomb potential with `window` inside `(0, m)`.
#[allow(clippy::too_many_arguments)]
pub fn kg_bound_states(
    potential: Potential,
    l: u32,
    mass: f64,
    policy: BoundaryPolicy,
    window: (f64, f64),
    k_max: usize,
    grid: &RadialGrid,
    options: &ShootingOptions,
) -> Result<Spectrum, SolverError> {
    let eq = RadialEquation::klein_gordon(potential, l, mass);
    eq.indicial()?;
    if !(window.0 > 0.0 && window.1 < mass) {
        return Err(SolverError::InvalidInput(format!(
            "Klein-Gordon window [{}, {}] must lie inside (0, m = {mass})",
            window.0, window.1
        )));
    }
    spectrum_for(eq, policy, window, k_max, grid, options)
}

/// Dirichlet reference spectrum followed by one square-integrable spectrum
/// per mixing angle, all on the same grid and window.
#[allow(clippy::too_many_arguments)]
pub fn policy_contrast(
    potential: Potential,
    l: u32,
    mass: f64,
    thetas: &[f64],
    r_ref: f64,
    grid: &RadialGrid,
    window: (f64, f64),
    k_max: usize,
) -> Result<Vec<Spectrum>, SolverError> {
    if !matches!(
        potential,
        Potential::InverseSquare { .. } | Potential::RegularizedInverseSquare { .. }
    ) {
        return Err(SolverError::InvalidInput(
            "policy contrast needs an inverse-square potential".into(),
        ));
    }
    let v0 = match potential {
        Potential::InverseSquare { v0 } | Potential::RegularizedInverseSquare { v0, .. } => v0,
        _ => unreachable!(),
    };
    let report = IndicialReport::from_coupling(l, mass, 2.0 * mass * v0, true);
    if report.fall_to_center {
        let half = l as f64 + 0.5;
        return Err(IndicialError::FallToCenter {
            coupling: 2.0 * mass * v0,
            threshold: half * half,
        }
        .into());
    }
    let p = report.p_value.unwrap_or(0.0);
    if !(p > 0.0 && p < 1.0) {
        return Err(SolverError::InvalidInput(format!(
            "policy contrast needs 0 < P < 1, got P = {p}"
        )));
    }
    let options = ShootingOptions::default();
    let mut out = Vec::with_capacity(thetas.len() + 1);
    out.push(bound_states_with(
        potential,
        l,
        mass,
        BoundaryPolicy::DirichletOrigin,
        window,
        k_max,
        grid,
        &options,
    )?);
    for &theta in thetas {
        let policy = BoundaryPolicy::square_integrable(theta, r_ref)?;
        out.push(bound_states_with(
            potential, l, mass, policy, window, k_max, grid, &options,
        )?);
    }
    Ok(out)
}

/// Unit-norm eigenfunction of a spectrum entry, sampled on the spectrum grid.
pub fn eigenfunction(spectrum: &Spectrum, entry: &SpectrumEntry) -> Result<Vec<f64>, SolverError> {
    let eq = RadialEquation {
        potential: spectrum.potential,
        l: spectrum.l,
        mass: spectrum.mass,
        kind: spectrum.equation,
    };
    let shooter = Shooter::new(&eq, &spectrum.grid, spectrum.start, spectrum.outer_boundary)?;
    Ok(shooter.assemble(entry.energy)?.0)
}

/// Least-squares power-law exponent of `u` near the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub exponent: f64,
    /// One standard error of the slope.
    pub std_error: f64,
    pub points: usize,
}

/// Slope of `ln |u|` against `ln r` over the nodes inside `window`.
pub fn origin_slope_fit(
    grid: &RadialGrid,
    u: &[f64],
    window: (f64, f64),
) -> Result<SlopeFit, SolverError> {
    if u.len() != grid.len() {
        return Err(SolverError::InvalidInput(format!(
            "{} samples for a grid of {}",
            u.len(),
            grid.len()
        )));
    }
    let (ra, rb) = window;
    let picked: Vec<(f64, f64)> = grid
        .nodes()
        .into_iter()
        .zip(u.iter().copied())
        .filter(|(r, _)| *r >= ra && *r <= rb)
        .collect();
    if picked.len() < 3 {
        return Err(SolverError::InvalidInput(format!(
            "fit window [{ra}, {rb}] holds fewer than 3 nodes"
        )));
    }
    let sign = picked[0].1.signum();
    if picked.iter().any(|(_, v)| *v == 0.0 || v.signum() != sign) {
        return Err(SolverError::NonPositiveSamples);
    }
    let pts: Vec<(f64, f64)> = picked.iter().map(|(r, v)| (r.ln(), v.abs().ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let std_error = if pts.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(SlopeFit {
        exponent: slope,
        std_error,
        points: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coulomb_grid() -> RadialGrid {
        RadialGrid::new(1e-4, 60.0, 12000).unwrap()
    }

    #[test]
    fn free_linear_solution_is_exact() {
        let eq = RadialEquation::schrodinger(Potential::harmonic(0.0), 0, 1.0);
        let grid = RadialGrid::new(0.01, 5.0, 500).unwrap();
        let int = numerov_integrate(
            &eq,
            0.0,
            &grid,
            &FrobeniusStart::dominant(1.0),
            Direction::Outward,
            OuterBoundary::Decaying,
        )
        .unwrap();
        for (r, u) in grid.nodes().iter().zip(&int.u) {
            assert!((u - r).abs() < 1e-12 * r.max(1.0), "{r} {u}");
        }
        assert!(!int.rescaled);
    }

    /// Compares `u` with `exact` on `r <= 4` after matching the scale at
    /// `r = 1`; errors are relative to the peak of `exact`.
    fn assert_proportional(grid: &RadialGrid, u: &[f64], exact: impl Fn(f64) -> f64, tol: f64) {
        let nodes = grid.nodes();
        let i_ref = nodes.iter().position(|&r| r >= 1.0).unwrap();
        let k = exact(nodes[i_ref]) / u[i_ref];
        let peak = nodes.iter().map(|&r| exact(r).abs()).fold(0.0, f64::max);
        for (&r, &v) in nodes.iter().zip(u) {
            if r > 4.0 {
                break;
            }
            let want = exact(r);
            assert!(
                (k * v - want).abs() <= tol * peak,
                "r={r}: {} vs {want}",
                k * v
            );
        }
    }

    #[test]
    fn oscillator_ground_state_profile() {
        let eq = RadialEquation::schrodinger(Potential::harmonic(1.0), 0, 1.0);
        let grid = RadialGrid::new(1e-4, 8.0, 8000).unwrap();
        let int = numerov_integrate(
            &eq,
            1.5,
            &grid,
            &FrobeniusStart::dominant(1.0),
            Direction::Outward,
            OuterBoundary::Decaying,
        )
        .unwrap();
        assert_proportional(&grid, &int.u, |r| r * (-r * r / 2.0).exp(), 1e-6);
    }

    #[test]
    fn hydrogen_ground_state_profile() {
        let eq = RadialEquation::schrodinger(Potential::coulomb(1.0), 0, 1.0);
        let grid = RadialGrid::new(1e-4, 10.0, 10000).unwrap();
        let int = numerov_integrate(
            &eq,
            -0.5,
            &grid,
            &FrobeniusStart::dominant(1.0),
            Direction::Outward,
            OuterBoundary::Decaying,
        )
        .unwrap();
        assert_proportional(&grid, &int.u, |r| r * (-r).exp(), 1e-6);
    }

    #[test]
    fn inward_needs_forbidden_tail() {
        let eq = RadialEquation::schrodinger(Potential::coulomb(1.0), 0, 1.0);
        let grid = coulomb_grid();
        let err = numerov_integrate(
            &eq,
            0.0,
            &grid,
            &FrobeniusStart::dominant(1.0),
            Direction::Inward,
            OuterBoundary::Decaying,
        );
        assert!(matches!(err, Err(SolverError::NonDecayingTail { .. })));
    }

    #[test]
    fn inward_overflow_is_rescaled() {
        let eq = RadialEquation::schrodinger(Potential::harmonic(1.0), 0, 1.0);
        let grid = RadialGrid::new(1e-4, 40.0, 8000).unwrap();
        let int = numerov_integrate(
            &eq,
            1.5,
            &grid,
            &FrobeniusStart::dominant(1.0),
            Direction::Inward,
            OuterBoundary::Decaying,
        )
        .unwrap();
        assert!(int.rescaled);
        assert!(int.u.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn coulomb_levels() {
        let spec = bound_states(
            Potential::coulomb(1.0),
            0,
            1.0,
            BoundaryPolicy::DirichletOrigin,
            (-0.6, -0.01),
            3,
            &coulomb_grid(),
        )
        .unwrap();
        let e = spec.energies();
        assert_eq!(e.len(), 3);
        for (n, got) in e.iter().enumerate() {
            let want = -0.5 / ((n + 1) as f64).powi(2);
            assert!((got - want).abs() < 1e-6 * want.abs(), "{got} vs {want}");
            assert_eq!(spec.entries[n].node_count, n);
            assert_eq!(spec.entries[n].index, n + 1);
            assert!(spec.entries[n].converged);
        }
    }

    #[test]
    fn coulomb_p_wave_starts_at_n_two() {
        let spec = bound_states(
            Potential::coulomb(1.0),
            1,
            1.0,
            BoundaryPolicy::DirichletOrigin,
            (-0.6, -0.1),
            1,
            &coulomb_grid(),
        )
        .unwrap();
        let e = spec.energies();
        assert_eq!(e.len(), 1);
        assert!((e[0] + 0.125).abs() < 1e-6 * 0.125);
        assert_eq!(spec.entries[0].node_count, 0);
    }

    #[test]
    fn empty_window_is_reported() {
        let err = bound_states(
            Potential::coulomb(1.0),
            0,
            1.0,
            BoundaryPolicy::DirichletOrigin,
            (-0.4, -0.2),
            3,
            &coulomb_grid(),
        );
        assert!(matches!(err, Err(SolverError::WindowEmpty { .. })));
    }

    #[test]
    fn fall_to_center_propagates() {
        let grid = RadialGrid::new(1e-4, 1.0, 2000).unwrap();
        let err = bound_states(
            Potential::inverse_square(0.3),
            0,
            1.0,
            BoundaryPolicy::DirichletOrigin,
            (-10.0, 10.0),
            1,
            &grid,
        );
        assert!(matches!(
            err,
            Err(SolverError::Indicial(IndicialError::FallToCenter { .. }))
        ));
    }

    #[test]
    fn mixed_start_matches_bessel_spectrum() {
        // u = sqrt(r) [A J_P(kr) + B J_{-P}(kr)] with u(1) = 0 and the small-r
        // amplitudes fixed by theta = pi/4, r_ref = 1; P = 0.7
        let grid = RadialGrid::new(1e-6, 1.0, 20000).unwrap();
        let policy = BoundaryPolicy::square_integrable(std::f64::consts::FRAC_PI_4, 1.0).unwrap();
        let s = bound_states(
            Potential::inverse_square(-0.12),
            0,
            1.0,
            policy,
            (0.0, 20.0),
            2,
            &grid,
        )
        .unwrap();
        for (e, want) in s.energies().iter().zip([1.289349698515, 9.930895188398]) {
            assert!(((e - want) / want).abs() < 1e-7, "{e} vs {want}");
        }
    }

    #[test]
    fn mixing_needs_admissible_branch() {
        let report = RadialEquation::schrodinger(Potential::inverse_square(-0.12), 0, 1.0)
            .indicial()
            .unwrap();
        assert!(matches!(
            FrobeniusStart::for_policy(&report, BoundaryPolicy::DirichletOrigin, Some((0.5, 1.0))),
            Err(SolverError::InadmissibleBranch { .. })
        ));
        let ok = RadialEquation::schrodinger(Potential::inverse_square(0.08), 0, 1.0)
            .indicial()
            .unwrap();
        let start =
            FrobeniusStart::for_policy(&ok, BoundaryPolicy::DirichletOrigin, Some((0.5, 1.0)))
                .unwrap();
        assert_eq!(start.theta, 0.5);
    }

    #[test]
    fn kg_fall_to_center() {
        let grid = coulomb_grid();
        let err = kg_bound_states(
            Potential::coulomb(0.6),
            0,
            1.0,
            BoundaryPolicy::DirichletOrigin,
            (0.5, 0.999),
            2,
            &grid,
            &ShootingOptions::default(),
        );
        assert!(matches!(err, Err(SolverError::KgFallToCenter { .. })));
    }

    #[test]
    fn slope_fit_of_exact_power() {
        let grid = RadialGrid::new(1e-3, 1.0, 1000).unwrap();
        let u = grid.sample(|r| r * r);
        let fit = origin_slope_fit(&grid, &u, (1e-3, 0.1)).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-10);
        assert!(fit.std_error < 1e-10);
        let w = grid.sample(|r| r - 0.05);
        assert!(matches!(
            origin_slope_fit(&grid, &w, (1e-3, 0.1)),
            Err(SolverError::NonPositiveSamples)
        ));
    }
}
