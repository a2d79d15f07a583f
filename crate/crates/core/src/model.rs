//! Central potentials, their behaviour at the origin, and the uniform radial grid.
//!
//! Units: hbar = 1. The particle mass is passed explicitly wherever the
//! kinetic scale matters (the harmonic well and every `2m(E - V)` term).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Central potential, tagged by how it behaves as `r -> 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `V = -alpha / r`
    Coulomb { alpha: f64 },
    /// `V = -v0 / r^2`; `v0 > 0` is attractive.
    InverseSquare { v0: f64 },
    /// `V = g / r^n`
    PowerLaw { g: f64, n: f64 },
    /// `V = m omega^2 r^2 / 2`
    Harmonic { omega: f64 },
    /// `-v0 / r^2` outside `r_core`, flat plateau `-v0 / r_core^2` inside.
    RegularizedInverseSquare { v0: f64, r_core: f64 },
}

/// Leading behaviour of `r^2 V(r)` at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum OriginClass {
    /// `r^2 V -> 0`
    Regular,
    /// `r^2 V -> -v0`. A negative `v0` is the repulsive inverse square.
    TransitiveSingular { v0: f64 },
    /// `V = g / r^n` with `n > 2`.
    StronglySingular { n: f64, g: f64 },
}

impl Potential {
    pub fn coulomb(alpha: f64) -> Self {
        Potential::Coulomb { alpha }
    }

    pub fn inverse_square(v0: f64) -> Self {
        Potential::InverseSquare { v0 }
    }

    pub fn harmonic(omega: f64) -> Self {
        Potential::Harmonic { omega }
    }

    pub fn power_law(g: f64, n: f64) -> Result<Self, ModelError> {
        let p = Potential::PowerLaw { g, n };
        p.validate()?;
        Ok(p)
    }

    pub fn regularized_inverse_square(v0: f64, r_core: f64) -> Result<Self, ModelError> {
        let p = Potential::RegularizedInverseSquare { v0, r_core };
        p.validate()?;
        Ok(p)
    }

    /// Checks the parameter invariants (finite couplings, `n > 0`, `r_core > 0`).
    pub fn validate(&self) -> Result<(), ModelError> {
        let finite = |name: &'static str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(ModelError::InvalidParameter { name, value: x })
            }
        };
        match *self {
            Potential::Coulomb { alpha } => finite("alpha", alpha),
            Potential::InverseSquare { v0 } => finite("v0", v0),
            Potential::PowerLaw { g, n } => {
                finite("g", g)?;
                finite("n", n)?;
                if n <= 0.0 {
                    return Err(ModelError::InvalidParameter {
                        name: "n",
                        value: n,
                    });
                }
                Ok(())
            }
            Potential::Harmonic { omega } => finite("omega", omega),
            Potential::RegularizedInverseSquare { v0, r_core } => {
                finite("v0", v0)?;
                finite("r_core", r_core)?;
                if r_core <= 0.0 {
                    return Err(ModelError::InvalidParameter {
                        name: "r_core",
                        value: r_core,
                    });
                }
                Ok(())
            }
        }
    }

    /// True when `V(0)` is finite, i.e. `r = 0` is an allowed argument.
    pub fn finite_at_origin(&self) -> bool {
        matches!(
            self,
            Potential::Harmonic { .. } | Potential::RegularizedInverseSquare { .. }
        )
    }

    /// `V(r)` for a particle of the given mass.
    pub fn evaluate(&self, r: f64, mass: f64) -> Result<f64, ModelError> {
        if r.is_nan() || r < 0.0 || (r == 0.0 && !self.finite_at_origin()) {
            return Err(ModelError::Domain { r });
        }
        Ok(self.value_unchecked(r, mass))
    }

    /// Same as [`evaluate`](Self::evaluate) without the domain check; callers
    /// guarantee `r > 0`.
    #[inline]
    pub(crate) fn value_unchecked(&self, r: f64, mass: f64) -> f64 {
        match *self {
            Potential::Coulomb { alpha } => -alpha / r,
            Potential::InverseSquare { v0 } => -v0 / (r * r),
            Potential::PowerLaw { g, n } => g * r.powf(-n),
            Potential::Harmonic { omega } => 0.5 * mass * omega * omega * r * r,
            Potential::RegularizedInverseSquare { v0, r_core } => {
                let rr = r.max(r_core);
                -v0 / (rr * rr)
            }
        }
    }

    /// Classifies the origin by the limit of `r^2 V(r)`.
    pub fn classify_origin(&self) -> Result<OriginClass, ModelError> {
        self.validate()?;
        Ok(match *self {
            Potential::Coulomb { .. }
            | Potential::Harmonic { .. }
            | Potential::RegularizedInverseSquare { .. } => OriginClass::Regular,
            Potential::InverseSquare { v0 } => {
                if v0 == 0.0 {
                    OriginClass::Regular
                } else {
                    OriginClass::TransitiveSingular { v0 }
                }
            }
            Potential::PowerLaw { g, n } => {
                if g == 0.0 || n < 2.0 {
                    OriginClass::Regular
                } else if n == 2.0 {
                    if g < 0.0 {
                        OriginClass::TransitiveSingular { v0: -g }
                    } else {
                        return Err(ModelError::Unclassifiable { g, n });
                    }
                } else {
                    OriginClass::StronglySingular { n, g }
                }
            }
        })
    }

    /// Power-series coefficients of `2 m r^2 V(r)` about the origin as
    /// `(power, coefficient)` pairs. Only integer powers are listed; a
    /// non-integer power law contributes nothing beyond its leading class.
    pub(crate) fn origin_series(&self, mass: f64) -> Vec<(usize, f64)> {
        let two_m = 2.0 * mass;
        match *self {
            Potential::Coulomb { alpha } => vec![(1, -two_m * alpha)],
            Potential::InverseSquare { v0 } => vec![(0, -two_m * v0)],
            Potential::PowerLaw { g, n } => {
                let k = 2.0 - n;
                if k >= 0.0 && k.fract() == 0.0 {
                    vec![(k as usize, two_m * g)]
                } else {
                    Vec::new()
                }
            }
            Potential::Harmonic { omega } => vec![(4, mass * mass * omega * omega)],
            Potential::RegularizedInverseSquare { v0, r_core } => {
                vec![(2, -two_m * v0 / (r_core * r_core))]
            }
        }
    }

    /// Radius below which the origin series above is exact (infinite when
    /// the series is the whole potential).
    pub(crate) fn origin_series_radius(&self) -> f64 {
        match *self {
            Potential::RegularizedInverseSquare { r_core, .. } => r_core,
            _ => f64::INFINITY,
        }
    }
}

impl fmt::Display for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Potential::Coulomb { alpha } => write!(f, "coulomb:alpha={alpha}"),
            Potential::InverseSquare { v0 } => write!(f, "invsq:v0={v0}"),
            Potential::PowerLaw { g, n } => write!(f, "power:g={g},n={n}"),
            Potential::Harmonic { omega } => write!(f, "harmonic:omega={omega}"),
            Potential::RegularizedInverseSquare { v0, r_core } => {
                write!(f, "invsq-reg:v0={v0},rcore={r_core}")
            }
        }
    }
}

impl FromStr for Potential {
    type Err = ModelError;

    /// Parses `kind:key=value[,key=value]`, e.g. `power:g=0.1,n=3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let perr = |position: usize, token: &str, message: &str| ModelError::Parse {
            position,
            token: token.to_string(),
            message: message.to_string(),
        };
        let (kind, rest, rest_at) = match s.find(':') {
            Some(i) => (&s[..i], &s[i + 1..], i + 1),
            None => return Err(perr(0, s, "expected `kind:key=value`")),
        };
        let expected: &[&str] = match kind {
            "coulomb" => &["alpha"],
            "invsq" => &["v0"],
            "power" => &["g", "n"],
            "harmonic" => &["omega"],
            "invsq-reg" => &["v0", "rcore"],
            _ => return Err(perr(0, kind, "unknown potential kind")),
        };

        let mut values = vec![None; expected.len()];
        let mut offset = rest_at;
        for item in rest.split(',') {
            let at = offset;
            offset += item.len() + 1;
            let (key, value) = match item.split_once('=') {
                Some(kv) => kv,
                None => return Err(perr(at, item, "expected `key=value`")),
            };
            let slot = expected
                .iter()
                .position(|k| *k == key)
                .ok_or_else(|| perr(at, key, "unexpected parameter"))?;
            if values[slot].is_some() {
                return Err(perr(at, key, "duplicate parameter"));
            }
            let value_at = at + key.len() + 1;
            let x: f64 = value
                .parse()
                .map_err(|_| perr(value_at, value, "not a number"))?;
            if !x.is_finite() {
                return Err(perr(value_at, value, "not a finite number"));
            }
            values[slot] = Some(x);
        }
        if let Some(i) = values.iter().position(Option::is_none) {
            return Err(perr(s.len(), expected[i], "missing parameter"));
        }
        let v: Vec<f64> = values.into_iter().flatten().collect();
        let p = match kind {
            "coulomb" => Potential::Coulomb { alpha: v[0] },
            "invsq" => Potential::InverseSquare { v0: v[0] },
            "power" => Potential::PowerLaw { g: v[0], n: v[1] },
            "harmonic" => Potential::Harmonic { omega: v[0] },
            _ => Potential::RegularizedInverseSquare {
                v0: v[0],
                r_core: v[1],
            },
        };
        p.validate()?;
        Ok(p)
    }
}

/// Uniform grid `r_i = r_min + i h` on `[r_min, r_max]`, never touching `r = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r_min: f64,
    r_max: f64,
    n_points: usize,
}

impl RadialGrid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(r_min: f64, r_max: f64, n_points: usize) -> Result<Self, ModelError> {
        if !(r_min.is_finite() && r_max.is_finite()) || r_min <= 0.0 || r_max <= r_min {
            return Err(ModelError::InvalidGrid(format!(
                "need 0 < r_min < r_max, got r_min={r_min}, r_max={r_max}"
            )));
        }
        if n_points < Self::MIN_POINTS {
            return Err(ModelError::InvalidGrid(format!(
                "need at least {} points, got {n_points}",
                Self::MIN_POINTS
            )));
        }
        Ok(RadialGrid {
            r_min,
            r_max,
            n_points,
        })
    }

    /// Grid `h, 2h, ..., n h`: the natural choice when probing the origin.
    pub fn from_spacing(h: f64, n_points: usize) -> Result<Self, ModelError> {
        Self::new(h, h * n_points as f64, n_points)
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.r_max - self.r_min) / (self.n_points - 1) as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        self.r_min + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_points)
            .map(|i| self.r_min + i as f64 * h)
            .collect()
    }

    /// Samples `f` on every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().into_iter().map(f).collect()
    }

    /// Index of the node closest to `r` (clamped to the grid).
    pub fn nearest_index(&self, r: f64) -> usize {
        let x = ((r - self.r_min) / self.spacing()).round();
        if x <= 0.0 {
            0
        } else {
            (x as usize).min(self.n_points - 1)
        }
    }

    /// Same grid stretched by `factor` (both ends and the spacing).
    pub fn scaled(&self, factor: f64) -> Result<Self, ModelError> {
        Self::new(self.r_min * factor, self.r_max * factor, self.n_points)
    }

    /// Same interval with twice as many intervals (`h -> h / 2`).
    pub fn refined(&self) -> Self {
        RadialGrid {
            n_points: 2 * (self.n_points - 1) + 1,
            ..*self
        }
    }
}

impl FromStr for RadialGrid {
    type Err = ModelError;

    /// Parses `rmin,rmax,n`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(ModelError::InvalidGrid(format!(
                "expected `rmin,rmax,n`, got `{s}`"
            )));
        }
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| ModelError::InvalidGrid(format!("`{t}` is not a number")))
        };
        let n = parts[2]
            .parse::<usize>()
            .map_err(|_| ModelError::InvalidGrid(format!("`{}` is not a count", parts[2])))?;
        Self::new(num(parts[0])?, num(parts[1])?, n)
    }
}
