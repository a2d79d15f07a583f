//! Direct Cartesian check of the radial reduction.
//!
//! The full equation `-Delta psi / (2m) + V psi = E psi` is discretized with
//! the 7-point stencil on a cell-centered cube (no node at the origin) with
//! zero boundary values. Low eigenvalues come from a matrix-free LOBPCG
//! iteration preconditioned by the exact inverse of the shifted discrete
//! kinetic operator, which the type-I sine transform diagonalizes.
//!
//! [`point_defect_3d`] applies the same stencil to `psi = u(r) / r` near the
//! origin and integrates `Delta_h psi - u''(r) / r` over the central cells.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::deltaprobe::extrapolate_to_origin;
use crate::error::{Oracle3dError, ProbeError};
use crate::model::{Potential, RadialGrid};

/// Largest number of eigenvalues [`lowest_eigenvalues_3d`] will compute.
pub const MAX_EIGENVALUES: usize = 5;
/// Element chunk of every parallel reduction; fixed so sums do not depend on
/// the thread count.
const CHUNK: usize = 8192;

/// Cube `[-L, L]^3` with `n` cells per axis and nodes at the cell centers
/// `x_i = (i + 1/2) h - L`, `h = 2L / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CartesianGrid {
    half_width: f64,
    n_per_axis: usize,
}

impl CartesianGrid {
    pub fn new(half_width: f64, n_per_axis: usize) -> Result<Self, Oracle3dError> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Oracle3dError::InvalidGrid(format!(
                "half width must be finite and positive, got {half_width}"
            )));
        }
        if n_per_axis < 16 || !n_per_axis.is_multiple_of(2) {
            return Err(Oracle3dError::InvalidGrid(format!(
                "points per axis must be even and at least 16, got {n_per_axis}"
            )));
        }
        Ok(CartesianGrid {
            half_width,
            n_per_axis,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n_per_axis as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing() - self.half_width
    }

    /// Total number of nodes, `n^3`.
    pub fn len(&self) -> usize {
        self.n_per_axis.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn radius(&self, i: usize, j: usize, k: usize) -> f64 {
        let (x, y, z) = (self.coordinate(i), self.coordinate(j), self.coordinate(k));
        (x * x + y * y + z * z).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Bound on `||H psi - E psi|| / ||psi||` for every returned pair.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Seed of the random starting block.
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tolerance: 1e-8,
            max_iterations: 1000,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum3d {
    pub potential: Potential,
    pub mass: f64,
    pub grid: CartesianGrid,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// `-Delta_h / (2m) + V` with zero boundary values.
struct Hamiltonian {
    n: usize,
    kinetic: f64,
    potential: Vec<f64>,
}

impl Hamiltonian {
    fn new(p: &Potential, mass: f64, grid: &CartesianGrid) -> Self {
        let n = grid.n_per_axis;
        let h = grid.spacing();
        let mut potential = vec![0.0; grid.len()];
        potential
            .par_chunks_mut(n * n)
            .enumerate()
            .for_each(|(i, slab)| {
                for j in 0..n {
                    for k in 0..n {
                        slab[j * n + k] = p.value_unchecked(grid.radius(i, j, k), mass);
                    }
                }
            });
        Hamiltonian {
            n,
            kinetic: 1.0 / (2.0 * mass * h * h),
            potential,
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        let c = self.kinetic;
        y.par_chunks_mut(n * n).enumerate().for_each(|(i, slab)| {
            let base = i * n * n;
            for j in 0..n {
                for k in 0..n {
                    let idx = base + j * n + k;
                    let mut nb = 0.0;
                    if i > 0 {
                        nb += x[idx - n * n];
                    }
                    if i + 1 < n {
                        nb += x[idx + n * n];
                    }
                    if j > 0 {
                        nb += x[idx - n];
                    }
                    if j + 1 < n {
                        nb += x[idx + n];
                    }
                    if k > 0 {
                        nb += x[idx - 1];
                    }
                    if k + 1 < n {
                        nb += x[idx + 1];
                    }
                    slab[j * n + k] = c * (6.0 * x[idx] - nb) + self.potential[idx] * x[idx];
                }
            }
        });
    }

    fn applied(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.apply(x, &mut y);
        y
    }
}

/// Exact inverse of `-Delta_h / (2m) + shift` through three type-I sine
/// transforms.
struct KineticInverse {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    /// Eigenvalues of the 1D second-difference operator over `2m`.
    lambda: Vec<f64>,
    shift: f64,
}

impl KineticInverse {
    fn new(grid: &CartesianGrid, mass: f64, shift: f64) -> Self {
        let n = grid.n_per_axis;
        let h = grid.spacing();
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        let lambda = (1..=n)
            .map(|j| {
                let t = std::f64::consts::PI * j as f64 / (n + 1) as f64;
                (2.0 - 2.0 * t.cos()) / (h * h * 2.0 * mass)
            })
            .collect();
        KineticInverse {
            n,
            fft,
            lambda,
            shift,
        }
    }

    /// Unnormalized DST-I of two lines at once, in place: the odd extensions
    /// go into the real and imaginary parts of a single complex transform.
    fn dst_pair(
        &self,
        first: &mut [f64],
        second: &mut [f64],
        buf: &mut [Complex<f64>],
        scratch: &mut [Complex<f64>],
    ) {
        let n = self.n;
        buf[0] = Complex::new(0.0, 0.0);
        buf[n + 1] = Complex::new(0.0, 0.0);
        for j in 0..n {
            buf[j + 1] = Complex::new(first[j], second[j]);
            buf[2 * n + 1 - j] = Complex::new(-first[j], -second[j]);
        }
        self.fft.process_with_scratch(buf, scratch);
        for k in 0..n {
            first[k] = -0.5 * buf[k + 1].im;
            second[k] = 0.5 * buf[k + 1].re;
        }
    }

    fn transform_axis(&self, data: &mut [f64], axis: usize) {
        let n = self.n;
        let stride = [n * n, n, 1][axis];
        let line_start = |line: usize| match axis {
            0 => line,
            1 => (line / n) * n * n + line % n,
            _ => line * n,
        };
        let scratch_len = self.fft.get_inplace_scratch_len();
        let mut lines = vec![0.0; n * n * n];
        // n^2 lines, an even count, processed in pairs
        lines.par_chunks_mut(2 * n).enumerate().for_each_init(
            || {
                (
                    vec![Complex::new(0.0, 0.0); 2 * (n + 1)],
                    vec![Complex::new(0.0, 0.0); scratch_len],
                )
            },
            |(buf, scratch), (pair, values)| {
                for (half, line) in values.chunks_mut(n).enumerate() {
                    let s = line_start(2 * pair + half);
                    for (t, v) in line.iter_mut().enumerate() {
                        *v = data[s + t * stride];
                    }
                }
                let (first, second) = values.split_at_mut(n);
                self.dst_pair(first, second, buf, scratch);
            },
        );
        for (line, values) in lines.chunks(n).enumerate() {
            let s = line_start(line);
            for (t, v) in values.iter().enumerate() {
                data[s + t * stride] = *v;
            }
        }
    }

    fn apply(&self, r: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut data = r.to_vec();
        for axis in 0..3 {
            self.transform_axis(&mut data, axis);
        }
        let norm = (2.0 / (n + 1) as f64).powi(3);
        data.par_chunks_mut(n * n)
            .enumerate()
            .for_each(|(a, slab)| {
                for b in 0..n {
                    for c in 0..n {
                        let d = self.lambda[a] + self.lambda[b] + self.lambda[c] + self.shift;
                        slab[b * n + c] *= norm / d;
                    }
                }
            });
        for axis in 0..3 {
            self.transform_axis(&mut data, axis);
        }
        data
    }
}

/// Dot product with eight independent accumulators (vectorizes; the order
/// of operations is fixed).
fn dot_kernel(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(p, q)| p * q)
        .sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    acc.iter().sum::<f64>() + tail
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| dot_kernel(x, y))
        .collect();
    partial.iter().sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `a^T b` for two blocks of column vectors.
fn gram(a: &[Vec<f64>], b: &[Vec<f64>]) -> DMatrix<f64> {
    let len = a[0].len();
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<DMatrix<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let range = c * CHUNK..((c + 1) * CHUNK).min(len);
            DMatrix::from_fn(a.len(), b.len(), |i, j| {
                dot_kernel(&a[i][range.clone()], &b[j][range.clone()])
            })
        })
        .collect();
    partial
        .into_iter()
        .fold(DMatrix::zeros(a.len(), b.len()), |acc, m| acc + m)
}

/// `a^T a`, computing the upper triangle only.
fn gram_sym(a: &[Vec<f64>]) -> DMatrix<f64> {
    let len = a[0].len();
    let m = a.len();
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<DMatrix<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let range = c * CHUNK..((c + 1) * CHUNK).min(len);
            let mut g = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in i..m {
                    let v = dot_kernel(&a[i][range.clone()], &a[j][range.clone()]);
                    g[(i, j)] = v;
                    g[(j, i)] = v;
                }
            }
            g
        })
        .collect();
    partial
        .into_iter()
        .fold(DMatrix::zeros(m, m), |acc, g| acc + g)
}

/// Columns `basis * coeffs[rows, ..]`, built chunk by chunk so each output
/// piece stays in cache while the inputs stream past.
fn combine(
    basis: &[Vec<f64>],
    coeffs: &DMatrix<f64>,
    rows: std::ops::Range<usize>,
) -> Vec<Vec<f64>> {
    let len = basis[0].len();
    let mut out = vec![vec![0.0; len]; coeffs.ncols()];
    let mut pieces: Vec<Vec<&mut [f64]>> = (0..len.div_ceil(CHUNK)).map(|_| Vec::new()).collect();
    for column in out.iter_mut() {
        for (c, piece) in column.chunks_mut(CHUNK).enumerate() {
            pieces[c].push(piece);
        }
    }
    pieces
        .into_par_iter()
        .enumerate()
        .for_each(|(c, mut cols)| {
            let start = c * CHUNK;
            for i in rows.clone() {
                for (j, piece) in cols.iter_mut().enumerate() {
                    let f = coeffs[(i, j)];
                    let src = &basis[i][start..start + piece.len()];
                    piece.iter_mut().zip(src).for_each(|(o, b)| *o += f * b);
                }
            }
        });
    out
}

/// Removes the span of the orthonormal block `x` from each column of `w`
/// (twice, for stability), normalizes, and drops columns that vanish.
fn orthogonalize_against(x: &[Vec<f64>], w: &mut Vec<Vec<f64>>) {
    for _ in 0..2 {
        let c = gram(x, w);
        w.par_iter_mut().enumerate().for_each(|(j, wj)| {
            for (i, xi) in x.iter().enumerate() {
                let f = c[(i, j)];
                wj.iter_mut().zip(xi).for_each(|(a, b)| *a -= f * b);
            }
        });
    }
    w.retain_mut(|wj| {
        let nrm = norm(wj);
        if nrm > 0.0 && nrm.is_finite() {
            wj.iter_mut().for_each(|a| *a /= nrm);
            true
        } else {
            false
        }
    });
}

/// Ritz pairs of `H` on span(`s`), lowest `count`, as coefficient columns.
fn rayleigh_ritz(
    s: &[Vec<f64>],
    hs: &[Vec<f64>],
    count: usize,
) -> Result<(Vec<f64>, DMatrix<f64>), Oracle3dError> {
    let g = gram_sym(s);
    let a = gram(s, hs);
    let a = (&a + a.transpose()) * 0.5;
    let ge = SymmetricEigen::new(g);
    let top = ge.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let kept: Vec<usize> = (0..ge.eigenvalues.len())
        .filter(|&i| ge.eigenvalues[i] > 1e-12 * top)
        .collect();
    if kept.len() < count {
        return Err(Oracle3dError::InvalidInput(
            "search space collapsed below the block size".into(),
        ));
    }
    let z = DMatrix::from_fn(s.len(), kept.len(), |r, c| {
        ge.eigenvectors[(r, kept[c])] / ge.eigenvalues[kept[c]].sqrt()
    });
    let reduced = z.transpose() * a * &z;
    let reduced = (&reduced + reduced.transpose()) * 0.5;
    let re = SymmetricEigen::new(reduced);
    let mut order: Vec<usize> = (0..re.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| re.eigenvalues[i].total_cmp(&re.eigenvalues[j]));
    let values = order[..count].iter().map(|&i| re.eigenvalues[i]).collect();
    let y = DMatrix::from_fn(kept.len(), count, |r, c| re.eigenvectors[(r, order[c])]);
    Ok((values, z * y))
}

/// The `k` smallest eigenvalues of the discretized Hamiltonian with the
/// default [`EigenOptions`].
pub fn lowest_eigenvalues_3d(
    potential: Potential,
    mass: f64,
    grid: &CartesianGrid,
    k: usize,
) -> Result<Spectrum3d, Oracle3dError> {
    lowest_eigenvalues_3d_with(potential, mass, grid, k, &EigenOptions::default())
}

pub fn lowest_eigenvalues_3d_with(
    potential: Potential,
    mass: f64,
    grid: &CartesianGrid,
    k: usize,
    options: &EigenOptions,
) -> Result<Spectrum3d, Oracle3dError> {
    potential.validate()?;
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Oracle3dError::InvalidInput(format!(
            "mass must be positive, got {mass}"
        )));
    }
    if k == 0 || k > MAX_EIGENVALUES {
        return Err(Oracle3dError::InvalidInput(format!(
            "can compute 1 to {MAX_EIGENVALUES} eigenvalues, asked for {k}"
        )));
    }
    if !(options.tolerance > 0.0) || options.max_iterations == 0 {
        return Err(Oracle3dError::InvalidInput(
            "tolerance and iteration cap must be positive".into(),
        ));
    }
    let ham = Hamiltonian::new(&potential, mass, grid);
    let len = grid.len();
    let block = k + 3;
    // kinetic floor of the box; keeps the preconditioner positive definite
    let floor = 3.0
        * ham.kinetic
        * (2.0 - 2.0 * (std::f64::consts::PI / (grid.n_per_axis + 1) as f64).cos());

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    // random block smoothed by the kinetic inverse
    let smoother = KineticInverse::new(grid, mass, floor);
    let mut x: Vec<Vec<f64>> = (0..block)
        .map(|_| {
            let noise: Vec<f64> = (0..len).map(|_| rng.random::<f64>() - 0.5).collect();
            smoother.apply(&smoother.apply(&noise))
        })
        .collect();
    let mut hx: Vec<Vec<f64>> = x.iter().map(|v| ham.applied(v)).collect();
    let (mut values, c) = rayleigh_ritz(&x, &hx, block)?;
    x = combine(&x, &c, 0..block);
    hx = combine(&hx, &c, 0..block);
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut hp: Vec<Vec<f64>> = Vec::new();
    let mut worst = f64::INFINITY;

    for iteration in 1..=options.max_iterations {
        if iteration % 20 == 0 {
            hx = x.iter().map(|v| ham.applied(v)).collect();
        }
        let residual: Vec<Vec<f64>> = x
            .par_iter()
            .zip(hx.par_iter())
            .zip(values.par_iter())
            .map(|((xi, hxi), &lam)| hxi.iter().zip(xi).map(|(a, b)| a - lam * b).collect())
            .collect();
        let res_norms: Vec<f64> = residual
            .iter()
            .zip(&x)
            .map(|(r, xi)| norm(r) / norm(xi))
            .collect();
        worst = res_norms[..k].iter().cloned().fold(0.0, f64::max);
        if worst <= options.tolerance {
            // confirm against a fresh application of H
            let exact: Vec<f64> = (0..k)
                .map(|i| {
                    let hxi = ham.applied(&x[i]);
                    let r: Vec<f64> = hxi
                        .iter()
                        .zip(&x[i])
                        .map(|(a, b)| a - values[i] * b)
                        .collect();
                    norm(&r) / norm(&x[i])
                })
                .collect();
            if exact.iter().all(|&r| r <= options.tolerance) {
                return Ok(Spectrum3d {
                    potential,
                    mass,
                    grid: *grid,
                    eigenvalues: values[..k].to_vec(),
                    residuals: exact,
                    iterations: iteration,
                });
            }
            hx = x.iter().map(|v| ham.applied(v)).collect();
            continue;
        }

        let shift = floor.max(values[0].abs());
        let precond = KineticInverse::new(grid, mass, shift);
        let mut w: Vec<Vec<f64>> = residual.iter().map(|r| precond.apply(r)).collect();
        orthogonalize_against(&x, &mut w);
        let hw: Vec<Vec<f64>> = w.iter().map(|v| ham.applied(v)).collect();

        // normalize the previous direction block
        for (pi, hpi) in p.iter_mut().zip(hp.iter_mut()) {
            let nrm = norm(pi);
            if nrm > 0.0 {
                pi.iter_mut().for_each(|a| *a /= nrm);
                hpi.iter_mut().for_each(|a| *a /= nrm);
            }
        }

        let mut s = x.clone();
        s.extend(w);
        s.extend(p.iter().cloned());
        let mut hs = hx.clone();
        hs.extend(hw);
        hs.extend(hp.iter().cloned());

        let (new_values, c) = rayleigh_ritz(&s, &hs, block)?;
        p = combine(&s, &c, block..s.len());
        hp = combine(&hs, &c, block..s.len());
        x = combine(&s, &c, 0..s.len());
        hx = combine(&hs, &c, 0..s.len());
        values = new_values;
    }
    Err(Oracle3dError::NoConvergence {
        iterations: options.max_iterations,
        residual: worst,
    })
}

/// Radial samples `u(r_i)` together with the value extrapolated to `r = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    grid: RadialGrid,
    samples: Vec<f64>,
    origin_value: f64,
}

/// Points in each local polynomial fit.
const FIT_POINTS: usize = 5;

impl RadialProfile {
    pub fn new(grid: RadialGrid, samples: Vec<f64>) -> Result<Self, ProbeError> {
        if samples.len() != grid.len() {
            return Err(ProbeError::SampleCount {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        if samples.iter().any(|u| !u.is_finite()) {
            return Err(ProbeError::InvalidInput(
                "profile samples must be finite".into(),
            ));
        }
        let origin_value = extrapolate_to_origin(&grid, &samples);
        Ok(RadialProfile {
            grid,
            samples,
            origin_value,
        })
    }

    pub fn from_fn(grid: RadialGrid, u: impl Fn(f64) -> f64) -> Result<Self, ProbeError> {
        let samples = grid.sample(u);
        Self::new(grid, samples)
    }

    pub fn origin_value(&self) -> f64 {
        self.origin_value
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    /// `(r_j, u_j)` with the origin prepended as index 0.
    fn point(&self, j: usize) -> (f64, f64) {
        if j == 0 {
            (0.0, self.origin_value)
        } else {
            (self.grid.node(j - 1), self.samples[j - 1])
        }
    }

    /// `u(r)` and `u''(r)` from a local quartic through the nearest samples.
    fn local(&self, r: f64) -> Result<(f64, f64), ProbeError> {
        let count = self.samples.len() + 1;
        if !(r >= 0.0 && r <= self.grid.r_max()) {
            return Err(ProbeError::ProbeOutsideGrid { a: r });
        }
        let centre = if r < self.grid.r_min() {
            0
        } else {
            self.grid.nearest_index(r) + 1
        };
        let first = centre
            .saturating_sub(FIT_POINTS / 2)
            .min(count - FIT_POINTS);
        let h = self.grid.spacing();
        // Vandermonde in t = (r_j - r) / h
        let mut vand = DMatrix::zeros(FIT_POINTS, FIT_POINTS);
        let mut rhs = nalgebra::DVector::zeros(FIT_POINTS);
        for row in 0..FIT_POINTS {
            let (rj, uj) = self.point(first + row);
            let t = (rj - r) / h;
            let mut tp = 1.0;
            for col in 0..FIT_POINTS {
                vand[(row, col)] = tp;
                tp *= t;
            }
            rhs[row] = uj;
        }
        let coef = vand
            .lu()
            .solve(&rhs)
            .ok_or_else(|| ProbeError::InvalidInput("degenerate sample spacing".into()))?;
        Ok((coef[0], 2.0 * coef[2] / (h * h)))
    }
}

/// Defect over the default central block of 2 x 2 x 2 cells.
pub fn point_defect_3d(
    profile: &RadialProfile,
    grid: &CartesianGrid,
) -> Result<f64, Oracle3dError> {
    point_defect_3d_block(profile, grid, 2)
}

/// `sum over the central cells^3 of [Delta_h psi - u''(r)/r] h^3` with
/// `psi = u(r) / r`. For a fixed physical block (cells growing with the
/// resolution) this tends to `-4 pi u(0)`.
pub fn point_defect_3d_block(
    profile: &RadialProfile,
    grid: &CartesianGrid,
    cells: usize,
) -> Result<f64, Oracle3dError> {
    let n = grid.n_per_axis;
    if cells == 0 || !cells.is_multiple_of(2) || cells + 2 > n {
        return Err(Oracle3dError::InvalidInput(format!(
            "central block needs an even cell count below {}, got {cells}",
            n - 1
        )));
    }
    let h = grid.spacing();
    let lo = n / 2 - cells / 2;
    // psi on the block plus a one-cell halo
    let side = cells + 2;
    let mut psi = vec![0.0; side * side * side];
    let at = |a: usize, b: usize, c: usize| (a * side + b) * side + c;
    for a in 0..side {
        for b in 0..side {
            for c in 0..side {
                let r = grid.radius(lo + a - 1, lo + b - 1, lo + c - 1);
                psi[at(a, b, c)] = profile.local(r)?.0 / r;
            }
        }
    }
    let mut total = 0.0;
    for a in 1..=cells {
        for b in 1..=cells {
            for c in 1..=cells {
                let lap = (psi[at(a - 1, b, c)]
                    + psi[at(a + 1, b, c)]
                    + psi[at(a, b - 1, c)]
                    + psi[at(a, b + 1, c)]
                    + psi[at(a, b, c - 1)]
                    + psi[at(a, b, c + 1)]
                    - 6.0 * psi[at(a, b, c)])
                    / (h * h);
                let r = grid.radius(lo + a - 1, lo + b - 1, lo + c - 1);
                let (_, upp) = profile.local(r)?;
                total += (lap - upp / r) * h * h * h;
            }
        }
    }
    Ok(total)
}
