//! Sampled fields along the profile parameter `u`.
//!
//! A [`ScalarField`] either carries exact derivative samples ("jets") up to
//! some order, in which case arithmetic propagates them by the Leibniz rule,
//! or only values, in which case derivatives come from 4th-order stencils.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lorentz::{inner, LorentzVector};

/// Jet order given to exactly constant fields.
pub const MAX_JET_ORDER: usize = 32;

/// Minimum number of grid samples.
pub const MIN_SAMPLES: usize = 16;

/// Default sample count.
pub const DEFAULT_N: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub u_min: f64,
    pub u_max: f64,
    #[serde(default)]
    pub periodic: bool,
}

impl GridSpec {
    pub fn new(n: usize, u_min: f64, u_max: f64, periodic: bool) -> Result<Self> {
        let g = Self {
            n,
            u_min,
            u_max,
            periodic,
        };
        g.validate()?;
        Ok(g)
    }

    /// Unit interval `[0, 1]` with `n` points, non-periodic.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(n, 0.0, 1.0, false)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_SAMPLES {
            return Err(Error::InvalidGrid(format!(
                "n = {} is below the minimum of {MIN_SAMPLES}",
                self.n
            )));
        }
        if !(self.u_min.is_finite() && self.u_max.is_finite()) || self.u_max <= self.u_min {
            return Err(Error::InvalidGrid(format!(
                "need finite u_max > u_min (got [{}, {}])",
                self.u_min, self.u_max
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        let span = self.u_max - self.u_min;
        if self.periodic {
            span / self.n as f64
        } else {
            span / (self.n - 1) as f64
        }
    }

    pub fn point(&self, i: usize) -> f64 {
        self.u_min + i as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeSource {
    Analytic,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    /// `jets[j][i]` is the j-th derivative at grid point i.
    jets: Vec<Vec<f64>>,
    source: DerivativeSource,
}

impl ScalarField {
    /// Values only; derivatives will come from stencils.
    pub fn from_samples(grid: GridSpec, samples: Vec<f64>) -> Result<Self> {
        Self::checked(grid, vec![samples], DerivativeSource::FiniteDifference)
    }

    /// Exact derivative samples `jets[0..=order]`.
    pub fn analytic(grid: GridSpec, jets: Vec<Vec<f64>>) -> Result<Self> {
        if jets.is_empty() {
            return Err(Error::InvalidProfile("empty jet".into()));
        }
        Self::checked(grid, jets, DerivativeSource::Analytic)
    }

    fn checked(grid: GridSpec, jets: Vec<Vec<f64>>, source: DerivativeSource) -> Result<Self> {
        grid.validate()?;
        for row in &jets {
            if row.len() != grid.n {
                return Err(Error::GridMismatch);
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("scalar field".into()));
            }
        }
        Ok(Self { grid, jets, source })
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        let mut jets = vec![vec![0.0; grid.n]; MAX_JET_ORDER + 1];
        jets[0].fill(value);
        Self {
            grid,
            jets,
            source: DerivativeSource::Analytic,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            grid: self.grid,
            jets: vec![vec![0.0; self.grid.n]; self.jets.len()],
            source: self.source,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.n
    }

    pub fn is_empty(&self) -> bool {
        self.grid.n == 0
    }

    pub fn values(&self) -> &[f64] {
        &self.jets[0]
    }

    pub fn source(&self) -> DerivativeSource {
        self.source
    }

    pub fn is_analytic(&self) -> bool {
        self.source == DerivativeSource::Analytic
    }

    /// Highest derivative order known exactly (0 for sampled fields).
    pub fn jet_order(&self) -> usize {
        self.jets.len() - 1
    }

    pub fn derivative_samples(&self, order: usize) -> Option<&[f64]> {
        self.jets.get(order).map(Vec::as_slice)
    }

    /// Keep at most `order` exact derivatives.
    pub fn truncated(mut self, order: usize) -> Self {
        self.jets.truncate(order + 1);
        self
    }

    /// Derivative of order 1..=4, exact when the jet allows it.
    pub fn differentiate(&self, order: usize) -> Result<Self> {
        if !(1..=4).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        self.derivative(order)
    }

    /// Derivative of any order: exact jets when available, stencils (order <= 4) otherwise.
    pub fn derivative(&self, order: usize) -> Result<Self> {
        if order == 0 {
            return Ok(self.clone());
        }
        if self.is_analytic() && order <= self.jet_order() {
            return Ok(Self {
                grid: self.grid,
                jets: self.jets[order..].to_vec(),
                source: DerivativeSource::Analytic,
            });
        }
        if order > 4 {
            return Err(Error::UnsupportedOrder(order));
        }
        let d = fd_derivative(self.values(), &self.grid, order, self.grid.periodic)?;
        Self::from_samples(self.grid, d)
    }

    /// Stencil derivative of the values, ignoring any jets.
    pub fn fd_differentiate(&self, order: usize) -> Result<Self> {
        if !(1..=4).contains(&order) {
            return Err(Error::UnsupportedOrder(order));
        }
        let d = fd_derivative(self.values(), &self.grid, order, self.grid.periodic)?;
        Self::from_samples(self.grid, d)
    }

    fn combine_source(&self, other: &Self) -> Result<(DerivativeSource, usize)> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.is_analytic() && other.is_analytic() {
            Ok((
                DerivativeSource::Analytic,
                self.jet_order().min(other.jet_order()),
            ))
        } else {
            Ok((DerivativeSource::FiniteDifference, 0))
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let (source, order) = self.combine_source(other)?;
        let jets = (0..=order)
            .map(|j| {
                self.jets[j]
                    .iter()
                    .zip(&other.jets[j])
                    .map(|(&a, &b)| f(a, b))
                    .collect()
            })
            .collect();
        Ok(Self {
            grid: self.grid,
            jets,
            source,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + s * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            jets: self
                .jets
                .iter()
                .map(|row| row.iter().map(|x| s * x).collect())
                .collect(),
            source: self.source,
        }
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.jets[0].iter_mut().for_each(|x| *x += s);
        out
    }

    /// Pointwise product; jets combine by the Leibniz rule.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let (source, order) = self.combine_source(other)?;
        let n = self.grid.n;
        let mut jets = vec![vec![0.0; n]; order + 1];
        for (m, row) in jets.iter_mut().enumerate() {
            let mut binom = 1.0;
            for j in 0..=m {
                let a = &self.jets[j];
                let b = &other.jets[m - j];
                for i in 0..n {
                    row[i] += binom * a[i] * b[i];
                }
                binom = binom * (m - j) as f64 / (j + 1) as f64;
            }
        }
        Ok(Self {
            grid: self.grid,
            jets,
            source,
        })
    }

    /// Value at an arbitrary `u`: Taylor expansion from the nearest sample
    /// for analytic fields, cubic interpolation otherwise.
    pub fn value_at(&self, u: f64) -> f64 {
        let g = &self.grid;
        let h = g.spacing();
        let n = g.n;
        let mut x = (u - g.u_min) / h;
        if g.periodic {
            x = x.rem_euclid(n as f64);
        }
        if self.is_analytic() {
            let mut i = x.round();
            if !g.periodic {
                i = i.clamp(0.0, (n - 1) as f64);
            }
            let dx = (x - i) * h;
            let i = (i as usize) % n;
            let mut term = 1.0;
            let mut acc = 0.0;
            for (j, row) in self.jets.iter().enumerate() {
                if j > 0 {
                    term *= dx / j as f64;
                }
                acc += row[i] * term;
            }
            acc
        } else {
            let base = x.floor() as isize - 1;
            let base = if g.periodic {
                base
            } else {
                base.clamp(0, n as isize - 4)
            };
            let mut acc = 0.0;
            for a in 0..4 {
                let mut w = 1.0;
                for b in 0..4 {
                    if a != b {
                        w *= (x - (base + b) as f64) / (a as f64 - b as f64);
                    }
                }
                let idx = (base + a).rem_euclid(n as isize) as usize;
                acc += w * self.jets[0][idx];
            }
            acc
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn min_abs(&self) -> f64 {
        self.values()
            .iter()
            .fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }

    pub fn rms(&self) -> f64 {
        rms(self.values())
    }

    /// CSV with header `u,value`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u", "value"])?;
        for (i, v) in self.values().iter().enumerate() {
            w.write_record([format_real(self.grid.point(i)), format_real(*v)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn rms(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Fixed 17-significant-digit rendering used by every exporter.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Weights of the order-`m` derivative at `z` on nodes `x` (Fornberg 1988).
fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// 4th-order accurate derivative of sampled data.
///
/// Interior points use the symmetric stencil; without wrap-around the
/// boundary rows use an `order + 4` point one-sided window.
pub(crate) fn fd_derivative(
    values: &[f64],
    grid: &GridSpec,
    order: usize,
    periodic: bool,
) -> Result<Vec<f64>> {
    let n = values.len();
    let width = 2 * order.div_ceil(2) + 3;
    let half = width / 2;
    let edge = order + 4;
    if n < width.max(edge) {
        return Err(Error::GridTooSmall { n, order });
    }
    let h = grid.spacing();
    let hm = h.powi(order as i32);
    let offsets: Vec<f64> = (0..width).map(|j| j as f64 - half as f64).collect();
    let central = fornberg_weights(0.0, &offsets, order);
    // differences against the evaluation point make constants vanish exactly
    let apply = |w: &[f64], start: usize, centre: f64, wrap: bool| -> f64 {
        w.iter()
            .enumerate()
            .map(|(j, w)| {
                let idx = if wrap { (start + j) % n } else { start + j };
                w * (values[idx] - centre)
            })
            .sum::<f64>()
            / hm
    };
    let mut out = vec![0.0; n];
    if periodic {
        for (i, o) in out.iter_mut().enumerate() {
            *o = apply(&central, i + n - half, values[i], true);
        }
        return Ok(out);
    }
    let nodes: Vec<f64> = (0..edge).map(|j| j as f64).collect();
    let left: Vec<Vec<f64>> = (0..half)
        .map(|i| fornberg_weights(i as f64, &nodes, order))
        .collect();
    let right: Vec<Vec<f64>> = (0..half)
        .map(|r| fornberg_weights((edge - half + r) as f64, &nodes, order))
        .collect();
    for (i, o) in out.iter_mut().enumerate() {
        *o = if i < half {
            apply(&left[i], 0, values[i], false)
        } else if i + half >= n {
            apply(&right[i + half - n], n - edge, values[i], false)
        } else {
            apply(&central, i - half, values[i], false)
        };
    }
    Ok(out)
}

/// Lorentz-vector samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    samples: Vec<LorentzVector>,
}

impl VectorField {
    pub fn new(grid: GridSpec, samples: Vec<LorentzVector>) -> Result<Self> {
        if samples.len() != grid.n {
            return Err(Error::GridMismatch);
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector field".into()));
        }
        Ok(Self { grid, samples })
    }

    pub fn constant(grid: GridSpec, v: LorentzVector) -> Self {
        Self {
            grid,
            samples: vec![v; grid.n],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn samples(&self) -> &[LorentzVector] {
        &self.samples
    }

    pub fn get(&self, i: usize) -> &LorentzVector {
        &self.samples[i]
    }

    /// Pointwise pairing as a sampled scalar field.
    pub fn inner(&self, other: &Self) -> Result<ScalarField> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let vals = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| inner(a, b))
            .collect();
        ScalarField::from_samples(self.grid, vals)
    }

    /// `Σ coeff_k · field_k` pointwise.
    pub fn combine(grid: GridSpec, terms: &[(&[f64], &VectorField)]) -> Result<Self> {
        let mut samples = vec![LorentzVector::ZERO; grid.n];
        for (coeffs, field) in terms {
            if field.grid != grid || coeffs.len() != grid.n {
                return Err(Error::GridMismatch);
            }
            for ((s, &c), v) in samples.iter_mut().zip(coeffs.iter()).zip(&field.samples) {
                *s = s.axpy(c, v);
            }
        }
        Self::new(grid, samples)
    }

    pub fn map(&self, f: impl Fn(usize, &LorentzVector) -> LorentzVector) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, v)| f(i, v))
            .collect();
        Self::new(self.grid, samples)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        self.map(|i, v| *v + other.samples[i])
    }

    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        self.map(|i, v| v.axpy(s, &other.samples[i]))
    }

    pub fn neg(&self) -> Self {
        Self {
            grid: self.grid,
            samples: self.samples.iter().map(|v| -*v).collect(),
        }
    }

    /// Component-wise stencil derivative.
    ///
    /// Ambient curves are not closed even on periodic profile grids, so the
    /// one-sided boundary rows are always used.
    pub fn fd_differentiate(&self, order: usize) -> Result<Self> {
        let n = self.grid.n;
        let mut out = vec![LorentzVector::ZERO; n];
        for c in 0..5 {
            let comp: Vec<f64> = self.samples.iter().map(|v| v[c]).collect();
            let d = fd_derivative(&comp, &self.grid, order, false)?;
            for (o, x) in out.iter_mut().zip(d) {
                o.0[c] = x;
            }
        }
        Self::new(self.grid, out)
    }

    /// Max over the grid of the largest absolute component.
    pub fn max_norm(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, v| m.max(v.max_abs()))
    }

    pub fn mean(&self) -> LorentzVector {
        let mut acc = LorentzVector::ZERO;
        for v in &self.samples {
            acc += *v;
        }
        acc.scale(1.0 / self.samples.len() as f64)
    }

    /// Largest pointwise component deviation from the mean.
    pub fn max_deviation_from_mean(&self) -> f64 {
        let m = self.mean();
        self.samples
            .iter()
            .fold(0.0_f64, |acc, v| acc.max((*v - m).max_abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constancy {
    pub is_constant: bool,
    pub value: f64,
    pub deviation: f64,
}

/// Mean and relative spread `max|f - mean| / max(1, |mean|)`.
pub fn constancy_test(f: &ScalarField, tol: f64) -> Constancy {
    let vals = f.values();
    let value = vals.iter().sum::<f64>() / vals.len() as f64;
    let spread = vals.iter().fold(0.0_f64, |m, x| m.max((x - value).abs()));
    let deviation = spread / value.abs().max(1.0);
    Constancy {
        is_constant: deviation < tol,
        value,
        deviation,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantFit {
    pub coefficients: Vec<f64>,
    /// RMS of `target + Σ c_i basis_i` at the optimum.
    pub residual: f64,
    pub degenerate: bool,
}

/// Pivots below this fraction of the largest (unit columns) count as zero.
pub const RANK_CUTOFF: f64 = 1e-10;

/// Least-squares constants minimizing `‖target + Σ c_i basis_i‖₂`.
pub fn fit_constants(basis: &[&ScalarField], target: &ScalarField) -> Result<ConstantFit> {
    if basis.is_empty() {
        return Err(Error::EmptyBasis);
    }
    let n = target.len();
    if basis.iter().any(|b| b.grid() != target.grid()) {
        return Err(Error::GridMismatch);
    }
    let m = basis.len();
    let a = DMatrix::from_fn(n, m, |i, j| basis[j].values()[i]);
    let rhs = DVector::from_iterator(n, target.values().iter().map(|t| -t));
    let norms: Vec<f64> = a
        .column_iter()
        .map(|c| if c.norm() > 0.0 { c.norm() } else { 1.0 })
        .collect();
    let mut scaled = a.clone();
    for (j, s) in norms.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(*s);
    }
    // nalgebra's SVD mis-factors rank-deficient tall matrices; pivoted QR does not
    let qr = scaled.col_piv_qr();
    let r = qr.r();
    let lead = r[(0, 0)].abs();
    let rank = (0..m).take_while(|&i| lead > 0.0 && r[(i, i)].abs() > RANK_CUTOFF * lead).count();
    let degenerate = rank < m;
    let mut y = DVector::zeros(m);
    if rank > 0 {
        let qtb = qr.q().tr_mul(&rhs);
        let head = r
            .view((0, 0), (rank, rank))
            .solve_upper_triangular(&qtb.rows(0, rank))
            .ok_or_else(|| Error::InvalidProfile("singular least-squares system".into()))?;
        y.rows_mut(0, rank).copy_from(&head);
    }
    qr.p().inv_permute_rows(&mut y);
    let coeffs = DVector::from_iterator(m, y.iter().zip(&norms).map(|(y, s)| y / s));
    let resid = &a * &coeffs - &rhs;
    Ok(ConstantFit {
        coefficients: coeffs.iter().copied().collect(),
        residual: rms(resid.as_slice()),
        degenerate,
    })
}
