//! Truncated formal conserved quantities `p(t) = Σ_{i≤0} p_i tⁱ` in codimension 1.
//!
//! Each coefficient is `p_i = α_i ψ + β_i ψ_u + γ_i ψ̂ + δ_i N`. The recursion
//! only ever solves for `γ_i` and `δ_i`; `α_i`, `β_i` follow from `γ_i`, and
//! the normal part `δ_i` is fixed algebraically by the prescribed series
//! `r(t) = (p(t), p(t))`.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{constancy_test, format_real, ScalarField, VectorField};
use crate::frame::{Direction, FrameBundle};
use crate::lorentz::LorentzVector;
use crate::profiles::SAMPLED_MAX_DEPTH;

/// Prescribed `r_0, r_{-1}, r_{-2}, …`; missing entries are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RSeries(Vec<f64>);

impl Default for RSeries {
    fn default() -> Self {
        Self(vec![1.0])
    }
}

impl RSeries {
    /// `coefficients[n]` is `r_{-n}`.
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        let s = Self(coefficients);
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self.0.first() {
            Some(&r0) if r0 > 0.0 && r0.is_finite() => {}
            Some(&r0) => return Err(Error::NonPositiveR0(r0)),
            None => return Err(Error::NonPositiveR0(0.0)),
        }
        if self.0.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("r series".into()));
        }
        Ok(())
    }

    /// `r_m`, zero for `m > 0` or beyond the stored coefficients.
    pub fn get(&self, m: i32) -> f64 {
        if m > 0 {
            return 0.0;
        }
        self.0.get((-m) as usize).copied().unwrap_or(0.0)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.0
    }

    /// Coefficients of `(p - s t^{-lag} p, p - s t^{-lag} p)` down to `t^{-depth}`.
    pub fn shifted(&self, s: f64, lag: usize, depth: usize) -> Self {
        let mut poly = vec![0.0; lag];
        if lag > 0 {
            poly[lag - 1] = s;
        }
        self.scaled_by(&poly, depth)
    }

    /// `f² r` with `f = 1 - Σ_j s_j t^{-j}`, down to `t^{-depth}`.
    pub fn scaled_by(&self, s: &[f64], depth: usize) -> Self {
        let mut f = vec![0.0; depth + 1];
        f[0] = 1.0;
        for (j, &sj) in s.iter().enumerate().take(depth) {
            f[j + 1] = -sj;
        }
        let mut f2 = vec![0.0; depth + 1];
        for a in 0..=depth {
            for b in 0..=depth - a {
                f2[a + b] += f[a] * f[b];
            }
        }
        Self(
            (0..=depth)
                .map(|n| (0..=n).map(|a| f2[a] * self.get(-((n - a) as i32))).sum())
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub gamma: ScalarField,
    pub delta: ScalarField,
    pub alpha: ScalarField,
    pub beta: ScalarField,
    pub p: VectorField,
}

#[derive(Debug, Clone)]
pub struct FcqSeries {
    frame: Arc<FrameBundle>,
    r: RSeries,
    /// `coeffs[n]` holds index `-n`.
    coeffs: Vec<Coefficient>,
}

/// Exact derivative budget in `𝐤` for a series of the given depth.
pub fn required_jet_order(depth: usize) -> usize {
    2 * depth + 2
}

pub fn extend(frame: Arc<FrameBundle>, r: &RSeries, depth: usize) -> Result<FcqSeries> {
    extend_signed(frame, r, depth, false)
}

/// As [`extend`], starting from `-√r₀ N` when `flip` is set.
pub fn extend_signed(
    frame: Arc<FrameBundle>,
    r: &RSeries,
    depth: usize,
    flip: bool,
) -> Result<FcqSeries> {
    r.validate()?;
    if depth == 0 {
        return Err(Error::InvalidDepth(depth));
    }
    check_budget(&frame, depth)?;

    let g = frame.grid;
    let k = &frame.hopf;
    let c = &frame.schwarzian;
    let k2 = k.mul(k)?;
    let sign = if flip { -1.0 } else { 1.0 };
    let delta0 = sign * r.get(0).sqrt();

    let zero = ScalarField::constant(g, 0.0);
    let mut series = FcqSeries {
        frame: frame.clone(),
        r: r.clone(),
        coeffs: Vec::with_capacity(depth + 1),
    };
    series.coeffs.push(Coefficient {
        gamma: zero.clone(),
        delta: ScalarField::constant(g, delta0),
        alpha: zero.clone(),
        beta: zero,
        p: frame.normal.map(|_, n| n.scale(delta0))?,
    });

    for n in 1..=depth {
        let prev = &series.coeffs[n - 1];
        // γ_{i-1} = γ_i''/2 + c γ_i + 2 δ_i k
        let gamma = prev
            .gamma
            .derivative(2)?
            .scale(0.5)
            .add(&c.mul(&prev.gamma)?)?
            .add(&prev.delta.mul(k)?.scale(2.0))?;

        // 2 δ₀ δ_{i-1} = r_{i-1} - Σ_{a,b<0, a+b=i-1} (p_a, p_b)
        let m = -(n as i32);
        let mut rest = ScalarField::constant(g, r.get(m));
        for a in 1..n {
            let prod = series.gram_between(a, n - a)?;
            rest = rest.sub(&prod)?;
        }
        let delta = rest.scale(1.0 / (2.0 * delta0));

        let beta = gamma.derivative(1)?.scale(-1.0);
        let alpha = gamma.derivative(2)?.scale(0.5).add(&k2.mul(&gamma)?.scale(2.0))?;
        let p = assemble(&frame, &alpha, &beta, &gamma, &delta)?;
        series.coeffs.push(Coefficient {
            gamma,
            delta,
            alpha,
            beta,
            p,
        });
    }
    Ok(series)
}

fn check_budget(frame: &FrameBundle, depth: usize) -> Result<()> {
    let need = required_jet_order(depth);
    if frame.is_sampled() {
        if depth > SAMPLED_MAX_DEPTH {
            return Err(Error::InsufficientSmoothness(format!(
                "sampled profiles support depth <= {SAMPLED_MAX_DEPTH}, requested {depth}"
            )));
        }
    } else if frame.curvature.jet_order() < need {
        return Err(Error::InsufficientSmoothness(format!(
            "depth {depth} needs {need} derivatives of the profile curvature, {} available",
            frame.curvature.jet_order()
        )));
    }
    Ok(())
}

fn assemble(
    frame: &FrameBundle,
    alpha: &ScalarField,
    beta: &ScalarField,
    gamma: &ScalarField,
    delta: &ScalarField,
) -> Result<VectorField> {
    VectorField::combine(
        frame.grid,
        &[
            (alpha.values(), &frame.psi),
            (beta.values(), &frame.psi_u),
            (gamma.values(), &frame.psi_hat),
            (delta.values(), &frame.normal),
        ],
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConservationRow {
    pub m: i32,
    pub value: f64,
    pub deviation: f64,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParallelismRow {
    /// Power of `t` whose coefficient in `(d + tη)p(t)` is measured.
    pub power: i32,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndexedResidual {
    pub index: i32,
    pub residual: f64,
}

impl FcqSeries {
    pub fn depth(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn frame(&self) -> &Arc<FrameBundle> {
        &self.frame
    }

    pub fn r(&self) -> &RSeries {
        &self.r
    }

    pub fn coefficient(&self, i: i32) -> Result<&Coefficient> {
        if i > 0 || (-i) as usize > self.depth() {
            return Err(Error::IndexOutOfRange {
                index: i,
                depth: self.depth(),
            });
        }
        Ok(&self.coeffs[(-i) as usize])
    }

    pub fn gamma(&self, i: i32) -> Result<&ScalarField> {
        Ok(&self.coefficient(i)?.gamma)
    }

    pub fn delta(&self, i: i32) -> Result<&ScalarField> {
        Ok(&self.coefficient(i)?.delta)
    }

    pub fn p(&self, i: i32) -> Result<&VectorField> {
        Ok(&self.coefficient(i)?.p)
    }

    fn gram_between(&self, a: usize, b: usize) -> Result<ScalarField> {
        let (x, y) = (&self.coeffs[a], &self.coeffs[b]);
        let t1 = x.alpha.mul(&y.gamma)?;
        let t2 = x.gamma.mul(&y.alpha)?;
        let t3 = x.beta.mul(&y.beta)?;
        let t4 = x.delta.mul(&y.delta)?;
        t3.add(&t4)?.sub(&t1)?.sub(&t2)
    }

    /// `(p_i, p_j)` from the frame's Gram matrix.
    pub fn gram_product(&self, i: i32, j: i32) -> Result<ScalarField> {
        self.coefficient(i)?;
        self.coefficient(j)?;
        self.gram_between((-i) as usize, (-j) as usize)
    }

    /// `(p_i, p_j)` from the assembled ambient vectors.
    pub fn ambient_product(&self, i: i32, j: i32) -> Result<ScalarField> {
        self.p(i)?.inner(self.p(j)?)
    }

    /// Coefficients of `(p(t), p(t))` for `0 ≥ m ≥ -D`, from ambient pairings.
    pub fn conservation_residual(&self) -> Result<Vec<ConservationRow>> {
        let g = self.frame.grid;
        let d = self.depth() as i32;
        let mut rows = Vec::new();
        for m in (-d..=0).rev() {
            let mut sum = ScalarField::from_samples(g, vec![0.0; g.n])?;
            for a in m..=0 {
                sum = sum.add(&self.ambient_product(a, m - a)?)?;
            }
            let c = constancy_test(&sum, 0.0);
            rows.push(ConservationRow {
                m,
                value: c.value,
                deviation: c.deviation,
                offset: (c.value - self.r.get(m)).abs(),
            });
        }
        Ok(rows)
    }

    /// Max-norm of the `t^{power}` coefficient of `(d + tη)p(t)` for powers `1 ≥ power > -D`.
    pub fn parallelism_residual(&self) -> Result<Vec<ParallelismRow>> {
        let fb = &self.frame;
        let d = self.depth() as i32;
        let mut rows = Vec::new();

        let p0 = self.p(0)?;
        rows.push(ParallelismRow {
            power: 1,
            u: fb.eta_apply(Direction::U, p0)?.max_norm(),
            v: fb.eta_apply(Direction::V, p0)?.max_norm(),
        });
        for i in (-d + 1..=0).rev() {
            let c = self.coefficient(i)?;
            let next = self.p(i - 1)?;
            let du = c.p.fd_differentiate(1)?;
            let u = du.add(&fb.eta_apply(Direction::U, next)?)?.max_norm();
            let dv = self.v_derivative(c)?;
            let v = dv.add(&fb.eta_apply(Direction::V, next)?)?.max_norm();
            rows.push(ParallelismRow { power: i, u, v });
        }
        Ok(rows)
    }

    /// `∂_v p_i` at `v = 0`; the coefficients do not depend on `v`.
    fn v_derivative(&self, c: &Coefficient) -> Result<VectorField> {
        let dv = &self.frame.dv;
        VectorField::combine(
            self.frame.grid,
            &[
                (c.alpha.values(), &dv.psi),
                (c.beta.values(), &dv.psi_u),
                (c.gamma.values(), &dv.psi_hat),
                (c.delta.values(), &dv.normal),
            ],
        )
    }

    /// `max |δ_i'/2 - (γ_i' k - γ_i k')|` for each index.
    pub fn consistency_q_residual(&self) -> Result<Vec<IndexedResidual>> {
        let k = &self.frame.hopf;
        let dk = k.derivative(1)?;
        let mut out = Vec::new();
        for n in 0..=self.depth() {
            let c = &self.coeffs[n];
            let lhs = c.delta.derivative(1)?.scale(0.5);
            let rhs = c.gamma.derivative(1)?.mul(k)?.sub(&c.gamma.mul(&dk)?)?;
            out.push(IndexedResidual {
                index: -(n as i32),
                residual: lhs.sub(&rhs)?.max_abs(),
            });
        }
        Ok(out)
    }

    /// Deviation of `(η_{∂z} p_i, p_j)` from `γ_{i,z̄}γ_j - γ_iγ_{j,z̄}`, real and imaginary parts.
    pub fn eta_pairing_identity(&self, i: i32, j: i32) -> Result<f64> {
        let fb = &self.frame;
        let (ci, cj) = (self.coefficient(i)?, self.coefficient(j)?);
        let (re, im) = fb.eta_z_apply(&ci.p)?;
        let lhs_re = re.inner(&cj.p)?;
        let lhs_im = im.inner(&cj.p)?;
        let rhs = ci
            .gamma
            .derivative(1)?
            .mul(&cj.gamma)?
            .sub(&ci.gamma.mul(&cj.gamma.derivative(1)?)?)?
            .scale(0.5);
        Ok(lhs_re.sub(&rhs)?.max_abs().max(lhs_im.max_abs()))
    }

    /// Coefficients of `p(t) - s t^{-lag} p(t)`, truncated at the same depth.
    pub fn shift(&self, s: f64, lag: usize) -> Result<FcqSeries> {
        if lag == 0 {
            return Err(Error::InvalidDepth(lag));
        }
        let mut poly = vec![0.0; lag];
        poly[lag - 1] = s;
        self.shift_by(&poly)
    }

    /// Coefficients of `p(t) - Σ_j s_j t^{-j} p(t)` with `s = [s_1, s_2, …]`.
    pub fn shift_by(&self, s: &[f64]) -> Result<FcqSeries> {
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (n, c) in self.coeffs.iter().enumerate() {
            let mut out = c.clone();
            for (j, &sj) in s.iter().enumerate() {
                let lag = j + 1;
                if n < lag || sj == 0.0 {
                    continue;
                }
                let o = &self.coeffs[n - lag];
                out = Coefficient {
                    gamma: out.gamma.axpy(-sj, &o.gamma)?,
                    delta: out.delta.axpy(-sj, &o.delta)?,
                    alpha: out.alpha.axpy(-sj, &o.alpha)?,
                    beta: out.beta.axpy(-sj, &o.beta)?,
                    p: out.p.axpy(-sj, &o.p)?,
                };
            }
            coeffs.push(out);
        }
        Ok(FcqSeries {
            frame: self.frame.clone(),
            r: self.r.scaled_by(s, self.depth()),
            coeffs,
        })
    }

    pub fn dump(&self) -> SeriesDump {
        SeriesDump {
            depth: self.depth(),
            r: self.r.coefficients().to_vec(),
            u: self.frame.grid.points(),
            coefficients: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(n, c)| CoefficientDump {
                    index: -(n as i32),
                    gamma: c.gamma.values().to_vec(),
                    delta: c.delta.values().to_vec(),
                    alpha: c.alpha.values().to_vec(),
                    beta: c.beta.values().to_vec(),
                    p: c.p.samples().iter().map(LorentzVector::components).copied().collect(),
                })
                .collect(),
        }
    }

    /// One CSV of `u, γ_i, δ_i, α_i, β_i` per index.
    pub fn write_coefficient_csv<W: Write>(&self, i: i32, out: W) -> Result<()> {
        let c = self.coefficient(i)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["u", "gamma", "delta", "alpha", "beta"])?;
        for (n, u) in self.frame.grid.points().iter().enumerate() {
            w.write_record([
                format_real(*u),
                format_real(c.gamma.values()[n]),
                format_real(c.delta.values()[n]),
                format_real(c.alpha.values()[n]),
                format_real(c.beta.values()[n]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientDump {
    pub index: i32,
    pub gamma: Vec<f64>,
    pub delta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub p: Vec<[f64; 5]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesDump {
    pub depth: usize,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub coefficients: Vec<CoefficientDump>,
}
