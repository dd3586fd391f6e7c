//! Special isothermic type detection and location of the constant term.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fcq::FcqSeries;
use crate::fields::{constancy_test, fit_constants, ScalarField};
use crate::frame::{FrameBundle, SurfaceKind};
use crate::lorentz::{classify_space_form_tol, inner, LorentzVector, SpaceFormClass};

/// Default tolerance for profiles with exact derivatives.
pub const ANALYTIC_TOL: f64 = 1e-6;
/// Default tolerance for sampled profiles.
pub const SAMPLED_TOL: f64 = 1e-3;
/// `γ` below this on some grid point makes a ratio test inconclusive.
pub const GAMMA_FLOOR: f64 = 1e-8;

pub fn default_tolerance(frame: &FrameBundle) -> f64 {
    if frame.is_sampled() {
        SAMPLED_TOL
    } else {
        ANALYTIC_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    pub verdict: Verdict,
    pub residual: f64,
    pub constants: BTreeMap<String, f64>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: &str, residual: f64, tolerance: f64) -> Self {
        let verdict = if residual < tolerance {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Self {
            check: name.to_string(),
            verdict,
            residual,
            constants: BTreeMap::new(),
            tolerance,
            note: None,
        }
    }

    pub fn inconclusive(name: &str, tolerance: f64, note: &str) -> Self {
        Self {
            check: name.to_string(),
            verdict: Verdict::Inconclusive,
            residual: f64::NAN,
            constants: BTreeMap::new(),
            tolerance,
            note: Some(note.to_string()),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    pub fn constant(&self, key: &str) -> Option<f64> {
        self.constants.get(key).copied()
    }
}

#[derive(Debug, Clone)]
pub struct RatioOutcome {
    pub check: Check,
    /// `(s, lag)` of the shift `p - s t^{-lag} p` when the test passes.
    pub shift: Option<(f64, usize)>,
    pub shifted: Option<FcqSeries>,
}

fn require_depth(s: &FcqSeries, need: usize) -> Result<()> {
    if s.depth() < need {
        return Err(Error::IndexOutOfRange {
            index: -(need as i32),
            depth: s.depth(),
        });
    }
    Ok(())
}

fn ratio_branch(num: &ScalarField, den: &ScalarField, tol: f64) -> Result<Option<(f64, f64)>> {
    if den.min_abs() < GAMMA_FLOOR {
        return Ok(None);
    }
    let ratio: Vec<f64> = num
        .values()
        .iter()
        .zip(den.values())
        .map(|(a, b)| a / b)
        .collect();
    let c = constancy_test(&ScalarField::from_samples(*num.grid(), ratio)?, tol);
    let s0 = c.value;
    let hat = num.axpy(-s0, den)?;
    let hat_res = hat.max_abs() / num.max_abs().max(1.0);
    Ok(Some((c.deviation.max(hat_res), s0)))
}

/// Is `γ_{-d-1}/γ_{-d}` (or, for `d > 1`, `γ_{-d-1}/γ_{-d+1}`) constant?
pub fn type_d_ratio_test(s: &FcqSeries, d: usize, tol: f64) -> Result<RatioOutcome> {
    require_depth(s, d + 1)?;
    let name = format!("type{d}_ratio");
    let di = d as i32;
    let num = s.gamma(-di - 1)?;
    let mut branches = vec![(1usize, ratio_branch(num, s.gamma(-di)?, tol)?)];
    if d > 1 {
        branches.push((2, ratio_branch(num, s.gamma(-di + 1)?, tol)?));
    }
    let conclusive: Vec<(usize, f64, f64)> = branches
        .iter()
        .filter_map(|(lag, b)| b.map(|(res, s0)| (*lag, res, s0)))
        .collect();
    let Some(&first) = conclusive.first() else {
        return Ok(RatioOutcome {
            check: Check::inconclusive(&name, tol, &format!("gamma_{{-{d}}} vanishes on the grid")),
            shift: None,
            shifted: None,
        });
    };
    let (lag, res, s0) = conclusive
        .iter()
        .copied()
        .find(|&(_, res, _)| res < tol)
        .unwrap_or(first);
    let check = Check::new(&name, res, tol)
        .with("s", s0)
        .with("lag", lag as f64);
    let (shift, shifted) = if check.verdict.passed() {
        (Some((s0, lag)), Some(s.shift(s0, lag)?))
    } else {
        (None, None)
    };
    Ok(RatioOutcome {
        check,
        shift,
        shifted,
    })
}

/// Fit `γ_{-d-1} = Σ_j s_j γ_{-d-1+j}` over `j = 1..=d`; the general shift
/// `p - Σ_j s_j t^{-j} p` then kills `γ_{-d-1}` for every choice of `r(t)`.
pub fn type_d_shift_test(s: &FcqSeries, d: usize, tol: f64) -> Result<RatioOutcome> {
    require_depth(s, d + 1)?;
    let name = format!("type{d}_shift");
    let di = d as i32;
    if s.gamma(-di)?.max_abs() < GAMMA_FLOOR {
        return Ok(RatioOutcome {
            check: Check::inconclusive(&name, tol, &format!("gamma_{{-{d}}} vanishes on the grid")),
            shift: None,
            shifted: None,
        });
    }
    let target = s.gamma(-di - 1)?;
    let basis: Vec<&ScalarField> = (1..=di)
        .map(|j| s.gamma(-di - 1 + j))
        .collect::<Result<_>>()?;
    let fit = fit_constants(&basis, target)?;
    let mut rest = target.clone();
    for (b, a) in basis.iter().zip(&fit.coefficients) {
        rest = rest.axpy(*a, b)?;
    }
    let res = rest.max_abs() / target.max_abs().max(1.0);
    let poly: Vec<f64> = fit.coefficients.iter().map(|a| -a).collect();
    let mut check = Check::new(&name, res, tol);
    for (j, sj) in poly.iter().enumerate() {
        check = check.with(&format!("s{}", j + 1), *sj);
    }
    let (shift, shifted) = if check.verdict.passed() {
        (Some((poly[0], 1)), Some(s.shift_by(&poly)?))
    } else {
        (None, None)
    };
    Ok(RatioOutcome {
        check,
        shift,
        shifted,
    })
}

/// Constancy of `(p_{-d}, p_{-d})` or, for `d > 1`, `(p_{-d}, p_{-d+1})`.
pub fn type_d_norm_test(s: &FcqSeries, d: usize, tol: f64) -> Result<Check> {
    require_depth(s, d)?;
    let di = d as i32;
    let own = constancy_test(&s.gram_product(-di, -di)?, tol);
    let mut check = Check::new(&format!("type{d}_norm"), own.deviation, tol).with("value", own.value);
    if d > 1 {
        let mixed = constancy_test(&s.gram_product(-di, -di + 1)?, tol);
        if mixed.deviation < own.deviation {
            check = Check::new(&check.check, mixed.deviation, tol)
                .with("value", mixed.value)
                .with("mixed", 1.0);
        }
    }
    Ok(check)
}

/// Fit `k''/2 + c k = H k`.
pub fn cmc_test(frame: &FrameBundle, tol: f64) -> Result<Check> {
    let k = &frame.hopf;
    if k.max_abs() < 1e-12 {
        return Ok(Check::inconclusive("cmc", tol, "k vanishes identically"));
    }
    let target = k.derivative(2)?.scale(0.5).add(&frame.schwarzian.mul(k)?)?;
    let fit = fit_constants(&[k], &target)?;
    Ok(Check::new("cmc", fit.residual, tol).with("H", -fit.coefficients[0]))
}

/// `(k''/4) k + k⁴ - k'²/4`.
pub fn musso_nicolodi_field(frame: &FrameBundle) -> Result<ScalarField> {
    let k = &frame.hopf;
    let dk = k.derivative(1)?;
    let k2 = k.mul(k)?;
    k.derivative(2)?
        .mul(k)?
        .scale(0.25)
        .add(&k2.mul(&k2)?)?
        .sub(&dk.mul(&dk)?.scale(0.25))
}

pub fn musso_nicolodi_test(frame: &FrameBundle, tol: f64) -> Result<Check> {
    let c = constancy_test(&musso_nicolodi_field(frame)?, tol);
    Ok(Check::new("musso_nicolodi", c.deviation, tol).with("value", c.value))
}

fn require_four_derivatives(frame: &FrameBundle) -> Result<()> {
    let k = &frame.curvature;
    if k.is_analytic() && k.jet_order() < 4 {
        return Err(Error::InsufficientSmoothness(format!(
            "type-2 test needs 4 derivatives of the profile curvature, {} available",
            k.jet_order()
        )));
    }
    Ok(())
}

/// Fit `s1 (k''/2 + c k) + s2 k` against the fixed part of the type-2 condition.
pub fn type2_conformal_test(frame: &FrameBundle, tol: f64) -> Result<Check> {
    require_four_derivatives(frame)?;
    let k = &frame.hopf;
    let c = &frame.schwarzian;
    let d1 = k.derivative(1)?;
    let d2 = k.derivative(2)?;
    let d4 = k.derivative(4)?;
    let c1 = c.derivative(1)?;
    let c2 = c.derivative(2)?;
    let mn = musso_nicolodi_field(frame)?;
    let coeff = c2.scale(0.5).add(&c.mul(c)?)?;
    let fixed = d4
        .scale(0.25)
        .add(&c.mul(&d2)?)?
        .add(&c1.mul(&d1)?)?
        .add(&coeff.mul(k)?)?
        .add(&mn.mul(k)?.scale(8.0))?;
    let b1 = d2.scale(0.5).add(&c.mul(k)?)?;
    let fit = fit_constants(&[&b1, k], &fixed)?;
    Ok(Check::new("type2_conformal", fit.residual, tol)
        .with("s1", fit.coefficients[0])
        .with("s2", fit.coefficients[1]))
}

/// `𝐤/C + 𝐤³/2 + 𝐤''`, without the `1/C` term for cylinders.
fn elastic_operator(frame: &FrameBundle) -> Result<ScalarField> {
    let k = &frame.curvature;
    let k3 = k.mul(k)?.mul(k)?;
    let mut out = k.derivative(2)?.add(&k3.scale(0.5))?;
    if let Some(c) = frame.c_param {
        out = out.axpy(1.0 / c, k)?;
    }
    Ok(out)
}

/// The quintic fourth-order operator of the type-2 profile condition.
fn quintic_operator(frame: &FrameBundle) -> Result<ScalarField> {
    let k = &frame.curvature;
    let d1 = k.derivative(1)?;
    let d2 = k.derivative(2)?;
    let d4 = k.derivative(4)?;
    let k2 = k.mul(k)?;
    let k3 = k2.mul(k)?;
    let k5 = k3.mul(&k2)?;
    let mut out = d4
        .add(&k5.scale(3.0 / 8.0))?
        .add(&k.mul(&d1.mul(&d1)?)?.add(&k2.mul(&d2)?)?.scale(2.5))?;
    if let Some(c) = frame.c_param {
        out = out
            .axpy(1.0 / (c * c), k)?
            .axpy(1.0 / c, &k3)?
            .axpy(2.0 / c, &d2)?;
    }
    Ok(out)
}

/// Fit with an extra constant basis function, then test the remainder for constancy.
fn fit_up_to_constant(name: &str, basis: &[&ScalarField], target: &ScalarField, keys: &[&str], tol: f64) -> Result<Check> {
    let one = ScalarField::constant(*target.grid(), 1.0);
    let mut with_one: Vec<&ScalarField> = basis.to_vec();
    with_one.push(&one);
    let fit = fit_constants(&with_one, target)?;
    let mut rest = target.clone();
    for (b, a) in basis.iter().zip(&fit.coefficients) {
        rest = rest.axpy(*a, b)?;
    }
    let c = constancy_test(&rest, tol);
    let mut check = Check::new(name, c.deviation, tol).with("constant", c.value);
    for (key, a) in keys.iter().zip(&fit.coefficients) {
        check = check.with(key, *a);
    }
    Ok(check)
}

/// Explicit profile-curvature conditions for type 1 and type 2, plus the
/// `E(v_∞)` variants for cylinders.
pub fn profile_ode_tests(frame: &FrameBundle, tol: f64) -> Result<Vec<Check>> {
    require_four_derivatives(frame)?;
    let k = &frame.curvature;
    let p1 = elastic_operator(frame)?;
    let p2 = quintic_operator(frame)?;
    let mut out = Vec::new();

    let fit = fit_constants(&[k], &p1)?;
    out.push(Check::new("type1_profile_ode", fit.residual, tol).with("alpha", fit.coefficients[0]));
    let fit = fit_constants(&[&p1, k], &p2)?;
    out.push(
        Check::new("type2_profile_ode", fit.residual, tol)
            .with("alpha", fit.coefficients[0])
            .with("beta", fit.coefficients[1]),
    );

    if frame.kind == SurfaceKind::Cylinder {
        let c = constancy_test(k, tol);
        out.push(Check::new("type1_e_v_infinity", c.deviation, tol).with("constant", c.value));
        out.push(fit_up_to_constant("type2_e_v_infinity", &[k], &p1, &["alpha"], tol)?);
        out.push(fit_up_to_constant(
            "type3_e_v_infinity",
            &[&p1, k],
            &p2,
            &["alpha", "beta"],
            tol,
        )?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationReport {
    pub d: usize,
    pub checks: Vec<Check>,
    pub constant_term: LorentzVector,
    pub norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space_form: Option<SpaceFormClass>,
    /// Cylinders only: whether the surface is special in `E(v_∞)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub in_e_v_infinity: Option<bool>,
}

/// Where the constant term `p̂_{-d}` of an already shifted series lives.
pub fn constant_term_location(shifted: &FcqSeries, d: usize, tol: f64) -> Result<LocationReport> {
    require_depth(shifted, d)?;
    let fb = shifted.frame();
    let p = shifted.p(-(d as i32))?;
    let mean = p.mean();
    let scale = mean.max_abs().max(1.0);
    let mut checks = vec![Check::new(
        "constant_term_grid_constant",
        p.max_deviation_from_mean() / scale,
        tol,
    )];

    let mut worst = 0.0_f64;
    let mut pairing = Vec::new();
    for (label, probe) in fb.background.complement_probes() {
        for x in p.samples() {
            worst = worst.max(inner(x, &probe).abs());
        }
        pairing.push((label, inner(&mean, &probe)));
    }
    let mut c = Check::new("constant_term_in_complement", worst / scale, tol);
    for (label, v) in pairing {
        c = c.with(label, v);
    }
    checks.push(c);

    let norm = mean.norm_sq();
    let space_form = classify_space_form_tol(&mean, tol * scale * scale).ok();
    let in_e_v_infinity = if fb.kind == SurfaceKind::Cylinder {
        let g = constancy_test(shifted.gamma(-(d as i32))?, tol);
        let check = Check::new("constant_term_e_v_infinity", g.deviation, tol).with("gamma", g.value);
        let inside = check.verdict.passed();
        checks.push(check);
        Some(inside)
    } else {
        None
    };
    Ok(LocationReport {
        d,
        checks,
        constant_term: mean,
        norm,
        space_form,
        in_e_v_infinity,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeVerdict {
    pub d: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub checks: Vec<Check>,
    pub types: Vec<TypeVerdict>,
    /// Smallest `d` whose shift test passed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub minimal_type: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<LocationReport>,
}

impl DetectionReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.check == name)
    }

    pub fn type_verdict(&self, d: usize) -> Option<Verdict> {
        self.types.iter().find(|t| t.d == d).map(|t| t.verdict)
    }
}

/// Run every detector that the series depth and derivative budget allow.
pub fn detect(s: &FcqSeries, tol: f64) -> Result<DetectionReport> {
    let fb = s.frame();
    let mut checks = vec![cmc_test(fb, tol)?, musso_nicolodi_test(fb, tol)?];
    let smooth_enough = require_four_derivatives(fb).is_ok();
    if smooth_enough {
        checks.push(type2_conformal_test(fb, tol)?);
        checks.extend(profile_ode_tests(fb, tol)?);
    }
    let mut types = Vec::new();
    let mut minimal_type = None;
    let mut location = None;
    for d in 1..s.depth() {
        checks.push(type_d_ratio_test(s, d, tol)?.check);
        checks.push(type_d_norm_test(s, d, tol)?);
        let general = type_d_shift_test(s, d, tol)?;
        checks.push(general.check.clone());
        types.push(TypeVerdict {
            d,
            verdict: general.check.verdict,
        });
        if minimal_type.is_none() {
            if let Some(shifted) = &general.shifted {
                minimal_type = Some(d);
                let loc = constant_term_location(shifted, d, tol)?;
                location = Some(loc);
            }
        }
    }
    Ok(DetectionReport {
        checks,
        types,
        minimal_type,
        location,
    })
}
