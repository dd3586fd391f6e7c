//! Linear algebra in the Lorentzian space R^{4,1}.
//!
//! Components are stored as `[x1, x2, x3, x4, x0]` with `e0` the timelike
//! direction, so the pairing is `a1 b1 + a2 b2 + a3 b3 + a4 b4 - a0 b0`.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signature of each basis slot in storage order.
const METRIC: [f64; 5] = [1.0, 1.0, 1.0, 1.0, -1.0];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LorentzVector(pub [f64; 5]);

impl LorentzVector {
    pub const ZERO: Self = Self([0.0; 5]);
    pub const E1: Self = Self([1.0, 0.0, 0.0, 0.0, 0.0]);
    pub const E2: Self = Self([0.0, 1.0, 0.0, 0.0, 0.0]);
    pub const E3: Self = Self([0.0, 0.0, 1.0, 0.0, 0.0]);
    pub const E4: Self = Self([0.0, 0.0, 0.0, 1.0, 0.0]);
    pub const E0: Self = Self([0.0, 0.0, 0.0, 0.0, 1.0]);

    pub fn new(x1: f64, x2: f64, x3: f64, x4: f64, x0: f64) -> Self {
        Self([x1, x2, x3, x4, x0])
    }

    /// The null vector `(e4 + e0)/sqrt 2` paired with [`Self::v_infinity`].
    pub fn v_zero() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self([0.0, 0.0, 0.0, s, s])
    }

    /// The null vector `(e0 - e4)/sqrt 2`; `<v_zero, v_infinity> = -1`.
    pub fn v_infinity() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self([0.0, 0.0, 0.0, -s, s])
    }

    pub fn components(&self) -> &[f64; 5] {
        &self.0
    }

    pub fn inner(&self, other: &Self) -> f64 {
        inner(self, other)
    }

    pub fn norm_sq(&self) -> f64 {
        inner(self, self)
    }

    /// Largest absolute component; used for residual norms.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|x| s * x))
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Self {
        let mut out = *self;
        for (o, x) in out.0.iter_mut().zip(other.0) {
            *o += s * x;
        }
        out
    }

    /// Apply the skew map `self ∧ other`.
    pub fn wedge(self, other: Self) -> WedgeAction {
        WedgeAction { u: self, v: other }
    }
}

impl Index<usize> for LorentzVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for LorentzVector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        self.axpy(1.0, &rhs)
    }
}

impl AddAssign for LorentzVector {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for LorentzVector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self.axpy(-1.0, &rhs)
    }
}

impl Neg for LorentzVector {
    type Output = Self;
    fn neg(self) -> Self {
        Self(self.0.map(|x| -x))
    }
}

impl Mul<LorentzVector> for f64 {
    type Output = LorentzVector;
    fn mul(self, rhs: LorentzVector) -> LorentzVector {
        rhs.scale(self)
    }
}

/// Signature (4,1) pairing.
pub fn inner(a: &LorentzVector, b: &LorentzVector) -> f64 {
    a.0.iter()
        .zip(b.0.iter())
        .zip(METRIC)
        .map(|((x, y), g)| g * x * y)
        .sum()
}

/// The element `u ∧ v` of o(4,1), acting by `(u∧v)w = <u,w>v - <v,w>u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgeAction {
    pub u: LorentzVector,
    pub v: LorentzVector,
}

impl WedgeAction {
    pub fn new(u: LorentzVector, v: LorentzVector) -> Self {
        Self { u, v }
    }

    pub fn apply(&self, x: &LorentzVector) -> LorentzVector {
        wedge_apply(self, x)
    }
}

pub fn wedge_apply(w: &WedgeAction, x: &LorentzVector) -> LorentzVector {
    w.v.scale(inner(&w.u, x)).axpy(-inner(&w.v, x), &w.u)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceFormTag {
    Spherical,
    Euclidean,
    Hyperbolic,
}

/// Space form `E(w) = {v null : <v,w> = -1}` with sectional curvature `-<w,w>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceFormClass {
    pub tag: SpaceFormTag,
    pub curvature: f64,
}

pub fn classify_space_form(w: &LorentzVector) -> Result<SpaceFormClass> {
    classify_space_form_tol(w, 0.0)
}

/// As [`classify_space_form`], treating `|<w,w>| <= tol` as null.
pub fn classify_space_form_tol(w: &LorentzVector, tol: f64) -> Result<SpaceFormClass> {
    if w.0.iter().all(|&x| x == 0.0) {
        return Err(Error::UndefinedConicSection);
    }
    let q = w.norm_sq();
    let tag = if q.abs() <= tol {
        SpaceFormTag::Euclidean
    } else if q < 0.0 {
        SpaceFormTag::Spherical
    } else {
        SpaceFormTag::Hyperbolic
    };
    let curvature = if tag == SpaceFormTag::Euclidean { 0.0 } else { -q };
    Ok(SpaceFormClass { tag, curvature })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type V = LorentzVector;

    #[test]
    fn basis_pairings() {
        assert_eq!(inner(&V::E1, &V::E1), 1.0);
        assert_eq!(inner(&V::E0, &V::E0), -1.0);
        assert_eq!(inner(&V::E1, &V::E0), 0.0);
        let p = inner(&V::v_zero(), &V::v_infinity());
        assert!((p + 1.0).abs() < 1e-15);
        assert!(V::v_zero().norm_sq().abs() < 1e-15);
        assert!(V::v_infinity().norm_sq().abs() < 1e-15);
    }

    #[test]
    fn sign_flip_only_on_timelike_slot() {
        let a = V::new(1.0, 2.0, 3.0, 4.0, 5.0);
        assert_eq!(a.norm_sq(), 1.0 + 4.0 + 9.0 + 16.0 - 25.0);
        let b = V::new(1.0, 2.0, 3.0, 4.0, 0.0);
        assert_eq!(b.norm_sq(), 30.0);
    }

    #[test]
    fn wedge_examples() {
        let w = V::E1.wedge(V::E2);
        assert_eq!(w.apply(&V::E1), V::E2);
        assert_eq!(w.apply(&V::E3), V::ZERO);
        assert_eq!(w.apply(&V::E2), -V::E1);
    }

    #[test]
    fn wedge_kills_null_lift() {
        // psi null, psi_u unit and orthogonal to psi
        let psi = V::E3 + V::E0;
        let psi_u = V::E1;
        let out = psi.wedge(psi_u).apply(&psi);
        assert!(out.max_abs() < 1e-15);
    }

    #[test]
    fn classification() {
        let s = classify_space_form(&V::E0).unwrap();
        assert_eq!(s.tag, SpaceFormTag::Spherical);
        assert_eq!(s.curvature, 1.0);
        let e = classify_space_form_tol(&V::v_infinity(), 1e-14).unwrap();
        assert_eq!(e.tag, SpaceFormTag::Euclidean);
        assert_eq!(e.curvature, 0.0);
        let h = classify_space_form(&V::E1).unwrap();
        assert_eq!(h.tag, SpaceFormTag::Hyperbolic);
        assert_eq!(h.curvature, -1.0);
        assert!(matches!(
            classify_space_form(&V::ZERO),
            Err(Error::UndefinedConicSection)
        ));
    }

    fn vec5() -> impl Strategy<Value = V> {
        prop::array::uniform5(-10.0..10.0f64).prop_map(LorentzVector)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn wedge_is_skew_adjoint(u in vec5(), v in vec5(), w in vec5(), x in vec5()) {
            let a = u.wedge(v);
            let lhs = inner(&a.apply(&w), &x) + inner(&w, &a.apply(&x));
            let scale = 1.0 + u.max_abs() * v.max_abs() * w.max_abs() * x.max_abs();
            prop_assert!(lhs.abs() <= 1e-13 * scale);
        }

        #[test]
        fn inner_is_symmetric(a in vec5(), b in vec5()) {
            prop_assert_eq!(inner(&a, &b), inner(&b, &a));
        }
    }
}
