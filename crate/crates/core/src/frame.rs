//! Conformal frames of profile-curve surfaces on the line `v = 0`.
//!
//! Surfaces of revolution and cones are extrinsic products `ψ = φ₁ + φ₂`
//! with `φ₁` in a 3-space `W` and `φ₂` in `W^⊥`; cylinders use a null pair
//! `v₀, v_∞` and a planar profile in `U = span(e₁, e₂)`. Every invariant is
//! independent of `v`, so only the `v = 0` line is sampled and `∂_v` of each
//! frame vector is stored in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{GridSpec, ScalarField, VectorField};
use crate::lorentz::{inner, LorentzVector as V};
use crate::profiles::{self, ProfileSpec};

/// Allowed drift of `<φ₁,φ₁>` from `C`, relative to `max(1, |C|)`.
pub const DRIFT_LIMIT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceKind {
    Revolution,
    Cone,
    Cylinder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSpec {
    pub kind: SurfaceKind,
    /// Space-form constant `C`: negative for revolution, positive for cones, absent for cylinders.
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub profile: ProfileSpec,
    pub grid: GridSpec,
}

impl SurfaceSpec {
    pub fn validate(&self) -> Result<()> {
        match (self.kind, self.c) {
            (SurfaceKind::Cylinder, None) => Ok(()),
            (SurfaceKind::Cylinder, Some(_)) => Err(Error::InvalidSurface(
                "a cylinder takes no C".into(),
            )),
            (_, None) | (_, Some(0.0)) => Err(Error::InvalidSurface(
                "C must be non-zero for revolution and cone".into(),
            )),
            (SurfaceKind::Revolution, Some(c)) if c > 0.0 => Err(Error::InvalidSurface(
                "surfaces of revolution need C < 0".into(),
            )),
            (SurfaceKind::Cone, Some(c)) if c < 0.0 => {
                Err(Error::InvalidSurface("cones need C > 0".into()))
            }
            (_, Some(c)) if !c.is_finite() => {
                Err(Error::InvalidSurface("C must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

/// The fixed ambient vectors a surface is built from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Background {
    /// `R^{4,1} = W ⊕ W^⊥`.
    Product {
        w_basis: [V; 3],
        w_perp: [V; 2],
    },
    /// `<v₀,v_∞> = -1`, `U ⊂ <v₀,v_∞>^⊥`, `e₃` spans the rest.
    NullPair {
        v0: V,
        v_inf: V,
        u_basis: [V; 2],
        u_perp: V,
    },
}

impl Background {
    /// Vectors whose pairings with `x` vanish iff `x` lies in `W`
    /// (resp. `U ⊕ <v_∞>`).
    pub fn complement_probes(&self) -> Vec<(&'static str, V)> {
        match self {
            Background::Product { w_perp, .. } => vec![("w_perp_0", w_perp[0]), ("w_perp_1", w_perp[1])],
            Background::NullPair { v_inf, u_perp, .. } => vec![("v_inf", *v_inf), ("e3", *u_perp)],
        }
    }
}

/// `∂_v` of the frame vectors at `v = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct VDerivatives {
    pub psi: VectorField,
    pub psi_u: VectorField,
    pub psi_v: VectorField,
    pub psi_hat: VectorField,
    pub normal: VectorField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameBundle {
    pub kind: SurfaceKind,
    pub c_param: Option<f64>,
    pub grid: GridSpec,
    /// Profile curvature `𝐤`.
    pub curvature: ScalarField,
    /// Schwarzian derivative `c`.
    pub schwarzian: ScalarField,
    /// Hopf coefficient `k = 𝐤/4`, so `κ = k N`.
    pub hopf: ScalarField,
    pub psi: VectorField,
    pub psi_u: VectorField,
    pub psi_v: VectorField,
    pub psi_hat: VectorField,
    pub normal: VectorField,
    pub dv: VDerivatives,
    /// Profile curve `φ₁`, its tangent and its normal `n`.
    pub phi1: VectorField,
    pub phi1_prime: VectorField,
    pub profile_normal: VectorField,
    /// `φ₂(0)` and `φ₂'(0)`.
    pub phi2: V,
    pub phi2_prime: V,
    pub background: Background,
    /// Largest `|<φ₁,φ₁> - C|` seen during integration.
    pub drift: f64,
}

pub fn build_frame(spec: &SurfaceSpec) -> Result<FrameBundle> {
    spec.validate()?;
    let profile = spec.profile.clone().with_surface_constant(spec.c);
    let curvature = profiles::generate(&profile, &spec.grid)?;
    build_frame_from_curvature(spec.kind, spec.c, curvature)
}

/// Build from an already generated curvature field.
pub fn build_frame_from_curvature(
    kind: SurfaceKind,
    c_param: Option<f64>,
    curvature: ScalarField,
) -> Result<FrameBundle> {
    match kind {
        SurfaceKind::Cylinder => {
            if c_param.is_some() {
                return Err(Error::InvalidSurface("a cylinder takes no C".into()));
            }
            build_cylinder(curvature)
        }
        _ => {
            let c = match c_param {
                Some(c) if c != 0.0 && c.is_finite() => c,
                _ => {
                    return Err(Error::InvalidSurface(
                        "C must be non-zero for revolution and cone".into(),
                    ))
                }
            };
            if (kind == SurfaceKind::Revolution) != (c < 0.0) {
                return Err(Error::InvalidSurface(format!(
                    "{kind:?} is incompatible with C = {c}"
                )));
            }
            build_product(kind, c, curvature)
        }
    }
}

type Frenet = [V; 3];

fn frenet_rhs(state: &Frenet, k: f64, inv_c: f64) -> Frenet {
    let [phi, dphi, n] = state;
    [*dphi, n.scale(k).axpy(-inv_c, phi), dphi.scale(-k)]
}

fn rk4(state: &Frenet, h: f64, k: [f64; 3], inv_c: f64) -> Frenet {
    let add = |s: &Frenet, d: &Frenet, t: f64| -> Frenet {
        [s[0].axpy(t, &d[0]), s[1].axpy(t, &d[1]), s[2].axpy(t, &d[2])]
    };
    let a1 = frenet_rhs(state, k[0], inv_c);
    let a2 = frenet_rhs(&add(state, &a1, 0.5 * h), k[1], inv_c);
    let a3 = frenet_rhs(&add(state, &a2, 0.5 * h), k[1], inv_c);
    let a4 = frenet_rhs(&add(state, &a3, h), k[2], inv_c);
    let mut out = *state;
    for j in 0..3 {
        out[j] = out[j]
            .axpy(h / 6.0, &a1[j])
            .axpy(h / 3.0, &a2[j])
            .axpy(h / 3.0, &a3[j])
            .axpy(h / 6.0, &a4[j]);
    }
    out
}

/// Integrate `φ₁'' = 𝐤 n - φ₁/C`, `n' = -𝐤 φ₁'` at the grid spacing.
fn integrate_profile(curvature: &ScalarField, init: Frenet, inv_c: f64) -> Vec<Frenet> {
    let g = curvature.grid();
    let h = g.spacing();
    let mut out = Vec::with_capacity(g.n);
    let mut state = init;
    out.push(state);
    for i in 1..g.n {
        let u0 = g.point(i - 1);
        let k = [
            curvature.values()[i - 1],
            curvature.value_at(u0 + 0.5 * h),
            curvature.values()[i],
        ];
        state = rk4(&state, h, k, inv_c);
        out.push(state);
    }
    out
}

fn schwarzian_and_hopf(
    curvature: &ScalarField,
    inv_c: f64,
) -> Result<(ScalarField, ScalarField)> {
    let half_inv_c = ScalarField::constant(*curvature.grid(), 0.5 * inv_c);
    let sq = curvature.mul(curvature)?;
    let c = half_inv_c.axpy(0.25, &sq)?;
    Ok((c, curvature.scale(0.25)))
}

fn build_product(kind: SurfaceKind, c: f64, curvature: ScalarField) -> Result<FrameBundle> {
    let g = *curvature.grid();
    let inv_c = 1.0 / c;
    let r = c.abs().sqrt();
    let (phi1_0, phi2, phi2_prime, w_basis, w_perp) = match kind {
        SurfaceKind::Revolution => (
            V::E0.scale(r),
            V::E3.scale(r),
            V::E4,
            [V::E1, V::E2, V::E0],
            [V::E3, V::E4],
        ),
        _ => (
            V::E3.scale(r),
            V::E0.scale(r),
            V::E4,
            [V::E1, V::E2, V::E3],
            [V::E4, V::E0],
        ),
    };
    let path = integrate_profile(&curvature, [phi1_0, V::E1, V::E2], inv_c);
    let drift = path
        .iter()
        .map(|s| (inner(&s[0], &s[0]) - c).abs())
        .fold(0.0_f64, f64::max);
    let limit = DRIFT_LIMIT * c.abs().max(1.0);
    if drift > limit {
        return Err(Error::IntegrationDrift { drift, limit });
    }
    let kv = curvature.values();
    let mut psi = Vec::with_capacity(g.n);
    let mut normal = Vec::with_capacity(g.n);
    let mut psi_hat = Vec::with_capacity(g.n);
    let mut dv_normal = Vec::with_capacity(g.n);
    let mut dv_hat = Vec::with_capacity(g.n);
    for (s, &k) in path.iter().zip(kv) {
        let [phi1, _, n] = s;
        let p = *phi1 + phi2;
        psi.push(p);
        normal.push(n.axpy(0.5 * k, &p));
        let a = 0.5 * (0.25 * k * k - inv_c);
        let b = 0.5 * (0.25 * k * k + inv_c);
        psi_hat.push(phi1.scale(a).axpy(b, &phi2).axpy(0.5 * k, n));
        dv_normal.push(phi2_prime.scale(0.5 * k));
        dv_hat.push(phi2_prime.scale(b));
    }
    let field = |f: &dyn Fn(&Frenet) -> V| -> Result<VectorField> {
        VectorField::new(g, path.iter().map(f).collect())
    };
    let phi1 = field(&|s| s[0])?;
    let phi1_prime = field(&|s| s[1])?;
    let profile_normal = field(&|s| s[2])?;
    let (schwarzian, hopf) = schwarzian_and_hopf(&curvature, inv_c)?;
    Ok(FrameBundle {
        kind,
        c_param: Some(c),
        grid: g,
        curvature,
        schwarzian,
        hopf,
        psi: VectorField::new(g, psi)?,
        psi_u: phi1_prime.clone(),
        psi_v: VectorField::constant(g, phi2_prime),
        psi_hat: VectorField::new(g, psi_hat)?,
        normal: VectorField::new(g, normal)?,
        dv: VDerivatives {
            psi: VectorField::constant(g, phi2_prime),
            psi_u: VectorField::constant(g, V::ZERO),
            psi_v: VectorField::constant(g, phi2.scale(inv_c)),
            psi_hat: VectorField::new(g, dv_hat)?,
            normal: VectorField::new(g, dv_normal)?,
        },
        phi1,
        phi1_prime,
        profile_normal,
        phi2,
        phi2_prime,
        background: Background::Product { w_basis, w_perp },
        drift,
    })
}

fn build_cylinder(curvature: ScalarField) -> Result<FrameBundle> {
    let g = *curvature.grid();
    let h = g.spacing();
    let v0 = V::v_zero();
    let v_inf = V::v_infinity();
    let e3 = V::E3;

    // planar profile: θ' = 𝐤, (x, y)' = (cos θ, sin θ)
    let mut xs = Vec::with_capacity(g.n);
    let (mut x, mut y, mut th) = (0.0_f64, 0.0_f64, 0.0_f64);
    xs.push((x, y, th));
    for i in 1..g.n {
        let u0 = g.point(i - 1);
        let k = [
            curvature.values()[i - 1],
            curvature.value_at(u0 + 0.5 * h),
            curvature.values()[i],
        ];
        let f = |th: f64, k: f64| (th.cos(), th.sin(), k);
        let a1 = f(th, k[0]);
        let a2 = f(th + 0.5 * h * a1.2, k[1]);
        let a3 = f(th + 0.5 * h * a2.2, k[1]);
        let a4 = f(th + h * a3.2, k[2]);
        x += h / 6.0 * (a1.0 + 2.0 * a2.0 + 2.0 * a3.0 + a4.0);
        y += h / 6.0 * (a1.1 + 2.0 * a2.1 + 2.0 * a3.1 + a4.1);
        th += h / 6.0 * (a1.2 + 2.0 * a2.2 + 2.0 * a3.2 + a4.2);
        xs.push((x, y, th));
    }

    let kv = curvature.values();
    let n_pts = g.n;
    let mut phi1 = Vec::with_capacity(n_pts);
    let mut phi1_prime = Vec::with_capacity(n_pts);
    let mut nvec = Vec::with_capacity(n_pts);
    let mut psi = Vec::with_capacity(n_pts);
    let mut psi_u = Vec::with_capacity(n_pts);
    let mut normal = Vec::with_capacity(n_pts);
    let mut psi_hat = Vec::with_capacity(n_pts);
    let mut dv_normal = Vec::with_capacity(n_pts);
    let mut dv_hat = Vec::with_capacity(n_pts);
    for (&(x, y, th), &k) in xs.iter().zip(kv) {
        let p1 = V::new(x, y, 0.0, 0.0, 0.0);
        let t = V::new(th.cos(), th.sin(), 0.0, 0.0, 0.0);
        let n = V::new(-th.sin(), th.cos(), 0.0, 0.0, 0.0);
        let p = (p1 + v0).axpy(0.5 * inner(&p1, &p1), &v_inf);
        let lifted_n = n.axpy(inner(&n, &p1), &v_inf);
        phi1.push(p1);
        phi1_prime.push(t);
        nvec.push(n);
        psi.push(p);
        psi_u.push(t.axpy(inner(&t, &p1), &v_inf));
        normal.push(lifted_n.axpy(0.5 * k, &p));
        psi_hat.push(v_inf.axpy(0.5 * k, &lifted_n).axpy(0.125 * k * k, &p));
        dv_normal.push(e3.scale(0.5 * k));
        dv_hat.push(e3.scale(0.125 * k * k));
    }
    let (schwarzian, hopf) = schwarzian_and_hopf(&curvature, 0.0)?;
    Ok(FrameBundle {
        kind: SurfaceKind::Cylinder,
        c_param: None,
        grid: g,
        curvature,
        schwarzian,
        hopf,
        psi: VectorField::new(g, psi)?,
        psi_u: VectorField::new(g, psi_u)?,
        psi_v: VectorField::constant(g, e3),
        psi_hat: VectorField::new(g, psi_hat)?,
        normal: VectorField::new(g, normal)?,
        dv: VDerivatives {
            psi: VectorField::constant(g, e3),
            psi_u: VectorField::constant(g, V::ZERO),
            psi_v: VectorField::constant(g, v_inf),
            psi_hat: VectorField::new(g, dv_hat)?,
            normal: VectorField::new(g, dv_normal)?,
        },
        phi1: VectorField::new(g, phi1)?,
        phi1_prime: VectorField::new(g, phi1_prime)?,
        profile_normal: VectorField::new(g, nvec)?,
        phi2: V::ZERO,
        phi2_prime: e3,
        background: Background::NullPair {
            v0,
            v_inf,
            u_basis: [V::E1, V::E2],
            u_perp: e3,
        },
        drift: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    U,
    V,
}

impl FrameBundle {
    pub fn is_sampled(&self) -> bool {
        !self.curvature.is_analytic()
    }

    /// Largest violation of the frame's Gram relations over the grid.
    pub fn gram_deviation(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.grid.n {
            let p = self.psi.get(i);
            let pu = self.psi_u.get(i);
            let pv = self.psi_v.get(i);
            let ph = self.psi_hat.get(i);
            let nn = self.normal.get(i);
            let checks = [
                inner(p, p),
                inner(pu, pu) - 1.0,
                inner(pv, pv) - 1.0,
                inner(pu, pv),
                inner(p, pu),
                inner(p, pv),
                inner(ph, ph),
                inner(ph, p) + 1.0,
                inner(ph, pu),
                inner(ph, pv),
                inner(nn, nn) - 1.0,
                inner(nn, p),
                inner(nn, pu),
                inner(nn, pv),
                inner(nn, ph),
            ];
            worst = checks.iter().fold(worst, |m, x| m.max(x.abs()));
        }
        worst
    }

    /// `η(∂_u) x = -(ψ∧ψ_u) x` or `η(∂_v) x = (ψ∧ψ_v) x`.
    pub fn eta_apply(&self, dir: Direction, x: &VectorField) -> Result<VectorField> {
        x.map(|i, xv| {
            let p = self.psi.get(i);
            match dir {
                Direction::U => -p.wedge(*self.psi_u.get(i)).apply(xv),
                Direction::V => p.wedge(*self.psi_v.get(i)).apply(xv),
            }
        })
    }

    /// The same 1-form in product form, built from the curve data.
    pub fn eta_apply_product(&self, dir: Direction, x: &VectorField) -> Result<VectorField> {
        x.map(|i, xv| {
            let p = *self.psi.get(i);
            match (self.kind, dir) {
                (SurfaceKind::Cylinder, Direction::U) => {
                    let t = *self.phi1_prime.get(i);
                    let lift = t.axpy(inner(&t, self.phi1.get(i)), &V::v_infinity());
                    lift.wedge(p).apply(xv)
                }
                (SurfaceKind::Cylinder, Direction::V) => {
                    let lift = self.phi2_prime.axpy(inner(&self.phi2_prime, &self.phi2), &V::v_infinity());
                    -lift.wedge(p).apply(xv)
                }
                (_, Direction::U) => self.phi1_prime.get(i).wedge(p).apply(xv),
                (_, Direction::V) => -self.phi2_prime.wedge(p).apply(xv),
            }
        })
    }

    /// Real and imaginary parts of `η(∂_z) x = ½(η(∂_u) - i η(∂_v)) x`.
    pub fn eta_z_apply(&self, x: &VectorField) -> Result<(VectorField, VectorField)> {
        let re = self.eta_apply(Direction::U, x)?;
        let im = self.eta_apply(Direction::V, x)?;
        Ok((
            re.map(|_, v| v.scale(0.5))?,
            im.map(|_, v| v.scale(-0.5))?,
        ))
    }

    /// Largest gap between the generic and product forms of `η` on the frame vectors.
    pub fn eta_form_mismatch(&self) -> Result<f64> {
        let mut worst = 0.0_f64;
        for x in [&self.psi, &self.psi_u, &self.psi_v, &self.psi_hat, &self.normal] {
            for dir in [Direction::U, Direction::V] {
                let a = self.eta_apply(dir, x)?;
                let b = self.eta_apply_product(dir, x)?;
                worst = worst.max(a.axpy(-1.0, &b)?.max_norm());
            }
        }
        Ok(worst)
    }

    /// `∂_u(η(∂_v)) - ∂_v(η(∂_u))` applied to each ambient basis vector.
    pub fn closedness_residual(&self) -> Result<f64> {
        let g = self.grid;
        let mut worst = 0.0_f64;
        for e in [V::E1, V::E2, V::E3, V::E4, V::E0] {
            let ex = VectorField::constant(g, e);
            let du_eta_v = self.eta_apply(Direction::V, &ex)?.fd_differentiate(1)?;
            // ∂_v(-ψ∧ψ_u) = -(ψ_v∧ψ_u) - (ψ∧∂_vψ_u)
            let dv_eta_u = ex.map(|i, x| {
                let p = self.psi.get(i);
                -(self.dv.psi.get(i).wedge(*self.psi_u.get(i)).apply(x))
                    - p.wedge(*self.dv.psi_u.get(i)).apply(x)
            })?;
            worst = worst.max(du_eta_v.axpy(-1.0, &dv_eta_u)?.max_norm());
        }
        Ok(worst)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StructureResiduals {
    /// `ψ_zz + (c/2)ψ - κ`
    pub psi_zz: f64,
    /// `ψ_zz̄ + (κ,κ̄)ψ - ψ̂/2`
    pub psi_zzbar: f64,
    /// `ψ̂_z + 2(κ,κ̄)ψ_z + cψ_z̄ - 2D_z̄κ`
    pub psi_hat_z: f64,
    /// `c_z̄ - 4(κ,κ)_z` in the real form `c'/2 - 2(k²)'`
    pub gauss: f64,
}

impl StructureResiduals {
    pub fn max(&self) -> f64 {
        self.psi_zz
            .max(self.psi_zzbar)
            .max(self.psi_hat_z)
            .max(self.gauss)
    }
}

/// Residuals of the frame equations with `u`-derivatives taken by stencils.
pub fn structure_residuals(fb: &FrameBundle) -> Result<StructureResiduals> {
    let g = fb.grid;
    let c = fb.schwarzian.values();
    let k = fb.hopf.values();
    let dk = fb.hopf.derivative(1)?;
    let dk = dk.values();
    let psi_uu = fb.psi_u.fd_differentiate(1)?;
    let psi_uv = fb.psi_v.fd_differentiate(1)?;
    let psi_hat_u = fb.psi_hat.fd_differentiate(1)?;

    let mut r = StructureResiduals {
        psi_zz: 0.0,
        psi_zzbar: 0.0,
        psi_hat_z: 0.0,
        gauss: 0.0,
    };
    for i in 0..g.n {
        let p = fb.psi.get(i);
        let nn = fb.normal.get(i);
        let puu = psi_uu.get(i);
        let pvv = fb.dv.psi_v.get(i);
        let re = (*puu - *pvv).scale(0.25).axpy(0.5 * c[i], p).axpy(-k[i], nn);
        let im = psi_uv.get(i).scale(-0.5);
        r.psi_zz = r.psi_zz.max(re.max_abs()).max(im.max_abs());

        let kk = k[i] * k[i];
        let zzbar = (*puu + *pvv)
            .scale(0.25)
            .axpy(kk, p)
            .axpy(-0.5, fb.psi_hat.get(i));
        r.psi_zzbar = r.psi_zzbar.max(zzbar.max_abs());

        let re = psi_hat_u
            .get(i)
            .scale(0.5)
            .axpy(kk + 0.5 * c[i], fb.psi_u.get(i))
            .axpy(-dk[i], nn);
        let im = fb
            .dv
            .psi_hat
            .get(i)
            .scale(-0.5)
            .axpy(-(kk - 0.5 * c[i]), fb.psi_v.get(i));
        r.psi_hat_z = r.psi_hat_z.max(re.max_abs()).max(im.max_abs());
    }
    let dc = fb.schwarzian.fd_differentiate(1)?;
    let dk2 = fb.hopf.mul(&fb.hopf)?.fd_differentiate(1)?;
    r.gauss = dc.axpy(-4.0, &dk2)?.scale(0.5).max_abs();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Formula;

    fn spec(kind: SurfaceKind, c: Option<f64>, profile: ProfileSpec) -> SurfaceSpec {
        SurfaceSpec {
            kind,
            c,
            profile,
            grid: GridSpec::unit(512).unwrap(),
        }
    }

    fn sine() -> ProfileSpec {
        ProfileSpec::Formula {
            formula: Formula::Sine {
                offset: 1.0,
                amplitude: 0.5,
                frequency: 2.0,
                phase: 0.3,
            },
        }
    }

    #[test]
    fn spec_validation() {
        let p = ProfileSpec::Constant { value: 1.0 };
        assert!(build_frame(&spec(SurfaceKind::Revolution, Some(0.0), p.clone())).is_err());
        assert!(build_frame(&spec(SurfaceKind::Revolution, Some(1.0), p.clone())).is_err());
        assert!(build_frame(&spec(SurfaceKind::Cone, Some(-1.0), p.clone())).is_err());
        assert!(build_frame(&spec(SurfaceKind::Cone, None, p.clone())).is_err());
        assert!(build_frame(&spec(SurfaceKind::Cylinder, Some(1.0), p)).is_err());
    }

    #[test]
    fn round_cylinder_invariants() {
        let fb = build_frame(&spec(
            SurfaceKind::Cylinder,
            None,
            ProfileSpec::Constant { value: 2.0 },
        ))
        .unwrap();
        assert!(fb.schwarzian.values().iter().all(|&c| c == 1.0));
        assert!(fb.hopf.values().iter().all(|&k| k == 0.5));
        assert!(fb.gram_deviation() < 1e-12);
        let r = structure_residuals(&fb).unwrap();
        assert!(r.max() < 1e-9, "{r:?}");
    }

    #[test]
    fn flat_cylinder_has_parallel_normal() {
        let fb = build_frame(&spec(
            SurfaceKind::Cylinder,
            None,
            ProfileSpec::Constant { value: 0.0 },
        ))
        .unwrap();
        assert!(fb.schwarzian.max_abs() == 0.0 && fb.hopf.max_abs() == 0.0);
        let n0 = *fb.normal.get(0);
        for (n, p1) in fb.normal.samples().iter().zip(fb.profile_normal.samples()) {
            assert!((*n - n0).max_abs() < 1e-12);
            let want = p1.axpy(inner(p1, fb.phi1.get(0)), &V::v_infinity());
            assert!((*n - want).max_abs() < 1e-12);
        }
        let r = structure_residuals(&fb).unwrap();
        assert!(r.max() < 1e-12, "{r:?}");
    }

    #[test]
    fn geodesic_cone_profile_is_great_circle() {
        let fb = build_frame(&spec(
            SurfaceKind::Cone,
            Some(1.0),
            ProfileSpec::Constant { value: 0.0 },
        ))
        .unwrap();
        assert!(fb.schwarzian.values().iter().all(|&c| c == 0.5));
        let acc = fb.phi1_prime.fd_differentiate(1).unwrap();
        for (a, p) in acc.samples().iter().zip(fb.phi1.samples()) {
            assert!((*a + *p).max_abs() < 1e-9);
        }
        for (i, u) in fb.grid.points().iter().enumerate() {
            let want = V::new(u.sin(), 0.0, u.cos(), 0.0, 0.0);
            assert!((*fb.phi1.get(i) - want).max_abs() < 1e-12);
        }
    }

    #[test]
    fn all_kinds_satisfy_frame_equations() {
        for (kind, c) in [
            (SurfaceKind::Revolution, Some(-1.5)),
            (SurfaceKind::Cone, Some(0.8)),
            (SurfaceKind::Cylinder, None),
        ] {
            let fb = build_frame(&spec(kind, c, sine())).unwrap();
            assert!(fb.gram_deviation() < 1e-10, "{kind:?}: {}", fb.gram_deviation());
            let r = structure_residuals(&fb).unwrap();
            assert!(r.max() < 1e-8, "{kind:?}: {r:?}");
            assert!(fb.eta_form_mismatch().unwrap() < 1e-12);
            assert!(fb.closedness_residual().unwrap() < 1e-8);
        }
    }

    #[test]
    fn eta_annihilates_lift_and_normal() {
        let fb = build_frame(&spec(SurfaceKind::Revolution, Some(-1.0), sine())).unwrap();
        for dir in [Direction::U, Direction::V] {
            assert!(fb.eta_apply(dir, &fb.psi).unwrap().max_norm() < 1e-12);
            assert!(fb.eta_apply(dir, &fb.normal).unwrap().max_norm() < 1e-10);
        }
    }

    #[test]
    fn elastic_revolution_gauss_residual() {
        let p = ProfileSpec::Elastic {
            c: None,
            alpha: 0.5,
            k0: 1.0,
            dk0: 0.2,
            forcing: 0.0,
        };
        let fb = build_frame(&spec(SurfaceKind::Revolution, Some(-1.0), p)).unwrap();
        let r = structure_residuals(&fb).unwrap();
        assert!(r.gauss < 1e-7);
        assert!(fb.drift < 1e-12);
    }
}
