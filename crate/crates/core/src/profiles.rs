//! Curvature data `𝐤(u)` of profile curves.
//!
//! Closed-form families and elastic curves come with exact derivative jets;
//! elastic jets are produced by the Taylor recursion of the curvature ODE at
//! every grid point, so no derivative is ever taken by differencing.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{format_real, GridSpec, ScalarField};

/// Number of exact derivatives attached to analytic profiles.
pub const PROFILE_JET_ORDER: usize = 22;

/// `|𝐤|` beyond which an elastic integration is declared escaped.
pub const ESCAPE_LIMIT: f64 = 1e6;

/// Largest recursion depth a sampled profile supports.
pub const SAMPLED_MAX_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Formula {
    /// `offset + amplitude · sin(frequency · u + phase)`
    Sine {
        offset: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `Σ coefficients[j] · u^j`
    Polynomial { coefficients: Vec<f64> },
}

impl Formula {
    /// Derivative of order `j` at `u`.
    pub fn derivative_at(&self, j: usize, u: f64) -> f64 {
        match self {
            Formula::Sine {
                offset,
                amplitude,
                frequency,
                phase,
            } => {
                let arg = frequency * u + phase + j as f64 * std::f64::consts::FRAC_PI_2;
                let base = if j == 0 { *offset } else { 0.0 };
                base + amplitude * frequency.powi(j as i32) * arg.sin()
            }
            Formula::Polynomial { coefficients } => {
                // Horner on the j-th derivative's coefficients
                let mut acc = 0.0;
                for (p, &a) in coefficients.iter().enumerate().skip(j).rev() {
                    let falling: f64 = ((p - j + 1)..=p).map(|x| x as f64).product();
                    acc = acc * u + a * falling;
                }
                acc
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        value: f64,
    },
    Formula {
        formula: Formula,
    },
    /// Solution of `𝐤'' = forcing - (1/C + alpha) 𝐤 - 𝐤³/2`; `c = None` is
    /// the cylinder case where the `1/C` term is absent.
    Elastic {
        #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
        alpha: f64,
        k0: f64,
        dk0: f64,
        #[serde(default)]
        forcing: f64,
    },
    Samples {
        values: Vec<f64>,
    },
}

impl ProfileSpec {
    pub fn is_sampled(&self) -> bool {
        matches!(self, ProfileSpec::Samples { .. })
    }

    /// Fill in the space-form constant of an elastic profile from its surface.
    pub fn with_surface_constant(self, surface_c: Option<f64>) -> Self {
        match self {
            ProfileSpec::Elastic {
                c: None,
                alpha,
                k0,
                dk0,
                forcing,
            } => ProfileSpec::Elastic {
                c: surface_c,
                alpha,
                k0,
                dk0,
                forcing,
            },
            other => other,
        }
    }
}

/// Generate `𝐤` on the grid; analytic kinds carry [`PROFILE_JET_ORDER`] exact derivatives.
pub fn generate(p: &ProfileSpec, g: &GridSpec) -> Result<ScalarField> {
    generate_with_order(p, g, PROFILE_JET_ORDER)
}

pub fn generate_with_order(p: &ProfileSpec, g: &GridSpec, order: usize) -> Result<ScalarField> {
    g.validate()?;
    match p {
        ProfileSpec::Constant { value } => {
            if !value.is_finite() {
                return Err(Error::InvalidProfile("constant must be finite".into()));
            }
            Ok(ScalarField::constant(*g, *value))
        }
        ProfileSpec::Formula { formula } => {
            let pts = g.points();
            let jets = (0..=order)
                .map(|j| pts.iter().map(|&u| formula.derivative_at(j, u)).collect())
                .collect();
            ScalarField::analytic(*g, jets)
        }
        ProfileSpec::Elastic {
            c,
            alpha,
            k0,
            dk0,
            forcing,
        } => {
            let linear = match c {
                Some(c) if *c == 0.0 => {
                    return Err(Error::InvalidProfile("elastic profile needs C != 0".into()))
                }
                Some(c) => 1.0 / c + alpha,
                None => *alpha,
            };
            let ode = ElasticOde {
                linear,
                forcing: *forcing,
            };
            ode.generate(*k0, *dk0, g, order)
        }
        ProfileSpec::Samples { values } => {
            if values.len() != g.n {
                return Err(Error::InvalidProfile(format!(
                    "{} samples for a grid of {} points",
                    values.len(),
                    g.n
                )));
            }
            ScalarField::from_samples(*g, values.clone())
        }
    }
}

/// `𝐤'' = forcing - linear · 𝐤 - 𝐤³/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticOde {
    pub linear: f64,
    pub forcing: f64,
}

impl ElasticOde {
    pub fn acceleration(&self, k: f64) -> f64 {
        self.forcing - self.linear * k - 0.5 * k * k * k
    }

    /// First integral `𝐤'²/2 + linear 𝐤²/2 + 𝐤⁴/8 - forcing 𝐤`.
    pub fn energy(&self, k: f64, dk: f64) -> f64 {
        0.5 * dk * dk + 0.5 * self.linear * k * k + k.powi(4) / 8.0 - self.forcing * k
    }

    fn rk4_step(&self, k: f64, dk: f64, h: f64) -> (f64, f64) {
        let a1 = (dk, self.acceleration(k));
        let s2 = (k + 0.5 * h * a1.0, dk + 0.5 * h * a1.1);
        let a2 = (s2.1, self.acceleration(s2.0));
        let s3 = (k + 0.5 * h * a2.0, dk + 0.5 * h * a2.1);
        let a3 = (s3.1, self.acceleration(s3.0));
        let s4 = (k + h * a3.0, dk + h * a3.1);
        let a4 = (s4.1, self.acceleration(s4.0));
        (
            k + h / 6.0 * (a1.0 + 2.0 * a2.0 + 2.0 * a3.0 + a4.0),
            dk + h / 6.0 * (a1.1 + 2.0 * a2.1 + 2.0 * a3.1 + a4.1),
        )
    }

    /// Derivatives `𝐤^(0..=order)` at a point from `(𝐤, 𝐤')` via Taylor coefficients.
    pub fn jet(&self, k: f64, dk: f64, order: usize) -> Vec<f64> {
        let mut t = vec![0.0; order.max(1) + 1];
        t[0] = k;
        t[1] = dk;
        // sq[j] = Σ t_a t_{j-a}
        let mut sq = vec![0.0; order + 1];
        for j in 0..order.saturating_sub(1) {
            sq[j] = (0..=j).map(|a| t[a] * t[j - a]).sum();
            let cube: f64 = (0..=j).map(|a| sq[a] * t[j - a]).sum();
            let forcing = if j == 0 { self.forcing } else { 0.0 };
            t[j + 2] = (forcing - self.linear * t[j] - 0.5 * cube) / ((j + 1) * (j + 2)) as f64;
        }
        t.truncate(order + 1);
        let mut fact = 1.0;
        for (j, x) in t.iter_mut().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            *x *= fact;
        }
        t
    }

    /// RK4 at the grid spacing, then exact jets from the ODE at each sample.
    pub fn generate(&self, k0: f64, dk0: f64, g: &GridSpec, order: usize) -> Result<ScalarField> {
        if !(k0.is_finite() && dk0.is_finite()) {
            return Err(Error::InvalidProfile(
                "elastic initial data must be finite".into(),
            ));
        }
        let h = g.spacing();
        let mut jets = vec![vec![0.0; g.n]; order + 1];
        let (mut k, mut dk) = (k0, dk0);
        for i in 0..g.n {
            if i > 0 {
                (k, dk) = self.rk4_step(k, dk, h);
            }
            if !k.is_finite() || k.abs() > ESCAPE_LIMIT {
                return Err(Error::ProfileEscaped {
                    u: g.point(i),
                    limit: ESCAPE_LIMIT,
                });
            }
            for (row, v) in jets.iter_mut().zip(self.jet(k, dk, order)) {
                row[i] = v;
            }
        }
        ScalarField::analytic(*g, jets)
    }
}

/// Read curvature samples from a CSV with a `k` column.
pub fn read_samples_csv<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(input);
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h.trim() == "k")
        .ok_or_else(|| Error::InvalidProfile("CSV has no `k` column".into()))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = rec
            .get(col)
            .ok_or_else(|| Error::InvalidProfile("short CSV row".into()))?;
        let v: f64 = field
            .trim()
            .parse()
            .map_err(|_| Error::InvalidProfile(format!("not a number: `{field}`")))?;
        out.push(v);
    }
    Ok(out)
}

/// Write curvature samples as `u,k`.
pub fn write_samples_csv<W: Write>(k: &ScalarField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["u", "k"])?;
    for (i, v) in k.values().iter().enumerate() {
        w.write_record([format_real(k.grid().point(i)), format_real(*v)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn grid() -> GridSpec {
        GridSpec::unit(512).unwrap()
    }

    #[test]
    fn constant_profile() {
        let k = generate(&ProfileSpec::Constant { value: 2.0 }, &grid()).unwrap();
        assert!(k.values().iter().all(|&x| x == 2.0));
        for j in 1..=6 {
            assert_eq!(k.derivative(j).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn sine_formula_jets() {
        let f = ProfileSpec::Formula {
            formula: Formula::Sine {
                offset: 2.0,
                amplitude: 1.0,
                frequency: 1.0,
                phase: 0.0,
            },
        };
        let k = generate(&f, &grid()).unwrap();
        let pts = grid().points();
        let d1 = k.derivative(1).unwrap();
        let d2 = k.derivative(2).unwrap();
        let d3 = k.derivative(3).unwrap();
        for (i, u) in pts.iter().enumerate() {
            assert_abs_diff_eq!(k.values()[i], 2.0 + u.sin(), epsilon = 1e-15);
            assert_abs_diff_eq!(d1.values()[i], u.cos(), epsilon = 1e-15);
            assert_abs_diff_eq!(d2.values()[i], -u.sin(), epsilon = 1e-15);
            assert_abs_diff_eq!(d3.values()[i], -u.cos(), epsilon = 1e-15);
        }
    }

    #[test]
    fn polynomial_formula_jets() {
        let f = Formula::Polynomial {
            coefficients: vec![1.0, -2.0, 0.5, 3.0],
        };
        let u: f64 = 0.7;
        assert_abs_diff_eq!(
            f.derivative_at(0, u),
            1.0 - 2.0 * u + 0.5 * u * u + 3.0 * u.powi(3),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(f.derivative_at(1, u), -2.0 + u + 9.0 * u * u, epsilon = 1e-14);
        assert_abs_diff_eq!(f.derivative_at(3, u), 18.0, epsilon = 1e-14);
        assert_eq!(f.derivative_at(4, u), 0.0);
    }

    #[test]
    fn elastic_energy_is_conserved() {
        let ode = ElasticOde {
            linear: 0.0,
            forcing: 0.0,
        };
        let k = ode.generate(1.0, 0.0, &grid(), 6).unwrap();
        let dk = k.derivative(1).unwrap();
        let e0 = 1.0 / 8.0;
        for (a, b) in k.values().iter().zip(dk.values()) {
            // oracle: E = 𝐤'²/2 + 𝐤⁴/8, independent of the integrator
            let e = 0.5 * b * b + a.powi(4) / 8.0;
            assert!((e - e0).abs() < 1e-10, "{}", (e - e0).abs());
        }
    }

    #[test]
    fn elastic_jets_satisfy_ode_and_its_derivative() {
        let p = ProfileSpec::Elastic {
            c: Some(-1.0),
            alpha: 0.3,
            k0: 1.2,
            dk0: 0.4,
            forcing: 0.0,
        };
        let k = generate(&p, &grid()).unwrap();
        let d1 = k.derivative(1).unwrap();
        let d2 = k.derivative(2).unwrap();
        let d3 = k.derivative(3).unwrap();
        let lin = -1.0 + 0.3;
        for i in 0..k.len() {
            let (a, b) = (k.values()[i], d1.values()[i]);
            let ode = d2.values()[i] + lin * a + 0.5 * a.powi(3);
            assert!(ode.abs() < 1e-12);
            let ode_d = d3.values()[i] + lin * b + 1.5 * a * a * b;
            assert!(ode_d.abs() < 1e-12);
        }
        // jets agree with stencils on the RK4 samples
        let fd = k.fd_differentiate(2).unwrap();
        assert!(fd.sub(&d2).unwrap().max_abs() < 1e-8);
    }

    #[test]
    fn escaped_profile_errors() {
        let p = ProfileSpec::Elastic {
            c: None,
            alpha: -50.0,
            k0: 1.0,
            dk0: 0.0,
            forcing: 0.0,
        };
        let g = GridSpec::new(64, 0.0, 20.0, false).unwrap();
        assert!(matches!(
            generate(&p, &g),
            Err(Error::ProfileEscaped { .. })
        ));
    }

    #[test]
    fn samples_roundtrip_csv() {
        let g = GridSpec::unit(16).unwrap();
        let vals: Vec<f64> = g.points().iter().map(|u| 1.0 + u * u / 3.0).collect();
        let k = generate(&ProfileSpec::Samples { values: vals.clone() }, &g).unwrap();
        assert!(!k.is_analytic());
        let mut buf = Vec::new();
        write_samples_csv(&k, &mut buf).unwrap();
        assert_eq!(read_samples_csv(buf.as_slice()).unwrap(), vals);
        assert!(generate(&ProfileSpec::Samples { values: vec![1.0; 3] }, &g).is_err());
    }

    #[test]
    fn spec_json_shape() {
        let p: ProfileSpec =
            serde_json::from_str(r#"{"kind":"formula","formula":{"family":"sine","offset":2,"amplitude":1,"frequency":1}}"#)
                .unwrap();
        assert!(matches!(p, ProfileSpec::Formula { .. }));
        let e: ProfileSpec =
            serde_json::from_str(r#"{"kind":"elastic","alpha":1,"k0":1,"dk0":0}"#).unwrap();
        assert_eq!(
            e.with_surface_constant(Some(2.0)),
            ProfileSpec::Elastic {
                c: Some(2.0),
                alpha: 1.0,
                k0: 1.0,
                dk0: 0.0,
                forcing: 0.0
            }
        );
        assert!(serde_json::from_str::<ProfileSpec>(r#"{"kind":"constant","value":1,"x":2}"#).is_err());
    }
}
