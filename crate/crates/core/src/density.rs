//! Radial densities `α` on `[0,∞)` and `ξ` on `(0,∞)` with bounded support.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    /// Continuous on `[0,∞)`.
    Alpha,
    /// Continuous on `(0,∞)`, possibly singular at the origin.
    Xi,
}

/// Built-in profile families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum ProfileSpec {
    /// `max(0, 1 − t/R)`.
    Hat { radius: f64 },
    /// `exp(1 − 1/(1 − (t/R)²))` on `[0, R)`, normalized so the value at 0 is 1.
    Bump { radius: f64 },
    /// `t^{−p} · max(0, 1 − t/R)`.
    Power { p: f64, radius: f64 },
}

impl ProfileSpec {
    pub fn radius(&self) -> f64 {
        match *self {
            ProfileSpec::Hat { radius }
            | ProfileSpec::Bump { radius }
            | ProfileSpec::Power { radius, .. } => radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub kind: DensityKind,
    #[serde(flatten)]
    pub profile: ProfileSpec,
}

type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct RadialDensity {
    kind: DensityKind,
    spec: Option<ProfileSpec>,
    profile: Profile,
    support_radius: f64,
    origin_value: Option<f64>,
    admissible: bool,
}

impl fmt::Debug for RadialDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialDensity")
            .field("kind", &self.kind)
            .field("spec", &self.spec)
            .field("support_radius", &self.support_radius)
            .field("origin_value", &self.origin_value)
            .field("admissible", &self.admissible)
            .finish()
    }
}

/// Smallest sampled `t` is `δ·10^{-ADMISSIBILITY_DECADES}`.
const ADMISSIBILITY_DECADES: i32 = 300;
const ADMISSIBILITY_TAIL: i32 = 250;
const ADMISSIBILITY_TOL: f64 = 1e-6;

pub fn make_radial_density(kind: DensityKind, profile: ProfileSpec) -> Result<RadialDensity> {
    let r = profile.radius();
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "support radius {r} must be positive"
        )));
    }
    let f: Profile = match profile {
        ProfileSpec::Hat { radius } => Arc::new(move |t: f64| (1.0 - t / radius).max(0.0)),
        ProfileSpec::Bump { radius } => Arc::new(move |t: f64| {
            let s = t / radius;
            if s >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - s * s)).exp()
            }
        }),
        ProfileSpec::Power { p, radius } => {
            if !p.is_finite() {
                return Err(Error::InvalidArgument(
                    "power exponent must be finite".into(),
                ));
            }
            if kind == DensityKind::Alpha && p > 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "power profile with p = {p} > 0 is singular at 0 and needs kind xi"
                )));
            }
            if kind == DensityKind::Xi && p >= 1.0 {
                return Err(Error::Inadmissible(format!(
                    "ξ(t) = t^(-{p})·hat(t) has ξ(t)·t ↛ 0 as t → 0⁺ (admissibility requires p < 1)"
                )));
            }
            Arc::new(move |t: f64| {
                let hat = (1.0 - t / radius).max(0.0);
                if hat == 0.0 {
                    0.0
                } else {
                    t.powf(-p) * hat
                }
            })
        }
    };
    let d = RadialDensity::build(kind, f, r, Some(profile))?;
    if kind == DensityKind::Xi && !d.admissible {
        return Err(Error::Inadmissible(
            "sampled ξ(t)·t does not decay to 0 as t → 0⁺".into(),
        ));
    }
    Ok(d)
}

impl RadialDensity {
    /// A user-supplied profile; admissibility is decided by sampling, and an
    /// inadmissible `ξ` is returned flagged rather than rejected.
    pub fn from_fn(
        kind: DensityKind,
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support_radius: f64,
    ) -> Result<Self> {
        if !(support_radius > 0.0 && support_radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "support radius {support_radius} must be positive"
            )));
        }
        RadialDensity::build(kind, Arc::new(profile), support_radius, None)
    }

    fn build(kind: DensityKind, f: Profile, r: f64, spec: Option<ProfileSpec>) -> Result<Self> {
        let (origin_value, admissible) = match kind {
            DensityKind::Alpha => {
                let a0 = f(0.0);
                if !a0.is_finite() {
                    return Err(Error::InvalidArgument("α(0) must be finite".into()));
                }
                (Some(a0), true)
            }
            DensityKind::Xi => (None, xi_tail_vanishes(&*f, r)),
        };
        Ok(RadialDensity {
            kind,
            spec,
            profile: f,
            support_radius: r,
            origin_value,
            admissible,
        })
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn spec(&self) -> Option<DensitySpec> {
        self.spec.clone().map(|profile| DensitySpec {
            kind: self.kind,
            profile,
        })
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// `α(0)`; `None` for kind xi.
    pub fn origin_value(&self) -> Option<f64> {
        self.origin_value
    }

    pub fn is_admissible(&self) -> bool {
        self.admissible
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t > self.support_radius {
            0.0
        } else {
            (self.profile)(t)
        }
    }

    /// `ζ(x) = profile(|x|)`.
    pub fn at(&self, x: &[f64]) -> f64 {
        self.eval(linalg::norm(x))
    }

    /// `ψ(x) = profile(|x|)·x`, extended by `ψ(o) = o`.
    pub fn psi(&self, x: &[f64]) -> Vec<f64> {
        let t = linalg::norm(x);
        if t == 0.0 {
            return vec![0.0; x.len()];
        }
        linalg::scale(x, self.eval(t))
    }

    /// `∫_{R^n} profile(|x|) dx` by composite Gauss–Legendre in the radius.
    pub fn radial_integral(&self, n: usize) -> f64 {
        let sphere = match n {
            1 => 2.0,
            2 => 2.0 * std::f64::consts::PI,
            3 => 4.0 * std::f64::consts::PI,
            _ => f64::NAN,
        };
        let r = self.support_radius;
        let panels = 256;
        let (nodes, weights) = gauss_legendre_16();
        let w = r / panels as f64;
        let mut acc = 0.0;
        for k in 0..panels {
            let a = k as f64 * w;
            let mut part = 0.0;
            for (x, wt) in nodes.iter().zip(&weights) {
                let t = a + 0.5 * w * (1.0 + x);
                part += wt * self.eval(t) * t.powi(n as i32 - 1);
            }
            acc += 0.5 * w * part;
        }
        sphere * acc
    }
}

fn xi_tail_vanishes(f: &dyn Fn(f64) -> f64, r: f64) -> bool {
    let delta = 0.5 * r.min(1.0);
    (ADMISSIBILITY_TAIL..=ADMISSIBILITY_DECADES).all(|k| {
        let t = delta * 10f64.powi(-k);
        let g = (f(t) * t).abs();
        g.is_finite() && g <= ADMISSIBILITY_TOL
    })
}

/// 16-point Gauss–Legendre rule on `[-1, 1]`, nodes by Newton iteration.
fn gauss_legendre_16() -> (Vec<f64>, Vec<f64>) {
    let n = 16;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hat_alpha_has_unit_origin_value() {
        let a = make_radial_density(DensityKind::Alpha, ProfileSpec::Hat { radius: 1.0 }).unwrap();
        assert_eq!(a.origin_value(), Some(1.0));
        assert!(a.is_admissible());
        assert_eq!(a.eval(1.5), 0.0);
        assert_eq!(a.eval(0.25), 0.75);
    }

    #[test]
    fn power_xi_admissibility() {
        let x = make_radial_density(
            DensityKind::Xi,
            ProfileSpec::Power {
                p: 0.5,
                radius: 1.0,
            },
        )
        .unwrap();
        assert!(x.is_admissible());
        assert_eq!(x.psi(&[0.0, 0.0]), vec![0.0, 0.0]);
        let e = make_radial_density(
            DensityKind::Xi,
            ProfileSpec::Power {
                p: 1.0,
                radius: 1.0,
            },
        );
        assert!(matches!(e, Err(Error::Inadmissible(_))));
        let p9 = make_radial_density(
            DensityKind::Xi,
            ProfileSpec::Power {
                p: 0.9,
                radius: 1.0,
            },
        );
        assert!(p9.is_ok());
    }

    #[test]
    fn custom_xi_with_singular_tail_is_flagged() {
        let d = RadialDensity::from_fn(DensityKind::Xi, |t| 1.0 / t, 1.0).unwrap();
        assert!(!d.is_admissible());
        let d = RadialDensity::from_fn(DensityKind::Xi, |t| 1.0 / t.sqrt(), 1.0).unwrap();
        assert!(d.is_admissible());
    }

    #[test]
    fn radial_integrals_of_the_hat() {
        let a = make_radial_density(DensityKind::Alpha, ProfileSpec::Hat { radius: 1.0 }).unwrap();
        assert!((a.radial_integral(1) - 1.0).abs() < 1e-13);
        assert!((a.radial_integral(2) - PI / 3.0).abs() < 1e-13);
        assert!((a.radial_integral(3) - PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let s = DensitySpec {
            kind: DensityKind::Xi,
            profile: ProfileSpec::Power {
                p: 0.5,
                radius: 2.0,
            },
        };
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"kind":"xi","profile":"power","p":0.5,"radius":2.0}"#);
        let back: DensitySpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }
}
