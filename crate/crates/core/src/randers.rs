//! Invariant Randers norms on the tangent model space `m = m0 + m1`.
//!
//! Unitary spheres and `SU(2)` carry `F(q, u) = sqrt(a q^2 + b |u|^2) + c q`
//! with `q` real and `u` complex. The `Sp(n+1)U(1)` spheres carry
//! `F = sqrt(a1 l1^2 + a2 (l2^2 + l3^2) + b |u|^2) + c l1` where
//! `q = l1 i + l2 j + l3 k` and `u` is a quaternion vector. The standard
//! inner product on `m` is the case with every quadratic weight equal to one.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::matrixcore::ComplexVector;
use crate::quaternion::Quaternion;

/// A homogeneous Randers metric on one of the model spheres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRecord", into = "SpecRecord")]
pub enum RandersSpec {
    /// `S^{2n+1} = U(n+1)/U(n)`.
    USphere { n: usize, a: f64, b: f64, c: f64 },
    /// `S^{4n+3} = Sp(n+1)U(1)/Sp(n)U(1)`.
    SpSphere { n: usize, a1: f64, a2: f64, b: f64, c: f64 },
    /// `S^3 = SU(2)` with the extra circle factor of the isometry group.
    Su2 { a: f64, b: f64, c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FamilyTag {
    USphere,
    SpSphere,
    Su2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpecRecord {
    family: FamilyTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    b: f64,
    c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a2: Option<f64>,
}

impl TryFrom<SpecRecord> for RandersSpec {
    type Error = String;

    fn try_from(r: SpecRecord) -> std::result::Result<Self, String> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| format!("missing field `{name}`"));
        let need_n = || r.n.ok_or_else(|| "missing field `n`".to_string());
        Ok(match r.family {
            FamilyTag::USphere => RandersSpec::USphere {
                n: need_n()?,
                a: need(r.a, "a")?,
                b: r.b,
                c: r.c,
            },
            FamilyTag::SpSphere => RandersSpec::SpSphere {
                n: need_n()?,
                a1: need(r.a1, "a1")?,
                a2: need(r.a2, "a2")?,
                b: r.b,
                c: r.c,
            },
            FamilyTag::Su2 => {
                if let Some(n) = r.n {
                    if n != 1 {
                        return Err(format!("su2 family has n = 1, got {n}"));
                    }
                }
                RandersSpec::Su2 {
                    a: need(r.a, "a")?,
                    b: r.b,
                    c: r.c,
                }
            }
        })
    }
}

impl From<RandersSpec> for SpecRecord {
    fn from(s: RandersSpec) -> Self {
        match s {
            RandersSpec::USphere { n, a, b, c } => SpecRecord {
                family: FamilyTag::USphere,
                n: Some(n),
                a: Some(a),
                b,
                c,
                a1: None,
                a2: None,
            },
            RandersSpec::SpSphere { n, a1, a2, b, c } => SpecRecord {
                family: FamilyTag::SpSphere,
                n: Some(n),
                a: None,
                b,
                c,
                a1: Some(a1),
                a2: Some(a2),
            },
            RandersSpec::Su2 { a, b, c } => SpecRecord {
                family: FamilyTag::Su2,
                n: Some(1),
                a: Some(a),
                b,
                c,
                a1: None,
                a2: None,
            },
        }
    }
}

/// A failed inequality of a [`RandersSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub constraint: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "violated {}: {}", self.constraint, self.detail)
    }
}

impl RandersSpec {
    /// Round metric on `S^{2n+1}`.
    pub fn round(n: usize) -> Self {
        RandersSpec::USphere { n, a: 1.0, b: 1.0, c: 0.0 }
    }

    pub fn c(&self) -> f64 {
        match *self {
            RandersSpec::USphere { c, .. } | RandersSpec::SpSphere { c, .. } | RandersSpec::Su2 { c, .. } => c,
        }
    }

    pub fn b(&self) -> f64 {
        match *self {
            RandersSpec::USphere { b, .. } | RandersSpec::SpSphere { b, .. } | RandersSpec::Su2 { b, .. } => b,
        }
    }

    /// Weight of `q^2` (resp. `l1^2`) in `alpha^2`.
    pub fn a_axis(&self) -> f64 {
        match *self {
            RandersSpec::USphere { a, .. } | RandersSpec::Su2 { a, .. } => a,
            RandersSpec::SpSphere { a1, .. } => a1,
        }
    }

    /// Number of `m1` coordinates (complex for the unitary families,
    /// quaternionic for the symplectic one).
    pub fn m1_len(&self) -> usize {
        match *self {
            RandersSpec::USphere { n, .. } | RandersSpec::SpSphere { n, .. } => n,
            RandersSpec::Su2 { .. } => 1,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            RandersSpec::USphere { .. } => "u_sphere",
            RandersSpec::SpSphere { .. } => "sp_sphere",
            RandersSpec::Su2 { .. } => "su2",
        }
    }

    /// Scales the metric by `lambda > 0`: quadratic weights by `lambda^2`,
    /// `c` by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Self {
        let l2 = lambda * lambda;
        match *self {
            RandersSpec::USphere { n, a, b, c } => RandersSpec::USphere {
                n,
                a: a * l2,
                b: b * l2,
                c: c * lambda,
            },
            RandersSpec::SpSphere { n, a1, a2, b, c } => RandersSpec::SpSphere {
                n,
                a1: a1 * l2,
                a2: a2 * l2,
                b: b * l2,
                c: c * lambda,
            },
            RandersSpec::Su2 { a, b, c } => RandersSpec::Su2 {
                a: a * l2,
                b: b * l2,
                c: c * lambda,
            },
        }
    }

    /// Validated evaluator for this metric.
    pub fn norm(&self) -> Result<MinkowskiNorm> {
        let violations = validate_spec(self);
        if !violations.is_empty() {
            let msg: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(invalid(format!("invalid Randers spec: {}", msg.join("; "))));
        }
        let (a1, a2) = match *self {
            RandersSpec::USphere { a, .. } | RandersSpec::Su2 { a, .. } => (a, a),
            RandersSpec::SpSphere { a1, a2, .. } => (a1, a2),
        };
        Ok(MinkowskiNorm {
            spec: *self,
            a1,
            a2,
            b: self.b(),
            c: self.c(),
        })
    }
}

/// Checks positivity of the quadratic weights and the Randers condition
/// `|beta|_alpha < 1`. An empty result means the spec is valid.
pub fn validate_spec(s: &RandersSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |constraint: &'static str, detail: String| out.push(Violation { constraint, detail });

    let finite = match *s {
        RandersSpec::USphere { a, b, c, .. } | RandersSpec::Su2 { a, b, c } => [a, b, c].iter().all(|x| x.is_finite()),
        RandersSpec::SpSphere { a1, a2, b, c, .. } => [a1, a2, b, c].iter().all(|x| x.is_finite()),
    };
    if !finite {
        push("finite", "all parameters must be finite".into());
        return out;
    }

    match *s {
        RandersSpec::USphere { n, a, b, c } => {
            if n < 1 {
                push("n≥1", format!("n = {n}"));
            }
            check_axis(&mut push, "a>0", "|c|<√a", a, c);
            if b <= 0.0 {
                push("b>0", format!("b = {b}"));
            }
        }
        RandersSpec::Su2 { a, b, c } => {
            check_axis(&mut push, "a>0", "|c|<√a", a, c);
            if b <= 0.0 {
                push("b>0", format!("b = {b}"));
            }
        }
        RandersSpec::SpSphere { n, a1, a2, b, c } => {
            if n < 1 {
                push("n≥1", format!("n = {n}"));
            }
            check_axis(&mut push, "a1>0", "|c|<√a1", a1, c);
            if a2 <= 0.0 {
                push("a2>0", format!("a2 = {a2}"));
            }
            if b <= 0.0 {
                push("b>0", format!("b = {b}"));
            }
            if (a2 - b).abs() <= 1e-12 * a2.abs().max(b.abs()) {
                push("a2≠b", format!("a2 = b = {b} enlarges the isometry group to U(2n+2)"));
            }
        }
    }
    out
}

fn check_axis(
    push: &mut impl FnMut(&'static str, String),
    positive: &'static str,
    randers: &'static str,
    a: f64,
    c: f64,
) {
    if a <= 0.0 {
        push(positive, format!("got {a}"));
        return;
    }
    if c.abs() >= a.sqrt() {
        push(randers, format!("|c| = {} is not below √a = {}", c.abs(), a.sqrt()));
    }
}

/// An element of `m`. `q` is the `m0` part, `u` the `m1` part.
#[derive(Debug, Clone, PartialEq)]
pub enum TangentVector {
    /// Unitary families: `q` real, `u` complex.
    Complex { q: f64, u: ComplexVector },
    /// Symplectic family: `q = l1 i + l2 j + l3 k`, `u` quaternionic.
    Quaternion { q: [f64; 3], u: Vec<Quaternion> },
}

impl TangentVector {
    pub fn complex(q: f64, u: ComplexVector) -> Self {
        TangentVector::Complex { q, u }
    }

    pub fn quaternion(q: [f64; 3], u: Vec<Quaternion>) -> Self {
        TangentVector::Quaternion { q, u }
    }

    /// `m0` coordinates, padded with zeros for the unitary families.
    pub fn m0(&self) -> [f64; 3] {
        match self {
            TangentVector::Complex { q, .. } => [*q, 0.0, 0.0],
            TangentVector::Quaternion { q, .. } => *q,
        }
    }

    pub fn u_norm_sqr(&self) -> f64 {
        match self {
            TangentVector::Complex { u, .. } => u.norm_squared(),
            TangentVector::Quaternion { u, .. } => u.iter().map(Quaternion::norm_sqr).sum(),
        }
    }

    pub fn u_len(&self) -> usize {
        match self {
            TangentVector::Complex { u, .. } => u.len(),
            TangentVector::Quaternion { u, .. } => u.len(),
        }
    }

    /// Length in the standard inner product.
    pub fn eq_norm(&self) -> f64 {
        let q = self.m0();
        (q.iter().map(|x| x * x).sum::<f64>() + self.u_norm_sqr()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        match self {
            TangentVector::Complex { q, u } => q.is_finite() && u.iter().all(|z| z.re.is_finite() && z.im.is_finite()),
            TangentVector::Quaternion { q, u } => q.iter().all(|x| x.is_finite()) && u.iter().all(Quaternion::is_finite),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        match self {
            TangentVector::Complex { q, u } => TangentVector::Complex { q: q * s, u: u.scale(s) },
            TangentVector::Quaternion { q, u } => TangentVector::Quaternion {
                q: q.map(|x| x * s),
                u: u.iter().map(|x| x.scale(s)).collect(),
            },
        }
    }

    pub fn add(&self, o: &TangentVector) -> Result<TangentVector> {
        match (self, o) {
            (TangentVector::Complex { q, u }, TangentVector::Complex { q: q2, u: u2 }) if u.len() == u2.len() => {
                Ok(TangentVector::Complex { q: q + q2, u: u + u2 })
            }
            (TangentVector::Quaternion { q, u }, TangentVector::Quaternion { q: q2, u: u2 }) if u.len() == u2.len() => {
                Ok(TangentVector::Quaternion {
                    q: [q[0] + q2[0], q[1] + q2[1], q[2] + q2[2]],
                    u: u.iter().zip(u2).map(|(a, b)| *a + *b).collect(),
                })
            }
            _ => Err(invalid("tangent vectors of different shape")),
        }
    }

    pub fn sub(&self, o: &TangentVector) -> Result<TangentVector> {
        self.add(&o.scale(-1.0))
    }
}

/// A validated Randers norm ready for repeated evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinkowskiNorm {
    spec: RandersSpec,
    a1: f64,
    a2: f64,
    b: f64,
    c: f64,
}

impl MinkowskiNorm {
    pub fn spec(&self) -> &RandersSpec {
        &self.spec
    }

    /// `F` from the `m0` coordinates and `|u|^2`.
    pub fn eval_parts(&self, q: [f64; 3], u_sqr: f64) -> f64 {
        let alpha2 = self.a1 * q[0] * q[0] + self.a2 * (q[1] * q[1] + q[2] * q[2]) + self.b * u_sqr;
        alpha2.max(0.0).sqrt() + self.c * q[0]
    }

    pub fn eval(&self, y: &TangentVector) -> Result<f64> {
        let shape_ok = match (&self.spec, y) {
            (RandersSpec::USphere { .. } | RandersSpec::Su2 { .. }, TangentVector::Complex { .. })
            | (RandersSpec::SpSphere { .. }, TangentVector::Quaternion { .. }) => y.u_len() == self.spec.m1_len(),
            _ => false,
        };
        if !shape_ok {
            return Err(invalid(format!(
                "tangent vector does not belong to the {} family with n = {}",
                self.spec.family_name(),
                self.spec.m1_len()
            )));
        }
        if !y.is_finite() {
            return Err(invalid("non-finite tangent vector"));
        }
        Ok(self.eval_parts(y.m0(), y.u_norm_sqr()))
    }
}

/// `F(y)` for the metric `s`.
pub fn randers_norm(s: &RandersSpec, y: &TangentVector) -> Result<f64> {
    s.norm()?.eval(y)
}

/// `F(y) - 1`; zero exactly on the indicatrix.
pub fn indicatrix_residual(s: &RandersSpec, y: &TangentVector) -> Result<f64> {
    Ok(randers_norm(s, y)? - 1.0)
}
