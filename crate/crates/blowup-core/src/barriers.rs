//! Flow-sign checks on the planes, cylinder and curves that confine orbits,
//! evaluated in closed form on seeded quasi-random samples.

use crate::error::{Error, Result};
use crate::integrator::{IntegrationControls, Trajectory, VectorField};
use crate::orbits::{p2_fate, FateKind, FateOptions, DEFAULT_DELTA};
use crate::parameters::{p2_coordinates, Params};
use crate::phase_field::{p2_e3, ChartField, PhaseField, PhasePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_SEED: u64 = 42;
/// Values on the wrong side by no more than this are boundary equalities.
pub const MARGIN_BAND: f64 = 1e-12;
/// Allowed mismatch between a closed form and the scalar product n.V,
/// relative to the largest |n.V| seen.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExpectedSign {
    Negative,
    Positive,
    NonPositive,
    NonNegative,
}

impl ExpectedSign {
    /// Signed distance to the wrong side: negative is good.
    fn badness(self, v: f64) -> f64 {
        match self {
            ExpectedSign::Negative | ExpectedSign::NonPositive => v,
            ExpectedSign::Positive | ExpectedSign::NonNegative => -v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Coordinates {
    /// (X, Y, Z).
    Phase,
    /// (w, y, z) near Q1.
    Chart,
}

/// A computed hypothesis under which a barrier is used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
}

fn hyp(name: &str, holds: bool) -> Hypothesis {
    Hypothesis { name: name.to_string(), holds }
}

type Scalar = Box<dyn Fn(&[f64; 3]) -> f64 + Send + Sync>;
type Normal = Box<dyn Fn(&[f64; 3]) -> [f64; 3] + Send + Sync>;
type Sampler = Box<dyn Fn(&[f64; 3]) -> Option<[f64; 3]> + Send + Sync>;

pub struct BarrierSpec {
    pub id: &'static str,
    pub description: &'static str,
    pub coordinates: Coordinates,
    pub expected: ExpectedSign,
    /// Hypotheses of the argument the barrier belongs to.
    pub hypotheses: Vec<Hypothesis>,
    /// A point of the validity region, if one was found.
    pub witness: Option<[f64; 3]>,
    /// Implicit surface s = 0.
    pub surface: Scalar,
    pub normal: Normal,
    /// The closed-form sign expression.
    pub sign: Scalar,
    /// Maps the unit cube onto the surface; None outside the validity region.
    pub sampler: Sampler,
    params: Params,
}

impl std::fmt::Debug for BarrierSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BarrierSpec")
            .field("id", &self.id)
            .field("expected", &self.expected)
            .field("hypotheses", &self.hypotheses)
            .field("witness", &self.witness)
            .finish()
    }
}

impl BarrierSpec {
    /// n.V at a point of the surface.
    pub fn flux(&self, pt: &[f64; 3]) -> f64 {
        let v = match self.coordinates {
            Coordinates::Phase => PhaseField::new(&self.params).eval(pt),
            Coordinates::Chart => ChartField::new(&self.params).eval(pt),
        };
        let n = (self.normal)(pt);
        n[0] * v[0] + n[1] * v[1] + n[2] * v[2]
    }

    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.iter().all(|h| h.holds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub point: [f64; 3],
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub barrier: String,
    pub seed: u64,
    pub samples_tested: usize,
    /// The first violations found (at most `MAX_LISTED`).
    pub violations: Vec<Violation>,
    pub violation_count: usize,
    /// The value closest to (or furthest past) the wrong side.
    pub worst_margin: f64,
    /// Largest |closed form - n.V| relative to max |n.V|.
    pub identity_error: f64,
    pub hypotheses: Vec<Hypothesis>,
    pub passed: bool,
}

pub const MAX_LISTED: usize = 100;

/// Coefficients shared by the small-sigma construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmallSigmaConstants {
    pub c: f64,
    pub d: f64,
    pub y_star: f64,
    pub x_star: f64,
    /// a = b of the second plane.
    pub a: f64,
    pub e: f64,
    pub f: f64,
}

pub fn small_sigma_constants(p: &Params) -> SmallSigmaConstants {
    let (m, s) = (p.m, p.sigma);
    let c = (m - 1.0).powi(2) / (s + 2.0).powi(2);
    let w = 2.0 * s + 5.0 - m;
    let y_star = -(m - 1.0) / (6.0 * w);
    SmallSigmaConstants {
        c,
        d: 0.5 * c,
        y_star,
        x_star: (m - 1.0).powi(2) / (3.0 * s * (s + 2.0).powi(2)),
        a: (m - 1.0).powi(2) * (3.0 * s + 7.0 - m) / (3.0 * (s + 2.0).powi(2) * w),
        e: (3.0 * s + 7.0 - m) / (3.0 * w),
        f: -y_star,
    }
}

/// Coefficients of the plane A X + B Y + Z = C through P2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargeSigmaConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub x_star: f64,
}

pub fn large_sigma_constants(p: &Params) -> LargeSigmaConstants {
    let (m, s) = (p.m, p.sigma);
    let q = (s + 2.0) * (m + 1.0);
    let a = (s - 1.0) * (2.0 * m + s) / q;
    let b = (m - 1.0) * (2.0 * m + s) / q;
    let p2 = p2_coordinates(p);
    LargeSigmaConstants {
        a,
        b,
        c: a * p2.x + b * p2.y,
        x_star: (m - 1.0) * (s + 1.0) * (2.0 * m + s) / (s * (s - 1.0) * (s + 2.0) * (m + 1.0)),
    }
}

/// Hypotheses of the small-sigma confinement argument.
pub fn small_sigma_hypotheses(p: &Params) -> Vec<Hypothesis> {
    let k = small_sigma_constants(p);
    let (m, s) = (p.m, p.sigma);
    let p2 = p2_coordinates(p);
    let pol = |y: f64| y * y + (p.beta_over_alpha() - k.c) * y + k.d;
    let dpol = |y: f64| 2.0 * y + p.beta_over_alpha() - k.c;
    // Y2 - Y1 is affine and decreasing in X, so X = 0 is the worst case.
    let gap_at_zero = -k.f + (s - 2.0) / (m - 1.0);
    vec![
        hyp("X(P2) < X*", p2.x < k.x_star),
        hyp("Y(P2) < 1/2", p2.y < 0.5),
        hyp("r2 right of r1 on [0, X*]", gap_at_zero < 0.0),
        hyp("P(Y*) > 0", pol(k.y_star) > 0.0),
        hyp("P'(Y*) > 0", dpol(k.y_star) > 0.0),
        hyp("r2 meets Y = 0 beyond X*", k.f / k.e > k.x_star),
    ]
}

/// n.e3 for the plane through P2, with the unstable direction at P2.
pub fn plane3_normal_dot_e3(p: &Params) -> f64 {
    let k = large_sigma_constants(p);
    let e = p2_e3(p);
    k.a * e[0] + k.b * e[1] + e[2]
}

/// Hypotheses of the large-sigma argument.
pub fn large_sigma_hypotheses(p: &Params) -> Vec<Hypothesis> {
    let k = large_sigma_constants(p);
    let p2 = p2_coordinates(p);
    vec![
        hyp("X* < X(P2)", k.x_star < p2.x),
        hyp("n.e3 > 0", plane3_normal_dot_e3(p) > 0.0),
        hyp("B Y(P2) > z_max", k.b * p2.y > p.exponents().z_max),
    ]
}

/// Z on the cylinder above Y.
fn cyl(y: f64, p: &Params) -> f64 {
    -y * y - p.beta_over_alpha() * y
}

fn ydot(x: f64, y: f64, z: f64, p: &Params) -> f64 {
    cyl(y, p) + x - x * y - z
}

/// Smallest parameter that keeps samples off open ends of intervals.
const OPEN: f64 = 1e-9;

fn open(u: f64) -> f64 {
    u.max(OPEN)
}

pub fn barrier_catalog(p: &Params) -> Vec<BarrierSpec> {
    let pp = *p;
    let (m, s, ba) = (p.m, p.sigma, p.beta_over_alpha());
    let hb = -p.vertex_lambda();
    let zmax = p.exponents().z_max;
    let p2 = p2_coordinates(p);
    let (x2, y2) = (p2.x, p2.y);
    let small = small_sigma_constants(p);
    let large = large_sigma_constants(p);
    let small_h = small_sigma_hypotheses(p);
    let large_h = large_sigma_hypotheses(p);
    let mut out = Vec::new();

    out.push(BarrierSpec {
        id: "midplane",
        description: "plane Y = -beta/(2 alpha): crossing sign F = z_max + X(1 + beta/(2 alpha)) - Z, for Z <= z_max",
        coordinates: Coordinates::Phase,
        expected: ExpectedSign::NonNegative,
        hypotheses: vec![],
        witness: None,
        surface: Box::new(move |q| q[1] + hb),
        normal: Box::new(|_| [0.0, 1.0, 0.0]),
        sign: Box::new(move |q| hb * hb + q[0] * (1.0 + hb) - q[2]),
        sampler: Box::new(move |u| Some([u[0], -hb, u[1] * zmax])),
        params: pp,
    });

    out.push(BarrierSpec {
        id: "cylinder",
        description: "parabolic cylinder Z = -Y^2 - (beta/alpha) Y over the right half of the parabola: sign X h(Y)",
        coordinates: Coordinates::Phase,
        expected: ExpectedSign::Negative,
        hypotheses: vec![],
        witness: None,
        surface: Box::new(move |q| q[2] - cyl(q[1], &pp)),
        // inward normal of the cylinder
        normal: Box::new(move |q| [0.0, -2.0 * q[1] - ba, -1.0]),
        sign: Box::new(move |q| {
            let y = q[1];
            q[0] * (y * (s * y + (s - 1.0) * ba) - (2.0 * y + ba))
        }),
        sampler: Box::new(move |u| {
            let y = -hb * u[0];
            Some([1.0 - u[1], y, cyl(y, &pp)])
        }),
        params: pp,
    });

    out.push(BarrierSpec {
        id: "plane_x_eq_z",
        description: "plane X = Z in Y < 0: sign X((m-1)Y - sigma X)",
        coordinates: Coordinates::Phase,
        expected: ExpectedSign::Negative,
        hypotheses: vec![],
        witness: None,
        surface: Box::new(|q| q[0] - q[2]),
        normal: Box::new(|_| [1.0, 0.0, -1.0]),
        sign: Box::new(move |q| q[0] * ((m - 1.0) * q[1] - s * q[0])),
        sampler: Box::new(|u| {
            let x = 1.0 - u[1];
            Some([x, -2.0 + 2.0 * u[0], x])
        }),
        params: pp,
    });

    let (c1, d1) = (small.c, small.d);
    out.push(BarrierSpec {
        id: "plane1",
        description: "plane cY + Z = d for Y* < Y <= 1/2, 0 < X < X*: sign H(X, Y)",
        coordinates: Coordinates::Phase,
        expected: ExpectedSign::Negative,
        hypotheses: small_h.clone(),
        witness: None,
        surface: Box::new(move |q| c1 * q[1] + q[2] - d1),
        normal: Box::new(move |_| [0.0, c1, 1.0]),
        sign: Box::new(move |q| {
            let (x, y) = (q[0], q[1]);
            let s2 = (s + 2.0).powi(2);
            let m1 = m - 1.0;
            -m1 * m1 / s2 * y * y - m1 * m1 * (s - 1.0) / s2 * x * y + s * m1 * m1 / (2.0 * s2) * x
                - (2.0 * s + 5.0 - m) * m1.powi(3) / (s2 * s2) * y
                - m1.powi(4) / (2.0 * s2 * s2)
        }),
        sampler: Box::new(move |u| {
            let y = small.y_star + (0.5 - small.y_star) * (1.0 - u[0]);
            let x = small.x_star * open(u[1]);
            (y > small.y_star && x < small.x_star).then(|| [x, y, d1 - c1 * y])
        }),
        params: pp,
    });

    let a2 = small.a;
    out.push(BarrierSpec {
        id: "plane2",
        description: "plane aX + Z = b (a = b) where -sigma X + (m-1) Y + sigma - 2 < 0: sign L(X, Y)",
        coordinates: Coordinates::Phase,
        expected: ExpectedSign::Negative,
        hypotheses: small_h.clone(),
        witness: None,
        surface: Box::new(move |q| a2 * q[0] + q[2] - a2),
        normal: Box::new(move |_| [a2, 0.0, 1.0]),
        sign: Box::new(move |q| a2 * q[0] * (-s * q[0] + (m - 1.0) * q[1] + s - 2.0)),
        sampler: Box::new(move |u| {
            let (x, y) = (1.0 - u[0], -1.0 + 2.0 * u[1]);
            (-s * x + (m - 1.0) * y + s - 2.0 < 0.0).then(|| [x, y, a2 * (1.0 - x)])
        }),
        params: pp,
    });

    out.push(BarrierSpec {
        id: "d4_wall_x",
        description: "plane X = X(P2) for 0 <= Y <= Y(P2): sign X(P2)[(m-1)Y - 2X(P2)]",
        coordinates: Coordinates::Phase,
        expected: ExpectedSign::NonPositive,
        hypotheses: small_h.clone(),
        witness: None,
        surface: Box::new(move |q| q[0] - x2),
        normal: Box::new(|_| [1.0, 0.0, 0.0]),
        sign: Box::new(move |q| x2 * ((m - 1.0) * q[1] - 2.0 * x2)),
        sampler: Box::new(move |u| Some([x2, y2 * u[0], u[1]])),
        params: pp,
    });

    out.push(BarrierSpec {
        id: "d4_wall_y",
        description: "plane Y = Y(P2) for 0 < X < X(P2), Z >= 0: sign E(X, Z)",
        coordinates: Coordinates::Phase,
        expected: ExpectedSign::Negative,
        hypotheses: small_h.clone(),
        witness: None,
        surface: Box::new(move |q| q[1] - y2),
        normal: Box::new(|_| [0.0, 1.0, 0.0]),
        sign: Box::new(move |q| ydot(q[0], y2, q[2], &pp)),
        sampler: Box::new(move |u| {
            let x = x2 * open(u[0]);
            (x < x2).then(|| [x, y2, u[1]])
        }),
        params: pp,
    });

    let lg = large;
    out.push(BarrierSpec {
        id: "plane3",
        description: "plane AX + BY + Z = C through P2 for 0 <= Y < Y(P2), X* < X < X(P2): sign G(X, Y)",
        coordinates: Coordinates::Phase,
        expected: ExpectedSign::Positive,
        hypotheses: large_h.clone(),
        witness: None,
        surface: Box::new(move |q| lg.a * q[0] + lg.b * q[1] + q[2] - lg.c),
        normal: Box::new(move |_| [lg.a, lg.b, 1.0]),
        sign: Box::new(move |q| lg.b * (y2 - q[1]) * q[1] + lg.a * s * (x2 - q[0]) * (q[0] - lg.x_star)),
        sampler: Box::new(move |u| {
            let y = y2 * u[0];
            let x = lg.x_star + (x2 - lg.x_star) * open(u[1]);
            (lg.x_star < x && x < x2 && y < y2).then(|| [x, y, lg.c - lg.a * x - lg.b * y])
        }),
        params: pp,
    });

    out.push(BarrierSpec {
        id: "surface_t",
        description: "surface dY/d(eta) = 0 in Y < 0: sign X[(1-Y)(m-1)Y - 2(1-Y)X - (sigma-2)Z]",
        coordinates: Coordinates::Phase,
        expected: ExpectedSign::Negative,
        hypotheses: vec![],
        witness: None,
        surface: Box::new(move |q| ydot(q[0], q[1], q[2], &pp)),
        normal: Box::new(move |q| [1.0 - q[1], -2.0 * q[1] - ba - q[0], -1.0]),
        sign: Box::new(move |q| {
            let (x, y, z) = (q[0], q[1], q[2]);
            x * ((1.0 - y) * (m - 1.0) * y - 2.0 * (1.0 - y) * x - (s - 2.0) * z)
        }),
        sampler: Box::new(move |u| {
            let (x, y) = (1.0 - u[0], -2.0 + 2.0 * u[1]);
            let z = cyl(y, &pp) + x * (1.0 - y);
            (z >= 0.0).then(|| [x, y, z])
        }),
        params: pp,
    });

    let k = 2.0 * (m + 1.0) * p.alpha() / ((m - 1.0) * (s - 1.0));
    out.push(BarrierSpec {
        id: "plane_y_kz",
        description: "plane Y + kZ = 1, k = 2(m+1) alpha/((m-1)(sigma-1)), for 0 < X < X(P2), Y > 0: sign F(X, Y, Z)",
        coordinates: Coordinates::Phase,
        expected: ExpectedSign::Negative,
        hypotheses: vec![],
        witness: None,
        surface: Box::new(move |q| q[1] + k * q[2] - 1.0),
        normal: Box::new(move |_| [0.0, 1.0, k]),
        sign: Box::new(move |q| cyl(q[1], &pp) + k * (s - 1.0) * q[0] * q[2] - q[2]),
        sampler: Box::new(move |u| {
            let x = x2 * open(u[0]);
            let y = 1.0 - u[1];
            (x < x2).then(|| [x, y, (1.0 - y) / k])
        }),
        params: pp,
    });

    let a4 = 3.0 / ((m - 1.0) * p.alpha());
    let c4 = PLANE4_C;
    let be = p.beta();
    out.push(BarrierSpec {
        id: "plane4",
        description: "plane aX + Z = c, a = 3/((m-1) alpha), on the centre-manifold chart T = 0 for 0 < X < c/(2a): sign (X/beta)(2aX - c)",
        coordinates: Coordinates::Phase,
        expected: ExpectedSign::Negative,
        hypotheses: vec![],
        witness: None,
        surface: Box::new(move |q| a4 * q[0] + q[2] - c4),
        normal: Box::new(move |_| [a4, 0.0, 1.0]),
        sign: Box::new(move |q| q[0] / be * (2.0 * a4 * q[0] - c4)),
        sampler: Box::new(move |u| {
            let x = c4 / (2.0 * a4) * open(u[0]);
            let z = c4 - a4 * x;
            (x < c4 / (2.0 * a4)).then(|| [x, (x - z) / ba, z])
        }),
        params: pp,
    });

    let q = p.alpha() * (m + 1.0);
    let (w2, yc2) = (2.0 * (m + 1.0) * p.alpha() / (m - 1.0), 2.0 / (m - 1.0));
    out.push(BarrierSpec {
        id: "s_line",
        description: "chart line y = w/(alpha(m+1)) in z = 0 for 0 < w < w(P2): sign F(w)",
        coordinates: Coordinates::Chart,
        expected: ExpectedSign::Positive,
        hypotheses: vec![],
        witness: None,
        surface: Box::new(move |c| c[1] - c[0] / q),
        normal: Box::new(move |_| [-1.0, q, 0.0]),
        sign: Box::new(move |c| {
            let w = c[0];
            w * (q - 1.0 - (1.0 + be * (m + 1.0)) / q * w)
        }),
        sampler: Box::new(move |u| {
            let w = w2 * open(u[0]);
            (w < w2).then(|| [w, w / q, 0.0])
        }),
        params: pp,
    });

    out.push(BarrierSpec {
        id: "s_curve",
        description: "chart curve y + w - m y^2 - (beta/alpha) y w = 0 in z = 0 for 1/m < y < y(P2): sign G(w, y)",
        coordinates: Coordinates::Chart,
        expected: ExpectedSign::Positive,
        hypotheses: vec![],
        witness: None,
        surface: Box::new(move |c| c[1] + c[0] - m * c[1] * c[1] - ba * c[1] * c[0]),
        normal: Box::new(move |c| [1.0 - ba * c[1], 1.0 - 2.0 * m * c[1] - ba * c[0], 0.0]),
        sign: Box::new(move |c| c[0] * (2.0 - (m - 1.0) * c[1]) * (1.0 - ba * c[1])),
        sampler: Box::new(move |u| {
            let y = 1.0 / m + (yc2 - 1.0 / m) * open(u[0]);
            let w = (m * y * y - y) / (1.0 - ba * y);
            (y < yc2).then(|| [w, y, 0.0])
        }),
        params: pp,
    });

    out.push(BarrierSpec {
        id: "plane_y0",
        description: "plane Y = y0 with y0 > 1, X, Z >= 0: sign -y0^2 - (beta/alpha) y0 + X(1 - y0) - Z",
        coordinates: Coordinates::Phase,
        expected: ExpectedSign::Negative,
        hypotheses: vec![],
        witness: None,
        // y0 varies with the sample, so the surface is the family Y > 1
        surface: Box::new(|_| 0.0),
        normal: Box::new(|_| [0.0, 1.0, 0.0]),
        sign: Box::new(move |q| ydot(q[0], q[1], q[2], &pp)),
        sampler: Box::new(|u| Some([u[0], 1.0 + 2.0 * open(u[2]), u[1]])),
        params: pp,
    });

    for b in &mut out {
        b.witness = find_witness(b);
    }
    out
}

/// Right-hand side of the plane through the P0 centre family.
pub const PLANE4_C: f64 = 1e-3;

fn find_witness(b: &BarrierSpec) -> Option<[f64; 3]> {
    let h = Halton::new([0.0; 3]);
    (1..=4096).find_map(|i| (b.sampler)(&h.point(i)))
}

pub fn barrier_ids(p: &Params) -> Vec<&'static str> {
    barrier_catalog(p).iter().map(|b| b.id).collect()
}

/// Halton points in bases 2, 3, 5 with a Cranley-Patterson shift.
struct Halton {
    shift: [f64; 3],
}

impl Halton {
    fn new(shift: [f64; 3]) -> Self {
        Self { shift }
    }

    fn seeded(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::new([rng.gen(), rng.gen(), rng.gen()])
    }

    fn point(&self, index: u64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (d, base) in [2u64, 3, 5].into_iter().enumerate() {
            let v = radical_inverse(index, base) + self.shift[d];
            out[d] = v - v.floor();
        }
        out
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let (mut f, mut r) = (inv, 0.0);
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Evaluate the sign expression on `n_samples` points of the validity
/// region. Rejection sampling gives up after 100 draws per requested point.
pub fn verify_barrier(spec: &BarrierSpec, n_samples: usize, seed: u64) -> Result<VerificationReport> {
    if n_samples < 100 {
        return Err(Error::Config(format!("n_samples = {n_samples}, need at least 100")));
    }
    let h = Halton::seeded(seed);
    let cap = 100 * n_samples as u64;
    let mut pts = Vec::with_capacity(n_samples);
    let mut i = 1u64;
    while pts.len() < n_samples && i <= cap {
        if let Some(q) = (spec.sampler)(&h.point(i)) {
            pts.push(q);
        }
        i += 1;
    }
    if pts.is_empty() {
        return Err(Error::Config(format!("validity region of {} is empty", spec.id)));
    }
    let evals: Vec<(f64, f64)> = pts.par_iter().map(|q| ((spec.sign)(q), spec.flux(q))).collect();
    let mut violations = Vec::new();
    let mut count = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_value = 0.0;
    let (mut diff, mut scale) = (0.0f64, 0.0f64);
    for (q, &(v, fl)) in pts.iter().zip(&evals) {
        let bad = spec.expected.badness(v);
        if bad > worst {
            worst = bad;
            worst_value = v;
        }
        if bad > MARGIN_BAND || !v.is_finite() {
            count += 1;
            if violations.len() < MAX_LISTED {
                violations.push(Violation { point: *q, value: v });
            }
        }
        diff = diff.max((v - fl).abs());
        scale = scale.max(fl.abs());
    }
    let identity_error = if scale > 0.0 { diff / scale } else { diff };
    Ok(VerificationReport {
        barrier: spec.id.to_string(),
        seed,
        samples_tested: pts.len(),
        violations,
        violation_count: count,
        worst_margin: worst_value,
        identity_error,
        hypotheses: spec.hypotheses.clone(),
        passed: count == 0 && identity_error <= IDENTITY_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BarrierOutcome {
    Verified(VerificationReport),
    /// The validity region is empty for these parameters.
    NotApplicable { barrier: String, hypotheses: Vec<Hypothesis> },
}

impl BarrierOutcome {
    pub fn passed(&self) -> bool {
        match self {
            BarrierOutcome::Verified(r) => r.passed,
            BarrierOutcome::NotApplicable { .. } => true,
        }
    }

    pub fn barrier(&self) -> &str {
        match self {
            BarrierOutcome::Verified(r) => &r.barrier,
            BarrierOutcome::NotApplicable { barrier, .. } => barrier,
        }
    }
}

/// Verify the selected barriers (all when `ids` is empty), in catalog order.
pub fn verify_all(p: &Params, ids: &[&str], n_samples: usize, seed: u64) -> Result<Vec<BarrierOutcome>> {
    let cat = barrier_catalog(p);
    if let Some(bad) = ids.iter().find(|id| !cat.iter().any(|b| b.id == **id)) {
        let known: Vec<_> = cat.iter().map(|b| b.id).collect();
        return Err(Error::Config(format!("unknown barrier '{bad}'; known: {}", known.join(", "))));
    }
    cat.iter()
        .filter(|b| ids.is_empty() || ids.contains(&b.id))
        .map(|b| {
            if b.witness.is_none() {
                Ok(BarrierOutcome::NotApplicable { barrier: b.id.to_string(), hypotheses: b.hypotheses.clone() })
            } else {
                verify_barrier(b, n_samples, seed).map(BarrierOutcome::Verified)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Region {
    D0,
    D1,
    D2,
    D3,
    D4,
    R,
    /// In chart coordinates (w, y, z).
    S,
}

/// Membership by the defining inequalities. D0 is bounded here by its
/// closed-form walls only: X >= 0, Y <= 0 and dY/d(eta) <= 0.
pub fn region_membership(region: Region, pt: &[f64; 3], p: &Params) -> bool {
    let [x, y, z] = *pt;
    let k = small_sigma_constants(p);
    let p2 = p2_coordinates(p);
    let ba = p.beta_over_alpha();
    match region {
        Region::D0 => x >= 0.0 && y <= 0.0 && ydot(x, y, z, p) <= 0.0,
        Region::D1 => (0.0..=k.x_star).contains(&x) && (0.0..=0.5).contains(&y) && z >= 0.0 && z <= -k.c * y + k.d,
        Region::D2 => {
            (0.0..=k.x_star).contains(&x) && y >= k.e * x - k.f && y <= 0.0 && z >= cyl(y, p) && z <= -k.c * y + k.d
        }
        Region::D3 => {
            // g^{-1}: the larger root of Y^2 + (beta/alpha) Y + b - aX = 0
            let disc = ba * ba - 4.0 * (k.a - k.a * x);
            if disc < 0.0 {
                return false;
            }
            let g_inv = 0.5 * (-ba + disc.sqrt());
            (0.0..=k.x_star).contains(&x) && y >= g_inv && y <= k.e * x - k.f && z >= cyl(y, p) && z <= -k.a * x + k.a
        }
        Region::D4 => (0.0..=p2.x).contains(&x) && (0.0..=p2.y).contains(&y),
        Region::R => {
            let l = large_sigma_constants(p);
            x >= l.x_star && x <= p2.x && (0.0..=p2.y).contains(&y) && z >= l.c - l.a * x - l.b * y
        }
        Region::S => {
            let (w, yy) = (x, y);
            let q = p.alpha() * (p.m + 1.0);
            w >= 0.0 && yy >= w / q && yy + w - p.m * yy * yy - ba * yy * w >= 0.0
        }
    }
}

/// Largest sigma of the grid at which every small-sigma hypothesis holds.
pub fn empirical_sigma0(m: f64, grid: &[f64]) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for &s in grid {
        let p = Params::new(m, s)?;
        if small_sigma_hypotheses(&p).iter().all(|h| h.holds) {
            best = Some(best.map_or(s, |b: f64| b.max(s)));
        }
    }
    Ok(best)
}

/// Smallest sigma of the grid at which the large-sigma hypotheses hold and
/// the P2 orbit escapes to Q3.
pub fn empirical_sigma1(m: f64, grid: &[f64], controls: &IntegrationControls, opts: &FateOptions) -> Result<Option<f64>> {
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    for s in sorted {
        let p = Params::new(m, s)?;
        if large_sigma_hypotheses(&p).iter().all(|h| h.holds) && p2_fate(&p, DEFAULT_DELTA, controls, opts)?.kind == FateKind::EntersQ3 {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// Along the stretches of a trajectory inside {Y <= 0, X > 0}, X decreases
/// and Z increases strictly from sample to sample.
pub fn monotone_in_lower_half(traj: &Trajectory) -> bool {
    traj.samples.windows(2).all(|w| {
        let (a, b): (PhasePoint, PhasePoint) = (w[0].point, w[1].point);
        let inside = a.y <= 0.0 && b.y <= 0.0 && a.x > 0.0 && b.x > 0.0;
        !inside || (b.x < a.x && b.z > a.z)
    })
}
