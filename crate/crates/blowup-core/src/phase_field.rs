//! The autonomous quadratic system in (X, Y, Z), its linearisation, the
//! critical point catalogue, the chart at the infinity point Q1 and the
//! explicit local families used to launch orbits.

use crate::error::{Error, Result};
use crate::integrator::VectorField;
use crate::parameters::{p2_coordinates, parabola_point, Params};
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::Serialize;

/// X = (m/alpha) xi^-2 f^(m-1), Y = (m/alpha) xi^-1 f^(m-2) f', Z = (m/alpha^2) xi^(sigma-2).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PhasePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PhasePoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn distance(&self, o: &PhasePoint) -> f64 {
        ((self.x - o.x).powi(2) + (self.y - o.y).powi(2) + (self.z - o.z).powi(2)).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<[f64; 3]> for PhasePoint {
    fn from(a: [f64; 3]) -> Self {
        Self::from_array(a)
    }
}

/// Coordinates of the chart around Q1: w = 1/X, y = Y/X, z = Z/X.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ChartPoint {
    pub w: f64,
    pub y: f64,
    pub z: f64,
}

impl ChartPoint {
    pub const fn new(w: f64, y: f64, z: f64) -> Self {
        Self { w, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.w, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    /// Requires w > 0.
    pub fn to_phase(self) -> PhasePoint {
        PhasePoint::new(1.0 / self.w, self.y / self.w, self.z / self.w)
    }

    /// Requires X > 0.
    pub fn from_phase(p: PhasePoint) -> Self {
        Self::new(1.0 / p.x, p.y / p.x, p.z / p.x)
    }
}

pub fn vector_field(pt: &PhasePoint, params: &Params) -> [f64; 3] {
    PhaseField::new(params).eval(&pt.to_array())
}

pub fn jacobian(pt: &PhasePoint, params: &Params) -> Matrix3<f64> {
    let (m, s, ba) = (params.m, params.sigma, params.beta_over_alpha());
    let PhasePoint { x, y, z } = *pt;
    Matrix3::new(
        (m - 1.0) * y - 4.0 * x,
        (m - 1.0) * x,
        0.0,
        1.0 - y,
        -2.0 * y - ba - x,
        -1.0,
        (s - 2.0) * z,
        0.0,
        (s - 2.0) * x,
    )
}

pub fn infinity_chart_field(cp: &ChartPoint, params: &Params) -> [f64; 3] {
    ChartField::new(params).eval(&cp.to_array())
}

/// The phase-space field with its constants cached.
#[derive(Debug, Clone, Copy)]
pub struct PhaseField {
    m1: f64,
    ba: f64,
    s2: f64,
}

impl PhaseField {
    pub fn new(params: &Params) -> Self {
        Self {
            m1: params.m - 1.0,
            ba: params.beta_over_alpha(),
            s2: params.sigma - 2.0,
        }
    }
}

impl VectorField for PhaseField {
    #[inline]
    fn eval(&self, s: &[f64; 3]) -> [f64; 3] {
        let [x, y, z] = *s;
        [
            x * (self.m1 * y - 2.0 * x),
            -y * y - self.ba * y + x - x * y - z,
            self.s2 * x * z,
        ]
    }
}

/// The field of the Q1 chart, equal to w times the pushed-forward phase field.
#[derive(Debug, Clone, Copy)]
pub struct ChartField {
    m: f64,
    ba: f64,
    sigma: f64,
}

impl ChartField {
    pub fn new(params: &Params) -> Self {
        Self {
            m: params.m,
            ba: params.beta_over_alpha(),
            sigma: params.sigma,
        }
    }
}

impl VectorField for ChartField {
    #[inline]
    fn eval(&self, s: &[f64; 3]) -> [f64; 3] {
        let [w, y, z] = *s;
        let m1 = self.m - 1.0;
        [
            w * (2.0 - m1 * y),
            y + w - self.m * y * y - self.ba * y * w - z * w,
            z * (self.sigma - m1 * y),
        ]
    }
}

/// Linearisation of the chart field at its origin Q1.
pub fn chart_jacobian_at_origin(params: &Params) -> Matrix3<f64> {
    Matrix3::new(2.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, params.sigma)
}

/// Spectrum of a 3x3 linearisation. Vectors are unit length with their
/// largest component real and positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenData {
    pub values: [Complex64; 3],
    pub vectors: [[Complex64; 3]; 3],
    pub stable_dim: usize,
    pub unstable_dim: usize,
    pub center_dim: usize,
}

impl EigenData {
    /// Real eigenvector `i`, if its imaginary parts vanish.
    pub fn real_vector(&self, i: usize) -> Option<[f64; 3]> {
        let v = &self.vectors[i];
        if v.iter().all(|c| c.im.abs() <= 1e-12) {
            Some([v[0].re, v[1].re, v[2].re])
        } else {
            None
        }
    }

    pub fn max_residual(&self, j: &Matrix3<f64>) -> f64 {
        (0..3)
            .map(|i| eigen_residual(j, self.values[i], &self.vectors[i]))
            .fold(0.0, f64::max)
    }
}

/// ||J v - lambda v|| / ||v||.
pub fn eigen_residual(j: &Matrix3<f64>, lambda: Complex64, v: &[Complex64; 3]) -> f64 {
    let jc = j.map(|a| Complex64::new(a, 0.0));
    let vv = Vector3::new(v[0], v[1], v[2]);
    let r = jc * vv - vv * lambda;
    r.norm() / vv.norm()
}

/// Eigenvalues below this (relative to the matrix norm) count as zero.
pub const CENTER_TOL: f64 = 1e-9;

pub fn eigen_decompose(j: &Matrix3<f64>) -> Result<EigenData> {
    let scale = j.norm().max(1.0);
    let ev = match triangular_permutation(j) {
        // exact, where QR would resolve a defective pair only to sqrt(eps)
        Some(_) => Vector3::new(j[(0, 0)], j[(1, 1)], j[(2, 2)]).map(|d| Complex64::new(d, 0.0)),
        None => j.complex_eigenvalues(),
    };
    let mut values = [Complex64::new(0.0, 0.0); 3];
    for i in 0..3 {
        let mut l = ev[i];
        if l.im.abs() <= 1e-14 * scale {
            l.im = 0.0;
        }
        if l.re.abs() <= 1e-14 * scale {
            l.re = 0.0;
        }
        values[i] = l;
    }
    let mut vectors = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (i, &l) in values.iter().enumerate() {
        vectors[i] = null_vector(j, l)?;
    }
    let (mut s, mut u, mut c) = (0, 0, 0);
    for l in &values {
        if l.re.abs() <= CENTER_TOL * scale {
            c += 1;
        } else if l.re < 0.0 {
            s += 1;
        } else {
            u += 1;
        }
    }
    Ok(EigenData {
        values,
        vectors,
        stable_dim: s,
        unstable_dim: u,
        center_dim: c,
    })
}

/// A symmetric permutation making `j` lower triangular, if one exists; the
/// eigenvalues are then the diagonal entries.
fn triangular_permutation(j: &Matrix3<f64>) -> Option<[usize; 3]> {
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    PERMS
        .into_iter()
        .find(|p| (0..3).all(|r| (r + 1..3).all(|c| j[(p[r], p[c])] == 0.0)))
}

fn null_vector(j: &Matrix3<f64>, l: Complex64) -> Result<[Complex64; 3]> {
    let a = j.map(|x| Complex64::new(x, 0.0)) - Matrix3::from_diagonal_element(l);
    let svd = a.svd(false, true);
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Numerical("eigenvector solve failed".into()))?;
    let k = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap_or(2);
    // Rows of V^H are conjugated right singular vectors.
    let mut v = [vt[(k, 0)].conj(), vt[(k, 1)].conj(), vt[(k, 2)].conj()];
    let big = (0..3)
        .max_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm()))
        .unwrap_or(0);
    let phase = v[big].conj() / v[big].norm();
    let n = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Numerical("degenerate eigenvector".into()));
    }
    for c in v.iter_mut() {
        *c = *c * phase / n;
    }
    v[big].im = 0.0;
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CriticalKind {
    P0Lambda(f64),
    P2,
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Location {
    Finite(PhasePoint),
    /// Point on the Poincare hypersphere (X, Y, Z, W) with W = 0.
    Sphere([f64; 4]),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub kind: CriticalKind,
    pub location: Location,
    /// None for Q2..Q5, which are only used as fate targets.
    pub eigen: Option<EigenData>,
}

/// Closed-form spectrum at P0^lambda: (m-1)lambda, -2lambda-beta/alpha, 0.
pub fn parabola_eigenvalues(lambda: f64, params: &Params) -> [f64; 3] {
    [
        (params.m - 1.0) * lambda,
        -2.0 * lambda - params.beta_over_alpha(),
        0.0,
    ]
}

/// Unstable eigenvalue at P2.
pub fn p2_lambda3(params: &Params) -> f64 {
    (params.sigma - 2.0) * (params.m - 1.0) / (2.0 * (params.m + 1.0) * params.alpha())
}

/// Closed-form unstable eigenvector at P2, scaled to Z-component 1.
pub fn p2_e3(params: &Params) -> [f64; 3] {
    let (m, s) = (params.m, params.sigma);
    let d = (m - 1.0) * s * s + (5.0 - m) * s + 4.0 * m;
    [
        -2.0 * (m - 1.0) * (m + 1.0) * params.alpha() / d,
        -2.0 * (m + 1.0) * s * params.alpha() / d,
        1.0,
    ]
}

/// The stable pair at P2: roots of the characteristic polynomial of the
/// (X, Y) block of the linearisation.
pub fn p2_stable_pair(params: &Params) -> (Complex64, Complex64) {
    let q = p2_coordinates(params);
    let j = jacobian(&q, params);
    let tr = j[(0, 0)] + j[(1, 1)];
    let det = j[(0, 0)] * j[(1, 1)] - j[(0, 1)] * j[(1, 0)];
    let disc = Complex64::new(tr * tr - 4.0 * det, 0.0).sqrt();
    ((tr - disc) / 2.0, (tr + disc) / 2.0)
}

/// 101 uniform points on [-beta/alpha, 0].
pub fn default_lambda_grid(params: &Params) -> Vec<f64> {
    lambda_grid(params, 101)
}

pub fn lambda_grid(params: &Params, n: usize) -> Vec<f64> {
    let ba = params.beta_over_alpha();
    if n < 2 {
        return vec![-0.5 * ba];
    }
    (0..n)
        .map(|i| {
            if i == n - 1 {
                0.0
            } else {
                -ba + ba * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

pub fn classify_critical_points(params: &Params, lambda_grid: &[f64]) -> Result<Vec<CriticalPoint>> {
    let mut out = Vec::with_capacity(lambda_grid.len() + 6);
    for &l in lambda_grid {
        let pt = parabola_point(l, params)?;
        out.push(CriticalPoint {
            kind: CriticalKind::P0Lambda(l),
            location: Location::Finite(pt),
            eigen: Some(eigen_decompose(&jacobian(&pt, params))?),
        });
    }
    let p2 = p2_coordinates(params);
    out.push(CriticalPoint {
        kind: CriticalKind::P2,
        location: Location::Finite(p2),
        eigen: Some(eigen_decompose(&jacobian(&p2, params))?),
    });
    out.push(CriticalPoint {
        kind: CriticalKind::Q1,
        location: Location::Sphere([1.0, 0.0, 0.0, 0.0]),
        eigen: Some(eigen_decompose(&chart_jacobian_at_origin(params))?),
    });
    let m = params.m;
    let r = (1.0 + m * m).sqrt();
    for (kind, loc) in [
        (CriticalKind::Q2, [0.0, 1.0, 0.0, 0.0]),
        (CriticalKind::Q3, [0.0, -1.0, 0.0, 0.0]),
        (CriticalKind::Q4, [0.0, 0.0, 1.0, 0.0]),
        (CriticalKind::Q5, [m / r, 1.0 / r, 0.0, 0.0]),
    ] {
        out.push(CriticalPoint {
            kind,
            location: Location::Sphere(loc),
            eigen: None,
        });
    }
    Ok(out)
}

/// X on the explicit centre family out of P0, X = K sqrt(z) - (m-1) alpha z.
/// Negative values mean the family has left the physical region.
pub fn center_family_p0(k: f64, z: f64, params: &Params) -> f64 {
    k * z.sqrt() - (params.m - 1.0) * params.alpha() * z
}

/// Exponent of the free term in the stable family entering P0^lambda.
pub fn stable_family_exponent(lambda: f64, params: &Params) -> f64 {
    -2.0 / (params.m - 1.0) - 2.0 / ((params.sigma + 2.0) * lambda)
}

/// Slope of the linear term in the stable family entering P0^lambda.
pub fn stable_family_slope(lambda: f64, params: &Params) -> Result<f64> {
    let (m, s) = (params.m, params.sigma);
    let den = (m - 1.0) * ((s + 2.0) * (m + 1.0) * lambda + 2.0 * (m - 1.0));
    if den == 0.0 {
        return Err(Error::Domain("stable family slope denominator vanishes".into()));
    }
    Ok(-((s + 2.0) * (m - s + 1.0) * lambda - (3.0 * s - 2.0) * (m - 1.0)) / den)
}

/// Y1 = Y - lambda on the stable family, as a function of x = X.
pub fn stable_family_p0lambda(k1: f64, x: f64, lambda: f64, params: &Params) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain("x must be positive".into()));
    }
    let vl = params.vertex_lambda();
    if !(lambda > vl && lambda < 0.0) {
        return Err(Error::Domain(format!(
            "lambda = {lambda} outside (-beta/(2 alpha), 0)"
        )));
    }
    let e = stable_family_exponent(lambda, params);
    if !(e > 0.0) {
        return Err(Error::Domain(format!("non-positive exponent {e}")));
    }
    Ok(k1 * x.powf(e) + stable_family_slope(lambda, params)? * x)
}

/// Coefficients of the linear change of variables that sends the vertex to
/// the origin and brings the system into its normal form there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VertexCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

pub fn vertex_coefficients(params: &Params) -> VertexCoefficients {
    let (m, s) = (params.m, params.sigma);
    let (al, be) = (params.alpha(), params.beta());
    let m1 = m - 1.0;
    VertexCoefficients {
        a: (s - 2.0) * be * be / (al * al),
        b: 2.0 * be * m1 / al,
        c: (2.0 * al * m1 + be * (m + s - 3.0)) / m1,
        d: m1 * be,
        e: (2.0 * al * m * m + be * s * (m + 1.0) - 2.0 * al - 4.0 * be) / (m1 * m1 * be),
        f: (m * be * (s - 2.0) + (2.0 * m * be + 2.0 * m * al - be) * m1)
            * ((2.0 * al + be) * m1 + be * (s - 2.0))
            / (m1 * m1 * m1 * be),
    }
}

pub fn vertex_normal_form(pt: &PhasePoint, params: &Params) -> PhasePoint {
    let k = vertex_coefficients(params);
    let hb = -params.vertex_lambda();
    PhasePoint::new(
        pt.x,
        k.c * pt.x + k.d * (pt.y + hb),
        k.a * pt.x + k.b * (pt.z - hb * hb),
    )
}

/// Right-hand side of the normal-form system at the vertex, in (X2, Y2, Z2).
pub fn vertex_normal_form_field(q: &PhasePoint, params: &Params) -> [f64; 3] {
    let k = vertex_coefficients(params);
    let (m, s) = (params.m, params.sigma);
    let (al, be) = (params.alpha(), params.beta());
    let m1 = m - 1.0;
    let PhasePoint { x, y, z } = *q;
    [
        -m1 * be / (2.0 * al) * x - ((2.0 * al + 3.0 * be) * m1 + be * (s - 2.0)) / (be * m1) * x * x
            + x * y / be,
        -al / 2.0 * z - y * y / (m1 * be) + k.e * x * y - k.f * x * x,
        (s - 2.0)
            * (be / (al * al) * x * y + x * z
                - be * (be * m * s + 2.0 * al * m1 + be * m - 3.0 * be) / (m1 * al * al) * x * x),
    ]
}

/// Exponent in the centre family X2 = K exp(-c / Y2) entering the vertex.
pub fn vertex_center_rate(params: &Params) -> f64 {
    let (m1, be) = (params.m - 1.0, params.beta());
    m1 * m1 * be * be / (2.0 * params.alpha())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(m: f64, s: f64) -> Params {
        Params::new(m, s).unwrap()
    }

    #[test]
    fn field_reference_point() {
        let v = vector_field(&PhasePoint::new(0.01, 0.0, 0.005), &p(1.5, 3.0));
        assert_relative_eq!(v[0], -0.0002, max_relative = 1e-12);
        assert_relative_eq!(v[1], 0.005, max_relative = 1e-12);
        assert_relative_eq!(v[2], 0.00005, max_relative = 1e-12);
    }

    #[test]
    fn vanishes_at_critical_points() {
        let pr = p(1.5, 3.0);
        for v in vector_field(&p2_coordinates(&pr), &pr) {
            assert!(v.abs() < 1e-15);
        }
        for v in vector_field(&parabola_point(-0.05, &pr).unwrap(), &pr) {
            assert!(v.abs() < 1e-15);
        }
        assert_eq!(infinity_chart_field(&ChartPoint::default(), &pr), [0.0; 3]);
        for v in infinity_chart_field(&ChartPoint::new(100.0, 4.0, 0.0), &pr) {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn parabola_jacobian_rows() {
        let pr = p(1.5, 3.0);
        let l = -0.05;
        let j = jacobian(&parabola_point(l, &pr).unwrap(), &pr);
        let zz = -l * l - 0.2 * l;
        let want = Matrix3::new(0.5 * l, 0.0, 0.0, 1.0 - l, -2.0 * l - 0.2, -1.0, zz, 0.0, 0.0);
        assert!((j - want).norm() < 1e-15);
    }

    #[test]
    fn parabola_spectra() {
        let pr = p(1.5, 3.0);
        let e = eigen_decompose(&jacobian(&parabola_point(-0.05, &pr).unwrap(), &pr)).unwrap();
        let mut re: Vec<f64> = e.values.iter().map(|c| c.re).collect();
        re.sort_by(f64::total_cmp);
        assert_relative_eq!(re[0], -0.1, epsilon = 1e-12);
        assert_relative_eq!(re[1], -0.025, epsilon = 1e-12);
        assert!(re[2].abs() < 1e-12);
        assert_eq!((e.stable_dim, e.center_dim, e.unstable_dim), (2, 1, 0));

        let v = parabola_point(-0.1, &pr).unwrap();
        let j = jacobian(&v, &pr);
        let e = eigen_decompose(&j).unwrap();
        let mut re: Vec<f64> = e.values.iter().map(|c| c.re).collect();
        re.sort_by(f64::total_cmp);
        assert_relative_eq!(re[0], -0.05, epsilon = 1e-12);
        assert!(re[1].abs() < 1e-9 && re[2].abs() < 1e-9);
        assert_eq!((e.stable_dim, e.center_dim, e.unstable_dim), (1, 2, 0));
        assert!(e.max_residual(&j) < 1e-9);

        let e = eigen_decompose(&jacobian(&PhasePoint::default(), &pr)).unwrap();
        assert_eq!((e.stable_dim, e.center_dim), (1, 2));
    }

    #[test]
    fn p2_spectrum_and_e3() {
        let pr = p(1.5, 3.0);
        assert_relative_eq!(p2_lambda3(&pr), 0.01, max_relative = 1e-14);
        let e3 = p2_e3(&pr);
        assert_relative_eq!(e3[0], -25.0 / 21.0, max_relative = 1e-14);
        assert_relative_eq!(e3[1], -150.0 / 21.0, max_relative = 1e-14);
        let j = jacobian(&p2_coordinates(&pr), &pr);
        let e = eigen_decompose(&j).unwrap();
        assert_eq!((e.stable_dim, e.unstable_dim, e.center_dim), (2, 1, 0));
        let k = (0..3).find(|&i| e.values[i].re > 0.0).unwrap();
        assert_relative_eq!(e.values[k].re, 0.01, max_relative = 1e-9);
        let v = e.real_vector(k).unwrap();
        let s = v[2];
        for i in 0..3 {
            assert_relative_eq!(v[i] / s, e3[i], max_relative = 1e-8);
        }
    }

    #[test]
    fn q1_chart_spectrum() {
        let pr = p(1.5, 3.0);
        let j = chart_jacobian_at_origin(&pr);
        let e = eigen_decompose(&j).unwrap();
        assert_eq!(e.unstable_dim, 3);
        let mut re: Vec<f64> = e.values.iter().map(|c| c.re).collect();
        re.sort_by(f64::total_cmp);
        for (r, want) in re.iter().zip([1.0, 2.0, 3.0]) {
            assert!((r - want).abs() < 1e-12);
        }
        // v1 = (1,1,0) belongs to eigenvalue 2
        let v = Vector3::new(1.0, 1.0, 0.0);
        assert!((j * v - v * 2.0).norm() < 1e-15);
        let v = Vector3::new(0.0, 1.0, 0.0);
        assert!((j * v - v).norm() < 1e-15);
    }

    #[test]
    fn local_families() {
        let pr = p(1.5, 3.0);
        assert_relative_eq!(center_family_p0(0.1, 1e-4, &pr), 0.0005, max_relative = 1e-12);
        assert!(center_family_p0(0.0, 1e-3, &pr) < 0.0);
        assert_relative_eq!(stable_family_exponent(-0.05, &pr), 4.0, max_relative = 1e-12);
        assert!(stable_family_exponent(pr.vertex_lambda(), &pr).abs() < 1e-12);
        assert!(stable_family_p0lambda(1.0, 0.1, pr.vertex_lambda(), &pr).is_err());
        let y = stable_family_p0lambda(0.0, 0.01, -0.05, &pr).unwrap();
        assert_relative_eq!(y, stable_family_slope(-0.05, &pr).unwrap() * 0.01, max_relative = 1e-14);
    }

    #[test]
    fn vertex_coefficients_reference() {
        let pr = p(1.5, 3.0);
        let k = vertex_coefficients(&pr);
        assert_relative_eq!(k.a, 0.04, max_relative = 1e-14);
        assert_relative_eq!(k.b, 0.2, max_relative = 1e-14);
        assert_relative_eq!(k.c, 26.0, max_relative = 1e-14);
        assert_relative_eq!(k.d, 1.0, max_relative = 1e-14);
        let q = vertex_normal_form(&parabola_point(-0.1, &pr).unwrap(), &pr);
        assert!(q.x == 0.0 && q.y.abs() < 1e-16 && q.z.abs() < 1e-17);
    }

    #[test]
    fn chart_matches_phase_field_direction() {
        let pr = p(1.3, 3.7);
        let pt = PhasePoint::new(0.7, -0.3, 0.2);
        let v = vector_field(&pt, &pr);
        let (x, y, z) = (pt.x, pt.y, pt.z);
        let pushed = [-v[0] / (x * x), (v[1] * x - y * v[0]) / (x * x), (v[2] * x - z * v[0]) / (x * x)];
        let c = infinity_chart_field(&ChartPoint::from_phase(pt), &pr);
        let w = 1.0 / x;
        for i in 0..3 {
            assert_relative_eq!(c[i], w * pushed[i], max_relative = 1e-12);
        }
    }
}
