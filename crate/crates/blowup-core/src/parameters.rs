//! Exponent triple validation and the closed-form constants derived from it.

use crate::error::{Error, Result};
use crate::phase_field::PhasePoint;
use serde::Serialize;

/// Validated exponents. `p` is always `2 - m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Params {
    pub m: f64,
    pub p: f64,
    pub sigma: f64,
}

/// Self-similarity exponents and the interface localisation constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    pub alpha: f64,
    pub beta: f64,
    pub xi_max: f64,
    pub z_max: f64,
}

pub fn validate_params(m: f64, sigma: f64) -> Result<Params> {
    if !m.is_finite() || !sigma.is_finite() {
        return Err(Error::Constraint("m and sigma must be finite".into()));
    }
    if m <= 1.0 {
        return Err(Error::Constraint("m must exceed 1".into()));
    }
    if m >= 2.0 {
        return Err(Error::Constraint("m must be below 2".into()));
    }
    if sigma <= 2.0 {
        return Err(Error::Constraint("sigma must exceed 2".into()));
    }
    Ok(Params { m, p: 2.0 - m, sigma })
}

impl Params {
    /// Convenience constructor, same checks as [`validate_params`].
    pub fn new(m: f64, sigma: f64) -> Result<Self> {
        validate_params(m, sigma)
    }

    pub fn alpha(&self) -> f64 {
        (self.sigma + 2.0) / ((self.sigma - 2.0) * (self.m - 1.0))
    }

    pub fn beta(&self) -> f64 {
        2.0 / (self.sigma - 2.0)
    }

    /// beta/alpha = 2(m-1)/(sigma+2), computed directly to avoid cancellation.
    pub fn beta_over_alpha(&self) -> f64 {
        2.0 * (self.m - 1.0) / (self.sigma + 2.0)
    }

    pub fn exponents(&self) -> Exponents {
        derive_exponents(self)
    }

    /// Y coordinate of the parabola vertex, -beta/(2 alpha).
    pub fn vertex_lambda(&self) -> f64 {
        -0.5 * self.beta_over_alpha()
    }
}

pub fn derive_exponents(params: &Params) -> Exponents {
    let (m, s) = (params.m, params.sigma);
    let half_ba = (m - 1.0) / (s + 2.0);
    Exponents {
        alpha: params.alpha(),
        beta: params.beta(),
        xi_max: (1.0 / (m * (s - 2.0) * (s - 2.0))).powf(1.0 / (s - 2.0)),
        z_max: half_ba * half_ba,
    }
}

pub fn p2_coordinates(params: &Params) -> PhasePoint {
    let (m, s) = (params.m, params.sigma);
    let d = (m + 1.0) * (s + 2.0);
    PhasePoint::new(
        (m - 1.0) * (m - 1.0) * (s - 2.0) / (2.0 * d),
        (m - 1.0) * (s - 2.0) / d,
        0.0,
    )
}

pub fn parabola_point(lambda: f64, params: &Params) -> Result<PhasePoint> {
    let ba = params.beta_over_alpha();
    if !(lambda >= -ba && lambda <= 0.0) {
        return Err(Error::Domain(format!(
            "lambda = {lambda} outside [-beta/alpha, 0] = [{}, 0]",
            -ba
        )));
    }
    Ok(PhasePoint::new(0.0, lambda, parabola_height(lambda, params)))
}

/// Z on the critical parabola above a given Y, with no range check.
pub fn parabola_height(lambda: f64, params: &Params) -> f64 {
    -lambda * (lambda + params.beta_over_alpha())
}

pub fn interface_xi_of_lambda(lambda: f64, params: &Params) -> Result<f64> {
    let ba = params.beta_over_alpha();
    if !(lambda > -ba && lambda < 0.0) {
        return Err(Error::Domain(format!(
            "lambda = {lambda} outside (-beta/alpha, 0) = ({}, 0)",
            -ba
        )));
    }
    Ok(xi_of_z(parabola_height(lambda, params), params))
}

/// Inverse of Z = (m/alpha^2) xi^(sigma-2).
pub fn xi_of_z(z: f64, params: &Params) -> f64 {
    let a = params.alpha();
    (a * a * z / params.m).powf(1.0 / (params.sigma - 2.0))
}

pub fn z_of_xi(xi: f64, params: &Params) -> f64 {
    let a = params.alpha();
    params.m / (a * a) * xi.powf(params.sigma - 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_values() {
        let p = validate_params(1.5, 3.0).unwrap();
        assert_eq!(p.p, 0.5);
        let e = derive_exponents(&p);
        assert_relative_eq!(e.alpha, 10.0, max_relative = 1e-15);
        assert_relative_eq!(e.beta, 2.0, max_relative = 1e-15);
        assert_relative_eq!(e.xi_max, 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(e.z_max, 0.01, max_relative = 1e-15);

        let e = derive_exponents(&validate_params(1.5, 4.0).unwrap());
        assert_relative_eq!(e.alpha, 6.0, max_relative = 1e-15);
        assert_relative_eq!(e.beta, 1.0, max_relative = 1e-15);
        assert_relative_eq!(e.xi_max, (1.0f64 / 6.0).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(e.z_max, 1.0 / 144.0, max_relative = 1e-14);
    }

    #[test]
    fn rejects_bounds() {
        assert_eq!(
            validate_params(1.0, 3.0).unwrap_err().to_string(),
            "m must exceed 1"
        );
        assert_eq!(
            validate_params(1.5, 2.0).unwrap_err().to_string(),
            "sigma must exceed 2"
        );
        assert!(validate_params(2.0, 3.0).is_err());
        assert!(validate_params(f64::NAN, 3.0).is_err());
    }

    #[test]
    fn p2_values() {
        let q = p2_coordinates(&validate_params(1.5, 3.0).unwrap());
        assert_relative_eq!(q.x, 0.01, max_relative = 1e-14);
        assert_relative_eq!(q.y, 0.04, max_relative = 1e-14);
        assert_eq!(q.z, 0.0);
        let q = p2_coordinates(&validate_params(1.5, 4.0).unwrap());
        assert_relative_eq!(q.x, 1.0 / 60.0, max_relative = 1e-14);
        assert_relative_eq!(q.y, 1.0 / 15.0, max_relative = 1e-14);
    }

    #[test]
    fn parabola_and_interface() {
        let p = validate_params(1.5, 3.0).unwrap();
        let v = parabola_point(-0.1, &p).unwrap();
        assert_relative_eq!(v.z, 0.01, max_relative = 1e-14);
        assert_eq!(parabola_point(0.0, &p).unwrap(), PhasePoint::new(0.0, 0.0, 0.0));
        assert_eq!(parabola_point(-0.2, &p).unwrap().z, 0.0);
        assert!(parabola_point(-0.21, &p).is_err());
        assert!(parabola_point(0.01, &p).is_err());

        assert_relative_eq!(
            interface_xi_of_lambda(-0.1, &p).unwrap(),
            2.0 / 3.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            interface_xi_of_lambda(-0.05, &p).unwrap(),
            0.5,
            max_relative = 1e-14
        );
        assert!(interface_xi_of_lambda(-1e-12, &p).unwrap() < 1e-9);
        assert!(interface_xi_of_lambda(0.0, &p).is_err());
        assert!(interface_xi_of_lambda(-0.2, &p).is_err());
    }
}
