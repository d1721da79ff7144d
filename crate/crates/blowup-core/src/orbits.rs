//! Distinguished orbits (out of P2, P0 and Q1), fate classification, sigma
//! sweeps and the bisection for the critical sigma where the P2 orbit lands
//! on the parabola vertex.

use crate::error::{Error, Result};
use crate::integrator::{integrate, Direction, EventRecord, EventSpec, IntegrationControls, State, Termination, Trajectory};
use crate::parameters::{interface_xi_of_lambda, p2_coordinates, parabola_height, Params};
use crate::phase_field::{center_family_p0, eigen_decompose, jacobian, ChartField, ChartPoint, PhaseField, PhasePoint};
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_DELTA: f64 = 1e-6;

/// Thresholds used to turn a trajectory into a fate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FateOptions {
    pub stagnation_speed: f64,
    pub stagnation_distance: f64,
    pub y_floor: f64,
    pub vertex_tol: f64,
    /// X below this at the Y floor does not count as bounded away from 0.
    pub x_min_q3: f64,
}

impl Default for FateOptions {
    fn default() -> Self {
        Self {
            stagnation_speed: 1e-11,
            stagnation_distance: 1e-4,
            y_floor: -1e3,
            vertex_tol: 1e-2,
            x_min_q3: 1e-12,
        }
    }
}

pub const EV_STAGNATION: &str = "stagnation";
pub const EV_MIDPLANE: &str = "midplane";
pub const EV_Y_FLOOR: &str = "y_floor";
pub const EV_HANDOFF: &str = "handoff";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FateKind {
    EntersParabola { lambda_hat: f64 },
    EntersVertexNeighborhood { lambda_hat: f64 },
    EntersQ3,
    Inconclusive,
}

impl FateKind {
    pub fn name(&self) -> &'static str {
        match self {
            FateKind::EntersParabola { .. } => "EntersParabola",
            FateKind::EntersVertexNeighborhood { .. } => "EntersVertexNeighborhood",
            FateKind::EntersQ3 => "EntersQ3",
            FateKind::Inconclusive => "Inconclusive",
        }
    }

    pub fn lambda_hat(&self) -> Option<f64> {
        match *self {
            FateKind::EntersParabola { lambda_hat } | FateKind::EntersVertexNeighborhood { lambda_hat } => {
                Some(lambda_hat)
            }
            _ => None,
        }
    }

    /// Parabola entry, vertex included.
    pub fn enters_parabola(&self) -> bool {
        self.lambda_hat().is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitFate {
    pub kind: FateKind,
    pub entry_point: PhasePoint,
    pub diagnostics: Vec<EventRecord>,
    pub termination: Termination,
    pub eta_end: f64,
}

/// Distance from a point to the critical parabola, measured through the
/// nearest parabola abscissa in Y (an upper bound for the Euclidean one).
pub fn parabola_distance(s: &State, params: &Params) -> f64 {
    let yc = s[1].clamp(-params.beta_over_alpha(), 0.0);
    let h = parabola_height(yc, params);
    (s[0] * s[0] + (s[1] - yc).powi(2) + (s[2] - h).powi(2)).sqrt()
}

/// Stagnation near the parabola, the midplane crossing (recorded, not
/// terminal) and the Y floor.
pub fn fate_events(params: &Params, opts: &FateOptions) -> Vec<EventSpec> {
    let f = PhaseField::new(params);
    let p = *params;
    let o = *opts;
    let hb = -params.vertex_lambda();
    vec![
        EventSpec::new(EV_STAGNATION, Direction::Falling, true, move |s: &State| {
            use crate::integrator::VectorField;
            let v = f.eval(s);
            let speed = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            (speed / o.stagnation_speed - 1.0).max(parabola_distance(s, &p) / o.stagnation_distance - 1.0)
        }),
        EventSpec::new(EV_MIDPLANE, Direction::Falling, false, move |s: &State| s[1] + hb),
        EventSpec::new(EV_Y_FLOOR, Direction::Falling, true, move |s: &State| s[1] - o.y_floor),
    ]
}

/// Midplane crossing with Z above the vertex height, if any.
pub fn midplane_certificate<'a>(traj: &'a Trajectory, params: &Params) -> Option<&'a EventRecord> {
    let zmax = params.exponents().z_max;
    traj.events
        .iter()
        .find(|e| e.id == EV_MIDPLANE && e.point.z > zmax)
}

pub fn classify_fate(traj: &Trajectory, params: &Params, opts: &FateOptions) -> OrbitFate {
    let end = traj.last();
    let mut kind = FateKind::Inconclusive;
    let mut entry = end.point;
    let cert = midplane_certificate(traj, params);
    match traj.terminal_event() {
        Some(e) if e.id == EV_STAGNATION => {
            let p = e.point;
            let ba = params.beta_over_alpha();
            let dist = parabola_distance(&p.to_array(), params);
            if p.x < 1e-4 && dist <= opts.stagnation_distance * (1.0 + 1e-9) && p.y >= -ba && p.y <= 0.0 {
                let l = p.y;
                kind = if (l - params.vertex_lambda()).abs() < opts.vertex_tol {
                    FateKind::EntersVertexNeighborhood { lambda_hat: l }
                } else {
                    FateKind::EntersParabola { lambda_hat: l }
                };
            }
            entry = p;
        }
        Some(e) if e.id == EV_Y_FLOOR => {
            if cert.is_some() || e.point.x > opts.x_min_q3 {
                kind = FateKind::EntersQ3;
            }
            entry = e.point;
        }
        _ => {
            if let Some(c) = cert {
                kind = FateKind::EntersQ3;
                entry = c.point;
            }
        }
    }
    OrbitFate {
        kind,
        entry_point: entry,
        diagnostics: traj.events.clone(),
        termination: traj.termination,
        eta_end: end.eta,
    }
}

/// Unit unstable eigenvector at P2 with positive Z-component, from the
/// numerical eigen-decomposition of the linearisation.
pub fn p2_unstable_direction(params: &Params) -> Result<[f64; 3]> {
    let j = jacobian(&p2_coordinates(params), params);
    let e = eigen_decompose(&j)?;
    let k = (0..3)
        .filter(|&i| e.values[i].re > 0.0 && e.values[i].im == 0.0)
        .max_by(|&a, &b| e.values[a].re.total_cmp(&e.values[b].re))
        .ok_or_else(|| Error::Numerical("no real unstable eigenvalue at P2".into()))?;
    let mut v = e
        .real_vector(k)
        .ok_or_else(|| Error::Numerical("complex unstable eigenvector at P2".into()))?;
    if v[2] < 0.0 {
        v = [-v[0], -v[1], -v[2]];
    }
    if !(v[2] > 0.0) {
        return Err(Error::Numerical("unstable eigenvector at P2 has no Z component".into()));
    }
    Ok(v)
}

pub fn launch_from_p2(params: &Params, delta: f64) -> Result<PhasePoint> {
    if !(delta > 0.0 && delta <= 1e-4) {
        return Err(Error::Domain(format!("delta = {delta} outside (0, 1e-4]")));
    }
    let v = p2_unstable_direction(params)?;
    let p = p2_coordinates(params);
    Ok(PhasePoint::new(p.x + delta * v[0], p.y + delta * v[1], p.z + delta * v[2]))
}

/// Point on the centre family out of P0 with its Y from the tangent plane
/// (beta/alpha) Y = X - Z.
pub fn launch_from_p0(k: f64, z0: f64, params: &Params) -> Result<PhasePoint> {
    if !(k > 0.0) {
        return Err(Error::Domain("K must be positive".into()));
    }
    if !(z0 > 0.0 && z0 <= 1e-5) {
        return Err(Error::Domain(format!("z0 = {z0} outside (0, 1e-5]")));
    }
    let x = center_family_p0(k, z0, params);
    if !(x > 0.0) {
        return Err(Error::Domain(format!(
            "K = {k} below the physical threshold (m-1) alpha sqrt(z0) = {}",
            (params.m - 1.0) * params.alpha() * z0.sqrt()
        )));
    }
    Ok(PhasePoint::new(x, (x - z0) / params.beta_over_alpha(), z0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SlopeMode {
    TangentV1,
    /// Sign of the Y-direction; these orbits carry profiles with f'(0) != 0.
    TangentV2(f64),
}

pub fn launch_from_q1_chart(mode: SlopeMode, delta: f64, _params: &Params) -> Result<ChartPoint> {
    if !(delta > 0.0 && delta <= 1e-4) {
        return Err(Error::Domain(format!("delta = {delta} outside (0, 1e-4]")));
    }
    Ok(match mode {
        SlopeMode::TangentV1 => ChartPoint::new(delta, delta, 0.0),
        SlopeMode::TangentV2(s) => ChartPoint::new(0.0, delta * s.signum(), 0.0),
    })
}

/// Chart point on the v1-tangent family carrying the profile with f(0) = a,
/// f'(0) = 0: w = y = delta and z = kappa(a) delta^(sigma/2).
pub fn launch_from_q1_profile(a: f64, delta: f64, params: &Params) -> Result<ChartPoint> {
    if !(a > 0.0) {
        return Err(Error::Domain("a must be positive".into()));
    }
    let mut c = launch_from_q1_chart(SlopeMode::TangentV1, delta, params)?;
    let (m, s, al) = (params.m, params.sigma, params.alpha());
    let kappa = m / (al * al) * (m / al).powf(0.5 * (s - 2.0)) * a.powf(0.5 * (m - 1.0) * (s - 2.0));
    c.z = kappa * delta.powf(0.5 * s);
    Ok(c)
}

/// Integrate the Q1 chart field.
pub fn integrate_chart(
    start: ChartPoint,
    params: &Params,
    events: &[EventSpec],
    controls: &IntegrationControls,
) -> Result<Trajectory> {
    integrate(&ChartField::new(params), PhasePoint::from_array(start.to_array()), events, controls)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Source {
    P2 { delta: f64 },
    P0 { k: f64, z0: f64 },
    /// Orbit out of Q1 carrying f(0) = a, f'(0) = 0.
    Q1 { a: f64, delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitRun {
    pub start: PhasePoint,
    /// Chart leg (w, y, z) for Q1 launches, up to the handoff.
    pub chart_leg: Option<Trajectory>,
    pub trajectory: Trajectory,
    pub fate: OrbitFate,
}

/// Chart orbits are handed to the phase system once X = 1/w drops to this.
pub const HANDOFF_X: f64 = 100.0;

pub fn run_orbit(params: &Params, source: Source, controls: &IntegrationControls, opts: &FateOptions) -> Result<OrbitRun> {
    let mut chart_leg = None;
    let start = match source {
        Source::P2 { delta } => launch_from_p2(params, delta)?,
        Source::P0 { k, z0 } => launch_from_p0(k, z0, params)?,
        Source::Q1 { a, delta } => {
            let c0 = launch_from_q1_profile(a, delta, params)?;
            let wh = 1.0 / HANDOFF_X;
            let ev = [EventSpec::new(EV_HANDOFF, Direction::Rising, true, move |s: &State| s[0] - wh)];
            let leg = integrate_chart(c0, params, &ev, controls)?;
            if leg.termination != Termination::Event {
                return Err(Error::Inconclusive(format!(
                    "chart leg ended by {:?} before reaching the handoff",
                    leg.termination
                )));
            }
            let c = ChartPoint::from_array(leg.last().point.to_array());
            chart_leg = Some(leg);
            c.to_phase()
        }
    };
    let traj = integrate(&PhaseField::new(params), start, &fate_events(params, opts), controls)?;
    let fate = classify_fate(&traj, params, opts);
    Ok(OrbitRun {
        start,
        chart_leg,
        trajectory: traj,
        fate,
    })
}

/// Controls for runs whose samples are discarded.
fn lean(controls: &IntegrationControls) -> IntegrationControls {
    IntegrationControls {
        sample_stride: controls.sample_stride.max(1024),
        ..*controls
    }
}

pub fn p2_fate(params: &Params, delta: f64, controls: &IntegrationControls, opts: &FateOptions) -> Result<OrbitFate> {
    Ok(run_orbit(params, Source::P2 { delta }, &lean(controls), opts)?.fate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum LambdaOfSigma {
    Entering(f64),
    NotEntering,
    Inconclusive,
}

pub fn lambda_of_sigma(m: f64, sigma: f64, controls: &IntegrationControls) -> Result<LambdaOfSigma> {
    let p = Params::new(m, sigma)?;
    let f = p2_fate(&p, DEFAULT_DELTA, controls, &FateOptions::default())?;
    Ok(match f.kind {
        FateKind::EntersQ3 => LambdaOfSigma::NotEntering,
        FateKind::Inconclusive => LambdaOfSigma::Inconclusive,
        k => LambdaOfSigma::Entering(k.lambda_hat().unwrap_or(f64::NAN)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootResult {
    pub sigma_star: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub fate_at_ends: (OrbitFate, OrbitFate),
    /// Every sigma evaluated with its fate name, in order.
    pub history: Vec<(f64, String)>,
}

/// Interior retries at shifted points (and longer horizons) after an
/// inconclusive fate.
pub const SHOOT_RETRIES: usize = 4;

pub fn sigma_star(
    m: f64,
    bracket: (f64, f64),
    tol: f64,
    controls: &IntegrationControls,
    opts: &FateOptions,
) -> Result<ShootResult> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::Bracket(format!("empty bracket ({lo}, {hi})")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("tol must be positive".into()));
    }
    let mut history = Vec::new();
    let mut eval = |s: f64, c: &IntegrationControls| -> Result<OrbitFate> {
        let f = p2_fate(&Params::new(m, s)?, DEFAULT_DELTA, c, opts)?;
        history.push((s, f.kind.name().to_string()));
        Ok(f)
    };
    let mut f_lo = eval(lo, controls)?;
    let mut f_hi = eval(hi, controls)?;
    let side = |f: &OrbitFate| -> Option<bool> {
        match f.kind {
            FateKind::EntersQ3 => Some(true),
            FateKind::Inconclusive => None,
            _ => Some(false),
        }
    };
    let s_lo = match (side(&f_lo), side(&f_hi)) {
        (Some(a), Some(b)) if a != b => a,
        _ => {
            return Err(Error::Bracket(format!(
                "fates at sigma = {lo} ({}) and sigma = {hi} ({}) do not differ; widen or move the bracket",
                f_lo.kind.name(),
                f_hi.kind.name()
            )))
        }
    };
    let mut iterations = 0;
    while hi - lo > tol {
        let w = hi - lo;
        let mut c = *controls;
        let mut found = None;
        for r in 0..=SHOOT_RETRIES {
            let off = match r {
                0 => 0.0,
                r => (if r % 2 == 1 { 1.0 } else { -1.0 }) * 0.1 * ((r + 1) / 2) as f64,
            };
            let s = lo + w * (0.5 + off);
            let f = eval(s, &c)?;
            if let Some(sd) = side(&f) {
                found = Some((s, f, sd));
                break;
            }
            c.max_time *= 4.0;
            c.max_steps = c.max_steps.saturating_mul(4);
        }
        let (s, f, sd) = found.ok_or_else(|| {
            Error::Inconclusive(format!(
                "fate undecided near sigma = {} after {} retries",
                lo + 0.5 * w,
                SHOOT_RETRIES
            ))
        })?;
        if sd == s_lo {
            lo = s;
            f_lo = f;
        } else {
            hi = s;
            f_hi = f;
        }
        iterations += 1;
    }
    Ok(ShootResult {
        sigma_star: 0.5 * (lo + hi),
        bracket: (lo, hi),
        iterations,
        fate_at_ends: (f_lo, f_hi),
        history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub sigma: f64,
    pub fate: FateKind,
    /// Interface position implied by the entry point, when entering.
    pub xi0: Option<f64>,
}

pub fn sweep_sigma(
    m: f64,
    sigmas: &[f64],
    controls: &IntegrationControls,
    opts: &FateOptions,
    parallel: bool,
) -> Result<Vec<SweepRow>> {
    let job = |&s: &f64| -> Result<SweepRow> {
        let p = Params::new(m, s)?;
        let f = p2_fate(&p, DEFAULT_DELTA, controls, opts)?;
        let xi0 = f.kind.lambda_hat().and_then(|l| interface_xi_of_lambda(l, &p).ok());
        Ok(SweepRow { sigma: s, fate: f.kind, xi0 })
    };
    if parallel {
        sigmas.par_iter().map(job).collect()
    } else {
        sigmas.iter().map(job).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::VectorField;
    use approx::assert_relative_eq;

    #[test]
    fn p2_launch_direction() {
        let p = Params::new(1.5, 3.0).unwrap();
        let s = launch_from_p2(&p, 1e-6).unwrap();
        let e = [-25.0 / 21.0, -150.0 / 21.0, 1.0];
        let n = (e[0] * e[0] + e[1] * e[1] + 1.0f64).sqrt();
        let q = p2_coordinates(&p);
        assert_relative_eq!(s.x, q.x + 1e-6 * e[0] / n, max_relative = 1e-12);
        assert_relative_eq!(s.y, q.y + 1e-6 * e[1] / n, max_relative = 1e-12);
        assert_relative_eq!(s.z, 1e-6 / n, max_relative = 1e-8);
        assert!(launch_from_p2(&p, 2e-4).is_err());
    }

    #[test]
    fn p0_launch_reference() {
        let p = Params::new(1.5, 3.0).unwrap();
        let s = launch_from_p0(0.1, 1e-6, &p).unwrap();
        assert_relative_eq!(s.x, 9.5e-5, max_relative = 1e-12);
        assert_relative_eq!(s.y, 4.7e-4, max_relative = 1e-12);
        assert!(launch_from_p0(0.004, 1e-6, &p).is_err());
        let t = launch_from_p0(0.1, 1e-12, &p).unwrap();
        assert!(t.distance(&PhasePoint::default()) < 1e-6);
    }

    #[test]
    fn q1_launches() {
        let p = Params::new(1.5, 3.0).unwrap();
        assert_eq!(
            launch_from_q1_chart(SlopeMode::TangentV1, 1e-5, &p).unwrap(),
            ChartPoint::new(1e-5, 1e-5, 0.0)
        );
        assert_eq!(
            launch_from_q1_chart(SlopeMode::TangentV2(-1.0), 1e-5, &p).unwrap(),
            ChartPoint::new(0.0, -1e-5, 0.0)
        );
    }

    #[test]
    fn stagnation_guard_fires_only_near_parabola() {
        let p = Params::new(1.5, 3.0).unwrap();
        let ev = fate_events(&p, &FateOptions::default());
        let on = crate::parameters::parabola_point(-0.05, &p).unwrap().to_array();
        assert!((ev[0].guard)(&on) < 0.0);
        let off = p2_coordinates(&p).to_array();
        assert!((ev[0].guard)(&off) > 0.0);
        let _ = PhaseField::new(&p).eval(&off);
    }
}
