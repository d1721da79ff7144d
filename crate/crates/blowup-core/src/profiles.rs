//! Physical profiles f(xi): reconstruction from phase-space orbits, direct
//! integration of the profile equation, interface slopes and the shooting
//! on f(0) = a.

use crate::error::{Error, Result};
use crate::integrator::{integrate, Direction, EventSpec, IntegrationControls, State, Termination, Trajectory, VectorField};
use crate::parameters::Params;
use crate::phase_field::PhasePoint;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSample {
    pub xi: f64,
    pub f: f64,
    pub df: f64,
    /// Pressure derivative g' = m f^(m-2) f'.
    pub g_slope: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterfaceReport {
    pub xi0: f64,
    /// Lower root of the slope quadratic (the steeper one).
    pub slope_minus: Option<f64>,
    /// Upper root; absent for a double root.
    pub slope_plus: Option<f64>,
    pub discriminant: f64,
    pub matched_slope: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfSimilarEval {
    #[serde(rename = "T")]
    pub blowup_time: f64,
    pub t: f64,
    pub x: f64,
    pub u: f64,
}

/// Pressure g = m f^(m-1) / (m-1).
pub fn pressure(f: f64, params: &Params) -> f64 {
    params.m / (params.m - 1.0) * f.max(0.0).powf(params.m - 1.0)
}

pub fn profile_of_pressure(g: f64, params: &Params) -> f64 {
    ((params.m - 1.0) * g.max(0.0) / params.m).powf(1.0 / (params.m - 1.0))
}

/// Scale of the pressure near the localization bound; vanishing thresholds
/// are taken relative to it.
pub fn pressure_scale(params: &Params) -> f64 {
    let xm = params.exponents().xi_max;
    xm * xm / (2.0 * (params.m + 1.0))
}

/// Inverse of the phase-space change of variables at one point.
pub fn sample_of_phase(p: &PhasePoint, params: &Params) -> Option<ProfileSample> {
    if !(p.x > 0.0 && p.z > 0.0) {
        return None;
    }
    let (m, s, al) = (params.m, params.sigma, params.alpha());
    let xi = (al * al * p.z / m).powf(1.0 / (s - 2.0));
    let f = (al * xi * xi * p.x / m).powf(1.0 / (m - 1.0));
    let df = al * xi * f.powf(2.0 - m) * p.y / m;
    Some(ProfileSample { xi, f, df, g_slope: Some(al * xi * p.y) })
}

/// Forward change of variables.
pub fn to_phase(s: &ProfileSample, params: &Params) -> PhasePoint {
    let (m, sg, al) = (params.m, params.sigma, params.alpha());
    PhasePoint::new(
        m / al * s.f.powf(m - 1.0) / (s.xi * s.xi),
        m / al * s.f.powf(m - 2.0) * s.df / s.xi,
        m / (al * al) * s.xi.powf(sg - 2.0),
    )
}

/// Profile samples along a phase-space trajectory. Points with X <= 0 or
/// Z <= 0, and points that would not advance xi, are dropped; their count is
/// returned alongside.
pub fn reconstruct_profile(traj: &Trajectory, params: &Params) -> (Vec<ProfileSample>, usize) {
    let mut out: Vec<ProfileSample> = Vec::with_capacity(traj.samples.len());
    let mut dropped = 0;
    for s in &traj.samples {
        match sample_of_phase(&s.point, params) {
            Some(p) if out.last().map_or(true, |l| p.xi > l.xi) => out.push(p),
            _ => dropped += 1,
        }
    }
    (out, dropped)
}

/// Largest residual of (f^m)'' - alpha f + beta xi f' + xi^sigma f^(2-m)
/// over interior samples, relative to max(1, max |alpha f|). The flux
/// (f^m)' is formed from f and f' and differentiated by the three-point
/// formula on the nonuniform grid.
pub fn ssode_residual(samples: &[ProfileSample], params: &Params) -> Result<f64> {
    if samples.len() < 5 {
        return Err(Error::InsufficientData(format!("{} samples, need at least 5", samples.len())));
    }
    let n = samples.len();
    if samples[1..n - 1].iter().any(|s| !(s.f > 0.0)) {
        return Err(Error::Domain("profile must be positive at interior samples".into()));
    }
    let (m, sg, al, be) = (params.m, params.sigma, params.alpha(), params.beta());
    let q: Vec<f64> = samples.iter().map(|s| m * s.f.max(0.0).powf(m - 1.0) * s.df).collect();
    let scale = samples.iter().fold(1.0f64, |a, s| a.max((al * s.f).abs()));
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        let (h1, h2) = (samples[i].xi - samples[i - 1].xi, samples[i + 1].xi - samples[i].xi);
        if !(h1 > 0.0 && h2 > 0.0) {
            return Err(Error::Domain("sample abscissae must increase strictly".into()));
        }
        let dq = -h2 / (h1 * (h1 + h2)) * q[i - 1] + (h2 - h1) / (h1 * h2) * q[i] + h1 / (h2 * (h1 + h2)) * q[i + 1];
        let s = &samples[i];
        let r = dq - al * s.f + be * s.xi * s.df + s.xi.powf(sg) * s.f.powf(2.0 - m);
        worst = worst.max(r.abs());
    }
    Ok(worst / scale)
}

/// Roots of (g')^2 + beta xi0 g' + m xi0^sigma = 0.
pub fn interface_slopes(xi0: f64, params: &Params) -> InterfaceReport {
    let be = params.beta();
    let d = be * be * xi0 * xi0 - 4.0 * params.m * xi0.powf(params.sigma);
    let (minus, plus) = if d > 0.0 {
        let r = d.sqrt();
        (Some(0.5 * (-be * xi0 - r)), Some(0.5 * (-be * xi0 + r)))
    } else if d == 0.0 {
        (Some(-0.5 * be * xi0), None)
    } else {
        (None, None)
    };
    InterfaceReport { xi0, slope_minus: minus, slope_plus: plus, discriminant: d, matched_slope: None }
}

/// |(g')^2 + beta xi0 g' + m xi0^sigma|.
pub fn slope_residual(xi0: f64, g_slope: f64, params: &Params) -> f64 {
    (g_slope * g_slope + params.beta() * xi0 * g_slope + params.m * xi0.powf(params.sigma)).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Origin {
    /// f(0) = a > 0, f'(0) = 0.
    P1 { a: f64 },
    /// f ~ ((m-1)/(2m(m+1)))^(1/(m-1)) xi^(2/(m-1)).
    P2,
    /// f ~ K xi^((sigma+2)/(2(m-1))).
    P0 { k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum ProfileFate {
    Interface { xi0: f64, g_slope: f64 },
    SignChange { xi0: f64, g_slope: f64 },
    Positive,
    Inconclusive,
}

impl ProfileFate {
    pub fn name(&self) -> &'static str {
        match self {
            ProfileFate::Interface { .. } => "Interface",
            ProfileFate::SignChange { .. } => "SignChange",
            ProfileFate::Positive => "Positive",
            ProfileFate::Inconclusive => "Inconclusive",
        }
    }

    pub fn xi0(&self) -> Option<f64> {
        match *self {
            ProfileFate::Interface { xi0, .. } | ProfileFate::SignChange { xi0, .. } => Some(xi0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SsodeControls {
    pub integration: IntegrationControls,
    pub xi_start: f64,
    /// Switch from (f, f') to (g, g') below this pressure, back above ten times it.
    pub g_switch: f64,
    /// Vanishing threshold relative to `pressure_scale`.
    pub g_floor_rel: f64,
    pub slope_tol: f64,
    pub delta_tol: f64,
    /// Integration stops at this multiple of xi_max.
    pub xi_cap_factor: f64,
    pub y_floor: f64,
}

impl Default for SsodeControls {
    fn default() -> Self {
        Self {
            integration: IntegrationControls {
                rel_tol: 1e-10,
                abs_tol: 1e-20,
                max_step: 0.01,
                max_time: 1e3,
                max_steps: 2_000_000,
                sample_stride: 1,
            },
            xi_start: 1e-4,
            g_switch: 1e-6,
            g_floor_rel: 1e-8,
            slope_tol: 1e-2,
            delta_tol: 1e-6,
            xi_cap_factor: 10.0,
            y_floor: -1e3,
        }
    }
}

impl SsodeControls {
    pub fn validate(&self) -> Result<()> {
        self.integration.validate()?;
        let ok = self.xi_start > 0.0
            && self.g_switch > 0.0
            && self.g_floor_rel > 0.0
            && self.slope_tol > 0.0
            && self.delta_tol >= 0.0
            && self.xi_cap_factor > 1.0
            && self.y_floor < 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Controls("profile controls out of range".into()))
        }
    }

    pub fn tightened(&self, factor: f64) -> Self {
        Self { integration: self.integration.tightened(factor), ..*self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsodeRun {
    pub origin: Origin,
    /// Starts with the origin value at xi = 0.
    pub samples: Vec<ProfileSample>,
    pub fate: ProfileFate,
    pub interface: Option<InterfaceReport>,
    /// Whether the orbit crossed below the midplane above the vertex height.
    pub certificate: bool,
    pub mode_switches: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    /// State (xi, f, f').
    Direct,
    /// State (xi, g, g').
    Pressure,
}

struct SsodeField {
    p: Params,
    mode: Mode,
}

impl VectorField for SsodeField {
    fn eval(&self, s: &State) -> State {
        let (m, sg, al, be) = (self.p.m, self.p.sigma, self.p.alpha(), self.p.beta());
        let (xi, u, du) = (s[0], s[1].max(f64::MIN_POSITIVE), s[2]);
        let acc = match self.mode {
            Mode::Direct => {
                (al * u - be * xi * du - xi.powf(sg) * u.powf(2.0 - m) - m * (m - 1.0) * u.powf(m - 2.0) * du * du)
                    / (m * u.powf(m - 1.0))
            }
            Mode::Pressure => ((m - 1.0) * al * u - du * du - be * xi * du - m * xi.powf(sg)) / ((m - 1.0) * u),
        };
        [1.0, du, acc]
    }
}

/// (xi, g, g') from a state in either mode.
fn pressure_state(s: &State, mode: Mode, p: &Params) -> State {
    match mode {
        Mode::Pressure => *s,
        Mode::Direct => {
            let f = s[1].max(0.0);
            [s[0], pressure(f, p), p.m * f.powf(p.m - 2.0) * s[2]]
        }
    }
}

fn convert(s: &State, from: Mode, p: &Params) -> State {
    match from {
        Mode::Direct => pressure_state(s, from, p),
        Mode::Pressure => {
            let f = profile_of_pressure(s[1], p);
            [s[0], f, s[2] * f.powf(2.0 - p.m) / p.m]
        }
    }
}

fn sample_of_state(s: &State, mode: Mode, p: &Params) -> ProfileSample {
    let g = pressure_state(s, mode, p);
    let f = match mode {
        Mode::Direct => s[1],
        Mode::Pressure => profile_of_pressure(s[1], p),
    };
    ProfileSample { xi: s[0], f, df: g[2] * f.max(0.0).powf(2.0 - p.m) / p.m, g_slope: Some(g[2]) }
}

const EV_VANISH: &str = "vanish";
const EV_CERT: &str = "certificate";
const EV_SWITCH: &str = "switch";
const EV_FLOOR: &str = "y_floor";

fn ssode_events(p: &Params, mode: Mode, c: &SsodeControls) -> Vec<EventSpec> {
    let (pp, al) = (*p, p.alpha());
    let hb = -p.vertex_lambda();
    let floor = c.g_floor_rel * pressure_scale(p);
    let gs = c.g_switch;
    let yf = c.y_floor;
    let switch = match mode {
        Mode::Direct => EventSpec::new(EV_SWITCH, Direction::Falling, true, move |s: &State| {
            pressure_state(s, mode, &pp)[1] - gs
        }),
        Mode::Pressure => EventSpec::new(EV_SWITCH, Direction::Rising, true, move |s: &State| s[1] - 10.0 * gs),
    };
    vec![
        EventSpec::new(EV_VANISH, Direction::Falling, true, move |s: &State| pressure_state(s, mode, &pp)[1] - floor),
        EventSpec::new(EV_CERT, Direction::Falling, false, move |s: &State| {
            let g = pressure_state(s, mode, &pp);
            let x = (pp.m - 1.0) * g[1] / (al * g[0] * g[0]);
            let y = g[2] / (al * g[0]);
            let z = pp.m / (al * al) * g[0].powf(pp.sigma - 2.0);
            (y + hb).max(hb * hb + x * (1.0 + hb) - z)
        }),
        EventSpec::new(EV_FLOOR, Direction::Falling, true, move |s: &State| {
            let g = pressure_state(s, mode, &pp);
            g[2] / (al * g[0]) - yf
        }),
        switch,
    ]
}

/// Start state at xi_start from the asymptotics of the chosen origin,
/// together with the value at xi = 0.
fn origin_start(origin: Origin, p: &Params, xi: f64) -> Result<(State, Mode, ProfileSample)> {
    let (m, sg, al, be) = (p.m, p.sigma, p.alpha(), p.beta());
    match origin {
        Origin::P1 { a } => {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::Domain("a must be positive".into()));
            }
            let c = al * a.powf(2.0 - m) / m;
            let s = [xi, a + 0.5 * c * xi * xi, c * xi];
            Ok((s, Mode::Direct, ProfileSample { xi: 0.0, f: a, df: 0.0, g_slope: Some(0.0) }))
        }
        Origin::P2 => {
            let k = 1.0 / (2.0 * (m + 1.0));
            let c = -m / ((m - 1.0) * k * (sg * sg - sg + 2.0) + 4.0 * k * sg - (m - 1.0) * al + be * sg);
            let s = [xi, k * xi * xi + c * xi.powf(sg), 2.0 * k * xi + sg * c * xi.powf(sg - 1.0)];
            Ok((s, Mode::Pressure, ProfileSample { xi: 0.0, f: 0.0, df: 0.0, g_slope: Some(0.0) }))
        }
        Origin::P0 { k } => {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::Domain("K must be positive".into()));
            }
            let gm = 0.5 * (sg + 2.0);
            let c = m / (m - 1.0) * k.powf(m - 1.0);
            let c2 = -((m - 1.0) * c * c * gm * (gm - 1.0) + c * c * gm * gm + m);
            let s = [xi, c * xi.powf(gm) + c2 * xi.powf(sg), gm * c * xi.powf(gm - 1.0) + sg * c2 * xi.powf(sg - 1.0)];
            if !(s[1] > 0.0) {
                return Err(Error::Domain("xi_start too large for the P0 expansion".into()));
            }
            Ok((s, Mode::Pressure, ProfileSample { xi: 0.0, f: 0.0, df: 0.0, g_slope: Some(0.0) }))
        }
    }
}

/// Integrate the profile equation outward from the given origin behaviour
/// and classify how the profile ends.
pub fn integrate_ssode(origin: Origin, params: &Params, controls: &SsodeControls) -> Result<SsodeRun> {
    controls.validate()?;
    let xi_cap = controls.xi_cap_factor * params.exponents().xi_max;
    if controls.xi_start >= xi_cap {
        return Err(Error::Controls("xi_start beyond the integration cap".into()));
    }
    let (mut state, mut mode, first) = origin_start(origin, params, controls.xi_start)?;
    if mode == Mode::Direct && pressure_state(&state, mode, params)[1] < controls.g_switch {
        state = convert(&state, mode, params);
        mode = Mode::Pressure;
    }
    let mut samples = vec![first];
    let mut certificate = false;
    let mut switches = 0;
    let mut steps_left = controls.integration.max_steps;
    let outcome = loop {
        let ic = IntegrationControls {
            max_time: xi_cap - state[0],
            max_steps: steps_left,
            ..controls.integration
        };
        let field = SsodeField { p: *params, mode };
        let traj = integrate(&field, PhasePoint::from_array(state), &ssode_events(params, mode, controls), &ic)?;
        steps_left = steps_left.saturating_sub(traj.steps);
        for s in &traj.samples {
            let ps = sample_of_state(&s.point.to_array(), mode, params);
            if ps.xi > samples.last().map_or(f64::NEG_INFINITY, |l: &ProfileSample| l.xi) {
                samples.push(ps);
            }
        }
        certificate |= traj.events.iter().any(|e| e.id == EV_CERT);
        let end = pressure_state(&traj.last().point.to_array(), mode, params);
        match (traj.termination, traj.terminal_event().map(|e| e.id.as_str())) {
            (Termination::Event, Some(EV_SWITCH)) => {
                state = convert(&traj.last().point.to_array(), mode, params);
                mode = if mode == Mode::Direct { Mode::Pressure } else { Mode::Direct };
                switches += 1;
                if steps_left == 0 {
                    break None;
                }
            }
            (Termination::Event, Some(EV_VANISH)) => break Some((end, true)),
            (Termination::MaxTime, _) => {
                break if certificate {
                    Some((end, false))
                } else {
                    return Ok(SsodeRun {
                        origin,
                        samples,
                        fate: ProfileFate::Positive,
                        interface: None,
                        certificate,
                        mode_switches: switches,
                    });
                }
            }
            _ => break Some((end, false)),
        }
    };
    let (fate, interface) = match outcome {
        None => (ProfileFate::Inconclusive, None),
        Some((end, vanished)) => classify_end(&end, vanished, certificate, params, controls),
    };
    Ok(SsodeRun { origin, samples, fate, interface, certificate, mode_switches: switches })
}

/// Classification at the end of integration. A vanishing pressure with a
/// slope above the lower root converges to the upper root (slowly near the
/// vertex, where the roots merge); below the lower root, or where the
/// quadratic has no real root, the slope diverges and the profile crosses
/// zero.
fn classify_end(
    end: &State,
    vanished: bool,
    certificate: bool,
    p: &Params,
    c: &SsodeControls,
) -> (ProfileFate, Option<InterfaceReport>) {
    let (xi, g, dg) = (end[0], end[1], end[2]);
    let xi0 = if dg < 0.0 { xi + g / -dg } else { xi };
    let mut rep = interface_slopes(xi0, p);
    let sign_change = ProfileFate::SignChange { xi0, g_slope: dg };
    if certificate {
        return (sign_change, Some(rep));
    }
    if !vanished || rep.discriminant < -c.delta_tol {
        let fate = if vanished { sign_change } else { ProfileFate::Inconclusive };
        return (fate, Some(rep));
    }
    let double = -0.5 * p.beta() * xi0;
    let lower = rep.slope_minus.unwrap_or(double);
    let upper = rep.slope_plus.unwrap_or(lower);
    if dg < lower - c.slope_tol {
        return (sign_change, Some(rep));
    }
    let matched = if (dg - lower).abs() < (dg - upper).abs() && (dg - lower).abs() <= c.slope_tol {
        lower
    } else {
        upper
    };
    rep.matched_slope = Some(matched);
    (ProfileFate::Interface { xi0, g_slope: dg }, Some(rep))
}

/// Fates of the f(0) = a profiles on a logarithmic grid of `n` values.
pub fn scan_p1(params: &Params, a_range: (f64, f64), n: usize, controls: &SsodeControls) -> Result<Vec<(f64, ProfileFate)>> {
    let (lo, hi) = a_range;
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(Error::Domain("scan needs 0 < a_lo < a_hi and at least two points".into()));
    }
    (0..n)
        .map(|i| {
            let a = lo * (hi / lo).powf(i as f64 / (n - 1) as f64);
            Ok((a, integrate_ssode(Origin::P1 { a }, params, controls)?.fate))
        })
        .collect()
}

/// First adjacent pair of a scan on which the sign-change dichotomy flips.
pub fn bracket_from_scan(scan: &[(f64, ProfileFate)]) -> Option<(f64, f64)> {
    scan.windows(2).find_map(|w| match (side(&w[0].1), side(&w[1].1)) {
        (Some(a), Some(b)) if a != b => Some((w[0].0, w[1].0)),
        _ => None,
    })
}

fn side(f: &ProfileFate) -> Option<bool> {
    match f {
        ProfileFate::SignChange { .. } => Some(true),
        ProfileFate::Inconclusive => None,
        _ => Some(false),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodProfile {
    pub a_star: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    /// The end of the final bracket that does not change sign.
    pub run: SsodeRun,
    pub history: Vec<(f64, String)>,
}

/// Bisection in log a between a profile that changes sign and one that does
/// not, until the bracket is narrower than `tol` relative to its upper end.
pub fn find_good_profile_p1(
    params: &Params,
    a_bracket: (f64, f64),
    tol: f64,
    controls: &SsodeControls,
) -> Result<GoodProfile> {
    let (mut lo, mut hi) = a_bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Bracket(format!("invalid bracket ({lo}, {hi})")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain("tol must be positive".into()));
    }
    let mut history = Vec::new();
    let mut eval = |a: f64| -> Result<(SsodeRun, bool)> {
        let r = integrate_ssode(Origin::P1 { a }, params, controls)?;
        history.push((a, r.fate.name().to_string()));
        let s = side(&r.fate).ok_or_else(|| Error::Inconclusive(format!("profile fate undecided at a = {a}")))?;
        Ok((r, s))
    };
    let (mut r_lo, s_lo) = eval(lo)?;
    let (mut r_hi, s_hi) = eval(hi)?;
    if s_lo == s_hi {
        return Err(Error::Bracket(format!(
            "fates at a = {lo} ({}) and a = {hi} ({}) do not differ",
            r_lo.fate.name(),
            r_hi.fate.name()
        )));
    }
    let mut iterations = 0;
    while (hi - lo) > tol * hi {
        let mid = (lo * hi).sqrt();
        let (r, s) = eval(mid)?;
        if s == s_lo {
            lo = mid;
            r_lo = r;
        } else {
            hi = mid;
            r_hi = r;
        }
        iterations += 1;
    }
    let run = if s_lo { r_hi } else { r_lo };
    Ok(GoodProfile { a_star: (lo * hi).sqrt(), bracket: (lo, hi), iterations, run, history })
}

/// u(x, t) = (T - t)^(-alpha) f(|x| (T - t)^beta), with f interpolated
/// linearly and zero beyond the last sample.
pub fn evaluate_solution(samples: &[ProfileSample], blowup_time: f64, x: f64, t: f64, params: &Params) -> Result<SelfSimilarEval> {
    if !(t < blowup_time) {
        return Err(Error::Domain(format!("t = {t} must precede the blow-up time {blowup_time}")));
    }
    if samples.is_empty() {
        return Err(Error::InsufficientData("empty profile".into()));
    }
    let tau = blowup_time - t;
    let xi = x.abs() * tau.powf(params.beta());
    let f = interpolate_linear(samples, xi);
    Ok(SelfSimilarEval { blowup_time, t, x, u: tau.powf(-params.alpha()) * f })
}

fn interpolate_linear(samples: &[ProfileSample], xi: f64) -> f64 {
    let last = samples[samples.len() - 1];
    if xi > last.xi {
        return 0.0;
    }
    if xi <= samples[0].xi {
        return samples[0].f.max(0.0);
    }
    let j = samples.partition_point(|s| s.xi < xi);
    let (a, b) = (samples[j - 1], samples[j]);
    let w = (xi - a.xi) / (b.xi - a.xi);
    ((1.0 - w) * a.f + w * b.f).max(0.0)
}

/// Cubic Hermite interpolation of f and f' at xi, inside the sample range.
pub fn interpolate_hermite(samples: &[ProfileSample], xi: f64) -> Option<f64> {
    let n = samples.len();
    if n < 2 || xi < samples[0].xi || xi > samples[n - 1].xi {
        return None;
    }
    let j = samples.partition_point(|s| s.xi < xi).clamp(1, n - 1);
    let (a, b) = (samples[j - 1], samples[j]);
    let h = b.xi - a.xi;
    let t = (xi - a.xi) / h;
    let (t2, t3) = (t * t, t * t * t);
    Some(
        (2.0 * t3 - 3.0 * t2 + 1.0) * a.f
            + (t3 - 2.0 * t2 + t) * h * a.df
            + (-2.0 * t3 + 3.0 * t2) * b.f
            + (t3 - t2) * h * b.df,
    )
}

/// max |f_a - f_b| over the samples of `a` inside the range of `b`, relative
/// to max |f_a| there. None without overlap.
pub fn profile_discrepancy(a: &[ProfileSample], b: &[ProfileSample]) -> Option<f64> {
    let (mut num, mut den, mut any) = (0.0f64, 0.0f64, false);
    for s in a {
        if let Some(v) = interpolate_hermite(b, s.xi) {
            num = num.max((s.f - v).abs());
            den = den.max(s.f.abs());
            any = true;
        }
    }
    (any && den > 0.0).then(|| num / den)
}

/// Least-squares line through (xi, f^(m-1)) over samples with
/// xi >= (1 - window) xi0 and f > 0: (slope, intercept, r^2).
pub fn near_interface_fit(samples: &[ProfileSample], xi0: f64, window: f64, params: &Params) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.xi >= (1.0 - window) * xi0 && s.xi <= xi0 && s.f > 0.0)
        .map(|s| (s.xi, s.f.powf(params.m - 1.0)))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0 && syy > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx, sxy * sxy / (sxx * syy)))
}
