//! Adaptive Dormand-Prince 5(4) integration of a 3-D autonomous field with
//! dense output and located events.

use crate::error::{Error, Result};
use crate::phase_field::PhasePoint;
use serde::Serialize;

pub type State = [f64; 3];

pub trait VectorField {
    fn eval(&self, s: &State) -> State;
}

impl<F: Fn(&State) -> State> VectorField for F {
    fn eval(&self, s: &State) -> State {
        self(s)
    }
}

/// The same field with time reversed; backward flows are forward flows of this.
pub struct Reversed<F>(pub F);

impl<F: VectorField> VectorField for Reversed<F> {
    fn eval(&self, s: &State) -> State {
        let v = self.0.eval(s);
        [-v[0], -v[1], -v[2]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_time: f64,
    pub max_steps: u64,
    /// Keep every n-th accepted step in the sample list (events and the final
    /// point are always kept).
    pub sample_stride: usize,
}

impl Default for IntegrationControls {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: 0.1,
            max_time: 1e6,
            max_steps: 10_000_000,
            sample_stride: 1,
        }
    }
}

impl IntegrationControls {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, n: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Controls(format!("{n} must be positive and finite, got {v}")))
            }
        };
        pos(self.rel_tol, "rel_tol")?;
        pos(self.abs_tol, "abs_tol")?;
        pos(self.max_step, "max_step")?;
        pos(self.max_time, "max_time")?;
        if self.rel_tol < 1e-13 {
            return Err(Error::Controls(format!(
                "rel_tol must be at least 1e-13, got {}",
                self.rel_tol
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::Controls("max_steps must be positive".into()));
        }
        if self.sample_stride == 0 {
            return Err(Error::Controls("sample_stride must be positive".into()));
        }
        Ok(())
    }

    /// Both tolerances scaled by `factor`.
    pub fn tightened(&self, factor: f64) -> Self {
        Self {
            rel_tol: self.rel_tol / factor,
            abs_tol: self.abs_tol / factor,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Rising,
    Falling,
    Either,
}

pub type Guard = Box<dyn Fn(&State) -> f64 + Send + Sync>;

pub struct EventSpec {
    pub id: String,
    pub guard: Guard,
    pub direction: Direction,
    pub terminal: bool,
}

impl EventSpec {
    pub fn new(
        id: impl Into<String>,
        direction: Direction,
        terminal: bool,
        guard: impl Fn(&State) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            guard: Box::new(guard),
            direction,
            terminal,
        }
    }
}

impl std::fmt::Debug for EventSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EventSpec")
            .field("id", &self.id)
            .field("direction", &self.direction)
            .field("terminal", &self.terminal)
            .finish()
    }
}

/// Root refinement stops once |guard| falls below this.
pub const GUARD_TOL: f64 = 1e-10;
/// ... or once the time bracket is narrower than this.
pub const BRACKET_TOL: f64 = 1e-12;
pub const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub eta: f64,
    pub point: PhasePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub id: String,
    /// Position of the event in the list passed to the integrator.
    pub index: usize,
    pub eta: f64,
    pub point: PhasePoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Termination {
    Event,
    MaxTime,
    MaxSteps,
    StepUnderflow,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub events: Vec<EventRecord>,
    pub termination: Termination,
    pub steps: u64,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectory always holds its start")
    }

    pub fn first_event(&self, id: &str) -> Option<&EventRecord> {
        self.events.iter().find(|e| e.id == id)
    }

    /// The terminal event, if integration stopped on one.
    pub fn terminal_event(&self) -> Option<&EventRecord> {
        if self.termination == Termination::Event {
            self.events.last()
        } else {
            None
        }
    }
}

// Dormand-Prince 5(4). Fields are autonomous, so the nodes c_i are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[inline]
fn comb(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut o = *y;
    for (c, k) in terms {
        for i in 0..3 {
            o[i] += h * c * k[i];
        }
    }
    o
}

/// Continuous extension of one accepted step.
struct Dense {
    t0: f64,
    h: f64,
    r: [State; 5],
}

impl Dense {
    fn eval(&self, t: f64) -> State {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut o = [0.0; 3];
        for i in 0..3 {
            o[i] = self.r[0][i]
                + th * (self.r[1][i]
                    + th1 * (self.r[2][i] + th * (self.r[3][i] + th1 * self.r[4][i])));
        }
        o
    }
}

fn is_finite(s: &State) -> bool {
    s.iter().all(|v| v.is_finite())
}

fn err_norm(err: &State, y0: &State, y1: &State, c: &IntegrationControls) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        let sc = c.abs_tol + c.rel_tol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / 3.0).sqrt()
}

fn initial_step<F: VectorField>(f: &F, y: &State, f0: &State, c: &IntegrationControls) -> f64 {
    let norm = |v: &State| {
        let mut a = 0.0;
        for i in 0..3 {
            let sc = c.abs_tol + c.rel_tol * y[i].abs();
            a += (v[i] / sc).powi(2);
        }
        (a / 3.0).sqrt()
    };
    let d0 = norm(y);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = comb(y, h0, &[(1.0, f0)]);
    let f1 = f.eval(&y1);
    let diff = [f1[0] - f0[0], f1[1] - f0[1], f1[2] - f0[2]];
    let d2 = norm(&diff) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1).min(c.max_step).max(MIN_STEP * 10.0)
}

fn crosses(dir: Direction, g0: f64, g1: f64) -> bool {
    let rising = g0 < 0.0 && g1 >= 0.0;
    let falling = g0 > 0.0 && g1 <= 0.0;
    match dir {
        Direction::Rising => rising,
        Direction::Falling => falling,
        Direction::Either => rising || falling,
    }
}

/// Illinois iteration on the dense output for a bracketed sign change.
fn locate(guard: &Guard, dense: &Dense, mut a: f64, mut ga: f64, mut b: f64, mut gb: f64) -> (f64, State) {
    if gb == 0.0 {
        return (b, dense.eval(b));
    }
    let mut best = (b, dense.eval(b));
    for _ in 0..200 {
        if (b - a).abs() < BRACKET_TOL {
            break;
        }
        let mut c = b - gb * (b - a) / (gb - ga);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if !(c > lo && c < hi) {
            c = 0.5 * (a + b);
        }
        let yc = dense.eval(c);
        let gc = guard(&yc);
        best = (c, yc);
        if gc.abs() < GUARD_TOL {
            break;
        }
        if gc * gb < 0.0 {
            a = b;
            ga = gb;
        } else {
            ga *= 0.5;
        }
        b = c;
        gb = gc;
    }
    best
}

pub fn integrate<F: VectorField>(
    field: &F,
    start: PhasePoint,
    events: &[EventSpec],
    controls: &IntegrationControls,
) -> Result<Trajectory> {
    controls.validate()?;
    let mut y = start.to_array();
    if !is_finite(&y) {
        return Err(Error::Domain("non-finite start point".into()));
    }
    let mut t = 0.0;
    let mut k1 = field.eval(&y);
    let mut h = initial_step(field, &y, &k1, controls);
    let mut samples = vec![Sample { eta: 0.0, point: start }];
    let mut records = Vec::new();
    let mut gprev: Vec<f64> = events.iter().map(|e| (e.guard)(&y)).collect();
    // A guard that starts on its own zero set stays silent until it leaves it.
    let mut armed: Vec<bool> = gprev.iter().map(|g| g.abs() > GUARD_TOL).collect();
    let mut steps: u64 = 0;
    let termination;

    loop {
        if steps >= controls.max_steps {
            termination = Termination::MaxSteps;
            break;
        }
        let remaining = controls.max_time - t;
        if remaining <= 0.0 {
            termination = Termination::MaxTime;
            break;
        }
        let mut last = false;
        if h >= remaining {
            h = remaining;
            last = true;
        }
        let k2 = field.eval(&comb(&y, h, &[(A21, &k1)]));
        let k3 = field.eval(&comb(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = field.eval(&comb(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = field.eval(&comb(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = field.eval(&comb(
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ));
        let y1 = comb(
            &y,
            h,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = field.eval(&y1);
        let mut err = [0.0; 3];
        for i in 0..3 {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = err_norm(&err, &y, &y1, controls);
        if !(en <= 1.0) || !is_finite(&y1) || !is_finite(&k7) {
            let fac = if en.is_finite() {
                (0.9 * en.powf(-0.2)).max(0.2)
            } else {
                0.25
            };
            h *= fac.min(0.9);
            if h < MIN_STEP {
                termination = Termination::StepUnderflow;
                break;
            }
            continue;
        }
        steps += 1;
        let t1 = if last { controls.max_time } else { t + h };

        let mut hit: Vec<(f64, usize, State)> = Vec::new();
        if !events.is_empty() {
            let mut dense: Option<Dense> = None;
            for (i, ev) in events.iter().enumerate() {
                let g1 = (ev.guard)(&y1);
                if armed[i] {
                    if crosses(ev.direction, gprev[i], g1) {
                        let d = dense.get_or_insert_with(|| {
                            let ydiff = [y1[0] - y[0], y1[1] - y[1], y1[2] - y[2]];
                            let mut r = [[0.0; 3]; 5];
                            for j in 0..3 {
                                let bspl = h * k1[j] - ydiff[j];
                                r[0][j] = y[j];
                                r[1][j] = ydiff[j];
                                r[2][j] = bspl;
                                r[3][j] = ydiff[j] - h * k7[j] - bspl;
                                r[4][j] = h
                                    * (D1 * k1[j] + D3 * k3[j] + D4 * k4[j] + D5 * k5[j]
                                        + D6 * k6[j]
                                        + D7 * k7[j]);
                            }
                            Dense { t0: t, h: t1 - t, r }
                        });
                        let (te, ye) = locate(&ev.guard, d, t, gprev[i], t1, g1);
                        hit.push((te, i, ye));
                    }
                } else if g1.abs() > GUARD_TOL {
                    armed[i] = true;
                }
                gprev[i] = g1;
            }
        }
        hit.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut stop = None;
        for (te, i, ye) in hit {
            records.push(EventRecord {
                id: events[i].id.clone(),
                index: i,
                eta: te,
                point: PhasePoint::from_array(ye),
            });
            if events[i].terminal {
                stop = Some((te, ye));
                break;
            }
        }
        if let Some((te, ye)) = stop {
            if te > samples.last().map(|s| s.eta).unwrap_or(-1.0) {
                samples.push(Sample { eta: te, point: PhasePoint::from_array(ye) });
            }
            termination = Termination::Event;
            break;
        }

        t = t1;
        y = y1;
        k1 = k7;
        let keep = steps % controls.sample_stride as u64 == 0 || last;
        if keep {
            samples.push(Sample { eta: t, point: PhasePoint::from_array(y) });
        }
        let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * fac).min(controls.max_step);
        if last {
            termination = Termination::MaxTime;
            break;
        }
    }
    if samples.last().map(|s| s.eta) != Some(t) && termination != Termination::Event {
        samples.push(Sample { eta: t, point: PhasePoint::from_array(y) });
    }
    Ok(Trajectory {
        samples,
        events: records,
        termination,
        steps,
    })
}

/// Integrate until the first terminal event. All events must be terminal.
pub fn flow_until_fate<F: VectorField>(
    field: &F,
    start: PhasePoint,
    fate_events: &[EventSpec],
    controls: &IntegrationControls,
) -> Result<(Trajectory, Option<EventRecord>)> {
    if let Some(e) = fate_events.iter().find(|e| !e.terminal) {
        return Err(Error::Config(format!("fate event {} is not terminal", e.id)));
    }
    let traj = integrate(field, start, fate_events, controls)?;
    let hit = traj.terminal_event().cloned();
    Ok((traj, hit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay_accuracy() {
        let f = |s: &State| [-s[0], -2.0 * s[1], 0.5 * s[2]];
        let c = IntegrationControls { max_time: 3.0, ..Default::default() };
        let tr = integrate(&f, PhasePoint::new(1.0, 1.0, 1.0), &[], &c).unwrap();
        assert_eq!(tr.termination, Termination::MaxTime);
        let e = tr.last();
        assert_relative_eq!(e.eta, 3.0, max_relative = 1e-15);
        assert_relative_eq!(e.point.x, (-3.0f64).exp(), max_relative = 1e-9);
        assert_relative_eq!(e.point.y, (-6.0f64).exp(), max_relative = 1e-9);
        assert_relative_eq!(e.point.z, (1.5f64).exp(), max_relative = 1e-9);
        assert!(tr.samples.windows(2).all(|w| w[1].eta > w[0].eta));
    }

    #[test]
    fn event_location_on_circle() {
        // Rotation; x crosses zero falling at t = pi/2.
        let f = |s: &State| [-s[1], s[0], 0.0];
        let ev = vec![EventSpec::new("x0", Direction::Falling, true, |s: &State| s[0])];
        let (tr, hit) =
            flow_until_fate(&f, PhasePoint::new(1.0, 0.0, 0.0), &ev, &Default::default()).unwrap();
        let hit = hit.unwrap();
        assert_eq!(tr.termination, Termination::Event);
        assert!((hit.eta - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        assert!(hit.point.x.abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_controls() {
        let f = |s: &State| *s;
        let c = IntegrationControls { rel_tol: 1e-14, ..Default::default() };
        assert!(integrate(&f, PhasePoint::default(), &[], &c).is_err());
        let c = IntegrationControls { max_step: 0.0, ..Default::default() };
        assert!(integrate(&f, PhasePoint::default(), &[], &c).is_err());
        let ev = vec![EventSpec::new("a", Direction::Either, false, |s: &State| s[0])];
        assert!(flow_until_fate(&f, PhasePoint::default(), &ev, &Default::default()).is_err());
    }

    #[test]
    fn reversed_field_runs_backwards() {
        let f = |s: &State| [s[0], 0.0, 0.0];
        let c = IntegrationControls { max_time: 1.0, ..Default::default() };
        let tr = integrate(&Reversed(f), PhasePoint::new(1.0, 0.0, 0.0), &[], &c).unwrap();
        assert_relative_eq!(tr.last().point.x, (-1.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn blow_up_underflows() {
        let f = |s: &State| [s[0] * s[0], 0.0, 0.0];
        let c = IntegrationControls { max_time: 10.0, ..Default::default() };
        let tr = integrate(&f, PhasePoint::new(1.0, 0.0, 0.0), &[], &c).unwrap();
        assert_eq!(tr.termination, Termination::StepUnderflow);
        assert!(tr.last().eta < 1.0);
    }
}
