//! Order-preserving couplings of two replicas.
//!
//! Both replicas ring at the same clock times. When the ringing vertex
//! has the same spin in both, they share the coin `U`; when it disagrees
//! the upper replica uses `1 − U`. With attractive rates this keeps
//! `σ ≤ σ′` forever, and the runs here check it after every event.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harris::engine::{ClockSurgery, Dynamics, EventRecord, Observer, SpinConfiguration};
use crate::harris::rng::{HarrisSchedule, Stream};
use crate::plane_graph::Window;

/// The pair of events after which `σ ≤ σ′` failed.
#[derive(Clone, Debug, Serialize)]
pub struct CouplingViolation {
    pub vertex: u32,
    pub time: f64,
    pub lower: Option<EventRecord>,
    pub upper: Option<EventRecord>,
    pub lower_spin: i8,
    pub upper_spin: i8,
}

impl fmt::Display for CouplingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "at t = {} vertex {} has lower spin {} above upper spin {} (lower event {:?}, upper event {:?})",
            self.time, self.vertex, self.lower_spin, self.upper_spin, self.lower, self.upper
        )
    }
}

#[derive(Clone, Debug)]
pub struct CoupledOutcome {
    pub lower: SpinConfiguration,
    pub upper: SpinConfiguration,
    /// Rings processed by both replicas together.
    pub joint_events: u64,
    /// Order assertions performed (one per processed ring while coupled).
    pub order_checks: u64,
}

struct Lockstep {
    joint: u64,
    checks: u64,
}

/// Drives two replicas in global time order. Rings at the same time and
/// vertex are processed jointly; when `couple` holds the upper coin follows
/// the agree/disagree rule and the order is asserted after every ring.
fn lockstep(
    a: &mut Dynamics<'_>,
    b: &mut Dynamics<'_>,
    horizon: f64,
    couple: bool,
    obs_a: &mut [&mut dyn Observer],
    obs_b: &mut [&mut dyn Observer],
) -> Result<Lockstep> {
    let mut out = Lockstep { joint: 0, checks: 0 };
    loop {
        let (ta, tb) = (a.peek_time(), b.peek_time());
        if ta.min(tb) > horizon {
            break;
        }
        let ra = a.peek();
        let rb = b.peek();
        let (ea, eb, v) = if ra.time == rb.time && ra.vertex == rb.vertex {
            let v = ra.vertex as usize;
            let ub = if !couple || a.spins()[v] == b.spins()[v] { ra.uniform } else { 1.0 - ra.uniform };
            // Without the coupling rule each replica keeps its own coin.
            let ub = if couple { ub } else { rb.uniform };
            let ea = a.step_with_uniform(ra.uniform, obs_a);
            let eb = b.step_with_uniform(ub, obs_b);
            out.joint += 1;
            (Some(ea), Some(eb), v)
        } else if (ra.time, ra.vertex) < (rb.time, rb.vertex) {
            (Some(a.step(obs_a)), None, ra.vertex as usize)
        } else {
            (None, Some(b.step(obs_b)), rb.vertex as usize)
        };
        if couple {
            out.checks += 1;
            if a.spins()[v] > b.spins()[v] {
                return Err(Error::CouplingViolation(Box::new(CouplingViolation {
                    vertex: v as u32,
                    time: a.time().max(b.time()),
                    lower: ea,
                    upper: eb,
                    lower_spin: a.spins()[v],
                    upper_spin: b.spins()[v],
                })));
            }
        }
    }
    a.advance_to(horizon, obs_a);
    b.advance_to(horizon, obs_b);
    Ok(out)
}

/// Runs the monotone coupling from `lower ≤ upper` up to `horizon`.
pub fn run_coupled(
    w: &Window,
    lower: &SpinConfiguration,
    upper: &SpinConfiguration,
    schedule: HarrisSchedule,
    horizon: f64,
) -> Result<CoupledOutcome> {
    run_coupled_observed(w, lower, upper, schedule, horizon, &mut [], &mut [])
}

pub fn run_coupled_observed(
    w: &Window,
    lower: &SpinConfiguration,
    upper: &SpinConfiguration,
    schedule: HarrisSchedule,
    horizon: f64,
    obs_lower: &mut [&mut dyn Observer],
    obs_upper: &mut [&mut dyn Observer],
) -> Result<CoupledOutcome> {
    if !lower.le(upper) {
        return Err(Error::InvalidParameter("coupled runs need σ₀ ≤ σ₀′ pointwise".into()));
    }
    let mut a = Dynamics::new(w, lower, schedule)?;
    let mut b = Dynamics::new(w, upper, schedule)?;
    let steps = lockstep(&mut a, &mut b, horizon, true, obs_lower, obs_upper)?;
    Ok(CoupledOutcome {
        lower: a.configuration(),
        upper: b.configuration(),
        joint_events: steps.joint,
        order_checks: steps.checks,
    })
}

/// When the agree/disagree coin rule is applied in the resampling
/// construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingPolicy {
    /// Only on the joint event of the construction (fixation of the
    /// original by `t̄`, resampled spin `+1`, silent replacement clock);
    /// otherwise both replicas keep their own coins.
    OnJointEvent,
    /// Whenever the companion starts above the original and its replacement
    /// clock is silent, which already suffices for the order.
    WheneverOrdered,
}

#[derive(Clone, Copy, Debug)]
pub struct ResampleParams {
    pub p: f64,
    pub t_bar: f64,
    pub horizon: f64,
    pub policy: CouplingPolicy,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResampleReport {
    pub vertex: u32,
    pub t_bar: f64,
    pub horizon: f64,
    /// The original spin equals `+1` throughout `[t̄, horizon]`; the
    /// finite-horizon stand-in for "fixed at `+1` before `t̄`".
    pub original_fixed_by_t_bar: bool,
    pub resampled_plus: bool,
    pub replacement_silent: bool,
    pub joint_event: bool,
    pub coupled: bool,
    pub order_checks: u64,
    /// The companion spin at the vertex was `+1` on all of `[0, horizon]`.
    pub companion_plus_from_zero: bool,
    pub original_final_plus_fraction: f64,
    pub companion_final_plus_fraction: f64,
}

/// Tracks one vertex: its spin at a given time and whether it flipped
/// afterwards.
struct VertexWatch {
    vertex: u32,
    t_mark: f64,
    initial: i8,
    spin_at_mark: Option<i8>,
    current: i8,
    flips_total: u64,
    flips_after_mark: u64,
}

impl VertexWatch {
    fn new(vertex: u32, t_mark: f64, initial: i8) -> Self {
        Self { vertex, t_mark, initial, spin_at_mark: None, current: initial, flips_total: 0, flips_after_mark: 0 }
    }

    fn spin_at_mark(&self) -> i8 {
        self.spin_at_mark.unwrap_or(self.current)
    }
}

impl Observer for VertexWatch {
    fn on_event(&mut self, e: &EventRecord, spins: &[i8]) {
        if e.time > self.t_mark && self.spin_at_mark.is_none() {
            self.spin_at_mark = Some(self.current);
        }
        if e.vertex == self.vertex && e.flipped {
            self.flips_total += 1;
            if e.time > self.t_mark {
                self.flips_after_mark += 1;
            }
        }
        self.current = spins[self.vertex as usize];
    }
}

/// Builds the companion process of the fixation-from-time-zero
/// construction and runs it next to the original.
///
/// The companion equals the original except that the spin at `vertex` is
/// redrawn (`+1` with probability `p`) and the vertex clock on `[0, t̄]` is
/// replaced by an independent one; after `t̄` it rings with the original
/// clock and uses the original coins with the same ring index.
pub fn run_fixation_resample(
    w: &Window,
    initial: &SpinConfiguration,
    schedule: HarrisSchedule,
    vertex: usize,
    params: ResampleParams,
) -> Result<ResampleReport> {
    let ResampleParams { p, t_bar, horizon, policy } = params;
    if vertex >= w.len() {
        return Err(Error::UnknownVertex(vertex));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("density p must lie in [0, 1], got {p}")));
    }
    if !(t_bar >= 0.0 && t_bar < horizon) {
        return Err(Error::InvalidParameter(format!("need 0 ≤ t̄ < horizon, got t̄ = {t_bar}, horizon = {horizon}")));
    }
    let v32 = vertex as u32;

    // Pass 1: the original alone decides the fixation stand-in.
    let mut watch = VertexWatch::new(v32, t_bar, initial.spins[vertex]);
    let mut original = Dynamics::new(w, initial, schedule)?;
    original.advance_to(horizon, &mut [&mut watch]);
    let original_fixed_by_t_bar = watch.spin_at_mark() == 1 && watch.flips_after_mark == 0;

    let resampled_plus = schedule.uniform(Stream::Resample, v32, 0) < p;
    let mut companion_init = initial.clone();
    companion_init.spins[vertex] = if resampled_plus { 1 } else { -1 };

    let mut a = Dynamics::new(w, initial, schedule)?;
    let mut b = Dynamics::with_surgery(w, &companion_init, schedule, Some(ClockSurgery { vertex: v32, t_bar }))?;
    let replacement_silent = b.surgery_clock_silent().unwrap_or(false);
    let joint_event = original_fixed_by_t_bar && resampled_plus && replacement_silent;
    let coupled = match policy {
        CouplingPolicy::OnJointEvent => joint_event,
        CouplingPolicy::WheneverOrdered => resampled_plus && replacement_silent,
    };

    // Pass 2: original and companion side by side.
    let mut comp_watch = VertexWatch::new(v32, t_bar, companion_init.spins[vertex]);
    let steps = lockstep(&mut a, &mut b, horizon, coupled, &mut [], &mut [&mut comp_watch])?;
    if a.spins() != original.spins() {
        return Err(Error::Assertion("replaying the original process changed its trajectory".into()));
    }
    Ok(ResampleReport {
        vertex: v32,
        t_bar,
        horizon,
        original_fixed_by_t_bar,
        resampled_plus,
        replacement_silent,
        joint_event,
        coupled,
        order_checks: steps.checks,
        companion_plus_from_zero: comp_watch.initial == 1 && comp_watch.flips_total == 0,
        original_final_plus_fraction: a.configuration().plus_fraction(),
        companion_final_plus_fraction: b.configuration().plus_fraction(),
    })
}
