use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harris::rng::{HarrisSchedule, Stream};
use crate::plane_graph::Window;

/// Zero-temperature flip rates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Rate {
    Zero,
    Half,
    One,
}

impl Rate {
    /// 0 against a strict majority, 1/2 on a tie, 1 with a strict majority.
    #[inline]
    pub fn from_delta_h(delta_h: i32) -> Rate {
        match delta_h.cmp(&0) {
            Ordering::Greater => Rate::Zero,
            Ordering::Equal => Rate::Half,
            Ordering::Less => Rate::One,
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        match self {
            Rate::Zero => 0.0,
            Rate::Half => 0.5,
            Rate::One => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Rate::Zero => "0",
            Rate::Half => "0.5",
            Rate::One => "1",
        }
    }
}

/// `2 · σ(v) · Σ_{u ~ v} σ(u)`, with phantom neighbours of a fixed
/// boundary included.
#[inline]
pub fn delta_h(w: &Window, spins: &[i8], v: usize) -> i32 {
    let mut field = w.boundary_field(v);
    for &u in w.neighbors(v) {
        field += spins[u as usize] as i32;
    }
    2 * spins[v] as i32 * field
}

#[inline]
pub fn flip_rate(w: &Window, spins: &[i8], v: usize) -> Rate {
    Rate::from_delta_h(delta_h(w, spins, v))
}

/// A ±1 spin per window vertex at a given time.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinConfiguration {
    pub spins: Vec<i8>,
    pub time: f64,
}

impl SpinConfiguration {
    pub fn constant(n: usize, spin: i8) -> Self {
        assert!(spin == 1 || spin == -1);
        Self { spins: vec![spin; n], time: 0.0 }
    }

    pub fn from_spins(spins: Vec<i8>) -> Result<Self> {
        if let Some(v) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!("spin {} at vertex {v} is not ±1", spins[v])));
        }
        Ok(Self { spins, time: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self { spins: self.spins.iter().map(|s| -s).collect(), time: self.time }
    }

    /// Pointwise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.spins.iter().zip(&other.spins).all(|(a, b)| a <= b)
    }

    /// Pointwise maximum.
    pub fn max(&self, other: &Self) -> Self {
        Self { spins: self.spins.iter().zip(&other.spins).map(|(a, b)| *a.max(b)).collect(), time: self.time }
    }

    pub fn plus_fraction(&self) -> f64 {
        self.spins.iter().filter(|&&s| s == 1).count() as f64 / self.len().max(1) as f64
    }
}

/// i.i.d. initial spins, `+1` with probability `p`, from the `Init` stream.
pub fn sample_initial(w: &Window, p: f64, schedule: &HarrisSchedule) -> Result<SpinConfiguration> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("density p must lie in [0, 1], got {p}")));
    }
    let spins = (0..w.len())
        .map(|v| if schedule.uniform(Stream::Init, v as u32, 0) < p { 1 } else { -1 })
        .collect();
    Ok(SpinConfiguration { spins, time: 0.0 })
}

/// One clock ring and what it did.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub vertex: u32,
    /// Index of the ring in the vertex's clock (replacement clocks count
    /// separately, see `surgery`).
    pub ring: u64,
    pub uniform: f64,
    pub rate: Rate,
    pub flipped: bool,
    pub delta_h: i32,
    /// The ring came from a replacement clock.
    pub surgery: bool,
}

impl EventRecord {
    pub const CSV_HEADER: &'static str = "time,vertex,uniform,rate,delta_H,flipped";

    /// One CSV line. Floats use the shortest representation that parses
    /// back to the same value, so logs are bit-exact.
    pub fn csv_line(&self) -> String {
        format!(
            "{:?},{},{:?},{},{},{}",
            self.time,
            self.vertex,
            self.uniform,
            self.rate.label(),
            self.delta_h,
            self.flipped as u8
        )
    }
}

/// Receives every event of a run, after the spin update.
pub trait Observer {
    fn on_start(&mut self, _spins: &[i8], _time: f64) {}
    fn on_event(&mut self, event: &EventRecord, spins: &[i8]);
}

/// Collects all events.
#[derive(Default, Debug, Clone)]
pub struct EventLog {
    pub events: Vec<EventRecord>,
}

impl Observer for EventLog {
    fn on_event(&mut self, event: &EventRecord, _spins: &[i8]) {
        self.events.push(*event);
    }
}

impl EventLog {
    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.events.len() + 1));
        s.push_str(EventRecord::CSV_HEADER);
        s.push('\n');
        for e in &self.events {
            s.push_str(&e.csv_line());
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Copy, Debug)]
struct Pending {
    time: f64,
    vertex: u32,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    // Reversed: BinaryHeap is a max-heap and we want the earliest ring,
    // equal times broken by the smaller vertex id.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.vertex.cmp(&self.vertex))
    }
}

/// Replaces one vertex's clock on `[0, t̄]` by an independent one; after
/// `t̄` the vertex rings at the original clock's times.
#[derive(Clone, Copy, Debug)]
pub struct ClockSurgery {
    pub vertex: u32,
    pub t_bar: f64,
}

#[derive(Clone, Copy, Debug)]
struct SurgeryState {
    spec: ClockSurgery,
    /// Next replacement ring index while still before `t̄`.
    replacement_index: u64,
    in_replacement: bool,
    silent: bool,
    /// First original ring after `t̄`: (index, time).
    resume: (u64, f64),
}

/// Event-driven simulation of the dynamics on a window.
///
/// Every vertex carries a rate-1 Poisson clock; at its `n`-th ring the
/// vertex flips iff its coin `U_{v,n}` is below the current flip rate.
pub struct Dynamics<'w> {
    window: &'w Window,
    schedule: HarrisSchedule,
    spins: Vec<i8>,
    time: f64,
    queue: BinaryHeap<Pending>,
    ring_index: Vec<u64>,
    surgery: Option<SurgeryState>,
    events: u64,
}

/// The next ring of a vertex, before its coin is used.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ring {
    pub time: f64,
    pub vertex: u32,
    pub index: u64,
    pub uniform: f64,
    pub surgery: bool,
}

impl<'w> Dynamics<'w> {
    pub fn new(window: &'w Window, initial: &SpinConfiguration, schedule: HarrisSchedule) -> Result<Self> {
        Self::with_surgery(window, initial, schedule, None)
    }

    pub fn with_surgery(
        window: &'w Window,
        initial: &SpinConfiguration,
        schedule: HarrisSchedule,
        surgery: Option<ClockSurgery>,
    ) -> Result<Self> {
        if initial.len() != window.len() {
            return Err(Error::InvalidParameter(format!(
                "configuration has {} spins for a window of {} vertices",
                initial.len(),
                window.len()
            )));
        }
        let n = window.len();
        let mut queue = BinaryHeap::with_capacity(n);
        for v in 0..n as u32 {
            queue.push(Pending { time: initial.time + schedule.exponential(Stream::Clock, v, 0), vertex: v });
        }
        let surgery = match surgery {
            None => None,
            Some(spec) => {
                let v = spec.vertex;
                if v as usize >= n {
                    return Err(Error::UnknownVertex(v as usize));
                }
                if !(spec.t_bar >= 0.0) {
                    return Err(Error::InvalidParameter(format!("t̄ must be ≥ 0, got {}", spec.t_bar)));
                }
                // Walk the original clock past t̄.
                let mut idx = 0;
                let mut t = initial.time;
                loop {
                    let next = t + schedule.exponential(Stream::Clock, v, idx);
                    if next > spec.t_bar {
                        t = next;
                        break;
                    }
                    t = next;
                    idx += 1;
                }
                queue.retain(|p| p.vertex != v);
                let first = initial.time + schedule.exponential(Stream::SurgeryClock, v, 0);
                let in_replacement = first <= spec.t_bar;
                queue.push(Pending { time: if in_replacement { first } else { t }, vertex: v });
                Some(SurgeryState { spec, replacement_index: 0, in_replacement, silent: !in_replacement, resume: (idx, t) })
            }
        };
        let mut ring_index = vec![0; n];
        if let Some(s) = &surgery {
            if !s.in_replacement {
                ring_index[s.spec.vertex as usize] = s.resume.0;
            }
        }
        Ok(Self {
            window,
            schedule,
            spins: initial.spins.clone(),
            time: initial.time,
            queue,
            ring_index,
            surgery,
            events: 0,
        })
    }

    pub fn window(&self) -> &'w Window {
        self.window
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn configuration(&self) -> SpinConfiguration {
        SpinConfiguration { spins: self.spins.clone(), time: self.time }
    }

    /// The next ring without consuming it.
    pub fn peek(&self) -> Ring {
        let p = *self.queue.peek().expect("every vertex always has a pending ring");
        let v = p.vertex;
        let (index, stream, surgery) = match &self.surgery {
            Some(s) if s.spec.vertex == v && s.in_replacement => (s.replacement_index, Stream::SurgeryCoin, true),
            _ => (self.ring_index[v as usize], Stream::Coin, false),
        };
        Ring { time: p.time, vertex: v, index, uniform: self.schedule.uniform(stream, v, index), surgery }
    }

    /// Processes the next ring using its own coin.
    pub fn step(&mut self, observers: &mut [&mut dyn Observer]) -> EventRecord {
        let ring = self.peek();
        self.apply(ring, ring.uniform, observers)
    }

    /// Processes the next ring with an externally supplied coin (used by
    /// couplings).
    pub fn step_with_uniform(&mut self, uniform: f64, observers: &mut [&mut dyn Observer]) -> EventRecord {
        let ring = self.peek();
        self.apply(ring, uniform, observers)
    }

    fn apply(&mut self, ring: Ring, uniform: f64, observers: &mut [&mut dyn Observer]) -> EventRecord {
        self.queue.pop();
        let v = ring.vertex as usize;
        assert!(ring.time >= self.time, "event queue went back in time: {} < {}", ring.time, self.time);
        self.time = ring.time;
        let dh = delta_h(self.window, &self.spins, v);
        let rate = Rate::from_delta_h(dh);
        let flipped = uniform < rate.value();
        if flipped {
            self.spins[v] = -self.spins[v];
        }
        self.schedule_next(ring);
        self.events += 1;
        let ev = EventRecord {
            time: ring.time,
            vertex: ring.vertex,
            ring: ring.index,
            uniform,
            rate,
            flipped,
            delta_h: dh,
            surgery: ring.surgery,
        };
        for o in observers.iter_mut() {
            o.on_event(&ev, &self.spins);
        }
        ev
    }

    fn schedule_next(&mut self, ring: Ring) {
        let v = ring.vertex;
        if let Some(s) = self.surgery.as_mut() {
            if s.spec.vertex == v && s.in_replacement {
                s.replacement_index += 1;
                let next = ring.time + self.schedule.exponential(Stream::SurgeryClock, v, s.replacement_index);
                if next <= s.spec.t_bar {
                    self.queue.push(Pending { time: next, vertex: v });
                } else {
                    s.in_replacement = false;
                    self.ring_index[v as usize] = s.resume.0;
                    self.queue.push(Pending { time: s.resume.1, vertex: v });
                }
                return;
            }
        }
        self.ring_index[v as usize] += 1;
        let next = ring.time + self.schedule.exponential(Stream::Clock, v, self.ring_index[v as usize]);
        self.queue.push(Pending { time: next, vertex: v });
    }

    /// Processes every ring at times `≤ t` and moves the clock to `t`.
    pub fn advance_to(&mut self, t: f64, observers: &mut [&mut dyn Observer]) {
        while self.peek_time() <= t {
            self.step(observers);
        }
        if t > self.time {
            self.time = t;
        }
    }

    #[inline]
    pub fn peek_time(&self) -> f64 {
        self.queue.peek().map(|p| p.time).unwrap_or(f64::INFINITY)
    }

    /// Whether the replacement clock stays silent on `[0, t̄]`; `None`
    /// without surgery.
    pub fn surgery_clock_silent(&self) -> Option<bool> {
        self.surgery.map(|s| s.silent)
    }
}

/// Runs from `initial` to `horizon`, reporting every event to the observers.
pub fn run(
    w: &Window,
    initial: &SpinConfiguration,
    schedule: HarrisSchedule,
    horizon: f64,
    observers: &mut [&mut dyn Observer],
) -> Result<SpinConfiguration> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    let mut d = Dynamics::new(w, initial, schedule)?;
    for o in observers.iter_mut() {
        o.on_start(&initial.spins, initial.time);
    }
    d.advance_to(horizon, observers);
    Ok(d.configuration())
}

/// [`run`] that also returns the full event log.
pub fn run_logged(
    w: &Window,
    initial: &SpinConfiguration,
    schedule: HarrisSchedule,
    horizon: f64,
) -> Result<(SpinConfiguration, Vec<EventRecord>)> {
    let mut log = EventLog::default();
    let fin = run(w, initial, schedule, horizon, &mut [&mut log])?;
    Ok((fin, log.events))
}
