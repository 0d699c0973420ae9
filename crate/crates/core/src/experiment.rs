//! Configuration-driven batch runs and SVG snapshots.
//!
//! An [`ExperimentConfig`] is a JSON document. [`ExperimentConfig::normalized`]
//! fills every default explicitly; the manifest stores that form, so loading
//! it back gives the exact configuration that produced the outputs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, CrossingGeometry};
use crate::harris::{
    run_coupled, run_fixation_resample, sample_initial, CouplingPolicy, Dynamics, EventLog, HarrisSchedule, Observer,
    ResampleParams, ResampleReport, Stream,
};
use crate::observables::{
    self, cluster_size_at, detect_l_cross, fixation_fractions, flipped_fraction, FixationTracker, FlipCounter,
    FullBallMonitor,
};
use crate::plane_graph::io::write_atomic;
use crate::plane_graph::{build_lattice, read_graph, BoundarySpec, LatticeKind, Window};
use crate::shrink;

/// Which graph to run on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    /// Lattice builder name, e.g. `square`.
    #[serde(default)]
    pub builder: Option<LatticeKind>,
    #[serde(default)]
    pub extent: Option<usize>,
    /// Graph file in the JSON graph format (instead of a builder).
    #[serde(default)]
    pub file: Option<PathBuf>,
    pub boundary: BoundarySpec,
}

impl GraphSpec {
    pub fn build(&self) -> Result<Window> {
        match (&self.builder, &self.file) {
            (Some(kind), None) => {
                let extent = self
                    .extent
                    .ok_or_else(|| Error::InvalidParameter("a builder needs an extent".into()))?;
                build_lattice(*kind, extent, self.boundary)
            }
            (None, Some(path)) => {
                if self.extent.is_some() {
                    return Err(Error::InvalidParameter("extent applies to builders only".into()));
                }
                Window::from_graph(read_graph(path)?, self.boundary)
            }
            _ => Err(Error::InvalidParameter("give exactly one of `builder` and `file`".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { base: u64, count: u64 },
}

impl Seeds {
    pub fn expand(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { base, count } => (0..*count).map(|i| base + i).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    /// `|C_O(σ_t)|` at each sample time.
    ClusterOrigin,
    /// Fraction of `+1` spins at each sample time.
    PlusFraction,
    /// Fraction of interior vertices flipping in `flip_interval`.
    Flips,
    /// `ρ̂_i^±(t)` at each sample time.
    Fixation,
    /// `L`-crosses at each sample time (needs `geometry`).
    Crossings,
    /// `D(L; t₁, t₂)` over `d_window` (needs `geometry`).
    FullBall,
}

impl ObservableKind {
    pub fn name(self) -> &'static str {
        match self {
            ObservableKind::ClusterOrigin => "cluster_origin",
            ObservableKind::PlusFraction => "plus_fraction",
            ObservableKind::Flips => "flips",
            ObservableKind::Fixation => "fixation",
            ObservableKind::Crossings => "crossings",
            ObservableKind::FullBall => "full_ball",
        }
    }
}

/// How each replica is run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Protocol {
    /// One process per seed.
    #[default]
    Single,
    /// Monotone coupling of `σ₀` (density `p`) with `σ₀ ∨ η`, where `η`
    /// is an independent product measure of density `upper_p`.
    Coupled { upper_p: f64 },
    /// The resampling construction at the origin vertex.
    FixationResample { t_bar: f64, policy: CouplingPolicy },
}

/// Vertices set to `+1` after the initial spins are drawn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ForcePlus {
    Vertices(Vec<usize>),
    /// The first frozen set found by the exhaustive search up to this size.
    FrozenSet { frozen_set_max_size: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryParams {
    pub a: u32,
    #[serde(rename = "L")]
    pub l: u32,
    #[serde(default)]
    pub q: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub graph: GraphSpec,
    pub p: f64,
    pub seeds: Seeds,
    pub horizon: f64,
    #[serde(default)]
    pub sample_times: Vec<f64>,
    pub observables: Vec<ObservableKind>,
    /// `[T₁, T₂]` for [`ObservableKind::Flips`]; defaults to
    /// `[horizon/2, horizon]`.
    #[serde(default)]
    pub flip_interval: Option<[f64; 2]>,
    /// `[t₁, t₂]` for [`ObservableKind::FullBall`]; defaults to
    /// `[0, horizon]`.
    #[serde(default)]
    pub d_window: Option<[f64; 2]>,
    #[serde(default)]
    pub geometry: Option<GeometryParams>,
    /// Hop distance from the rim below which vertices are left out of
    /// statistics; defaults to 0 on a torus and `⌈2√horizon⌉` otherwise.
    #[serde(default)]
    pub interior_margin: Option<f64>,
    #[serde(default)]
    pub protocol: Protocol,
    #[serde(default)]
    pub force_plus: Option<ForcePlus>,
    /// Write every event of every replica to `events/seed_<seed>.csv`.
    #[serde(default)]
    pub event_logs: bool,
    /// Where outputs go; the CLI `--out` flag takes precedence.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidParameter(format!("p must lie in [0, 1], got {}", self.p)));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {}", self.horizon)));
        }
        let seeds = self.seeds.expand();
        if seeds.is_empty() {
            return Err(Error::InvalidParameter("no seeds".into()));
        }
        if seeds.iter().collect::<BTreeSet<_>>().len() != seeds.len() {
            return Err(Error::InvalidParameter("seeds must be distinct".into()));
        }
        if self.sample_times.windows(2).any(|p| p[0] >= p[1])
            || self.sample_times.iter().any(|&t| !(t >= 0.0 && t <= self.horizon))
        {
            return Err(Error::InvalidParameter("sample times must increase strictly within [0, horizon]".into()));
        }
        let obs: BTreeSet<_> = self.observables.iter().collect();
        if obs.len() != self.observables.len() {
            return Err(Error::InvalidParameter("observables listed twice".into()));
        }
        if (obs.contains(&ObservableKind::Crossings) || obs.contains(&ObservableKind::FullBall))
            && self.geometry.is_none()
        {
            return Err(Error::InvalidParameter("crossings and full_ball need `geometry`".into()));
        }
        if let Some([a, b]) = self.flip_interval {
            if !(0.0 <= a && a < b && b <= self.horizon) {
                return Err(Error::InvalidParameter(format!("flip_interval [{a}, {b}] must lie in [0, horizon]")));
            }
        }
        if let Some([a, b]) = self.d_window {
            if !(0.0 <= a && a + 1.0 < b && b <= self.horizon) {
                return Err(Error::InvalidParameter(format!(
                    "d_window [{a}, {b}] needs t1 + 1 < t2 ≤ horizon"
                )));
            }
        }
        if let Some(m) = self.interior_margin {
            if !(m >= 0.0) {
                return Err(Error::InvalidParameter("interior_margin must be ≥ 0".into()));
            }
        }
        match &self.protocol {
            Protocol::Single => {}
            Protocol::Coupled { upper_p } => {
                if !(0.0..=1.0).contains(upper_p) {
                    return Err(Error::InvalidParameter(format!("upper_p must lie in [0, 1], got {upper_p}")));
                }
            }
            Protocol::FixationResample { t_bar, .. } => {
                if !(*t_bar >= 0.0 && *t_bar < self.horizon) {
                    return Err(Error::InvalidParameter(format!("need 0 ≤ t_bar < horizon, got {t_bar}")));
                }
            }
        }
        if self.protocol != Protocol::Single && (!self.observables.is_empty() || self.event_logs) {
            return Err(Error::InvalidParameter("observables and event logs need the single protocol".into()));
        }
        if let Some(g) = &self.geometry {
            if g.q.is_some_and(|q| q < geometry::MIN_Q) {
                return Err(Error::InvalidParameter(format!("q must be ≥ {}", geometry::MIN_Q)));
            }
        }
        Ok(())
    }

    /// The same configuration with every default written out.
    pub fn normalized(&self) -> Result<Self> {
        self.validate()?;
        let mut c = self.clone();
        c.flip_interval.get_or_insert([self.horizon / 2.0, self.horizon]);
        c.d_window.get_or_insert([0.0, self.horizon]);
        if let Some(g) = c.geometry.as_mut() {
            g.q.get_or_insert(geometry::MIN_Q);
        }
        if c.interior_margin.is_none() {
            let periodic = c.graph.boundary == BoundarySpec::Periodic;
            c.interior_margin = Some(if periodic { 0.0 } else { (2.0 * self.horizon.sqrt()).ceil() });
        }
        c.output_dir.get_or_insert_with(|| PathBuf::from("out").join(&self.name));
        c.validate()?;
        Ok(c)
    }

    fn wants(&self, k: ObservableKind) -> bool {
        self.observables.contains(&k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub code_version: String,
    pub config: ExperimentConfig,
    pub window: String,
    pub vertex_count: usize,
    pub interior_vertex_count: usize,
    pub class_count: usize,
    pub files: Vec<String>,
    #[serde(default)]
    pub p_cross: Option<f64>,
    #[serde(default)]
    pub u_size: Option<usize>,
    #[serde(default)]
    pub notes: Vec<String>,
    pub summary: Summary,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub replicas: usize,
    pub events: u64,
    #[serde(default)]
    pub crossing_frequency: Option<f64>,
    #[serde(default)]
    pub d_event_frequency: Option<f64>,
    #[serde(default)]
    pub mean_flipped_fraction: Option<f64>,
    /// Crosses on which `Conv(C̃ ∩ W_L)` failed to cover `V ∩ B(O, L/3)`.
    #[serde(default)]
    pub annulus_hull_misses: Option<usize>,
    /// Total flips of the forced `+1` vertices over all replicas.
    #[serde(default)]
    pub forced_flips: Option<u64>,
    #[serde(default)]
    pub coupled_order_checks: Option<u64>,
    #[serde(default)]
    pub resample: Option<ResampleSummary>,
}

/// Frequencies of the resampling construction over replicas.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResampleSummary {
    pub runs: usize,
    /// Fraction of runs whose original spin was `+1` on `[t̄, horizon]`.
    pub fixed_fraction: f64,
    pub joint_events: usize,
    /// `fixed_fraction · p · e^{−t̄} · runs`.
    pub expected_joint_events: f64,
    /// Binomial standard deviation of the joint count under that rate.
    pub sigma: f64,
    /// Joint events after which the companion was not `+1` throughout.
    pub companion_failures: usize,
    pub order_checks: u64,
}

/// What one replica produced.
#[derive(Clone, Debug)]
pub struct ReplicaOutput {
    pub seed: u64,
    pub events: u64,
    pub series: Vec<(f64, &'static str, f64)>,
    pub crossings: Vec<(f64, bool, Option<u32>, usize, Option<bool>)>,
    pub tracker: Option<FixationTracker>,
    pub flipped_fraction: Option<f64>,
    pub d_event: Option<bool>,
    pub forced_flips: Option<u64>,
    pub events_csv: Option<String>,
    /// `(joint rings, order checks, lower +1 fraction, upper +1 fraction)`.
    pub coupled: Option<(u64, u64, f64, f64)>,
    pub resample: Option<ResampleReport>,
}

/// Everything written to disk, kept in memory too.
#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub manifest: Manifest,
    pub dir: PathBuf,
    pub replicas: Vec<ReplicaOutput>,
    pub fixation: Vec<observables::FixationRow>,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    w: &'a Window,
    interior: Vec<usize>,
    geometry: Option<CrossingGeometry>,
    origin: usize,
    forced: Vec<usize>,
}

fn run_replica(ctx: &Context<'_>, seed: u64) -> Result<ReplicaOutput> {
    let cfg = ctx.cfg;
    let w = ctx.w;
    let schedule = HarrisSchedule::new(seed);
    let mut init = sample_initial(w, cfg.p, &schedule)?;
    for &v in &ctx.forced {
        init.spins[v] = 1;
    }
    let blank = ReplicaOutput {
        seed,
        events: 0,
        series: Vec::new(),
        crossings: Vec::new(),
        tracker: None,
        flipped_fraction: None,
        d_event: None,
        forced_flips: None,
        events_csv: None,
        coupled: None,
        resample: None,
    };
    match &cfg.protocol {
        Protocol::Single => {}
        Protocol::Coupled { upper_p } => {
            let mut upper = init.clone();
            for v in 0..w.len() {
                if schedule.uniform(Stream::Init, v as u32, 1) < *upper_p {
                    upper.spins[v] = 1;
                }
            }
            let out = run_coupled(w, &init, &upper, schedule, cfg.horizon)?;
            let row = (out.joint_events, out.order_checks, out.lower.plus_fraction(), out.upper.plus_fraction());
            return Ok(ReplicaOutput { coupled: Some(row), ..blank });
        }
        Protocol::FixationResample { t_bar, policy } => {
            let params = ResampleParams { p: cfg.p, t_bar: *t_bar, horizon: cfg.horizon, policy: *policy };
            let r = run_fixation_resample(w, &init, schedule, ctx.origin, params)?;
            return Ok(ReplicaOutput { resample: Some(r), ..blank });
        }
    }
    let mut d = Dynamics::new(w, &init, schedule)?;

    let [f1, f2] = cfg.flip_interval.expect("normalized");
    let mut flips = cfg.wants(ObservableKind::Flips).then(|| FlipCounter::new(w.len(), &[f1, f2])).transpose()?;
    let mut tracker = cfg.wants(ObservableKind::Fixation).then(|| FixationTracker::new(w.len()));
    let mut ball = match (&ctx.geometry, cfg.wants(ObservableKind::FullBall)) {
        (Some(g), true) => Some(FullBallMonitor::new(w.len(), &g.inner_ball)?),
        _ => None,
    };
    let mut observers: Vec<&mut dyn Observer> = Vec::new();
    if let Some(f) = flips.as_mut() {
        observers.push(f);
    }
    if let Some(t) = tracker.as_mut() {
        observers.push(t);
    }
    if let Some(b) = ball.as_mut() {
        observers.push(b);
    }
    let mut forced_counter = (!ctx.forced.is_empty()).then(|| FlipCounter::new(w.len(), &[])).transpose()?;
    if let Some(f) = forced_counter.as_mut() {
        observers.push(f);
    }
    let mut log = cfg.event_logs.then(EventLog::default);
    if let Some(l) = log.as_mut() {
        observers.push(l);
    }

    let mut series = Vec::new();
    let mut crossings = Vec::new();
    observables::run_sampled(&mut d, &cfg.sample_times, cfg.horizon, &mut observers, |t, s| {
        if cfg.wants(ObservableKind::ClusterOrigin) {
            series.push((t, "cluster_origin", cluster_size_at(w, s, ctx.origin)? as f64));
        }
        if cfg.wants(ObservableKind::PlusFraction) {
            let plus = s.iter().filter(|&&x| x == 1).count();
            series.push((t, "plus_fraction", plus as f64 / s.len() as f64));
        }
        if let (true, Some(g)) = (cfg.wants(ObservableKind::Crossings), &ctx.geometry) {
            let c = detect_l_cross(w, s, g)?;
            crossings.push((t, c.occurred, c.witness_i, c.cluster.len(), c.annulus_hull_covers_ball));
        }
        Ok(())
    })?;
    drop(observers);

    let flipped_fraction = flips.map(|mut f| {
        f.flush(cfg.horizon);
        let s = f.snapshots();
        flipped_fraction(&s[0], &s[1], &ctx.interior)
    });
    if let Some(x) = flipped_fraction {
        series.push((f2, "flipped_fraction", x));
    }
    let d_event = match ball.as_mut() {
        Some(b) => {
            b.finish(cfg.horizon);
            let [t1, t2] = cfg.d_window.expect("normalized");
            Some(b.d_event(t1, t2)?)
        }
        None => None,
    };
    if let Some(x) = d_event {
        let [_, t2] = cfg.d_window.expect("normalized");
        series.push((t2, "d_event", x as u8 as f64));
    }
    let forced_flips = forced_counter.map(|f| ctx.forced.iter().map(|&v| f.counts()[v]).sum::<u64>());
    if let Some(x) = forced_flips {
        series.push((cfg.horizon, "forced_flips", x as f64));
    }
    Ok(ReplicaOutput {
        events: d.events(),
        series,
        crossings,
        tracker,
        flipped_fraction,
        d_event,
        forced_flips,
        events_csv: log.map(|l| l.to_csv()),
        ..blank
    })
}

/// Runs every replica, writes `series.csv`, `fixation.csv`,
/// `crossings.csv` and `manifest.json` into `out` (or the configured
/// directory), and returns the same data.
pub fn run_experiment(config: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentResult> {
    let cfg = config.normalized()?;
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone().expect("normalized"));
    let mut w = cfg.graph.build()?;
    w.set_interior_margin(cfg.interior_margin.expect("normalized"))?;
    let interior = w.interior_vertices();
    let mut notes = Vec::new();
    if interior.is_empty() {
        return Err(Error::InvalidParameter("no interior vertex left after the margin".into()));
    }

    let geometry = match &cfg.geometry {
        Some(g) => {
            let l = geometry::size_from_f64(g.l as f64)?;
            let geom = geometry::build_crossing_geometry(&w, g.a, &l, g.q.expect("normalized"))?;
            notes.extend(geom.notes.iter().cloned());
            Some(geom)
        }
        None => None,
    };
    let classes = if cfg.wants(ObservableKind::Fixation) { observables::window_classes(&w)? } else { Vec::new() };
    let class_count = classes.iter().flatten().collect::<BTreeSet<_>>().len();

    let forced = match &cfg.force_plus {
        None => Vec::new(),
        Some(ForcePlus::Vertices(v)) => {
            if let Some(&bad) = v.iter().find(|&&x| x >= w.len()) {
                return Err(Error::UnknownVertex(bad));
            }
            v.clone()
        }
        Some(ForcePlus::FrozenSet { frozen_set_max_size }) => {
            let r = shrink::search_frozen_set(&w, *frozen_set_max_size, u64::MAX)?;
            let set = r.witness.map(|x| x.set).ok_or_else(|| {
                Error::InvalidParameter(format!("no frozen set of size ≤ {frozen_set_max_size} on {}", w.descriptor()))
            })?;
            notes.push(format!("forced +1 on frozen set {set:?}"));
            set
        }
    };
    let ctx = Context { cfg: &cfg, w: &w, interior: interior.clone(), geometry, origin: w.origin_vertex(), forced };
    let seeds = cfg.seeds.expand();
    let replicas: Vec<ReplicaOutput> =
        seeds.par_iter().map(|&s| run_replica(&ctx, s)).collect::<Result<Vec<_>>>()?;

    let fixation = if cfg.wants(ObservableKind::Fixation) {
        let trackers: Vec<FixationTracker> = replicas.iter().filter_map(|r| r.tracker.clone()).collect();
        let mut mask = vec![false; w.len()];
        for &v in &interior {
            mask[v] = true;
        }
        fixation_fractions(&trackers, &classes, &mask, &cfg.sample_times)?
    } else {
        Vec::new()
    };

    fs::create_dir_all(&dir)?;
    let mut files = Vec::new();

    let mut series = String::from("# time: sample time; replica: seed; observable: name; value: measurement\n");
    series.push_str("time,replica,observable,value\n");
    for r in &replicas {
        for (t, name, v) in &r.series {
            writeln!(series, "{t:?},{},{name},{v:?}", r.seed).expect("string write");
        }
    }
    write_atomic(&dir.join("series.csv"), series.as_bytes())?;
    files.push("series.csv".to_string());

    if cfg.wants(ObservableKind::Fixation) {
        let mut s = String::from(
            "# time; class: orbit label; sign: +1 or -1; fraction: replica mean of interior class vertices \
             constant at sign on [0,time]; stderr: standard error over replicas; replicas; class_size\n",
        );
        s.push_str("time,class,sign,fraction,stderr,replicas,class_size\n");
        for r in &fixation {
            writeln!(s, "{:?},{},{},{:?},{:?},{},{}", r.time, r.class, r.sign, r.fraction, r.stderr, r.replicas, r.class_size)
                .expect("string write");
        }
        write_atomic(&dir.join("fixation.csv"), s.as_bytes())?;
        files.push("fixation.csv".to_string());
    }

    let mut hull_misses = None;
    if cfg.wants(ObservableKind::Crossings) {
        let mut s = String::from(
            "# time; replica: seed; occurred: 1 if an L-cross of +1 is present; witness_i: first working \
             cover index (0-based, empty if none); cluster_size; annulus_hull: 1 if Conv(cluster ∩ W_L) covers \
             V ∩ B(O, L/3), empty if no cross\n",
        );
        s.push_str("time,replica,occurred,witness_i,cluster_size,annulus_hull\n");
        let mut misses = 0;
        for r in &replicas {
            for (t, occ, i, size, hull) in &r.crossings {
                let i = i.map(|i| i.to_string()).unwrap_or_default();
                let h = hull.map(|h| (h as u8).to_string()).unwrap_or_default();
                misses += (*hull == Some(false)) as usize;
                writeln!(s, "{t:?},{},{},{i},{size},{h}", r.seed, *occ as u8).expect("string write");
            }
        }
        hull_misses = Some(misses);
        write_atomic(&dir.join("crossings.csv"), s.as_bytes())?;
        files.push("crossings.csv".to_string());
    }

    if cfg.event_logs {
        let events_dir = dir.join("events");
        fs::create_dir_all(&events_dir)?;
        for r in &replicas {
            let name = format!("seed_{}.csv", r.seed);
            write_atomic(&events_dir.join(&name), r.events_csv.as_deref().unwrap_or("").as_bytes())?;
            files.push(format!("events/{name}"));
        }
    }

    let mut coupled_order_checks = None;
    if matches!(cfg.protocol, Protocol::Coupled { .. }) {
        let mut s = String::from(
            "# replica: seed; joint_rings: rings processed by both replicas; order_checks: order assertions; \
             lower_plus, upper_plus: final +1 fractions\n",
        );
        s.push_str("replica,joint_rings,order_checks,lower_plus,upper_plus\n");
        let mut total = 0;
        for r in &replicas {
            let (j, c, lo, hi) = r.coupled.expect("coupled protocol");
            total += c;
            writeln!(s, "{},{j},{c},{lo:?},{hi:?}", r.seed).expect("string write");
        }
        coupled_order_checks = Some(total);
        write_atomic(&dir.join("coupling.csv"), s.as_bytes())?;
        files.push("coupling.csv".to_string());
    }

    let mut resample = None;
    if let Protocol::FixationResample { t_bar, .. } = cfg.protocol {
        let mut s = String::from(
            "# replica: seed; vertex; original_fixed: original +1 on [t_bar, horizon]; resampled_plus; \
             replacement_silent: no replacement ring on [0, t_bar]; joint_event; coupled: coin rule applied; \
             order_checks; companion_plus: companion +1 on [0, horizon]\n",
        );
        s.push_str(
            "replica,vertex,original_fixed,resampled_plus,replacement_silent,joint_event,coupled,order_checks,companion_plus\n",
        );
        let reports: Vec<&ResampleReport> = replicas.iter().map(|r| r.resample.as_ref().expect("resample")).collect();
        for (r, x) in replicas.iter().zip(&reports) {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.seed,
                x.vertex,
                x.original_fixed_by_t_bar as u8,
                x.resampled_plus as u8,
                x.replacement_silent as u8,
                x.joint_event as u8,
                x.coupled as u8,
                x.order_checks,
                x.companion_plus_from_zero as u8
            )
            .expect("string write");
        }
        write_atomic(&dir.join("resample.csv"), s.as_bytes())?;
        files.push("resample.csv".to_string());
        let runs = reports.len();
        let fixed_fraction = reports.iter().filter(|x| x.original_fixed_by_t_bar).count() as f64 / runs as f64;
        let rate = fixed_fraction * cfg.p * (-t_bar).exp();
        resample = Some(ResampleSummary {
            runs,
            fixed_fraction,
            joint_events: reports.iter().filter(|x| x.joint_event).count(),
            expected_joint_events: rate * runs as f64,
            sigma: (runs as f64 * rate * (1.0 - rate)).sqrt(),
            companion_failures: reports.iter().filter(|x| x.joint_event && !x.companion_plus_from_zero).count(),
            order_checks: reports.iter().map(|x| x.order_checks).sum(),
        });
    }

    let n = replicas.len() as f64;
    let crossing_frequency = cfg.wants(ObservableKind::Crossings).then(|| {
        let total: usize = replicas.iter().map(|r| r.crossings.len()).sum();
        let hits: usize = replicas.iter().map(|r| r.crossings.iter().filter(|c| c.1).count()).sum();
        if total == 0 { 0.0 } else { hits as f64 / total as f64 }
    });
    let d_event_frequency = cfg
        .wants(ObservableKind::FullBall)
        .then(|| replicas.iter().filter(|r| r.d_event == Some(true)).count() as f64 / n);
    let mean_flipped_fraction = cfg
        .wants(ObservableKind::Flips)
        .then(|| replicas.iter().filter_map(|r| r.flipped_fraction).sum::<f64>() / n);

    files.push("manifest.json".to_string());
    let manifest = Manifest {
        name: cfg.name.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        window: w.descriptor().to_string(),
        vertex_count: w.len(),
        interior_vertex_count: interior.len(),
        class_count,
        files,
        p_cross: ctx.geometry.as_ref().map(|g| g.p_cross),
        u_size: ctx.geometry.as_ref().map(|g| g.u.len()),
        notes,
        summary: Summary {
            replicas: replicas.len(),
            events: replicas.iter().map(|r| r.events).sum(),
            crossing_frequency,
            d_event_frequency,
            mean_flipped_fraction,
            annulus_hull_misses: hull_misses,
            forced_flips: (!ctx.forced.is_empty()).then(|| replicas.iter().filter_map(|r| r.forced_flips).sum()),
            coupled_order_checks,
            resample,
        },
        config: cfg.clone(),
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_atomic(&dir.join("manifest.json"), json.as_bytes())?;
    drop(ctx);
    Ok(ExperimentResult { manifest, dir, replicas, fixation })
}

pub fn load_manifest(path: &Path) -> Result<Manifest> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub const PLUS_COLOR: &str = "#c0392b";
pub const MINUS_COLOR: &str = "#2c3e50";

/// Optional decorations for [`render_snapshot`].
#[derive(Clone, Copy, Default)]
pub struct Overlay<'a> {
    pub geometry: Option<&'a CrossingGeometry>,
    pub region: bool,
    pub annulus: bool,
    pub balls: bool,
}

/// SVG text of a configuration: one disk per vertex in one of two fixed
/// colours, plus the requested overlays.
pub fn snapshot_svg(w: &Window, spins: &[i8], overlay: Overlay<'_>) -> Result<String> {
    if spins.len() != w.len() {
        return Err(Error::InvalidParameter("configuration does not match the window".into()));
    }
    let g = w.graph();
    let pts: Vec<[f64; 2]> = (0..g.len()).map(|v| g.coords(v)).collect();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &pts {
        lo = [lo[0].min(p[0]), lo[1].min(p[1])];
        hi = [hi[0].max(p[0]), hi[1].max(p[1])];
    }
    let bond = g
        .edges()
        .map(|(u, v)| ((pts[u][0] - pts[v][0]).powi(2) + (pts[u][1] - pts[v][1]).powi(2)).sqrt())
        .fold(f64::INFINITY, f64::min);
    let bond = if bond.is_finite() { bond } else { 1.0 };
    let scale = 20.0 / bond;
    let pad = 1.0 * bond;
    let width = (hi[0] - lo[0] + 2.0 * pad) * scale;
    let height = (hi[1] - lo[1] + 2.0 * pad) * scale;
    let tx = |x: f64| (x - lo[0] + pad) * scale;
    let ty = |y: f64| (hi[1] - y + pad) * scale;
    let r = 0.35 * bond * scale;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.1}" height="{height:.1}" viewBox="0 0 {width:.1} {height:.1}">"#
    )
    .expect("string write");
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).expect("string write");
    for (v, p) in pts.iter().enumerate() {
        let fill = if spins[v] == 1 { PLUS_COLOR } else { MINUS_COLOR };
        writeln!(s, r#"<circle class="spin" cx="{:.2}" cy="{:.2}" r="{r:.2}" fill="{fill}"/>"#, tx(p[0]), ty(p[1]))
            .expect("string write");
    }
    if let Some(geom) = overlay.geometry {
        if overlay.annulus {
            for &v in &geom.w_l {
                writeln!(
                    s,
                    r##"<circle class="annulus" cx="{:.2}" cy="{:.2}" r="{:.2}" fill="none" stroke="#f1c40f" stroke-width="2"/>"##,
                    tx(pts[v][0]),
                    ty(pts[v][1]),
                    r * 1.3
                )
                .expect("string write");
            }
        }
        if overlay.region {
            let corners: Vec<String> =
                geom.region.corners_f64.iter().map(|c| format!("{:.2},{:.2}", tx(c[0]), ty(c[1]))).collect();
            writeln!(
                s,
                r##"<polygon class="region" points="{}" fill="none" stroke="#27ae60" stroke-width="3"/>"##,
                corners.join(" ")
            )
            .expect("string write");
        }
        if overlay.balls {
            let br = 4.0 * geom.l_f64 / geom.q as f64 * scale;
            for c in &geom.cover {
                let (x, y) = c.to_f64();
                writeln!(
                    s,
                    r##"<circle class="ball" cx="{:.2}" cy="{:.2}" r="{br:.2}" fill="none" stroke="#8e44ad" stroke-width="1"/>"##,
                    tx(x * geom.l_f64),
                    ty(y * geom.l_f64)
                )
                .expect("string write");
            }
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes [`snapshot_svg`] to `path`.
pub fn render_snapshot(w: &Window, spins: &[i8], path: &Path, overlay: Overlay<'_>) -> Result<()> {
    write_atomic(path, snapshot_svg(w, spins, overlay)?.as_bytes())
}
