//! Fixtures shared by the benchmarks.

use coarsen::harris::sample_initial;
use coarsen::{build_lattice, BoundarySpec, HarrisSchedule, LatticeKind, SpinConfiguration, Window};

pub fn torus(kind: LatticeKind, extent: usize) -> Window {
    build_lattice(kind, extent, BoundarySpec::Periodic).expect("lattice builds")
}

pub fn random_start(w: &Window, seed: u64) -> (SpinConfiguration, HarrisSchedule) {
    let s = HarrisSchedule::new(seed);
    (sample_initial(w, 0.5, &s).expect("valid density"), s)
}
