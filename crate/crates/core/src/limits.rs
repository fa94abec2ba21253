//! Process-wide work caps for the exact (enumeration-based) code paths.

use std::sync::atomic::{AtomicUsize, Ordering};

pub const DEFAULT_ENUMERATION_CAP: usize = 100_000_000;
pub const DEFAULT_PROBE_CAP: usize = 4_000_000;

static ENUMERATION_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_ENUMERATION_CAP);
static PROBE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_PROBE_CAP);

/// Maximum number of lattice points a single ball enumeration may produce.
pub fn enumeration_cap() -> usize {
    ENUMERATION_CAP.load(Ordering::Relaxed)
}

pub fn set_enumeration_cap(cap: usize) {
    ENUMERATION_CAP.store(cap.max(1), Ordering::Relaxed);
}

/// Maximum number of sphere probe points used to certify an epsilon-net.
pub fn probe_cap() -> usize {
    PROBE_CAP.load(Ordering::Relaxed)
}

pub fn set_probe_cap(cap: usize) {
    PROBE_CAP.store(cap.max(1), Ordering::Relaxed);
}
