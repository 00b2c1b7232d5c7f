//! Benchmark fixtures shared by the criterion targets.

use std::sync::Arc;

use tactoidlab::{BoundaryData, Domain, GridField, InitKind, SimConfig};

/// Rectangle run of the one-dimensionality experiment with a seeded noisy start.
pub fn rectangle_config(l: f64) -> SimConfig {
    let domain = Domain::rectangle(0.4, 1.0, 64, 160, BoundaryData::PeriodicXDirichletY { a: 0.6 })
        .expect("valid rectangle");
    let mut cfg = SimConfig::new(Arc::new(domain), 0.01, l);
    cfg.init = InitKind::SeededRandom { seed: 7, amplitude: 0.1 };
    cfg
}

/// Degree -1 vortex-free start on the unit disk.
pub fn disk_field(n: usize) -> GridField {
    let domain = Domain::disk(1.0, n, BoundaryData::Degree { k: -1, alpha: std::f64::consts::PI })
        .expect("valid disk");
    GridField::boundary_extension(Arc::new(domain))
}
