//! Fixtures shared by the criterion benches in `benches/`.

use infheat::lattice::BoundaryData;
use infheat::{Region, SpatialDomain};

/// `(0, π) × (0, t1)` with data `sin x`.
pub fn heat_line(t1: f64) -> (Region, BoundaryData) {
    (
        Region::cylinder(SpatialDomain::interval(0.0, std::f64::consts::PI), 0.0, t1),
        BoundaryData::new(|x, _| x[0].sin()),
    )
}

/// Unit disk over `(0, t1)` with data `x₁² - x₂²`.
pub fn disk(t1: f64) -> (Region, BoundaryData) {
    (
        Region::cylinder(
            SpatialDomain::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
            0.0,
            t1,
        ),
        BoundaryData::new(|x, _| x[0] * x[0] - x[1] * x[1]),
    )
}
