//! Fixtures shared by the pipeline benchmarks.

use isofcq::{GridSpec, ProfileSpec, SurfaceKind, SurfaceSpec};

/// Elastic cone on the unit interval with `n` grid points.
pub fn elastic_cone(n: usize) -> SurfaceSpec {
    SurfaceSpec {
        kind: SurfaceKind::Cone,
        c: Some(1.0),
        profile: ProfileSpec::Elastic {
            c: None,
            alpha: 0.7,
            k0: 1.2,
            dk0: 0.3,
            forcing: 0.0,
        },
        grid: GridSpec::unit(n).expect("valid grid"),
    }
}

/// Sampled cylinder profile on `[0, 8]`.
pub fn sampled_cylinder(n: usize) -> SurfaceSpec {
    let grid = GridSpec::new(n, 0.0, 8.0, false).expect("valid grid");
    let values = grid.points().iter().map(|u| 1.0 + 0.3 * (0.5 * u).sin()).collect();
    SurfaceSpec {
        kind: SurfaceKind::Cylinder,
        c: None,
        profile: ProfileSpec::Samples { values },
        grid,
    }
}
