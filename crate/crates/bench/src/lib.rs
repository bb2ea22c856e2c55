//! Shared fixtures for the kernel benchmarks.

use twofold::{builtin, TwoFoldParams};

/// A spread of normal-form parameter sets covering all three flavours and
/// both root-count cases of the mixed flavour.
pub fn parameter_grid() -> Vec<TwoFoldParams> {
    let mut out = Vec::new();
    for (a1, a2) in [(1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
        for b1 in [-4.0, -1.5, 0.5, 3.0] {
            for b2 in [-3.0, -0.5, 1.0, 4.5] {
                out.push(TwoFoldParams::new(a1, a2, b1, b2, 0.2).expect("valid grid"));
            }
        }
    }
    out
}

/// Surface points `(x2, x3)` on a square grid.
pub fn surface_points(n: usize, half_width: f64) -> Vec<(f64, f64)> {
    let at = |i: usize| -half_width + 2.0 * half_width * i as f64 / (n - 1) as f64;
    (0..n).flat_map(|i| (0..n).map(move |j| (at(i), at(j)))).collect()
}

pub fn scenario_params(name: &str) -> TwoFoldParams {
    builtin(name).expect("builtin").params().expect("normal form")
}
