use std::f64::consts::PI;

use dwopt::continuous_opt::{benchmark_sweep, Algorithm, SweepSettings, Target};
use dwopt::PotentialSpec;

/// Width fraction of the box that drains into the minimum at 0, from the
/// two local maxima of `V` closest to the origin.
pub fn global_basin_fraction(k: f64, h0: f64, w0: f64, box_half: f64) -> f64 {
    let dv = |x: f64| k * x + h0 * PI / w0 * (2.0 * PI * x / w0).sin();
    let mut x = 1e-9;
    let step = w0 / 1000.0;
    // V' > 0 just right of the origin; the first sign change is the barrier top
    while dv(x) > 0.0 && x < box_half {
        x += step;
    }
    let (mut lo, mut hi) = (x - step, x);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if dv(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // symmetric potential
    (2.0 * lo).min(2.0 * box_half) / (2.0 * box_half)
}

#[test]
fn cgd_success_rate_is_the_global_basin_fraction() {
    let spec = PotentialSpec::washboard(1.0);
    let target = Target::for_grid(&spec, 211).unwrap();
    let rows = benchmark_sweep(&spec, Algorithm::Cgd, 1000, &[128], 4, &target, &SweepSettings::default()).unwrap();
    let want = global_basin_fraction(spec.k, spec.h0, spec.w0, 3.0);
    assert!((rows[0].p_gs - want).abs() <= 0.03, "CGD {} vs basin {want}", rows[0].p_gs);
}

#[test]
fn nelder_mead_stays_local() {
    let spec = PotentialSpec::washboard(1.0);
    let target = Target::for_grid(&spec, 211).unwrap();
    let rows = benchmark_sweep(&spec, Algorithm::Nm, 500, &[128], 6, &target, &SweepSettings::default()).unwrap();
    let want = global_basin_fraction(spec.k, spec.h0, spec.w0, 3.0);
    assert!(rows[0].p_gs < want + 0.05, "NM {} vs basin {want}", rows[0].p_gs);
}

#[test]
fn global_methods_find_the_minimum() {
    let spec = PotentialSpec::washboard(1.0);
    let target = Target::for_grid(&spec, 211).unwrap();
    for algorithm in [Algorithm::De, Algorithm::Bh] {
        let rows =
            benchmark_sweep(&spec, algorithm, 100, &[128], 7, &target, &SweepSettings::default()).unwrap();
        assert!(rows[0].p_gs > 0.9, "{}: {}", algorithm.as_str(), rows[0].p_gs);
    }
}
