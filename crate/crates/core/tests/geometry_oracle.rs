// reference values are kept at full printed precision
#![allow(clippy::excessive_precision)]

//! Expected path-loss expectations against polar-coordinate integrals that
//! share no code path with the library's distance densities.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use starfd::geometry::*;
use starfd::specfun::integrate_adaptive;
use std::f64::consts::PI;

const EXPONENTS: [f64; 3] = [2.1, 2.7, 3.5];
const RADII: [f64; 4] = [1.0, 10.0, 30.0, 50.0];
const ORACLE_TOL: f64 = 1e-12;
const MOMENT_REL_TOL: f64 = 1e-6;
const ANALYTIC_REL_TOL: f64 = 1e-10;

/// `int_0^len r (1 + r)^-m dr`.
fn radial_mass(len: f64, m: f64) -> f64 {
    let prim = |r: f64| (1.0 + r).powf(2.0 - m) / (2.0 - m) - (1.0 + r).powf(1.0 - m) / (1.0 - m);
    prim(len) - prim(0.0)
}

fn disk_oracle(radius: f64, m: f64) -> f64 {
    integrate_adaptive(|r| 2.0 * r / (radius * radius) * (1.0 + r).powf(-m), 0.0, radius, ORACLE_TOL).unwrap()
}

/// Point at distance `offset < radius` from the disk center, averaged over
/// rays leaving it.
fn inner_point_oracle(offset: f64, radius: f64, m: f64) -> f64 {
    let ray = |t: f64| {
        let s = offset * t.sin();
        let len = -offset * t.cos() + (radius * radius - s * s).max(0.0).sqrt();
        radial_mass(len, m)
    };
    2.0 * integrate_adaptive(ray, 0.0, PI, ORACLE_TOL).unwrap() / (PI * radius * radius)
}

fn two_point_oracle(radius: f64, m: f64) -> f64 {
    let outer = |s: f64| 2.0 * s / (radius * radius) * inner_point_oracle(s, radius, m);
    integrate_adaptive(outer, 0.0, radius, 1e-11).unwrap()
}

/// Point outside the disk at `clearance` from its rim.
fn outer_point_oracle(clearance: f64, radius: f64, m: f64) -> f64 {
    let centre = clearance + radius;
    let half_width = (radius / centre).asin();
    // t = half_width sin(u) removes the square-root behaviour at the tangents
    let chord = |u: f64| {
        let t = half_width * u.sin();
        let s = centre * t.sin();
        let root = (radius * radius - s * s).max(0.0).sqrt();
        let c = centre * t.cos();
        (radial_mass(c + root, m) - radial_mass(c - root, m)) * half_width * u.cos()
    };
    2.0 * integrate_adaptive(chord, 0.0, 0.5 * PI, ORACLE_TOL).unwrap() / (PI * radius * radius)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn disk_expectations_match_oracle() {
    for m in EXPONENTS {
        for r in RADII {
            let want = disk_oracle(r, m);
            let center = exp_pathloss_center_disk(r, m).unwrap();
            let edge = exp_pathloss_edge_disk(r, m).unwrap();
            assert!(rel(center, want) < ANALYTIC_REL_TOL, "center m={m} R={r}: {center} vs {want}");
            assert!(rel(edge, want) < ANALYTIC_REL_TOL, "edge m={m} R={r}: {edge} vs {want}");
        }
    }
}

#[test]
fn fixed_point_expectation_matches_oracle() {
    for m in EXPONENTS {
        for r in RADII {
            for clearance in [5.0, 50.0] {
                let got = exp_pathloss_fixed_point_to_disk(clearance, r, m, DEFAULT_QUADRATURE_NODES).unwrap();
                let want = outer_point_oracle(clearance, r, m);
                assert!(rel(got, want) < MOMENT_REL_TOL, "m={m} R={r} d={clearance}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn two_point_expectation_matches_oracle() {
    for m in EXPONENTS {
        for r in RADII {
            let got = exp_pathloss_two_random_points(r, m).unwrap();
            let want = two_point_oracle(r, m);
            assert!(rel(got, want) < MOMENT_REL_TOL, "m={m} R={r}: {got} vs {want}");
        }
    }
}

#[test]
fn two_point_expectation_matches_reference_values() {
    // 30-digit values of the same expectation from an arbitrary-precision
    // quadrature of the chord-length density
    let table: [(f64, f64, f64); 12] = [
        (0.1, 2.7, 0.797_332_529_245_500_993_934_716_324_636),
        (0.2, 2.7, 0.654_680_204_771_927_247_040_216_555_218),
        (0.4, 2.7, 0.469_578_094_692_132_233_117_037_859_349),
        (1.0, 2.7, 0.229_480_136_535_537_263_668_028_612_75),
        (10.0, 2.7, 0.009_813_242_815_181_575_722_749_373_193_19),
        (50.0, 2.7, 0.000_550_747_099_759_654_129_078_212_199_153),
        (0.1, 3.5, 0.747_149_905_787_326_017_043_774_774_091),
        (0.2, 3.5, 0.581_606_498_433_073_549_282_018_675_622),
        (0.4, 3.5, 0.383_652_195_680_069_450_659_111_412_212),
        (1.0, 3.5, 0.160_150_694_094_352_872_594_208_332_002),
        (10.0, 3.5, 0.004_403_464_447_856_814_098_829_439_574_24),
        (50.0, 3.5, 0.000_204_073_436_007_906_347_960_229_297_305),
    ];
    for (r, m, want) in table {
        let got = exp_pathloss_two_random_points(r, m).unwrap();
        assert!(rel(got, want) < 1e-9, "m={m} R={r}: {got} vs {want}");
    }
}

#[test]
fn two_point_series_agrees_with_quadrature_where_both_apply() {
    for m in EXPONENTS {
        for r in [0.05, 0.2, 0.45] {
            let series = two_point_series(r, m).unwrap();
            let oracle = two_point_oracle(r, m);
            assert!(rel(series, oracle) < 1e-9, "m={m} R={r}: {series} vs {oracle}");
        }
    }
}

#[test]
fn sampled_radii_follow_area_law() {
    let geom = CellGeometry::new(50.0, 30.0, 80.0, 2.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for region in [Region::Center, Region::Edge] {
        let limit = geom.region_radius(region);
        let mut u: Vec<f64> = (0..100_000)
            .map(|_| {
                let p = sample_user_position(&geom, region, &mut rng);
                assert_eq!(p.region, region);
                (p.radius / limit).powi(2)
            })
            .collect();
        u.sort_by(f64::total_cmp);
        let n = u.len() as f64;
        let ks = u
            .iter()
            .enumerate()
            .map(|(i, x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
            .fold(0.0, f64::max);
        assert!(ks < 0.01, "{region:?}: KS statistic {ks}");
    }
}

#[test]
fn rejects_exponent_at_two() {
    let err = CellGeometry::new(50.0, 30.0, 80.0, 2.0).unwrap_err();
    assert!(err.to_string().contains("path-loss exponent must exceed 2"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn expectations_are_bounded_path_loss(m in 2.01f64..5.0, r in 1e-3f64..80.0, d in 0.0f64..100.0) {
        let disk = exp_pathloss_disk(r, m).unwrap();
        let two = exp_pathloss_two_random_points(r, m).unwrap();
        let fixed = exp_pathloss_fixed_point_to_disk(d, r, m, DEFAULT_QUADRATURE_NODES).unwrap();
        for v in [disk, two, fixed] {
            prop_assert!(v > 0.0 && v <= 1.0, "{v}");
        }
        // the disk center is the best-placed point, a clearance only adds distance
        prop_assert!(two <= disk * (1.0 + 1e-9));
        prop_assert!(fixed <= pathloss(d, m) * (1.0 + 1e-9));
    }

    #[test]
    fn larger_disks_lose_more(m in 2.01f64..5.0, r in 1e-2f64..60.0, grow in 1.01f64..3.0) {
        prop_assert!(exp_pathloss_disk(r * grow, m).unwrap() < exp_pathloss_disk(r, m).unwrap());
        prop_assert!(exp_pathloss_two_random_points(r * grow, m).unwrap() < exp_pathloss_two_random_points(r, m).unwrap());
    }
}
