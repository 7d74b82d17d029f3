//! Oracles shared by the CLI integration tests. None of them reuse the
//! library code path they check.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use starfd::geometry::CellGeometry;
use starfd::optimize::suboptimal_state;
use starfd::rates_cf::{rate_dl_edge, rate_strong_decodes_weak, rate_ul_edge, CfTerms};
use starfd::specfun::integrate_adaptive;
use starfd::{PowerConfig, RicianFactors, StarRisState, SystemConfig};
use std::f64::consts::PI;

const QUAD_TOL: f64 = 1e-12;

/// `int_0^len r (1 + r)^-m dr`.
fn radial_mass(len: f64, m: f64) -> f64 {
    let prim = |r: f64| (1.0 + r).powf(2.0 - m) / (2.0 - m) - (1.0 + r).powf(1.0 - m) / (1.0 - m);
    prim(len) - prim(0.0)
}

/// Path loss averaged over a disk around the observer.
pub fn disk_oracle(radius: f64, m: f64) -> f64 {
    integrate_adaptive(|r| 2.0 * r / (radius * radius) * (1.0 + r).powf(-m), 0.0, radius, QUAD_TOL).unwrap()
}

/// Observer at `offset < radius` from the disk center, averaged over rays.
fn inner_point_oracle(offset: f64, radius: f64, m: f64) -> f64 {
    let ray = |t: f64| {
        let s = offset * t.sin();
        radial_mass(-offset * t.cos() + (radius * radius - s * s).max(0.0).sqrt(), m)
    };
    2.0 * integrate_adaptive(ray, 0.0, PI, QUAD_TOL).unwrap() / (PI * radius * radius)
}

/// Both ends uniform in the same disk.
pub fn two_point_oracle(radius: f64, m: f64) -> f64 {
    let outer = |s: f64| 2.0 * s / (radius * radius) * inner_point_oracle(s, radius, m);
    integrate_adaptive(outer, 0.0, radius, 1e-11).unwrap()
}

/// Observer outside the disk at `clearance` from its rim.
pub fn outer_point_oracle(clearance: f64, radius: f64, m: f64) -> f64 {
    let centre = clearance + radius;
    let half_width = (radius / centre).asin();
    let chord = |u: f64| {
        let t = half_width * u.sin();
        let s = centre * t.sin();
        let root = (radius * radius - s * s).max(0.0).sqrt();
        let c = centre * t.cos();
        (radial_mass(c + root, m) - radial_mass(c - root, m)) * half_width * u.cos()
    };
    2.0 * integrate_adaptive(chord, 0.0, 0.5 * PI, QUAD_TOL).unwrap() / (PI * radius * radius)
}

/// Random deployment with a power budget for the allocation checks.
pub fn random_case(rng: &mut ChaCha8Rng) -> (SystemConfig, StarRisState, f64) {
    let mut c = SystemConfig::default();
    let center: f64 = rng.random_range(20.0..60.0);
    let edge = rng.random_range(10.0..40.0);
    let d_br = center.max(edge) + rng.random_range(5.0..60.0);
    c.geometry = CellGeometry::new(center, edge, d_br, rng.random_range(2.2..3.5)).unwrap();
    for d in [&mut c.fixed_drops.u1d, &mut c.fixed_drops.u1u] {
        d.radius = d.radius.min(center);
    }
    for d in [&mut c.fixed_drops.u2d, &mut c.fixed_drops.u2u] {
        d.radius = d.radius.min(edge);
    }
    c.n_elements = rng.random_range(4..40);
    c.kappa = RicianFactors::uniform(rng.random_range(0.5..10.0));
    c.sic_error = rng.random_range(0.0..0.05);
    c.self_interference.beta = rng.random_range(0.0..0.01);
    c.self_interference.lambda = rng.random_range(0.0..0.5);
    c.targets.downlink = rng.random_range(0.1..2.0);
    c.targets.uplink = rng.random_range(0.1..2.0);
    let ris = suboptimal_state(&c, rng.random_range(0.2..0.8)).unwrap();
    let total = 10f64.powf(rng.random_range(5.0..9.0));
    (c, ris, total)
}

fn residual(c: &SystemConfig, t: &CfTerms, total: f64, v: [f64; 3]) -> [f64; 3] {
    let pw = PowerConfig { total, p_b1: v[0], p_b2: v[1], p_u2u: v[2], p_u1u: total - v[0] - v[1] - v[2] };
    [
        rate_dl_edge(c, t, &pw) - c.targets.downlink,
        rate_strong_decodes_weak(c, t, &pw) - c.targets.downlink,
        rate_ul_edge(c, t, &pw) - c.targets.uplink,
    ]
}

fn solve3(j: [[f64; 3]; 3], f: [f64; 3]) -> [f64; 3] {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(j);
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut m = j;
        for r in 0..3 {
            m[r][k] = f[r];
        }
        *xk = det(m) / d;
    }
    x
}

/// `(P_b1, P_b2, p_u2u)` meeting both edge targets and the SIC condition
/// with equality, by damped Newton in log-power coordinates from a grid of
/// starting splits.
pub fn newton_allocation(c: &SystemConfig, t: &CfTerms, total: f64) -> Option<[f64; 3]> {
    let norm = |r: [f64; 3]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let inside = |w: [f64; 3]| w.iter().map(|x| x.exp()).sum::<f64>() < total;
    let eval = |w: [f64; 3]| residual(c, t, total, w.map(f64::exp));
    let run = |start: [f64; 3]| -> Option<[f64; 3]> {
        let mut w = start.map(|s| (s * total).ln());
        let mut r = eval(w);
        for _ in 0..300 {
            if norm(r) < 1e-13 {
                break;
            }
            let mut j = [[0.0; 3]; 3];
            for k in 0..3 {
                let h = 1e-7;
                let mut probe = w;
                probe[k] += h;
                let rk = eval(probe);
                for row in 0..3 {
                    j[row][k] = (rk[row] - r[row]) / h;
                }
            }
            let d = solve3(j, r);
            let mut step = 1.0;
            loop {
                let cand = [w[0] - step * d[0], w[1] - step * d[1], w[2] - step * d[2]];
                if cand.iter().all(|x| x.is_finite()) && inside(cand) {
                    let rc = eval(cand);
                    if norm(rc) < norm(r) {
                        w = cand;
                        r = rc;
                        break;
                    }
                }
                step *= 0.5;
                if step < 1e-12 {
                    return None;
                }
            }
        }
        (norm(r) < 1e-12).then(|| w.map(f64::exp))
    };
    let splits = [0.02, 0.1, 0.25, 0.5, 0.7];
    let mut starts = Vec::new();
    for a in splits {
        for b in splits {
            for u in splits {
                if a + b + u < 0.99 {
                    starts.push([a, b, u]);
                }
            }
        }
    }
    starts.into_iter().find_map(run)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
