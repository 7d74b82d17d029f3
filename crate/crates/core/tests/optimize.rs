use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use starfd::geometry::CellGeometry;
use starfd::optimize::*;
use starfd::rates_cf::{rate_dl_edge, rate_strong_decodes_weak, rate_ul_edge, CfModel, CfTerms};
use starfd::{Error, PowerConfig, RicianFactors, StarRisState, SystemConfig};

const TARGET_REL_TOL: f64 = 1e-9;
const ROOT_REL_TOL: f64 = 1e-8;
const ALLOCATION_CASES: usize = 50;

fn random_case(rng: &mut ChaCha8Rng) -> (SystemConfig, StarRisState, f64) {
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

/// The three defining equations as rate residuals of `(P_b1, P_b2, p_u2u)`.
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

/// Damped Newton in log-power coordinates with a forward-difference
/// Jacobian, tried from a fixed grid of starting splits.
fn newton_oracle(c: &SystemConfig, t: &CfTerms, total: f64) -> Option<[f64; 3]> {
    let norm = |r: [f64; 3]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let feasible = |w: [f64; 3]| w.iter().map(|x| x.exp()).sum::<f64>() < total;
    let eval = |w: [f64; 3]| residual(c, t, total, [w[0].exp(), w[1].exp(), w[2].exp()]);
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
                if cand.iter().all(|x| x.is_finite()) && feasible(cand) {
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

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn closed_form_allocation_is_exact_and_matches_root_finder() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let mut checked = 0;
    for _ in 0..5_000 {
        if checked == ALLOCATION_CASES {
            break;
        }
        let (c, ris, total) = random_case(&mut rng);
        let t = CfModel::new(&c).unwrap().terms(&ris).unwrap();
        let pw = match power_allocation_closed_form(&c, &t, total, c.targets.downlink, c.targets.uplink) {
            Ok(p) => p,
            Err(Error::Infeasible { .. }) => continue,
            Err(e) => panic!("unexpected error {e}"),
        };
        assert!(rel(rate_dl_edge(&c, &t, &pw), c.targets.downlink) < TARGET_REL_TOL);
        assert!(rel(rate_strong_decodes_weak(&c, &t, &pw), c.targets.downlink) < TARGET_REL_TOL);
        assert!(rel(rate_ul_edge(&c, &t, &pw), c.targets.uplink) < TARGET_REL_TOL);
        assert!(rel(pw.sum(), total) < TARGET_REL_TOL);

        let root = newton_oracle(&c, &t, total).unwrap_or_else(|| panic!("root finder failed on {pw:?}"));
        for (got, want) in [(pw.p_b1, root[0]), (pw.p_b2, root[1]), (pw.p_u2u, root[2])] {
            assert!(rel(got, want) < ROOT_REL_TOL, "case {checked}: {got} vs {want}");
        }

        let report = CfModel::new(&c).unwrap().report(&ris, &pw).unwrap();
        let cr = validate_constraints(&c, &ris, &pw, &report).unwrap();
        assert!(cr.sic.margin >= -1e-9 && cr.dl_target.margin >= -1e-9 && cr.ul_target.margin >= -1e-9);
        assert!(cr.feasible());
        checked += 1;
    }
    assert_eq!(checked, ALLOCATION_CASES, "too few feasible draws");
}

#[test]
fn infeasible_budget_names_the_binding_constraint() {
    let mut c = SystemConfig::default();
    c.targets.downlink = 4.0;
    c.targets.uplink = 4.0;
    let ris = suboptimal_state(&c, 0.5).unwrap();
    let t = CfModel::new(&c).unwrap().terms(&ris).unwrap();
    match power_allocation_closed_form(&c, &t, 10.0, 4.0, 4.0) {
        Err(Error::Infeasible { binding, value, .. }) => {
            assert!(value < 0.0);
            assert!(["SIC condition", "DL edge target", "UL edge target", "power budget"].contains(&binding));
        }
        other => panic!("expected infeasibility, got {other:?}"),
    }
}

#[test]
fn zero_powers_fail_positive_targets_only() {
    let c = SystemConfig::default();
    let ris = StarRisState::uniform(c.n_elements, 0.5).unwrap();
    let pw = PowerConfig::new(0.0, 0.0, 0.0, 0.0, 0.0).unwrap();
    let report = CfModel::new(&c).unwrap().report(&ris, &pw).unwrap();
    let cr = validate_constraints(&c, &ris, &pw, &report).unwrap();
    assert!(cr.budget.satisfied);
    assert!(!cr.dl_target.satisfied && !cr.ul_target.satisfied);
}

#[test]
fn target_split_respects_its_budgets() {
    let c = SystemConfig::default();
    let ris = suboptimal_state(&c, 0.5).unwrap();
    let t = CfModel::new(&c).unwrap().terms(&ris).unwrap();
    for tau in [0.01, 0.3, 0.8, 1.0] {
        let pw = target_split_allocation(&c, &t, 1e5, tau, 3.0, 1.0).unwrap();
        assert!(rel(pw.bs(), tau * 1e5) < 1e-12);
        assert!(rel(pw.sum(), 1e5) < 1e-12);
    }
    assert!(target_split_allocation(&c, &t, 1e5, 0.0, 3.0, 1.0).is_err());
}

fn toy_config(n: usize) -> SystemConfig {
    SystemConfig {
        n_elements: n,
        weights: starfd::Weights { u1d: 0.0, u2d: 1.0, u1u: 0.0, u2u: 1.0, center_flow: 0.0, edge_flow: 0.0 },
        ..SystemConfig::default()
    }
}

#[test]
fn pgam_trace_is_monotone_from_random_starts() {
    let c = toy_config(4);
    let pw = PowerConfig::from_split(1e6, 0.8, 0.2, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10 {
        let init = StarRisState::random(4, &mut rng).unwrap();
        let opts = PgamOptions { max_iters: 200, ..PgamOptions::default() };
        let res = pgam(&c, &pw, &init, &opts).unwrap();
        assert!(res.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{:?}", res.trace);
        assert!(res.objective() >= res.trace[0]);
        assert!(res.constraints.energy_split.satisfied && res.constraints.unit_modulus.satisfied);
    }
}

#[test]
fn pgam_stops_at_once_on_a_fixed_point() {
    // one element on the reflect side only: the edge cascade has a single
    // term, so the phase cannot matter and full reflection maximises the DL
    let mut c = toy_config(1);
    c.weights = starfd::Weights { u1d: 0.0, u2d: 1.0, u1u: 0.0, u2u: 0.0, center_flow: 0.0, edge_flow: 0.0 };
    let pw = PowerConfig::from_split(1e6, 0.8, 0.2, 0.5).unwrap();
    let init = StarRisState::new(vec![0.0], vec![1.0], vec![0.0], vec![0.0]).unwrap();
    let res = pgam(&c, &pw, &init, &PgamOptions::default()).unwrap();
    assert_eq!(res.termination, Termination::Converged);
    assert!(res.trace.len() <= 2);
    assert!(res.objective() - res.trace[0] < PgamOptions::default().tolerance);
}

#[test]
fn pgam_rejects_bad_options() {
    let c = toy_config(4);
    let pw = PowerConfig::from_split(1e6, 0.8, 0.2, 0.5).unwrap();
    let init = StarRisState::uniform(4, 0.5).unwrap();
    let bad = PgamOptions { step: 0.0, ..PgamOptions::default() };
    assert!(matches!(pgam(&c, &pw, &init, &bad), Err(Error::Argument(_))));
}

#[test]
fn amplitude_projection_is_the_nearest_feasible_point() {
    let (t, r) = project_amplitudes(&[0.9], &[-0.3]);
    let d = |a: f64, b: f64| (a - 0.9).powi(2) + (b + 0.3).powi(2);
    let best = d(t[0], r[0]);
    for k in 0..=10_000 {
        let s = k as f64 / 10_000.0;
        assert!(best <= d(s, 1.0 - s) + 1e-15);
    }
    assert_eq!((t[0], r[0]), (1.0, 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projections_are_idempotent_and_feasible(
        pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -5.0f64..5.0, -5.0f64..5.0), 1..30)
    ) {
        let rt: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let rr: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (t, r) = project_amplitudes(&rt, &rr);
        let (t2, r2) = project_amplitudes(&t, &r);
        for i in 0..t.len() {
            prop_assert!((t[i] - t2[i]).abs() < 1e-12 && (r[i] - r2[i]).abs() < 1e-12);
            prop_assert!(t[i] >= 0.0 && r[i] >= 0.0 && (t[i] + r[i] - 1.0).abs() < 1e-12);
        }
        let raw: Vec<Complex64> = pts.iter().map(|p| Complex64::new(p.2, p.3)).collect();
        let phi = project_phases(&raw);
        let again = project_phases(&phi.iter().map(|p| Complex64::from_polar(1.0, *p)).collect::<Vec<_>>());
        for (a, b) in phi.iter().zip(&again) {
            let gap = (a - b).rem_euclid(std::f64::consts::TAU);
            prop_assert!(gap.min(std::f64::consts::TAU - gap) < 1e-12);
        }
    }

    #[test]
    fn aligned_phases_cancel_cascade_phase(n in 1usize..40, az1 in -3.0f64..3.0, el1 in 0.1f64..3.0, az2 in -3.0f64..3.0, el2 in 0.1f64..3.0) {
        use starfd::channel::{steering_vector, Direction};
        let (inc, out) = (Direction::new(az1, el1), Direction::new(az2, el2));
        let phi = align_phases(n, 0.5, inc, out);
        let a_in = steering_vector(n, inc, 0.5);
        let a_out = steering_vector(n, out, 0.5);
        let total: Complex64 = (0..n).map(|k| a_out[k].conj() * Complex64::from_polar(1.0, phi[k]) * a_in[k]).sum();
        prop_assert!((total.norm() - n as f64).abs() < 1e-9 * n as f64);
    }
}
