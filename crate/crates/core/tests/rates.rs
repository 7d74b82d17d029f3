use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use starfd::channel::{complex_gaussian, draw_realization, ChannelRealization, LosVectors, Side};
use starfd::rates_cf::*;
use starfd::rates_mc::*;
use starfd::rates_mc::rate_strong_decodes_weak as mc_decode_rate;
use starfd::{PowerConfig, Simplifications, StarRisState, SystemConfig};

/// Relative tolerance for identities that hold up to rounding.
const IDENTITY_REL_TOL: f64 = 1e-12;

fn setup(seed: u64) -> (SystemConfig, StarRisState, PowerConfig) {
    let mut c = SystemConfig { sic_error: 0.03, ..SystemConfig::default() };
    c.self_interference.beta = 0.2;
    let ris = StarRisState::random(c.n_elements, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    let pw = PowerConfig::from_split(1e4, 0.7, 0.25, 0.4).unwrap();
    (c, ris, pw)
}

fn through(out: &[Complex64], ris: &StarRisState, side: Side, inp: &[Complex64]) -> Complex64 {
    let rho = ris.amplitudes(side);
    let phi = ris.phases(side);
    (0..out.len()).map(|n| out[n] * Complex64::from_polar(rho[n], phi[n]) * inp[n]).sum()
}

/// Every SINR rebuilt from raw channels, one named term at a time.
fn hand_sinrs(c: &SystemConfig, ch: &ChannelRealization, ris: &StarRisState, pw: &PowerConfig, si: f64) -> [f64; 5] {
    let g = &ch.gains;
    let t = Side::Transmit;
    let r = Side::Reflect;
    let bs_u1d = ch.h_b_u1d * g.b_u1d.sqrt() + through(&ch.g_r_u1d, ris, t, &ch.g_br) * (g.br * g.r_u1d).sqrt();
    let u1u_u1d = ch.h_u1d_u1u * g.u1d_u1u.sqrt() + through(&ch.g_r_u1d, ris, t, &ch.g_r_u1u) * (g.r_u1u * g.r_u1d).sqrt();
    let u2u_u1d = through(&ch.g_r_u1d, ris, t, &ch.g_r_u2u) * (g.r_u2u * g.r_u1d).sqrt();
    let bs_u2d = through(&ch.g_r_u2d, ris, r, &ch.g_br) * (g.br * g.r_u2d).sqrt();
    let u1u_u2d = through(&ch.g_r_u2d, ris, r, &ch.g_r_u1u) * (g.r_u1u * g.r_u2d).sqrt();
    let u2u_u2d = through(&ch.g_r_u2d, ris, r, &ch.g_r_u2u) * (g.r_u2u * g.r_u2d).sqrt();
    let u1u_bs = ch.h_b_u1u * g.b_u1u.sqrt() + through(&ch.g_br, ris, t, &ch.g_r_u1u) * (g.br * g.r_u1u).sqrt();
    let u2u_bs = through(&ch.g_br, ris, t, &ch.g_r_u2u) * (g.br * g.r_u2u).sqrt();
    let br_conj: Vec<Complex64> = ch.g_br.iter().map(|v| v.conj()).collect();
    let bs_bs = through(&ch.g_br, ris, t, &br_conj) * g.br;

    let xi = c.sic_error;
    let pb = pw.p_b1 + pw.p_b2;
    let dl_interf_1 = pw.p_u1u * u1u_u1d.norm_sqr() + pw.p_u2u * u2u_u1d.norm_sqr() + c.noise.u1d;
    let ul_floor = pb * bs_bs.norm_sqr() + si + c.noise.bs;
    [
        pw.p_b1 * bs_u1d.norm_sqr() / (xi * pw.p_b2 * bs_u1d.norm_sqr() + dl_interf_1),
        pw.p_b2 * bs_u2d.norm_sqr()
            / (pw.p_b1 * bs_u2d.norm_sqr() + pw.p_u1u * u1u_u2d.norm_sqr() + pw.p_u2u * u2u_u2d.norm_sqr() + c.noise.u2d),
        pw.p_u1u * u1u_bs.norm_sqr() / (pw.p_u2u * u2u_bs.norm_sqr() + ul_floor),
        pw.p_u2u * u2u_bs.norm_sqr() / (xi * pw.p_u1u * u1u_bs.norm_sqr() + ul_floor),
        pw.p_b2 * bs_u1d.norm_sqr() / (pw.p_b1 * bs_u1d.norm_sqr() + dl_interf_1),
    ]
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn instantaneous_sinrs_match_hand_assembly() {
    for seed in 0..20 {
        let (c, ris, pw) = setup(seed);
        let los = LosVectors::new(c.n_elements, &c.angles);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let ch = draw_realization(&c, &los, &mut rng);
        let si = c.residual_si(pw.bs()) * complex_gaussian(&mut rng).norm_sqr();
        let g = InstantGains::new(&c, &ch, &ris);
        let got = [
            sinr_dl_center(&c, &g, &pw),
            sinr_dl_edge(&c, &g, &pw),
            sinr_ul_center(&c, &g, &pw, si),
            sinr_ul_edge(&c, &g, &pw, si),
            mc_decode_rate(&c, &g, &pw).exp2() - 1.0,
        ];
        let want = hand_sinrs(&c, &ch, &ris, &pw, si);
        for (k, (a, b)) in got.iter().zip(&want).enumerate() {
            assert!(close(*a, *b, 1e-10), "seed {seed} term {k}: {a} vs {b}");
        }
    }
}

#[test]
fn single_trial_equals_its_own_draw() {
    let (c, ris, pw) = setup(4);
    let seed = 77;
    let rep = ergodic_rate_mc(&c, &ris, &pw, 1, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let los = LosVectors::new(c.n_elements, &c.angles);
    let ch = draw_realization(&c, &los, &mut rng);
    let si = c.residual_si(pw.bs()) * complex_gaussian(&mut rng).norm_sqr();
    let s = hand_sinrs(&c, &ch, &ris, &pw, si);
    let r = rep.rates;
    for (got, sinr) in [(r.u1d, s[0]), (r.u2d, s[1]), (r.u1u, s[2]), (r.u2u, s[3])] {
        assert!(close(got, (1.0 + sinr).log2(), 1e-10), "{got} vs {sinr}");
    }
    assert_eq!(rep.trials, 1);
}

#[test]
fn monte_carlo_is_independent_of_thread_count() {
    let (c, ris, pw) = setup(9);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| ergodic_rate_mc(&c, &ris, &pw, 5_000, 123).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));
}

#[test]
fn noise_dominated_rates_vanish() {
    let mut c = SystemConfig::default();
    c.self_interference.beta = 0.0;
    let ris = StarRisState::uniform(c.n_elements, 0.5).unwrap();
    let pw = PowerConfig::from_split(1e-5, 0.5, 0.2, 0.5).unwrap();
    let rep = ergodic_rate_mc(&c, &ris, &pw, 2_000, 1).unwrap();
    for v in [rep.rates.u1d, rep.rates.u2d, rep.rates.u1u, rep.rates.u2u] {
        assert!((0.0..1e-3).contains(&v), "{v}");
    }
}

#[test]
fn uplink_edge_terms_mirror_uplink_center_terms() {
    for seed in 0..10 {
        let (c, ris, _) = setup(seed);
        let t = cf_terms(&c, &ris).unwrap();
        assert_eq!(t.u2u.x1, t.u1u.y1);
        assert_eq!(t.u2u.y1, t.u1u.x1);
        assert_eq!(t.u2u.y2, t.u1u.y2);
    }
}

#[test]
fn simplified_forms_coincide_with_full_forms() {
    for seed in 0..10 {
        let (mut c, ris, pw) = setup(seed);
        c.simplifications = Simplifications::all();
        let full = CfModel::new(&c).unwrap().report(&ris, &pw).unwrap().rates;
        let reduced = cf_rates_simplified(&c, &ris, &pw).unwrap().rates;
        for (a, b) in [(full.u1d, reduced.u1d), (full.u2d, reduced.u2d), (full.u1u, reduced.u1u), (full.u2u, reduced.u2u)] {
            assert!(close(a, b, IDENTITY_REL_TOL), "seed {seed}: {a} vs {b}");
        }
    }
}

#[test]
fn imperfect_sic_hurts_exactly_the_sic_users() {
    let (mut c, ris, pw) = setup(2);
    c.sic_error = 0.0;
    let clean = CfModel::new(&c).unwrap().report(&ris, &pw).unwrap().rates;
    c.sic_error = 0.01;
    let dirty = CfModel::new(&c).unwrap().report(&ris, &pw).unwrap().rates;
    assert!(dirty.u1d < clean.u1d && dirty.u2u < clean.u2u);
    assert_eq!(dirty.u2d, clean.u2d);
    assert_eq!(dirty.u1u, clean.u1u);
}

#[test]
fn bidirectional_rates_take_the_weaker_hop() {
    let (c, ris, pw) = setup(5);
    let (rc, re) = cf_rates_bidirectional(&c, &ris, &pw).unwrap();
    let t = cf_terms(&c, &ris).unwrap();
    let (uc, ue) = rates_combined(&c, &t, &pw);
    assert_eq!(rc, uc.min(rate_ul_edge(&c, &t, &pw)));
    assert_eq!(re, ue.min(rate_ul_center(&c, &t, &pw)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_form_rates_are_finite_and_non_negative(
        seed in 0u64..10_000, total in 1e-3f64..1e7, tau in 0.01f64..=1.0, a1 in 0.0f64..0.49, share in 0.0f64..=1.0,
        xi in 0.0f64..=1.0, beta in 0.0f64..10.0, n in 1usize..64,
    ) {
        let mut c = SystemConfig { n_elements: n, sic_error: xi, ..SystemConfig::default() };
        c.self_interference.beta = beta;
        let ris = StarRisState::random(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let pw = PowerConfig::from_split(total, tau, a1, share).unwrap();
        let rep = CfModel::new(&c).unwrap().report(&ris, &pw).unwrap();
        let f = rep.flows.unwrap();
        for v in [rep.rates.u1d, rep.rates.u2d, rep.rates.u1u, rep.rates.u2u, f.u1d_decodes_u2d, f.center_combined, f.edge_combined] {
            prop_assert!(v.is_finite() && v >= 0.0);
        }
    }

    #[test]
    fn sic_error_never_helps_dl_center(seed in 0u64..1000, xi in 0.0f64..1.0) {
        let (c, ris, pw) = setup(seed % 7);
        let los = LosVectors::new(c.n_elements, &c.angles);
        let ch = draw_realization(&c, &los, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut worse = c.clone();
        worse.sic_error = xi.max(c.sic_error);
        let g = InstantGains::new(&c, &ch, &ris);
        prop_assert!(sinr_dl_center(&c, &g, &pw) >= sinr_dl_center(&worse, &g, &pw));
    }
}
