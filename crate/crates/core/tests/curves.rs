use fdp_core::mechanisms::{
    binomial_mech_branch, binomial_mech_curve, binomial_noise_branch, binomial_noise_curve, cldp_curve, pbm_curve,
    sto_sign_curve, ternarize_curve, ternary_curve, ternary_vector_gdp, MechanismParams,
};
use fdp_core::{curve_to_delta, curve_to_epsilon, np_tradeoff, DiscreteDist, TradeoffCurve};
use proptest::prelude::*;

const ORACLE_TOL: f64 = 1e-10;

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| i as f64 / n as f64)
}

fn symmetric_oracle(params: &MechanismParams) -> TradeoffCurve {
    let (p, q) = params.worst_case_pair().unwrap().unwrap();
    np_tradeoff(&p, &q).unwrap().min(&np_tradeoff(&q, &p).unwrap())
}

#[test]
fn binomial_closed_forms_match_oracle_on_grid() {
    for m in [2u64, 5, 20, 100] {
        for p in [0.3, 0.5, 0.7] {
            for l in [1u64, 2, 4] {
                if m <= l {
                    continue;
                }
                let params = MechanismParams::BinomialNoise { m, p, l };
                let (pp, qq) = params.worst_case_pair().unwrap().unwrap();
                let branch = binomial_noise_branch(m, p, l).unwrap();
                assert!(branch.sup_distance(&np_tradeoff(&pp, &qq).unwrap()) <= ORACLE_TOL);
                let full = binomial_noise_curve(m, p, l).unwrap();
                assert!(full.sup_distance(&symmetric_oracle(&params)) <= ORACLE_TOL, "M={m} p={p} l={l}");
            }
            let (lo, hi) = (p * 0.5, p);
            let params = MechanismParams::BinomialMech { m, p_min: lo, p_max: hi };
            let full = binomial_mech_curve(m, lo, hi).unwrap();
            assert!(full.sup_distance(&symmetric_oracle(&params)) <= ORACLE_TOL, "M={m} p={p}");
        }
    }
}

#[test]
fn scale_closed_forms_match_oracle_on_grid() {
    let c = 0.1;
    for a_over_c in [1.5, 2.5, 10.0] {
        let a = a_over_c * c;
        for b_over_a in [1.0, 1.5, 4.0] {
            let b = b_over_a * a;
            let params = MechanismParams::Ternary { a, b, c };
            let f = ternary_curve(a, b, c).unwrap();
            let (p, q) = params.worst_case_pair().unwrap().unwrap();
            assert!(f.sup_distance(&np_tradeoff(&p, &q).unwrap()) <= ORACLE_TOL);
            assert!(f.sup_distance(&symmetric_oracle(&params)) <= ORACLE_TOL);
        }
        let params = MechanismParams::StoSign { a, c };
        assert!(sto_sign_curve(a, c).unwrap().sup_distance(&symmetric_oracle(&params)) <= ORACLE_TOL);
        let params = MechanismParams::Ternarize { b: a, c };
        assert!(ternarize_curve(a, c).unwrap().sup_distance(&symmetric_oracle(&params)) <= ORACLE_TOL);
    }
    for eps in [0.1, 1.0, 2.0, 5.0] {
        let params = MechanismParams::Cldp { eps, c };
        assert!(cldp_curve(eps, c).unwrap().sup_distance(&symmetric_oracle(&params)) <= ORACLE_TOL);
    }
}

#[test]
fn binomial_noise_improves_with_m() {
    let curves: Vec<_> = [20u64, 50, 100, 500].iter().map(|&m| binomial_noise_curve(m, 0.5, 8).unwrap()).collect();
    for w in curves.windows(2) {
        for x in grid(1000) {
            assert!(w[1].eval(x).unwrap() >= w[0].eval(x).unwrap() - 1e-12);
        }
    }
}

#[test]
fn binomial_mech_branches_coincide_when_symmetric() {
    let plus = binomial_mech_branch(12, 0.3, 0.7).unwrap();
    let minus = binomial_mech_branch(12, 1.0 - 0.7, 1.0 - 0.3).unwrap();
    assert!(plus.sup_distance(&minus) < 1e-15);
}

#[test]
fn sparsification_amplifies_privacy() {
    let (a, c) = (0.25, 0.1);
    let sto = sto_sign_curve(a, c).unwrap();
    let mut prev = ternary_curve(a, a, c).unwrap();
    for b in [0.3, 0.5, 1.0, 4.0] {
        let cur = ternary_curve(a, b, c).unwrap();
        assert!(cur.min_margin_over(&prev) >= -1e-15);
        let inside = (a - c) / (2.0 * b) + 0.01;
        assert!(cur.eval(inside).unwrap() > sto.eval(inside).unwrap());
        prev = cur;
    }
}

#[test]
fn pbm_curve_lower_bounds_the_bernoulli_pair() {
    for (lo, hi) in [(0.4, 0.6), (0.1, 0.8), (0.25, 0.75), (0.05, 0.3)] {
        let f = pbm_curve(lo, hi).unwrap();
        let p = DiscreteDist::bernoulli(hi).unwrap();
        let q = DiscreteDist::bernoulli(lo).unwrap();
        let exact = np_tradeoff(&p, &q).unwrap().min(&np_tradeoff(&q, &p).unwrap());
        assert!(exact.min_margin_over(&f) >= -1e-12, "p_min={lo} p_max={hi}");
    }
}

#[test]
fn vector_gdp_monotonicity() {
    let mut prev = 0.0;
    for d in [1u64, 2, 4, 16, 250, 5000] {
        let mu = ternary_vector_gdp(0.25, 0.1, d).unwrap();
        assert!(mu > prev);
        prev = mu;
    }
    assert!(ternary_vector_gdp(0.25, 0.12, 4).unwrap() > ternary_vector_gdp(0.25, 0.1, 4).unwrap());
    assert!(ternary_vector_gdp(0.3, 0.1, 4).unwrap() < ternary_vector_gdp(0.25, 0.1, 4).unwrap());
    let big = ternary_vector_gdp(0.25, 0.1, 5000).unwrap();
    assert!((big - 183.979_315_557_122_57).abs() < 1e-8, "{big}");
}

#[test]
fn csv_round_trip_of_a_mechanism_curve() {
    let f = binomial_noise_curve(40, 0.4, 3).unwrap();
    let mut buf = Vec::new();
    f.write_csv(&mut buf).unwrap();
    let back = TradeoffCurve::read_csv(buf.as_slice()).unwrap();
    assert!(back.sup_distance(&f) == 0.0);
}

fn dist(n: usize) -> impl Strategy<Value = DiscreteDist> {
    prop::collection::vec(0.0f64..1.0, n).prop_filter_map("zero mass", move |w| {
        let total: f64 = w.iter().sum();
        (total > 1e-3).then(|| {
            let probs = w.iter().map(|x| x / total).collect();
            DiscreteDist::new((0..n as i64).collect(), probs).unwrap()
        })
    })
}

fn merge_pairs(d: &DiscreteDist) -> DiscreteDist {
    let probs: Vec<f64> = d.probs().chunks(2).map(|c| c.iter().sum()).collect();
    DiscreteDist::new((0..probs.len() as i64).collect(), probs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn oracle_curves_are_valid_tradeoff_functions(p in dist(6), q in dist(6)) {
        let f = np_tradeoff(&p, &q).unwrap();
        prop_assert!(f.is_convex(1e-12));
        for x in grid(50) {
            prop_assert!(f.eval(x).unwrap() <= 1.0 - x + 1e-12);
        }
    }

    #[test]
    fn post_processing_never_hurts_privacy(p in dist(8), q in dist(8)) {
        let fine = np_tradeoff(&p, &q).unwrap();
        let coarse = np_tradeoff(&merge_pairs(&p), &merge_pairs(&q)).unwrap();
        prop_assert!(coarse.min_margin_over(&fine) >= -1e-12);
    }

    #[test]
    fn delta_decreases_in_epsilon(p in dist(5), q in dist(5), e1 in 0.0f64..5.0, e2 in 0.0f64..5.0) {
        let f = np_tradeoff(&p, &q).unwrap();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(curve_to_delta(&f, hi).unwrap() <= curve_to_delta(&f, lo).unwrap() + 1e-15);
    }

    #[test]
    fn epsilon_delta_inversion(p in dist(5), q in dist(5), delta in 0.0f64..0.5) {
        let f = np_tradeoff(&p, &q).unwrap();
        let eps = curve_to_epsilon(&f, delta).unwrap();
        if eps.is_finite() {
            prop_assert!(curve_to_delta(&f, eps).unwrap() <= delta + 1e-9);
            if eps > 1e-6 {
                prop_assert!(curve_to_delta(&f, eps * (1.0 - 1e-6) - 1e-9).unwrap() > delta - 1e-9);
            }
        } else {
            prop_assert!(curve_to_delta(&f, 700.0).unwrap() > delta);
        }
    }

    #[test]
    fn minimum_is_pointwise(p in dist(4), q in dist(4), r in dist(4)) {
        let f = np_tradeoff(&p, &q).unwrap();
        let g = np_tradeoff(&q, &r).unwrap();
        let m = f.min(&g);
        for x in grid(200) {
            let want = f.eval(x).unwrap().min(g.eval(x).unwrap());
            prop_assert!((m.eval(x).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn ternary_matches_oracle_anywhere(c in 0.01f64..1.0, a_ratio in 1.01f64..20.0, b_ratio in 1.0f64..10.0) {
        let a = c * a_ratio;
        let b = a * b_ratio;
        let params = MechanismParams::Ternary { a, b, c };
        let (p, q) = params.worst_case_pair().unwrap().unwrap();
        let f = ternary_curve(a, b, c).unwrap();
        prop_assert!(f.sup_distance(&np_tradeoff(&p, &q).unwrap()) <= ORACLE_TOL);
    }

    #[test]
    fn binomial_noise_matches_oracle_anywhere(m in 2u64..60, p in 0.05f64..0.95, l in 1u64..6) {
        prop_assume!(m > l);
        let params = MechanismParams::BinomialNoise { m, p, l };
        let f = binomial_noise_curve(m, p, l).unwrap();
        prop_assert!(f.sup_distance(&symmetric_oracle(&params)) <= ORACLE_TOL);
    }

    #[test]
    fn binomial_mech_matches_oracle_anywhere(m in 1u64..60, lo in 0.05f64..0.9, width in 0.0f64..1.0) {
        let hi = lo + (0.95 - lo) * width;
        let params = MechanismParams::BinomialMech { m, p_min: lo, p_max: hi };
        let f = binomial_mech_curve(m, lo, hi).unwrap();
        prop_assert!(f.sup_distance(&symmetric_oracle(&params)) <= ORACLE_TOL);
    }
}
