use combwalk::counterexample::{
    binom_inverse_sqrt_check, build_sequence, verify_constraints, CexParams,
};
use combwalk::criteria::{power_fit, series_criterion_terms};
use combwalk::logexpr::{LogExpr, Tower};
use combwalk::montecarlo::{ensemble, EnsembleOptions};
use combwalk::quad_comb::{simulate_prw, ConfigLaw};
use combwalk::skeleton::{build_kernel, extract_skeleton, stationary_residual};
use combwalk::spectral::{principal_eigenvalue, MarkovWalk};
use combwalk::{DrrwSpec, LatticePmf, QuadCombSpec, TailRule};
use proptest::prelude::*;

fn pmf() -> impl Strategy<Value = LatticePmf> {
    (-5i64..5, prop::collection::vec(0.01f64..1.0, 1..8)).prop_map(|(offset, w)| {
        let s: f64 = w.iter().sum();
        LatticePmf::new(offset, w.iter().map(|x| x / s).collect(), 0.0).unwrap()
    })
}

fn persistence() -> impl Strategy<Value = LatticePmf> {
    prop::collection::vec(0.01f64..1.0, 1..5).prop_map(|w| {
        let s: f64 = w.iter().sum();
        LatticePmf::new(1, w.iter().map(|x| x / s).collect(), 0.0).unwrap()
    })
}

fn comb() -> impl Strategy<Value = QuadCombSpec> {
    (
        prop::collection::vec(0.05f64..1.0, 1..6),
        prop::collection::vec(0.05f64..1.0, 3),
    )
        .prop_map(|(alpha, t)| {
            let s: f64 = t.iter().sum();
            let row = [t[0] / s, t[1] / s, 1.0 - t[0] / s - t[1] / s];
            let law = ConfigLaw::new(alpha, vec![row]).unwrap();
            QuadCombSpec::uniform(law, TailRule::Const).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convolution_multiplies_char_fns(a in pmf(), b in pmf(), t in -3.1f64..3.1) {
        let c = a.convolve(&b).unwrap();
        prop_assert!((c.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!((c.char_fn(t) - a.char_fn(t) * b.char_fn(t)).norm() < 1e-12);
    }

    #[test]
    fn n_fold_matches_repeated_convolution(a in pmf(), n in 1u64..6) {
        let mut r = LatticePmf::dirac(0);
        for _ in 0..n {
            r = r.convolve(&a).unwrap();
        }
        let f = a.n_fold(n).unwrap();
        for (x, m) in r.iter() {
            prop_assert!((f.mass(x) - m).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetrized_laws_are_symmetric(a in pmf()) {
        prop_assert!(a.symmetrize().is_symmetric_within(1e-15));
    }

    #[test]
    fn kernel_is_stochastic_with_stationary_law(spec in comb()) {
        let k = build_kernel(&spec).unwrap();
        for i in 0..k.len() {
            prop_assert!((k.matrix.row(i).sum() - 1.0).abs() < 1e-12);
        }
        prop_assert!(stationary_residual(&k.matrix, &k.pi) < 1e-10);
    }

    #[test]
    fn skeleton_points_lie_on_the_path(spec in comb(), seed in any::<u64>()) {
        let traj = simulate_prw(&spec, 400, seed);
        let sk = extract_skeleton(&traj);
        prop_assert!(sk.breaks.windows(2).all(|w| w[0] < w[1]));
        for (b, c) in sk.breaks.iter().zip(&sk.states) {
            let b = *b as usize;
            prop_assert_eq!(traj.letters[b], c.cur());
            if b > 0 {
                prop_assert_eq!(traj.letters[b - 1], c.prev());
            }
        }
        for (i, (l, p)) in traj.letters.iter().zip(&traj.positions).enumerate() {
            let prev = if i == 0 { (0, 0) } else { traj.positions[i - 1] };
            let d = l.direction();
            prop_assert_eq!(*p, (prev.0 + d.0, prev.1 + d.1));
        }
    }

    #[test]
    fn eigenvalue_is_a_contraction(nu in persistence(), p in 0.05f64..0.9, t1 in -3.1f64..3.1, t2 in -3.1f64..3.1) {
        let d = DrrwSpec::isotropic(nu, p).unwrap();
        let w = MarkovWalk::from_comb(&d.to_quadcomb().unwrap()).unwrap();
        let one = principal_eigenvalue(&w, (0.0, 0.0)).unwrap().lambda;
        prop_assert!((one.re - 1.0).abs() < 1e-12 && one.im.abs() < 1e-12);
        if let Ok(e) = principal_eigenvalue(&w, (t1, t2)) {
            prop_assert!(e.lambda.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn series_terms_are_probabilities(nu in persistence(), p in 0.0f64..0.8) {
        let d = DrrwSpec::isotropic(nu, p).unwrap();
        let g = combwalk::lattice_dist::geometric_cutoff(p, 1e-13);
        let (h, v) = combwalk::skeleton::drrw_margin_jumps(&d, g).unwrap();
        let t = series_criterion_terms(&h, &v, 24).unwrap();
        for x in t.a.iter().chain(&t.b) {
            prop_assert!(*x >= -1e-15 && *x <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn power_fit_recovers_exponent(gamma in 0.3f64..3.0, c in 0.1f64..10.0) {
        let terms: Vec<f64> = (0..=400).map(|n| if n == 0 { 1.0 } else { c * (n as f64).powf(-gamma) }).collect();
        let fit = power_fit(&terms, 40, 400).unwrap();
        prop_assert!((fit.gamma - gamma).abs() < 1e-9);
        prop_assert!((fit.c / c - 1.0).abs() < 1e-8);
    }

    #[test]
    fn ensemble_diagnostics_are_bounded(spec in comb(), seed in any::<u64>()) {
        let mut o = EnsembleOptions::new(300, 6, seed);
        o.jobs = 1;
        let a = ensemble(&spec, &o).unwrap();
        o.jobs = 3;
        let b = ensemble(&spec, &o).unwrap();
        prop_assert_eq!(&a.trials, &b.trials);
        for d in &a.trials {
            prop_assert!(d.last_return_time <= 300);
            prop_assert!(d.min_dist_after_burnin >= 0.0);
        }
    }

    #[test]
    fn log_sums_enclose_float_sums(a in -30.0f64..30.0, b in -30.0f64..30.0) {
        let t = Tower::new();
        let s = t.ln_add_exp(&LogExpr::constant(a), &LogExpr::constant(b)).unwrap();
        let (lo, hi) = s.bounds();
        let x = (a.exp() + b.exp()).ln();
        prop_assert!(lo <= x && x <= hi);
        prop_assert!(hi - lo < 1e-12 * x.abs().max(1.0));
        let back = t.parse(&t.format(&s)).unwrap();
        prop_assert_eq!(back.bounds(), s.bounds());
    }

    #[test]
    fn binomial_inverse_root_bound(n in 1u64..400, p in 0.005f64..0.5) {
        prop_assert!(binom_inverse_sqrt_check(n, p).unwrap().holds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn built_sequences_verify(r in 0.3f64..0.7, p2 in 0.05f64..0.25, k in 3usize..8) {
        let params = CexParams { r, p2, ..CexParams::default() };
        let seq = build_sequence(&params, k).unwrap();
        let v = verify_constraints(&seq).unwrap();
        prop_assert!(v.all_hold, "{:?}", v.failures().collect::<Vec<_>>());
    }
}
