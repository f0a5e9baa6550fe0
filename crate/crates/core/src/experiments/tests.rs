use super::*;
use crate::counterexample::{construct, CounterexampleParams};
use crate::distances::{normal_cdf, product_hellinger_sq};
use approx::assert_abs_diff_eq;

fn smooth_pair() -> (Density, Density) {
    let cfg = QuadConfig::default();
    (
        Density::uniform(),
        Density::log_trig(&[0.15, -0.1], &cfg).unwrap(),
    )
}

#[test]
fn path_moments_for_uniform_drift() {
    let f = Density::uniform();
    let n = 50u64;
    let reps = 10_000;
    let sums: Vec<f64> = (0..reps)
        .map(|s| simulate_gwn_path(&f, n, 16, s).unwrap().increments.iter().sum())
        .collect();
    let mean = sums.iter().sum::<f64>() / reps as f64;
    let var = sums.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let v = 1.0 / n as f64;
    assert!((mean - 2.0).abs() < 4.0 * (v / reps as f64).sqrt(), "mean {mean}");
    assert!((var - v).abs() < 4.0 * v * (2.0 / (reps - 1) as f64).sqrt(), "var {var}");
}

#[test]
fn path_is_deterministic_and_noise_vanishes() {
    let f = Density::power(1.0).unwrap();
    let a = simulate_gwn_path(&f, 100, 64, 9).unwrap();
    let b = simulate_gwn_path(&f, 100, 64, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.increments.len(), 64);
    let quiet = simulate_gwn_path(&f, u64::MAX / 2, 64, 9).unwrap();
    for ((dy, t), dt) in quiet.increments.iter().zip(quiet.grid.midpoints()).zip(quiet.grid.widths()) {
        assert_abs_diff_eq!(*dy, 2.0 * f.eval(t).sqrt() * dt, epsilon = 1e-9);
    }
    assert!(simulate_gwn_path(&f, 100, 8, 0).is_err());
}

#[test]
fn refined_grid_resolves_breakpoint_intervals() {
    let g = TimeGrid::refined(16, &[0.3, 0.30001]).unwrap();
    let inside = g.midpoints().filter(|t| (0.3..0.30001).contains(t)).count();
    assert_eq!(inside, BREAKPOINT_CELLS);
    assert_abs_diff_eq!(g.widths().sum::<f64>(), 1.0, epsilon = 1e-15);
}

#[test]
fn np_density_ties_and_forced_decisions() {
    let u = Density::uniform();
    assert!(!np_test_density(&[0.1, 0.5, 0.9], &u, &u).unwrap());
    let lin = Density::power(1.0).unwrap();
    // f(0) = 0 < g(0): reject; g(0) = 0 < f(0): accept.
    assert!(np_test_density(&[0.0, 0.9], &lin, &u).unwrap());
    assert!(!np_test_density(&[0.0, 0.1], &u, &lin).unwrap());
    let err = np_test_density(&[0.0], &lin, &lin).unwrap_err();
    assert!(matches!(err, Error::ZeroProbabilitySample { .. }));
    let rev = lin.reflect();
    assert!(np_test_density(&[0.0, 1.0], &lin, &rev).is_err());
}

#[test]
fn np_density_on_first_perturbation_interval() {
    let r = construct(&CounterexampleParams::new(1.0, 100).with_radius(6.0)).unwrap();
    let x = 0.5 * (r.x0 + r.x1);
    assert!(r.f1.eval(x) > r.f2.eval(x));
    assert!(!np_test_density(&[x], &r.f1, &r.f2).unwrap());
    assert!(np_test_density(&[x], &r.f2, &r.f1).unwrap());
}

#[test]
fn np_gwn_ties_and_noiseless_limit() {
    let (f, g) = smooth_pair();
    let path = simulate_gwn_path(&f, 100, 256, 1).unwrap();
    assert!(!np_test_gwn(&path, &f, &f));
    let grid = shared_grid(&f, &g, 256).unwrap();
    for seed in 0..20 {
        let under_f = simulate_gwn_path_on(&f, 1 << 40, 256, grid.clone(), seed).unwrap();
        let under_g = simulate_gwn_path_on(&g, 1 << 40, 256, grid.clone(), seed).unwrap();
        assert!(!np_test_gwn(&under_f, &f, &g));
        assert!(np_test_gwn(&under_g, &f, &g));
    }
}

#[test]
fn identical_hypotheses_give_zero() {
    let u = Density::uniform();
    for model in [Model::Density, Model::Gwn { grid_m: 64 }] {
        let e = estimate_tv(model, &u, &u, 20, 200, 3).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.std_error, 0.0);
    }
    assert!(estimate_tv(Model::Density, &u, &u, 20, 99, 3).is_err());
}

#[test]
fn gwn_estimate_matches_closed_form() {
    let (f, g) = smooth_pair();
    let n = 200;
    let h2 = hellinger_sq_densities(&f, &g, &QuadConfig::default()).unwrap();
    let closed = 1.0 - 2.0 * normal_cdf(-(n as f64 * h2).sqrt());
    let e = estimate_tv(Model::Gwn { grid_m: 1024 }, &f, &g, n, 4000, 11).unwrap();
    assert!((e.value - closed).abs() <= 4.0 * e.std_error, "{e:?} vs {closed}");
}

#[test]
fn density_estimate_inside_hellinger_sandwich() {
    let (f, g) = smooth_pair();
    let n = 100;
    let h2 = hellinger_sq_densities(&f, &g, &QuadConfig::default()).unwrap();
    let h2n = product_hellinger_sq(h2, n).unwrap();
    let e = estimate_tv(Model::Density, &f, &g, n, 2000, 5).unwrap();
    assert!(e.value >= 0.5 * h2n - 4.0 * e.std_error);
    assert!(e.value <= h2n.sqrt() + 4.0 * e.std_error);
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let (f, g) = smooth_pair();
    let run = |threads: usize, model: Model| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_tv(model, &f, &g, 50, 300, 77).unwrap())
    };
    for model in [Model::Density, Model::Gwn { grid_m: 128 }] {
        assert_eq!(run(1, model), run(3, model));
    }
}

#[test]
fn halving_the_grid_barely_moves_the_gwn_estimate() {
    // Same Brownian paths observed at two resolutions.
    let (f, g) = smooth_pair();
    let n = 200;
    let reps = 10_000u64;
    let fine = shared_grid(&f, &g, 1024).unwrap();
    let (bf, bg) = (fine.drift(&f), fine.drift(&g));
    let coarse_grid = simulate_gwn_path_on(&f, n, 1024, fine.clone(), 0).unwrap().coarsen().unwrap().grid;
    let (cf, cg) = (coarse_grid.drift(&f), coarse_grid.drift(&g));
    let mut errs = [[0u64; 2]; 2];
    for rep in 0..reps {
        for (h, truth) in [&f, &g].into_iter().enumerate() {
            let p = simulate_gwn_path_on(truth, n, 1024, fine.clone(), rep * 2 + h as u64).unwrap();
            let c = p.coarsen().unwrap();
            let rej_fine = log_likelihood_ratio_with(&p, &bf, &bg) > 0.0;
            let rej_coarse = log_likelihood_ratio_with(&c, &cf, &cg) > 0.0;
            let wrong = |rej: bool| (if h == 0 { rej } else { !rej }) as u64;
            errs[0][h] += wrong(rej_fine);
            errs[1][h] += wrong(rej_coarse);
        }
    }
    let est = |e: [u64; 2]| McEstimate::from_counts(e[0], e[1], reps as usize, 0);
    let (a, b) = (est(errs[0]), est(errs[1]));
    assert!((a.value - b.value).abs() < a.std_error, "{a:?} vs {b:?}");
}

#[test]
fn sampling_passes_dkw_and_histogram_checks() {
    let f = Density::power(2.0).unwrap();
    let t = build_cdf(&f, &QuadConfig::default(), DEFAULT_CDF_GRID).unwrap();
    let n = 20_000;
    let mut xs = t.sample_iid(n, 123);
    xs.sort_by(f64::total_cmp);
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = x.powi(3);
            (c - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - c).abs())
        })
        .fold(0.0, f64::max);
    // DKW at level 1e-6.
    let eps = ((2.0f64 / 1e-6).ln() / (2.0 * n as f64)).sqrt();
    assert!(ks < eps, "KS {ks} >= {eps}");
    let mut bins = [0usize; 10];
    for x in &xs {
        bins[((x * 10.0) as usize).min(9)] += 1;
    }
    for (k, &c) in bins.iter().enumerate() {
        let p = ((k + 1) as f64 / 10.0).powi(3) - (k as f64 / 10.0).powi(3);
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((c as f64 - n as f64 * p).abs() < 5.0 * sd + 1.0, "bin {k}: {c}");
    }
}

#[test]
fn sweep_rejects_unsorted_grid_and_tracks_trend() {
    let (f, g) = smooth_pair();
    assert!(consistency_sweep(|_| Ok((f.clone(), g.clone())), &[100, 10], 100, 1, 64).is_err());
    let rows = consistency_sweep(|_| Ok((f.clone(), g.clone())), &[10, 1000], 400, 1, 256).unwrap();
    assert!(rows[1].n_h2 > rows[0].n_h2);
    assert!(rows[1].tv_gwn_closed > rows[0].tv_gwn_closed);
    assert!(rows[1].tv_gwn.value > rows[0].tv_gwn.value);
    let t = sweep_table(&rows);
    assert_eq!(t.columns, SWEEP_COLUMNS);
    assert_eq!(t.rows.len(), 2);
}
