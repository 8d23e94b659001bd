use cheshire::control::{
    calibrate_budget, controlled_simulator, estimate_budget, optimal_intensity, run_cost, simulate_controlled, solve_g,
    solve_riccati, CalibrationOptions, ControlConfig, FeedbackPolicy,
};
use cheshire::hawkes::{EventKind, IntensityVector, NetworkModel};
use cheshire::simulation::simulate_uncontrolled;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scalar(a: f64, omega: f64, mu: f64) -> NetworkModel {
    NetworkModel::new(DMatrix::from_element(1, 1, a), vec![mu], omega).unwrap()
}

/// Explicit Euler backward for the scalar Riccati / affine pair, written
/// directly from the coupled ODEs in their matrix-product form.
fn euler_scalar(a: f64, omega: f64, mu: f64, q: f64, s: f64, f: f64, horizon: f64, steps: usize) -> (f64, f64) {
    let dt = horizon / steps as f64;
    let (mut h, mut g) = (-f, 0.0);
    for _ in 0..steps {
        let dh = 2.0 * (omega - a) * h + h * a * a * h / s + q;
        let d = a * h * a;
        let dg = (omega - a + h * a * a / s) * g - omega * h * mu + 0.5 * (h * a / s - 1.0) * d;
        h -= dt * dh;
        g -= dt * dg;
    }
    (h, g)
}

/// Richardson-extrapolated Euler with a million steps on the fine level.
fn euler_oracle(a: f64, omega: f64, mu: f64, q: f64, s: f64, f: f64, horizon: f64) -> (f64, f64) {
    let (h1, g1) = euler_scalar(a, omega, mu, q, s, f, horizon, 500_000);
    let (h2, g2) = euler_scalar(a, omega, mu, q, s, f, horizon, 1_000_000);
    (2.0 * h2 - h1, 2.0 * g2 - g1)
}

#[test]
fn riccati_closed_form_without_influence() {
    let m = scalar(0.0, 1.0, 1.0);
    let c = ControlConfig::uniform(1, 0.0, 1.0, 0.0, 1.0, 1.0).with_grid_steps(100);
    let sol = solve_riccati(&m, &c).unwrap();
    assert!((sol.h[0][(0, 0)] + (-2.0f64).exp()).abs() < 1e-6);
    // the whole path, H(t) = -e^{-2(1-t)}
    for (k, h) in sol.h.iter().enumerate() {
        let t = sol.grid.point(k);
        assert!((h[(0, 0)] + (-2.0 * (1.0 - t)).exp()).abs() < 1e-9);
    }
}

#[test]
fn scalar_riccati_and_g_match_euler_oracle() {
    for &(a, omega, mu, q, s, f, horizon) in
        &[(0.5, 1.0, 0.8, 1.0, 2.0, 1.0, 1.0), (1.2, 2.0, 0.3, 0.5, 4.0, 2.0, 1.5), (0.3, 0.7, 2.0, 2.0, 1.0, 0.0, 0.8)]
    {
        let m = scalar(a, omega, mu);
        let c = ControlConfig::uniform(1, 0.0, horizon, q, s, f).with_grid_steps(400);
        let sol = solve_riccati(&m, &c).unwrap();
        let g = solve_g(&m, &c, &sol).unwrap();
        let (h_ref, g_ref) = euler_oracle(a, omega, mu, q, s, f, horizon);
        assert!((sol.h[0][(0, 0)] - h_ref).abs() < 1e-6, "H {} vs {h_ref}", sol.h[0][(0, 0)]);
        assert!((g[0][0] - g_ref).abs() < 1e-6, "g {} vs {g_ref}", g[0][0]);
    }
}

fn convergence_ratio(model: &NetworkModel, base: &ControlConfig, coarse: usize) -> (f64, f64) {
    let solve = |steps: usize| {
        let c = base.clone().with_grid_steps(steps);
        let sol = solve_riccati(model, &c).unwrap();
        let g = solve_g(model, &c, &sol).unwrap();
        (sol.h[0].clone(), g[0].clone())
    };
    let (h1, g1) = solve(coarse);
    let (h2, g2) = solve(2 * coarse);
    let (h4, g4) = solve(4 * coarse);
    ((&h1 - &h2).norm() / (&h2 - &h4).norm(), (&g1 - &g2).norm() / (&g2 - &g4).norm())
}

#[test]
fn fourth_order_convergence_scalar() {
    let m = scalar(0.8, 1.0, 0.5);
    let c = ControlConfig::uniform(1, 0.0, 1.0, 1.0, 2.0, 1.0);
    let (rh, rg) = convergence_ratio(&m, &c, 8);
    assert!((12.0..=20.0).contains(&rh), "H ratio {rh}");
    assert!((12.0..=20.0).contains(&rg), "g ratio {rg}");
}

#[test]
fn fourth_order_convergence_random_network() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 4;
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && rng.gen_bool(0.6) {
                triplets.push((i, j, rng.gen_range(0.1..0.6)));
            }
        }
    }
    let mu: Vec<f64> = (0..n).map(|_| rng.gen_range(0.2..1.0)).collect();
    let m = NetworkModel::from_triplets(n, &triplets, mu, 1.5).unwrap();
    let mut c = ControlConfig::uniform(n, 0.0, 1.0, 1.0, 3.0, 1.0);
    c.q = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let (rh, rg) = convergence_ratio(&m, &c, 8);
    assert!((12.0..=20.0).contains(&rh), "H ratio {rh}");
    assert!((12.0..=20.0).contains(&rg), "g ratio {rg}");
}

#[test]
fn scalar_feedback_by_hand() {
    let (a, s) = (0.6, 2.0);
    let m = scalar(a, 1.0, 0.4);
    let c = ControlConfig::uniform(1, 0.0, 2.0, 1.0, s, 1.0).with_grid_steps(200);
    let p = FeedbackPolicy::build(&m, &c).unwrap();
    for k in [0, 50, 137, 200] {
        let t = p.grid().point(k);
        let h = p.h_nodes()[k][(0, 0)];
        let g = p.g_nodes()[k][0];
        for lambda in [0.0, 0.4, 3.0] {
            let expected = (-(a * g + a * h * lambda + 0.5 * a * a * h) / s).max(0.0);
            let got = optimal_intensity(&p, &IntensityVector::new(vec![lambda], t), t).unwrap().u[0];
            assert!((got - expected).abs() < 1e-12, "t={t} λ={lambda}: {got} vs {expected}");
        }
    }
}

fn three_node() -> NetworkModel {
    NetworkModel::from_triplets(3, &[(1, 0, 1.5), (2, 1, 2.0), (0, 2, 0.8), (2, 0, 1.0)], vec![1.0, 0.5, 0.0], 4.0)
        .unwrap()
}

#[test]
fn zero_policy_reproduces_uncontrolled_run() {
    let m = three_node();
    let c = ControlConfig::uniform(3, 0.0, 3.0, 0.0, 1.0, 0.0).with_grid_steps(30);
    let p = FeedbackPolicy::build(&m, &c).unwrap();
    for seed in 0..5 {
        let ctl = simulate_controlled(&m, &p, 0.0, 3.0, seed, 100_000).unwrap();
        let unc = simulate_uncontrolled(&m, 0.0, 3.0, seed, 100_000).unwrap();
        assert_eq!(ctl.incentivized_count, 0);
        assert_eq!(ctl.log.events(), unc.log.events());
    }
}

#[test]
fn no_influence_means_no_incentives() {
    let m = NetworkModel::new(DMatrix::zeros(3, 3), vec![1.0, 2.0, 0.5], 2.0).unwrap();
    let c = ControlConfig::uniform(3, 0.0, 2.0, 1.0, 1e-3, 1.0).with_grid_steps(20);
    let p = FeedbackPolicy::build(&m, &c).unwrap();
    let r = simulate_controlled(&m, &p, 0.0, 2.0, 3, 100_000).unwrap();
    assert_eq!(r.incentivized_count, 0);
    assert!(r.organic_count > 0);
}

#[test]
fn superposition_matches_closed_form_feedback() {
    let m = three_node();
    let c = ControlConfig::uniform(3, 0.0, 3.0, 1.0, 4.0, 1.0).with_grid_steps(150);
    let p = FeedbackPolicy::build(&m, &c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checkpoints: Vec<f64> = (0..100).map(|_| rng.gen_range(0.0..3.0)).collect();
    checkpoints.sort_by(f64::total_cmp);
    let mut sim = controlled_simulator(&m, &p, 0.0, 3.0, 5, 100_000).unwrap();
    let mut worst = 0.0f64;
    for t in checkpoints {
        sim.run_until(t).unwrap();
        let lambda = sim.state().intensity();
        let closed = optimal_intensity(&p, &lambda, t).unwrap();
        let superposed = sim.control().unwrap().superposed_intensity(t).unwrap();
        for (a, b) in closed.pre_clamp.iter().zip(&superposed.pre_clamp) {
            worst = worst.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    let log = sim.finish().unwrap().log;
    assert!(log.count(EventKind::Incentivized) > 0, "checkpoints should see some incentives");
    assert!(worst < 1e-9, "max deviation {worst}");
}

/// Joint Ogata thinning of the scalar controlled process, evaluating the
/// feedback law directly at every proposal.
fn direct_scalar_run(m: &NetworkModel, p: &FeedbackPolicy, tf: f64, rng: &mut ChaCha8Rng) -> (usize, usize) {
    let (a, omega, mu) = (m.a()[(0, 0)], m.omega(), m.mu0()[0]);
    let s = p.config().s[0];
    let hs: Vec<f64> = p.h_nodes().iter().map(|h| h[(0, 0)]).collect();
    let gs: Vec<f64> = p.g_nodes().iter().map(|g| g[0]).collect();
    let free_max = hs.iter().zip(&gs).map(|(h, g)| (-(a * g + 0.5 * a * a * h) / s).max(0.0)).fold(0.0, f64::max);
    let slope_max = hs.iter().map(|h| -a * h / s).fold(0.0, f64::max);
    let (mut t, mut lambda, mut organic, mut incentivized) = (0.0, mu, 0, 0);
    loop {
        let bound = lambda + free_max + slope_max * lambda;
        let dt = -rng.gen::<f64>().ln() / bound;
        let next = t + dt;
        if next >= tf {
            return (organic, incentivized);
        }
        lambda = mu + (lambda - mu) * (-omega * dt).exp();
        t = next;
        let u = optimal_intensity(p, &IntensityVector::new(vec![lambda], t), t).unwrap().u[0];
        let x = rng.gen::<f64>() * bound;
        if x < lambda {
            organic += 1;
        } else if x < lambda + u {
            incentivized += 1;
        } else {
            continue;
        }
        lambda += a;
    }
}

#[test]
fn single_user_matches_direct_thinning() {
    let m = scalar(0.5, 2.0, 1.0);
    let c = ControlConfig::uniform(1, 0.0, 4.0, 1.0, 0.5, 1.0).with_grid_steps(200);
    let p = FeedbackPolicy::build(&m, &c).unwrap();
    let runs = 2000;
    let stats = |xs: &[f64]| {
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        (mean, xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) / k)
    };
    let (mut so, mut si, mut do_, mut di) = (vec![], vec![], vec![], vec![]);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for r in 0..runs {
        let res = simulate_controlled(&m, &p, 0.0, 4.0, r, 100_000).unwrap();
        so.push(res.organic_count as f64);
        si.push(res.incentivized_count as f64);
        let (o, i) = direct_scalar_run(&m, &p, 4.0, &mut rng);
        do_.push(o as f64);
        di.push(i as f64);
    }
    for (name, x, y) in [("organic", &so, &do_), ("incentivized", &si, &di)] {
        let ((mx, vx), (my, vy)) = (stats(x), stats(y));
        assert!(my > 0.5, "{name} count too small to be informative");
        assert!((mx - my).abs() < 3.0 * (vx + vy).sqrt(), "{name}: {mx} vs {my}");
    }
}

#[test]
fn larger_cost_spends_fewer_incentives() {
    let m = three_node();
    let base = ControlConfig::uniform(3, 0.0, 3.0, 1.0, 1.0, 1.0).with_grid_steps(60);
    let spend: Vec<f64> =
        [2.0, 20.0, 200.0].iter().map(|k| estimate_budget(&m, &base.scale_s(*k), 40, 7, 100_000).unwrap()).collect();
    assert!(spend[0] > spend[1] && spend[1] > spend[2], "{spend:?}");
}

#[test]
fn calibration_lands_within_tolerance() {
    let m = three_node();
    let base = ControlConfig::uniform(3, 0.0, 3.0, 1.0, 1.0, 1.0).with_grid_steps(60);
    let opts = CalibrationOptions { runs: 20, seed: 3, ..Default::default() };
    let cal = calibrate_budget(&m, &base, 15.0, &opts).unwrap();
    assert!(cal.converged);
    assert!((cal.estimate - 15.0).abs() <= 0.05 * 15.0);
    let again = estimate_budget(&m, &cal.config, 20, 3, opts.event_cap).unwrap();
    assert_eq!(again, cal.estimate, "probes use common random numbers");
}

#[test]
fn realized_cost_matches_trapezoid_oracle() {
    let m = three_node();
    let c = ControlConfig::uniform(3, 0.0, 2.0, 1.0, 3.0, 0.5).with_grid_steps(40);
    let p = FeedbackPolicy::build(&m, &c).unwrap();
    let log = simulate_controlled(&m, &p, 0.0, 2.0, 8, 100_000).unwrap().log;
    assert!(log.len() > 3);
    let fast = run_cost(&log, &m, &c, Some(&p)).unwrap();

    let points = 1_000_000;
    let dt = 2.0 / points as f64;
    let events = log.events();
    let mut next_event = 0;
    let mut lambda = m.lambda0().to_vec();
    let mut clock = 0.0;
    let mut integral = 0.0;
    let mut prev = None;
    for k in 0..=points {
        let t = k as f64 * dt;
        // events at exactly t are not yet felt: intensity is left-continuous
        while next_event < events.len() && events[next_event].time < t {
            let e = &events[next_event];
            let decay = (-m.omega() * (e.time - clock)).exp();
            lambda.iter_mut().zip(m.mu0()).for_each(|(l, mu)| *l = mu + (*l - mu) * decay);
            for &(v, a) in m.column(e.user) {
                lambda[v] += a;
            }
            clock = e.time;
            next_event += 1;
        }
        let decay = (-m.omega() * (t - clock)).exp();
        let now: Vec<f64> = lambda.iter().zip(m.mu0()).map(|(l, mu)| mu + (l - mu) * decay).collect();
        let u = optimal_intensity(&p, &IntensityVector::new(now.clone(), t), t).unwrap().u;
        let value: f64 = (0..3).map(|i| -0.5 * c.q[i] * now[i] * now[i] + 0.5 * c.s[i] * u[i] * u[i]).sum();
        if let Some(v) = prev {
            integral += 0.5 * dt * (v + value);
        }
        prev = Some(value);
        if k == points {
            integral -= 0.5 * (0..3).map(|i| c.f[i] * now[i] * now[i]).sum::<f64>();
        }
    }
    assert!((fast - integral).abs() < 1e-4 * integral.abs().max(1.0), "{fast} vs {integral}");
}

#[test]
fn feedback_stays_nonnegative_before_clamping() {
    let m = three_node();
    let c = ControlConfig::uniform(3, 0.0, 3.0, 1.0, 2.0, 1.0).with_grid_steps(120);
    let p = FeedbackPolicy::build(&m, &c).unwrap();
    for seed in 0..10 {
        let r = simulate_controlled(&m, &p, 0.0, 3.0, seed, 100_000).unwrap();
        let d = r.control.unwrap();
        assert!(d.evaluations > 0);
        assert!(d.relative_negativity() <= 1e-6, "{d:?}");
    }
}
