use super::*;
use crate::assembly::ObservationTrace;

#[test]
fn ex1_coefficients_and_norms() {
    let fs = ex1_series(FIELD_MODES).unwrap();
    let (a, b) = fs.free_coefficients().unwrap();
    assert_eq!(a[1], 0.0);
    assert!((a[0] - 4.0 * SQRT_2 / (PI * PI)).abs() < 1e-15);
    assert!((b[0] - 1.0 / PI).abs() < 1e-15);
    let norm = fs.l2_norm_sq(2.0).sqrt();
    assert!((norm - 0.58663).abs() < 1e-4, "{norm}");
    assert!(fs.tail_bound_sq().unwrap() < 1e-10);
}

#[test]
fn ex1_trace_norm_squared_tends_to_25_over_3() {
    let fs = ex1_series(TRACE_MODES).unwrap();
    let sq = fs.trace_norm_sq(2.0);
    assert!((sq - 8.33298).abs() < 1e-2, "{sq}");
    assert!((sq - 25.0 / 3.0).abs() < 1e-3);
}

#[test]
fn ex1_initial_state_is_the_hat() {
    let fs = ex1_series(FIELD_MODES).unwrap();
    for x in [0.1, 0.25, 0.4, 0.5, 0.8] {
        let exact = 1.0 - (2.0 * x - 1.0f64).abs();
        assert!((fs.eval_state(x, 0.0, (0, 0)) - exact).abs() < 1e-3);
    }
    for t in [0.0, 0.3, 1.7] {
        assert!(fs.eval_state(0.0, t, (0, 0)).abs() < 1e-13);
        assert!(fs.eval_state(1.0, t, (0, 0)).abs() < 1e-12);
    }
}

#[test]
fn single_mode_is_exact() {
    let fs = FourierState::single_mode();
    for &(x, t) in &[(0.3, 0.2), (0.71, 1.4), (0.5, 2.0)] {
        assert!((fs.eval_state(x, t, (0, 0)) - (PI * x).sin() * (PI * t).cos()).abs() < 1e-15);
    }
    for t in [0.0, 0.4, 1.9] {
        assert!((fs.normal_trace(Side::Right, t) + PI * (PI * t).cos()).abs() < 1e-14);
        assert!((fs.normal_trace(Side::Left, t) + PI * (PI * t).cos()).abs() < 1e-14);
    }
    assert!(fs.normal_trace(Side::Right, 0.5).abs() < 1e-14);
}

#[test]
fn parseval_matches_space_time_quadrature() {
    let fs = ex1_series(500).unwrap();
    let (g, gw) = gauss_legendre(6);
    let n = 80;
    let pts = |len: f64| -> (Vec<f64>, Vec<f64>) {
        let h = len / n as f64;
        (0..n)
            .flat_map(|j| g.iter().zip(&gw).map(move |(x, w)| ((j as f64 + x) * h, w * h)))
            .unzip()
    };
    let (xs, wx) = pts(1.0);
    let (ts, wt) = pts(2.0);
    let grid = fs.eval_grid(&xs, &ts, (0, 0));
    let mut sum = 0.0;
    for (j, w_t) in wt.iter().enumerate() {
        for (i, w_x) in wx.iter().enumerate() {
            sum += w_t * w_x * grid[(j, i)].powi(2);
        }
    }
    let parseval = fs.l2_norm_sq(2.0);
    assert!((sum - parseval).abs() < 1e-3 * parseval);
}

#[test]
fn grid_evaluation_matches_pointwise() {
    let fs = source_series(&MuSpec::ex3(), Sigma::one_plus_t(), 60).unwrap();
    let xs = [0.1, 0.5, 0.93];
    let ts = [0.0, 0.7, 1.99];
    for deriv in [(0, 0), (1, 0), (0, 1), (2, 0), (0, 2)] {
        let grid = fs.eval_grid(&xs, &ts, deriv);
        for (j, &t) in ts.iter().enumerate() {
            for (i, &x) in xs.iter().enumerate() {
                assert!((grid[(j, i)] - fs.eval_state(x, t, deriv)).abs() < 1e-12);
            }
        }
    }
    let trace = fs.normal_trace_many(Side::Right, &ts);
    for (v, &t) in trace.iter().zip(&ts) {
        assert!((v - fs.normal_trace(Side::Right, t)).abs() < 1e-12);
    }
}

#[test]
fn recurrence_trace_matches_direct_summation() {
    let fs = ex1_series(TRACE_MODES).unwrap();
    for t in [0.0, 0.1234, 1.0 / 3.0 + 1e-3, 0.77, 1.5 - 1e-3, 2.0] {
        for side in [Side::Left, Side::Right] {
            let direct = side.normal() * fs.eval_state(side.x(), t, (1, 0));
            let fast = fs.normal_trace(side, t);
            assert!((direct - fast).abs() < 1e-9, "t={t} {side}: {direct} vs {fast}");
        }
    }
}

#[test]
fn affine_duhamel_closed_form_matches_quadrature() {
    let m = vec![0.3, -0.2, 0.05];
    let closed = FourierState::driven(m.clone(), Sigma::one_plus_t()).unwrap();
    let numeric = FourierState::driven(m, Sigma::Custom(Arc::new(|t| 1.0 + t))).unwrap();
    for k in 1..=3 {
        for t in [0.0, 0.37, 1.0, 1.8] {
            let a = closed.time_coefficient(k, t);
            let b = numeric.time_coefficient(k, t);
            for d in 0..3 {
                assert!((a[d] - b[d]).abs() < 1e-10, "k={k} t={t} d={d}");
            }
        }
    }
}

#[test]
fn driven_modes_solve_their_ode_from_rest() {
    let fs = source_series(&MuSpec::ex4(), Sigma::one_plus_t(), 8).unwrap();
    let m = MuSpec::ex4().sine_coefficients(8).unwrap();
    let h = 1e-4;
    for k in 1..=8 {
        let w = k as f64 * PI;
        assert_eq!(fs.time_coefficient(k, 0.0)[0], 0.0);
        assert!(fs.time_coefficient(k, 0.0)[1].abs() < 1e-15);
        for t in [0.3, 1.1, 1.9] {
            let v = |s: f64| fs.time_coefficient(k, s)[0];
            let second = (v(t + h) - 2.0 * v(t) + v(t - h)) / (h * h);
            let residual = second + w * w * v(t) - 2.0 * (1.0 + t) * m[k - 1];
            assert!(residual.abs() < 1e-5 * (1.0 + w * w * v(t).abs()), "k={k} t={t}: {residual}");
            let first = (v(t + h) - v(t - h)) / (2.0 * h);
            assert!((first - fs.time_coefficient(k, t)[1]).abs() < 1e-6);
        }
    }
}

#[test]
fn zero_source_gives_zero_state() {
    let mu = MuSpec::Table {
        x: vec![0.0, 1.0],
        value: vec![0.0, 0.0],
    };
    let fs = source_series(&mu, Sigma::one_plus_t(), 20).unwrap();
    assert_eq!(fs.l2_norm_sq(2.0), 0.0);
    assert_eq!(fs.eval_state(0.4, 1.3, (0, 0)), 0.0);
}

#[test]
fn driven_parseval_matches_quadrature() {
    let fs = source_series(&MuSpec::ex3(), Sigma::one_plus_t(), 40).unwrap();
    let (g, gw) = gauss_legendre(8);
    let n = 100;
    let mut sum = 0.0;
    for j in 0..n {
        for (x, w) in g.iter().zip(&gw) {
            let t = (j as f64 + x) * 2.0 / n as f64;
            let e: f64 = (1..=40).map(|k| fs.time_coefficient(k, t)[0].powi(2)).sum();
            sum += w * 2.0 / n as f64 * e / 2.0;
        }
    }
    assert!((sum - fs.l2_norm_sq(2.0)).abs() < 1e-12 * sum);
}

#[test]
fn sampled_observation_matches_trace_and_noise_is_reproducible() {
    let mesh = MeshSpec::square_cells(10, 2.0).unwrap();
    let fs = ex1_series(200).unwrap();
    let clean = sample_observation(&fs, &mesh, Side::Right, None).unwrap();
    for t in [0.1, 0.77, 1.5] {
        assert_eq!(clean.eval(t), fs.normal_trace(Side::Right, t));
    }
    let spec = NoiseSpec {
        amplitude: 1e-3,
        seed: 11,
    };
    let a = sample_observation(&fs, &mesh, Side::Right, Some(spec)).unwrap();
    let b = sample_observation(&fs, &mesh, Side::Right, Some(spec)).unwrap();
    let (ta, va) = a.tabulate(2.0, 0);
    let (_, vb) = b.tabulate(2.0, 0);
    assert_eq!(va, vb);
    assert_eq!(ta.len(), 8 * mesh.nt + 1);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("obs.csv");
    a.save_csv(&path, &ta).unwrap();
    let back = ObservationTrace::load_csv(&path, Side::Right, 2.0).unwrap();
    for (t, v) in ta.iter().zip(&va) {
        assert!((back.eval(*t) - v).abs() < 1e-12);
    }
}
