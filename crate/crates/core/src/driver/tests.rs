use super::*;
use crate::field::interpolate_hermite;
use crate::manufactured::FIELD_MODES;
use crate::mesh::Side;
use std::f64::consts::PI;

#[test]
fn rate_of_exact_powers() {
    let pts: Vec<(f64, f64)> = [1.0, 0.5, 0.25].iter().map(|&h| (h, h * h)).collect();
    assert!((rate_fit(&pts).unwrap() - 2.0).abs() < 1e-12);
    assert!(rate_fit(&pts[..2]).is_err());
    assert!(rate_fit(&[(1.0, 1.0), (0.5, 0.0), (0.25, 1.0)]).is_err());
}

fn interpolation_error(nx: usize) -> f64 {
    let mesh = MeshSpec::square_cells(nx, 2.0).unwrap();
    let zmap = DofMap::new(&mesh, SpaceKind::ZhState);
    let y = interpolate_hermite(&mesh, &zmap, |x, t| {
        let (sx, cx) = (PI * x).sin_cos();
        let (st, ct) = (PI * t).sin_cos();
        [sx * ct, PI * cx * ct, -PI * sx * st, -PI * PI * cx * st]
    });
    error_l2_qt(&mesh, &zmap, &y, &FourierState::single_mode(), 5).rel.unwrap()
}

#[test]
fn interpolant_error_decays_like_h4() {
    let (e1, e2) = (interpolation_error(4), interpolation_error(8));
    assert!(e1 / e2 >= 12.0, "{e1} {e2}");
}

#[test]
fn zero_field_has_unit_relative_error() {
    let mesh = MeshSpec::square_cells(5, 2.0).unwrap();
    let zmap = DofMap::new(&mesh, SpaceKind::ZhState);
    let zero = vec![0.0; zmap.n_free()];
    let ex1 = ex1_series(FIELD_MODES).unwrap();
    let e = error_l2_qt(&mesh, &zmap, &zero, &ex1, 5);
    // quadrature of the exact field vs its Parseval norm
    assert!((e.rel.unwrap() - 1.0).abs() < 1e-3, "{e:?}");
    let t = trace_error(&mesh, &zmap, &zero, &FourierState::single_mode(), Side::Right, 8);
    assert!((t.rel.unwrap() - 1.0).abs() < 1e-12);
}

fn sine_table(knots: usize) -> MuSpec {
    let x: Vec<f64> = (0..=knots).map(|i| i as f64 / knots as f64).collect();
    let value = x.iter().map(|v| (PI * v).sin()).collect();
    MuSpec::Table { x, value }
}

#[test]
fn hminus1_norm_of_a_sine() {
    let mesh = MeshSpec::square_cells(10, 2.0).unwrap();
    let zero = vec![0.0; 11];
    let e = error_mu_hminus1(&mesh, &zero, &sine_table(2000), 100_000).unwrap();
    let exact = 1.0 / (PI * 2f64.sqrt());
    assert!((e.abs - exact).abs() < 1e-3 * exact);
    assert!((e.rel.unwrap() - 1.0).abs() < 1e-12);
    let z = MuSpec::Table {
        x: vec![0.0, 1.0],
        value: vec![0.0, 0.0],
    };
    let e = error_mu_hminus1(&mesh, &zero, &z, 1000).unwrap();
    assert_eq!(e.abs, 0.0);
    assert_eq!(e.rel, None);
}

#[test]
fn hminus1_grid_norm_agrees_with_spectral_sum() {
    for mu in [MuSpec::ex3(), MuSpec::ex4(), MuSpec::ex5()] {
        let grid = metrics::mu_hminus1_norm(&mu, 100_000);
        let spectral = mu.hminus1_norm_sq_spectral(2000).unwrap().sqrt();
        assert!((grid - spectral).abs() < 5e-3 * spectral, "{mu:?}: {grid} vs {spectral}");
    }
}

fn interpolated_source_error(nx: usize, mu: &MuSpec) -> f64 {
    let mesh = MeshSpec::square_cells(nx, 2.0).unwrap();
    let nodal: Vec<f64> = (0..=nx).map(|i| mu.eval(i as f64 / nx as f64)).collect();
    error_mu_hminus1(&mesh, &nodal, mu, 100_000).unwrap().abs
}

#[test]
fn interpolated_sources() {
    // apex on a node: the interpolant is exact
    let exact = interpolated_source_error(20, &MuSpec::Hat { theta: 0.5 });
    assert!(exact < 1e-10, "{exact}"); // roundoff of 1e5 cancelling cell moments
    // apex inside a cell: only that cell errs, O(h^2) in L^1
    let (e1, e2) = (interpolated_source_error(20, &MuSpec::ex3()), interpolated_source_error(40, &MuSpec::ex3()));
    assert!(e1 / e2 > 3.5, "{e1} {e2}");
}

#[test]
fn config_validation() {
    let mut cfg = ProblemConfig::default();
    cfg.validate().unwrap();
    cfg.formulation = Formulation::Source;
    assert!(cfg.validate().is_err());
    cfg.example = Example::Ex4;
    cfg.validate().unwrap();
    cfg.formulation = Formulation::Mixed;
    assert!(cfg.validate().is_err());
    let mut cfg = ProblemConfig {
        formulation: Formulation::Stabilized,
        alpha: 1.0,
        ..ProblemConfig::default()
    };
    assert!(cfg.validate().is_err());
    cfg.alpha = 0.5;
    cfg.r = RPolicy::Const(0.0);
    assert!(cfg.validate().is_err());
    let cfg = ProblemConfig {
        example: Example::File,
        ..ProblemConfig::default()
    };
    assert!(cfg.validate().is_err());
}

#[test]
fn names_round_trip() {
    for e in Example::ALL {
        assert_eq!(e.name().parse::<Example>().unwrap(), e);
    }
    for f in Formulation::ALL {
        assert_eq!(f.to_string().parse::<Formulation>().unwrap(), f);
    }
    assert_eq!("dual_cg".parse::<Formulation>().unwrap(), Formulation::DualCg);
    for r in [RPolicy::H, RPolicy::H2, RPolicy::H4, RPolicy::Const(0.01), RPolicy::Const(100.0)] {
        assert_eq!(r.to_string().parse::<RPolicy>().unwrap(), r);
    }
    let err = "ex2".parse::<Example>().unwrap_err().to_string();
    assert!(err.contains("ex1") && err.contains("single-mode"));
}

#[test]
fn zero_observation_gives_zero_reconstruction() {
    let cfg = ProblemConfig {
        nx: 6,
        ..ProblemConfig::default()
    };
    let obs = ObservationTrace::zero(Side::Right);
    let zero_oracle = Oracle {
        field: FourierState::free(vec![0.0], vec![0.0]).unwrap(),
        trace: FourierState::free(vec![0.0], vec![0.0]).unwrap(),
        mu: None,
    };
    let rec = reconstruct_with(&cfg, &obs, Some(&zero_oracle)).unwrap();
    assert!(rec.state.iter().chain(&rec.multiplier).all(|&v| v == 0.0));
    let e = rec.report.state_error.unwrap();
    assert_eq!(e.abs, 0.0);
    assert_eq!(e.rel, None);

    let cfg = ProblemConfig {
        nx: 6,
        example: Example::Ex3,
        formulation: Formulation::Source,
        r: RPolicy::H4,
        ..ProblemConfig::default()
    };
    let rec = reconstruct_with(&cfg, &obs, None).unwrap();
    assert!(rec.source.unwrap().iter().all(|&v| v == 0.0));
    assert!(rec.state.iter().all(|&v| v == 0.0));
}

#[test]
fn mixed_and_dual_cg_agree() {
    let mut cfg = ProblemConfig {
        nx: 8,
        r: RPolicy::Const(1.0),
        field_modes: 400,
        trace_modes: 2000,
        ..ProblemConfig::default()
    };
    let direct = run(&cfg).unwrap();
    cfg.formulation = Formulation::DualCg;
    let cg = run(&cfg).unwrap();
    assert!(cg.report.diagnostics.converged);
    let a = direct.report.rel_state_error().unwrap();
    let b = cg.report.rel_state_error().unwrap();
    assert!((a - b).abs() < 1e-6 * a);
    assert!((direct.report.norm_multiplier - cg.report.norm_multiplier).abs() < 1e-6 * direct.report.norm_multiplier);
    assert!((direct.report.norm_residual - cg.report.norm_residual).abs() < 1e-6 * direct.report.norm_residual);
}

fn small_reports() -> Vec<ReconstructionReport> {
    [4, 8, 16]
        .iter()
        .map(|&nx| {
            let cfg = ProblemConfig {
                nx,
                example: Example::SingleMode,
                ..ProblemConfig::default()
            };
            run(&cfg).unwrap().report
        })
        .collect()
}

#[test]
fn tables_are_formatted_and_reproducible() {
    let reports = small_reports();
    let mut first = Vec::new();
    table::write_convergence_csv(&reports, &mut first).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "h,rel_state_err,rel_trace_err,norm_Ly,norm_lambda,iters");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "3.53553e-1");
    for v in &row[1..5] {
        let (mantissa, _) = v.split_once('e').unwrap();
        assert_eq!(mantissa.trim_start_matches('-').len(), 7, "{v}");
    }

    let mut second = Vec::new();
    table::write_convergence_csv(&small_reports(), &mut second).unwrap();
    assert_eq!(first, second);

    let mut transposed = Vec::new();
    table::write_table_csv(&reports, &mut transposed).unwrap();
    let text = String::from_utf8(transposed).unwrap();
    assert!(text.starts_with("quantity,3.53553e-1,1.76777e-1,8.83883e-2,rate\n"));
    assert!(text.contains("\nmultiplier_dofs,45,153,561,\n"));
    let rates = Rates::fit(&reports);
    assert!(rates.state.unwrap() > 3.0 && rates.mu.is_none());
}
