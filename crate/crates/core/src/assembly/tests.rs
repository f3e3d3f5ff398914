use super::*;
use crate::field::{eval_q1, interpolate_hermite, interpolate_nodal};
use crate::sparse::dot;
use std::f64::consts::PI;

fn xorshift(seed: &mut u64) -> f64 {
    *seed ^= *seed << 13;
    *seed ^= *seed >> 7;
    *seed ^= *seed << 17;
    (*seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut s = seed | 1;
    (0..n).map(|_| xorshift(&mut s)).collect()
}

fn mode(x: f64, t: f64) -> [f64; 4] {
    // sin(pi x) cos(pi t)
    let (sx, cx) = (PI * x).sin_cos();
    let (st, ct) = (PI * t).sin_cos();
    [sx * ct, PI * cx * ct, -PI * sx * st, -PI * PI * cx * st]
}

fn setup(nx: usize, nt: usize, t_final: f64) -> (MeshSpec, DofMap, DofMap) {
    let mesh = MeshSpec::new(nx, nt, t_final).unwrap();
    let z = DofMap::new(&mesh, SpaceKind::ZhState);
    let l = DofMap::new(&mesh, SpaceKind::Q1Multiplier);
    (mesh, z, l)
}

#[test]
fn residual_row_of_stationary_parabola() {
    let (mesh, z, _) = setup(5, 6, 2.0);
    let u = interpolate_hermite(&mesh, &z, |x, _| [x * (1.0 - x), 1.0 - 2.0 * x, 0.0, 0.0]);
    let coeffs = Coefficients::default();
    for ie in 0..mesh.nx {
        for ke in 0..mesh.nt {
            for &p in &[(0.2, 0.3), (0.5, 0.5), (0.9, 0.1)] {
                let row = wave_residual_row(&mesh, &z, &coeffs, ie, ke, p);
                let v: f64 = row.iter().map(|&(g, w)| w * u[g]).sum();
                assert!((v - 2.0).abs() < 1e-12, "element ({ie},{ke}): {v}");
            }
        }
    }
    let zero = vec![0.0; z.n_free()];
    let row = wave_residual_row(&mesh, &z, &Coefficients::constant(1.0, 1.0), 2, 2, (0.4, 0.6));
    assert_eq!(row.iter().map(|&(g, w)| w * zero[g]).sum::<f64>(), 0.0);
}

#[test]
fn residual_row_of_time_parabola_on_interior_elements() {
    // t^2 violates the lateral constraint, so only elements away from x = 0, 1 see it exactly
    let (mesh, z, _) = setup(6, 4, 2.0);
    let u = interpolate_hermite(&mesh, &z, |_, t| [t * t, 0.0, 2.0 * t, 0.0]);
    for ie in 1..mesh.nx - 1 {
        for ke in 0..mesh.nt {
            let row = wave_residual_row(&mesh, &z, &Coefficients::default(), ie, ke, (0.37, 0.81));
            let v: f64 = row.iter().map(|&(g, w)| w * u[g]).sum();
            assert!((v - 2.0).abs() < 1e-12);
        }
    }
}

#[test]
fn ar_quadratic_form_of_a_wave_mode() {
    let (mesh, z, _) = setup(40, 40, 2.0);
    let a = assemble_ar(&mesh, &z, &Coefficients::default(), 1.0, &[Side::Right]).unwrap();
    let u = interpolate_hermite(&mesh, &z, mode);
    let q = a.bilinear(&u, &u);
    assert!((q / (PI * PI) - 1.0).abs() < 0.02, "a_r(y,y) = {q}");
    assert_eq!(a.symmetry_defect(), 0.0);
}

#[test]
fn boundary_form_ignores_fields_with_zero_trace() {
    let (mesh, z, _) = setup(5, 6, 2.0);
    let a = assemble_ar(&mesh, &z, &Coefficients::default(), 0.0, &[Side::Right]).unwrap();
    let mut u = random_vec(z.n_free(), 3);
    for k in 0..=mesh.nt {
        let node = mesh.node_index(mesh.nx, k);
        for local in 0..4 {
            if let Some(g) = z.global(node, local) {
                u[g] = 0.0;
            }
        }
    }
    assert!(a.bilinear(&u, &u).abs() < 1e-14);
}

#[test]
fn b_against_polynomial_and_direct_quadrature() {
    let (mesh, z, l) = setup(4, 6, 2.0);
    let coeffs = Coefficients::default();
    let b = assemble_b(&mesh, &z, &l, &coeffs).unwrap();
    // y = x(1-x) t^2, L y = 2 x(1-x) + 2 t^2, integral T/3 + 2 T^3 / 3
    let y = interpolate_hermite(&mesh, &z, |x, t| {
        [x * (1.0 - x) * t * t, (1.0 - 2.0 * x) * t * t, 2.0 * x * (1.0 - x) * t, 2.0 * (1.0 - 2.0 * x) * t]
    });
    let ones = vec![1.0; l.n_free()];
    let t_final = 2.0f64;
    let expected = t_final / 3.0 + 2.0 * t_final.powi(3) / 3.0;
    assert!((dot(&ones, &b.mul_vec(&y)) - expected).abs() < 1e-10);

    // independent quadrature loop over the pointwise residual rows
    let yr = random_vec(z.n_free(), 11);
    let lr = random_vec(l.n_free(), 12);
    let (g, w) = crate::basis::gauss_legendre(5);
    let mut direct = 0.0;
    for ke in 0..mesh.nt {
        for ie in 0..mesh.nx {
            for (a, wa) in g.iter().zip(&w) {
                for (c, wc) in g.iter().zip(&w) {
                    let row = wave_residual_row(&mesh, &z, &coeffs, ie, ke, (*a, *c));
                    let ly: f64 = row.iter().map(|&(g, v)| v * yr[g]).sum();
                    let x = (ie as f64 + a) * mesh.dx;
                    let t = (ke as f64 + c) * mesh.dt;
                    direct += wa * wc * mesh.dx * mesh.dt * ly * eval_q1(&mesh, &l, &lr, x, t);
                }
            }
        }
    }
    let via_matrix = dot(&lr, &b.mul_vec(&yr));
    assert!((direct - via_matrix).abs() < 1e-13 * direct.abs().max(1.0));
}

#[test]
fn mass_matrix_identities() {
    let (mesh, _, l) = setup(3, 5, 2.0);
    let j = assemble_j(&mesh, &l);
    let ones = vec![1.0; l.n_free()];
    assert!((j.bilinear(&ones, &ones) - 2.0).abs() < 1e-14);
    assert_eq!(j.symmetry_defect(), 0.0);

    let (mesh, _, l) = setup(2, 2, 2.0);
    let j = assemble_j(&mesh, &l);
    let centre = mesh.node_index(1, 1);
    assert!((j.get(centre, centre) - 4.0 / 9.0 * mesh.dx * mesh.dt).abs() < 1e-15);
    let eig = nalgebra::SymmetricEigen::new(j.to_dense());
    assert!(eig.eigenvalues.min() > 0.0);
}

#[test]
fn load_vector_properties() {
    let (mesh, z, _) = setup(4, 6, 2.0);
    let coeffs = Coefficients::default();
    let zero = assemble_l(&mesh, &z, &coeffs, &[ObservationTrace::zero(Side::Right)]).unwrap();
    assert!(zero.iter().all(|&v| v == 0.0));
    let one = assemble_l(&mesh, &z, &coeffs, &[ObservationTrace::analytic(Side::Right, |_| 1.0)]).unwrap();
    let y = interpolate_hermite(&mesh, &z, |x, _| [x, 1.0, 0.0, 0.0]);
    assert!((dot(&one, &y) - 2.0).abs() < 1e-13);

    let f1 = |t: f64| (3.0 * t).sin();
    let f2 = |t: f64| t * t - 1.0;
    let l1 = assemble_l(&mesh, &z, &coeffs, &[ObservationTrace::analytic(Side::Right, f1)]).unwrap();
    let l2 = assemble_l(&mesh, &z, &coeffs, &[ObservationTrace::analytic(Side::Right, f2)]).unwrap();
    let l12 = assemble_l(&mesh, &z, &coeffs, &[ObservationTrace::analytic(Side::Right, move |t| f1(t) + f2(t))]).unwrap();
    for k in 0..l12.len() {
        assert!((l12[k] - l1[k] - l2[k]).abs() < 1e-14);
    }
    let dup = [ObservationTrace::zero(Side::Right), ObservationTrace::zero(Side::Right)];
    assert!(assemble_l(&mesh, &z, &coeffs, &dup).is_err());
}

#[test]
fn consistent_load_matches_interpolant_action() {
    // l - A yhat vanishes as h -> 0 for data generated by an exact solution
    let coeffs = Coefficients::default();
    let obs = [ObservationTrace::analytic(Side::Right, |t| -PI * (PI * t).cos())];
    let mut defects = Vec::new();
    for nx in [5, 10, 20] {
        let (mesh, z, _) = setup(nx, 2 * nx, 2.0);
        let a = assemble_ar(&mesh, &z, &coeffs, mesh.h * mesh.h, &[Side::Right]).unwrap();
        let l = assemble_l(&mesh, &z, &coeffs, &obs).unwrap();
        let u = interpolate_hermite(&mesh, &z, mode);
        let d: Vec<f64> = a.mul_vec(&u).iter().zip(&l).map(|(x, y)| x - y).collect();
        // dual norm against the unit interpolant scale: use |d . u| / ||u||_A
        defects.push(dot(&d, &u).abs() / a.bilinear(&u, &u).sqrt());
    }
    assert!(defects[1] < defects[0] && defects[2] < defects[1], "{defects:?}");
}

#[test]
fn ar_is_exact_under_quadrature_refinement() {
    let (mesh, z, l) = setup(4, 8, 2.0);
    let c4 = Coefficients::constant(1.0, 0.5);
    let c6 = Coefficients::constant(1.0, 0.5).with_quadrature(6);
    let a4 = assemble_ar(&mesh, &z, &c4, 1.0, &[Side::Right]).unwrap();
    let a6 = assemble_ar(&mesh, &z, &c6, 1.0, &[Side::Right]).unwrap();
    let diff = a4.add_scaled(-1.0, &a6);
    assert!(diff.max_abs() < 1e-12, "{}", diff.max_abs());
    let b4 = assemble_b(&mesh, &z, &l, &c4).unwrap();
    let b6 = assemble_b(&mesh, &z, &l, &c6).unwrap();
    assert!(b4.add_scaled(-1.0, &b6).max_abs() < 1e-12);
}

#[test]
fn source_blocks_reduce_and_integrate_sigma() {
    let mesh = MeshSpec::new(4, 8, 2.0).unwrap();
    let z = DofMap::new(&mesh, SpaceKind::ZhZeroInitial);
    let s = DofMap::new(&mesh, SpaceKind::P1Source);
    let l = DofMap::new(&mesh, SpaceKind::Q1Multiplier);
    let coeffs = Coefficients::default().with_sigma(Sigma::one_plus_t());
    let obs = [ObservationTrace::analytic(Side::Right, |t| t.sin())];
    let sys = assemble_source_blocks(&mesh, &z, &s, &l, &coeffs, 1.0, &obs).unwrap();
    assert_eq!(sys.a.symmetry_defect(), 0.0);
    assert_eq!(sys.primal_border, mesh.nx + 1);
    let ny = z.n_free();
    let a = assemble_ar(&mesh, &z, &coeffs, 1.0, &[Side::Right]).unwrap();
    let b = assemble_b(&mesh, &z, &l, &coeffs).unwrap();
    for i in 0..ny {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            assert_eq!(sys.a.get(i, j), v);
        }
    }
    for i in 0..l.n_free() {
        let (cols, vals) = b.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            assert_eq!(sys.b.get(i, j), v);
        }
    }
    let mut v = vec![0.0; sys.n_primal()];
    v[ny..].iter_mut().for_each(|x| *x = 1.0);
    assert!((sys.a.bilinear(&v, &v) - 26.0 / 3.0).abs() < 1e-12);
    assert!(assemble_source_blocks(&mesh, &z, &s, &l, &Coefficients::default(), 1.0, &obs).is_err());
}

#[test]
fn stabilized_blocks_limit_and_positivity() {
    let (mesh, z, _) = setup(4, 8, 2.0);
    let lt = DofMap::new(&mesh, SpaceKind::ZhZeroInitial);
    let coeffs = Coefficients::default();
    let obs = [ObservationTrace::analytic(Side::Right, |t| (PI * t).cos())];
    let sys = assemble_stabilized(&mesh, &z, &lt, &coeffs, 0.3, 1e-12, &obs, 4).unwrap();
    let a = assemble_ar(&mesh, &z, &coeffs, 0.3, &[Side::Right]).unwrap();
    let scale = a.max_abs();
    assert!(sys.a.add_scaled(-1.0, &a).max_abs() <= 1e-9 * scale);
    let b = assemble_b(&mesh, &z, &lt, &coeffs).unwrap();
    assert!(sys.b.add_scaled(-1.0, &b).max_abs() <= 1e-9 * b.max_abs());
    let l = assemble_l(&mesh, &z, &coeffs, &obs).unwrap();
    for (x, y) in sys.rhs_primal.iter().zip(&l) {
        assert!((x - y).abs() <= 1e-9 * y.abs().max(1e-300) + 1e-15);
    }

    let sys = assemble_stabilized(&mesh, &z, &lt, &coeffs, 0.3, 0.5, &obs, 4).unwrap();
    let c = sys.c.as_ref().unwrap();
    assert_eq!(c.symmetry_defect(), 0.0);
    assert_eq!(sys.a.symmetry_defect(), 0.0);
    for seed in 0..100 {
        let v = random_vec(lt.n_free(), 1000 + seed);
        assert!(c.bilinear(&v, &v) > 0.0);
    }
    assert_eq!(c.bilinear(&vec![0.0; lt.n_free()], &vec![0.0; lt.n_free()]), 0.0);
    assert!(assemble_stabilized(&mesh, &z, &lt, &coeffs, 0.3, 1.0, &obs, 4).is_err());
    assert!(assemble_stabilized(&mesh, &z, &lt, &coeffs, 0.3, 0.0, &obs, 4).is_err());
}

#[test]
fn residual_norm_of_pure_source() {
    let mesh = MeshSpec::new(4, 8, 2.0).unwrap();
    let z = DofMap::new(&mesh, SpaceKind::ZhZeroInitial);
    let s = DofMap::new(&mesh, SpaceKind::P1Source);
    let coeffs = Coefficients::default().with_sigma(Sigma::one_plus_t());
    let mu = interpolate_nodal(&mesh, &s, |_, _| 1.0);
    let n = residual_norm(&mesh, &z, &coeffs, &vec![0.0; z.n_free()], Some(&mu), 5);
    assert!((n * n - 26.0 / 3.0).abs() < 1e-12);
}

#[test]
fn assembly_is_bitwise_reproducible() {
    let (mesh, z, l) = setup(6, 12, 2.0);
    let coeffs = Coefficients::default();
    let obs = [ObservationTrace::analytic(Side::Right, |t| (2.0 * t).cos())];
    let s1 = assemble_mixed(&mesh, &z, &l, &coeffs, 0.01, &obs).unwrap();
    let s2 = assemble_mixed(&mesh, &z, &l, &coeffs, 0.01, &obs).unwrap();
    assert_eq!(s1.a, s2.a);
    assert_eq!(s1.b, s2.b);
    assert_eq!(s1.rhs_primal, s2.rhs_primal);
    assert_eq!(s1.kkt_matrix().symmetry_defect(), 0.0);
}
