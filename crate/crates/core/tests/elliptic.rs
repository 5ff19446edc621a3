use monogenic::elliptic::{solve_conductivity, solve_laplace_dirichlet, Conductivity, EllipticSolver};
use monogenic::mesh::unit_ball;
use monogenic::Vec3;

fn boundary_values(m: &monogenic::mesh::VolumeMesh, f: impl Fn(&Vec3) -> f64) -> Vec<f64> {
    m.boundary().vertices().iter().map(f).collect()
}

#[test]
fn affine_and_constant_data_are_exact() {
    let m = unit_ball(0.5).unwrap();
    let u = solve_laplace_dirichlet(&m, &boundary_values(&m, |x| x.z)).unwrap();
    assert!(m.nodes().iter().zip(&u).all(|(x, v)| (x.z - v).abs() < 1e-10));
    let c = solve_laplace_dirichlet(&m, &boundary_values(&m, |_| 2.5)).unwrap();
    assert!(c.iter().all(|v| (v - 2.5).abs() < 1e-10));
}

#[test]
fn quadratic_harmonic_converges() {
    let errs: Vec<f64> = [0.5, 0.3]
        .iter()
        .map(|&h| {
            let m = unit_ball(h).unwrap();
            let exact = |x: &Vec3| x.x * x.x - x.y * x.y;
            let u = solve_laplace_dirichlet(&m, &boundary_values(&m, exact)).unwrap();
            let num: f64 = m.nodes().iter().zip(&u).map(|(x, v)| (v - exact(x)).powi(2)).sum();
            (num / m.nodes().len() as f64).sqrt()
        })
        .collect();
    assert!(errs[1] < errs[0] && errs[1] < 0.02, "{errs:?}");
}

#[test]
fn unit_factor_matches_laplace_and_constants_scale() {
    let m = unit_ball(0.5).unwrap();
    let phi = boundary_values(&m, |x| x.x * x.y + x.z);
    let a = solve_laplace_dirichlet(&m, &phi).unwrap();
    let one = Conductivity::constant(&m, 1.0).unwrap();
    let b = solve_conductivity(&m, &one, &phi).unwrap();
    assert!(a.iter().zip(&b.u).all(|(x, y)| (x - y).abs() < 1e-12));
    let f = Conductivity::from_fn(&m, |x| 1.0 + x.norm_squared()).unwrap();
    let s = solve_conductivity(&m, &f, &boundary_values(&m, |_| 3.0)).unwrap();
    assert!(s.u.iter().all(|v| (v - 3.0).abs() < 1e-10));
    assert!(s.w0.iter().zip(f.values()).all(|(w, fv)| (w - 3.0 * fv).abs() < 1e-10));
}

#[test]
fn solves_are_repeatable_and_satisfy_the_interior_equations() {
    let m = unit_ball(0.5).unwrap();
    let f = Conductivity::from_fn(&m, |x| (0.5 * x.z).exp()).unwrap();
    let solver = EllipticSolver::conductivity(&m, &f).unwrap();
    let phi = boundary_values(&m, |x| x.x - x.y * x.z);
    let a = solver.solve_u(&phi).unwrap();
    let b = solver.solve_u(&phi).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert!(solver.interior_residual(&a) < 1e-10);
}

#[test]
fn wrong_boundary_length_is_rejected() {
    let m = unit_ball(0.6).unwrap();
    assert!(solve_laplace_dirichlet(&m, &[1.0, 2.0]).is_err());
    assert!(Conductivity::new(vec![1.0, -1.0]).is_err());
}

#[test]
fn exponential_factor_matches_closed_form() {
    // div(e^{x3} grad u) = 0 is solved by u = e^{-x3}.
    let errs: Vec<f64> = [0.5, 0.3]
        .iter()
        .map(|&h| {
            let m = unit_ball(h).unwrap();
            let f = Conductivity::from_fn(&m, |x| (0.5 * x.z).exp()).unwrap();
            let exact = |x: &Vec3| (-x.z).exp();
            let s = solve_conductivity(&m, &f, &boundary_values(&m, exact)).unwrap();
            m.nodes().iter().zip(&s.u).map(|(x, v)| (v - exact(x)).abs()).fold(0.0, f64::max)
        })
        .collect();
    assert!(errs[1] < 0.7 * errs[0] && errs[1] < 1e-2, "{errs:?}");
}
