use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use fraclap::constants::{frac_constant, log_constants, tau_minus_one};
use fraclap::fem::{assemble_frac, assemble_log, assemble_mass, mesh_interval};
use fraclap::forms::{elementary_slacks, energy_log, energy_s};
use fraclap::harness::zygmund_check;
use fraclap::operators::frac_lap_point;
use fraclap::spectra::{rayleigh, solve_dense, solve_generalized};
use fraclap::testlab::{make_bump, BumpKind};

fn kind() -> impl Strategy<Value = BumpKind> {
    prop_oneof![Just(BumpKind::Smooth), Just(BumpKind::PolynomialC2)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tau_matches_constant_ratio(dim in 1usize..5, s in 0.001f64..0.25) {
        let c = frac_constant(dim, s).unwrap();
        let lc = log_constants(dim).unwrap();
        prop_assert!(c > 0.0);
        let tau = c / (s * lc.c_log) - 1.0;
        let t = tau_minus_one(dim, s).unwrap();
        prop_assert!((tau - t).abs() <= 1e-12 * (1.0 + t.abs()) + 1e-13 / s);
        prop_assert!((lc.omega * lc.c_log - 2.0).abs() < 1e-13);
    }

    #[test]
    fn elementary_bounds_hold(lr in -7.0f64..7.0, s in 0.0005f64..0.25) {
        let (a, b) = elementary_slacks(lr.exp(), s).unwrap();
        prop_assert!(a >= 0.0 && b >= 0.0, "slacks {a} {b}");
    }

    #[test]
    fn translation_equivariance(k in kind(), x in -1.2f64..1.2, h in -2.0f64..2.0, s in 0.02f64..0.25) {
        let u = make_bump(k, &[0.0], 1.0, 1.0).unwrap();
        let v = make_bump(k, &[h], 1.0, 1.0).unwrap();
        let a = frac_lap_point(&u, s, &[x], 1e-10).unwrap();
        let b = frac_lap_point(&v, s, &[x + h], 1e-10).unwrap();
        prop_assert!((a.value - b.value).abs() <= 1e-9);
    }

    #[test]
    fn operator_scaling(x in -0.9f64..0.9, r in 0.5f64..2.0, s in 0.02f64..0.25) {
        let u = make_bump(BumpKind::Smooth, &[0.0], 1.0, 1.0).unwrap();
        let ur = make_bump(BumpKind::Smooth, &[0.0], r, 1.0).unwrap();
        let a = frac_lap_point(&ur, s, &[r * x], 1e-10).unwrap();
        let b = frac_lap_point(&u, s, &[x], 1e-10).unwrap();
        prop_assert!((a.value - r.powf(-2.0 * s) * b.value).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn forms_symmetric_and_homogeneous(
        k1 in kind(), k2 in kind(),
        c1 in -0.5f64..0.5, c2 in -0.5f64..0.5,
        a in 0.5f64..2.0, s in 0.05f64..0.25,
    ) {
        let u = make_bump(k1, &[c1], 0.8, 1.0).unwrap();
        let v = make_bump(k2, &[c2], 1.1, 1.0).unwrap();
        let au = make_bump(k1, &[c1], 0.8, a).unwrap();
        let uv = energy_s(&u, &v, s, 1e-11).unwrap().value;
        let vu = energy_s(&v, &u, s, 1e-11).unwrap().value;
        let auv = energy_s(&au, &v, s, 1e-11).unwrap().value;
        prop_assert!((uv - vu).abs() <= 1e-10);
        prop_assert!((auv - a * uv).abs() <= 1e-10 * a.max(1.0));
        let luv = energy_log(&u, &v, 1e-11).unwrap().value;
        let lvu = energy_log(&v, &u, 1e-11).unwrap().value;
        prop_assert!((luv - lvu).abs() <= 1e-10);
    }

    #[test]
    fn rayleigh_dominates_ground_state(s in 0.01f64..0.5, seed in 0u64..1000) {
        let mesh = mesh_interval(-1.0, 1.0, 24).unwrap();
        let a = assemble_frac(&mesh, s, 1e-10).unwrap();
        let m = assemble_mass(&mesh).unwrap();
        let sp = solve_generalized(&a, &m, 1).unwrap();
        let x = DVector::from_fn(a.size(), |i, _| (((i as u64 + 1) * (seed + 7)) % 13) as f64 - 6.0);
        prop_assume!(x.norm() > 0.0);
        let q = rayleigh(&a.entries, &m.entries, &x).unwrap();
        prop_assert!(q >= sp.eigenvalues[0] - 1e-10);
    }

    #[test]
    fn galerkin_refinement_is_monotone(s in 0.01f64..0.5, n in 6usize..20) {
        let coarse = mesh_interval(-1.0, 1.0, n).unwrap();
        let fine = mesh_interval(-1.0, 1.0, 2 * n).unwrap();
        let k = 4.min(n - 1);
        let ev = |mesh: &fraclap::fem::Mesh, log: bool| {
            let a = if log { assemble_log(mesh, 1e-10).unwrap() } else { assemble_frac(mesh, s, 1e-10).unwrap() };
            solve_generalized(&a, &assemble_mass(mesh).unwrap(), k).unwrap().eigenvalues
        };
        for log in [false, true] {
            let (c, f) = (ev(&coarse, log), ev(&fine, log));
            for j in 0..k {
                prop_assert!(f[j] <= c[j] + 1e-10);
            }
        }
    }

    #[test]
    fn matrix_scaling(s in 0.01f64..0.25, r in 0.5f64..3.0) {
        let a1 = assemble_frac(&mesh_interval(-1.0, 1.0, 16).unwrap(), s, 1e-11).unwrap();
        let ar = assemble_frac(&mesh_interval(-r, r, 16).unwrap(), s, 1e-11).unwrap();
        let diff = (&ar.entries - &a1.entries * r.powf(1.0 - 2.0 * s)).amax();
        prop_assert!(diff <= 1e-10 * a1.entries.amax() * r.powf(1.0 - 2.0 * s).max(1.0));
    }

    #[test]
    fn generalized_pairs_are_mass_orthonormal(vals in prop::collection::vec(-1.0f64..1.0, 36)) {
        let b = DMatrix::from_row_slice(6, 6, &vals);
        let a = &b + b.transpose();
        let m = &b * b.transpose() + DMatrix::identity(6, 6) * 0.5;
        let sp = solve_dense(&a, &m, 6).unwrap();
        let v = &sp.eigenvectors;
        let g = v.transpose() * &m * v;
        prop_assert!((g - DMatrix::identity(6, 6)).amax() < 1e-9);
        prop_assert!(sp.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn zygmund_estimate_nonnegative(pts in prop::collection::vec((-1.0f64..1.0, 1e-3f64..0.5), 1..50), tau in 0.1f64..0.9) {
        let (v, _) = zygmund_check(|x: f64| (3.0 * x).sin(), tau, &pts).unwrap();
        prop_assert!(v >= 0.0);
    }
}
