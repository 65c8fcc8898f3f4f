use proptest::prelude::*;

use sutherland_core::fock::{fock_dimension, gl_action, psi, FockSpace};
use sutherland_core::kks::{
    admissibility_closed, bc_potential_abc, couplings, KksParams, KksRep, MuParams, SpinContext,
};
use sutherland_core::lie::{
    grade_project, inner_y, max_abs, AntiHerm, CMat, CaseTag, GPair, Grade, RadialPoint, Scheme, C64,
};
use sutherland_core::polar::{
    build_kperp_basis, inertia_closed_eigen, inertia_from_definition, measure_factor_closed, measure_factor_fd,
    rel_err, FD_STEP,
};

fn case_scheme() -> impl Strategy<Value = Scheme> {
    (prop_oneof![Just(CaseTag::I), Just(CaseTag::II), Just(CaseTag::III)], 1usize..=3)
        .prop_map(|(c, n)| Scheme::for_case(c, n).unwrap())
}

fn any_scheme() -> impl Strategy<Value = Scheme> {
    (1usize..=2, 0usize..=2, 0usize..=2).prop_map(|(n, b, c)| {
        let (r, s) = (n + b.max(c), n + b.min(c));
        Scheme::new(r + s - n, n, r, s).unwrap()
    })
}

fn antiherm(dim: usize) -> impl Strategy<Value = AntiHerm> {
    prop::collection::vec(-1.0f64..1.0, 2 * dim * dim).prop_map(move |v| {
        let a = CMat::from_fn(dim, dim, |i, j| C64::new(v[2 * (i * dim + j)], v[2 * (i * dim + j) + 1]));
        AntiHerm::new((&a - a.adjoint()).scale(0.5)).unwrap()
    })
}

fn scheme_and_matrix() -> impl Strategy<Value = (Scheme, AntiHerm)> {
    any_scheme().prop_flat_map(|s| (Just(s), antiherm(s.big_n())))
}

/// Ordered angles at least `gap` apart and from the walls.
fn alcove(n: usize, gap: f64) -> impl Strategy<Value = RadialPoint> {
    prop::collection::vec(0.0f64..1.0, n + 1).prop_map(move |w| {
        let free = std::f64::consts::FRAC_PI_2 - (n as f64 + 1.0) * gap;
        let total: f64 = w.iter().sum::<f64>() + 1e-9;
        let mut q = Vec::with_capacity(n);
        let mut acc = 0.0;
        for (k, x) in w.iter().take(n).enumerate() {
            acc += x / total * free;
            q.push(acc + (k as f64 + 1.0) * gap);
        }
        RadialPoint::new(q).unwrap()
    })
}

fn scheme_and_point(gap: f64) -> impl Strategy<Value = (Scheme, RadialPoint)> {
    case_scheme().prop_flat_map(move |s| (Just(s), alcove(s.n(), gap)))
}

fn free_params() -> impl Strategy<Value = (Scheme, KksParams)> {
    let g = 0u64..5;
    let k = -4i64..=4;
    prop_oneof![
        (1usize..=3, g.clone(), k.clone(), k.clone(), k.clone())
            .prop_map(|(n, gamma, kl1, kl2, kr1)| (Scheme::case_i(n).unwrap(), KksParams::I { gamma, kl1, kl2, kr1 })),
        (1usize..=3, g.clone(), g.clone(), k.clone(), k.clone()).prop_map(|(n, gamma, gamma_tilde, kr1, kr2)| {
            (Scheme::case_ii(n).unwrap(), KksParams::II { gamma, gamma_tilde, kr1, kr2 })
        }),
        (1usize..=3, g.clone(), g.clone(), g, k).prop_map(|(n, gamma, gamma_tilde, gamma_hat, k)| {
            (Scheme::case_iii(n).unwrap(), KksParams::III { gamma, gamma_tilde, gamma_hat, k })
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gradation_is_an_orthogonal_decomposition((s, x) in scheme_and_matrix()) {
        let parts: Vec<AntiHerm> = Grade::ALL.iter().map(|&g| grade_project(&s, &x, g).unwrap()).collect();
        let sum = parts.iter().skip(1).fold(parts[0].clone(), |a, b| a.add(b));
        prop_assert!(max_abs(&(sum.matrix() - x.matrix())) < 1e-13);
        for i in 0..4 {
            for j in i + 1..4 {
                prop_assert!(inner_y(&parts[i], &parts[j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inertia_is_diagonal_in_the_adapted_basis((s, pt) in scheme_and_point(0.01)) {
        let b = build_kperp_basis(&s);
        let j = inertia_from_definition(&b, &pt).unwrap().matrix;
        let lam = inertia_closed_eigen(&b, &pt).unwrap();
        let d = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lam.clone()));
        prop_assert!((j - d).abs().max() < 1e-10);
        prop_assert!(lam.iter().all(|&l| l > 0.0));
    }

    #[test]
    fn measure_factor_fd_matches_closed_form((s, pt) in scheme_and_point(0.06)) {
        let fd = measure_factor_fd(&s, &pt, FD_STEP).unwrap();
        let closed = measure_factor_closed(&s, &pt).unwrap();
        prop_assert!(rel_err(fd, closed) <= 1e-5, "{} vs {}", fd, closed);
    }

    #[test]
    fn fock_dimension_is_binomial(modes in 1usize..=6, level in 0u64..=12) {
        let sp = FockSpace::new(modes, level).unwrap();
        prop_assert_eq!(sp.dim() as u64, fock_dimension(modes, level));
        let mut sorted = sp.basis().to_vec();
        sorted.sort();
        prop_assert_eq!(sorted.as_slice(), sp.basis());
    }

    #[test]
    fn mu_round_trip(a in 0u64..50, b in 0u64..50, c in 0u64..50) {
        prop_assert_eq!(MuParams::from_couplings(a, b, c).to_couplings(), Some((a, b, c)));
    }

    #[test]
    fn free_params_are_admissible((s, p) in free_params()) {
        let adm = admissibility_closed(&s, p.to_raw(s.n())).unwrap();
        prop_assert_eq!(adm.params, Some(p));
        prop_assert_eq!(adm.state, Some(p.invariant_state(s.n())));
        let c = couplings(&s, &p).unwrap();
        match p.case() {
            CaseTag::II => prop_assert!(c.b > c.a),
            CaseTag::III => prop_assert!(c.b > c.a && c.c > c.a),
            _ => {}
        }
    }

    #[test]
    fn equal_short_and_long_couplings_merge(a in 0u64..4, b in 0u64..4, pt in alcove(3, 0.02)) {
        let q = pt.angles();
        let (af, bf) = (a as f64, b as f64);
        let mut merged = 0.0;
        for k in 0..3 {
            for l in k + 1..3 {
                merged += af * (af + 1.0) * (1.0 / (q[k] - q[l]).sin().powi(2) + 1.0 / (q[k] + q[l]).sin().powi(2));
            }
            merged += 2.0 * (bf * bf - 0.25) / (2.0 * q[k]).sin().powi(2);
        }
        prop_assert!(rel_err(bc_potential_abc(af, bf, bf, q), merged) <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn psi_preserves_commutators(modes in 2usize..=4, level in 0u64..=4, idx in prop::array::uniform4(0usize..4)) {
        let [i, j, k, l] = idx.map(|x| x % modes);
        let sp = FockSpace::new(modes, level).unwrap();
        let lhs = gl_action(&sp, i, j).unwrap().commutator(&gl_action(&sp, k, l).unwrap());
        let mut e = CMat::zeros(modes, modes);
        if j == k {
            e[(i, l)] += C64::new(1.0, 0.0);
        }
        if l == i {
            e[(k, j)] -= C64::new(1.0, 0.0);
        }
        let rhs = psi(&sp, &e).unwrap();
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-12);
    }

    #[test]
    fn representation_is_linear((s, p) in free_params(), t in -2.0f64..2.0) {
        prop_assume!(p.to_raw(s.n()).a1 <= 8);
        let rep = KksRep::new(&s, p.to_raw(s.n())).unwrap();
        let basis = build_kperp_basis(&s);
        let v: Vec<&GPair> = basis.vectors().collect();
        let x = v[0].add(&v[v.len() - 1].scale(t));
        let lhs = rep.rho_prime(&x).unwrap();
        let rhs = rep.rho_prime(v[0]).unwrap().add(&rep.rho_prime(v[v.len() - 1]).unwrap().scale(C64::new(t, 0.0)));
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-12);
        prop_assert!(lhs.add(&lhs.adjoint()).max_abs() <= 1e-12);
    }

    #[test]
    fn spin_term_ignores_the_phase_of_v((s, p) in free_params(), phi in -3.0f64..3.0, pt in alcove(3, 0.05)) {
        prop_assume!(p.to_raw(s.n()).a1 <= 8);
        let pt = RadialPoint::new(pt.angles()[..s.n()].to_vec()).unwrap();
        let ctx = SpinContext::for_params(&s, &p).unwrap();
        for z in ctx.summands() {
            prop_assert!(z.im.abs() <= 1e-12);
        }
        let a = ctx.spin_term(&pt).unwrap();
        let b = ctx.with_phase(phi).spin_term(&pt).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}
