use proptest::prelude::*;
use ttstar_core::datamaps::{
    asymptotic_to_monodromy, gen_fun_f, global_rho, monodromy_to_asymptotic, reduced_len,
    verify_generating_function_reflected, verify_symplectic, AsymptoticData,
};

fn generic_case() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    case_within(0.95)
}

fn case_within(bound: f64) -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
    (1usize..=6).prop_flat_map(move |n| {
        let l = reduced_len(n);
        (
            Just(n),
            prop::collection::vec(-bound..bound, l),
            prop::collection::vec(-2.0f64..2.0, l),
        )
    })
}

proptest! {
    #[test]
    fn round_trip_is_identity((n, gamma, rho) in generic_case()) {
        let a = AsymptoticData::new(n, gamma, rho).unwrap();
        let back = monodromy_to_asymptotic(&asymptotic_to_monodromy(&a).unwrap()).unwrap();
        for (x, y) in a.gamma.iter().chain(&a.rho).zip(back.gamma.iter().chain(&back.rho)) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn global_rho_has_unit_eigenvalues((n, gamma, _) in generic_case()) {
        let a = AsymptoticData::new(n, gamma.clone(), global_rho(n, &gamma).unwrap()).unwrap();
        let md = asymptotic_to_monodromy(&a).unwrap();
        prop_assert!(md.log_e.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn log_e_shifts_with_rho((n, gamma, rho) in generic_case(), shift in -1.0f64..1.0) {
        let a = AsymptoticData::new(n, gamma.clone(), rho.clone()).unwrap();
        let moved: Vec<f64> = rho.iter().map(|r| r + shift).collect();
        let b = AsymptoticData::new(n, gamma, moved).unwrap();
        let (ea, eb) = (asymptotic_to_monodromy(&a).unwrap(), asymptotic_to_monodromy(&b).unwrap());
        for (x, y) in ea.log_e.iter().zip(&eb.log_e) {
            prop_assert!((y - x - shift).abs() <= 1e-12);
        }
    }

    #[test]
    fn jacobian_is_symmetric((n, gamma, _) in generic_case()) {
        let r = verify_symplectic(n, &gamma, 1e-4).unwrap();
        prop_assert!(r.max_asymmetry <= 1e-7, "{:?}", r);
    }

    // away from the genericity boundary, where the FD truncation error grows
    #[test]
    fn f_generates_reflected_map((n, gamma, rho) in case_within(0.8)) {
        let r = verify_generating_function_reflected(n, &gamma, &rho, 1e-4).unwrap();
        prop_assert!(r.max_residual <= 1e-6, "{:?}", r);
    }

    #[test]
    fn f_rho_gradient_is_minus_m((n, gamma, rho) in generic_case()) {
        let m: Vec<f64> = gamma.iter().map(|g| -0.5 * g).collect();
        let h = 1e-3;
        for i in 0..rho.len() {
            let (mut p, mut q) = (rho.clone(), rho.clone());
            p[i] += h;
            q[i] -= h;
            let d = (gen_fun_f(n, &p, &m).unwrap() - gen_fun_f(n, &q, &m).unwrap()) / (2.0 * h);
            prop_assert!((d + m[i]).abs() <= 1e-10);
        }
    }
}

#[test]
fn even_branch_inserts_zero() {
    let a = AsymptoticData::global(2, vec![0.4]).unwrap();
    let md = asymptotic_to_monodromy(&a).unwrap();
    assert_eq!(md.m, vec![-0.2]);
    assert!(md.log_e[0].abs() < 1e-14);
}
