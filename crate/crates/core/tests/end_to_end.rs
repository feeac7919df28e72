use lzs_core::bath::BathSpec;
use lzs_core::fbm::{rabi_bath_run, structured_bath_run, DissipativeOptions};
use lzs_core::floquet::{solve, DrivenHamiltonian, PropagationOptions};
use lzs_core::hilbert::{product_index, Spin, SystemParams};
use lzs_core::unitary::{basis_state, instantaneous_probability, time_averaged_probability, up_projector};
use proptest::prelude::*;

const OMEGA: f64 = 0.0375;

fn sc(eps0_over_omega: f64, a_over_omega: f64) -> SystemParams {
    SystemParams { delta: 0.0038, eps0: eps0_over_omega * OMEGA, amp: a_over_omega * OMEGA, omega: OMEGA, omega_r: 1.0, g: 0.0019, n_max: 3 }
}

fn down0() -> lzs_core::linalg::CVector {
    basis_state(8, product_index(Spin::Down, 0, 3))
}

#[test]
fn running_average_approaches_infinite_time_average() {
    let p = sc(-3.0, 6.0);
    let sol = solve(&DrivenHamiltonian::rabi(&p), PropagationOptions { n_t: 64, tol: 1e-10, use_symmetry: true }).unwrap();
    let target = up_projector(3);
    let avg = time_averaged_probability(&sol, &down0(), &target).unwrap();
    let times: Vec<f64> = (0..64 * 4000).map(|k| k as f64 / 64.0).collect();
    let tr = instantaneous_probability(&sol, &down0(), &target, &times, "down,0", "up").unwrap();
    let mean = tr.values.iter().sum::<f64>() / tr.values.len() as f64;
    assert!((mean - avg).abs() < 0.02, "{mean} vs {avg}");
}

#[test]
fn both_bath_models_relax_to_the_bias_ground_state_off_resonance() {
    let opts = DissipativeOptions { n_t: 64, k_max: 31, ..Default::default() };
    for (eps, expected) in [(-10.5, 1.0), (10.5, 0.0)] {
        let p = sc(eps, 2.0);
        let full = rabi_bath_run(&p, &BathSpec::ohmic(0.001, 12.5, 0.0175), &opts).unwrap();
        let reduced = structured_bath_run(&p, &BathSpec::structured(0.001, 0.0019, 1.0, 0.0175), &opts).unwrap();
        assert!((full.steady_p_up - expected).abs() < 0.05, "{eps}: {}", full.steady_p_up);
        assert!((reduced.steady_p_up - expected).abs() < 0.05, "{eps}: {}", reduced.steady_p_up);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn averaged_probability_is_a_probability(eps in -30.0f64..3.3, amp in 0.0f64..20.0) {
        let p = sc(eps, amp);
        let sol = solve(&DrivenHamiltonian::rabi(&p), PropagationOptions { n_t: 64, tol: 1e-9, use_symmetry: true }).unwrap();
        let v = time_averaged_probability(&sol, &down0(), &up_projector(3)).unwrap();
        prop_assert!((-1e-9..=1.0 + 1e-9).contains(&v), "{}", v);
    }

    #[test]
    fn steady_population_is_a_probability(eps in -30.0f64..3.3, amp in 0.0f64..20.0) {
        let opts = DissipativeOptions { n_t: 64, k_max: 31, ..Default::default() };
        let r = rabi_bath_run(&sc(eps, amp), &BathSpec::ohmic(0.001, 12.5, 0.0175), &opts).unwrap();
        prop_assert!((-1e-6..=1.0 + 1e-6).contains(&r.steady_p_up), "{}", r.steady_p_up);
        prop_assert!((r.rho_steady.trace().re - 1.0).abs() < 1e-10);
    }
}
