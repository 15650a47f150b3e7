use gradflow_core::diagnostics::{discrete_energy_1d, total_mass_1d};
use gradflow_core::{Field, Grid1D, ProblemSpec1D, Scheme, Solver1D, SolverState};
use proptest::prelude::*;

fn solver(widths: &[f64], wa: f64, intensity: f64) -> Solver1D {
    let b: f64 = widths.iter().sum();
    let grid = Grid1D::from_widths(0.0, b, widths).unwrap();
    let spec = ProblemSpec1D::builder(0.0, b)
        .potential(|x| (2.0 * x).sin())
        .kernel(move |s| wa * s.cos())
        .intensity(intensity)
        .build()
        .unwrap();
    Solver1D::new(grid, spec).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn implicit_steps_keep_mass_and_sign(
        widths in prop::collection::vec(0.05f64..0.4, 3..30),
        wa in -1.0f64..1.0,
        intensity in 0.0f64..2.0,
        log_tau in -3.0f64..2.0,
        second in any::<bool>(),
    ) {
        let s = solver(&widths, wa, intensity);
        let rho: Vec<f64> = (0..widths.len()).map(|j| 1.0 + (j as f64 * 0.7).sin()).collect();
        let mut state = SolverState::new(Field::new(rho).unwrap());
        let m0 = total_mass_1d(&state.rho_curr, s.grid()).unwrap();
        let scheme = if second { Scheme::SecondOrder } else { Scheme::FirstOrder };
        for _ in 0..5 {
            s.step(scheme, &mut state, 10f64.powf(log_tau)).unwrap();
        }
        let m = total_mass_1d(&state.rho_curr, s.grid()).unwrap();
        prop_assert!(((m - m0) / m0).abs() < 1e-12);
        prop_assert!(state.rho_curr.min() >= 0.0);
    }
}

#[test]
fn first_order_energy_decreases_without_interaction() {
    let widths = vec![0.1; 40];
    let s = solver(&widths, 0.0, 0.0);
    let rho: Vec<f64> = (0..40).map(|j| if j < 10 { 3.0 } else { 0.1 }).collect();
    let mut state = SolverState::new(Field::new(rho).unwrap());
    let mut e = discrete_energy_1d(&state.rho_curr, s.grid(), s.spec()).unwrap();
    for _ in 0..20 {
        s.step(Scheme::FirstOrder, &mut state, 0.05).unwrap();
        let next = discrete_energy_1d(&state.rho_curr, s.grid(), s.spec()).unwrap();
        assert!(next <= e + 1e-12, "{next} > {e}");
        e = next;
    }
}
