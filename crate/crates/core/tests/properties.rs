use std::collections::BTreeMap;
use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;
use quadprop::classical::{shift_basis, ClassicalBasis, ParticularSolution, ShiftedBasis};
use quadprop::grid::ComplexGridFunction;
use quadprop::kernel::Kernel;
use quadprop::observables::{uncertainty_diagonal, uncertainty_offdiag, Form, UncertaintyContext};
use quadprop::ode::IntegratorOptions;
use quadprop::propagate::propagate;
use quadprop::quad::QuadOptions;
use quadprop::scenario::DEFAULT_INTERVAL;
use quadprop::states::hermite::{hermite, hermite_functions};
use quadprop::states::{apply_unitary_u, StateFamily};
use quadprop::{Scenario, Variant};

struct General {
    shifted: ShiftedBasis,
    xp: ParticularSolution,
}

fn general() -> &'static General {
    static CELL: OnceLock<General> = OnceLock::new();
    CELL.get_or_init(|| {
        let sc = Scenario::full_quadratic(1.0, 1.0);
        let opts = IntegratorOptions::default();
        let basis = ClassicalBasis::standard(&sc, 0.0, &opts).unwrap();
        let xp = ParticularSolution::solve(&sc, 0.0, 0.0, 0.0, sc.interval(), &opts).unwrap();
        General {
            shifted: shift_basis(&basis, 0.0).unwrap(),
            xp,
        }
    })
}

fn families() -> &'static Vec<StateFamily> {
    static CELL: OnceLock<Vec<StateFamily>> = OnceLock::new();
    CELL.get_or_init(|| {
        let opts = IntegratorOptions {
            rtol: 1e-12,
            atol: 1e-14,
            ..IntegratorOptions::default()
        };
        ["paul-trap", "caldirola-kanai", "full-quadratic"]
            .iter()
            .map(|name| {
                let sc = Scenario::preset(name, &BTreeMap::new(), 1.0, DEFAULT_INTERVAL).unwrap();
                let basis = ClassicalBasis::from_initial_data(&sc, 0.0, (1.0, 0.2), (-0.3, 1.1), 0.0, &opts).unwrap();
                let xp = ParticularSolution::solve(&sc, 0.0, 0.0, 0.0, sc.interval(), &opts).unwrap();
                StateFamily::new(sc.system_class().variant(), &basis, Some(&xp), 0.0).unwrap()
            })
            .collect()
    })
}

fn nonzero(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo..hi, any::<bool>()).prop_map(|(x, neg)| if neg { -x } else { x })
}

fn grid_fn(vals: Vec<(f64, f64)>) -> ComplexGridFunction {
    let v = vals.into_iter().map(|(a, b)| Complex64::new(a, b)).collect();
    ComplexGridFunction::new(-1.0, 1.0, v, 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_ignores_basis_recombination(
        c in -2.0..2.0f64,
        lambda in nonzero(0.3, 3.0),
        mu in nonzero(0.3, 3.0),
        xa in -3.0..3.0f64,
        xb in -3.0..3.0f64,
        t_b in 0.1..2.5f64,
    ) {
        let g = general();
        let k0 = Kernel::new(Variant::General, &g.shifted, Some(&g.xp)).unwrap().value(xa, xb, t_b).unwrap();
        let moved = g.shifted.transformed(c, lambda, mu);
        let k1 = Kernel::new(Variant::General, &moved, Some(&g.xp)).unwrap().value(xa, xb, t_b).unwrap();
        prop_assert!((k0 - k1).norm() <= 1e-8 * k0.norm(), "{k0} vs {k1}");
    }

    #[test]
    fn hermite_three_term_recurrence(n in 1usize..200, y in -15.0..15.0f64) {
        let (Ok(a), Ok(b), Ok(c)) = (hermite(n + 1, y), hermite(n, y), hermite(n - 1, y)) else {
            return Err(TestCaseError::reject("outside f64 range"));
        };
        let rhs = 2.0 * y * b - 2.0 * n as f64 * c;
        let scale = a.abs() + (2.0 * y * b).abs() + (2.0 * n as f64 * c).abs();
        prop_assert!((a - rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn hermite_functions_obey_cramer_bound(y in -40.0..40.0f64) {
        let bound = std::f64::consts::PI.powf(-0.25) * (1.0 + 1e-12);
        for phi in hermite_functions(300, y).unwrap() {
            prop_assert!(phi.abs() <= bound);
        }
    }

    #[test]
    fn inner_product_is_hermitian_and_bounded(
        f in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 16),
        g in prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 16),
    ) {
        let (f, g) = (grid_fn(f), grid_fn(g));
        let fg = f.inner(&g).unwrap();
        let gf = g.inner(&f).unwrap();
        prop_assert!((fg - gf.conj()).norm() <= 1e-12 * (1.0 + fg.norm()));
        prop_assert!(fg.norm_sqr() <= f.norm_sq() * g.norm_sq() * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn unitary_preserves_modulus(t in 0.05..6.0f64, shift in -2.0..2.0f64) {
        let sc = Scenario::full_quadratic(1.0, 1.0);
        let psi = ComplexGridFunction::from_fn(-6.0, 6.0, 65, t, |x| {
            Complex64::new((-(x - shift) * (x - shift)).exp(), 0.3 * x)
        })
        .unwrap();
        let out = apply_unitary_u(&sc, &psi, t, 0.0, &QuadOptions::default()).unwrap();
        for (a, b) in psi.values().iter().zip(out.values()) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-14 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn uncertainty_parametrisations_agree(which in 0usize..3, t in 0.1..5.0f64, m in 0usize..20) {
        let fam = &families()[which];
        let ctx = UncertaintyContext::new(fam, t).unwrap();
        let a = uncertainty_diagonal(&ctx, m, Form::Wronskian);
        let b = uncertainty_diagonal(&ctx, m, Form::Polar);
        prop_assert!((a - b).abs() <= 1e-10 * a.abs());
        let a = uncertainty_offdiag(&ctx, m, 2, Form::Wronskian).unwrap();
        let b = uncertainty_offdiag(&ctx, m, 2, Form::Polar).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn caldirola_kanai_mass_stays_positive(gamma in -0.8..0.8f64, m0 in 0.1..5.0f64, t in 0.0..10.0f64) {
        let mut p = BTreeMap::new();
        p.insert("gamma".to_owned(), gamma);
        p.insert("m0".to_owned(), m0);
        let sc = Scenario::preset("caldirola-kanai", &p, 1.0, DEFAULT_INTERVAL).unwrap();
        prop_assert!(sc.evaluate(t).unwrap().mass > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn propagation_preserves_norm(
        centre in -2.0..2.0f64,
        k in -2.0..2.0f64,
        width in 0.6..1.5f64,
        t_b in 0.1..2.5f64,
    ) {
        let sc = Scenario::sho(1.0, 1.0);
        let basis = ClassicalBasis::standard(&sc, 0.0, &IntegratorOptions::default()).unwrap();
        let kernel = Kernel::new(Variant::Undriven, &shift_basis(&basis, 0.0).unwrap(), None).unwrap();
        let psi = ComplexGridFunction::from_fn(-14.0, 14.0, 1024, 0.0, |x| {
            let z = (x - centre) / width;
            (Complex64::new(-0.5 * z * z, k * x)).exp()
        })
        .unwrap();
        let out = propagate(&kernel, &psi, t_b).unwrap();
        prop_assert!((out.norm_sq() - psi.norm_sq()).abs() <= 1e-9 * psi.norm_sq());
    }
}
