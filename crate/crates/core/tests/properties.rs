//! Property suites over seeded random fields.

use std::f64::consts::PI;
use std::sync::OnceLock;

use hartree_core::dynamics::{evolve, EvolveOptions, Propagator};
use hartree_core::field::{forward, h1_seminorm_sq, inner, lp_norm, mass, Field};
use hartree_core::groundstate::{i_of_lambda, minimize, FlowOptions, InitialGuess};
use hartree_core::kernels::fourier_symbol;
use hartree_core::lorentz::{
    c2_estimate, decreasing_rearrangement, default_trial_fields, default_trial_kernels,
    k_lower_bound, lorentz_quasinorm, symmetric_decreasing_rearrangement, KernelSplit,
};
use hartree_core::random::SmoothRandomField;
use hartree_core::{Grid, Hartree, KernelSpec, RadialKernel};
use num_complex::Complex64;
use proptest::prelude::*;

fn random_field(seed: u64, grid: &Grid) -> Field {
    SmoothRandomField::generate(seed, grid).sample(grid)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn catalog() -> Vec<KernelSpec> {
    vec![
        KernelSpec::power_law(0.5, 1.0).unwrap(),
        KernelSpec::coulomb(),
        KernelSpec::power_law(2.0, 1.0).unwrap(),
        KernelSpec::gaussian_well(1.0, 1.0).unwrap(),
        KernelSpec::yukawa(1.0, 1.0).unwrap(),
        KernelSpec::compact_well(1.0, 1.5).unwrap(),
    ]
}

fn grid_n() -> impl Strategy<Value = usize> {
    prop_oneof![Just(16usize), Just(32usize)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn parseval(seed in any::<u64>(), n in grid_n(), length in 5.0f64..40.0) {
        let g = Grid::new(n, length).unwrap();
        let u = random_field(seed, &g);
        let spectral: f64 = forward(&u).coefficients().iter().map(|c| c.norm_sqr()).sum::<f64>()
            / g.volume();
        prop_assert!(rel(mass(&u), spectral) <= 1e-12);
    }

    #[test]
    fn norms_are_translation_invariant(
        seed in any::<u64>(),
        shift in prop::array::uniform3(-20i64..20),
        p in 1.0f64..6.0,
    ) {
        let g = Grid::new(16, 12.0).unwrap();
        let u = random_field(seed, &g);
        let v = u.circular_shift(shift);
        prop_assert!(rel(mass(&u), mass(&v)) <= 1e-12);
        prop_assert!(rel(h1_seminorm_sq(&u), h1_seminorm_sq(&v)) <= 1e-12);
        prop_assert!(rel(lp_norm(&u, p).unwrap(), lp_norm(&v, p).unwrap()) <= 1e-12);
    }

    #[test]
    fn equimeasurability(seed in any::<u64>()) {
        let g = Grid::new(16, 16.0).unwrap();
        let u = random_field(seed, &g);
        let us = symmetric_decreasing_rearrangement(&u);
        prop_assert_eq!(decreasing_rearrangement(&u), decreasing_rearrangement(&us));
    }

    #[test]
    fn lorentz_homogeneity(seed in any::<u64>(), c in 0.01f64..100.0, p in 1.1f64..4.0, q in 1.0f64..5.0) {
        let g = Grid::new(16, 16.0).unwrap();
        let u = random_field(seed, &g);
        let a = lorentz_quasinorm(&decreasing_rearrangement(&u), p, q).unwrap();
        let b = lorentz_quasinorm(&decreasing_rearrangement(&u.scaled(Complex64::new(c, 0.0))), p, q).unwrap();
        prop_assert!(rel(c * a, b) <= 1e-12);
        let w = lorentz_quasinorm(&decreasing_rearrangement(&u), p, f64::INFINITY).unwrap();
        let wb = lorentz_quasinorm(&decreasing_rearrangement(&u.scaled(Complex64::new(c, 0.0))), p, f64::INFINITY).unwrap();
        prop_assert!(rel(c * w, wb) <= 1e-12);
    }

    #[test]
    fn bounded_part_bound(seed in any::<u64>(), k in 0usize..6, radius in 0.3f64..3.0) {
        // |∫(w₁∗|u|²)|u|²| ≤ ‖w₁‖_∞·mass²
        let g = Grid::new(16, 16.0).unwrap();
        let spec = catalog()[k];
        let tail = RadialKernel::tail(spec, radius);
        let sup = spec.sup_beyond(radius);
        let u = random_field(seed, &g);
        let op = Hartree::new(tail, &g).unwrap();
        let lhs = op.interaction(&u).unwrap().abs();
        let m = mass(&u);
        prop_assert!(lhs <= sup * m * m * (1.0 + 1e-12), "{} > {}", lhs, sup * m * m);
    }

    #[test]
    fn energy_gauge_and_translation(seed in any::<u64>(), theta in 0.0f64..(2.0 * PI), shift in prop::array::uniform3(-3i64..=3)) {
        let g = Grid::new(16, 24.0).unwrap();
        let op = Hartree::new(KernelSpec::coulomb(), &g).unwrap();
        // a field well inside the box, so translations do not wrap mass
        let u = SmoothRandomField::generate_with(&mut hartree_core::random::rng(seed, 0), 12.0, hartree_core::random::DEFAULT_WIDTHS).sample(&g);
        let e = op.energy(&u).unwrap().total;
        let eg = op.energy(&u.phase_rotated(theta)).unwrap().total;
        prop_assert!(rel(e, eg) <= 1e-12);
        let et = op.energy(&u.circular_shift(shift)).unwrap().total;
        prop_assert!(rel(e, et) <= 1e-12, "{} vs {}", e, et);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn gradient_is_second_order(seed in any::<u64>(), k in 0usize..6) {
        let g = Grid::new(16, 12.0).unwrap();
        let op = Hartree::new(catalog()[k], &g).unwrap();
        let u = random_field(seed, &g);
        let v = random_field(seed.wrapping_add(1), &g);
        let exact = 2.0 * inner(&v, &op.apply(&u).unwrap()).unwrap().re;
        let fd = |eps: f64| {
            let ep = op.energy(&u.axpy(Complex64::new(eps, 0.0), &v).unwrap()).unwrap().total;
            let em = op.energy(&u.axpy(Complex64::new(-eps, 0.0), &v).unwrap()).unwrap().total;
            ((ep - em) / eps - exact).abs()
        };
        let (e2, e3) = (fd(1e-2), fd(1e-3));
        let floor = 1e-9 * exact.abs().max(1.0);
        prop_assert!(e3 <= e2 / 50.0 || e3 <= floor, "{} {}", e2, e3);
    }
}

fn k_est() -> f64 {
    static K: OnceLock<f64> = OnceLock::new();
    *K.get_or_init(|| {
        let g = Grid::new(64, 16.0).unwrap();
        let trials: Vec<Field> = default_trial_fields(&g).into_iter().map(|t| t.field).collect();
        k_lower_bound(&trials, &default_trial_kernels()).unwrap().value
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn coercivity_witness(seed in any::<u64>(), fraction in 0.01f64..0.9) {
        let spec = KernelSpec::power_law(2.0, 1.0).unwrap();
        let c2 = c2_estimate(&spec).unwrap();
        let lambda_star = 1.0 / (c2.value * k_est());
        let split = KernelSplit::at(spec, c2.split.radius).unwrap();
        let g = Grid::new(32, 16.0).unwrap();
        let op = Hartree::new(spec, &g).unwrap();
        let mut u = random_field(seed, &g);
        let lambda = fraction * lambda_star;
        u.scale_mut((lambda / mass(&u)).sqrt());
        let delta = 1.0 - lambda / lambda_star;
        let e = op.energy(&u).unwrap().total;
        let bound = -0.5 * lambda * lambda * split.tail_sup + 0.25 * delta * h1_seminorm_sq(&u);
        prop_assert!(e >= bound, "{} < {}", e, bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn flow_is_monotone_and_projects_mass(seed in any::<u64>(), lambda in 0.5f64..2.0) {
        let g = Grid::new(16, 24.0).unwrap();
        let opts = FlowOptions { max_iter: 200, seed, ..FlowOptions::default() }.with_initial(InitialGuess::Random);
        let r = minimize(lambda, KernelSpec::yukawa(2.0, 0.5).unwrap(), &g, &opts).unwrap();
        prop_assert!(rel(mass(&r.u), lambda) <= 1e-12);
        for (i, w) in r.energy_trace.windows(2).enumerate() {
            let kinetic = 0.5 * r.h1_trace[i];
            let slack = 1e-13 * (kinetic + (w[0] - kinetic).abs());
            prop_assert!(w[1] <= w[0] + slack, "step {}: {} -> {}", i, w[0], w[1]);
        }
    }

    #[test]
    fn strang_step_is_reversible(seed in any::<u64>(), k in 0usize..6, dt in 0.005f64..0.1) {
        let g = Grid::new(16, 16.0).unwrap();
        let op = Hartree::new(catalog()[k], &g).unwrap();
        let u = random_field(seed, &g);
        let fwd = Propagator::hartree(&op, dt).unwrap().step(&u).unwrap();
        let back = Propagator::hartree(&op, -dt).unwrap().step(&fwd).unwrap();
        prop_assert!(mass(&back.sub(&u).unwrap()).sqrt() <= 1e-10 * mass(&u).sqrt());
    }

    #[test]
    fn energy_drift_is_second_order(amplitude in 0.5f64..1.5, width in 1.3f64..2.0) {
        let g = Grid::new(32, 20.0).unwrap();
        let op = Hartree::new(KernelSpec::coulomb(), &g).unwrap();
        let u = Field::from_fn(g, |x, y, z| {
            Complex64::new(amplitude * (-(x * x + y * y + z * z) / (2.0 * width * width)).exp(), 0.0)
        });
        let drift = |dt: f64| {
            let opts = EvolveOptions { t_final: 1.0, dt: Some(dt), sample_every: 1, ..Default::default() };
            evolve(&u, Some(&op), &opts, None).unwrap().energy_drift()
        };
        let ratio = drift(0.01) / drift(0.02);
        prop_assert!((0.2..=0.35).contains(&ratio), "ratio {}", ratio);
    }
}

#[test]
fn mass_is_conserved_over_long_runs() {
    let g = Grid::new(16, 16.0).unwrap();
    for (i, spec) in catalog().into_iter().enumerate() {
        let op = Hartree::new(spec, &g).unwrap();
        let u = random_field(100 + i as u64, &g);
        let opts = EvolveOptions {
            t_final: 100.0,
            dt: Some(1e-2),
            sample_every: 1000,
            ..Default::default()
        };
        let trace = evolve(&u, Some(&op), &opts, None).unwrap();
        assert_eq!(trace.steps, 10_000);
        assert!(trace.mass_drift() <= 1e-11, "{}: {:e}", spec.name(), trace.mass_drift());
    }
}

#[test]
fn kinetic_matches_centered_differences_to_second_order() {
    let gap = |n: usize| {
        let g = Grid::new(n, 12.0).unwrap();
        let u = Field::from_fn(g, |x, y, z| Complex64::new((-(x * x + y * y + z * z) / 2.0).exp(), 0.0));
        let h = g.spacing();
        let v = u.values();
        let mut sum = 0.0;
        for idx in 0..g.len() {
            let [ix, iy, iz] = g.unravel(idx);
            let at = |a: usize, b: usize, c: usize| v[g.index(a % n, b % n, c % n)];
            let dx = (at(ix + 1, iy, iz) - at(ix + n - 1, iy, iz)) / (2.0 * h);
            let dy = (at(ix, iy + 1, iz) - at(ix, iy + n - 1, iz)) / (2.0 * h);
            let dz = (at(ix, iy, iz + 1) - at(ix, iy, iz + n - 1)) / (2.0 * h);
            sum += dx.norm_sqr() + dy.norm_sqr() + dz.norm_sqr();
        }
        rel(h1_seminorm_sq(&u), sum * g.cell_volume())
    };
    let (coarse, fine) = (gap(16), gap(32));
    assert!(fine * 3.0 <= coarse, "{coarse:e} {fine:e}");
}

#[test]
fn symbols_are_cached_and_reproducible() {
    let g = Grid::new(16, 10.0).unwrap();
    let a = fourier_symbol(KernelSpec::coulomb(), &g).unwrap();
    let b = fourier_symbol(KernelSpec::coulomb(), &g).unwrap();
    let fresh = hartree_core::kernels::compute_symbol(RadialKernel::full(KernelSpec::coulomb()), &g).unwrap();
    assert_eq!(a.values(), b.values());
    assert_eq!(a.values(), fresh.values());
}

#[test]
fn warm_started_sweep_matches_cold_starts() {
    let g = Grid::new(32, 80.0).unwrap();
    let opts = FlowOptions::default();
    let lambdas = [0.9, 1.0, 1.1];
    let warm = i_of_lambda(&lambdas, KernelSpec::coulomb(), &g, &opts).unwrap();
    for (l, w) in lambdas.iter().zip(&warm) {
        let cold = minimize(*l, KernelSpec::coulomb(), &g, &opts).unwrap();
        assert!(w.converged && cold.converged);
        assert!(
            (w.i_lambda - cold.i_lambda).abs() <= 2.0 * opts.tol_energy * cold.i_lambda.abs(),
            "{l}: {} vs {}",
            w.i_lambda,
            cold.i_lambda
        );
    }
}
