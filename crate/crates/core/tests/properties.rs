use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use cpd_core::expint::{phi_all_with_exp, tableau, PhiCache};
use cpd_core::fields::{hat, GeneralField};
use cpd_core::harness::fit_slope;
use cpd_core::rotations::{reduce_phase, Linearization, Sign};
use cpd_core::solver::{error_metric, standard_x0};
use cpd_core::spectral::{assemble_f, build_m, CoefVector, SpectralTransform};
use cpd_core::transform::{from_filtered, to_filtered, ParticleState};
use cpd_core::twoscale::{TauGridFunction, TwoScaleSystem, Vec6};
use cpd_core::{Mat3, Vec3};

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-range..range).prop_map(Vec3::from)
}

fn field_vector() -> impl Strategy<Value = Vec3> {
    vec3(3.0).prop_filter("non-degenerate field", |b| b.norm() > 0.1)
}

fn real_coefs(n: usize) -> impl Strategy<Value = CoefVector> {
    prop::collection::vec(prop::array::uniform2(-1.0f64..1.0), 6 * n).prop_map(move |raw| {
        let values: Vec<Vec6> = (0..n)
            .map(|l| Vec6::from_fn(|j, _| raw[j * n + l][0] + 0.3 * raw[j * n + l][1]))
            .collect();
        SpectralTransform::new(n)
            .unwrap()
            .from_grid(&TauGridFunction::new(values).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hat_is_the_cross_product(b in vec3(5.0), v in vec3(5.0)) {
        prop_assert_eq!(hat(&b) * v, v.cross(&b));
    }

    #[test]
    fn rotations_are_proper_orthogonal(b0 in field_vector(), theta in -1e6f64..1e6) {
        let lin = Linearization::new(b0).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            let s = lin.s0(theta, sign);
            prop_assert!((s * s.transpose() - Mat3::identity()).abs().max() <= 1e-13);
            prop_assert!((s.determinant() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn rotations_are_periodic(b0 in field_vector(), theta in -100.0f64..100.0) {
        let lin = Linearization::new(b0).unwrap();
        for sign in [Sign::Plus, Sign::Minus] {
            prop_assert!((lin.s0(theta, sign) - lin.s0(theta + 2.0 * PI, sign)).abs().max() <= 1e-12);
            prop_assert!((lin.s1(theta, sign) - lin.s1(theta + 2.0 * PI, sign)).abs().max() <= 1e-12);
        }
    }

    #[test]
    fn s1_inverts_the_generator(b0 in field_vector(), theta in -50.0f64..50.0) {
        let lin = Linearization::new(b0).unwrap();
        let s1 = lin.s1(theta, Sign::Plus);
        let s0 = lin.s0(theta, Sign::Plus);
        prop_assert!((lin.b0_hat * s1 - (s0 - Mat3::identity())).abs().max() <= 1e-13);
        prop_assert!((s1 * b0).norm() <= 1e-13 * b0.norm());
    }

    #[test]
    fn reduced_phase_is_in_range(theta in -1e9f64..1e9) {
        let r = reduce_phase(theta);
        prop_assert!((-PI..PI).contains(&r));
        prop_assert!(((theta - r) / (2.0 * PI) - ((theta - r) / (2.0 * PI)).round()).abs() <= 1e-6);
    }

    #[test]
    fn filtering_round_trips_and_preserves_speed(
        b0 in field_vector(),
        x in vec3(2.0),
        w in vec3(0.5),
        t in 0.0f64..1.0,
        eps in 1e-4f64..1.0,
    ) {
        let lin = Linearization::new(b0).unwrap();
        let f = to_filtered(t, &x, &w, &lin, eps);
        prop_assert!((f.p.norm() - w.norm()).abs() <= 1e-14 * w.norm().max(1.0));
        let (x2, w2) = from_filtered(t, &f.q, &f.p, &lin, eps);
        prop_assert!((x2 - x).norm() <= 1e-13 * x.norm().max(1.0));
        prop_assert!((w2 - w).norm() <= 1e-14 * w.norm().max(1.0));
    }

    #[test]
    fn spectral_round_trip(c in real_coefs(16)) {
        let t = SpectralTransform::new(16).unwrap();
        prop_assert!(c.conjugate_symmetry_residual() <= 1e-14);
        let g = t.to_grid(&c).unwrap();
        let back = t.from_grid(&g);
        let diff = c.as_slice().iter().zip(back.as_slice()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-15);
    }

    #[test]
    fn serialization_round_trip(c in real_coefs(8)) {
        let mut bytes = Vec::new();
        c.write_to(&mut bytes).unwrap();
        prop_assert_eq!(bytes.len(), 16 + 16 * c.len());
        let back = CoefVector::read_from(bytes.as_slice()).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn free_flow_is_an_isometry(c in real_coefs(32), h in 1e-4f64..1.0, eps in 1e-5f64..1.0, b in 0.2f64..3.0) {
        let m = build_m(32, b, eps).unwrap();
        let out = m.apply_exp(h, &c);
        let n0: f64 = c.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let n1: f64 = out.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!((n0 - n1).abs() <= 1e-13 * n0);
    }

    #[test]
    fn phi_recurrence(re in -40.0f64..0.5, im in -60.0f64..60.0) {
        let z = Complex64::new(re, im);
        prop_assume!(z.norm() >= 1e-3);
        let p = phi_all_with_exp(z, z.exp());
        let mut factorial = 1.0;
        for rho in 0..4 {
            if rho > 0 {
                factorial *= rho as f64;
            }
            let residual = (z * p[rho + 1] - (p[rho] - 1.0 / factorial)).norm();
            prop_assert!(residual <= 1e-13 * p[rho].norm().max(1.0), "rho {} residual {:e}", rho, residual);
        }
    }

    #[test]
    fn power_laws_are_recovered(c in 1e-6f64..1e3, slope in -1.0f64..5.0) {
        let xs = [0.1, 0.05, 0.025, 0.0125, 0.00625];
        let errs: Vec<f64> = xs.iter().map(|x: &f64| c * x.powf(slope)).collect();
        let fit = fit_slope(&xs, &errs).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 1e-9);
        prop_assert_eq!(fit.used, 5);
    }

    #[test]
    fn error_metric_is_a_split_sum(x in vec3(3.0), v in vec3(3.0), dx in vec3(0.1), dv in vec3(0.1), eps in 1e-4f64..1.0) {
        prop_assume!(x.norm() > 1e-3 && v.norm() > 1e-3);
        let r = ParticleState::new(1.0, x, v);
        let n = ParticleState::new(1.0, x + dx, v + dv);
        let m = error_metric(&n, &r, eps).unwrap();
        prop_assert!((m.err - (m.err_x + m.err_v_scaled)).abs() <= 1e-15 * m.err.max(1.0));
        prop_assert!((m.err_v_scaled - eps * dv.norm() / v.norm()).abs() <= 1e-12 * m.err_v_scaled.max(1e-300));
        prop_assert_eq!(error_metric(&r, &r, eps).unwrap().err, 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nonlinearity_commutes_with_grid_shifts(shift in 1usize..16, amp in 0.0f64..0.05) {
        let n = 16;
        let x0 = standard_x0();
        let field = GeneralField;
        let system = TwoScaleSystem::new(&field, &x0, 0.1, n).unwrap();
        let grid = TauGridFunction::sample(n, |t| {
            Vec6::new(
                x0[0] + amp * t.cos(),
                x0[1] + amp * (2.0 * t).sin(),
                x0[2] - amp * t.sin(),
                0.04 + 0.2 * amp * (3.0 * t).cos(),
                0.07,
                0.1 - 0.2 * amp * t.sin(),
            )
        })
        .unwrap();
        let c = system.transform().from_grid(&grid);
        let sigma = 2.0 * PI * shift as f64 / n as f64;
        // U(· + σ) through the phase factors e^{ikσ}
        let mut shifted = c.clone();
        for j in 0..6 {
            for k in c.modes() {
                shifted.set(j, k, c.get(j, k) * Complex64::from_polar(1.0, k as f64 * sigma));
            }
        }
        let direct = system.transform().from_grid(
            &TauGridFunction::new(
                (0..n)
                    .map(|l| {
                        let tau = 2.0 * PI * (l as f64 - (n / 2) as f64) / n as f64 + sigma;
                        system.f_tau(&shifted.evaluate(tau - sigma), tau).unwrap()
                    })
                    .collect(),
            )
            .unwrap(),
        );
        let base = assemble_f(&system, &c).unwrap();
        let scale = base.as_slice().iter().map(|z| z.norm()).fold(1.0, f64::max);
        for j in 0..6 {
            for k in c.modes() {
                let expect = base.get(j, k) * Complex64::from_polar(1.0, k as f64 * sigma);
                prop_assert!((direct.get(j, k) - expect).norm() <= 1e-11 * scale);
            }
        }
    }
}

#[test]
fn phi_cache_is_deterministic() {
    let m = build_m(16, 1.3, 1e-3).unwrap();
    let tab = tableau(4).unwrap();
    let a = PhiCache::new(&tab, 0.025, &m);
    let b = PhiCache::new(&tab, 0.025, &m);
    let u: Vec<Complex64> = (0..m_len(&m))
        .map(|d| Complex64::new((d as f64).sin(), (d as f64 * 0.3).cos()))
        .collect();
    let rhs = |v: &[Complex64]| -> cpd_core::Result<Vec<Complex64>> { Ok(v.iter().map(|z| z * 0.1 + 1.0).collect()) };
    let ra = a.step(0.025, &u, 7, rhs, |_, _| {}).unwrap();
    let rb = b.step(0.025, &u, 7, rhs, |_, _| {}).unwrap();
    assert_eq!(ra, rb);
}

fn m_len(m: &cpd_core::spectral::TransportGenerator) -> usize {
    6 * m.n_tau()
}
