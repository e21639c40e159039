use num_complex::Complex64;
use proptest::prelude::*;

use zstab::algebra::{pairing_int, weyl_canonical, Cocharacter, GroupDirection, LinearisedFactor, RootDatumLite, Scene};
use zstab::charge::{margin, z_of_degeneration, CentralCharge, Phase};
use zstab::exec::Execution;
use zstab::graded::{fixed_levels, specialise, GradedPoint};
use zstab::moment::{compatibility_check, energy, moment_at};
use zstab::num::{rat, CValue, Real};
use zstab::scenario::ScenarioFile;
use zstab::stability::{brute_force_classify, classify, StabilityClass};

#[derive(Clone, Debug)]
struct Case {
    scene: Scene,
    charge: CentralCharge,
}

fn factor(rank: usize) -> impl Strategy<Value = (Vec<Vec<i64>>, Vec<(i64, i64)>, Vec<Option<(f64, f64)>>)> {
    (2usize..=4).prop_flat_map(move |n| {
        (
            prop::collection::vec(prop::collection::vec(-3i64..=3, rank), n),
            prop::collection::vec((-6i64..=6, 1i64..=3), rank),
            prop::collection::vec(prop::option::weighted(0.85, (-1.0f64..1.0, 0.0f64..6.28)), n),
        )
    })
}

/// Scenes of rank ≤ 2 with ≤ 2 factors and exact charges having r_k > 0.
fn case() -> impl Strategy<Value = Case> {
    (1usize..=2, 1usize..=2)
        .prop_flat_map(|(rank, m)| {
            (
                Just(rank),
                prop::collection::vec(factor(rank), m),
                prop::collection::vec((-4i64..=4, 1i64..=4), m),
            )
        })
        .prop_map(|(rank, factors, charge)| {
            let mut fs = Vec::new();
            let mut point = Vec::new();
            for (k, (w, shift, x)) in factors.into_iter().enumerate() {
                let mut row: Vec<Complex64> =
                    x.iter().map(|z| z.map_or(Complex64::new(0.0, 0.0), |(l, t)| Complex64::from_polar(l.exp(), t))).collect();
                if row.iter().all(|z| z.norm() == 0.0) {
                    row[0] = Complex64::new(1.0, 0.0);
                }
                fs.push(LinearisedFactor::new(format!("F{k}"), w, shift.iter().map(|&(p, q)| rat(p, q)).collect()));
                point.push(row);
            }
            let coeffs = charge.iter().map(|&(s, r)| CValue::exact(rat(s, 2), rat(r, 2))).collect();
            Case { scene: Scene::new(rank, fs, point).unwrap(), charge: CentralCharge::new(coeffs, Phase::zero()).unwrap() }
        })
}

fn cochar(rank: usize) -> impl Strategy<Value = Cocharacter> {
    prop::collection::vec(-3i64..=3, rank).prop_map(Cocharacter)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn classify_matches_oracle(c in case()) {
        let fast = classify(&c.scene, &c.charge).unwrap();
        let slow = brute_force_classify(&c.scene, &c.charge, 1 + c.scene.weight_spread(), Execution::Sequential).unwrap();
        prop_assert_eq!(fast.class, slow.class);
    }

    #[test]
    fn witness_is_consistent(c in case()) {
        let v = classify(&c.scene, &c.charge).unwrap();
        match v.class {
            StabilityClass::Unstable => {
                let w = v.witness.unwrap();
                prop_assert!(margin(&c.scene, &c.charge, &w).unwrap().sign().is_lt());
            }
            StabilityClass::StrictlySemistable => {
                let w = v.witness.unwrap();
                prop_assert!(margin(&c.scene, &c.charge, &w).unwrap().sign().is_eq());
                prop_assert!(specialise(&c.scene, &w).unwrap().leaves_orbit(&c.scene));
            }
            _ => prop_assert!(v.witness.is_none()),
        }
    }

    #[test]
    fn scaling_the_charge_keeps_the_verdict(c in case(), p in 1i64..=5, q in 1i64..=5) {
        let scaled = c.charge.scaled(&Real::Exact(rat(p, q))).unwrap();
        prop_assert_eq!(classify(&c.scene, &c.charge).unwrap().class, classify(&c.scene, &scaled).unwrap().class);
    }

    #[test]
    fn margin_is_linear_in_the_charge(c in case(), d in case(), t in -3i64..=3) {
        prop_assume!(c.scene.num_factors() == d.scene.num_factors() && c.scene.rank() == d.scene.rank());
        let lam = Cocharacter(vec![1; c.scene.rank()]);
        let Ok(mixed) = c.charge.combine(&d.charge, &Real::Exact(rat(t, 1))) else { return Ok(()) };
        let lhs = margin(&c.scene, &mixed, &lam).unwrap();
        let rhs = &margin(&c.scene, &c.charge, &lam).unwrap() + &(&Real::Exact(rat(t, 1)) * &margin(&c.scene, &d.charge, &lam).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn rotation_keeps_r(c in case(), num in -5i64..=5) {
        let rot = c.charge.rotated(&Phase::pi_times(rat(num, 7)).unwrap()).unwrap();
        for (a, b) in c.charge.r().iter().zip(rot.r()) {
            prop_assert!((a.to_f64() - b.to_f64()).abs() < 1e-12);
        }
    }

    #[test]
    fn limits_are_fixed_and_idempotent(c in case(), l in cochar(2)) {
        let l = Cocharacter(l.entries()[..c.scene.rank()].to_vec());
        let y = specialise(&c.scene, &l).unwrap();
        prop_assert!(fixed_levels(&y.limit, &l).unwrap().is_some());
        prop_assert_eq!(specialise(&y.limit, &l).unwrap().limit, y.limit);
    }

    #[test]
    fn compatibility_is_exact_on_graded_points(c in case(), l in cochar(2)) {
        let l = Cocharacter(l.entries()[..c.scene.rank()].to_vec());
        let y = specialise(&c.scene, &l).unwrap().limit;
        let g = GradedPoint::new(y, l).unwrap();
        let dev = compatibility_check(&c.charge, &g).unwrap().deviation;
        prop_assert!(dev.is_exact() && dev.sign().is_eq());
    }

    #[test]
    fn charge_of_degeneration_has_margin_as_rotated_imaginary_part(c in case(), l in cochar(2)) {
        let l = Cocharacter(l.entries()[..c.scene.rank()].to_vec());
        let d = z_of_degeneration(&c.scene, &c.charge, &l).unwrap();
        let rot = &c.charge.phase().rotor() * &d.z;
        prop_assert_eq!(rot.im, d.margin);
    }

    #[test]
    fn gradient_is_minus_residual_and_energy_is_convex(
        c in case(),
        s in prop::collection::vec(-2.0f64..2.0, 2),
        dlt in prop::collection::vec(-1.0f64..1.0, 2),
    ) {
        let r = c.scene.rank();
        let sigma = GroupDirection(s[..r].to_vec());
        let e = energy(&c.scene, &c.charge, &sigma).unwrap();
        let m = moment_at(&c.scene, &c.charge, &sigma).unwrap();
        for (g, res) in e.gradient.iter().zip(&m.residual) {
            prop_assert!((g + res).abs() < 1e-12);
        }
        let h = 1e-2;
        let at = |t: f64| GroupDirection(s[..r].iter().zip(&dlt).map(|(a, b)| a + t * b).collect());
        let f = |t: f64| energy(&c.scene, &c.charge, &at(t)).unwrap().value;
        prop_assert!(f(h) + f(-h) - 2.0 * f(0.0) >= -1e-10);
        for i in 0..r {
            for j in 0..r {
                prop_assert!((e.hessian[i][j] - e.hessian[j][i]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn scenario_round_trip(c in case()) {
        let file = ScenarioFile::from_scene(&c.scene, &[("z".into(), c.charge.clone())]);
        let back = ScenarioFile::from_json(&file.to_json()).unwrap();
        prop_assert_eq!(back.scene().unwrap(), c.scene.clone());
        let charge = back.charge("z").unwrap();
        prop_assert_eq!(charge.coefficients(), c.charge.coefficients());
    }

    #[test]
    fn pairing_is_additive(w in prop::collection::vec(-5i64..=5, 3), a in cochar(3), b in cochar(3)) {
        prop_assert_eq!(pairing_int(&w, &a.compose(&b)), pairing_int(&w, &a) + pairing_int(&w, &b));
    }

    #[test]
    fn weyl_canonical_is_an_orbit_invariant(l in cochar(3)) {
        let gl = RootDatumLite::gl(3).unwrap();
        let canon = weyl_canonical(&l, &gl).unwrap();
        for img in gl.orbit(&l).unwrap() {
            prop_assert_eq!(weyl_canonical(&img, &gl).unwrap(), canon.clone());
        }
        prop_assert_eq!(weyl_canonical(&canon, &gl).unwrap(), canon);
    }
}
