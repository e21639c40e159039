use zstab::algebra::GroupDirection;
use zstab::exec::Execution;
use zstab::harness::{generate_scene, kempf_ness_verify, InstanceSpec};
use zstab::moment::{compatibility_check, energy, moment_at, solve_critical, z_flow, FlowStatus, DEFAULT_TOL};
use zstab::graded::{specialise, GradedPoint};
use zstab::scenario::ScenarioFile;
use zstab::stability::{classify, distance_to_polytope, optimal_destabiliser, StabilityClass};

const TWO_FACTORS: &str = r#"{
    "version": 1,
    "rank": 2,
    "factors": [
        { "label": "A", "weights": [[1, 0], [0, 1], [-1, -1]], "shift": ["0", "0"] },
        { "label": "B", "weights": [[2, 0], [0, 0], [0, 2]], "shift": ["1/2", "1/2"] }
    ],
    "point": [["1", "2-i", "1/2"], ["1", "1", "3i"]],
    "charges": [
        { "name": "even", "coefficients": ["i", "i"], "phase": "0" },
        { "name": "skew", "coefficients": ["1/2+i", "-1/3+2i"], "phase": "0" },
        { "name": "rotated", "coefficients": ["-1+i", "-1+i"], "phase": "pi/4" }
    ]
}"#;

#[test]
fn scenario_to_critical_point() {
    let file = ScenarioFile::from_json(TWO_FACTORS).unwrap();
    let scene = file.scene().unwrap();
    for name in file.charge_names() {
        let charge = file.charge(name).unwrap();
        let v = classify(&scene, &charge).unwrap();
        assert!(v.class.is_polystable(), "{name}: {:?}", v.class);
        let out = solve_critical(&scene, &charge, &GroupDirection::zero(2), DEFAULT_TOL, 500).unwrap();
        assert_eq!(out.status, FlowStatus::Converged, "{name}");
        let sigma = out.sigma.unwrap();
        assert!(moment_at(&scene, &charge, &sigma).unwrap().residual_norm < DEFAULT_TOL);

        let trace = z_flow(&scene, &charge, &GroupDirection::zero(2), 200.0, DEFAULT_TOL).unwrap();
        assert_eq!(trace.status, Some(FlowStatus::Converged), "{name}");
        let end = trace.sigmas.last().unwrap();
        let gap: f64 = end.entries().iter().zip(sigma.entries()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(gap < 1e-6, "{name}: flow and Newton differ by {gap}");
        assert!(trace.energy_decrements.iter().all(|d| *d < 0.0));
    }
}

#[test]
fn rotated_charge_has_the_same_critical_point() {
    // e^{-iπ/4}(-1+i) = √2 i, so this is √2 times the even charge
    let file = ScenarioFile::from_json(TWO_FACTORS).unwrap();
    let scene = file.scene().unwrap();
    let solve = |n: &str| {
        solve_critical(&scene, &file.charge(n).unwrap(), &GroupDirection::zero(2), DEFAULT_TOL, 500)
            .unwrap()
            .sigma
            .unwrap()
    };
    let (a, b) = (solve("even"), solve("rotated"));
    for (x, y) in a.entries().iter().zip(b.entries()) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn unstable_scene_end_to_end() {
    let text = TWO_FACTORS.replace(r#""shift": ["1/2", "1/2"]"#, r#""shift": ["3", "3"]"#);
    let file = ScenarioFile::from_json(&text).unwrap();
    let scene = file.scene().unwrap();
    let charge = file.charge("even").unwrap();
    assert_eq!(classify(&scene, &charge).unwrap().class, StabilityClass::Unstable);
    let d = optimal_destabiliser(&scene, &charge).unwrap();
    let dist = distance_to_polytope(&scene, &charge).unwrap();
    assert!((d.distance - dist).abs() < 1e-12);
    let out = solve_critical(&scene, &charge, &GroupDirection::zero(2), DEFAULT_TOL, 2000).unwrap();
    assert_ne!(out.status, FlowStatus::Converged);
    assert!((out.residual_floor - dist).abs() < 1e-4, "{} vs {dist}", out.residual_floor);
    // σ = tλ with t → −∞ approaches the limit of λ, so the solver runs off
    // against the destabilising direction
    let s = out.last_sigma.entries();
    let n = out.last_sigma.norm();
    let cos: f64 = s.iter().zip(d.direction.entries()).map(|(a, b)| a * b).sum::<f64>() / n;
    assert!(cos < -0.9, "cos = {cos}");
}

#[test]
fn semistable_limit_is_polystable_and_solvable() {
    let text = TWO_FACTORS.replace(r#""shift": ["1/2", "1/2"]"#, r#""shift": ["3", "0"]"#);
    let file = ScenarioFile::from_json(&text).unwrap();
    let scene = file.scene().unwrap();
    let charge = file.charge("even").unwrap();
    let v = classify(&scene, &charge).unwrap();
    assert_eq!(v.class, StabilityClass::StrictlySemistable);
    let lambda = v.witness.unwrap();
    let limit = specialise(&scene, &lambda).unwrap().limit;
    let g = GradedPoint::new(limit.clone(), lambda).unwrap();
    assert!(compatibility_check(&charge, &g).unwrap().deviation.sign().is_eq());
    let mut cur = limit;
    while classify(&cur, &charge).unwrap().class == StabilityClass::StrictlySemistable {
        let w = classify(&cur, &charge).unwrap().witness.unwrap();
        cur = specialise(&cur, &w).unwrap().limit;
    }
    assert!(classify(&cur, &charge).unwrap().class.is_polystable());
    let out = solve_critical(&cur, &charge, &GroupDirection::zero(2), DEFAULT_TOL, 2000).unwrap();
    assert_eq!(out.status, FlowStatus::Converged);
}

#[test]
fn energy_is_minimised_at_the_critical_point() {
    let file = ScenarioFile::from_json(TWO_FACTORS).unwrap();
    let scene = file.scene().unwrap();
    let charge = file.charge("skew").unwrap();
    let sigma = solve_critical(&scene, &charge, &GroupDirection::zero(2), DEFAULT_TOL, 500).unwrap().sigma.unwrap();
    let e0 = energy(&scene, &charge, &sigma).unwrap().value;
    for d in [[0.1, 0.0], [0.0, -0.1], [0.3, 0.3], [-1.0, 0.5]] {
        let e = energy(&scene, &charge, &sigma.add(&GroupDirection(d.to_vec()))).unwrap().value;
        assert!(e > e0);
    }
}

#[test]
fn parallel_and_sequential_reports_match() {
    let spec = InstanceSpec::new(77, 24);
    let a = kempf_ness_verify(&spec, DEFAULT_TOL, Execution::Sequential).unwrap();
    let b = kempf_ness_verify(&spec, DEFAULT_TOL, Execution::Parallel).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert!(a.all_agree());
}

#[test]
fn generated_scenes_round_trip_through_files() {
    let spec = InstanceSpec::new(3, 30);
    for i in 0..spec.count {
        let (scene, charge) = generate_scene(&spec, i).unwrap();
        let file = ScenarioFile::from_scene(&scene, &[("z".into(), charge.clone())]);
        let back = ScenarioFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back.scene().unwrap(), scene);
        let v = classify(&back.scene().unwrap(), &back.charge("z").unwrap()).unwrap();
        assert_eq!(v.class, classify(&scene, &charge).unwrap().class);
    }
}
