use super::*;

fn small(experiment: &str, method: Method) -> RunConfig {
    RunConfig {
        n: 4,
        iterations: 3,
        ..RunConfig::new(experiment, method)
    }
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
    }
    assert!("p3".parse::<Method>().is_err());
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = small("nopde1", Method::P2);
    c.iterations = 0;
    assert!(matches!(run(&c), Err(Error::Config(_))));
    let mut c = small("nopde1", Method::Newton);
    c.newton_t = Some(1.5);
    assert!(matches!(run(&c), Err(Error::Config(_))));
    assert!(run(&small("nopde9", Method::P2)).is_err());
}

#[test]
fn quality_of_a_right_isoceles_triangle() {
    let m = crate::mesh::box_with_rectangle(crate::mesh::Rect::square(2.0), crate::mesh::Rect::square(1.0), 1).unwrap();
    // legs 1, 1, hypotenuse √2 on the criss-cross mesh halves: 4√3·(1/4)/(1/2 + 1/2 + 1)
    let q = min_quality(&m);
    assert!(q > 0.0 && q <= 1.0);
    assert!((q - 3f64.sqrt() / 2.0).abs() < 1e-12, "{q}");
}

#[test]
fn accepted_steps_decrease_the_energy() {
    for m in Method::ALL {
        let h = run(&small("nopde1", m)).unwrap();
        assert!(h.records.len() >= 2, "{m}: {:?}", h.stop);
        for w in h.records.windows(2) {
            assert!(w[1].energy < w[0].energy, "{m}: {:?}", h.energies());
            assert!(w[1].step > 0.0 && w[1].step < 1.0);
        }
        assert!(h.mesh.is_valid());
    }
}

#[test]
fn area_constraint_holds_every_iteration() {
    let h = run(&small("poisson2", Method::Inf)).unwrap();
    for r in &h.records {
        assert!((r.area - 4.0).abs() <= 1e-8, "{}", r.area);
    }
}

#[test]
fn runs_are_deterministic() {
    let c = small("poisson1", Method::Inf);
    let a = run(&c).unwrap();
    let b = run(&c).unwrap();
    assert_eq!(a.records, b.records);
    assert_eq!(a.mesh.vertices(), b.mesh.vertices());
}

#[test]
fn outputs_are_written() {
    let dir = std::env::temp_dir().join(format!("shapeopt-optimize-{}", std::process::id()));
    let mut c = small("nopde1", Method::P2);
    c.out = Some(dir.clone());
    let h = run(&c).unwrap();
    let csv = std::fs::read_to_string(dir.join("energy.csv")).unwrap();
    assert_eq!(csv, h.to_csv());
    for r in &h.records {
        assert!(dir.join(format!("mesh_{:04}.vtk", r.iteration)).exists());
    }
    let svg = std::fs::read_to_string(dir.join("energy.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
    std::fs::remove_dir_all(dir).unwrap();
}
