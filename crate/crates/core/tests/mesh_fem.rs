use gradstate::fem::{gradient_seminorm_sq, FemSystem};
use gradstate::mesh::{build_disk_mesh, mesh_size, Mesh};
use gradstate::problems;

#[test]
fn interior_dof_counts_per_level() {
    for (level, dofs) in [(0, 1), (1, 7), (2, 37), (3, 169), (4, 721)] {
        let mesh = build_disk_mesh(1.0f64, level).unwrap();
        mesh.validate().unwrap();
        assert_eq!(mesh.num_interior(), dofs, "level {level}");
    }
}

#[test]
fn area_converges_to_disk_area() {
    let mut prev = f64::INFINITY;
    for level in 1..=5 {
        let err = (std::f64::consts::PI * 4.0 - build_disk_mesh(2.0f64, level).unwrap().total_area()).abs();
        assert!(err < prev);
        prev = err;
    }
    assert!(prev < 1e-2);
}

#[test]
fn refinement_halves_mesh_size_asymptotically() {
    let h4 = mesh_size(&build_disk_mesh(1.0f64, 4).unwrap());
    let h5 = mesh_size(&build_disk_mesh(1.0f64, 5).unwrap());
    assert!((h5 / h4 - 0.5).abs() < 0.05, "{}", h5 / h4);
    assert!(build_disk_mesh(1.0f64, 5).unwrap().min_angle_degrees() > 25.0);
}

#[test]
fn mesh_text_round_trip() {
    let mesh = build_disk_mesh(2.0f64, 2).unwrap();
    let mut buf = Vec::new();
    mesh.write_text(&mut buf).unwrap();
    let back = Mesh::read_text(std::str::from_utf8(&buf).unwrap(), 2, 2.0).unwrap();
    assert_eq!(back.triangles, mesh.triangles);
    assert_eq!(back.boundary, mesh.boundary);
    for (a, b) in back.nodes.iter().zip(&mesh.nodes) {
        assert!((a[0] - b[0]).abs() < 1e-14 && (a[1] - b[1]).abs() < 1e-14);
    }
}

#[test]
fn gradient_energy_of_interpolant_converges() {
    // y = 1 - |x|² on the unit disk: ∫|∇y|² = 2π
    let mut prev = f64::INFINITY;
    for level in 2..=5 {
        let sys = FemSystem::laplacian(&build_disk_mesh(1.0f64, level).unwrap()).unwrap();
        let y = sys.interpolate(|p| 1.0 - p[0] * p[0] - p[1] * p[1]).unwrap();
        let err = (gradient_seminorm_sq(&y, &sys).unwrap() - 2.0 * std::f64::consts::PI).abs();
        assert!(err < prev, "level {level}");
        prev = err;
    }
    assert!(prev < 0.05);
}

#[test]
fn example_data_are_finite_on_all_levels() {
    for spec in [problems::example1::<f64>(), problems::example2::<f64>()] {
        for level in 0..=3 {
            let sys = FemSystem::laplacian(&spec.mesh(level).unwrap()).unwrap();
            let (yd, f) = spec.data_vectors(&sys).unwrap();
            assert!(yd.iter().chain(&f).all(|v| v.is_finite()));
        }
    }
}
