use axifem::fem::{QuadPlan, SpaceKind};
use axifem::io::{builtin_rhs, read_csv, vtk_string, write_csv, write_volume_vtk, Cell, Table};
use axifem::mesh::{classify_boundary, gen_lshape, LShape, TriangleMesh};
use axifem::modal::form_a;
use axifem::singular::{compute_basis, eval_principal, PrincipalPart};
use axifem::solver::{sample_3d, solve_all, FourierRhs, SolveOptions};

#[test]
fn mesh_file_round_trip_keeps_corner() {
    let (mesh, corner) = gen_lshape(LShape::default(), 0.125).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("l.mesh");
    mesh.save(&p).unwrap();
    let back = TriangleMesh::load(&p).unwrap();
    assert_eq!(back.vertices, mesh.vertices);
    assert_eq!(back.triangles, mesh.triangles);
    let (_, corners) = classify_boundary(&back).unwrap();
    assert_eq!(corners.len(), 1);
    assert!((corners[0].alpha - corner.alpha).abs() < 1e-12);
}

#[test]
fn solve_and_export() {
    let (mesh, corner) = gen_lshape(LShape::default(), 0.125).unwrap();
    let plan = QuadPlan::with_corners(&mesh, &[corner]);
    let rhs = FourierRhs::new(builtin_rhs("band3").unwrap(), 3, 13).unwrap();
    let sol = solve_all(&mesh, &plan, Some(&corner), SpaceKind::Magnetic, &rhs, SolveOptions::default()).unwrap();
    assert_eq!(sol.modes.len(), 7);
    for m in &sol.modes {
        assert!(m.report.residual <= 1e-10, "k={} residual {}", m.k, m.report.residual);
        assert!(form_a(&plan, m.k, m, m).re > 0.0);
    }

    let dir = tempfile::tempdir().unwrap();
    let mut table = Table::new(&["k", "c_re", "c_im"]);
    for m in &sol.modes {
        table.push(vec![Cell::Num(m.k as f64), Cell::Num(m.c.re), Cell::Num(m.c.im)]);
    }
    let csv = dir.path().join("c.csv");
    write_csv(&table, &csv).unwrap();
    let back = read_csv(&csv).unwrap();
    assert_eq!(back, table);

    let nodal = sol.mode(1).unwrap().nodal(&mesh);
    let pp = PrincipalPart::edge(SpaceKind::Magnetic, corner).unwrap();
    let cells: Vec<_> = (0..mesh.n_triangles())
        .map(|t| {
            let c = mesh.centroid(t);
            eval_principal(&pp, c[0], c[1]).unwrap()
        })
        .collect();
    let vtk = vtk_string(&mesh, &[("B", &nodal)], &[("principal", &cells)]).unwrap();
    assert!(vtk.contains("SCALARS B_theta_im double 1"));
    assert!(vtk.contains(&format!("CELL_DATA {}", mesh.n_triangles())));

    let samples = sample_3d(&sol, &mesh, 8).unwrap();
    let vol = dir.path().join("v.vtk");
    write_volume_vtk(&mesh, "B", &samples, &vol).unwrap();
    let text = std::fs::read_to_string(&vol).unwrap();
    assert!(text.contains(&format!("POINTS {} double", 8 * mesh.n_vertices())));
    assert!(text.contains("VECTORS B double"));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let (mesh, corner) = gen_lshape(LShape::default(), 0.125).unwrap();
            let plan = QuadPlan::with_corners(&mesh, &[corner]);
            let b = compute_basis(&mesh, &plan, &corner, 1, SpaceKind::Electric, 1e-10).unwrap();
            b.regular.values
        })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn ring_source_excites_mode_zero_only() {
    let (mesh, corner) = gen_lshape(LShape::default(), 0.125).unwrap();
    let plan = QuadPlan::with_corners(&mesh, &[corner]);
    let rhs = FourierRhs::new(builtin_rhs("azimuthal").unwrap(), 2, 9).unwrap();
    let sol = solve_all(&mesh, &plan, Some(&corner), SpaceKind::Electric, &rhs, SolveOptions::default()).unwrap();
    for m in &sol.modes {
        let size = m.nodal(&mesh).max_abs();
        if m.k == 0 {
            assert!(size > 1e-3);
        } else {
            assert!(size < 1e-12, "k={} {size}", m.k);
            assert!(m.c.norm() < 1e-12);
        }
    }
}
