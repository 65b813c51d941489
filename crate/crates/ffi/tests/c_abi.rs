use std::ffi::{CStr, CString};
use std::ptr;

use nullmetric_ffi::*;

fn last_error() -> String {
    let p = nm_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn flat_disk_round_trip() {
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(nm_mesh_disk(1, &mut mesh), NmStatus::Ok);
        let n = nm_mesh_vertex_count(mesh);
        assert!(n > 61);

        let mut st = ptr::null_mut();
        assert_eq!(nm_spacetime_flat(mesh, &mut st), NmStatus::Ok);
        assert_eq!(nm_spacetime_vertex_count(st), n);

        let mut vol = 0.0;
        assert_eq!(nm_volume(st, &mut vol), NmStatus::Ok);
        assert!((vol - std::f64::consts::PI).abs() < 0.05, "{vol}");
        let mut len = 0.0;
        assert_eq!(nm_boundary_area(st, &mut len), NmStatus::Ok);
        assert!((len - 2.0 * std::f64::consts::PI).abs() < 0.1, "{len}");

        let sources = [0usize, n - 1];
        let mut d = ptr::null_mut();
        assert_eq!(nm_distance_matrix(st, sources.as_ptr(), 2, &mut d), NmStatus::Ok);
        assert_eq!(nm_distance_matrix_size(d), 2);
        let mut r = 0.0;
        assert_eq!(nm_distance_matrix_get(d, 0, 1, &mut r), NmStatus::Ok);
        // center to boundary
        assert!((r - 1.0).abs() < 0.03, "{r}");

        let mut nd = 0.0;
        assert_eq!(nm_null_distance_static(d, 0.0, 0, 0.25, 1, &mut nd), NmStatus::Ok);
        assert_eq!(nd, r);
        assert_eq!(nm_null_distance_static(d, 0.0, 0, 2.0, 1, &mut nd), NmStatus::Ok);
        assert_eq!(nd, 2.0);

        let mut grid = ptr::null_mut();
        assert_eq!(nm_grid_new(st, 1.0 / 32.0, 32, &mut grid), NmStatus::Ok);
        let mut o = 0.0;
        assert_eq!(nm_grid_null_distance(grid, 0.0, 0, 1.0, 0, &mut o), NmStatus::Ok);
        assert_eq!(o, 1.0);
        assert_eq!(nm_grid_null_distance(grid, 0.5, 0, 0.5, n - 1, &mut o), NmStatus::Ok);
        assert!(o >= r - 1e-12 && o <= 1.03 * r + 0.14, "{o} vs {r}");

        nm_grid_free(grid);
        nm_distance_matrix_free(d);
        nm_spacetime_free(st);
        nm_mesh_free(mesh);
    }
}

#[test]
fn constants() {
    unsafe {
        let mut a = 0.0;
        assert_eq!(nm_area_factor(2, &mut a), NmStatus::Ok);
        assert!((a - 4.0 / std::f64::consts::PI).abs() < 1e-12);
        let mut b = 0.0;
        assert_eq!(nm_flat_bound(2, 1.0, 1.0, 1.0, 1.0, 0.0, &mut b), NmStatus::Ok);
        assert!(b.is_finite() && b > 0.0);
        assert_eq!(
            nm_flat_bound(2, -1.0, 1.0, 1.0, 1.0, 0.0, &mut b),
            NmStatus::InvalidArgument
        );
    }
}

#[test]
fn example_members() {
    unsafe {
        let id = CString::new("ex32-time-blowup").unwrap();
        let mut st = ptr::null_mut();
        assert_eq!(nm_spacetime_example(id.as_ptr(), 10.0, 0, &mut st), NmStatus::Ok);
        assert!(nm_spacetime_vertex_count(st) > 0);
        nm_spacetime_free(st);

        let bad = CString::new("ex99").unwrap();
        let mut st = ptr::null_mut();
        assert_eq!(
            nm_spacetime_example(bad.as_ptr(), 10.0, 0, &mut st),
            NmStatus::UnknownExample
        );
        assert!(st.is_null());
        assert!(last_error().contains("ex99"));
    }
}

#[test]
fn null_and_range_errors() {
    unsafe {
        assert_eq!(nm_mesh_disk(0, ptr::null_mut()), NmStatus::NullPointer);
        assert!(last_error().contains("out"));
        let mut v = 0.0;
        assert_eq!(nm_volume(ptr::null(), &mut v), NmStatus::NullPointer);
        assert_eq!(nm_distance_matrix_size(ptr::null()), 0);
        nm_mesh_free(ptr::null_mut());

        let mut mesh = ptr::null_mut();
        nm_mesh_disk(0, &mut mesh);
        let mut st = ptr::null_mut();
        nm_spacetime_flat(mesh, &mut st);
        let mut d = ptr::null_mut();
        assert_eq!(nm_distance_matrix(st, [0usize].as_ptr(), 1, &mut d), NmStatus::Ok);
        assert_eq!(nm_distance_matrix_get(d, 0, 1, &mut v), NmStatus::InvalidArgument);
        let mut grid = ptr::null_mut();
        // 0.3 does not divide the slab
        assert_eq!(nm_grid_new(st, 0.3, 4, &mut grid), NmStatus::InvalidArgument);
        assert!(grid.is_null());
        nm_distance_matrix_free(d);
        nm_spacetime_free(st);
        nm_mesh_free(mesh);
    }
}

#[test]
fn header_declares_every_export() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let src = std::fs::read_to_string(format!("{dir}/src/lib.rs")).unwrap();
    let header = std::fs::read_to_string(format!("{dir}/include/nullmetric.h")).unwrap();
    let names: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(names.len() >= 18, "{names:?}");
    for name in names {
        assert!(
            header.contains(&format!(" {name}(")) || header.contains(&format!("*{name}(")),
            "{name} missing"
        );
    }
    assert!(header.contains("typedef struct NmGrid NmGrid;"));
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let tmp = std::env::temp_dir().join(format!("nullmetric_header_{}.c", std::process::id()));
    std::fs::write(
        &tmp,
        "#include \"nullmetric.h\"\nint main(void) { NmMesh *m = 0; return nm_mesh_disk(0, &m) == NM_STATUS_OK ? 0 : 1; }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(format!("{dir}/include"))
        .arg(&tmp)
        .status();
    let _ = std::fs::remove_file(&tmp);
    match status {
        Ok(s) => assert!(s.success(), "cc rejected the header"),
        Err(e) => eprintln!("skipping: no C compiler ({e})"),
    }
}
