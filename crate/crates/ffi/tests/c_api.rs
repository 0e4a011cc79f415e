use std::ffi::CStr;
use std::path::Path;
use std::process::Command;
use std::ptr;

use pbacc_ffi::*;

fn last_error() -> String {
    let p = pbacc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn grid(k: usize, t: usize, n: usize) -> *mut PbaccGrid {
    let mut g = ptr::null_mut();
    let status = unsafe { pbacc_grid_new(k, t, n, 10.0, &mut g) };
    assert_eq!(status, PbaccStatus::Ok);
    assert!(!g.is_null());
    g
}

#[test]
fn grid_exposes_points() {
    let g = grid(4, 2, 16);
    unsafe {
        assert_eq!(pbacc_grid_num_nodes(g), 16);
        let mut zs = vec![0.0; 16];
        assert_eq!(
            pbacc_grid_eval_points(g, zs.as_mut_ptr(), zs.len()),
            PbaccStatus::Ok
        );
        assert_eq!(zs[0], 1.0);
        assert_eq!(zs[15], -1.0);
        let mut short = vec![0.0; 3];
        assert_eq!(
            pbacc_grid_eval_points(g, short.as_mut_ptr(), 3),
            PbaccStatus::BufferTooSmall
        );
        assert!(last_error().contains("16"));
        let mut alphas = vec![0.0; 6];
        assert_eq!(
            pbacc_grid_interpolation_points(g, alphas.as_mut_ptr(), 6),
            PbaccStatus::Ok
        );
        assert!(alphas[4] > 2.0);
        pbacc_grid_free(g);
    }
}

#[test]
fn invalid_grids_report_codes() {
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(
            pbacc_grid_new(4, 2, 16, 1.5, &mut g),
            PbaccStatus::InvalidShift
        );
        assert!(g.is_null());
        assert_eq!(
            pbacc_grid_new(0, 0, 16, 10.0, &mut g),
            PbaccStatus::InvalidArgument
        );
        // Odd K and odd N both contain an exact zero.
        assert_eq!(
            pbacc_grid_new(3, 0, 5, 10.0, &mut g),
            PbaccStatus::GridCollision
        );
        assert_eq!(
            pbacc_grid_new(4, 0, 16, 10.0, ptr::null_mut()),
            PbaccStatus::NullPointer
        );
        assert_eq!(pbacc_grid_num_nodes(ptr::null()), 0);
        pbacc_grid_free(ptr::null_mut());
    }
}

#[test]
fn basis_weights_sum_to_one() {
    let points = [0.9, 0.3, -0.3, -0.9];
    let mut w = [0.0; 4];
    unsafe {
        assert_eq!(
            pbacc_basis_weights(0.1, points.as_ptr(), 4, w.as_mut_ptr()),
            PbaccStatus::Ok
        );
    }
    assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    unsafe {
        assert_eq!(
            pbacc_basis_weights(0.3, points.as_ptr(), 4, w.as_mut_ptr()),
            PbaccStatus::Ok
        );
    }
    assert_eq!(w, [0.0, 1.0, 0.0, 0.0]);
    unsafe {
        assert_eq!(
            pbacc_basis_weights(f64::NAN, points.as_ptr(), 4, w.as_mut_ptr()),
            PbaccStatus::InvalidArgument
        );
        assert_eq!(
            pbacc_basis_weights(0.0, ptr::null(), 4, w.as_mut_ptr()),
            PbaccStatus::NullPointer
        );
    }
}

#[test]
fn encode_decode_round_trip() {
    let (k, l, n) = (4usize, 3usize, 64usize);
    let g = grid(k, 0, n);
    let data: Vec<f64> = (0..k * l).map(|i| i as f64 - 5.0).collect();
    let mut set = ptr::null_mut();
    unsafe {
        assert_eq!(
            pbacc_encode(g, data.as_ptr(), k, l, 0.0, 7, &mut set),
            PbaccStatus::Ok
        );
        assert_eq!(pbacc_shares_len(set), n);

        let (mut rows, mut cols) = (0usize, 0usize);
        let mut payload = vec![0.0; l];
        assert_eq!(
            pbacc_shares_payload(set, 0, payload.as_mut_ptr(), l, &mut rows, &mut cols),
            PbaccStatus::Ok
        );
        assert_eq!((rows, cols), (1, l));
        assert_eq!(
            pbacc_shares_payload(set, n, payload.as_mut_ptr(), l, &mut rows, &mut cols),
            PbaccStatus::InvalidArgument
        );

        let mut out = vec![0.0; k * l];
        let mut lebesgue = 0.0;
        assert_eq!(
            pbacc_decode(
                set,
                g,
                ptr::null(),
                0,
                out.as_mut_ptr(),
                out.len(),
                &mut lebesgue
            ),
            PbaccStatus::Ok
        );
        assert!(lebesgue >= 1.0);
        for (a, b) in out.iter().zip(&data) {
            assert!((a - b).abs() < 0.1 * (1.0 + b.abs()), "{a} vs {b}");
        }

        let fast: Vec<usize> = (0..n).step_by(2).collect();
        assert_eq!(
            pbacc_decode(
                set,
                g,
                fast.as_ptr(),
                fast.len(),
                out.as_mut_ptr(),
                out.len(),
                ptr::null_mut()
            ),
            PbaccStatus::Ok
        );
        let missing = [n + 3];
        assert_eq!(
            pbacc_decode(
                set,
                g,
                missing.as_ptr(),
                1,
                out.as_mut_ptr(),
                out.len(),
                ptr::null_mut()
            ),
            PbaccStatus::InvalidArgument
        );
        assert_eq!(
            pbacc_decode(set, g, ptr::null(), 0, out.as_mut_ptr(), 2, ptr::null_mut()),
            PbaccStatus::BufferTooSmall
        );

        pbacc_shares_free(set);
        pbacc_grid_free(g);
    }
}

#[test]
fn private_encoding_is_seeded() {
    let g = grid(2, 2, 8);
    let data = [1.0, 2.0];
    let json = |seed: u64| unsafe {
        let mut set = ptr::null_mut();
        assert_eq!(
            pbacc_encode(g, data.as_ptr(), 2, 1, 1e3, seed, &mut set),
            PbaccStatus::Ok
        );
        let s = pbacc_shares_to_json(set);
        assert!(!s.is_null());
        let text = CStr::from_ptr(s).to_str().unwrap().to_owned();
        pbacc_string_free(s);
        pbacc_shares_free(set);
        text
    };
    let a = json(1);
    assert_eq!(a, json(1));
    assert_ne!(a, json(2));
    let parsed: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(parsed.as_array().unwrap().len(), 8);
    assert_eq!(parsed[0]["rows"], 1);
    unsafe {
        let mut set = ptr::null_mut();
        assert_eq!(
            pbacc_encode(g, data.as_ptr(), 2, 1, -1.0, 1, &mut set),
            PbaccStatus::InvalidArgument
        );
        pbacc_grid_free(g);
    }
}

#[test]
fn leakage_and_rme() {
    let g = grid(4, 4, 16);
    let colluders = [0usize, 5];
    let mut bits = 0.0;
    unsafe {
        assert_eq!(
            pbacc_leakage_bound(g, colluders.as_ptr(), 2, 100.0, 1e4, 0.0, &mut bits),
            PbaccStatus::Ok
        );
        assert!(bits >= 0.0 && bits.is_finite());
        let mut louder = 0.0;
        assert_eq!(
            pbacc_leakage_bound(g, colluders.as_ptr(), 2, 100.0, 1e2, 0.0, &mut louder),
            PbaccStatus::Ok
        );
        assert!(louder > bits);
        let bad = [99usize];
        assert_eq!(
            pbacc_leakage_bound(g, bad.as_ptr(), 1, 100.0, 1e4, 0.0, &mut bits),
            PbaccStatus::InvalidArgument
        );
        pbacc_grid_free(g);

        let plain = grid(4, 0, 16);
        assert_eq!(
            pbacc_leakage_bound(plain, colluders.as_ptr(), 2, 100.0, 1e4, 0.0, &mut bits),
            PbaccStatus::UnboundedLeakage
        );
        pbacc_grid_free(plain);

        let approx = [1.1, 2.0, 5.0];
        let exact = [1.0, 2.0, 0.0];
        let mut r = 0.0;
        assert_eq!(
            pbacc_rme(approx.as_ptr(), exact.as_ptr(), 3, &mut r),
            PbaccStatus::Ok
        );
        assert!((r - 0.05).abs() < 1e-12);
        assert_eq!(
            pbacc_rme(exact[2..].as_ptr(), exact[2..].as_ptr(), 1, &mut r),
            PbaccStatus::InvalidArgument
        );
    }
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("pbacc.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build script");
    for name in [
        "pbacc_grid_new",
        "pbacc_encode",
        "pbacc_decode",
        "pbacc_leakage_bound",
        "PBACC_STATUS_PANIC",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ PbaccGrid *g = 0; return pbacc_grid_new(4, 0, 8, 10.0, &g) == PBACC_STATUS_OK ? 0 : 1; }}\n",
            header.display()
        ),
    )
    .unwrap();
    match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&src)
        .status()
    {
        Ok(status) => assert!(status.success(), "header failed to compile"),
        Err(_) => eprintln!("cc not available; syntax check skipped"),
    }
}
