//! Exercise the C ABI through the exported functions, the way a foreign
//! caller would: raw pointers, explicit lengths, status codes.

use std::os::raw::c_char;
use std::ptr;

use modid_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { modid_last_error_message(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8_lossy(&buf).into_owned()
}

#[test]
fn hill_roundtrip_and_error_paths() {
    unsafe {
        let mut hill: *mut ModidHill = ptr::null_mut();
        let st = modid_hill_new(0, 0.797, 0.494, 4.0, 0.443, &mut hill);
        assert_eq!(st, ModidStatus::Ok);
        let mut y = 0.0;
        assert_eq!(modid_hill_eval(hill, 0.0, &mut y), ModidStatus::Ok);
        assert_eq!(y, 0.443);
        assert_eq!(modid_hill_eval(hill, 1.0, &mut y), ModidStatus::Ok);
        assert!((y - 1.1952035913007696).abs() < 1e-13);
        modid_hill_free(hill);

        // Invalid parameters surface as a status code plus a message.
        let mut bad: *mut ModidHill = ptr::null_mut();
        let st = modid_hill_new(0, 1.0, -0.5, 2.0, 0.0, &mut bad);
        assert_eq!(st, ModidStatus::InvalidParameter);
        assert!(last_error().contains("half_point"), "{}", last_error());
        assert!(bad.is_null());

        // Null out pointer.
        assert_eq!(
            modid_hill_new(0, 1.0, 0.5, 2.0, 0.0, ptr::null_mut()),
            ModidStatus::NullPointer
        );

        // Freeing null is a no-op.
        modid_hill_free(ptr::null_mut());
    }
}

#[test]
fn map_eval_matches_reference_values() {
    unsafe {
        let theta = [0.703f64, 0.204];
        let mut map: *mut ModidMap = ptr::null_mut();
        assert_eq!(modid_map_new(theta.as_ptr(), 2, &mut map), ModidStatus::Ok);

        let y = [0.35498448306955712f64, 0.23034649917891190];
        let mut out = [0.0f64; 2];
        assert_eq!(modid_map_eval(map, y.as_ptr(), 2, out.as_mut_ptr()), ModidStatus::Ok);
        assert!((out[0] - 0.15741450485245486).abs() < 1e-15);
        assert!((out[1] - 0.029640930732238206).abs() < 1e-15);

        // Negative module output is a domain error.
        let bad = [-0.1f64, 0.2];
        assert_eq!(
            modid_map_eval(map, bad.as_ptr(), 2, out.as_mut_ptr()),
            ModidStatus::Domain
        );
        modid_map_free(map);
    }
}

#[test]
fn recover_inverts_forward_map_and_flags_degeneracy() {
    unsafe {
        let theta = [0.7f64, 0.2];
        let f1 = [0.4f64, 1.1, 0.9];
        let f2 = [0.8f64, 0.3, 0.5];
        let mut g = [0.0f64; 8];
        assert_eq!(
            modid_forward_map(theta.as_ptr(), f1.as_ptr(), f2.as_ptr(), g.as_mut_ptr()),
            ModidStatus::Ok
        );

        let probes = [0.25f64, 0.75, 0.25, 0.75];
        let mut theta_out = [0.0f64; 2];
        let mut f1_out = [0.0f64; 3];
        let mut f2_out = [0.0f64; 3];
        assert_eq!(
            modid_recover(
                probes.as_ptr(),
                g.as_ptr(),
                theta_out.as_mut_ptr(),
                f1_out.as_mut_ptr(),
                f2_out.as_mut_ptr()
            ),
            ModidStatus::Ok
        );
        for (got, want) in theta_out.iter().zip(theta.iter()) {
            assert!((got - want).abs() / want < 1e-10);
        }
        for (got, want) in f1_out.iter().zip(f1.iter()).chain(f2_out.iter().zip(f2.iter())) {
            assert!((got - want).abs() / want < 1e-10);
        }

        // Coincident probe responses: constant f1.
        let f1_const = [0.6f64, 0.6, 0.6];
        assert_eq!(
            modid_forward_map(theta.as_ptr(), f1_const.as_ptr(), f2.as_ptr(), g.as_mut_ptr()),
            ModidStatus::Ok
        );
        assert_eq!(
            modid_recover(
                probes.as_ptr(),
                g.as_ptr(),
                theta_out.as_mut_ptr(),
                f1_out.as_mut_ptr(),
                f2_out.as_mut_ptr()
            ),
            ModidStatus::DegenerateProbes
        );
        assert!(last_error().contains("module 1"), "{}", last_error());
    }
}

#[test]
fn counterexample_transform_matches_hand_value() {
    unsafe {
        let mut out = 0.0f64;
        assert_eq!(
            modid_counterexample_transform(5.0, 2.0, 0.5, &mut out),
            ModidStatus::Ok
        );
        assert!((out - 5.0).abs() < 1e-12);
        assert_eq!(
            modid_counterexample_transform(-1.0, 2.0, 0.5, &mut out),
            ModidStatus::InvalidParameter
        );
    }
}

#[test]
fn rre_steady_state_through_the_abi() {
    unsafe {
        let mut params: *mut ModidRre = ptr::null_mut();
        assert_eq!(modid_rre_default_single(&mut params), ModidStatus::Ok);
        let mut n = 0usize;
        assert_eq!(modid_rre_n_modules(params, &mut n), ModidStatus::Ok);
        assert_eq!(n, 1);

        let u = [1.0f64];
        let mut y_newton = [0.0f64];
        assert_eq!(
            modid_rre_steady_state(params, u.as_ptr(), 1, 1, y_newton.as_mut_ptr()),
            ModidStatus::Ok
        );
        let mut y_integrate = [0.0f64];
        assert_eq!(
            modid_rre_steady_state(params, u.as_ptr(), 1, 0, y_integrate.as_mut_ptr()),
            ModidStatus::Ok
        );
        assert!((y_newton[0] - y_integrate[0]).abs() / y_newton[0] < 1e-8);
        assert!(y_newton[0] > 0.0);

        assert_eq!(
            modid_rre_steady_state(params, u.as_ptr(), 1, 7, y_newton.as_mut_ptr()),
            ModidStatus::InvalidParameter
        );
        modid_rre_free(params);
    }
}

#[test]
fn model_checkpoint_load_and_predict() {
    use modid::experiment::Checkpoint;
    use modid::nnet::Mlp;
    use modid::train::{ModularModel, Predict};

    let nets = vec![
        Mlp::kaiming(&[1, 6, 1], 3).unwrap(),
        Mlp::kaiming(&[1, 6, 1], 4).unwrap(),
    ];
    let model = ModularModel::new(nets, 3.0).unwrap();
    let ckpt = Checkpoint::from_modular(&model, 3, 0);
    let dir = tempdir();
    let path = dir.join("ckpt.json");
    modid::io::save_json_pretty(&path, &ckpt).unwrap();

    let c_path = std::ffi::CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut handle: *mut ModidModel = ptr::null_mut();
        assert_eq!(modid_model_load(c_path.as_ptr(), &mut handle), ModidStatus::Ok);
        let mut dim = 0usize;
        assert_eq!(modid_model_input_dim(handle, &mut dim), ModidStatus::Ok);
        assert_eq!(dim, 2);

        let u = [0.3f64, 0.9];
        let mut out = [0.0f64; 2];
        assert_eq!(
            modid_model_predict(handle, u.as_ptr(), 2, out.as_mut_ptr(), 2),
            ModidStatus::Ok
        );
        let expect = model.predict(&u).unwrap();
        assert_eq!(out.as_slice(), expect.as_slice());

        // Wrong output length is a shape error.
        assert_eq!(
            modid_model_predict(handle, u.as_ptr(), 2, out.as_mut_ptr(), 1),
            ModidStatus::Shape
        );
        modid_model_free(handle);

        // Missing file maps to an IO status.
        let missing = std::ffi::CString::new("/nonexistent/ckpt.json").unwrap();
        let mut h2: *mut ModidModel = ptr::null_mut();
        assert_eq!(modid_model_load(missing.as_ptr(), &mut h2), ModidStatus::Io);
    }

    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn version_is_reported() {
    let mut buf = vec![0u8; 32];
    let n = unsafe { modid_version(buf.as_mut_ptr() as *mut c_char, buf.len()) };
    assert!(n >= 5);
    assert_eq!(&buf[..n], env!("CARGO_PKG_VERSION").as_bytes());
}

fn tempdir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("modid_ffi_test_{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
