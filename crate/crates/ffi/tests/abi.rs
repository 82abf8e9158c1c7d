use std::f64::consts::PI;
use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use pla_core::analytics::{p_m_mdlg, AnalyticQuery};
use pla_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(pla_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn analytic_entry_points_match_core() {
    let (mut v, mut lg) = (0.0, 0.0);
    let st = unsafe { pla_p_m_mdlg(128, 2, 0.7, 100_000, &mut v, &mut lg) };
    assert_eq!(st, PlaStatus::Ok);
    let core = p_m_mdlg(&AnalyticQuery::m_ary(128, 2, 0.7, 100_000).unwrap()).unwrap();
    assert_eq!(v, core.value);
    assert_eq!(lg, core.log10);

    let st = unsafe { pla_p_mdlg(56, 0.7, 1000, &mut v, &mut lg) };
    assert_eq!(st, PlaStatus::Ok);
    assert!(v > 0.0 && v < 1.0);

    let mut n = 0i64;
    assert_eq!(unsafe { pla_n_max(56, 1, 1000, &mut n) }, PlaStatus::Ok);
    // 2 * (1 + 55 + C(55,2)) = 3082 > 1000 >= 2 * 56
    assert_eq!(n, 1);
    assert_eq!(unsafe { pla_n_max(56, 1, 1, &mut n) }, PlaStatus::Ok);
    assert_eq!(n, -1);

    assert_eq!(unsafe { pla_random_guess(8, 64, &mut v, &mut lg) }, PlaStatus::Ok);
    assert!((v - 0.25).abs() < 1e-15);

    let mut x = 0.0;
    assert_eq!(unsafe { pla_incomplete_beta(0.5, 2.0, 2.0, &mut x) }, PlaStatus::Ok);
    assert!((x - 0.5).abs() < 1e-14);
}

#[test]
fn errors_set_status_and_message() {
    let (mut v, mut lg) = (0.0, 0.0);
    let st = unsafe { pla_p_mdlg(56, 1.5, 1000, &mut v, &mut lg) };
    assert_eq!(st, PlaStatus::Parameter);
    assert!(!last_error().is_empty());

    let st = unsafe { pla_p_m_mdlg(10, 3, 0.7, 10, &mut v, &mut lg) };
    assert_ne!(st, PlaStatus::Ok);

    let st = unsafe { pla_p_mdlg(56, 0.7, 1000, ptr::null_mut(), &mut lg) };
    assert_eq!(st, PlaStatus::NullPointer);
    assert_eq!(last_error(), "null pointer argument");

    let mut p = 0.0;
    let mut acc = false;
    let st = unsafe { pla_frequency_test(ptr::null(), 5, 0.1, &mut p, &mut acc) };
    assert_eq!(st, PlaStatus::NullPointer);
}

#[test]
fn frequency_test_through_abi() {
    let bits = [1u8, 0, 1, 1, 0, 1, 0, 1, 0, 0];
    let mut p = 0.0;
    let mut acc = false;
    assert_eq!(
        unsafe { pla_frequency_test(bits.as_ptr(), bits.len(), 0.01, &mut p, &mut acc) },
        PlaStatus::Ok
    );
    // balanced sequence: S_n = 0
    assert_eq!(p, 1.0);
    assert!(acc);

    let ones = [1u8; 100];
    assert_eq!(
        unsafe { pla_frequency_test(ones.as_ptr(), ones.len(), 0.01, &mut p, &mut acc) },
        PlaStatus::Ok
    );
    assert!(p < 1e-20);
    assert!(!acc);
}

#[test]
fn attack_and_enumerator_agree() {
    let z = [0.0, PI / 4.0, PI, PI];
    let truth = [1u8, 1, 0, 1];
    let mut report = PlaAttackReport::default();
    let st = unsafe { pla_attack(z.as_ptr(), z.len(), truth.as_ptr(), truth.len(), 1, 100, &mut report) };
    assert_eq!(st, PlaStatus::Ok);
    assert!(report.success);
    assert_eq!(report.candidates_tried, 8);

    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { pla_enumerator_new(z.as_ptr(), z.len(), 1, 100, &mut h) },
        PlaStatus::Ok
    );
    assert_eq!(unsafe { pla_enumerator_key_bits(h) }, 4);
    let mut buf = [0u8; 4];
    let mut level = 0u64;
    let mut seen = Vec::new();
    loop {
        match unsafe { pla_enumerator_next(h, buf.as_mut_ptr(), buf.len(), &mut level) } {
            PlaStatus::Ok => seen.push((buf, level)),
            PlaStatus::Exhausted => break,
            other => panic!("{other:?}: {}", last_error()),
        }
    }
    unsafe { pla_enumerator_free(h) };
    assert_eq!(seen.len(), 16);
    let pos = seen.iter().position(|(k, _)| *k == truth).unwrap();
    assert_eq!(pos + 1, 8);
    assert_eq!(seen[pos].1, 1);
    assert_eq!(seen[0].1, 0);

    let mut small = [0u8; 3];
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { pla_enumerator_new(z.as_ptr(), z.len(), 1, 100, &mut h) },
        PlaStatus::Ok
    );
    assert_eq!(
        unsafe { pla_enumerator_next(h, small.as_mut_ptr(), small.len(), ptr::null_mut()) },
        PlaStatus::BufferTooSmall
    );
    unsafe { pla_enumerator_free(h) };
    unsafe { pla_enumerator_free(ptr::null_mut()) };
}

#[test]
fn channel_handle_is_deterministic() {
    let sample = |seed: u64, index: u64| {
        let mut h = ptr::null_mut();
        assert_eq!(
            unsafe { pla_channel_new(PlaChannelModel::Ar1ComplexGaussian, 0.9, 16, seed, &mut h) },
            PlaStatus::Ok
        );
        let mut a = [0.0; 16];
        let mut p = [0.0; 16];
        assert_eq!(
            unsafe { pla_channel_sample(h, index, a.as_mut_ptr(), p.as_mut_ptr(), 16) },
            PlaStatus::Ok
        );
        unsafe { pla_channel_free(h) };
        (a, p)
    };
    let (a, p) = sample(7, 3);
    assert_eq!((a, p), sample(7, 3));
    assert_ne!(p, sample(8, 3).1);
    assert!(a.iter().all(|&x| x > 0.0));
    assert!(p.iter().all(|&x| x > -PI && x <= PI));

    let mut h = ptr::null_mut();
    let st = unsafe { pla_channel_new(PlaChannelModel::FlatFading, 0.5, 0, 1, &mut h) };
    assert_ne!(st, PlaStatus::Ok);
    assert!(h.is_null());
}

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test-binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "pla.h"

int main(void) {
    double v, lg;
    if (pla_p_m_mdlg(128, 2, 0.7, 100000, &v, &lg) != PLA_STATUS_OK) return 1;
    if (!(v > 0.0 && v < 1.0)) return 2;
    if (pla_p_mdlg(56, 2.0, 10, &v, &lg) != PLA_STATUS_PARAMETER) return 3;
    if (pla_last_error_message()[0] == '\0') return 4;

    double z[4] = {0.0, M_PI / 4, M_PI, M_PI};
    uint8_t key[4] = {1, 1, 0, 1};
    PlaAttackReport r;
    if (pla_attack(z, 4, key, 4, 1, 100, &r) != PLA_STATUS_OK) return 5;
    if (!r.success || r.candidates_tried != 8) return 6;

    PlaEnumerator *e = NULL;
    if (pla_enumerator_new(z, 4, 1, 100, &e) != PLA_STATUS_OK) return 7;
    uint8_t buf[4];
    uint64_t level;
    int count = 0;
    while (pla_enumerator_next(e, buf, 4, &level) == PLA_STATUS_OK) count++;
    pla_enumerator_free(e);
    if (count != 16) return 8;
    printf("ok %g\n", v);
    return 0;
}
"#;

#[test]
fn header_compiles_and_links_from_c() {
    let Ok(cc) = std::env::var("CC").or_else(|_| which("cc")) else {
        eprintln!("no C compiler on PATH, skipping");
        return;
    };
    let lib = target_dir().join("libpla_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("smoke");
    let out = Command::new(cc)
        .arg("-std=c11")
        .arg("-D_DEFAULT_SOURCE")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}

fn which(name: &str) -> Result<String, ()> {
    let path = std::env::var_os("PATH").ok_or(())?;
    std::env::split_paths(&path)
        .map(|d| d.join(name))
        .find(|p| p.is_file())
        .map(|p| p.to_string_lossy().into_owned())
        .ok_or(())
}
