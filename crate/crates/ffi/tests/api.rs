use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use hvsim_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(hvsim_last_error_message()).to_string_lossy().into_owned() }
}

#[test]
fn fixture_runs_in_both_modes() {
    let mut consoles = Vec::new();
    for virt in [false, true] {
        let mut run = ptr::null_mut();
        unsafe {
            assert_eq!(hvsim_run_fixture(ptr::null(), c("sort").as_ptr(), virt, &mut run), HvsimStatus::Ok);
            let mut len = 0;
            let data = hvsim_run_console(run, &mut len);
            consoles.push(std::slice::from_raw_parts(data, len).to_vec());
            assert!(hvsim_run_cpi(run) > 1.0);
            assert!((hvsim_run_cpi(run) * hvsim_run_ipc(run) - 1.0).abs() < 1e-12);
            assert_eq!(hvsim_run_trace_len(run) as u64, hvsim_run_instret(run));
            hvsim_run_free(run);
        }
    }
    assert_eq!(consoles[0], consoles[1]);
    assert!(consoles[0].ends_with(b"250\n"));
}

#[test]
fn config_errors_leave_config_unchanged() {
    unsafe {
        let cfg = hvsim_config_new();
        assert_eq!(hvsim_config_set(cfg, c("dcache_blocks").as_ptr(), c("100").as_ptr()), HvsimStatus::Config);
        assert!(last_error().contains("dcache_blocks") || last_error().contains("power of two"), "{}", last_error());
        assert_eq!(hvsim_config_set(cfg, c("bogus").as_ptr(), c("1").as_ptr()), HvsimStatus::Config);
        let mut run = ptr::null_mut();
        assert_eq!(hvsim_run_fixture(cfg, c("search").as_ptr(), false, &mut run), HvsimStatus::Ok);
        hvsim_run_free(run);
        assert_eq!(hvsim_config_set(cfg, c("max_instructions").as_ptr(), c("20").as_ptr()), HvsimStatus::Ok);
        assert_eq!(hvsim_run_fixture(cfg, c("search").as_ptr(), false, &mut run), HvsimStatus::LimitExhausted);
        assert_eq!(hvsim_run_fixture(cfg, c("bubble").as_ptr(), false, &mut run), HvsimStatus::Config);
        hvsim_config_free(cfg);
    }
}

#[test]
fn config_file_and_program_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("sim.cfg");
    std::fs::write(&cfg_path, "wb_stage_cycles = 2\n").unwrap();
    let prog = dir.path().join("p.s");
    std::fs::write(&prog, "    li a7, 93\n    ecall\n").unwrap();
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(hvsim_config_load(c(cfg_path.to_str().unwrap()).as_ptr(), &mut cfg), HvsimStatus::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(hvsim_run_program(cfg, c(prog.to_str().unwrap()).as_ptr(), true, &mut run), HvsimStatus::Ok);
        assert_eq!(hvsim_run_instret(run), 2);
        hvsim_run_free(run);
        assert_eq!(hvsim_run_program(cfg, c("/nonexistent.s").as_ptr(), false, &mut run), HvsimStatus::Io);
        hvsim_config_free(cfg);
        assert_eq!(hvsim_config_load(c("/nonexistent.cfg").as_ptr(), &mut cfg), HvsimStatus::Config);
    }
}

#[test]
fn counters_and_rendering() {
    unsafe {
        let mut run = ptr::null_mut();
        assert_eq!(hvsim_run_fixture(ptr::null(), c("search").as_ptr(), false, &mut run), HvsimStatus::Ok);
        let mut n = 0;
        assert_eq!(hvsim_run_counter(run, c("instret").as_ptr(), &mut n), HvsimStatus::Ok);
        assert_eq!(n, 365);
        assert_eq!(hvsim_run_counter(run, c("cpi").as_ptr(), &mut n), HvsimStatus::Config);
        assert_eq!(hvsim_run_counter(run, c("nope").as_ptr(), &mut n), HvsimStatus::Config);
        let json = hvsim_run_render(run, HvsimFormat::Json);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        hvsim_string_free(json);
        assert!(text.contains("\"instret\": 365"));
        hvsim_run_free(run);

        let mut report = ptr::null_mut();
        assert_eq!(
            hvsim_compare_fixture(ptr::null(), c("search").as_ptr(), HvsimFormat::Csv, true, &mut report),
            HvsimStatus::Ok
        );
        assert!(CStr::from_ptr(report).to_str().unwrap().starts_with("statistic,n,v,overhead_pct,overhead_vs_v_pct\n"));
        hvsim_string_free(report);
    }
}

#[test]
fn trace_lines() {
    unsafe {
        let mut out = ptr::null_mut();
        let line = c("7 0 0 40001000 00000000 17 0 0 1 01 00010");
        assert_eq!(hvsim_trace_normalize(line.as_ptr(), &mut out), HvsimStatus::Ok);
        assert_eq!(CStr::from_ptr(out).to_bytes(), line.as_bytes());
        hvsim_string_free(out);
        assert_eq!(hvsim_trace_normalize(c("7 0 0").as_ptr(), &mut out), HvsimStatus::Parse);
        assert_eq!(hvsim_trace_normalize(c"\xff".as_ptr(), &mut out), HvsimStatus::InvalidUtf8);
    }
}

#[test]
fn assembler_buffer_protocol() {
    let src = c("addi x1, x1, 1\naddi x2, x2, 2\n");
    let mut len = 0;
    unsafe {
        assert_eq!(hvsim_assemble(src.as_ptr(), 0x1_0000, ptr::null_mut(), 0, &mut len), HvsimStatus::BufferTooSmall);
        assert_eq!(len, 2);
        let mut words = [0u32; 2];
        assert_eq!(hvsim_assemble(src.as_ptr(), 0x1_0000, words.as_mut_ptr(), 2, &mut len), HvsimStatus::Ok);
        assert_eq!(words, [0x0010_8093, 0x0021_0113]);
        assert_eq!(hvsim_assemble(c("frob").as_ptr(), 0, words.as_mut_ptr(), 2, &mut len), HvsimStatus::Parse);
    }
}

#[test]
fn null_pointers_are_reported() {
    unsafe {
        assert_eq!(hvsim_run_fixture(ptr::null(), ptr::null(), false, ptr::null_mut()), HvsimStatus::NullPointer);
        assert_eq!(hvsim_config_set(ptr::null_mut(), ptr::null(), ptr::null()), HvsimStatus::NullPointer);
        assert_eq!(hvsim_run_cycles(ptr::null()), 0);
        assert!(hvsim_run_render(ptr::null(), HvsimFormat::Table).is_null());
        hvsim_run_free(ptr::null_mut());
        hvsim_config_free(ptr::null_mut());
        hvsim_string_free(ptr::null_mut());
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/hvsim.h")).unwrap();
    for name in ["hvsim_run_fixture", "hvsim_assemble", "hvsim_last_error_message", "typedef struct HvsimRun HvsimRun"]
    {
        assert!(header.contains(name), "{name}");
    }
}

#[test]
fn c_program_links_against_the_static_library() {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib_dir: PathBuf = deps.parent().unwrap().to_path_buf();
    let lib = lib_dir.join("libhvsim_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let out_dir = tempfile::tempdir().unwrap();
    let exe = out_dir.path().join("c_api");
    let manifest = env!("CARGO_MANIFEST_DIR");
    let status = Command::new("cc")
        .arg(format!("{manifest}/tests/c_api.c"))
        .arg(format!("-I{manifest}/include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(out.stdout, b"ok\n");
}
