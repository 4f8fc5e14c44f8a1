//! Builds `smoke.c` against the generated header and the static library.
//! Skipped when no C compiler is on PATH.

use std::path::{Path, PathBuf};
use std::process::Command;

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    let exe = std::env::current_exe().expect("test binary path");
    exe.parent().and_then(Path::parent).expect("target profile dir").to_path_buf()
}

#[test]
fn c_client_runs_against_static_library() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler ({cc})");
        return;
    }
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    // `cargo test` leaves the static library in deps/, `cargo build` one level up
    let dir = target_dir();
    let lib = [dir.join("deps/libschool_choice_ffi.a"), dir.join("libschool_choice_ffi.a")]
        .into_iter()
        .find(|p| p.exists())
        .expect("static library not built");
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("tests/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let fixture = manifest.join("../core/data/fixtures/EX2.json");
    let run = Command::new(&exe).arg(&fixture).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert_eq!(String::from_utf8(run.stdout).unwrap().trim(), r#"{"i1":null,"i2":"s2","i3":"s1","i4":null,"i5":"s3"}"#);
}
