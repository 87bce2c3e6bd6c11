//! Compiles and runs a C program against the generated header and the
//! static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "ksfem.h"

int main(void) {
    KsMesh *mesh = NULL;
    if (ks_mesh_generate(4, 4, 1.0, 1.0, &mesh) != KS_STATUS_OK) return 10;
    KsAcutenessReport report;
    if (ks_mesh_check_acuteness(mesh, &report) != KS_STATUS_OK || !report.is_weakly_acute) return 11;

    KsMotility phi = { KS_MOTILITY_KIND_POWER, 1.0, 1.0, 0.0 };
    KsField u0 = { KS_FIELD_KIND_CONSTANT, 1.0, 0.0, 0.0, 0.0, 1.0 };
    KsField v0 = { KS_FIELD_KIND_CONSTANT, 2.0, 0.0, 0.0, 0.0, 1.0 };
    KsSimParams params = { 1.0, 10, 0.0, KS_INVARIANT_MODE_FAIL, true, false, NAN };
    KsSimulation *sim = NULL;
    if (ks_simulation_create(mesh, &phi, &u0, &v0, &params, &sim) != KS_STATUS_OK) {
        fprintf(stderr, "%s\n", ks_last_error_message());
        return 12;
    }
    ks_mesh_free(mesh);

    KsDiagnostics d;
    KsStatus s;
    while ((s = ks_simulation_step(sim, &d)) == KS_STATUS_OK) {}
    if (s != KS_STATUS_FINISHED || d.n != 10) return 13;

    double v[25];
    if (ks_simulation_get_v(sim, v, 25) != KS_STATUS_OK) return 14;
    double exact = 2.0 / pow(1.1, 10);
    for (int i = 0; i < 25; i++) {
        if (fabs(v[i] - exact) > 1e-11 * exact) return 15;
    }
    if (ks_simulation_get_v(sim, v, 3) != KS_STATUS_BUFFER_TOO_SMALL) return 16;
    ks_simulation_free(sim);
    printf("ok %s\n", ks_version());
    return 0;
}
"#;

fn target_dir() -> PathBuf {
    // tests run from <target>/<profile>/deps/
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let lib = target_dir().join("libksfem_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, PROGRAM).unwrap();

    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let build = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror"])
        .arg("-I")
        .arg(&include)
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .expect("C compiler runs");
    assert!(build.status.success(), "{}", String::from_utf8_lossy(&build.stderr));

    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
