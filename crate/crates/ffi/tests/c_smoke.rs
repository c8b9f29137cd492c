//! Compiles a small C program against the generated header and the static
//! library, then runs it.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <math.h>
#include "szego.h"

int main(void) {
    double re[3] = {1.0, 0.0, 0.0}, im[3] = {0.0, 0.0, 0.0};
    SzSpectrum *u = NULL;
    if (sz_spectrum_new(re, im, 3, &u) != SZ_STATUS_OK) return 1;
    SzConserved k;
    if (sz_conserved(u, &k) != SZ_STATUS_OK || fabs(k.q - 1.0) > 1e-14) return 2;
    SzFlowConfig cfg = {1e-3, 1.0, 2, 100, 1, SZ_INTEGRATOR_GAUSS_LEGENDRE6};
    SzTrajectory *tr = NULL;
    if (sz_evolve(u, &cfg, &tr) != SZ_STATUS_OK) return 3;
    if (sz_trajectory_len(tr) != 11) return 4;
    SzRational s;
    if (sz_find_blowup_initial(2.0, 1.0, 0.5, &s) != SZ_STATUS_OK) return 5;
    double kappa = 0.0;
    if (sz_kappa(4.0, 1.0, &kappa) != SZ_STATUS_INFEASIBLE) return 6;
    if (sz_last_error_message() == NULL) return 7;
    sz_trajectory_free(tr);
    sz_spectrum_free(u);
    printf("ok\n");
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let Ok(cc) = std::env::var("CC").or_else(|_| which("cc").ok_or(())) else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libszego_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(&src, PROGRAM).unwrap();
    let bin = dir.path().join("smoke");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

fn which(name: &str) -> Option<String> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path).map(|d| d.join(name)).find(|p| p.is_file()).map(|p| p.display().to_string())
}
