//! Helpers shared by the CLI test files.
//
// Each test target compiles this module separately, so a helper used by
// one target looks dead in another.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use specdet::CsrMatrix64;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specdet"))
}

pub fn write_matrix(dir: &Path, name: &str, a: &CsrMatrix64) -> PathBuf {
    let path = dir.join(name);
    let mut file = std::fs::File::create(&path).unwrap();
    a.write_matrix_market(&mut file).unwrap();
    path
}

pub fn identity(n: usize) -> CsrMatrix64 {
    CsrMatrix64::from_triplets(n, (0..n).map(|i| (i, i, 1.0))).unwrap()
}

pub fn stdout_of(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

pub fn stderr_of(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

pub fn assert_exit_code(output: &Output, expected: i32) {
    assert_eq!(
        output.status.code(),
        Some(expected),
        "wrong exit code; stderr:\n{}",
        stderr_of(output)
    );
}
