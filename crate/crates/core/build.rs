use std::env;
use std::fs;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

const REFERENCE: &str = "data/reference.toml";

fn main() {
    println!("cargo:rerun-if-changed={REFERENCE}");
    let bytes = fs::read(REFERENCE).unwrap_or_else(|e| panic!("reading {REFERENCE}: {e}"));
    let hex: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    let out = PathBuf::from(env::var_os("OUT_DIR").expect("OUT_DIR is set by cargo"));
    fs::write(
        out.join("reference_sha256.rs"),
        format!("pub const REFERENCE_SHA256: &str = \"{hex}\";\n"),
    )
    .expect("writing checksum");
}
