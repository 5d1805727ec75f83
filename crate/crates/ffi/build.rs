use std::path::PathBuf;

fn main() {
    let dir = PathBuf::from(std::env::var("CARGO_MANIFEST_DIR").unwrap());
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let config = cbindgen::Config::from_file(dir.join("cbindgen.toml")).expect("cbindgen.toml");
    let header = dir.join("include").join("dplane.h");
    let bindings = cbindgen::generate_with_config(&dir, config).expect("header generation");
    // write_to_file leaves the file untouched when nothing changed
    bindings.write_to_file(header);
}
