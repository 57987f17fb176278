use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").unwrap();
    let out = PathBuf::from(&crate_dir).join("include").join("d2dcell.h");
    std::fs::create_dir_all(out.parent().unwrap()).unwrap();
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_language(cbindgen::Language::C)
        .with_include_guard("D2DCELL_H")
        .with_documentation(true)
        .generate()
        .expect("cbindgen header generation")
        .write_to_file(&out);
    println!("cargo:rerun-if-changed=src/lib.rs");
}
