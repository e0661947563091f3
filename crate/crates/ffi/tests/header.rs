use std::path::Path;
use std::process::Command;

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/dwopt.h")).unwrap();
    let source = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"dwopt.h\"\nint main(void) { DwoptSpectrum s; (void)s; return DWOPT_OK; }\n",
    )
    .unwrap();
    let status = match Command::new("cc").arg("-fsyntax-only").arg("-I").arg(&include).arg(&src).status() {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler on PATH; skipping");
            return;
        }
    };
    assert!(status.success());
}
