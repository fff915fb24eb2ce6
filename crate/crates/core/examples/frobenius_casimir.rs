//! Validates the sphere fixtures and prints their Casimir elements and Euler characteristics.

use gh_workbench::workbench::load_algebra;

fn main() {
    for name in ["S2", "S3", "CP2", "S3xS3"] {
        let path = format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"));
        let cx = load_algebra(path.as_ref()).expect("fixture is a dg Frobenius algebra");
        let alg = &cx.alg;
        println!("{name}: k = {}, Δ(1) = {}, χ = {}", alg.k(), alg.format_casimir(), alg.format_vec(&alg.euler_char()));
        println!("  Casimir identity failures: {}", alg.verify_casimir_identities().len());
    }
}
