//! Singular Hochschild cohomology of S3xS3 through the Tate–Hochschild cone, with the long
//! exact sequence and the homotopy retract checked.

use gh_workbench::hochschild::Window;
use gh_workbench::workbench::load_algebra;
use rand::SeedableRng;

fn main() {
    let path = format!("{}/fixtures/S3xS3.json", env!("CARGO_MANIFEST_DIR"));
    let cx = load_algebra(path.as_ref()).unwrap();
    let report = cx.hh_sg(Window::new(-2, 9)).unwrap();
    for (degree, dim) in report.dims() {
        println!("HH_sg^{degree} = {dim} (case formula {:?})", report.predicted_dim(cx.k(), degree));
    }
    println!("exact nodes: {}/{}", report.exactness.iter().filter(|n| n.exact).count(), report.exactness.len());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let retract = cx.retract_check(Window::new(0, 6), 30, 3, &mut rng).unwrap();
    println!("retract: {} basis elements, {} samples, {} failures", retract.basis_checked, retract.samples_checked, retract.failures.len());
}
