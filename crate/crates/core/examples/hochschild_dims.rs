//! Hochschild homology and cohomology dimensions of S3 and CP2.

use gh_workbench::hochschild::Window;
use gh_workbench::workbench::load_algebra;

fn main() {
    for name in ["S3", "CP2"] {
        let path = format!("{}/fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"));
        let cx = load_algebra(path.as_ref()).unwrap();
        let homology = cx.hh_homology(Window::new(0, 10), false).unwrap();
        let cohomology = cx.hh_cohomology(Window::new(-6, 4)).unwrap();
        println!("{name} HH_0..10: {:?}", homology.dims().iter().map(|(_, d)| d).collect::<Vec<_>>());
        println!("{name} HH^-6..4: {:?}", cohomology.dims().iter().map(|(_, d)| d).collect::<Vec<_>>());
    }
}
