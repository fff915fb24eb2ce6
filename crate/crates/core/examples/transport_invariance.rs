//! Transports singular Hochschild cohomology along x ↦ 2x on S3 and checks that the product
//! table on reduced classes is preserved.

use std::sync::Arc;

use gh_workbench::hochschild::Window;
use gh_workbench::linalg::format_scalar;
use gh_workbench::transport::{gh_invariance_check, DgMorphism, ZigZagArrow};
use gh_workbench::workbench::{load_algebra, parse_morphism};

fn main() {
    let file = parse_morphism(format!("{}/fixtures/scale2.json", env!("CARGO_MANIFEST_DIR")).as_ref()).unwrap();
    let cx = Arc::new(load_algebra(&file.source).unwrap());
    let morphism = DgMorphism::from_description(cx.clone(), cx.clone(), &file.description).unwrap();
    let window = Window::new(0, 8);
    let report = cx.hh_sg(window).unwrap();
    let arrows = [ZigZagArrow { morphism, direction: file.description.direction }];
    let check = gh_invariance_check(&arrows, &[report.clone(), report], window).unwrap();
    for piece in &check.transport.degrees {
        let rows: Vec<String> =
            piece.composite.to_dense().iter().map(|r| r.iter().map(format_scalar).collect::<Vec<_>>().join(" ")).collect();
        println!("degree {}: [{}]", piece.degree, rows.join("; "));
    }
    println!("invariance {}", if check.passed() { "holds" } else { "fails" });
}
