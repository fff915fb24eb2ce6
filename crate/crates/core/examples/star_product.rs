//! The product on reduced Hochschild chains of S3: a few chain-level products and the
//! multiplication table on homology classes.

use gh_workbench::hochschild::{Chain, Window};
use gh_workbench::linalg::{format_scalar, scalar};
use gh_workbench::signs::Word;
use gh_workbench::workbench::load_algebra;

fn main() {
    let path = format!("{}/fixtures/S3.json", env!("CARGO_MANIFEST_DIR"));
    let cx = load_algebra(path.as_ref()).unwrap();
    let (one, x) = (cx.unit(), cx.alg.index_of("x").unwrap() as u16);
    let word = |bars: Vec<u16>, tail| Chain::from([(Word::new(bars, tail), scalar(1))]);
    for p in 0..3 {
        let alpha = word(vec![x; p], one);
        let beta = word(vec![x], one);
        println!("{} ⋆ {} = {}", cx.format_chain(&alpha), cx.format_chain(&beta), cx.format_chain(&cx.star(&alpha, &beta)));
    }
    let table = cx.star_table(Window::new(1, 8)).unwrap();
    for (((dl, _), (dr, _)), (degree, coords)) in &table.entries {
        let coords: Vec<String> = coords.iter().map(format_scalar).collect();
        println!("[{dl}] · [{dr}] = {} · [{degree}]", coords.join(", "));
    }
}
