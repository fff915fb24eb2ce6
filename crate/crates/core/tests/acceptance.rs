//! Acceptance battery: one line per criterion, every comparison exact.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use gh_workbench::checks::{self, CheckLine};
use gh_workbench::frobenius::FrobeniusAlgebra;
use gh_workbench::hochschild::{Chain, Complexes, Window};
use gh_workbench::linalg::{scalar, Scalar};
use gh_workbench::products::HomotopySigns;
use gh_workbench::signs::{sign, Word};
use gh_workbench::transport::{gh_invariance_check, DgMorphism, ZigZagArrow};
use gh_workbench::workbench::{self, emit_report, run, run_cached, Format, RunConfig};
use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ALL: &[&str] = &["S2", "S3", "CP2", "S7", "S3xS3", "S7dg"];

type Outcome = Result<String, String>;

fn path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn algebra(name: &str) -> Complexes {
    workbench::load_algebra(&path(&format!("{name}.json"))).expect("fixture loads")
}

fn ensure(condition: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(message())
    }
}

fn lines(lines: &[CheckLine]) -> Result<(), String> {
    match lines.iter().find(|l| !l.passed) {
        None => Ok(()),
        Some(l) => Err(format!("{}: {}", l.name, l.detail)),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn frobenius_validation() -> Outcome {
    let mut caught = 0;
    for name in ["S2", "S3", "CP2"] {
        let desc = workbench::parse_algebra(&path(&format!("{name}.json"))).map_err(|e| e.to_string())?;
        FrobeniusAlgebra::validate(&desc).map_err(|e| format!("{name}: {e}"))?;
        let line = checks::mutation_suite(&desc, 120, &mut rng(1));
        lines(std::slice::from_ref(&line))?;
        caught += 120;
    }
    Ok(format!("3 fixtures valid, {caught} mutations caught with a named axiom"))
}

fn casimir_suite() -> Outcome {
    for name in ALL {
        let cx = algebra(name);
        let failures = cx.alg.verify_casimir_identities();
        ensure(failures.is_empty(), || format!("{name}: {}", failures[0]))?;
    }
    let s3 = algebra("S3");
    let terms: Vec<(String, String, Scalar)> = s3
        .alg
        .casimir()
        .iter()
        .map(|t| (s3.alg.basis_name(t.left).to_string(), s3.alg.basis_name(t.right).to_string(), t.coeff.clone()))
        .collect();
    let expected = vec![("1".to_string(), "x".to_string(), scalar(1)), ("x".to_string(), "1".to_string(), scalar(-1))];
    ensure(terms == expected, || format!("Casimir of S3 is {}", s3.alg.format_casimir()))?;
    ensure(s3.alg.euler_char().is_empty(), || "χ(S3) ≠ 0".into())?;
    for (name, top, value) in [("S2", "x", 2), ("CP2", "x2", 3)] {
        let cx = algebra(name);
        let index = cx.alg.index_of(top).expect("top class");
        let expected = BTreeMap::from([(index, scalar(value))]);
        ensure(cx.alg.euler_char() == expected, || format!("χ({name}) = {}", cx.alg.format_vec(&cx.alg.euler_char())))?;
    }
    Ok(format!("identities hold on {} fixtures; Casimir(S3) = 1⊗x − x⊗1; χ = 0, 2x, 3x²", ALL.len()))
}

fn d_squared() -> Outcome {
    let mut detail = Vec::new();
    for name in ALL {
        let cx = algebra(name);
        // Level 2 of the 15-dimensional S7dg has over two million basis cochains in degree −2.
        let max_level = if *name == "S7dg" { 1 } else { 2 };
        let suite = checks::d_squared_suite(&cx, Window::new(-2, 12), max_level).map_err(|e| e.to_string())?;
        lines(&suite)?;
        detail.push(format!("{name} (p ≤ {max_level}) {}", suite.iter().map(|l| l.detail.split(' ').next().unwrap_or("")).collect::<Vec<_>>().join("/")));
    }
    Ok(format!("∂²/δ²/D² basis checks: {}", detail.join(", ")))
}

fn leibniz_anomaly() -> Outcome {
    let mut detail = Vec::new();
    for name in ["S2", "S3"] {
        let cx = algebra(name);
        let (line, nonzero) = checks::anomaly_census(&cx, Window::new(0, 8)).map_err(|e| e.to_string())?;
        lines(std::slice::from_ref(&line))?;
        ensure((nonzero > 0) == (name == "S2"), || format!("{name}: {nonzero} nonzero anomalies"))?;
        detail.push(format!("{name}: {}", line.detail));
    }
    Ok(detail.join("; "))
}

fn associativity() -> Outcome {
    let mut detail = Vec::new();
    for name in ["S2", "S3"] {
        let line = checks::associativity_suite(&algebra(name), 9).map_err(|e| e.to_string())?;
        lines(std::slice::from_ref(&line))?;
        detail.push(format!("{name}: {}", line.detail));
    }
    Ok(detail.join("; "))
}

fn retract() -> Outcome {
    let mut detail = Vec::new();
    for name in ["S2", "S3"] {
        let line = checks::retract_suite(&algebra(name), Window::new(-2, 8), 60, 4, &mut rng(7)).map_err(|e| e.to_string())?;
        lines(std::slice::from_ref(&line))?;
        detail.push(format!("{name}: {}", line.detail));
    }
    Ok(detail.join("; "))
}

fn bridge() -> Outcome {
    let mut detail = Vec::new();
    for name in ["S2", "S3", "CP2"] {
        let line = checks::bridge_suite(&algebra(name), Window::new(0, 6), 60, &mut rng(11)).map_err(|e| e.to_string())?;
        lines(std::slice::from_ref(&line))?;
        detail.push(format!("{name}: {}", line.detail));
    }
    Ok(detail.join("; "))
}

fn cup_versus_cup_prime() -> Outcome {
    let mut detail = Vec::new();
    for name in ["S2", "S3", "CP2"] {
        let cx = algebra(name);
        let suite = checks::cup_homotopy_suite(&cx, 30, &mut rng(13)).map_err(|e| e.to_string())?;
        lines(&suite)?;
        detail.push(format!("{name}: {}", suite[0].detail));
    }
    // The printed sign pattern, measured on the same draws.
    let cx = algebra("S2");
    let mut r = rng(13);
    let (mut displayed_failures, mut drawn) = (0, 0);
    while drawn < 30 {
        let f = cx.random_cochain(&mut r, 1, -1, 3).map_err(|e| e.to_string())?;
        let g = cx.random_cochain(&mut r, 1, 0, 3).map_err(|e| e.to_string())?;
        if f.is_zero() || g.is_zero() {
            continue;
        }
        drawn += 1;
        if !cx.cup_homotopy_residual(&f, &g, HomotopySigns::Displayed).map_err(|e| e.to_string())?.is_zero() {
            displayed_failures += 1;
        }
    }
    Ok(format!(
        "Koszul-sign form holds ({}); cup′ = cup at q = 0; printed sign pattern fails on {displayed_failures}/{drawn} S2 pairs",
        detail.join(", ")
    ))
}

fn case_split() -> Outcome {
    let window = Window::new(-2, 10);
    let mut detail = Vec::new();
    for name in ["S2", "S3"] {
        let cx = algebra(name);
        let k = cx.k();
        let report = cx.hh_sg(window).map_err(|e| e.to_string())?;
        let cochains = cx.hh_cohomology(Window::new(window.min, window.max)).map_err(|e| e.to_string())?;
        let chains = cx.hh_homology(Window::new(0, window.max - k + 1), false).map_err(|e| e.to_string())?;
        let hh_up = |i: i64| cochains.at(i).map_or(0, |d| d.dim());
        let hh_down = |i: i64| chains.at(i).map_or(0, |d| d.dim());
        let chi_zero = cx.alg.euler_is_zero();
        ensure(chi_zero == (name == "S3"), || format!("{name}: unexpected χ parity"))?;
        let mut dims = Vec::new();
        for (degree, dim) in report.dims() {
            let expected = if chi_zero {
                match degree {
                    i if i < k - 1 => hh_up(i),
                    i if i == k - 1 => hh_up(i) + hh_down(0),
                    i if i == k => hh_down(1) + hh_up(k),
                    i => hh_down(i - k + 1),
                }
            } else if degree < k {
                hh_up(degree)
            } else {
                hh_down(degree - k + 1)
            };
            ensure(dim == expected, || format!("{name} degree {degree}: cone {dim}, tables {expected}"))?;
            dims.push(dim.to_string());
        }
        detail.push(format!("{name} [{}]", dims.join(",")));
    }
    Ok(detail.join("; "))
}

/// Rank over ℚ by plain dense Gauss–Jordan elimination.
fn dense_rank(mut rows: Vec<Vec<Scalar>>) -> usize {
    let mut rank = 0;
    let width = rows.first().map_or(0, |r| r.len());
    for column in 0..width {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][column].is_zero()) else { continue };
        rows.swap(rank, pivot);
        let lead = rows[rank][column].clone();
        for r in 0..rows.len() {
            if r != rank && !rows[r][column].is_zero() {
                let factor = &rows[r][column] / &lead;
                for c in column..width {
                    let delta = &factor * &rows[rank][c];
                    rows[r][c] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn s3_hochschild_dims() -> Outcome {
    let cx = algebra("S3");
    let report = cx.hh_homology(Window::new(0, 10), false).map_err(|e| e.to_string())?;
    let dims: Vec<usize> = report.dims().into_iter().map(|(_, d)| d).collect();
    ensure(dims == [1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1], || format!("HH_*(S3) = {dims:?}"))?;
    let bases: BTreeMap<i64, Vec<Word>> = (-1..=12).map(|d| (d, cx.chain_basis(d).unwrap_or_default())).collect();
    let boundary_rank = |from: i64| -> Result<(usize, i64), String> {
        let source = &bases[&from];
        let mut target_degree = None;
        let images: Vec<Chain> = source.iter().map(|w| cx.chain_boundary_word(w)).collect();
        for image in &images {
            if let Some(d) = cx.chain_degree(image) {
                target_degree = Some(d);
            }
        }
        let Some(to) = target_degree else { return Ok((0, from)) };
        let target = bases.get(&to).ok_or("boundary leaves the tabulated range")?;
        let rows = target
            .iter()
            .map(|w| images.iter().map(|image| image.get(w).cloned().unwrap_or_else(Scalar::zero)).collect())
            .collect();
        Ok((dense_rank(rows), to))
    };
    let mut ranks_out = BTreeMap::new();
    let mut ranks_in: BTreeMap<i64, usize> = BTreeMap::new();
    for d in -1..=11 {
        let (r, to) = boundary_rank(d)?;
        ranks_out.insert(d, r);
        *ranks_in.entry(to).or_default() += if to == d { 0 } else { r };
    }
    let oracle: Vec<usize> =
        (0..=10).map(|d| bases[&d].len() - ranks_out[&d] - ranks_in.get(&d).copied().unwrap_or(0)).collect();
    ensure(oracle == dims, || format!("dense oracle {oracle:?} vs {dims:?}"))?;
    Ok(format!("HH_0..10(S3) = {dims:?}, dense elimination agrees"))
}

fn long_exact_sequence() -> Outcome {
    let mut detail = Vec::new();
    for name in ["S2", "S3"] {
        let suite = checks::singular_suite(&algebra(name), Window::new(-2, 10)).map_err(|e| e.to_string())?;
        lines(&suite)?;
        detail.push(format!("{name}: {} nodes exact", suite[1].detail.split(' ').next().unwrap_or("")));
    }
    Ok(detail.join("; "))
}

/// Hand expansion of the product on S3 words `x̄^p ⊗ a`, with Casimir `1⊗x − x⊗1` and
/// `η = |α||f| + |b| + (|α|+2)(|β|+2)`: only bar-free tails with a non-unit new bar survive.
fn s3_star_oracle(p: usize, a_is_x: bool, q: usize, b_is_x: bool) -> Option<(usize, bool, Scalar)> {
    let da = 2 * p as i64 + if a_is_x { 3 } else { 0 };
    let db = 2 * q as i64 + if b_is_x { 3 } else { 0 };
    let tail_shift = (da + 2) * (db + 2);
    match (a_is_x, b_is_x) {
        (_, false) => Some((p + q + 1, a_is_x, -sign(tail_shift))),
        (false, true) => Some((p + q + 1, true, sign(da * 3 + 3 + tail_shift))),
        (true, true) => None,
    }
}

fn s3_gh_table() -> Outcome {
    let cx = algebra("S3");
    let x = cx.alg.index_of("x").unwrap() as u16;
    let window = Window::new(1, 8);
    let table = cx.star_table(window).map_err(|e| e.to_string())?;
    let homology = cx.hh_homology(window, true).map_err(|e| e.to_string())?;
    let class_word = |degree: i64| -> Result<(usize, bool, Scalar), String> {
        let rep = homology.at(degree).ok_or("degree")?.representative(0);
        let (word, coeff) = rep.iter().next().ok_or("empty representative")?;
        ensure(rep.len() == 1, || format!("degree {degree}: representative is not a single word"))?;
        Ok((word.bars.len(), word.tail == x, coeff.clone()))
    };
    let (mut zero_products, mut bar_products) = (0, 0);
    for (((dl, il), (dr, ir)), (target, coords)) in &table.entries {
        ensure(*il == 0 && *ir == 0 && coords.len() == 1, || "S3 reduced classes are one per degree".into())?;
        let (p, a, ca) = class_word(*dl)?;
        let (q, b, cb) = class_word(*dr)?;
        let expected = match s3_star_oracle(p, a, q, b) {
            None => {
                zero_products += 1;
                Scalar::zero()
            }
            Some((bars, tail, c)) => {
                let (r, t, ct) = class_word(*target)?;
                ensure(r == bars && t == tail, || format!("{dl}·{dr}: target class is not x̄^{bars}"))?;
                if !a && !b {
                    bar_products += 1;
                    ensure(c.abs().is_one(), || "oracle coefficient is not ±1".into())?;
                }
                c * ca * cb / ct
            }
        };
        ensure(coords[0] == expected, || format!("({dl})·({dr}): table {} oracle {expected}", coords[0]))?;
    }
    let sg = cx.hh_sg(Window::new(window.min + 2, window.max + 2)).map_err(|e| e.to_string())?;
    let failures = cx.gh_table_matches_cup(&table, &sg).map_err(|e| e.to_string())?;
    ensure(failures.is_empty(), || format!("cup disagrees at {}", failures[0]))?;
    ensure(zero_products > 0 && bar_products > 0, || "window misses a product family".into())?;
    Ok(format!(
        "{} entries match the oracle ({zero_products} vanishing x-tail products, {bar_products} ±x̄^(p+q+1)⊗1); all coincide with the HH_sg cup",
        table.entries.len()
    ))
}

fn invariance() -> Outcome {
    let window = Window::new(0, 8);
    let mut detail = Vec::new();
    for file in ["id.json", "scale2.json", "S2_id.json", "S2_scale2.json"] {
        let morphism_file = workbench::parse_morphism(&path(file)).map_err(|e| e.to_string())?;
        let cx = Arc::new(workbench::load_algebra(&morphism_file.source).map_err(|e| e.to_string())?);
        let morphism =
            DgMorphism::from_description(cx.clone(), cx.clone(), &morphism_file.description).map_err(|e| e.to_string())?;
        let arrows = [ZigZagArrow { morphism, direction: morphism_file.description.direction }];
        let report = cx.hh_sg(window).map_err(|e| e.to_string())?;
        let check = gh_invariance_check(&arrows, &[report.clone(), report], window).map_err(|e| format!("{file}: {e}"))?;
        ensure(check.failures.is_empty(), || format!("{file}: {}", check.failures[0]))?;
        ensure(check.transport.degrees.len() == window.degrees().count(), || format!("{file}: degrees missing"))?;
        ensure(check.euler_zero.0 == check.euler_zero.1, || format!("{file}: χ parity"))?;
        ensure(check.mapped_table.entries == check.target_table.entries, || format!("{file}: mapped table differs"))?;
        ensure(!check.mapped_table.entries.is_empty(), || format!("{file}: empty table"))?;
        detail.push(format!("{file} ({} entries)", check.mapped_table.entries.len()));
    }
    Ok(format!("isomorphic and table-preserving: {}", detail.join(", ")))
}

fn config(command: &str, input: &str, min: i64, max: i64) -> RunConfig {
    let mut config = workbench::default_config(command, &[path(input).to_str().unwrap()]);
    config.min = min;
    config.max = max;
    config.samples = 12;
    config.seed = 5;
    config
}

fn determinism() -> Outcome {
    let runs = [
        config("validate", "S3.json", 0, 8),
        config("casimir", "S3.json", 0, 8),
        config("euler", "CP2.json", 0, 8),
        config("hh", "S3.json", 0, 10),
        config("hhcoh", "S2.json", 0, 6),
        config("hhsg", "S3.json", -2, 8),
        config("gh-table", "S3.json", 1, 8),
        config("cup-table", "S2.json", 0, 6),
        config("retract-check", "S2.json", 0, 6),
        config("les-check", "S3.json", -2, 8),
        config("anomaly-check", "S2.json", 0, 6),
        config("transport", "scale2.json", 0, 6),
        config("invariance-check", "scale2.json", 0, 6),
        config("report", "S2.json", 0, 5),
    ];
    let cache = std::env::temp_dir().join(format!("workbench-acceptance-{}", std::process::id()));
    for config in &runs {
        let first = run(config).map_err(|e| format!("{}: {e}", config.command))?;
        ensure(first.passed(), || format!("{} reports a failure", config.command))?;
        let second = run(config).map_err(|e| e.to_string())?;
        let cached = run_cached(config, &cache).map_err(|e| e.to_string())?;
        let hit = run_cached(config, &cache).map_err(|e| e.to_string())?;
        for format in [Format::Text, Format::Json, Format::Csv] {
            let bytes = emit_report(&first, format);
            for other in [&second, &cached, &hit] {
                ensure(emit_report(other, format) == bytes, || format!("{} {format:?} differs between runs", config.command))?;
            }
        }
        let bin = |extra: &[&str]| -> Result<Vec<u8>, String> {
            let mut args = vec![config.command.clone()];
            args.extend(config.inputs.iter().cloned());
            for (flag, value) in [("--min", config.min), ("--max", config.max)] {
                args.push(format!("{flag}={value}"));
            }
            args.extend(["--samples".into(), config.samples.to_string(), "--seed".into(), config.seed.to_string()]);
            args.extend(extra.iter().map(|s| s.to_string()));
            let out = Command::new(env!("CARGO_BIN_EXE_workbench")).args(&args).output().map_err(|e| e.to_string())?;
            ensure(out.status.code() == Some(0), || format!("{} exited with {:?}", config.command, out.status.code()))?;
            Ok(out.stdout)
        };
        let via_bin = bin(&["--format", "json"])?;
        ensure(via_bin == bin(&["--format", "json"])?, || format!("{}: binary output differs between runs", config.command))?;
        ensure(via_bin == emit_report(&first, Format::Json).into_bytes(), || format!("{}: binary and library differ", config.command))?;
    }
    let _ = std::fs::remove_dir_all(&cache);
    Ok(format!("{} commands byte-identical across reruns, cache hits and the binary, in text, json and csv", runs.len()))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 14] = [
        ("Frobenius validation and mutation fuzz", 1, frobenius_validation),
        ("Casimir identities and Euler characteristics", 1, casimir_suite),
        ("∂² = δ² = D² = 0 on window [−2, 12]", 10, d_squared),
        ("Leibniz anomaly against its closed form", 10, leibniz_anomaly),
        ("⋆ associativity on reduced chains", 30, associativity),
        ("homotopy retract identities", 30, retract),
        ("ι(α) ∪ ι(β) = ι(α ⋆ β)", 10, bridge),
        ("cup versus cup′ homotopy", 10, cup_versus_cup_prime),
        ("HH_sg dimension case split", 60, case_split),
        ("HH_*(S3) dimensions", 5, s3_hochschild_dims),
        ("long exact sequence exactness", 30, long_exact_sequence),
        ("GH table of S3", 30, s3_gh_table),
        ("invariance under identity and scaling", 60, invariance),
        ("determinism", 120, determinism),
    ];
    let mut failed = 0;
    for (number, (name, budget, criterion)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(criterion)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > Duration::from_secs(*budget) => Err(format!("exceeded the {budget} s budget")),
            other => other,
        };
        let (status, detail) = match &outcome {
            Ok(detail) => ("PASS", detail),
            Err(reason) => {
                failed += 1;
                ("FAIL", reason)
            }
        };
        println!("criterion {:>2} {status} {name} [{:.2} s / {budget} s]: {detail}", number + 1, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
