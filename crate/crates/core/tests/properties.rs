//! Randomized invariants over matrices, sign rules and generated Frobenius algebras.

use std::collections::BTreeSet;

use gh_workbench::checks;
use gh_workbench::frobenius::{
    AlgebraDescription, BasisEntry, Coefficient, FrobeniusAlgebra, FrobeniusError, PairingEntry, ProductEntry, Term,
};
use gh_workbench::hochschild::{Complexes, Window};
use gh_workbench::linalg::{kernel, rank, ratio, Scalar, SparseMatrix};
use gh_workbench::signs::permutation_sign;
use gh_workbench::workbench::{emit_algebra, parse_algebra_str};
use num_traits::Zero;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn dense_rank(mut rows: Vec<Vec<Scalar>>) -> usize {
    let width = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for column in 0..width {
        let Some(pivot) = (rank..rows.len()).find(|&r| !rows[r][column].is_zero()) else { continue };
        rows.swap(rank, pivot);
        for r in rank + 1..rows.len() {
            let factor = &rows[r][column] / &rows[rank][column];
            for c in column..width {
                let delta = &factor * &rows[rank][c];
                rows[r][c] -= delta;
            }
        }
        rank += 1;
    }
    rank
}

fn sparse_matrix() -> impl Strategy<Value = Vec<Vec<Scalar>>> {
    (1usize..=30, 1usize..=30).prop_flat_map(|(rows, cols)| {
        // Mostly zeros with small entries, so low ranks and cancellations both occur.
        let entry = prop_oneof![4 => Just(0i64), 1 => -3i64..=3];
        prop::collection::vec(prop::collection::vec(entry.prop_map(|n| ratio(n, 1)), cols), rows)
    })
}

/// `Q[x]/(x^{n+1})` with `|x| = d`, pairing `<x^i, x^{n-i}> = c`.
fn truncated_polynomial(n: usize, d: i64, c: Scalar) -> AlgebraDescription {
    let name = |i: usize| if i == 0 { "1".to_string() } else { format!("x{i}") };
    let basis = (0..=n).map(|i| BasisEntry { name: name(i), deg: d * i as i64 }).collect();
    let mut product = Vec::new();
    let mut pairing = Vec::new();
    for i in 1..=n {
        for j in 1..=n {
            let to = if i + j <= n { vec![Term { basis: name(i + j), coeff: Coefficient(ratio(1, 1)) }] } else { vec![] };
            product.push(ProductEntry { left: name(i), right: name(j), to });
        }
    }
    for i in 0..=n {
        pairing.push(PairingEntry { left: name(i), right: name(n - i), value: Coefficient(c.clone()) });
    }
    AlgebraDescription {
        name: format!("P{n}_{d}"),
        degree_k: d * n as i64,
        basis,
        unit: "1".into(),
        product,
        differential: vec![],
        pairing,
    }
}

fn nonzero_ratio() -> impl Strategy<Value = Scalar> {
    (prop_oneof![-5i64..=-1, 1i64..=5], 1i64..=4).prop_map(|(p, q)| ratio(p, q))
}

/// Axioms of a differential-free description, checked on dense structure constants.
fn oracle_violations(desc: &AlgebraDescription) -> BTreeSet<&'static str> {
    let dim = desc.basis.len();
    let index = |name: &str| desc.basis.iter().position(|b| b.name == name).unwrap();
    let deg: Vec<i64> = desc.basis.iter().map(|b| b.deg).collect();
    let unit = index(&desc.unit);
    let basis_vector = |i: usize| (0..dim).map(|j| ratio((i == j) as i64, 1)).collect::<Vec<_>>();
    let mut m = vec![vec![vec![ratio(0, 1); dim]; dim]; dim];
    for a in 0..dim {
        m[unit][a] = basis_vector(a);
        m[a][unit] = basis_vector(a);
    }
    for entry in &desc.product {
        let (a, b) = (index(&entry.left), index(&entry.right));
        m[a][b] = vec![ratio(0, 1); dim];
        for t in &entry.to {
            m[a][b][index(&t.basis)] += t.coeff.0.clone();
        }
    }
    let mut g = vec![vec![ratio(0, 1); dim]; dim];
    for entry in &desc.pairing {
        g[index(&entry.left)][index(&entry.right)] += entry.value.0.clone();
    }
    let times = |u: &[Scalar], v: &[Scalar]| {
        let mut out = vec![ratio(0, 1); dim];
        for i in 0..dim {
            for j in 0..dim {
                if !u[i].is_zero() && !v[j].is_zero() {
                    for t in 0..dim {
                        out[t] += &u[i] * &v[j] * &m[i][j][t];
                    }
                }
            }
        }
        out
    };
    let pair = |u: &[Scalar], v: &[Scalar]| {
        let mut out = ratio(0, 1);
        for i in 0..dim {
            for j in 0..dim {
                out += &u[i] * &v[j] * &g[i][j];
            }
        }
        out
    };
    let k = desc.degree_k;
    let mut out = BTreeSet::new();
    for a in 0..dim {
        for b in 0..dim {
            if (0..dim).any(|t| !m[a][b][t].is_zero() && deg[t] != deg[a] + deg[b]) {
                out.insert("grading");
            }
            if m[unit][a] != basis_vector(a) || m[a][unit] != basis_vector(a) {
                out.insert("unit");
            }
            if !g[a][b].is_zero() && deg[a] + deg[b] != k {
                out.insert("(i) pairing-degree");
            }
            let s = if deg[a] * deg[b] % 2 == 0 { ratio(1, 1) } else { ratio(-1, 1) };
            if g[a][b] != s * &g[b][a] {
                out.insert("(iv) symmetry");
            }
            for c in 0..dim {
                if times(&m[a][b], &basis_vector(c)) != times(&basis_vector(a), &m[b][c]) {
                    out.insert("associativity");
                }
                if pair(&m[a][b], &basis_vector(c)) != pair(&basis_vector(a), &m[b][c]) {
                    out.insert("(iii) invariance");
                }
            }
        }
    }
    if dense_rank(g.clone()) < dim {
        out.insert("(ii) non-degenerate");
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rank_matches_dense_elimination(rows in sparse_matrix()) {
        let matrix = SparseMatrix::from_dense(&rows);
        prop_assert_eq!(rank(&matrix), dense_rank(rows.clone()));
        let null = kernel(&matrix);
        prop_assert_eq!(null.dim() + rank(&matrix), matrix.cols());
        for v in null.basis() {
            prop_assert!(matrix.apply(v).is_empty());
        }
    }

    #[test]
    fn inverse_of_unitriangular_round_trips(size in 1usize..=8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = SparseMatrix::identity(size);
        for r in 0..size {
            for c in r + 1..size {
                m.set(r, c, ratio(rand::Rng::gen_range(&mut rng, -3..=3), rand::Rng::gen_range(&mut rng, 1..=3)));
            }
        }
        let product = m.mul(&m.inverse().unwrap()).unwrap();
        prop_assert_eq!(product, SparseMatrix::identity(size));
    }

    #[test]
    fn permutation_sign_counts_odd_inversions(
        degrees in prop::collection::vec(0i64..6, 0..=6),
        seed in any::<u64>(),
    ) {
        let mut order: Vec<usize> = (0..degrees.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let mut odd_inversions = 0;
        for a in 0..order.len() {
            for b in a + 1..order.len() {
                if order[a] > order[b] && degrees[order[a]] % 2 == 1 && degrees[order[b]] % 2 == 1 {
                    odd_inversions += 1;
                }
            }
        }
        let expected = if odd_inversions % 2 == 0 { 1 } else { -1 };
        prop_assert_eq!(permutation_sign(&degrees, &order), expected);
    }

    #[test]
    fn truncated_polynomials_are_frobenius(n in 1usize..=3, d in prop_oneof![Just(2i64), Just(4)], c in nonzero_ratio()) {
        let desc = truncated_polynomial(n, d, c.clone());
        let alg = FrobeniusAlgebra::validate(&desc).unwrap();
        prop_assert!(alg.verify_casimir_identities().is_empty());
        prop_assert!(alg.calabi_yau_check().is_empty());
        // χ = (n + 1) x^n / c for a pairing scaled by c.
        let top = alg.index_of(&format!("x{n}")).unwrap();
        prop_assert_eq!(alg.euler_char().get(&top).cloned(), Some(ratio(n as i64 + 1, 1) / c));
        prop_assert_eq!(parse_algebra_str(&emit_algebra(&desc)).unwrap(), desc);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn validator_agrees_with_dense_axiom_oracle(n in 1usize..=3, seed in any::<u64>()) {
        let desc = truncated_polynomial(n, 2, ratio(1, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let (mutated, label) = checks::mutate_description(&desc, &mut rng);
            let expected = oracle_violations(&mutated);
            let found: BTreeSet<&'static str> = match FrobeniusAlgebra::validate(&mutated) {
                Ok(_) => BTreeSet::new(),
                Err(FrobeniusError::AxiomViolations(v)) => v.iter().map(|x| x.axiom.id()).collect(),
                Err(other) => panic!("{label}: {other}"),
            };
            prop_assert_eq!(found, expected, "{}", label);
        }
    }

    #[test]
    fn chain_identities_hold_on_truncated_polynomials(n in 1usize..=2, seed in any::<u64>()) {
        let cx = Complexes::new(FrobeniusAlgebra::validate(&truncated_polynomial(n, 2, ratio(1, 1))).unwrap());
        let window = Window::new(0, 6);
        for line in checks::d_squared_suite(&cx, window, 1).unwrap() {
            prop_assert!(line.passed, "{}: {}", line.name, line.detail);
        }
        let anomaly = checks::anomaly_suite(&cx, window).unwrap();
        prop_assert!(anomaly.passed, "{}", anomaly.detail);
        let associativity = checks::associativity_suite(&cx, 6).unwrap();
        prop_assert!(associativity.passed, "{}", associativity.detail);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let retract = checks::retract_suite(&cx, window, 10, 3, &mut rng).unwrap();
        prop_assert!(retract.passed, "{}", retract.detail);
        let bridge = checks::bridge_suite(&cx, window, 10, &mut rng).unwrap();
        prop_assert!(bridge.passed, "{}", bridge.detail);
        for line in checks::cup_homotopy_suite(&cx, 10, &mut rng).unwrap() {
            prop_assert!(line.passed, "{}: {}", line.name, line.detail);
        }
        for line in checks::singular_suite(&cx, window).unwrap() {
            prop_assert!(line.passed, "{}: {}", line.name, line.detail);
        }
    }
}
