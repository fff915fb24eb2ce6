//! Identity suites over whole windows: each returns a named pass/fail line with the first
//! witness found.

use num_traits::One;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::frobenius::{AlgebraDescription, Coefficient, FrobeniusAlgebra, FrobeniusError, PairingEntry, ProductEntry, Term};
use crate::hochschild::{Chain, Cochain, ComplexError, Complexes, Window};
use crate::linalg::{scalar, Scalar};
use crate::signs::{sign, Word};
use crate::tate::{TateElement, TateError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckLine {
    pub fn new(name: impl Into<String>, failures: &[String], checked: usize) -> CheckLine {
        let detail = match failures.first() {
            None => format!("{checked} checked"),
            Some(first) => format!("{} of {checked} failed; first: {first}", failures.len()),
        };
        CheckLine { name: name.into(), passed: failures.is_empty(), detail }
    }
}

fn single(word: &Word) -> Chain {
    Chain::from([(word.clone(), Scalar::from_integer(1.into()))])
}

/// Applies one random single-entry change to the product table or the pairing, returning a
/// description of the change.
pub fn mutate_description<R: Rng>(desc: &AlgebraDescription, rng: &mut R) -> (AlgebraDescription, String) {
    let mut out = desc.clone();
    let names: Vec<String> = desc.basis.iter().map(|b| b.name.clone()).collect();
    let pick = |rng: &mut R| names[rng.gen_range(0..names.len())].clone();
    let delta = Scalar::from_integer(rng.gen_range(1..=3).into()) * sign(rng.gen_range(0..2));
    let (left, right) = (pick(rng), pick(rng));
    if rng.gen_bool(0.5) {
        let to = pick(rng);
        let label = format!("product {left}·{right} += {delta}·{to}");
        match out.product.iter_mut().find(|p| p.left == left && p.right == right) {
            Some(entry) => match entry.to.iter_mut().find(|t| t.basis == to) {
                Some(term) => term.coeff = Coefficient(&term.coeff.0 + &delta),
                None => entry.to.push(Term { basis: to, coeff: Coefficient(delta) }),
            },
            None => {
                // Absent entries are zero, except products with the unit, which default to the other factor.
                let implicit = if left == desc.unit { Some(right.clone()) } else if right == desc.unit { Some(left.clone()) } else { None };
                let mut terms: Vec<Term> = implicit.map(|b| Term { basis: b, coeff: Coefficient(Scalar::one()) }).into_iter().collect();
                match terms.iter_mut().find(|t| t.basis == to) {
                    Some(term) => term.coeff = Coefficient(&term.coeff.0 + &delta),
                    None => terms.push(Term { basis: to, coeff: Coefficient(delta) }),
                }
                out.product.push(ProductEntry { left, right, to: terms });
            }
        }
        (out, label)
    } else {
        let label = format!("pairing <{left},{right}> += {delta}");
        match out.pairing.iter_mut().find(|p| p.left == left && p.right == right) {
            Some(entry) => entry.value = Coefficient(&entry.value.0 + &delta),
            None => out.pairing.push(PairingEntry { left, right, value: Coefficient(delta) }),
        }
        (out, label)
    }
}

/// Every mutation must be rejected with at least one named axiom violation.
pub fn mutation_suite<R: Rng>(desc: &AlgebraDescription, count: usize, rng: &mut R) -> CheckLine {
    let mut failures = Vec::new();
    for _ in 0..count {
        let (mutated, label) = mutate_description(desc, rng);
        match FrobeniusAlgebra::validate(&mutated) {
            Err(FrobeniusError::AxiomViolations(v)) if !v.is_empty() && v.iter().all(|x| !x.witness.is_empty()) => {}
            Err(other) => failures.push(format!("{label}: rejected without an axiom ({other})")),
            Ok(_) => failures.push(format!("{label}: accepted")),
        }
    }
    CheckLine::new(format!("{}: single-entry mutations are caught", desc.name), &failures, count)
}

/// `∂² = 0`, `δ² = 0` at levels `0..=max_level` and `D² = 0` on every basis element.
pub fn d_squared_suite(cx: &Complexes, window: Window, max_level: usize) -> Result<Vec<CheckLine>, ComplexError> {
    let name = cx.alg.name();
    let (mut chain, mut cochain, mut tate) = (Vec::new(), Vec::new(), Vec::new());
    let (mut n_chain, mut n_cochain, mut n_tate) = (0, 0, 0);
    for degree in window.degrees() {
        for word in cx.chain_basis(degree)? {
            n_chain += 1;
            if !cx.chain_boundary(&cx.chain_boundary_word(&word)).is_empty() {
                chain.push(cx.format_word(&word));
            }
        }
        for level in 0..=max_level {
            for key in cx.cochain_basis(level, degree)? {
                n_cochain += 1;
                let f = Cochain::elementary(level, degree, key.input.clone(), key.output.clone());
                if !cx.cochain_differential(&cx.cochain_differential(&f)).is_zero() {
                    cochain.push(format!("level {level}: {}", cx.format_cochain(&f)));
                }
            }
        }
        for key in cx.tate_basis(degree)? {
            n_tate += 1;
            let t = TateElement::from_flat(degree, &std::collections::BTreeMap::from([(key.clone(), scalar(1))]));
            if !cx.tate_differential(&cx.tate_differential(&t)).is_zero() {
                tate.push(format!("{key:?}"));
            }
        }
    }
    Ok(vec![
        CheckLine::new(format!("{name}: ∂² = 0"), &chain, n_chain),
        CheckLine::new(format!("{name}: δ² = 0 (levels 0..={max_level})"), &cochain, n_cochain),
        CheckLine::new(format!("{name}: D² = 0"), &tate, n_tate),
    ])
}

/// The Leibniz anomaly against its closed form on all basis pairs with degrees in the window,
/// and its vanishing when both words carry bars or when χ = 0.
pub fn anomaly_suite(cx: &Complexes, window: Window) -> Result<CheckLine, ComplexError> {
    anomaly_census(cx, window).map(|(line, _)| line)
}

/// The anomaly suite together with the number of pairs whose anomaly is nonzero.
pub fn anomaly_census(cx: &Complexes, window: Window) -> Result<(CheckLine, usize), ComplexError> {
    let mut failures = Vec::new();
    let (mut checked, mut nonzero) = (0, 0);
    let degrees: Vec<i64> = window.degrees().filter(|d| *d >= 0).collect();
    for da in &degrees {
        for db in &degrees {
            for alpha in cx.chain_basis(*da)? {
                for beta in cx.chain_basis(*db)? {
                    checked += 1;
                    let (a, b) = (single(&alpha), single(&beta));
                    let direct = cx.leibniz_anomaly(&a, &b);
                    let pair = || format!("{} , {}", cx.format_word(&alpha), cx.format_word(&beta));
                    if !direct.is_empty() {
                        nonzero += 1;
                    }
                    if direct != cx.anomaly_closed_form(&a, &b) {
                        failures.push(format!("closed form at {}", pair()));
                    } else if !direct.is_empty() && ((!alpha.bars.is_empty() && !beta.bars.is_empty()) || cx.alg.euler_is_zero()) {
                        failures.push(format!("nonzero anomaly at {}", pair()));
                    }
                }
            }
        }
    }
    let mut line = CheckLine::new(format!("{}: Leibniz anomaly", cx.alg.name()), &failures, checked);
    if line.passed {
        line.detail = format!("{checked} pairs, {nonzero} with a nonzero anomaly");
    }
    Ok((line, nonzero))
}

/// `(α ⋆ β) ⋆ γ = α ⋆ (β ⋆ γ)` on reduced basis triples of total degree at most `max_total`.
pub fn associativity_suite(cx: &Complexes, max_total: i64) -> Result<CheckLine, ComplexError> {
    let mut failures = Vec::new();
    let mut checked = 0;
    for da in 1..=max_total {
        for db in 1..=max_total - da {
            for dc in 1..=max_total - da - db {
                for a in cx.reduced_chain_basis(da)? {
                    for b in cx.reduced_chain_basis(db)? {
                        for c in cx.reduced_chain_basis(dc)? {
                            checked += 1;
                            let (x, y, z) = (single(&a), single(&b), single(&c));
                            if cx.star(&cx.star(&x, &y), &z) != cx.star(&x, &cx.star(&y, &z)) {
                                failures.push(format!("{} , {} , {}", cx.format_word(&a), cx.format_word(&b), cx.format_word(&c)));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(CheckLine::new(format!("{}: ⋆ associativity (total degree ≤ {max_total})", cx.alg.name()), &failures, checked))
}

pub fn retract_suite<R: Rng>(cx: &Complexes, window: Window, samples: usize, max_level: usize, rng: &mut R) -> Result<CheckLine, TateError> {
    let report = cx.retract_check(window, samples, max_level, rng)?;
    let mut failures = report.failures.clone();
    if report.samples_checked < samples {
        failures.push(format!("only {} nonzero stable cochains drawn", report.samples_checked));
    }
    let mut line = CheckLine::new(
        format!("{}: Π ι = id, ι chain map, id − ιΠ = δH + Hδ (m, p ≤ {max_level})", cx.alg.name()),
        &failures,
        report.basis_checked + report.samples_checked,
    );
    if line.passed {
        line.detail = format!("{} basis elements, {} stable cochains", report.basis_checked, report.samples_checked);
    }
    Ok(line)
}

pub fn bridge_suite<R: Rng>(cx: &Complexes, window: Window, samples: usize, rng: &mut R) -> Result<CheckLine, TateError> {
    let failures = cx.iota_cup_check(window, samples, rng)?;
    Ok(CheckLine::new(format!("{}: ι(α) ∪ ι(β) = ι(α ⋆ β)", cx.alg.name()), &failures, samples))
}

/// The cup/cup′ homotopy on random leveled pairs, and cup′ = cup when the right factor has level 0.
pub fn cup_homotopy_suite<R: Rng>(cx: &Complexes, samples: usize, rng: &mut R) -> Result<Vec<CheckLine>, ComplexError> {
    let mut homotopy = Vec::new();
    let mut agreement = Vec::new();
    let (mut checked, mut attempts) = (0, 0);
    while checked < samples && attempts < 20 * samples {
        let round = attempts as i64;
        attempts += 1;
        let f = cx.random_cochain(rng, (round % 2) as usize, -1 - (round % 3), 3)?;
        let g = cx.random_cochain(rng, 1, -(round % 2), 3)?;
        let h = cx.random_cochain(rng, 0, -(round % 3), 3)?;
        if f.is_zero() || g.is_zero() || h.is_zero() {
            continue;
        }
        checked += 1;
        if let Some(residual) = cx.cup_homotopy_check(&f, &g)? {
            homotopy.push(format!("{}: {}", residual.identity, residual.residual));
        }
        if cx.cup(&f, &h)? != cx.cup_prime(&f, &h) {
            agreement.push(format!("{} , {}", cx.format_cochain(&f), cx.format_cochain(&h)));
        }
    }
    if checked < samples {
        homotopy.push(format!("only {checked} nonzero pairs drawn"));
    }
    Ok(vec![
        CheckLine::new(format!("{}: f ∪′ g − f ∪ g = δ(g •<0 f) + (−1)^|f| δg •<0 f + g •<0 δf", cx.alg.name()), &homotopy, checked),
        CheckLine::new(format!("{}: cup′ = cup for a level-0 right factor", cx.alg.name()), &agreement, checked),
    ])
}

/// Cone homology against the case formulas, and exactness of the long exact sequence.
pub fn singular_suite(cx: &Complexes, window: Window) -> Result<Vec<CheckLine>, TateError> {
    let report = cx.hh_sg(window)?;
    let mut split = Vec::new();
    for (degree, dim) in report.dims() {
        let predicted = report.predicted_dim(cx.k(), degree);
        if predicted != Some(dim) {
            split.push(format!("degree {degree}: cone {dim}, formula {predicted:?}"));
        }
    }
    let les: Vec<String> = report
        .exactness
        .iter()
        .filter(|n| !n.exact)
        .map(|n| format!("{}: image {} kernel {}", n.label, n.image_dim, n.kernel_dim))
        .collect();
    Ok(vec![
        CheckLine::new(format!("{}: HH_sg dims match the case split (χ = 0: {})", cx.alg.name(), report.euler_zero), &split, report.degrees.len()),
        CheckLine::new(format!("{}: long exact sequence, image = kernel", cx.alg.name()), &les, report.exactness.len()),
    ])
}
