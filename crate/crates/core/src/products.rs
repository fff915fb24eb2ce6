//! Chain-level products: the degree `k - 1` product on Hochschild chains, its Leibniz anomaly,
//! the shift θ, cup and cup′ on forms-valued cochains, the insertion operations, the bracket,
//! and the multiplication table on reduced Hochschild homology.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;

use crate::hochschild::{add_scaled, add_term, Chain, Cochain, ComplexError, Complexes, Window};
use crate::linalg::Scalar;
use crate::signs::{sign, Word};

/// A witness that a chain-level identity does not hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityResidual {
    pub identity: &'static str,
    pub residual: String,
}

/// Sign pattern for the homotopy between cup and cup′.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomotopySigns {
    /// `f cup' g - f cup g = δ(H) + (-1)^{|f|} H(δg, f) + H(g, δf)` with `H(g, f) = g •<0 f`;
    /// holds under the Koszul conventions used throughout.
    Koszul,
    /// `f cup g - f cup' g = δ(H) - H(δg, f) - (-1)^{|g|-1} H(g, δf)`, kept for comparison.
    Displayed,
}

/// Multiplication table of the product on reduced Hochschild homology classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarTable {
    pub window: Window,
    /// (degree, index within that degree) for every class in the window.
    pub classes: Vec<(i64, usize)>,
    /// Readable cycle representatives of the classes, in the same order.
    pub labels: Vec<String>,
    /// (left class, right class) to (target degree, coordinates in the target homology basis).
    pub entries: BTreeMap<((i64, usize), (i64, usize)), (i64, Vec<Scalar>)>,
    /// Pairs whose product degree lies outside the window.
    pub skipped: usize,
}

impl Complexes {
    fn mul_tail(&self, left: u16, right: u16) -> Vec<(u16, Scalar)> {
        self.product(left, right).iter().map(|(t, c)| (*t as u16, c.clone())).collect()
    }

    fn mul_three(&self, a: u16, b: u16, c: u16) -> Vec<(u16, Scalar)> {
        let mut out: BTreeMap<u16, Scalar> = BTreeMap::new();
        for (ab, x) in self.mul_tail(a, b) {
            for (abc, y) in self.mul_tail(ab, c) {
                add_term(&mut out, abc, &x * &y);
            }
        }
        out.into_iter().collect()
    }

    fn mul_four(&self, a: u16, b: u16, c: u16, d: u16) -> Vec<(u16, Scalar)> {
        let mut out: BTreeMap<u16, Scalar> = BTreeMap::new();
        for (abc, x) in self.mul_three(a, b, c) {
            for (t, y) in self.mul_tail(abc, d) {
                add_term(&mut out, t, &x * &y);
            }
        }
        out.into_iter().collect()
    }

    // ----- the product on chains -----

    /// The product on words, of degree `k - 1`.
    pub fn star_words(&self, alpha: &Word, beta: &Word, coeff: &Scalar, out: &mut Chain) {
        let k = self.k();
        let da = self.word_degree(alpha);
        let db = self.word_degree(beta);
        let b = beta.tail;
        let a = alpha.tail;
        for term in self.alg.casimir() {
            let (e, f) = (term.left as u16, term.right as u16);
            let eta = da * self.deg(f) + self.deg(b) + (da + k - 1) * (db + k - 1);
            let s = sign(eta) * &term.coeff * coeff;
            for (be, x) in self.mul_tail(b, e) {
                if self.is_unit(be) {
                    continue;
                }
                for (af, y) in self.mul_tail(a, f) {
                    let mut bars = Vec::with_capacity(beta.bars.len() + 1 + alpha.bars.len());
                    bars.extend_from_slice(&beta.bars);
                    bars.push(be);
                    bars.extend_from_slice(&alpha.bars);
                    add_term(out, Word::new(bars, af), &s * &x * &y);
                }
            }
        }
    }

    pub fn star(&self, alpha: &Chain, beta: &Chain) -> Chain {
        let mut out = Chain::new();
        for (wa, ca) in alpha {
            for (wb, cb) in beta {
                self.star_words(wa, wb, &(ca * cb), &mut out);
            }
        }
        out
    }

    /// `d(a * b) - d(a) * b - (-1)^{|a| + k - 1} a * d(b)`, computed directly. Both inputs must
    /// be homogeneous.
    pub fn leibniz_anomaly(&self, alpha: &Chain, beta: &Chain) -> Chain {
        let mut out = self.chain_boundary(&self.star(alpha, beta));
        add_scaled(&mut out, &self.star(&self.chain_boundary(alpha), beta), &-Scalar::one());
        if let Some(da) = self.chain_degree(alpha) {
            let s = -sign(da + self.k() - 1);
            add_scaled(&mut out, &self.star(alpha, &self.chain_boundary(beta)), &s);
        }
        out
    }

    /// Closed form of the anomaly on a pair of words. Nonzero only when one of them has no bar
    /// slots: a left factor without bar slots contributes `b_1|..|b_q (x) b e_i a f_i`, a right
    /// factor without bar slots contributes `a_1|..|a_p (x) a f_i b e_i`.
    pub fn anomaly_closed_form_words(&self, alpha: &Word, beta: &Word, coeff: &Scalar, out: &mut Chain) {
        let k = self.k();
        let da = self.word_degree(alpha);
        let db = self.word_degree(beta);
        let (a, b) = (alpha.tail, beta.tail);
        for term in self.alg.casimir() {
            let (e, f) = (term.left as u16, term.right as u16);
            let eta = da * self.deg(f) + self.deg(b) + (da + k - 1) * (db + k - 1);
            if alpha.bars.is_empty() {
                let s = sign(eta + db - 1 - self.deg(b)) * &term.coeff * coeff;
                for (t, x) in self.mul_four(b, e, a, f) {
                    add_term(out, Word::new(beta.bars.clone(), t), &s * &x);
                }
            }
            if beta.bars.is_empty() {
                let s = sign(eta + (da + self.deg(f)) * (self.deg(b) + self.deg(e))) * &term.coeff * coeff;
                for (t, x) in self.mul_four(a, f, b, e) {
                    add_term(out, Word::new(alpha.bars.clone(), t), &s * &x);
                }
            }
        }
    }

    pub fn anomaly_closed_form(&self, alpha: &Chain, beta: &Chain) -> Chain {
        let mut out = Chain::new();
        for (wa, ca) in alpha {
            for (wb, cb) in beta {
                self.anomaly_closed_form_words(wa, wb, &(ca * cb), &mut out);
            }
        }
        out
    }

    // ----- distinguished cochains -----

    /// The cochain `() -> 1` at level 0.
    pub fn unit_cochain(&self) -> Cochain {
        Cochain::elementary(0, 0, Vec::new(), Word::tail_only(self.unit()))
    }

    /// The de Rham cocycle `[a] -> [a] (x) 1` at level 1.
    pub fn de_rham(&self) -> Cochain {
        let mut out = Cochain::zero(1, 0);
        for a in self.augmentation() {
            out.add_word(vec![*a], Word::new(vec![*a], self.unit()), Scalar::one());
        }
        out
    }

    /// `theta(f)(a_1, ..., a_{m+1}) = (-1)^{(|a_1| - 1)|f|} [a_1] (x) f(a_2, ..., a_{m+1})`.
    pub fn theta(&self, f: &Cochain) -> Cochain {
        let mut out = Cochain::zero(f.level + 1, f.degree);
        for (input, value) in &f.values {
            for a in self.augmentation() {
                let s = sign(self.bar_deg(*a) * f.degree);
                let mut source = Vec::with_capacity(input.len() + 1);
                source.push(*a);
                source.extend_from_slice(input);
                for (word, c) in value {
                    let mut bars = Vec::with_capacity(word.bars.len() + 1);
                    bars.push(*a);
                    bars.extend_from_slice(&word.bars);
                    out.add_word(source.clone(), Word::new(bars, word.tail), &s * c);
                }
            }
        }
        out
    }

    pub fn theta_power(&self, f: &Cochain, times: usize) -> Cochain {
        let mut out = f.clone();
        for _ in 0..times {
            out = self.theta(&out);
        }
        out
    }

    // ----- evaluation by pulling back over candidate inputs -----

    /// Builds a cochain by evaluating `eval` on every input whose length lies in `lengths` and
    /// whose bar degree is compatible with `degree` at `level`.
    pub fn tabulate(
        &self,
        level: usize,
        degree: i64,
        lengths: &BTreeSet<usize>,
        eval: impl Fn(&[u16]) -> Chain,
    ) -> Result<Cochain, ComplexError> {
        let mut out = Cochain::zero(level, degree);
        let Some(longest) = lengths.iter().next_back().copied() else {
            return Ok(out);
        };
        let top = self.max_word_degree(level) - degree;
        for shifted in 0..=top {
            let bound = if self.alg.is_simply_connected() {
                longest.min(shifted.max(0) as usize)
            } else {
                longest.min(self.bar_cap().ok_or(ComplexError::NotSimplyConnected)?)
            };
            for input in self.sequences_up_to(shifted, bound) {
                if !lengths.contains(&input.len()) {
                    continue;
                }
                let value = eval(&input);
                out.add_value(input, &value, &Scalar::one());
            }
        }
        Ok(out)
    }

    fn sum_lengths(left: &Cochain, right: &Cochain, offset: i64) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for m in left.arities() {
            for n in right.arities() {
                let total = m as i64 + n as i64 + offset;
                if total >= 0 {
                    out.insert(total as usize);
                }
            }
        }
        out
    }

    /// Cup product at one input: `g` on the last slots, then `f` on the slots following the first
    /// `q` (where `q` is the level of `g`), multiplying the tails.
    pub fn cup_at(&self, f: &Cochain, g: &Cochain, w: &[u16]) -> Chain {
        let mut out = Chain::new();
        for m in 0..=w.len() {
            let Some(gv) = g.get(&w[m..]) else { continue };
            let sg = sign(g.degree * self.bars_degree(&w[..m]));
            for (beta, cb) in gv {
                let q = beta.bars.len();
                let mut s_word: Vec<u16> = w[..m].to_vec();
                s_word.extend_from_slice(&beta.bars);
                let Some(fv) = f.get(&s_word[q..]) else { continue };
                let sf = sign(f.degree * self.bars_degree(&s_word[..q]));
                for (phi, cf) in fv {
                    let mut bars = s_word[..q].to_vec();
                    bars.extend_from_slice(&phi.bars);
                    for (t, x) in self.mul_tail(phi.tail, beta.tail) {
                        add_term(&mut out, Word::new(bars.clone(), t), &sg * &sf * cb * cf * &x);
                    }
                }
            }
        }
        out
    }

    pub fn cup(&self, f: &Cochain, g: &Cochain) -> Result<Cochain, ComplexError> {
        let lengths = Self::sum_lengths(f, g, 0);
        self.tabulate(f.level + g.level, f.degree + g.degree, &lengths, |w| self.cup_at(f, g, w))
    }

    /// `f cup' g (w) = (-1)^{|g| e_m} kappa(f(w_{..m}) (x)_A g(w_{m..}))`.
    pub fn cup_prime(&self, f: &Cochain, g: &Cochain) -> Cochain {
        let mut out = Cochain::zero(f.level + g.level, f.degree + g.degree);
        for (u, fu) in &f.values {
            let s = sign(self.bars_degree(u) * g.degree);
            for (v, gv) in &g.values {
                let mut input = u.clone();
                input.extend_from_slice(v);
                out.add_value(input, &self.kappa_chains(fu, gv), &s);
            }
        }
        out
    }

    /// `(id^q (x) pi) g`: the tail of each output word becomes a bar slot (units vanish). The
    /// projection has degree -1 and passes the `q` bar slots.
    fn project_tail(&self, chain: &Chain) -> Vec<(Vec<u16>, Scalar)> {
        let mut out = Vec::new();
        for (word, c) in chain {
            if self.is_unit(word.tail) {
                continue;
            }
            let mut bars = word.bars.clone();
            bars.push(word.tail);
            out.push((bars, sign(self.bars_degree(&word.bars)) * c));
        }
        out
    }

    /// `f •_i g` at one input, for a single index `i` (positive: insertion into the inputs;
    /// negative: insertion into the output of `f`).
    pub fn bullet_at(&self, f: &Cochain, g: &Cochain, i: i64, w: &[u16]) -> Chain {
        let mut out = Chain::new();
        let len = w.len();
        let g_shift = g.degree - 1;
        if i > 0 {
            let i = i as usize;
            for m in f.arities() {
                if i > m || len + 1 < m {
                    continue;
                }
                let n = len + 1 - m;
                let Some(gv) = g.get(&w[i - 1..i - 1 + n]) else { continue };
                let sg = sign(g_shift * self.bars_degree(&w[..i - 1]));
                for (inserted, cb) in self.project_tail(gv) {
                    let q = inserted.len() - 1;
                    let mut s_word = w[..i - 1].to_vec();
                    s_word.extend_from_slice(&inserted);
                    s_word.extend_from_slice(&w[i - 1 + n..]);
                    let Some(fv) = f.get(&s_word[q..]) else { continue };
                    let sf = sign(f.degree * self.bars_degree(&s_word[..q]));
                    for (phi, cf) in fv {
                        let mut bars = s_word[..q].to_vec();
                        bars.extend_from_slice(&phi.bars);
                        add_term(&mut out, Word::new(bars, phi.tail), &sg * &sf * &cb * cf);
                    }
                }
            }
        } else if i < 0 {
            let j = (-i) as usize;
            let p = f.level;
            if j > p {
                return out;
            }
            for m in f.arities() {
                if len + 1 < m + 1 {
                    continue;
                }
                let n = len + 1 - m;
                let Some(fv) = f.get(&w[n - 1..]) else { continue };
                let sf = sign(f.degree * self.bars_degree(&w[..n - 1]));
                for (phi, cf) in fv {
                    let mut t_word = w[..n - 1].to_vec();
                    t_word.extend_from_slice(&phi.bars);
                    let start = p - j;
                    let Some(gv) = g.get(&t_word[start..start + n]) else { continue };
                    let sg = sign(g_shift * self.bars_degree(&t_word[..start]));
                    for (inserted, cb) in self.project_tail(gv) {
                        let mut bars = t_word[..start].to_vec();
                        bars.extend_from_slice(&inserted);
                        bars.extend_from_slice(&t_word[start + n..]);
                        add_term(&mut out, Word::new(bars, phi.tail), &sf * &sg * cf * &cb);
                    }
                }
            }
        }
        out
    }

    fn bullet_lengths(f: &Cochain, g: &Cochain) -> BTreeSet<usize> {
        Self::sum_lengths(f, g, -1)
    }

    /// `f •_i g` for `i` in `[-p, m] \ {0}`, where `p` is the level of `f` and `m` its largest arity.
    pub fn bullet(&self, f: &Cochain, g: &Cochain, i: i64) -> Result<Cochain, ComplexError> {
        let m = f.arities().last().copied().unwrap_or(0) as i64;
        let p = f.level as i64;
        if i == 0 || i > m || i < -p {
            return Err(ComplexError::IndexOutOfRange { index: i, range: format!("[-{p}, {m}] without 0") });
        }
        self.tabulate(f.level + g.level, f.degree + g.degree - 1, &Self::bullet_lengths(f, g), |w| {
            self.bullet_at(f, g, i, w)
        })
    }

    /// `f • g = sum_{i=1}^m f •_i g - sum_{i=1}^p f •_{-i} g`.
    pub fn bullet_total(&self, f: &Cochain, g: &Cochain) -> Result<Cochain, ComplexError> {
        let m = f.arities().last().copied().unwrap_or(0) as i64;
        let p = f.level as i64;
        self.tabulate(f.level + g.level, f.degree + g.degree - 1, &Self::bullet_lengths(f, g), |w| {
            let mut out = Chain::new();
            for i in 1..=m {
                add_scaled(&mut out, &self.bullet_at(f, g, i, w), &Scalar::one());
            }
            for i in 1..=p {
                add_scaled(&mut out, &self.bullet_at(f, g, -i, w), &-Scalar::one());
            }
            out
        })
    }

    /// `g •_{<0} f = sum_{i=1}^{p} g •_{-i} f`, with `p` the level of `g`.
    pub fn bullet_negative(&self, g: &Cochain, f: &Cochain) -> Result<Cochain, ComplexError> {
        let p = g.level as i64;
        self.tabulate(f.level + g.level, f.degree + g.degree - 1, &Self::bullet_lengths(g, f), |w| {
            let mut out = Chain::new();
            for i in 1..=p {
                add_scaled(&mut out, &self.bullet_at(g, f, -i, w), &Scalar::one());
            }
            out
        })
    }

    /// `{f, g} = f • g - (-1)^{(|f|+1)(|g|+1)} g • f`.
    pub fn bracket(&self, f: &Cochain, g: &Cochain) -> Result<Cochain, ComplexError> {
        let mut out = self.bullet_total(f, g)?;
        let s = -sign((f.degree + 1) * (g.degree + 1));
        out.add(&self.bullet_total(g, f)?, &s);
        Ok(out)
    }

    /// Residual of the homotopy between cup and cup′ with the chosen sign pattern.
    pub fn cup_homotopy_residual(&self, f: &Cochain, g: &Cochain, signs: HomotopySigns) -> Result<Cochain, ComplexError> {
        let mut residual = self.cup(f, g)?;
        residual.add(&self.cup_prime(f, g), &-Scalar::one());
        let homotopy = self.bullet_negative(g, f)?;
        let dg_term = self.bullet_negative(&self.cochain_differential(g), f)?;
        let df_term = self.bullet_negative(g, &self.cochain_differential(f))?;
        let (c_homotopy, c_dg, c_df) = match signs {
            HomotopySigns::Koszul => (Scalar::one(), sign(f.degree), Scalar::one()),
            HomotopySigns::Displayed => (-Scalar::one(), Scalar::one(), sign(g.degree - 1)),
        };
        residual.add(&self.cochain_differential(&homotopy), &c_homotopy);
        residual.add(&dg_term, &c_dg);
        residual.add(&df_term, &c_df);
        Ok(residual)
    }

    /// Checks `f cup' g - f cup g = δ(g •<0 f) + (-1)^{|f|} δ(g) •<0 f + g •<0 δ(f)`.
    pub fn cup_homotopy_check(&self, f: &Cochain, g: &Cochain) -> Result<Option<IdentityResidual>, ComplexError> {
        let residual = self.cup_homotopy_residual(f, g, HomotopySigns::Koszul)?;
        Ok(if residual.is_zero() {
            None
        } else {
            Some(IdentityResidual { identity: "cup homotopy", residual: self.format_cochain(&residual) })
        })
    }

    // ----- homology table -----

    /// The product table on reduced Hochschild homology classes with degrees in the window.
    pub fn star_table(&self, window: Window) -> Result<StarTable, ComplexError> {
        let report = self.hh_homology(window, true)?;
        let mut classes = Vec::new();
        let mut labels = Vec::new();
        for piece in &report.degrees {
            for index in 0..piece.dim() {
                classes.push((piece.degree, index));
                labels.push(self.format_chain(&piece.representative(index)));
            }
        }
        let mut entries = BTreeMap::new();
        let mut skipped = 0;
        for (left_degree, left_index) in &classes {
            for (right_degree, right_index) in &classes {
                let target = left_degree + right_degree + self.k() - 1;
                let Some(piece) = report.at(target) else {
                    skipped += 1;
                    continue;
                };
                let left = report.at(*left_degree).expect("class degree").representative(*left_index);
                let right = report.at(*right_degree).expect("class degree").representative(*right_index);
                let product = self.star(&left, &right);
                let coords = piece.class_of(&product).expect("the product of reduced cycles is a cycle");
                entries.insert(((*left_degree, *left_index), (*right_degree, *right_index)), (target, coords));
            }
        }
        Ok(StarTable { window, classes, labels, entries, skipped })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hochschild::tests::complexes;
    use crate::linalg::scalar;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn word(bars: &[u16], tail: u16) -> Chain {
        Chain::from([(Word::new(bars.to_vec(), tail), scalar(1))])
    }

    #[test]
    fn star_examples_on_s3() {
        let cx = complexes("S3");
        assert_eq!(cx.star(&word(&[], 1), &word(&[1], 0)), Chain::from([(Word::new(vec![1, 1], 1), scalar(-1))]));
        // x̄^p ⊗ 1 times x̄^q ⊗ 1: only the x ⊗ 1 Casimir term survives, with eta even.
        for p in 0..4usize {
            for q in 0..4usize {
                let got = cx.star(&word(&vec![1; p], 0), &word(&vec![1; q], 0));
                let (da, db) = (2 * p as i64, 2 * q as i64);
                // |f| = |b| = 0 for the surviving x ⊗ 1 term, so only the shift product remains.
                let eta = (da + 2) * (db + 2);
                let expected = Chain::from([(Word::new(vec![1; p + q + 1], 0), -sign(eta))]);
                assert_eq!(got, expected, "p={p} q={q}");
            }
        }
        let s2 = complexes("S2");
        assert!(s2.star(&word(&[], 1), &word(&[], 1)).is_empty());
    }

    #[test]
    fn anomaly_matches_closed_form() {
        for name in ["S2", "S3", "CP2", "S3xS3"] {
            let cx = complexes(name);
            for da in 0..6 {
                for db in 0..6 {
                    for alpha in cx.chain_basis(da).unwrap() {
                        for beta in cx.chain_basis(db).unwrap() {
                            let (a, b) = (word(&alpha.bars, alpha.tail), word(&beta.bars, beta.tail));
                            let direct = cx.leibniz_anomaly(&a, &b);
                            let closed = cx.anomaly_closed_form(&a, &b);
                            assert_eq!(direct, closed, "{name}: {alpha:?} {beta:?}");
                            if !alpha.bars.is_empty() && !beta.bars.is_empty() {
                                assert!(direct.is_empty());
                            }
                        }
                    }
                }
            }
        }
        let s3 = complexes("S3");
        assert!(s3.leibniz_anomaly(&word(&[], 0), &word(&[1], 0)).is_empty());
        let s2 = complexes("S2");
        let anomaly = s2.leibniz_anomaly(&word(&[], 0), &word(&[1], 0));
        assert_eq!(anomaly.len(), 1);
        assert_eq!(num_traits::Signed::abs(anomaly.values().next().unwrap()), scalar(2));
    }

    #[test]
    fn star_is_strictly_associative_on_reduced_chains() {
        for name in ["S2", "S3", "CP2"] {
            let cx = complexes(name);
            for da in 1..5 {
                for db in 1..5 {
                    for dc in 1..4 {
                        for a in cx.reduced_chain_basis(da).unwrap() {
                            for b in cx.reduced_chain_basis(db).unwrap() {
                                for c in cx.reduced_chain_basis(dc).unwrap() {
                                    let (a, b, c) = (word(&a.bars, a.tail), word(&b.bars, b.tail), word(&c.bars, c.tail));
                                    let left = cx.star(&cx.star(&a, &b), &c);
                                    let right = cx.star(&a, &cx.star(&b, &c));
                                    assert_eq!(left, right, "{name}");
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn theta_examples_and_cup_agreement() {
        let cx = complexes("S2");
        assert_eq!(cx.theta(&cx.unit_cochain()), cx.de_rham());
        let twice = cx.theta(&cx.theta(&cx.unit_cochain()));
        assert_eq!(twice.get(&[1, 1]).cloned().unwrap(), word(&[1, 1], 0));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for name in ["S2", "S3", "CP2"] {
            let cx = complexes(name);
            for level in 0..2 {
                for degree in -3..2 {
                    let f = cx.random_cochain(&mut rng, level, degree, 4).unwrap();
                    assert_eq!(cx.theta(&f), cx.cup(&f, &cx.de_rham()).unwrap(), "{name}");
                    let lhs = cx.theta(&cx.cochain_differential(&f));
                    let rhs = cx.cochain_differential(&cx.theta(&f));
                    assert_eq!(lhs, rhs, "{name}: theta is a chain map");
                }
            }
        }
    }

    #[test]
    fn cup_examples() {
        let cx = complexes("S3");
        let dr = cx.de_rham();
        let square = cx.cup(&dr, &dr).unwrap();
        assert_eq!(square.get(&[1, 1]).cloned().unwrap(), word(&[1, 1], 0));
        assert_eq!(cx.cup_prime(&dr, &dr), square);
        let alpha = Cochain::elementary(1, 5, vec![], Word::new(vec![1], 1));
        let beta = Cochain::elementary(1, 2, vec![], Word::new(vec![1], 0));
        assert_eq!(cx.cup(&alpha, &beta).unwrap().get(&[]).cloned().unwrap(), word(&[1, 1], 1));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for name in ["S2", "S3", "CP2"] {
            let cx = complexes(name);
            let unit = cx.unit_cochain();
            for level in 0..2 {
                for degree in -3..2 {
                    let f = cx.random_cochain(&mut rng, level, degree, 4).unwrap();
                    assert_eq!(cx.cup(&unit, &f).unwrap(), f);
                    assert_eq!(cx.cup_prime(&unit, &f), f);
                    let g = cx.random_cochain(&mut rng, 0, degree + 1, 3).unwrap();
                    assert_eq!(cx.cup(&f, &g).unwrap(), cx.cup_prime(&f, &g), "{name}: level-0 right factor");
                    let h = cx.random_cochain(&mut rng, 1, -1, 3).unwrap();
                    let left = cx.cup(&cx.cup(&f, &g).unwrap(), &h).unwrap();
                    let right = cx.cup(&f, &cx.cup(&g, &h).unwrap()).unwrap();
                    assert_eq!(left, right, "{name}: cup associativity");
                }
            }
        }
    }

    #[test]
    fn kappa_is_associative() {
        let cx = complexes("CP2");
        for d1 in 0..6 {
            for d2 in 0..5 {
                for d3 in 0..5 {
                    for u in cx.chain_basis(d1).unwrap() {
                        for v in cx.chain_basis(d2).unwrap() {
                            for w in cx.chain_basis(d3).unwrap() {
                                let (cu, cv, cw) = (word(&u.bars, u.tail), word(&v.bars, v.tail), word(&w.bars, w.tail));
                                let left = cx.kappa_chains(&cx.kappa_chains(&cu, &cv), &cw);
                                let right = cx.kappa_chains(&cu, &cx.kappa_chains(&cv, &cw));
                                assert_eq!(left, right);
                            }
                        }
                    }
                }
            }
        }
        let s3 = complexes("S3");
        assert_eq!(s3.kappa_concat(&Word::new(vec![1], 1), &Word::new(vec![1], 0)), word(&[1, 1], 1));
    }

    #[test]
    fn bracket_examples() {
        let cx = complexes("S2");
        let dr = cx.de_rham();
        assert!(cx.bracket(&dr, &dr).unwrap().is_zero());
        assert!(matches!(cx.bullet(&dr, &dr, 0), Err(ComplexError::IndexOutOfRange { .. })));
        assert!(matches!(cx.bullet(&dr, &dr, 2), Err(ComplexError::IndexOutOfRange { .. })));
        assert!(matches!(cx.bullet(&dr, &dr, -2), Err(ComplexError::IndexOutOfRange { .. })));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for name in ["S2", "S3"] {
            let cx = complexes(name);
            for _ in 0..6 {
                let f = cx.random_cochain(&mut rng, 1, -1, 3).unwrap();
                let g = cx.random_cochain(&mut rng, 1, -2, 3).unwrap();
                let mut sum = cx.bracket(&f, &g).unwrap();
                sum.add(&cx.bracket(&g, &f).unwrap(), &sign((f.degree + 1) * (g.degree + 1)));
                assert!(sum.is_zero(), "{name}: antisymmetry");
                let even = cx.random_cochain(&mut rng, 1, -2, 3).unwrap();
                assert_eq!(cx.bracket(&even, &even).unwrap(), cx.bullet_total(&even, &even).unwrap().scaled(&scalar(2)));
            }
        }
    }

    /// Classical Gerstenhaber composition at level 0 by direct substitution.
    fn classical_bullet(cx: &Complexes, f: &Cochain, g: &Cochain, w: &[u16]) -> Chain {
        let mut out = Chain::new();
        for m in f.arities() {
            if w.len() + 1 < m {
                continue;
            }
            let n = w.len() + 1 - m;
            for i in 0..m {
                let Some(gv) = g.get(&w[i..i + n]) else { continue };
                for (gw, cg) in gv {
                    if cx.is_unit(gw.tail) {
                        continue;
                    }
                    let mut input = w[..i].to_vec();
                    input.push(gw.tail);
                    input.extend_from_slice(&w[i + n..]);
                    let Some(fv) = f.get(&input) else { continue };
                    let s = sign((g.degree - 1) * cx.bars_degree(&w[..i]));
                    add_scaled(&mut out, fv, &(s * cg));
                }
            }
        }
        out
    }

    #[test]
    fn level_zero_bullet_is_classical() {
        let cx = complexes("S2");
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let f = cx.random_cochain(&mut rng, 0, 1, 3).unwrap();
            let g = cx.random_cochain(&mut rng, 0, 1, 3).unwrap();
            let composed = cx.bullet_total(&f, &g).unwrap();
            for shifted in 0..=4 {
                for w in cx.sequences(shifted).unwrap() {
                    if w.len() > 2 {
                        continue;
                    }
                    assert_eq!(composed.get(&w).cloned().unwrap_or_default(), classical_bullet(&cx, &f, &g, &w));
                }
            }
        }
    }

    #[test]
    fn cup_homotopy_holds() {
        let cx = complexes("S3");
        let dr = cx.de_rham();
        assert_eq!(cx.cup_homotopy_check(&dr, &dr).unwrap(), None);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for name in ["S2", "S3"] {
            let cx = complexes(name);
            for round in 0..10 {
                let f = cx.random_cochain(&mut rng, round % 2, -1 - (round as i64 % 3), 3).unwrap();
                let g = cx.random_cochain(&mut rng, 1, -(round as i64 % 2), 3).unwrap();
                assert_eq!(cx.cup_homotopy_check(&f, &g).unwrap(), None, "{name} round {round}");
            }
        }
        // The displayed sign pattern leaves a residual on S2 for an even-degree level-0 f.
        let cx = complexes("S2");
        let mut found = false;
        for _ in 0..10 {
            let f = cx.random_cochain(&mut rng, 0, -2, 3).unwrap();
            let g = cx.random_cochain(&mut rng, 1, 0, 3).unwrap();
            found |= !cx.cup_homotopy_residual(&f, &g, HomotopySigns::Displayed).unwrap().is_zero();
        }
        assert!(found);
    }
}
