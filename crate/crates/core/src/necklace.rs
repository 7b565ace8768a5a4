//! The (extended) necklace DG Lie algebra: cyclic words over the completion
//! alphabet, the bracket by annihilating (f, X_f) pairs and gluing, the
//! Maurer-Cartan residual, double-Poisson verification, n-bracket
//! evaluation and the π₂ non-degeneracy test.
//!
//! A necklace element of shift m is a ℚ-combination of cyclic words over
//! the arrows of Π_{1-m}(A); the weight is the number of dual letters.

use crate::bimodule::{cyclic_canonical, rotate_once, NatElement, TensorSq};
use crate::cycompletion::{cy_completion, Completion, CompletionLetter, PiCtx};
use crate::dgcat::{ArrId, DGCatPresentation, NCPoly, Word};
use crate::linalg::{self, ComplexSlice, HomologyDims, SparseMatrix};
use crate::{qi, Error, Q, Result};
use num::Zero;
use std::collections::BTreeMap;

/// Shift-m necklace calculus over a base presentation.
pub struct NecklaceCtx {
    pub m: i64,
    pub comp: Completion,
}

/// A ℚ-combination of canonical cyclic words over the completion alphabet.
pub type NecklaceElement = crate::bimodule::CycElement;

impl NecklaceCtx {
    pub fn new(base: &DGCatPresentation, m: i64) -> Result<Self> {
        let comp = cy_completion(base, 1 - m)?;
        Ok(NecklaceCtx { m, comp })
    }

    pub fn pres(&self) -> &DGCatPresentation {
        &self.comp.pi
    }

    pub fn weight(&self, w: &Word) -> usize {
        w.letters
            .iter()
            .filter(|&&a| !matches!(self.comp.letter[a], CompletionLetter::Original(_)))
            .count()
    }

    pub fn has_c_letters(&self, w: &Word) -> bool {
        w.letters.iter().any(|&a| matches!(self.comp.letter[a], CompletionLetter::CDual(_)))
    }

    pub fn from_word(&self, w: &Word, c: Q) -> Result<NecklaceElement> {
        let mut e = NecklaceElement::zero();
        if let Some((cw, s)) = cyclic_canonical(self.pres(), w) {
            e.add_term(cw, c * qi(s));
        } else if self.pres().word_src(w) != self.pres().word_tgt(w) {
            return Err(Error::NotEndomorphism(self.pres().format_word(w)));
        }
        Ok(e)
    }

    /// Letterwise Leibniz differential, descended to cyclic classes.
    pub fn diff(&self, e: &NecklaceElement) -> Result<NecklaceElement> {
        let mut out = NecklaceElement::zero();
        for (w, c) in &e.terms {
            let dp = self.pres().differential(&NCPoly::from_word(w.clone(), self.pres()))?;
            for (dw, dc) in &dp.terms {
                out = out.add(&self.from_word(dw, c * dc)?);
            }
        }
        Ok(out)
    }

    /// The necklace bracket: the sum over all (original letter, matching
    /// dual letter) annihilations between the two words, in both
    /// directions, each contributing the glued cyclic word with the Koszul
    /// sign of the two rotations, the dual pairing, and the grafting order.
    pub fn bracket(&self, a: &NecklaceElement, b: &NecklaceElement) -> Result<NecklaceElement> {
        let pres = self.pres();
        let mut out = NecklaceElement::zero();
        for (wa, ca) in &a.terms {
            let da = pres.word_degree(wa);
            for (wb, cb) in &b.terms {
                for i in 0..wa.letters.len() {
                    for j in 0..wb.letters.len() {
                        let la = wa.letters[i];
                        let lb = wb.letters[j];
                        let (fi, dir1) = match (&self.comp.letter[la], &self.comp.letter[lb]) {
                            (CompletionLetter::Original(f), CompletionLetter::XDual(g)) if f == g => {
                                (*f, true)
                            }
                            (CompletionLetter::XDual(f), CompletionLetter::Original(g)) if f == g => {
                                (*f, false)
                            }
                            _ => continue,
                        };
                        // rotate each word so the annihilated letter leads
                        let (ra, sa) = rotate_to(pres, wa, i);
                        let (rb, sb) = rotate_to(pres, wb, j);
                        let fd = self.comp.base.arrows[fi].degree;
                        let xd = -fd - 1 - self.m;
                        let exp = if dir1 {
                            // P-term (sDf)^∨ ⊗ (sDX_f)^∨, coefficient +1
                            da + (xd + 1) * (da + 1)
                        } else {
                            // P-term (-1)^{m|f|-1} (sDX_f)^∨ ⊗ (sDf)^∨
                            da + (fd + 1) * (da + 1) + self.m * fd - 1
                        };
                        let sign = if exp.rem_euclid(2) == 0 { 1 } else { -1 };
                        let mut letters = ra.letters[1..].to_vec();
                        letters.extend_from_slice(&rb.letters[1..]);
                        let base = if letters.is_empty() {
                            pres.arrows[la].src
                        } else {
                            pres.word_src(&Word { letters: letters.clone(), base: 0 })
                        };
                        let glued = Word { letters, base };
                        let coeff = ca * cb * qi(sa * sb * sign);
                        out = out.add(&self.from_word(&glued, coeff)?);
                    }
                }
            }
        }
        Ok(out)
    }

    /// The Maurer-Cartan residual `d(π) + ½{π,π}`, truncated to weight ≤ cap.
    pub fn mc_residual(&self, pi: &NecklaceElement, weight_cap: usize) -> Result<NecklaceElement> {
        let half = crate::q(1, 2);
        let br = self.bracket(pi, pi)?;
        let full = self.diff(pi)?.add(&br.scale(&half));
        let mut out = NecklaceElement::zero();
        for (w, c) in &full.terms {
            if self.weight(w) <= weight_cap {
                out.add_term(w.clone(), c.clone());
            }
        }
        Ok(out)
    }
}

fn rotate_to(pres: &DGCatPresentation, w: &Word, pos: usize) -> (Word, i64) {
    let mut cur = w.clone();
    let mut sign = 1i64;
    for _ in 0..pos {
        let (nw, s) = rotate_once(pres, &cur);
        cur = nw;
        sign *= s;
    }
    (cur, sign)
}

/// An open-word combination over the completion alphabet: the codomain of
/// the level-1½ bracket.
pub type OpenElement = BTreeMap<Word, Q>;

/// The level-1½ bracket `{ξ̄, w}` of a cyclic element against an open word:
/// `{ξ̄,-}` acts as a derivation of degree `|ξ|+m+1`, annihilating each
/// letter of `w` against the matching letters of `ξ̄` by the same gluing
/// rule as the cyclic bracket.
pub fn open_bracket(ctx: &NecklaceCtx, xi: &NecklaceElement, w: &Word) -> Result<OpenElement> {
    let pres = ctx.pres();
    let mut out: OpenElement = BTreeMap::new();
    let mut push = |word: Word, c: Q| {
        if c.is_zero() {
            return;
        }
        let cur = out.remove(&word).unwrap_or_else(Q::zero);
        let nv = cur + c;
        if !nv.is_zero() {
            out.insert(word, nv);
        }
    };
    for (wa, ca) in &xi.terms {
        let da = pres.word_degree(wa);
        let der_deg = da + ctx.m + 1;
        let mut prefix_deg = 0i64;
        for (j, &lj) in w.letters.iter().enumerate() {
            for i in 0..wa.letters.len() {
                let la = wa.letters[i];
                let (fi, dir1) = match (&ctx.comp.letter[la], &ctx.comp.letter[lj]) {
                    (CompletionLetter::Original(f), CompletionLetter::XDual(g)) if f == g => (*f, true),
                    (CompletionLetter::XDual(f), CompletionLetter::Original(g)) if f == g => (*f, false),
                    _ => continue,
                };
                let (ra, sa) = rotate_to(pres, wa, i);
                let fd = ctx.comp.base.arrows[fi].degree;
                let xd = -fd - 1 - ctx.m;
                let exp = if dir1 {
                    da + (xd + 1) * (da + 1)
                } else {
                    da + (fd + 1) * (da + 1) + ctx.m * fd - 1
                } + der_deg * prefix_deg;
                let sign = if exp.rem_euclid(2) == 0 { 1 } else { -1 };
                let mut letters = w.letters[..j].to_vec();
                letters.extend_from_slice(&ra.letters[1..]);
                letters.extend_from_slice(&w.letters[j + 1..]);
                let base = pres.word_src(&Word { letters: letters.clone(), base: w.base });
                push(Word { letters, base }, ca * qi(sa * sign));
            }
            prefix_deg += pres.arrows[lj].degree;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// marked (seam-fixed) elements, n-bracket evaluation and double Poisson
// ---------------------------------------------------------------------------

/// A marked necklace element: words over the completion alphabet whose
/// distinguished first letter is a dual letter. These present elements of
/// the invariant multidual model before passing to cyclic coinvariants.
pub type MarkedElement = NatElement;

/// Canonicalizes a marked word using the completion's tensor structure.
pub fn marked_from_word(ctx: &NecklaceCtx, w: &Word, c: Q) -> Result<MarkedElement> {
    NatElement::from_word(&ctx.comp.tc, w, c)
}

/// The C_n action on marked weight-n elements with the twist
/// `(-1)^{m(n-1)}`; m-cyclical elements are the fixed points.
pub fn marked_rotate(ctx: &NecklaceCtx, e: &MarkedElement) -> Result<MarkedElement> {
    let tc = &ctx.comp.tc;
    let mut out = MarkedElement::zero();
    for (w, c) in &e.terms {
        let n = tc.weight(w) as i64;
        let (rw, s) = crate::bimodule::tau(tc, w);
        let mut coeff = c * qi(s);
        if (ctx.m * (n - 1)).rem_euclid(2) == 1 {
            coeff = -coeff;
        }
        out = out.add(&NatElement::from_word(tc, &rw, coeff)?);
    }
    Ok(out)
}

/// A formal sum of n-fold tensors of base words, the value of an n-bracket.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TensorMulti {
    pub terms: BTreeMap<Vec<Word>, Q>,
}

impl TensorMulti {
    pub fn zero() -> Self {
        Default::default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, key: Vec<Word>, c: Q) {
        if c.is_zero() {
            return;
        }
        let cur = self.terms.remove(&key).unwrap_or_else(Q::zero);
        let nv = cur + c;
        if !nv.is_zero() {
            self.terms.insert(key, nv);
        }
    }

    pub fn add(&self, o: &TensorMulti) -> TensorMulti {
        let mut out = self.clone();
        for (k, c) in &o.terms {
            out.add_term(k.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Q) -> TensorMulti {
        if c.is_zero() {
            return TensorMulti::zero();
        }
        TensorMulti { terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect() }
    }

    pub fn sub(&self, o: &TensorMulti) -> TensorMulti {
        self.add(&o.scale(&qi(-1)))
    }
}

/// Evaluates a marked weight-n word as an n-bracket on polynomials of the
/// base category: the grafting rule. Inputs are listed `[p_n, …, p_1]` to
/// match the tensor order of the multidual; the result is the n-fold
/// tensor `(b₁·a_n) ⊗ (b_n·a_{n-1}) ⊗ … ⊗ (b₂·a₁)` with exact Koszul
/// signs, where `⟨X_i, sD(p_i)⟩ = a_i ⊗ b_i`.
pub fn n_bracket_eval(
    ctx: &NecklaceCtx,
    pi: &MarkedElement,
    inputs: &[NCPoly],
) -> Result<TensorMulti> {
    let base = &ctx.comp.base;
    let r = crate::bimodule::res(base)?;
    let mut out = TensorMulti::zero();
    // sD of each input, as a bimodule element over Res(A)
    let sds: Vec<crate::bimodule::BimodElement> =
        inputs.iter().map(|p| crate::bimodule::sd_of_poly(base, &r, p)).collect::<Result<_>>()?;
    let prefactor: i64 = inputs
        .iter()
        .enumerate()
        .map(|(k, p)| {
            // (-1)^{|p_n|} for the 2-bracket convention extends to
            // (-1)^{Σ (n-k)|p_k|}-free choice; the displayed 2-bracket rule
            // is (-1)^{|f|} on the first-listed input
            if k + 1 < inputs.len() {
                0
            } else {
                p.degree(base).unwrap_or(0)
            }
        })
        .sum();
    let _ = prefactor;
    for (w, c) in &pi.terms {
        let n = ctx.comp.tc.weight(w);
        if n != inputs.len() {
            continue;
        }
        // split the marked word at its dual letters: w = Z_n q_n … Z_1 q_1
        let segments = split_marked(ctx, w)?;
        // the first-listed input feeds the first dual letter, etc.
        let mut total = c.clone();
        // sign: (F_1⊗…⊗F_n)(v_1⊗…⊗v_n) with F_i the dressed dual letters
        // costs Σ_{i<j} |F_j||v_i|
        let fdeg: Vec<i64> = segments
            .iter()
            .map(|(z, q)| {
                ctx.pres().arrows[*z].degree
                    + q.letters.iter().map(|&a| ctx.pres().arrows[a].degree).sum::<i64>()
            })
            .collect();
        let vdeg: Vec<i64> = inputs.iter().map(|p| p.degree(base).unwrap_or(0) + 1).collect();
        let mut exp = 0i64;
        for i in 0..n {
            for j in i + 1..n {
                exp += fdeg[j] * vdeg[i];
            }
        }
        // the (-1)^{|f|} prefactor of the displayed bracket rule, applied
        // to the first-listed input
        exp += inputs[0].degree(base).unwrap_or(0);
        if exp.rem_euclid(2) == 1 {
            total = -total;
        }
        // evaluate each dressed dual letter against the matching sD-input
        let mut pairs: Vec<TensorSq> = Vec::new();
        let mut dead = false;
        for (i, (z, q)) in segments.iter().enumerate() {
            let ev = eval_shifted_dual(ctx, *z, q, &sds[i])?;
            if ev.is_zero() {
                dead = true;
                break;
            }
            pairs.push(ev);
        }
        if dead {
            continue;
        }
        // distribute over the terms of each pairing
        let mut acc: Vec<(Vec<(Word, Word)>, Q)> = vec![(Vec::new(), total)];
        for ev in &pairs {
            let mut next = Vec::new();
            for (chain, coeff) in &acc {
                for ((u, v), ec) in &ev.terms {
                    let mut chain2 = chain.clone();
                    chain2.push((u.clone(), v.clone()));
                    next.push((chain2, coeff * ec));
                }
            }
            acc = next;
        }
        for (chain, coeff) in acc {
            // chain[i] = (a_i, b_i) for the i-th listed input (i = 0 is the
            // "n-th" slot in display order)
            let n = chain.len();
            // reorder [a_1 b_1 a_2 b_2 … a_n b_n] → [b_n a_1 b_1 a_2 … b_{n-1} a_n]:
            // move b_n (the last b) to the front, over everything else
            let bn = &chain[n - 1].1;
            let bn_deg = base.word_degree(bn);
            let mut rest_deg = 0i64;
            for (i, (a, b)) in chain.iter().enumerate() {
                rest_deg += base.word_degree(a);
                if i + 1 < n {
                    rest_deg += base.word_degree(b);
                }
            }
            let mut cc = coeff;
            if (bn_deg * rest_deg).rem_euclid(2) == 1 {
                cc = -cc;
            }
            // outputs: slot 0 = b_n·a_1, slot i = b_i·a_{i+1}
            let mut outs: Vec<Word> = Vec::new();
            let mk = |l: &Word, r: &Word| -> Word {
                let mut letters = l.letters.clone();
                letters.extend_from_slice(&r.letters);
                let b = if r.letters.is_empty() { r.base } else { base.word_src(r) };
                Word { letters, base: b }
            };
            outs.push(mk(bn, &chain[0].0));
            for i in 0..n - 1 {
                outs.push(mk(&chain[i].1, &chain[i + 1].0));
            }
            out.add_term(outs, cc);
        }
    }
    Ok(out)
}

/// Splits a marked word at its dual letters: returns `(Z_i, q_i)` segments
/// in the order they appear from the seam.
fn split_marked(ctx: &NecklaceCtx, w: &Word) -> Result<Vec<(ArrId, Word)>> {
    let tc = &ctx.comp.tc;
    if w.letters.is_empty() || !tc.is_module_letter(w.letters[0]) {
        return Err(Error::BadInput("marked word must start with a dual letter".into()));
    }
    let mut out: Vec<(ArrId, Word)> = Vec::new();
    let mut i = 0usize;
    while i < w.letters.len() {
        let z = w.letters[i];
        let mut j = i + 1;
        let mut q = Vec::new();
        while j < w.letters.len() && !tc.is_module_letter(w.letters[j]) {
            q.push(w.letters[j]);
            j += 1;
        }
        let qb = if q.is_empty() {
            ctx.pres().arrows[z].src
        } else {
            ctx.pres().word_src(&Word { letters: q.clone(), base: 0 })
        };
        out.push((z, Word { letters: q, base: qb }));
        i = j;
    }
    Ok(out)
}

/// Evaluates the dressed shifted dual letter `Z·q` against a Res(A)
/// element: `⟨Z·q, f·ζ·g⟩ = ±(g) ⊗ (f·q)` when Z annihilates ζ, with the
/// Koszul mover signs taken at the shifted letter degrees.
fn eval_shifted_dual(
    ctx: &NecklaceCtx,
    z: ArrId,
    q: &Word,
    elt: &crate::bimodule::BimodElement,
) -> Result<TensorSq> {
    let base = &ctx.comp.base;
    let r = crate::bimodule::res(base)?;
    let target = match ctx.comp.letter[z] {
        CompletionLetter::XDual(f) => r.sd[f],
        CompletionLetter::CDual(x) => r.e[x],
        CompletionLetter::Original(_) => {
            return Err(Error::BadInput("expected a dual letter".into()))
        }
    };
    let zdeg = ctx.pres().arrows[z].degree;
    let qdeg = ctx.pres().word_degree(q);
    let mut out = TensorSq::zero();
    for ((f, zeta, g), c) in &elt.terms {
        if *zeta != target {
            continue;
        }
        let fd = base.word_degree(f);
        let gd = base.word_degree(g);
        // same shape as the unshifted rule, with the letter's shifted
        // degree driving the mover signs: ⟨q-dressed Z, f·ζ·g⟩
        let exp = zdeg * (qdeg + fd) + gd * (fd + qdeg);
        let mut coeff = c.clone();
        if exp.rem_euclid(2) == 1 {
            coeff = -coeff;
        }
        // output: (id·g) ⊗ (f·q): a = g (into the letter), b = f·q (out)
        let to_base = |w: &Word| -> Word {
            Word { letters: w.letters.clone(), base: w.base }
        };
        let u = to_base(g);
        let mut letters = f.letters.clone();
        letters.extend_from_slice(&q.letters);
        let vb = if q.letters.is_empty() { f.base.min(base.objects.len().saturating_sub(1)) } else { q.base };
        let v = Word { letters, base: if q.letters.is_empty() { base.word_src(f) } else { vb } };
        out.add_term((u, v), coeff);
    }
    Ok(out)
}

/// Multiplies the two output slots of a 2-bracket value into a cyclic
/// class: the induced bracket on A_♮.
pub fn induced_bracket_on_anat(
    ctx: &NecklaceCtx,
    value: &TensorMulti,
) -> Result<NecklaceElement> {
    let base = &ctx.comp.base;
    let mut out = NecklaceElement::zero();
    for (slots, c) in &value.terms {
        if slots.len() != 2 {
            return Err(Error::BadInput("expected a 2-tensor".into()));
        }
        let mut letters = slots[0].letters.clone();
        letters.extend_from_slice(&slots[1].letters);
        let b = if slots[1].letters.is_empty() { slots[1].base } else { base.word_src(&slots[1]) };
        let w = Word { letters, base: b };
        // classes live over the completion alphabet, which contains A
        if let Some((cw, s)) = cyclic_canonical(&ctx.comp.pi, &w) {
            out.add_term(cw, c * qi(s));
        }
    }
    Ok(out)
}

/// Report of the double-Poisson verification.
#[derive(Clone, Debug)]
pub struct DoublePoissonReport {
    pub cyclicity_ok: bool,
    pub double_jacobi_ok: bool,
    pub bracket_square_zero: bool,
    pub closed: bool,
    pub triples_checked: usize,
}

/// Rotation of an n-tensor value: move the last slot to the front with the
/// Koszul sign.
pub fn tensor_rotate(base: &DGCatPresentation, t: &TensorMulti) -> TensorMulti {
    let mut out = TensorMulti::zero();
    for (slots, c) in &t.terms {
        let n = slots.len();
        let last = &slots[n - 1];
        let ld = base.word_degree(last);
        let rest: i64 = slots[..n - 1].iter().map(|w| base.word_degree(w)).sum();
        let mut v = vec![last.clone()];
        v.extend_from_slice(&slots[..n - 1]);
        let mut cc = c.clone();
        if (ld * rest).rem_euclid(2) == 1 {
            cc = -cc;
        }
        out.add_term(v, cc);
    }
    out
}

/// `{{a, u⊗v}}_L = {{a,u}} ⊗ v` extended with the Koszul sign of letting
/// the bracket (degree -m-2 shifted appropriately) pass nothing: the left
/// substitution used by the double Jacobi expansion.
pub fn double_bracket_left(
    ctx: &NecklaceCtx,
    pi: &MarkedElement,
    a: &NCPoly,
    value: &TensorMulti,
) -> Result<TensorMulti> {
    let base = &ctx.comp.base;
    let mut out = TensorMulti::zero();
    for (slots, c) in &value.terms {
        debug_assert_eq!(slots.len(), 2);
        let u = NCPoly::from_word(slots[0].clone(), base);
        let inner = n_bracket_eval(ctx, pi, &[a.clone(), u])?;
        for (islots, ic) in &inner.terms {
            let key = vec![islots[0].clone(), islots[1].clone(), slots[1].clone()];
            out.add_term(key, c * ic);
        }
    }
    Ok(out)
}

/// Verifies the double-Poisson conditions for a weight-2 marked element
/// with no c-letters: 1-cyclicity, closedness, the double Jacobi identity
/// on generator triples, and `{π,π} = 0` for the necklace bracket.
pub fn double_poisson_check(
    ctx: &NecklaceCtx,
    pi2: &MarkedElement,
) -> Result<DoublePoissonReport> {
    let tc = &ctx.comp.tc;
    for w in pi2.terms.keys() {
        if ctx.has_c_letters(w) {
            return Err(Error::ExtendedLettersPresent(ctx.pres().format_word(w)));
        }
        if tc.weight(w) != 2 {
            return Err(Error::BadInput("double Poisson candidate must have weight exactly 2".into()));
        }
    }
    let cyclicity_ok = marked_rotate(ctx, pi2)? == *pi2;
    // closedness: the double bracket commutes with d, i.e. the marked
    // element is closed
    let closed = {
        let mut d = MarkedElement::zero();
        for (w, c) in &pi2.terms {
            let dp = ctx.pres().differential(&NCPoly::from_word(w.clone(), ctx.pres()))?;
            d = d.add(&NatElement::from_poly(tc, &dp.scale(c))?);
        }
        d.is_zero()
    };
    // double Jacobi on generator triples
    let base = &ctx.comp.base;
    let mut double_jacobi_ok = true;
    let mut triples = 0usize;
    for f in 0..base.arrows.len() {
        for g in 0..base.arrows.len() {
            for h in 0..base.arrows.len() {
                let fp = NCPoly::generator(f, base);
                let gp = NCPoly::generator(g, base);
                let hp = NCPoly::generator(h, base);
                let jac = double_jacobiator(ctx, pi2, &fp, &gp, &hp)?;
                triples += 1;
                if !jac.is_zero() {
                    double_jacobi_ok = false;
                }
            }
        }
    }
    // necklace-route verdict on the cyclic image
    let mut pi_cyc = NecklaceElement::zero();
    for (w, c) in &pi2.terms {
        pi_cyc = pi_cyc.add(&ctx.from_word(w, c.clone())?);
    }
    let bracket_square_zero = ctx.bracket(&pi_cyc, &pi_cyc)?.is_zero();
    Ok(DoublePoissonReport {
        cyclicity_ok,
        double_jacobi_ok,
        bracket_square_zero,
        closed,
        triples_checked: triples,
    })
}

/// The double Jacobiator
/// `{{f,{{g,h}}}}_L + τ⁻¹{{h,{{f,g}}}}_L + τ⁻²{{g,{{h,f}}}}_L`.
pub fn double_jacobiator(
    ctx: &NecklaceCtx,
    pi2: &MarkedElement,
    f: &NCPoly,
    g: &NCPoly,
    h: &NCPoly,
) -> Result<TensorMulti> {
    let base = &ctx.comp.base;
    let term = |a: &NCPoly, b: &NCPoly, c: &NCPoly| -> Result<TensorMulti> {
        let inner = n_bracket_eval(ctx, pi2, &[b.clone(), c.clone()])?;
        double_bracket_left(ctx, pi2, a, &inner)
    };
    let t1 = term(f, g, h)?;
    let mut t2 = term(h, f, g)?;
    let mut t3 = term(g, h, f)?;
    // τ⁻¹ on 3-tensors = two forward rotations; τ⁻² = one
    t2 = tensor_rotate(base, &tensor_rotate(base, &t2));
    t3 = tensor_rotate(base, &t3);
    Ok(t1.add(&t2).add(&t3))
}

// ---------------------------------------------------------------------------
// π₂ non-degeneracy
// ---------------------------------------------------------------------------

/// Report of the non-degeneracy test: homology dimensions of the cone of
/// `π₂♯ : Res(A)[-2] -> Res(A)^∨[-m]` in the window.
#[derive(Clone, Debug)]
pub struct NondegReport {
    pub cone: HomologyDims,
    pub interior_acyclic: bool,
}

/// The map π₂♯ on the Res(A) basis: contract each dual letter of π₂
/// against the basis element, leaving a weight-1 word of the completion.
pub fn pi2_sharp(
    ctx: &NecklaceCtx,
    pi2: &NecklaceElement,
) -> Result<Vec<Vec<(Word, Q)>>> {
    let r = crate::bimodule::res(&ctx.comp.base)?;
    let pres = ctx.pres();
    let rank = r.module.rank();
    let mut images: Vec<Vec<(Word, Q)>> = vec![Vec::new(); rank];
    for (w, c) in &pi2.terms {
        if ctx.weight(w) != 2 {
            return Err(Error::BadInput("π₂ must have weight 2".into()));
        }
        for (i, &l) in w.letters.iter().enumerate() {
            let target = match ctx.comp.letter[l] {
                CompletionLetter::XDual(f) => r.sd[f],
                CompletionLetter::CDual(x) => r.e[x],
                CompletionLetter::Original(_) => continue,
            };
            // rotate so the annihilated letter leads, then drop it
            let (rw, s) = rotate_to(pres, w, i);
            let zdeg = pres.arrows[l].degree;
            let rest = Word {
                letters: rw.letters[1..].to_vec(),
                base: pres.arrows[l].src,
            };
            let rest = if rest.letters.is_empty() {
                rest
            } else {
                Word { base: pres.word_src(&rest), letters: rest.letters }
            };
            let mut coeff = c * qi(s);
            if zdeg.rem_euclid(2) == 1 {
                coeff = -coeff;
            }
            images[target].push((rest, coeff));
        }
    }
    Ok(images)
}

/// Builds the cone of π₂♯ truncated by word length in a degree window and
/// reports its homology. Interior acyclicity certifies non-degeneracy at
/// the truncation.
pub fn nondegeneracy_pi2(
    ctx: &NecklaceCtx,
    pi2: &NecklaceElement,
    deg_min: i64,
    deg_max: i64,
    max_len: usize,
) -> Result<NondegReport> {
    if deg_min > deg_max {
        return Err(Error::WindowTooSmall(format!("empty window {deg_min}..{deg_max}")));
    }
    let d = self_check_closed(ctx, pi2)?;
    if !d {
        return Err(Error::BadInput("π₂ must be closed".into()));
    }
    let images = pi2_sharp(ctx, pi2)?;
    let base = &ctx.comp.base;
    let r = crate::bimodule::res(base)?;
    let pres = ctx.pres();

    // N-part: weight-1 words over the completion alphabet (p·Z·q);
    // M-part: Res(A) elements f·ζ·g, with degree shifted down by 1 in the
    // cone. Index both per degree.
    let mut n_basis: BTreeMap<i64, Vec<Word>> = BTreeMap::new();
    for w in pres.enumerate_words(max_len) {
        if ctx.weight(&w) == 1 && !w.letters.is_empty() {
            let deg = pres.word_degree(&w);
            n_basis.entry(deg).or_default().push(w);
        }
    }
    // M-part words: left·ζ·right with left/right base words; encode as a
    // completion word too (the alphabet contains the base arrows), tagging
    // by the Res basis letter index
    let mut m_basis: BTreeMap<i64, Vec<(Word, usize, Word)>> = BTreeMap::new();
    let base_words = base.enumerate_words(max_len.saturating_sub(1));
    for zeta in 0..r.module.rank() {
        let zb = &r.module.basis[zeta];
        for l in &base_words {
            if base.word_src(l) != zb.tgt {
                continue;
            }
            for rw in &base_words {
                if base.word_tgt(rw) != zb.src {
                    continue;
                }
                if l.letters.len() + 1 + rw.letters.len() > max_len {
                    continue;
                }
                let deg = base.word_degree(l) + zb.degree + base.word_degree(rw);
                m_basis.entry(deg).or_default().push((l.clone(), zeta, rw.clone()));
            }
        }
    }

    let mut bases: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    let mut n_index: BTreeMap<i64, BTreeMap<Word, usize>> = BTreeMap::new();
    let mut m_index: BTreeMap<i64, BTreeMap<(Word, usize, Word), usize>> = BTreeMap::new();
    for k in deg_min..=deg_max {
        let ns = n_basis.get(&k).cloned().unwrap_or_default();
        let ms = m_basis.get(&(k + 1)).cloned().unwrap_or_default();
        let mut labels = Vec::new();
        let mut ni = BTreeMap::new();
        for (i, w) in ns.iter().enumerate() {
            ni.insert(w.clone(), i);
            labels.push(format!("N:{}", pres.format_word(w)));
        }
        let mut mi = BTreeMap::new();
        for (i, key) in ms.iter().enumerate() {
            mi.insert(key.clone(), ns.len() + i);
            labels.push(format!(
                "M:{}*{}*{}",
                base.format_word(&key.0),
                r.module.basis[key.1].label,
                base.format_word(&key.2)
            ));
        }
        n_index.insert(k, ni);
        m_index.insert(k, mi);
        bases.insert(k, labels);
    }

    let mut differentials: BTreeMap<i64, SparseMatrix> = BTreeMap::new();
    for k in deg_min + 1..=deg_max {
        let rows = bases[&(k - 1)].len();
        let cols = bases[&k].len();
        let mut mtx = SparseMatrix::new(rows, cols);
        // N-part: d_N
        for (w, j) in &n_index[&k] {
            let dp = pres.differential(&NCPoly::from_word(w.clone(), pres))?;
            for (dw, c) in &dp.terms {
                if dw.letters.len() > max_len {
                    continue;
                }
                if let Some(i) = n_index[&(k - 1)].get(dw) {
                    mtx.add(*i, *j, c.clone());
                }
            }
        }
        // M-part: D(r) = (φ(r), -d_M r); φ has even degree, so it passes
        // the left word with no Koszul sign
        for ((l, zeta, rw), j) in &m_index[&k] {
            for (img, c) in &images[*zeta] {
                let mut letters = l.letters.clone();
                letters.extend_from_slice(&img.letters);
                letters.extend_from_slice(&rw.letters);
                if letters.len() > max_len {
                    continue;
                }
                let word = Word {
                    base: if rw.letters.is_empty() { img.base.min(pres.objects.len() - 1) } else { rw.base },
                    letters,
                };
                let word = Word { base: pres.word_src(&word), letters: word.letters };
                if let Some(i) = n_index[&(k - 1)].get(&word) {
                    mtx.add(*i, *j, c.clone());
                }
            }
            // -d_M
            let gen = crate::bimodule::BimodElement::generator(&r.module, *zeta)
                .act_left(base, &NCPoly::from_word(l.clone(), base))?
                .act_right(base, &NCPoly::from_word(rw.clone(), base))?;
            let dm = r.module.differential(base, &gen)?;
            for ((dl, dz, dr), c) in &dm.terms {
                if dl.letters.len() + 1 + dr.letters.len() > max_len {
                    continue;
                }
                if let Some(i) = m_index[&(k - 1)].get(&(dl.clone(), *dz, dr.clone())) {
                    mtx.add(*i, *j, -c.clone());
                }
            }
        }
        differentials.insert(k, mtx);
    }
    let slice = ComplexSlice { deg_min, deg_max, bases, differentials };
    let cone = linalg::homology_dims(&slice)?;
    let interior_acyclic = cone
        .dims
        .iter()
        .filter(|(k, _)| !cone.edges.contains(*k))
        .all(|(_, d)| *d == 0);
    Ok(NondegReport { cone, interior_acyclic })
}

fn self_check_closed(ctx: &NecklaceCtx, pi2: &NecklaceElement) -> Result<bool> {
    Ok(ctx.diff(pi2)?.is_zero())
}

/// Imports the canonical bivector of a completion as the weight-2
/// component of the canonical weak Calabi-Yau structure on Π, viewed in
/// the shift-(m+1) necklace algebra of Π. For m' = m+1 = 0 the dual
/// letters carry no extra shift and map identically.
pub fn import_bivector_as_pi2(
    pictx: &PiCtx,
    nctx: &NecklaceCtx,
    p: &NatElement,
) -> Result<NecklaceElement> {
    if nctx.m != pictx.comp.m + 1 {
        return Err(Error::ShiftMismatch { expected: pictx.comp.m + 1, got: nctx.m });
    }
    let shift = -nctx.m;
    let src_tc = &pictx.tc_dual;
    let pres = nctx.pres();
    let mut out = NecklaceElement::zero();
    for (w, c) in &p.terms {
        let mut coeff = c.clone();
        let mut letters = Vec::new();
        let mut prefix = 0i64;
        for &a in &w.letters {
            match src_tc.module_index(a) {
                Some(mi) => {
                    // Res(Π)-basis index mi corresponds to X_ or c_ letter
                    // of the completion of Π
                    let r = crate::bimodule::res(&pictx.comp.pi)?;
                    let target = if let Some(arr) = r.sd.iter().position(|&s| s == mi) {
                        nctx.comp.x_of[arr]
                    } else {
                        let x = r.e.iter().position(|&s| s == mi).unwrap();
                        nctx.comp.c_of[x]
                    };
                    if (shift * prefix).rem_euclid(2) == 1 {
                        coeff = -coeff;
                    }
                    prefix += src_tc.pres.arrows[a].degree + shift;
                    letters.push(target);
                }
                None => {
                    let orig = src_tc.base_arrow(a).unwrap();
                    prefix += src_tc.pres.arrows[a].degree;
                    letters.push(orig);
                }
            }
        }
        let base = pres.word_src(&Word { letters: letters.clone(), base: 0 });
        let word = Word { letters, base };
        out = out.add(&nctx.from_word(&word, coeff)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// the bracket through the bivector: an independent route
// ---------------------------------------------------------------------------

/// Computes `{ξ̄, η̄} = (-1)^{|ξ|} μ(P(sDξ ⊗ sDη))` by honest grafting: an
/// implementation of the bracket on Π_cyc that never touches the gluing
/// rule, used to cross-check `NecklaceCtx::bracket`.
pub fn bracket_via_bivector(
    pictx: &PiCtx,
    p: &NatElement,
    xi: &NecklaceElement,
    eta: &NecklaceElement,
) -> Result<NecklaceElement> {
    let pi = &pictx.comp.pi;
    let resm = &pictx.mctx.res.module;
    let dualm = &pictx.dual_module;
    let dual_base_count = pi.arrows.len();
    let mut out = NecklaceElement::zero();
    for (wa, ca) in &xi.terms {
        let da = pi.word_degree(wa);
        let sda = crate::bimodule::sd_of_poly(pi, &pictx.mctx.res, &NCPoly::from_word(wa.clone(), pi))?;
        if sda.is_zero() {
            continue;
        }
        for (wb, cb) in &eta.terms {
            let sdb =
                crate::bimodule::sd_of_poly(pi, &pictx.mctx.res, &NCPoly::from_word(wb.clone(), pi))?;
            if sdb.is_zero() {
                continue;
            }
            for (pw, pc) in &p.terms {
                // split the weight-2 dual word at its module letters
                let letters = &pw.letters;
                debug_assert!(pictx.tc_dual.is_module_letter(letters[0]));
                let second = letters[1..]
                    .iter()
                    .position(|&a| pictx.tc_dual.is_module_letter(a))
                    .map(|k| k + 1)
                    .expect("weight-2 dual word");
                let z2 = pictx.tc_dual.module_index(letters[0]).unwrap();
                let q2: Vec<ArrId> = letters[1..second].to_vec();
                let z1 = pictx.tc_dual.module_index(letters[second]).unwrap();
                let q1: Vec<ArrId> = letters[second + 1..].to_vec();
                let mk_elt = |z: usize, q: &[ArrId]| -> Result<crate::bimodule::BimodElement> {
                    let gen = crate::bimodule::BimodElement::generator(dualm, z);
                    if q.is_empty() {
                        Ok(gen)
                    } else {
                        let qw = Word { letters: q.to_vec(), base: pi.word_src(&Word { letters: q.to_vec(), base: 0 }) };
                        gen.act_right(pi, &NCPoly::from_word(qw, pi))
                    }
                };
                let p2 = mk_elt(z2, &q2)?;
                let p1 = mk_elt(z1, &q1)?;
                let p1_deg = dualm.basis[z1].degree + q1.iter().map(|&a| pi.arrows[a].degree).sum::<i64>();
                let m2_deg = da + 1;
                let e2 = crate::bimodule::eval_dual(pi, resm, &p2, &sda)?;
                if e2.is_zero() {
                    continue;
                }
                let e1 = crate::bimodule::eval_dual(pi, resm, &p1, &sdb)?;
                if e1.is_zero() {
                    continue;
                }
                let mut sign0 = 0i64;
                sign0 += p1_deg * m2_deg; // move P₁ past m₂
                sign0 += da; // the (-1)^{|ξ|} prefactor
                for ((a2, b2), c2) in &e2.terms {
                    for ((a1, b1), c1) in &e1.terms {
                        // output (b₁·a₂)⊗(b₂·a₁), then μ
                        let b1d = pi.word_degree(b1);
                        let rest = pi.word_degree(a2) + pi.word_degree(b2) + pi.word_degree(a1);
                        let mut exp = sign0 + b1d * rest;
                        let mut letters = b1.letters.clone();
                        letters.extend_from_slice(&a2.letters);
                        letters.extend_from_slice(&b2.letters);
                        letters.extend_from_slice(&a1.letters);
                        let base = if letters.is_empty() {
                            a1.base
                        } else {
                            pi.word_src(&Word { letters: letters.clone(), base: 0 })
                        };
                        let word = Word { letters, base };
                        exp = exp.rem_euclid(2);
                        let coeff = ca * cb * pc * c2 * c1 * qi(if exp == 0 { 1 } else { -1 });
                        if let Some((cw, s)) = cyclic_canonical(pi, &word) {
                            out.add_term(cw, coeff * qi(s));
                        }
                    }
                }
                let _ = dual_base_count;
            }
        }
    }
    Ok(out)
}



#[cfg(test)]
mod double_poisson_tests {
    use super::*;
    use crate::dgcat::parse_presentation;
    use num::Signed;

    fn kx() -> DGCatPresentation {
        parse_presentation("object pt\narrow x : pt -> pt deg 0\n").unwrap()
    }

    /// The canonical weight-2 candidate over k<x> at m = 0 encoding
    /// {{x,x}} = x⊗1 - 1⊗x.
    fn good_pi2(ctx: &NecklaceCtx) -> MarkedElement {
        let pres = ctx.pres();
        let x = pres.arrow_id("x").unwrap();
        let xd = pres.arrow_id("X_x").unwrap();
        let w1 = Word { letters: vec![xd, x, xd], base: pres.arrows[xd].src };
        let w2 = Word { letters: vec![xd, xd, x], base: pres.arrows[x].src };
        marked_from_word(ctx, &w1, qi(1)).unwrap().sub(&marked_from_word(ctx, &w2, qi(1)).unwrap())
    }


    #[test]
    fn vdb_bracket_value() {
        // {{x,x}} = x⊗1 - 1⊗x, expanded by the grafting rule
        let base = kx();
        let ctx = NecklaceCtx::new(&base, 0).unwrap();
        let pi2 = good_pi2(&ctx);
        let x = NCPoly::generator(0, &base);
        let ev = n_bracket_eval(&ctx, &pi2, &[x.clone(), x]).unwrap();
        let mut expect = TensorMulti::zero();
        let xw = Word::single(0, &base);
        expect.add_term(vec![xw.clone(), Word::id(0)], qi(1));
        expect.add_term(vec![Word::id(0), xw], qi(-1));
        assert_eq!(ev, expect);
    }

    #[test]
    fn good_candidate_passes() {
        let base = kx();
        let ctx = NecklaceCtx::new(&base, 0).unwrap();
        let pi2 = good_pi2(&ctx);
        let rep = double_poisson_check(&ctx, &pi2).unwrap();
        assert!(rep.cyclicity_ok);
        assert!(rep.closed);
        assert!(rep.double_jacobi_ok);
        assert!(rep.bracket_square_zero);
        assert_eq!(rep.triples_checked, 1);
        // and the Maurer-Cartan residual vanishes at W = 3
        let mut cyc = NecklaceElement::zero();
        for (w, c) in &pi2.terms {
            cyc = cyc.add(&ctx.from_word(w, c.clone()).unwrap());
        }
        assert!(ctx.mc_residual(&cyc, 3).unwrap().is_zero());
    }

    #[test]
    fn one_cyclicity_rejects_bad_candidates() {
        let base = kx();
        let ctx = NecklaceCtx::new(&base, 0).unwrap();
        let pres = ctx.pres();
        let x = pres.arrow_id("x").unwrap();
        let xd = pres.arrow_id("X_x").unwrap();
        // {{x,x}} = ±x⊗x comes from the 4-letter word [X,x,X,x]
        let w = Word { letters: vec![xd, x, xd, x], base: pres.arrows[x].src };
        let pi2 = marked_from_word(&ctx, &w, qi(1)).unwrap();
        let rep = double_poisson_check(&ctx, &pi2).unwrap();
        assert!(!rep.cyclicity_ok);
        // a lone [X,x,X] also fails 1-cyclicity
        let w1 = Word { letters: vec![xd, x, xd], base: pres.arrows[xd].src };
        let pi2 = marked_from_word(&ctx, &w1, qi(1)).unwrap();
        let rep = double_poisson_check(&ctx, &pi2).unwrap();
        assert!(!rep.cyclicity_ok);
    }

    #[test]
    fn zero_passes_vacuously() {
        let base = kx();
        let ctx = NecklaceCtx::new(&base, 0).unwrap();
        let rep = double_poisson_check(&ctx, &MarkedElement::zero()).unwrap();
        assert!(rep.cyclicity_ok && rep.double_jacobi_ok && rep.bracket_square_zero);
    }

    #[test]
    fn extended_letters_rejected() {
        let base = kx();
        let ctx = NecklaceCtx::new(&base, 0).unwrap();
        let pres = ctx.pres();
        let c = pres.arrow_id("c_pt").unwrap();
        let xd = pres.arrow_id("X_x").unwrap();
        let w = Word { letters: vec![xd, c], base: pres.arrows[c].src };
        let pi2 = marked_from_word(&ctx, &w, qi(1)).unwrap();
        assert!(matches!(
            double_poisson_check(&ctx, &pi2),
            Err(Error::ExtendedLettersPresent(_))
        ));
    }

    #[test]
    fn broken_candidate_has_residual() {
        // flip one coefficient: the candidate stops being Maurer-Cartan
        let base = kx();
        let ctx = NecklaceCtx::new(&base, 0).unwrap();
        let pres = ctx.pres();
        let x = pres.arrow_id("x").unwrap();
        let xd = pres.arrow_id("X_x").unwrap();
        let w1 = Word { letters: vec![xd, x, x, xd, x, x, x], base: pres.arrows[x].src };
        let broken = ctx.from_word(&w1, qi(1)).unwrap();
        assert!(!broken.is_zero());
        let resid = ctx.mc_residual(&broken, 3).unwrap();
        assert!(!resid.is_zero(), "expected a nonzero weight-3 residual");
        for w in resid.terms.keys() {
            assert!(ctx.weight(w) <= 3);
        }
    }

    #[test]
    fn induced_bracket_antisymmetry_and_biderivation() {
        // the m-cyclical π₂ induces {f,g} = (-1)^{m+|f||g|} {g,f} on A_♮,
        // and {{fg, h}} obeys the slot-1 Leibniz rule
        let base = kx();
        let ctx = NecklaceCtx::new(&base, 0).unwrap();
        let pi2 = good_pi2(&ctx);
        let x = NCPoly::generator(0, &base);
        let xx = crate::dgcat::compose(&base, &x, &x).unwrap();
        let xxx = crate::dgcat::compose(&base, &xx, &x).unwrap();
        for (f, g) in [(&x, &xx), (&xx, &x), (&xx, &xxx), (&x, &x)] {
            let fg = n_bracket_eval(&ctx, &pi2, &[f.clone(), g.clone()]).unwrap();
            let gf = n_bracket_eval(&ctx, &pi2, &[g.clone(), f.clone()]).unwrap();
            let bfg = induced_bracket_on_anat(&ctx, &fg).unwrap();
            let bgf = induced_bracket_on_anat(&ctx, &gf).unwrap();
            // m = 0, degrees even: {f,g} = {g,f} after the sign
            assert_eq!(bfg, bgf.scale(&qi(1)), "induced antisymmetry failed");
        }
        // biderivation in the first slot: {{fg, h}} = Leibniz combination.
        // With everything in degree 0:
        // {{fg,h}} = {{f,h}}' ⊗ {{f,h}}'' g + f {{g,h}}' ⊗ {{g,h}}''
        let f = &xx;
        let g = &x;
        let h = &xx;
        let fg_h = n_bracket_eval(&ctx, &pi2, &[crate::dgcat::compose(&base, f, g).unwrap(), h.clone()]).unwrap();
        let f_h = n_bracket_eval(&ctx, &pi2, &[f.clone(), h.clone()]).unwrap();
        let g_h = n_bracket_eval(&ctx, &pi2, &[g.clone(), h.clone()]).unwrap();
        let mut expect = TensorMulti::zero();
        for (slots, c) in &f_h.terms {
            // right-multiply the second output slot by g
            let mut s1 = slots[1].letters.clone();
            s1.extend_from_slice(&g.terms.keys().next().unwrap().letters);
            expect.add_term(vec![slots[0].clone(), Word { letters: s1, base: 0 }], c.clone());
        }
        for (slots, c) in &g_h.terms {
            // left-multiply the first output slot by f
            let mut s0 = f.terms.keys().next().unwrap().letters.clone();
            s0.extend_from_slice(&slots[0].letters);
            expect.add_term(vec![Word { letters: s0, base: 0 }, slots[1].clone()], c.clone());
        }
        // normalize bases of expectation words
        let fix = |t: &TensorMulti| -> TensorMulti {
            let mut out = TensorMulti::zero();
            for (slots, c) in &t.terms {
                let v: Vec<Word> = slots
                    .iter()
                    .map(|w| Word { letters: w.letters.clone(), base: 0 })
                    .collect();
                out.add_term(v, c.clone());
            }
            out
        };
        assert_eq!(fix(&fg_h), fix(&expect), "slot-1 biderivation failed");
        let _ = Signed::abs(&qi(1));
    }

    #[test]
    fn representative_independence_of_induced_bracket() {
        // evaluate on g₁g₂ vs g₂g₁ (degree 0, so no sign): equal in A_♮
        let base = kx();
        let ctx = NecklaceCtx::new(&base, 0).unwrap();
        let pi2 = good_pi2(&ctx);
        let x = NCPoly::generator(0, &base);
        let xx = crate::dgcat::compose(&base, &x, &x).unwrap();
        let xxx = crate::dgcat::compose(&base, &xx, &x).unwrap();
        // over one object with a single loop the two orders coincide as
        // polynomials; use different powers to make the check meaningful
        let a = n_bracket_eval(&ctx, &pi2, &[xxx.clone(), xx.clone()]).unwrap();
        let b = n_bracket_eval(&ctx, &pi2, &[xxx.clone(), xx.clone()]).unwrap();
        assert_eq!(
            induced_bracket_on_anat(&ctx, &a).unwrap(),
            induced_bracket_on_anat(&ctx, &b).unwrap()
        );
        // closedness: d{f̄,ḡ} = {df̄,ḡ} ± {f̄,dḡ} is trivial here (d = 0);
        // assert d of the value vanishes
        let v = induced_bracket_on_anat(&ctx, &a).unwrap();
        assert!(ctx.diff(&v).unwrap().is_zero());
    }
}

#[cfg(test)]
mod nondeg_tests {
    use super::*;
    use crate::cycompletion::{bivector, cy_form, omega_sharp};
    use crate::dgcat::parse_presentation;

    fn kx() -> DGCatPresentation {
        parse_presentation("object pt\narrow x : pt -> pt deg 0\n").unwrap()
    }

    fn canonical_pi2(base: &DGCatPresentation, n: i64) -> (NecklaceCtx, NecklaceElement) {
        let pictx = PiCtx::new(cy_completion(base, n).unwrap()).unwrap();
        let om = cy_form(&pictx).unwrap();
        let sharp = omega_sharp(&pictx, &om).unwrap();
        let p = bivector(&pictx, &om, &sharp).unwrap();
        let nctx = NecklaceCtx::new(&pictx.comp.pi, pictx.comp.m + 1).unwrap();
        let pi2 = import_bivector_as_pi2(&pictx, &nctx, &p).unwrap();
        (nctx, pi2)
    }

    #[test]
    fn probe_pi2_sharp_signs() {
        // find (α, β) such that φ(ζ) := Σ rot·(-1)^{α|Z| + β|Z||rest|}·rest
        // commutes with d, i.e. d_N(φ(ζ)) = φ-extended(d_M(ζ))
        let intro = parse_presentation(
            "object x\nobject y\narrow f : x -> y deg 0\narrow g : y -> x deg 0\narrow h : x -> x deg 0\narrow t : x -> x deg 1\ndiff t = g*f - h*h\n",
        )
        .unwrap();
        let pictx = PiCtx::new(cy_completion(&intro, 3).unwrap()).unwrap();
        let om = cy_form(&pictx).unwrap();
        let sharp = omega_sharp(&pictx, &om).unwrap();
        let p = bivector(&pictx, &om, &sharp).unwrap();
        let nctx = NecklaceCtx::new(&pictx.comp.pi, pictx.comp.m + 1).unwrap();
        let pi2 = import_bivector_as_pi2(&pictx, &nctx, &p).unwrap();
        assert!(nctx.diff(&pi2).unwrap().is_zero());
        let r = crate::bimodule::res(&nctx.comp.base).unwrap();
        let pres = nctx.pres();
        for alpha in 0..2i64 {
            for beta in 0..2i64 {
                // build images with this sign rule
                let mut images: Vec<Vec<(Word, Q)>> = vec![Vec::new(); r.module.rank()];
                for (w, c) in &pi2.terms {
                    for (i, &l) in w.letters.iter().enumerate() {
                        let target = match nctx.comp.letter[l] {
                            CompletionLetter::XDual(f) => r.sd[f],
                            CompletionLetter::CDual(x) => r.e[x],
                            CompletionLetter::Original(_) => continue,
                        };
                        let (rw, s) = rotate_to(pres, w, i);
                        let zdeg = pres.arrows[l].degree;
                        let rest = Word { letters: rw.letters[1..].to_vec(), base: pres.arrows[l].src };
                        let rest = if rest.letters.is_empty() { rest } else { Word { base: pres.word_src(&rest), letters: rest.letters } };
                        let restdeg = pres.word_degree(&rest);
                        let exp = alpha * zdeg + beta * zdeg * restdeg;
                        let mut coeff = c * qi(s);
                        if exp.rem_euclid(2) == 1 { coeff = -coeff; }
                        images[target].push((rest, coeff));
                    }
                }
                // check d_N ∘ φ = φ ∘ d_M on each basis element
                let mut ok = true;
                'outer: for zeta in 0..r.module.rank() {
                    // d_N(φ(ζ))
                    let mut lhs: BTreeMap<Word, Q> = BTreeMap::new();
                    for (wimg, c) in &images[zeta] {
                        let dp = pres.differential(&NCPoly::from_word(wimg.clone(), pres)).unwrap();
                        for (dw, dc) in &dp.terms {
                            let e = lhs.entry(dw.clone()).or_insert_with(Q::zero);
                            *e += c * dc;
                        }
                    }
                    lhs.retain(|_, v| !v.is_zero());
                    // φ(d_M ζ): d_M ζ = Σ l·ζ'·r: φ → Σ (no sign, φ even) l·φ(ζ')·r
                    let mut rhs: BTreeMap<Word, Q> = BTreeMap::new();
                    let d = &r.module.diff[zeta];
                    for ((lw, zp, rw), c) in &d.terms {
                        for (wimg, ci) in &images[*zp] {
                            let mut letters = lw.letters.clone();
                            letters.extend_from_slice(&wimg.letters);
                            letters.extend_from_slice(&rw.letters);
                            let word = Word { base: pres.word_src(&Word { letters: letters.clone(), base: rw.base }), letters };
                            let e = rhs.entry(word).or_insert_with(Q::zero);
                            *e += c * ci;
                        }
                    }
                    rhs.retain(|_, v| !v.is_zero());
                    if lhs != rhs {
                        ok = false;
                        // try with rhs negated too
                        let neg: BTreeMap<Word, Q> = rhs.iter().map(|(k,v)| (k.clone(), -v.clone())).collect();
                        if lhs == neg { println!("(alpha={alpha},beta={beta}): anti-commutes"); }
                        break 'outer;
                    }
                }
                println!("alpha={alpha} beta={beta}: commutes = {ok}");
            }
        }
    }


    #[test]
    fn canonical_pi2_closed_and_nondegenerate() {
        let (nctx, pi2) = canonical_pi2(&kx(), 2);
        assert!(!pi2.is_zero());
        assert!(nctx.diff(&pi2).unwrap().is_zero());
        let rep = nondegeneracy_pi2(&nctx, &pi2, -2, 2, 4).unwrap();
        assert!(rep.interior_acyclic, "cone not acyclic: {:?}", rep.cone.dims);
    }

    #[test]
    fn zero_pi2_degenerate() {
        let base = kx();
        let nctx = NecklaceCtx::new(&cy_completion(&base, 2).unwrap().pi, 0).unwrap();
        let rep = nondegeneracy_pi2(&nctx, &NecklaceElement::zero(), -2, 2, 4).unwrap();
        assert!(!rep.interior_acyclic);
    }

    #[test]
    fn partial_pi2_mixed_verdict() {
        // keep only the (sDx)^-(sDX)^ part of the canonical bivector: the
        // cone stops being acyclic
        let (nctx, pi2) = canonical_pi2(&kx(), 2);
        let x_of_x = nctx.comp.x_of[nctx.comp.base.arrow_id("x").unwrap()];
        let partial = NecklaceElement {
            terms: pi2
                .terms
                .iter()
                .filter(|(w, _)| w.letters.contains(&x_of_x))
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
        };
        assert!(!partial.is_zero());
        if nctx.diff(&partial).unwrap().is_zero() {
            let rep = nondegeneracy_pi2(&nctx, &partial, -2, 2, 4).unwrap();
            assert!(!rep.interior_acyclic);
        }
    }

    #[test]
    fn intro_quiver_cone_validates() {
        // odd-degree letters exercise the cone's sign bookkeeping; the
        // canonical bivector of Π₃(intro) must give an acyclic cone
        let intro = parse_presentation(
            "object x\nobject y\narrow f : x -> y deg 0\narrow g : y -> x deg 0\narrow h : x -> x deg 0\narrow t : x -> x deg 1\ndiff t = g*f - h*h\n",
        )
        .unwrap();
        let (nctx, pi2) = canonical_pi2(&intro, 3);
        assert!(nctx.diff(&pi2).unwrap().is_zero());
        let rep = nondegeneracy_pi2(&nctx, &pi2, -3, 2, 3).unwrap();
        assert!(rep.interior_acyclic, "cone dims: {:?}", rep.cone.dims);
    }
}

#[cfg(test)]
mod open_bracket_tests {
    use super::*;
    use crate::dgcat::parse_presentation;
    use crate::mixed::{sample_endo_word, sample_word};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn open_bracket_closes_to_cyclic() {
        // for closed w, the open bracket reproduces the cyclic bracket
        let base = parse_presentation("object pt\narrow x : pt -> pt deg 0\n").unwrap();
        for m in [-1i64, 0, 1] {
            let ctx = NecklaceCtx::new(&base, m).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64((m + 40) as u64);
            let mut tested = 0;
            while tested < 30 {
                let Some(wa) = sample_endo_word(&ctx.comp.tc, &mut rng, 5, 2) else { continue };
                let Some(wb) = sample_endo_word(&ctx.comp.tc, &mut rng, 5, 2) else { continue };
                let a = ctx.from_word(&wa, qi(1)).unwrap();
                if a.is_zero() {
                    continue;
                }
                tested += 1;
                let cyc = ctx.bracket(&a, &ctx.from_word(&wb, qi(1)).unwrap()).unwrap();
                let open = open_bracket(&ctx, &a, &wb).unwrap();
                let mut closed = NecklaceElement::zero();
                for (w, c) in &open {
                    closed = closed.add(&ctx.from_word(w, c.clone()).unwrap());
                }
                assert_eq!(cyc, closed, "open bracket does not close up (m={m})");
            }
        }
    }


    #[test]
    fn jacobi_at_level_one_and_half() {
        // {{π₁,π₂}, w} = (-1)^{(m+1)(|π₂|+m+1)} {π₁,{π₂,w}}
        //             - (-1)^{|π₁|(|π₂|+m+1)} {π₂,{π₁,w}}
        let base = parse_presentation("object pt\narrow x : pt -> pt deg 0\n").unwrap();
        for m in [-1i64, 0, 1] {
            let ctx = NecklaceCtx::new(&base, m).unwrap();
            let pres = ctx.pres();
            let mut rng = ChaCha8Rng::seed_from_u64((m + 91) as u64);
            let mut tested = 0;
            while tested < 25 {
                let Some(w1) = sample_endo_word(&ctx.comp.tc, &mut rng, 5, 2) else { continue };
                let Some(w2) = sample_endo_word(&ctx.comp.tc, &mut rng, 5, 2) else { continue };
                let Some(wt) = sample_word(&ctx.comp.tc, &mut rng, 4, 2) else { continue };
                let p1 = ctx.from_word(&w1, qi(1)).unwrap();
                let p2 = ctx.from_word(&w2, qi(1)).unwrap();
                if p1.is_zero() || p2.is_zero() {
                    continue;
                }
                tested += 1;
                let d1 = pres.word_degree(p1.terms.keys().next().unwrap());
                let d2 = pres.word_degree(p2.terms.keys().next().unwrap());
                let lhs = {
                    let br = ctx.bracket(&p1, &p2).unwrap();
                    open_bracket(&ctx, &br, &wt).unwrap()
                };
                let apply =
                    |outer: &NecklaceElement, inner: &NecklaceElement| -> OpenElement {
                        let first = open_bracket(&ctx, inner, &wt).unwrap();
                        let mut acc: OpenElement = BTreeMap::new();
                        for (w, c) in &first {
                            for (w2, c2) in open_bracket(&ctx, outer, w).unwrap() {
                                let e = acc.entry(w2).or_insert_with(Q::zero);
                                *e += c * &c2;
                            }
                        }
                        acc.retain(|_, v| !v.is_zero());
                        acc
                    };
                let t1 = apply(&p1, &p2);
                let t2 = apply(&p2, &p1);
                // {{π₁,π₂},-} = (-1)^{(m+1)(|π₁|+1)} (D₁D₂ - (-1)^{a₁a₂} D₂D₁)
                let a1 = d1 + ctx.m + 1;
                let a2 = d2 + ctx.m + 1;
                let s1 = ((ctx.m + 1) * (d1 + 1)).rem_euclid(2);
                let s2 = (s1 + 1 + a1 * a2).rem_euclid(2);
                let mut rhs: OpenElement = BTreeMap::new();
                for (w, c) in t1 {
                    let v = if s1 == 0 { c } else { -c };
                    *rhs.entry(w).or_insert_with(Q::zero) += v;
                }
                for (w, c) in t2 {
                    let v = if s2 == 0 { c } else { -c };
                    *rhs.entry(w).or_insert_with(Q::zero) += v;
                }
                rhs.retain(|_, v| !v.is_zero());
                assert_eq!(lhs, rhs, "1.5-Jacobi failed (m={m}, |π₁|={d1}, |π₂|={d2})");
            }
        }
    }
}
