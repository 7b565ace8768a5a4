//! Calabi-Yau completions Π_n(A) = T_A(Res(A)^∨[n-2]), the Liouville class
//! λ, the 2-form ω = B̃(λ), the basis isomorphism ω♯ and the bivector P.
//!
//! The completion is returned as an ordinary presentation whose extra
//! arrows are the shifted dual letters `X_f` and `c_x`; all identities of
//! this module (dλ = 0, dω = 0, ω♯ a signed permutation, (ω♯⊗ω♯)(P) = ω)
//! are checked exactly in the test and acceptance suites.

use crate::bimodule::{
    dual, res, tensor_cat, BimodElement, NatElement, SemiFreeBimodule, TensorCat,
};
use crate::dgcat::{ArrId, DGCatPresentation, NCPoly, ObjId, Word};
use crate::mixed::MixedCtx;
use crate::{qi, Error, Q, Result};
use num::{One, Signed};
use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompletionLetter {
    Original(ArrId),
    XDual(ArrId),
    CDual(ObjId),
}

/// The (1-m)-Calabi-Yau completion of a finitely cellular presentation.
pub struct Completion {
    pub base: DGCatPresentation,
    /// Calabi-Yau dimension; the shift is m = 1 - n.
    pub n: i64,
    pub m: i64,
    pub pi: DGCatPresentation,
    /// Π as the tensor category T_A(Res(A)^∨[-m]); its module letters are
    /// the dual generators, giving the weight grading of necklace words.
    pub tc: TensorCat,
    pub letter: Vec<CompletionLetter>,
    /// arrow of Π realizing X_f, per base arrow
    pub x_of: Vec<ArrId>,
    /// arrow of Π realizing c_x, per base object
    pub c_of: Vec<ArrId>,
}

/// Builds Π_n(A). Degrees follow `|X_f| = -|f| - 1 - m`, `|c_x| = -m`,
/// the convention consistent with the worked completion of k[x].
pub fn cy_completion(base: &DGCatPresentation, n: i64) -> Result<Completion> {
    base.validate_d_squared()?;
    if base.cellular_order().is_err() {
        return Err(Error::NotFinitelyCellular("differentials contain a generator cycle".into()));
    }
    let m = 1 - n;
    let r = res(base)?;
    let rd = dual(base, &r.module, |l| format!("dual({l})"));
    let shifted = rd.shift(base, -m, |l| format!("s({l})"));
    // rename: index r.sd[i] is X of arrow i, r.e[x] is c of object x;
    // primes disambiguate when completing an algebra that is itself a
    // completion
    let mut named = SemiFreeBimodule::new();
    let mut names: Vec<String> = vec![String::new(); shifted.rank()];
    let mut taken: std::collections::BTreeSet<String> =
        base.arrows.iter().map(|a| a.name.clone()).collect();
    let mut fresh = |candidate: String| -> String {
        let mut name = candidate;
        while taken.contains(&name) {
            name.push('\'');
        }
        taken.insert(name.clone());
        name
    };
    for (i, a) in base.arrows.iter().enumerate() {
        names[r.sd[i]] = fresh(format!("X_{}", a.name));
    }
    for (x, o) in base.objects.iter().enumerate() {
        names[r.e[x]] = fresh(format!("c_{}", o));
    }
    for (j, b) in shifted.basis.iter().enumerate() {
        named.add_basis(&names[j], b.src, b.tgt, b.degree);
    }
    for (j, d) in shifted.diff.iter().enumerate() {
        named.diff[j] = d.clone();
    }
    let tc = tensor_cat(base, &named)?;
    tc.pres.validate_d_squared()?;
    let base_count = base.arrows.len();
    let mut letter = Vec::new();
    for (i, k) in tc.kind.iter().enumerate() {
        letter.push(match k {
            crate::bimodule::LetterKind::Base(a) => CompletionLetter::Original(*a),
            crate::bimodule::LetterKind::Module(_) => {
                let j = i - base_count;
                if let Some(a) = r.sd.iter().position(|&s| s == j) {
                    CompletionLetter::XDual(a)
                } else {
                    let x = r.e.iter().position(|&s| s == j).unwrap();
                    CompletionLetter::CDual(x)
                }
            }
        });
    }
    let x_of = (0..base.arrows.len()).map(|i| base_count + r.sd[i]).collect();
    let c_of = (0..base.objects.len()).map(|x| base_count + r.e[x]).collect();
    Ok(Completion { base: base.clone(), n, m, pi: tc.pres.clone(), tc, letter, x_of, c_of })
}

/// Everything needed to do mixed-complex calculus over Π.
pub struct PiCtx {
    pub comp: Completion,
    pub mctx: MixedCtx,
    /// Res(Π)^∨, with basis parallel to Res(Π)
    pub dual_module: SemiFreeBimodule,
    /// T_Π(Res(Π)^∨)
    pub tc_dual: TensorCat,
}

impl PiCtx {
    pub fn new(comp: Completion) -> Result<Self> {
        let mctx = MixedCtx::new(&comp.pi)?;
        let dual_module = dual(&comp.pi, &mctx.res.module, |l| format!("({l})^"));
        let tc_dual = tensor_cat(&comp.pi, &dual_module)?;
        Ok(PiCtx { comp, mctx, dual_module, tc_dual })
    }
}

/// The Liouville class λ = Σ_f ±(sDf)·X_f + Σ_x E_x·c_x in Y^(1)(Π),
/// closed of degree -m. The sign (-1)^{(|f|+1)(|f|+m)} is the one that
/// makes ω = B̃(λ) reproduce the closed-form expansion of the 2-form.
pub fn liouville(ctx: &PiCtx) -> Result<NatElement> {
    let comp = &ctx.comp;
    let tcp = &ctx.mctx.tc.pres;
    let base_count = comp.pi.arrows.len();
    let mut out = NatElement::zero();
    for (i, a) in comp.base.arrows.iter().enumerate() {
        // the sD-letter of the original arrow inside T_Π(Res Π)
        let pi_arrow = match comp.letter.iter().position(|l| *l == CompletionLetter::Original(i)) {
            Some(p) => p,
            None => continue,
        };
        let sd_letter = base_count + ctx.mctx.res.sd[pi_arrow];
        let x_letter = comp.x_of[i];
        let word = Word { letters: vec![sd_letter, x_letter], base: comp.pi.arrows[x_letter].src };
        let exp = (a.degree + 1) * (a.degree + comp.m);
        let sign = if exp % 2 == 0 { qi(1) } else { qi(-1) };
        out = out.add(&NatElement::from_word(&ctx.mctx.tc, &word, sign)?);
        let _ = tcp;
    }
    for x in 0..comp.base.objects.len() {
        let pi_obj = x; // objects are shared
        let e_letter = base_count + ctx.mctx.res.e[pi_obj];
        let c_letter = comp.c_of[x];
        let word = Word { letters: vec![e_letter, c_letter], base: comp.pi.arrows[c_letter].src };
        out = out.add(&NatElement::from_word(&ctx.mctx.tc, &word, qi(1))?);
    }
    Ok(out)
}

/// The extended noncommutative 2-form ω = B̃(λ) ∈ Y^(2)(Π).
pub fn cy_form(ctx: &PiCtx) -> Result<NatElement> {
    let lam = liouville(ctx)?;
    ctx.mctx.b_tilde(&lam)
}

/// Contraction of a weight-2 Y-class against the dual basis: the induced
/// bimodule map `ω♯ : Res(Π)^∨ -> Res(Π)` on basis elements, normalized so
/// that a normal-form term η⊗ξ contributes `ξ^∨ ↦ (-1)^{|ξ|} η`.
pub fn omega_sharp(ctx: &PiCtx, omega: &NatElement) -> Result<Vec<BimodElement>> {
    let tc = &ctx.mctx.tc;
    let resm = &ctx.mctx.res.module;
    let base_count = ctx.comp.pi.arrows.len();
    let mut images: Vec<BimodElement> =
        (0..resm.rank()).map(|j| BimodElement::zero(resm.basis[j].tgt, resm.basis[j].src)).collect();
    for (w, c) in &omega.terms {
        if tc.weight(w) != 2 {
            return Err(Error::BadInput("omega_sharp expects a weight-2 class".into()));
        }
        // rotate trailing path letters to the front so the word ends with
        // its second module letter
        let mut cur = w.clone();
        let mut sign = 1i64;
        while !tc.is_module_letter(*cur.letters.last().unwrap()) {
            let last = *cur.letters.last().unwrap();
            let last_deg = tc.pres.arrows[last].degree;
            let rest_deg: i64 =
                cur.letters[..cur.letters.len() - 1].iter().map(|&a| tc.pres.arrows[a].degree).sum();
            let mut letters = vec![last];
            letters.extend_from_slice(&cur.letters[..cur.letters.len() - 1]);
            if (last_deg * rest_deg) % 2 != 0 {
                sign = -sign;
            }
            cur = Word { letters, base: tc.pres.arrows[last].src };
        }
        let last = *cur.letters.last().unwrap();
        let zeta = tc.module_index(last).unwrap();
        if resm.basis[zeta].degree % 2 != 0 {
            sign = -sign; // the (-1)^{|ξ|} of the contraction
        }
        // remaining word = m₂: left·ζ₁·right over Π
        let rest = &cur.letters[..cur.letters.len() - 1];
        let split = rest.iter().position(|&a| tc.is_module_letter(a)).ok_or_else(|| {
            Error::BadInput("weight-2 class without a second module letter".into())
        })?;
        let zeta1 = tc.module_index(rest[split]).unwrap();
        let to_pi = |ls: &[ArrId]| -> Vec<ArrId> { ls.iter().map(|&a| if a < base_count { a } else { unreachable!() }).collect() };
        let left_letters: Vec<ArrId> = to_pi(&rest[..split]);
        let right_letters: Vec<ArrId> = to_pi(&rest[split + 1..]);
        let left = Word {
            base: resm.basis[zeta1].tgt,
            letters: left_letters,
        };
        let lsrc = if left.letters.is_empty() { resm.basis[zeta1].tgt } else { ctx.comp.pi.word_src(&left) };
        let left = Word { letters: left.letters, base: lsrc };
        let rbase = tc.pres.word_src(&Word { letters: rest[split + 1..].to_vec(), base: tc.pres.word_src(&cur) });
        let right = Word { letters: right_letters, base: rbase };
        images[zeta].add_term((left, zeta1, right), c * qi(sign));
    }
    Ok(images)
}

/// Reports whether a basis map is a signed permutation of the basis and, if
/// so, returns (image index, sign) per source index.
pub fn signed_permutation(images: &[BimodElement]) -> Option<Vec<(usize, Q)>> {
    let mut seen = vec![false; images.len()];
    let mut out = Vec::new();
    for img in images {
        if img.terms.len() != 1 {
            return None;
        }
        let ((l, b, r), c) = img.terms.iter().next().unwrap();
        if !l.is_id() || !r.is_id() {
            return None;
        }
        if c.clone().abs() != Q::one() {
            return None;
        }
        if seen[*b] {
            return None;
        }
        seen[*b] = true;
        out.push((*b, c.clone()));
    }
    Some(out)
}

/// Applies a basis substitution `F` (degree `fdeg`, module letters only) to
/// every term of a weight-graded class, with the Koszul sign of letting the
/// second and later copies of `F` travel past the prefix.
fn substitute_module_letters(
    tc_src: &TensorCat,
    tc_dst: &TensorCat,
    dst_base_count: usize,
    f: &dyn Fn(usize) -> (usize, Q),
    fdeg: i64,
    e: &NatElement,
) -> Result<NatElement> {
    let mut out = NatElement::zero();
    for (w, c) in &e.terms {
        let mut coeff = c.clone();
        let mut letters: Vec<ArrId> = Vec::new();
        let mut prefix_deg = 0i64;
        for &a in &w.letters {
            match tc_src.module_index(a) {
                Some(mi) => {
                    let (nj, s) = f(mi);
                    if (fdeg * prefix_deg) % 2 != 0 {
                        coeff = -coeff;
                    }
                    coeff *= s;
                    prefix_deg += tc_src.pres.arrows[a].degree + fdeg;
                    letters.push(dst_base_count + nj);
                }
                None => {
                    let orig = tc_src.base_arrow(a).unwrap();
                    prefix_deg += tc_src.pres.arrows[a].degree;
                    letters.push(orig);
                }
            }
        }
        let base = tc_dst.pres.word_src(&Word { letters: letters.clone(), base: 0 });
        let word = Word { letters, base };
        out = out.add(&NatElement::from_word(tc_dst, &word, coeff)?);
    }
    Ok(out)
}

/// The bivector P, the image of ω under the inverse of the isomorphism
/// `ω♯⊗ω♯`, a naturalized class over Res(Π)^∨ ⊗ Res(Π)^∨. Inverting the
/// tensor-square map rather than pairing two letterwise inverses costs an
/// extra `(-1)^{(1-m)(m-1)}`, which is what makes `(ω♯⊗ω♯)(P) = ω` hold on
/// the nose.
pub fn bivector(ctx: &PiCtx, omega: &NatElement, sharp: &[BimodElement]) -> Result<NatElement> {
    let perm = signed_permutation(sharp)
        .ok_or_else(|| Error::BadInput("omega_sharp is not a signed permutation".into()))?;
    // invert: sharp maps ζ^∨ ↦ s·ζ'; the inverse maps ζ' ↦ s⁻¹·ζ^∨
    let rank = perm.len();
    let mut inv: Vec<(usize, Q)> = vec![(0, Q::one()); rank];
    for (src_dual, (img, s)) in perm.iter().enumerate() {
        inv[*img] = (src_dual, Q::one() / s.clone());
    }
    let dst_base_count = ctx.comp.pi.arrows.len();
    let letterwise = substitute_module_letters(
        &ctx.mctx.tc,
        &ctx.tc_dual,
        dst_base_count,
        &|mi| inv[mi].clone(),
        ctx.comp.m - 1,
        omega,
    )?;
    let sign = if (ctx.comp.m - 1) % 2 == 0 { qi(1) } else { qi(-1) };
    Ok(letterwise.scale(&sign))
}

/// Pushes P back through ω♯ ⊗ ω♯; must reproduce ω exactly.
pub fn sharp_of_bivector(ctx: &PiCtx, p: &NatElement, sharp: &[BimodElement]) -> Result<NatElement> {
    let perm = signed_permutation(sharp)
        .ok_or_else(|| Error::BadInput("omega_sharp is not a signed permutation".into()))?;
    let dst_base_count = ctx.comp.pi.arrows.len();
    substitute_module_letters(
        &ctx.tc_dual,
        &ctx.mctx.tc,
        dst_base_count,
        &|mi| perm[mi].clone(),
        1 - ctx.comp.m,
        p,
    )
}

/// The C₂ rotation of a weight-2 dual class with the (m-1)-twisted sign;
/// P is required to be invariant.
pub fn rotate_bivector(ctx: &PiCtx, p: &NatElement) -> Result<NatElement> {
    let tc = &ctx.tc_dual;
    let mut out = NatElement::zero();
    for (w, c) in &p.terms {
        let (rw, s) = crate::bimodule::tau(tc, w);
        let mut coeff = c * qi(s);
        if (ctx.comp.m - 1) % 2 != 0 {
            coeff = -coeff;
        }
        out = out.add(&NatElement::from_word(tc, &rw, coeff)?);
    }
    Ok(out)
}

/// Differential of a class over T_Π(Res(Π)^∨).
pub fn d_dual_class(ctx: &PiCtx, e: &NatElement) -> Result<NatElement> {
    let tc = &ctx.tc_dual;
    let mut out = NatElement::zero();
    for (w, c) in &e.terms {
        let dp = tc.pres.differential(&NCPoly::from_word(w.clone(), tc.pres()))?;
        out = out.add(&NatElement::from_poly(tc, &dp.scale(c))?);
    }
    Ok(out)
}

trait TcPres {
    fn pres(&self) -> &DGCatPresentation;
}

impl TcPres for TensorCat {
    fn pres(&self) -> &DGCatPresentation {
        &self.pres
    }
}

/// Collects, for reporting, the ω♯ images by letter provenance: the table
/// (sDf)^∨ ↦ sDX_f, (sDX_f)^∨ ↦ ±sDf, (E_x)^∨ ↦ sDc_x, (sDc_x)^∨ ↦ ±E_x.
pub fn sharp_table(ctx: &PiCtx, sharp: &[BimodElement]) -> BTreeMap<String, String> {
    let resm = &ctx.mctx.res.module;
    let mut out = BTreeMap::new();
    for (j, img) in sharp.iter().enumerate() {
        let source = format!("({})^", resm.basis[j].label);
        let value = if img.is_zero() {
            "0".to_string()
        } else {
            let mut parts = Vec::new();
            for ((l, b, r), c) in &img.terms {
                let mut s = String::new();
                if c != &Q::one() {
                    s.push_str(&format!("{}*", crate::dgcat::format_q(c)));
                }
                if !l.is_id() {
                    s.push_str(&format!("{}*", ctx.comp.pi.format_word(l)));
                }
                s.push_str(&resm.basis[*b].label);
                if !r.is_id() {
                    s.push_str(&format!("*{}", ctx.comp.pi.format_word(r)));
                }
                parts.push(s);
            }
            parts.join(" + ")
        };
        out.insert(source, value);
    }
    out
}
