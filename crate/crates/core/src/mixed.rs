//! The Y/Υ complexes of a presentation, the graded derivation sD̃, the
//! mixed maps B, the comparison maps ρ and pr, the homotopy between τ and
//! the identity, and totalization with its Hodge filtration.
//!
//! Everything lives inside the tensor category T_A(Res(A)): a Y-class is a
//! naturalized word (module letters fixed relative to the seam), an
//! Υ-class its full cyclic orbit. All operations take explicit truncation
//! caps; exactness within the window is the contract.

use crate::bimodule::{
    self, cyc_canonical, res, tensor_cat, CycElement, NatElement, Resolution, TensorCat,
};
use crate::dgcat::{ArrId, DGCatPresentation, NCPoly, Word};
use crate::linalg::{self, ComplexSlice, HomologyDims, SparseMatrix};
use crate::{qi, Error, Result};
use rand::Rng;
use std::collections::BTreeMap;

/// Carrier for all mixed-complex computations over a fixed presentation.
pub struct MixedCtx {
    pub base: DGCatPresentation,
    pub res: Resolution,
    pub tc: TensorCat,
}

impl MixedCtx {
    pub fn new(base: &DGCatPresentation) -> Result<Self> {
        let r = res(base)?;
        let tc = tensor_cat(base, &r.module)?;
        Ok(MixedCtx { base: base.clone(), res: r, tc })
    }

    /// The degree +1 derivation with `sD̃(f) = sDf` on base arrows and
    /// `sD̃(sDf) = sD̃(E_x) = 0`.
    pub fn sd_tilde(&self, p: &NCPoly) -> NCPoly {
        let base_count = self.base.arrows.len();
        self.tc.pres.apply_derivation(
            &|a| match self.tc.base_arrow(a) {
                Some(orig) => NCPoly::generator(base_count + self.res.sd[orig], &self.tc.pres),
                None => {
                    let arr = self.tc.pres.arrow(a);
                    NCPoly::zero(arr.src, arr.tgt)
                }
            },
            1,
            p,
        )
    }

    /// `(sD̃∘d + d∘sD̃)(w) - (w·E_x - E_y·w)`; identically zero.
    pub fn commutator_defect(&self, p: &NCPoly) -> Result<NCPoly> {
        let base_count = self.base.arrows.len();
        let d = &self.tc.pres;
        let sd_d = self.sd_tilde(&d.differential(p)?);
        let d_sd = d.differential(&self.sd_tilde(p))?;
        let e_src = NCPoly::generator(base_count + self.res.e[p.src], d);
        let e_tgt = NCPoly::generator(base_count + self.res.e[p.tgt], d);
        let bracket = crate::dgcat::compose(d, p, &e_src)?.sub(&crate::dgcat::compose(d, &e_tgt, p)?)?;
        sd_d.add(&d_sd)?.sub(&bracket)
    }

    pub fn weight(&self, w: &Word) -> usize {
        self.tc.weight(w)
    }

    /// Differential of a Y-element (descends from the word differential).
    pub fn d_nat(&self, e: &NatElement) -> Result<NatElement> {
        let mut out = NatElement::zero();
        for (w, c) in &e.terms {
            let dp = self.tc.pres.differential(&NCPoly::from_word(w.clone(), &self.tc.pres))?;
            out = out.add(&NatElement::from_poly(&self.tc, &dp.scale(c))?);
        }
        Ok(out)
    }

    /// Differential of an Υ-element.
    pub fn d_cycl(&self, e: &CycElement) -> Result<CycElement> {
        let mut out = CycElement::zero();
        for (w, c) in &e.terms {
            let dp = self.tc.pres.differential(&NCPoly::from_word(w.clone(), &self.tc.pres))?;
            out = out.add(&CycElement::from_poly(&self.tc, &dp.scale(c))?);
        }
        Ok(out)
    }

    /// The mixed map `B : Υ^(n) -> Υ^(n+1)`, descent of sD̃.
    pub fn b_map(&self, e: &CycElement) -> Result<CycElement> {
        let mut out = CycElement::zero();
        for (w, c) in &e.terms {
            let sd = self.sd_tilde(&NCPoly::from_word(w.clone(), &self.tc.pres));
            out = out.add(&CycElement::from_poly(&self.tc, &sd.scale(c))?);
        }
        Ok(out)
    }

    /// Cyclic sum `ρ = 1 + τ + … + τ^{n-1} : Υ^(n) -> Y^(n)`.
    pub fn rho(&self, e: &CycElement) -> Result<NatElement> {
        let mut out = NatElement::zero();
        for (w, c) in &e.terms {
            let n = self.weight(w).max(1);
            let mut cur = w.clone();
            let mut sign = 1i64;
            for _ in 0..n {
                out = out.add(&NatElement::from_word(&self.tc, &cur, c * qi(sign))?);
                if self.weight(w) == 0 {
                    break;
                }
                let (nw, s) = bimodule::tau(&self.tc, &cur);
                cur = nw;
                sign *= s;
            }
        }
        Ok(out)
    }

    /// Projection `pr : Y^(n) -> Υ^(n)`.
    pub fn pr(&self, e: &NatElement) -> Result<CycElement> {
        let mut out = CycElement::zero();
        for (w, c) in &e.terms {
            out = out.add(&CycElement::from_word(&self.tc, w, c.clone())?);
        }
        Ok(out)
    }

    /// `B̃ = ρ ∘ B ∘ pr : Y^(n) -> Y^(n+1)`.
    pub fn b_tilde(&self, e: &NatElement) -> Result<NatElement> {
        self.rho(&self.b_map(&self.pr(e)?)?)
    }

    /// The rotation `τ` on Y-classes, moving the last tensor factor to the
    /// front.
    pub fn tau_nat(&self, e: &NatElement) -> NatElement {
        let mut out = NatElement::zero();
        for (w, c) in &e.terms {
            let n = self.weight(w);
            if n == 0 {
                out.add_term(w.clone(), c.clone());
                continue;
            }
            let mut cur = w.clone();
            let mut sign = 1i64;
            for _ in 0..n - 1 {
                let (nw, s) = bimodule::tau(&self.tc, &cur);
                cur = nw;
                sign *= s;
            }
            out.add_term(cur, c * qi(sign));
        }
        out
    }

    /// The homotopy with `hd + dh = id - τ`: zero on classes whose last
    /// module letter is an `sDf`, and `ξ⊗E_x ↦ sD̃(ξ)` on the rest.
    pub fn homotopy_h(&self, e: &NatElement) -> Result<NatElement> {
        let mut out = NatElement::zero();
        for (w, c) in &e.terms {
            if self.weight(w) == 0 {
                continue;
            }
            // rotate trailing path letters to the front so the word ends
            // with its last module letter
            let mut cur = w.clone();
            let mut sign = 1i64;
            while !self.tc.is_module_letter(*cur.letters.last().unwrap()) {
                let last = *cur.letters.last().unwrap();
                let last_deg = self.tc.pres.arrows[last].degree;
                let rest_deg: i64 = cur.letters[..cur.letters.len() - 1]
                    .iter()
                    .map(|&a| self.tc.pres.arrows[a].degree)
                    .sum();
                let mut letters = vec![last];
                letters.extend_from_slice(&cur.letters[..cur.letters.len() - 1]);
                if (last_deg * rest_deg) % 2 != 0 {
                    sign = -sign;
                }
                cur = Word { letters, base: self.tc.pres.arrows[last].src };
            }
            let last = *cur.letters.last().unwrap();
            let is_e = self.tc.module_index(last).map(|i| self.res.e.contains(&i)).unwrap_or(false);
            if !is_e {
                continue;
            }
            // cur = ξ·E_x: strip the E and apply sD̃ to ξ
            let obj = self.tc.pres.arrows[last].src;
            let xi = Word { letters: cur.letters[..cur.letters.len() - 1].to_vec(), base: obj };
            let sd = self.sd_tilde(&NCPoly::from_word(xi, &self.tc.pres));
            out = out.add(&NatElement::from_poly(&self.tc, &sd.scale(&(c * qi(sign))))?);
        }
        Ok(out)
    }

    /// Enumerates canonical Y-class words of the given weight with at most
    /// `max_len` letters, grouped by homological degree.
    pub fn enumerate_y_classes(&self, weight: usize, max_len: usize) -> BTreeMap<i64, Vec<Word>> {
        self.enumerate_classes(weight, max_len, false)
    }

    pub fn enumerate_upsilon_classes(&self, weight: usize, max_len: usize) -> BTreeMap<i64, Vec<Word>> {
        self.enumerate_classes(weight, max_len, true)
    }

    fn enumerate_classes(&self, weight: usize, max_len: usize, cyclic: bool) -> BTreeMap<i64, Vec<Word>> {
        let mut seen: BTreeMap<i64, Vec<Word>> = BTreeMap::new();
        let mut dedup = std::collections::BTreeSet::new();
        for w in self.tc.pres.enumerate_words(max_len) {
            if self.tc.pres.word_src(&w) != self.tc.pres.word_tgt(&w) {
                continue;
            }
            if self.weight(&w) != weight {
                continue;
            }
            let canon = if cyclic {
                cyc_canonical(&self.tc, &w).ok().flatten()
            } else {
                bimodule::nat_canonical(&self.tc, &w).ok().flatten()
            };
            let Some((cw, _)) = canon else { continue };
            if dedup.insert(cw.clone()) {
                let deg = self.tc.pres.word_degree(&cw);
                seen.entry(deg).or_default().push(cw);
            }
        }
        seen
    }

    /// Builds the length-truncated complex of weight-`n` Y- or Υ-classes in
    /// a degree window and reports its homology. The truncation quotients
    /// away words longer than `max_len`; the window ends are edge degrees.
    pub fn truncated_homology(
        &self,
        weight: usize,
        deg_min: i64,
        deg_max: i64,
        max_len: usize,
        upsilon: bool,
    ) -> Result<HomologyDims> {
        if deg_min > deg_max {
            return Err(Error::WindowTooSmall(format!("empty window {deg_min}..{deg_max}")));
        }
        let classes = if upsilon {
            self.enumerate_upsilon_classes(weight, max_len)
        } else {
            self.enumerate_y_classes(weight, max_len)
        };
        let slice = self.class_complex(&classes, deg_min, deg_max, max_len, upsilon)?;
        linalg::homology_dims(&slice)
    }

    /// Assembles a `ComplexSlice` from enumerated class words.
    pub fn class_complex(
        &self,
        classes: &BTreeMap<i64, Vec<Word>>,
        deg_min: i64,
        deg_max: i64,
        max_len: usize,
        upsilon: bool,
    ) -> Result<ComplexSlice> {
        let mut bases = BTreeMap::new();
        let mut index: BTreeMap<i64, BTreeMap<Word, usize>> = BTreeMap::new();
        for n in deg_min..=deg_max {
            let ws = classes.get(&n).cloned().unwrap_or_default();
            let mut idx = BTreeMap::new();
            for (i, w) in ws.iter().enumerate() {
                idx.insert(w.clone(), i);
            }
            index.insert(n, idx);
            bases.insert(n, ws.iter().map(|w| self.tc.pres.format_word(w)).collect());
        }
        let mut differentials = BTreeMap::new();
        for n in deg_min + 1..=deg_max {
            let rows = classes.get(&(n - 1)).map_or(0, |v| v.len());
            let cols = classes.get(&n).map_or(0, |v| v.len());
            let mut m = SparseMatrix::new(rows, cols);
            if let Some(ws) = classes.get(&n) {
                for (j, w) in ws.iter().enumerate() {
                    let image = if upsilon {
                        let e = CycElement::from_word(&self.tc, w, qi(1))?;
                        self.d_cycl(&e)?.terms
                    } else {
                        let e = NatElement::from_word(&self.tc, w, qi(1))?;
                        self.d_nat(&e)?.terms
                    };
                    for (iw, c) in image {
                        if iw.letters.len() > max_len {
                            continue; // length-quotient truncation
                        }
                        if let Some(i) = index[&(n - 1)].get(&iw) {
                            m.add(*i, j, c);
                        }
                    }
                }
            }
            differentials.insert(n, m);
        }
        Ok(ComplexSlice { deg_min, deg_max, bases, differentials })
    }
}

/// Finite Hodge-truncated element of the total complex: Σ υ_p·u^p, p ≤ cap.
#[derive(Clone, Debug, PartialEq)]
pub struct HodgeElement {
    pub cap: usize,
    pub components: BTreeMap<usize, CycElement>,
}

impl HodgeElement {
    pub fn zero(cap: usize) -> Self {
        HodgeElement { cap, components: BTreeMap::new() }
    }

    pub fn set(&mut self, p: usize, e: CycElement) {
        if p <= self.cap && !e.is_zero() {
            self.components.insert(p, e);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.components.values().all(|e| e.is_zero())
    }

    /// Lowest `u`-power with a nonzero component: the Hodge filtration level.
    pub fn filtration_level(&self) -> Option<usize> {
        self.components.iter().find(|(_, e)| !e.is_zero()).map(|(p, _)| *p)
    }
}

/// The total-complex differential `d_cyc = d + uB`, truncated at the cap.
pub fn d_cyc(ctx: &MixedCtx, e: &HodgeElement) -> Result<HodgeElement> {
    let mut out = HodgeElement::zero(e.cap);
    let mut acc: BTreeMap<usize, CycElement> = BTreeMap::new();
    for (p, comp) in &e.components {
        let d = ctx.d_cycl(comp)?;
        acc.entry(*p).and_modify(|x| *x = x.add(&d)).or_insert(d);
        if p + 1 <= e.cap {
            let b = ctx.b_map(comp)?;
            acc.entry(p + 1).and_modify(|x| *x = x.add(&b)).or_insert(b);
        }
    }
    for (p, c) in acc {
        out.set(p, c);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// random words for the property suites
// ---------------------------------------------------------------------------

/// Samples a composable endomorphism word in the tensor category with at
/// most `max_len` letters and at most `max_weight` module letters. Returns
/// `None` when the random walk fails to close up.
pub fn sample_endo_word(
    tc: &TensorCat,
    rng: &mut impl Rng,
    max_len: usize,
    max_weight: usize,
) -> Option<Word> {
    let pres = &tc.pres;
    if pres.objects.is_empty() || pres.arrows.is_empty() {
        return None;
    }
    for _ in 0..60 {
        let base = rng.gen_range(0..pres.objects.len());
        let len = rng.gen_range(1..=max_len.max(1));
        let mut letters: Vec<ArrId> = Vec::new();
        let mut weight = 0usize;
        let mut tgt = base;
        // build from the right: first-applied letter starts at `base`
        let mut ok = true;
        for step in 0..len {
            let need_close = step + 1 == len;
            let candidates: Vec<ArrId> = (0..pres.arrows.len())
                .filter(|&a| {
                    pres.arrows[a].src == tgt
                        && (!need_close || pres.arrows[a].tgt == base)
                        && (weight < max_weight || !tc.is_module_letter(a))
                })
                .collect();
            if candidates.is_empty() {
                ok = false;
                break;
            }
            let a = candidates[rng.gen_range(0..candidates.len())];
            if tc.is_module_letter(a) {
                weight += 1;
            }
            tgt = pres.arrows[a].tgt;
            letters.insert(0, a);
        }
        if ok && tgt == base {
            return Some(Word { letters, base });
        }
    }
    None
}

/// Samples a not-necessarily-closed composable word.
pub fn sample_word(
    tc: &TensorCat,
    rng: &mut impl Rng,
    max_len: usize,
    max_weight: usize,
) -> Option<Word> {
    let pres = &tc.pres;
    if pres.objects.is_empty() || pres.arrows.is_empty() {
        return None;
    }
    for _ in 0..60 {
        let base = rng.gen_range(0..pres.objects.len());
        let len = rng.gen_range(1..=max_len.max(1));
        let mut letters: Vec<ArrId> = Vec::new();
        let mut weight = 0usize;
        let mut tgt = base;
        let mut ok = true;
        for _ in 0..len {
            let candidates: Vec<ArrId> = (0..pres.arrows.len())
                .filter(|&a| {
                    pres.arrows[a].src == tgt && (weight < max_weight || !tc.is_module_letter(a))
                })
                .collect();
            if candidates.is_empty() {
                ok = false;
                break;
            }
            let a = candidates[rng.gen_range(0..candidates.len())];
            if tc.is_module_letter(a) {
                weight += 1;
            }
            tgt = pres.arrows[a].tgt;
            letters.insert(0, a);
        }
        if ok {
            return Some(Word { letters, base });
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgcat::{intro_quiver, parse_presentation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kx_ctx() -> MixedCtx {
        let p = parse_presentation("object pt\narrow x : pt -> pt deg 0\n").unwrap();
        MixedCtx::new(&p).unwrap()
    }

    fn intro_ctx() -> MixedCtx {
        MixedCtx::new(&intro_quiver()).unwrap()
    }

    #[test]
    fn sd_tilde_on_generators() {
        let ctx = intro_ctx();
        let p = &ctx.tc.pres;
        // sD̃(f) = sDf
        let f = NCPoly::generator(p.arrow_id("f").unwrap(), p);
        let sdf = NCPoly::generator(p.arrow_id("sDf").unwrap(), p);
        assert_eq!(ctx.sd_tilde(&f), sdf);
        // sD̃(sDf) = 0, sD̃(E_x) = 0
        assert!(ctx.sd_tilde(&sdf).is_zero());
        let ex = NCPoly::generator(p.arrow_id("E_x").unwrap(), p);
        assert!(ctx.sd_tilde(&ex).is_zero());
        // sD̃(f·sDg) = sDf·sDg
        let sdg = NCPoly::generator(p.arrow_id("sDg").unwrap(), p);
        let fsdg = crate::dgcat::compose(p, &f, &sdg).unwrap();
        let expect = crate::dgcat::compose(p, &sdf, &sdg).unwrap();
        assert_eq!(ctx.sd_tilde(&fsdg), expect);
    }

    #[test]
    fn sd_tilde_squares_to_zero() {
        let ctx = intro_ctx();
        let tc = &ctx.tc;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..120 {
            if let Some(w) = sample_word(tc, &mut rng, 6, 3) {
                let p = NCPoly::from_word(w, &tc.pres);
                let dd = ctx.sd_tilde(&ctx.sd_tilde(&p));
                assert!(dd.is_zero(), "sD̃² != 0 on {}", tc.pres.format_poly(&p));
            }
        }
    }

    #[test]
    fn commutator_is_bracket_with_e() {
        let ctx = intro_ctx();
        let tc = &ctx.tc;
        for name in ["f", "g", "h", "t", "E_x", "sDt"] {
            let p = NCPoly::generator(tc.pres.arrow_id(name).unwrap(), &tc.pres);
            let defect = ctx.commutator_defect(&p).unwrap();
            assert!(defect.is_zero(), "defect({name}) = {}", tc.pres.format_poly(&defect));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..120 {
            if let Some(w) = sample_word(tc, &mut rng, 6, 3) {
                let p = NCPoly::from_word(w, &tc.pres);
                let defect = ctx.commutator_defect(&p).unwrap();
                assert!(defect.is_zero(), "defect on {}", tc.pres.format_poly(&p));
            }
        }
    }

    #[test]
    fn b_on_weight_zero_kx() {
        // B₀(class of x) = class of sDx, and B of that is 0
        let ctx = kx_ctx();
        let tc = &ctx.tc;
        let x = Word::single(tc.pres.arrow_id("x").unwrap(), &tc.pres);
        let e = CycElement::from_word(tc, &x, qi(1)).unwrap();
        let b = ctx.b_map(&e).unwrap();
        let sdx = Word::single(tc.pres.arrow_id("sDx").unwrap(), &tc.pres);
        let expect = CycElement::from_word(tc, &sdx, qi(1)).unwrap();
        assert_eq!(b, expect);
        assert!(ctx.b_map(&b).unwrap().is_zero());
    }

    #[test]
    fn b_squared_and_anticommute() {
        let ctx = intro_ctx();
        let tc = &ctx.tc;
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut tested = 0;
        while tested < 80 {
            let Some(w) = sample_endo_word(tc, &mut rng, 6, 3) else { continue };
            let e = CycElement::from_word(tc, &w, qi(1)).unwrap();
            if e.is_zero() {
                continue;
            }
            tested += 1;
            let bb = ctx.b_map(&ctx.b_map(&e).unwrap()).unwrap();
            assert!(bb.is_zero(), "B² != 0 on {}", tc.pres.format_word(&w));
            let bd = ctx.b_map(&ctx.d_cycl(&e).unwrap()).unwrap();
            let db = ctx.d_cycl(&ctx.b_map(&e).unwrap()).unwrap();
            assert!(bd.add(&db).is_zero(), "Bd + dB != 0 on {}", tc.pres.format_word(&w));
        }
    }

    #[test]
    fn rho_pr_identities() {
        let ctx = intro_ctx();
        let tc = &ctx.tc;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut tested = 0;
        while tested < 60 {
            let Some(w) = sample_endo_word(tc, &mut rng, 6, 3) else { continue };
            let n = ctx.weight(&w);
            if n == 0 {
                continue;
            }
            let ups = CycElement::from_word(tc, &w, qi(1)).unwrap();
            if ups.is_zero() {
                continue;
            }
            tested += 1;
            // pr(ρ(υ)) = n·υ
            let pr_rho = ctx.pr(&ctx.rho(&ups).unwrap()).unwrap();
            assert_eq!(pr_rho, ups.scale(&qi(n as i64)));
            // ρ commutes with d
            let lhs = ctx.d_nat(&ctx.rho(&ups).unwrap()).unwrap();
            let rhs = ctx.rho(&ctx.d_cycl(&ups).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn homotopy_identities() {
        let ctx = intro_ctx();
        let tc = &ctx.tc;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let mut tested = 0;
        while tested < 80 {
            let Some(w) = sample_endo_word(tc, &mut rng, 6, 3) else { continue };
            if ctx.weight(&w) == 0 {
                continue;
            }
            let y = NatElement::from_word(tc, &w, qi(1)).unwrap();
            if y.is_zero() {
                continue;
            }
            tested += 1;
            let hd = ctx.homotopy_h(&ctx.d_nat(&y).unwrap()).unwrap();
            let dh = ctx.d_nat(&ctx.homotopy_h(&y).unwrap()).unwrap();
            let lhs = hd.add(&dh);
            let rhs = y.sub(&ctx.tau_nat(&y));
            assert_eq!(lhs, rhs, "hd+dh != id-τ on {}", tc.pres.format_word(&w));
        }
    }

    #[test]
    fn h_vanishes_on_sd_component() {
        let ctx = intro_ctx();
        let tc = &ctx.tc;
        let sdt = tc.pres.arrow_id("sDt").unwrap();
        let w = Word { letters: vec![sdt], base: tc.pres.arrows[sdt].src };
        let y = NatElement::from_word(tc, &w, qi(1)).unwrap();
        assert!(ctx.homotopy_h(&y).unwrap().is_zero());
        // ξ⊗E_x ↦ sD̃(ξ)
        let t = tc.pres.arrow_id("t").unwrap();
        let ex = tc.pres.arrow_id("E_x").unwrap();
        let w = Word { letters: vec![t, ex], base: tc.pres.arrows[ex].src };
        let y = NatElement::from_word(tc, &w, qi(1)).unwrap();
        let h = ctx.homotopy_h(&y).unwrap();
        let sdt_w = Word { letters: vec![sdt], base: tc.pres.arrows[sdt].src };
        let expect = NatElement::from_word(tc, &sdt_w, qi(1)).unwrap();
        assert_eq!(h, expect);
    }

    #[test]
    fn b_tilde_mixed_identities() {
        let ctx = intro_ctx();
        let tc = &ctx.tc;
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let mut tested = 0;
        while tested < 40 {
            let Some(w) = sample_endo_word(tc, &mut rng, 5, 2) else { continue };
            let y = NatElement::from_word(tc, &w, qi(1)).unwrap();
            if y.is_zero() {
                continue;
            }
            tested += 1;
            let bb = ctx.b_tilde(&ctx.b_tilde(&y).unwrap()).unwrap();
            assert!(bb.is_zero());
            let bd = ctx.b_tilde(&ctx.d_nat(&y).unwrap()).unwrap();
            let db = ctx.d_nat(&ctx.b_tilde(&y).unwrap()).unwrap();
            assert!(bd.add(&db).is_zero());
        }
    }

    #[test]
    fn d_cyc_squares_to_zero() {
        let ctx = intro_ctx();
        let tc = &ctx.tc;
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let mut tested = 0;
        while tested < 30 {
            let Some(w) = sample_endo_word(tc, &mut rng, 5, 3) else { continue };
            let e = CycElement::from_word(tc, &w, qi(1)).unwrap();
            if e.is_zero() {
                continue;
            }
            tested += 1;
            let mut he = HodgeElement::zero(4);
            he.set(ctx.weight(&w).min(4), e);
            let dd = d_cyc(&ctx, &d_cyc(&ctx, &he).unwrap()).unwrap();
            assert!(dd.is_zero());
            // Hodge filtration respected: d_cyc(F^p) ⊆ F^p
            let d1 = d_cyc(&ctx, &he).unwrap();
            if let (Some(l0), Some(l1)) = (he.filtration_level(), d1.filtration_level()) {
                assert!(l1 >= l0);
            }
        }
    }

    #[test]
    fn d_cyc_weight_zero_example() {
        // e = class(x)·u⁰ over k<x>: d_cyc(e) = class(sDx)·u¹
        let ctx = kx_ctx();
        let tc = &ctx.tc;
        let x = Word::single(tc.pres.arrow_id("x").unwrap(), &tc.pres);
        let mut he = HodgeElement::zero(4);
        he.set(0, CycElement::from_word(tc, &x, qi(1)).unwrap());
        let d = d_cyc(&ctx, &he).unwrap();
        let sdx = Word::single(tc.pres.arrow_id("sDx").unwrap(), &tc.pres);
        let expect = CycElement::from_word(tc, &sdx, qi(1)).unwrap();
        assert_eq!(d.components.len(), 1);
        assert_eq!(d.components[&1], expect);
    }

    #[test]
    fn homology_zero_algebra() {
        // objects only: HH dims = number of objects in degree 0
        let p = parse_presentation("object x\nobject y\n").unwrap();
        let ctx = MixedCtx::new(&p).unwrap();
        let h = ctx.truncated_homology(0, 0, 0, 3, false).unwrap();
        assert_eq!(h.dims[&0], 2);
    }

    #[test]
    fn window_too_small() {
        let ctx = kx_ctx();
        assert!(matches!(
            ctx.truncated_homology(1, 2, 1, 3, false),
            Err(Error::WindowTooSmall(_))
        ));
    }
}
