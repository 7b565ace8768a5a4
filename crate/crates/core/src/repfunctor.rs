//! The representation functor A ↦ A_V, the Van den Bergh functor on
//! semi-free bimodules, trace maps, Cartan forms and polyvectors, the
//! Cartan bracket and the necklace-to-Cartan Lie map.
//!
//! Everything lives inside one graded-commutative world: the CDGA A_V on
//! matrix-entry generators f_{ij}, extended by the Cartan 1-form letters
//! sD(f_{ij}) and (E_x)_{ij}, and by the polyvector letters dual to their
//! shifts. Monomials are kept in a sorted normal form with exact Koszul
//! signs; odd generators square to zero.

use crate::bimodule::{Resolution, SemiFreeBimodule};
use crate::cycompletion::{Completion, CompletionLetter};
use crate::dgcat::{ArrId, DGCatPresentation, NCPoly, ObjId, Word};
use crate::{qi, Error, Q, Result};
use num::{One, Signed, Zero};
use std::collections::BTreeMap;

// ---------------------------------------------------------------------------
// graded-commutative polynomial engine
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CdgaGen {
    pub name: String,
    pub degree: i64,
}

/// Monomial in sorted normal form: strictly increasing generator indices
/// for odd generators, non-decreasing with exponents for even ones.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CMono(pub Vec<(usize, u32)>);

impl CMono {
    pub fn one() -> Self {
        CMono(vec![])
    }

    pub fn degree(&self, gens: &[CdgaGen]) -> i64 {
        self.0.iter().map(|&(g, e)| gens[g].degree * e as i64).sum()
    }

    fn letters(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for &(g, e) in &self.0 {
            for _ in 0..e {
                out.push(g);
            }
        }
        out
    }
}

/// Normalizes a letter sequence into a sorted monomial, returning the
/// Koszul sign, or `None` when an odd generator repeats.
fn normalize_letters(gens: &[CdgaGen], letters: &[usize]) -> Option<(CMono, i64)> {
    let mut v: Vec<usize> = letters.to_vec();
    let mut sign = 1i64;
    // insertion sort counting graded transpositions
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            if gens[v[j - 1]].degree % 2 != 0 && gens[v[j]].degree % 2 != 0 {
                sign = -sign;
            }
            v.swap(j - 1, j);
            j -= 1;
        }
    }
    let mut packed: Vec<(usize, u32)> = Vec::new();
    for g in v {
        match packed.last_mut() {
            Some((pg, e)) if *pg == g => {
                if gens[g].degree % 2 != 0 {
                    return None; // odd square
                }
                *e += 1;
            }
            _ => packed.push((g, 1)),
        }
    }
    Some((CMono(packed), sign))
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CPoly {
    pub terms: BTreeMap<CMono, Q>,
}

impl CPoly {
    pub fn zero() -> Self {
        Default::default()
    }

    pub fn one() -> Self {
        CPoly { terms: [(CMono::one(), Q::one())].into_iter().collect() }
    }

    pub fn gen(g: usize) -> Self {
        CPoly { terms: [(CMono(vec![(g, 1)]), Q::one())].into_iter().collect() }
    }

    pub fn scalar(c: Q) -> Self {
        if c.is_zero() {
            CPoly::zero()
        } else {
            CPoly { terms: [(CMono::one(), c)].into_iter().collect() }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: CMono, c: Q) {
        if c.is_zero() {
            return;
        }
        let cur = self.terms.remove(&m).unwrap_or_else(Q::zero);
        let nv = cur + c;
        if !nv.is_zero() {
            self.terms.insert(m, nv);
        }
    }

    pub fn add(&self, o: &CPoly) -> CPoly {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &CPoly) -> CPoly {
        self.add(&o.scale(&-Q::one()))
    }

    pub fn scale(&self, c: &Q) -> CPoly {
        if c.is_zero() {
            return CPoly::zero();
        }
        CPoly { terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect() }
    }

    pub fn mul(&self, o: &CPoly, gens: &[CdgaGen]) -> CPoly {
        let mut out = CPoly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let mut letters = m1.letters();
                letters.extend(m2.letters());
                if let Some((m, s)) = normalize_letters(gens, &letters) {
                    out.add_term(m, c1 * c2 * qi(s));
                }
            }
        }
        out
    }

    pub fn degree(&self, gens: &[CdgaGen]) -> Option<i64> {
        let mut it = self.terms.keys().map(|m| m.degree(gens));
        let first = it.next()?;
        if it.all(|d| d == first) {
            Some(first)
        } else {
            None
        }
    }
}

/// A graded-commutative DG algebra presented by generators and a
/// differential assignment.
#[derive(Clone, Debug, Default)]
pub struct Cdga {
    pub gens: Vec<CdgaGen>,
    pub diff: Vec<CPoly>,
}

impl Cdga {
    pub fn add_gen(&mut self, name: String, degree: i64) -> usize {
        self.gens.push(CdgaGen { name, degree });
        self.diff.push(CPoly::zero());
        self.gens.len() - 1
    }

    /// Applies the degree-`deg` derivation with the given generator images.
    pub fn apply_derivation(&self, images: &dyn Fn(usize) -> CPoly, deg: i64, p: &CPoly) -> CPoly {
        let mut out = CPoly::zero();
        for (m, c) in &p.terms {
            let letters = m.letters();
            for i in 0..letters.len() {
                let img = images(letters[i]);
                if img.is_zero() {
                    continue;
                }
                let prefix_deg: i64 = letters[..i].iter().map(|&g| self.gens[g].degree).sum();
                let sign = if (deg * prefix_deg) % 2 == 0 { Q::one() } else { -Q::one() };
                // prefix · img · suffix
                let prefix = letters[..i].to_vec();
                let suffix = letters[i + 1..].to_vec();
                for (im, ic) in &img.terms {
                    let mut seq = prefix.clone();
                    seq.extend(im.letters());
                    seq.extend_from_slice(&suffix);
                    if let Some((mono, s)) = normalize_letters(&self.gens, &seq) {
                        out.add_term(mono, c * ic * &sign * qi(s));
                    }
                }
            }
        }
        out
    }

    pub fn d(&self, p: &CPoly) -> CPoly {
        self.apply_derivation(&|g| self.diff[g].clone(), -1, p)
    }

    pub fn validate_d_squared(&self) -> Result<()> {
        for g in 0..self.gens.len() {
            let dd = self.d(&self.diff[g]);
            if !dd.is_zero() {
                return Err(Error::D2Violation(format!("d²({}) != 0", self.gens[g].name)));
            }
        }
        Ok(())
    }

    pub fn format(&self, p: &CPoly) -> String {
        if p.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (m, c) in &p.terms {
            let mono = if m.0.is_empty() {
                "1".to_string()
            } else {
                m.0.iter()
                    .map(|&(g, e)| {
                        if e == 1 {
                            self.gens[g].name.clone()
                        } else {
                            format!("{}^{}", self.gens[g].name, e)
                        }
                    })
                    .collect::<Vec<_>>()
                    .join("*")
            };
            parts.push(format!("{}*{}", crate::dgcat::format_q(c), mono));
        }
        parts.join(" + ")
    }
}

// ---------------------------------------------------------------------------
// the representation world
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimVector(pub Vec<usize>);

impl DimVector {
    pub fn of(&self, x: ObjId) -> usize {
        self.0[x]
    }
}

/// Generator families of the representation CDGA and its Cartan extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenFamily {
    /// matrix entry f_{ij} of an arrow
    Entry,
    /// Cartan 1-form letter sD(f_{ij})
    SD,
    /// gl* letter (E_x)_{ij}
    Eps,
    /// polyvector letter dual to s^{m+1} D(f_{ij})
    XHat,
    /// polyvector letter s^{-m} θ^{(x)}_{ij}
    Theta,
}

/// The CDGA of a presentation together with its Cartan form and polyvector
/// letters, and index tables for every generator family.
pub struct RepWorld {
    pub base: DGCatPresentation,
    pub dims: DimVector,
    pub m: i64,
    pub cdga: Cdga,
    pub family: Vec<(GenFamily, usize, usize, usize)>, // (family, arrow-or-object, i, j)
    entry: BTreeMap<(ArrId, usize, usize), usize>,
    sd: BTreeMap<(ArrId, usize, usize), usize>,
    eps: BTreeMap<(ObjId, usize, usize), usize>,
    xhat: BTreeMap<(ArrId, usize, usize), usize>,
    theta: BTreeMap<(ObjId, usize, usize), usize>,
    pub res: Resolution,
}

impl RepWorld {
    /// Builds the world for a presentation, a dimension vector and a
    /// polyvector shift m.
    pub fn new(base: &DGCatPresentation, dims: DimVector, m: i64) -> Result<RepWorld> {
        if dims.0.len() != base.objects.len() {
            return Err(Error::BadInput("dimension vector must cover every object".into()));
        }
        if dims.0.iter().any(|&n| n == 0) {
            return Err(Error::IndexOutOfRange("dimension vector entries must be positive".into()));
        }
        let res = crate::bimodule::res(base)?;
        let mut cdga = Cdga::default();
        let mut family = Vec::new();
        let mut entry = BTreeMap::new();
        let mut sd = BTreeMap::new();
        let mut eps = BTreeMap::new();
        let mut xhat = BTreeMap::new();
        let mut theta = BTreeMap::new();
        for (a, arr) in base.arrows.iter().enumerate() {
            for i in 0..dims.of(arr.tgt) {
                for j in 0..dims.of(arr.src) {
                    let g = cdga.add_gen(format!("{}[{},{}]", arr.name, i + 1, j + 1), arr.degree);
                    entry.insert((a, i, j), g);
                    family.push((GenFamily::Entry, a, i, j));
                }
            }
        }
        for (a, arr) in base.arrows.iter().enumerate() {
            for i in 0..dims.of(arr.tgt) {
                for j in 0..dims.of(arr.src) {
                    let g =
                        cdga.add_gen(format!("sD({}[{},{}])", arr.name, i + 1, j + 1), arr.degree + 1);
                    sd.insert((a, i, j), g);
                    family.push((GenFamily::SD, a, i, j));
                }
            }
        }
        for (x, name) in base.objects.iter().enumerate() {
            for i in 0..dims.of(x) {
                for j in 0..dims.of(x) {
                    let g = cdga.add_gen(format!("E_{}[{},{}]", name, i + 1, j + 1), 0);
                    eps.insert((x, i, j), g);
                    family.push((GenFamily::Eps, x, i, j));
                }
            }
        }
        for (a, arr) in base.arrows.iter().enumerate() {
            for i in 0..dims.of(arr.tgt) {
                for j in 0..dims.of(arr.src) {
                    let g = cdga.add_gen(
                        format!("Xhat({}[{},{}])", arr.name, i + 1, j + 1),
                        -arr.degree - 1 - m,
                    );
                    xhat.insert((a, i, j), g);
                    family.push((GenFamily::XHat, a, i, j));
                }
            }
        }
        for (x, name) in base.objects.iter().enumerate() {
            for i in 0..dims.of(x) {
                for j in 0..dims.of(x) {
                    let g = cdga.add_gen(format!("th_{}[{},{}]", name, i + 1, j + 1), -m);
                    theta.insert((x, i, j), g);
                    family.push((GenFamily::Theta, x, i, j));
                }
            }
        }
        let mut world =
            RepWorld { base: base.clone(), dims, m, cdga, family, entry, sd, eps, xhat, theta, res };
        world.install_differentials()?;
        Ok(world)
    }

    pub fn entry_gen(&self, a: ArrId, i: usize, j: usize) -> usize {
        self.entry[&(a, i, j)]
    }

    pub fn sd_gen(&self, a: ArrId, i: usize, j: usize) -> usize {
        self.sd[&(a, i, j)]
    }

    pub fn eps_gen(&self, x: ObjId, i: usize, j: usize) -> usize {
        self.eps[&(x, i, j)]
    }

    pub fn xhat_gen(&self, a: ArrId, i: usize, j: usize) -> usize {
        self.xhat[&(a, i, j)]
    }

    pub fn theta_gen(&self, x: ObjId, i: usize, j: usize) -> usize {
        self.theta[&(x, i, j)]
    }

    /// Matrix entry of the universal representation: `(p)_{ij}` with row
    /// `i` at the target and column `j` at the source.
    pub fn universal_rep(&self, p: &NCPoly, i: usize, j: usize) -> Result<CPoly> {
        if i >= self.dims.of(p.tgt) || j >= self.dims.of(p.src) {
            return Err(Error::IndexOutOfRange(format!("entry ({},{})", i + 1, j + 1)));
        }
        let mut out = CPoly::zero();
        for (w, c) in &p.terms {
            out = out.add(&self.word_entry(w, i, j)?.scale(c));
        }
        Ok(out)
    }

    fn word_entry(&self, w: &Word, i: usize, j: usize) -> Result<CPoly> {
        if w.is_id() {
            return Ok(if i == j { CPoly::one() } else { CPoly::zero() });
        }
        // (a_1 ⋯ a_k)_{ij} = Σ (a_1)_{i l_1} (a_2)_{l_1 l_2} ⋯ (a_k)_{l_{k-1} j}
        let mut acc: Vec<(usize, CPoly)> = vec![(i, CPoly::one())];
        for (pos, &a) in w.letters.iter().enumerate() {
            let is_last = pos + 1 == w.letters.len();
            let mut next: Vec<(usize, CPoly)> = Vec::new();
            let cols = self.dims.of(self.base.arrows[a].src);
            for (row, poly) in &acc {
                let col_range: Vec<usize> = if is_last { vec![j] } else { (0..cols).collect() };
                for col in col_range {
                    let g = CPoly::gen(self.entry_gen(a, *row, col));
                    let prod = poly.mul(&g, &self.cdga.gens);
                    if !prod.is_zero() {
                        next.push((col, prod));
                    }
                }
            }
            // merge duplicates by column
            let mut merged: BTreeMap<usize, CPoly> = BTreeMap::new();
            for (col, poly) in next {
                let e = merged.entry(col).or_insert_with(CPoly::zero);
                *e = e.add(&poly);
            }
            acc = merged.into_iter().collect();
        }
        let mut out = CPoly::zero();
        for (col, poly) in acc {
            if col == j {
                out = out.add(&poly);
            }
        }
        Ok(out)
    }

    /// Entry of a Res(A) bimodule element: paths through the universal
    /// representation, the basis letter through its generator family.
    pub fn res_elt_entry(
        &self,
        e: &crate::bimodule::BimodElement,
        i: usize,
        j: usize,
    ) -> Result<CPoly> {
        let mut out = CPoly::zero();
        for ((l, b, r), c) in &e.terms {
            let zeta_src = self.res.module.basis[*b].src;
            let zeta_tgt = self.res.module.basis[*b].tgt;
            for a in 0..self.dims.of(zeta_tgt) {
                let lp = self.word_entry(l, i, a)?;
                if lp.is_zero() {
                    continue;
                }
                for bcol in 0..self.dims.of(zeta_src) {
                    let rp = self.word_entry(r, bcol, j)?;
                    if rp.is_zero() {
                        continue;
                    }
                    let letter = if let Some(arr) = self.res.sd.iter().position(|&s| s == *b) {
                        CPoly::gen(self.sd_gen(arr, a, bcol))
                    } else {
                        let x = self.res.e.iter().position(|&s| s == *b).unwrap();
                        CPoly::gen(self.eps_gen(x, a, bcol))
                    };
                    let prod = lp.mul(&letter, &self.cdga.gens).mul(&rp, &self.cdga.gens);
                    out = out.add(&prod.scale(c));
                }
            }
        }
        Ok(out)
    }

    fn install_differentials(&mut self) -> Result<()> {
        // entries: d(f_{ij}) = (df)_{ij}
        let mut assignments: Vec<(usize, CPoly)> = Vec::new();
        for (&(a, i, j), &g) in &self.entry.clone() {
            let da = self.base.diff_of(a);
            if !da.is_zero() {
                assignments.push((g, self.universal_rep(&da, i, j)?));
            }
        }
        // sD letters: d((sDf)_{ij}) = (d_{Res} sDf)_{ij}
        for (&(a, i, j), &g) in &self.sd.clone() {
            let d = self.res.module.diff[self.res.sd[a]].clone();
            if !d.is_zero() {
                assignments.push((g, self.res_elt_entry(&d, i, j)?));
            }
        }
        // eps letters are closed
        for (g, p) in assignments {
            self.cdga.diff[g] = p;
        }
        // polyvector letters: the ψ†-transport of the differentials of
        // the shifted dual letters s^{-m}(sDf)^∨ and s^{-m}E_x^∨, so that
        // Ψ† commutes with d on generators by construction
        let dual_mod = crate::bimodule::dual(&self.base, &self.res.module, |l| format!("({l})^"));
        let shifted = dual_mod.shift(&self.base, -self.m, |l| format!("s({l})"));
        let mut dual_diff: BTreeMap<usize, CPoly> = BTreeMap::new();
        for b in 0..shifted.rank() {
            let d = shifted.diff[b].clone();
            // the generator ψ†((Z_b)_{ji}) for each (i,j)
            let dual_gen = |world: &RepWorld, bb: usize, i: usize, j: usize| -> usize {
                if let Some(arr) = world.res.sd.iter().position(|&s| s == bb) {
                    world.xhat_gen(arr, i, j)
                } else {
                    let x = world.res.e.iter().position(|&s| s == bb).unwrap();
                    world.theta_gen(x, i, j)
                }
            };
            let (src_obj, tgt_obj) = {
                let bg = &shifted.basis[b];
                (bg.src, bg.tgt)
            };
            for i in 0..self.dims.of(src_obj) {
                for j in 0..self.dims.of(tgt_obj) {
                    // Xhat-letter = ψ†((Z_b)_{ji}); its differential is the
                    // entry (j,i) of d(Z_b), transported letterwise
                    let g = dual_gen(self, b, i, j);
                    let mut acc = CPoly::zero();
                    for ((l, zb, r), c) in &d.terms {
                        let z_tgt = shifted.basis[*zb].tgt;
                        let z_src = shifted.basis[*zb].src;
                        for k in 0..self.dims.of(z_tgt) {
                            let lp = self.word_entry(l, j, k)?;
                            if lp.is_zero() {
                                continue;
                            }
                            for lcol in 0..self.dims.of(z_src) {
                                let rp = self.word_entry(r, lcol, i)?;
                                if rp.is_zero() {
                                    continue;
                                }
                                let letter = CPoly::gen(dual_gen(self, *zb, lcol, k));
                                let prod =
                                    lp.mul(&letter, &self.cdga.gens).mul(&rp, &self.cdga.gens);
                                acc = acc.add(&prod.scale(c));
                            }
                        }
                    }
                    if !acc.is_zero() {
                        dual_diff.insert(g, acc);
                    }
                }
            }
        }
        for (g, p) in dual_diff {
            self.cdga.diff[g] = p;
        }
        Ok(())
    }

    /// The Cartan derivation: sD̃(f_{ij}) = sD(f_{ij}), zero on every other
    /// letter family.
    pub fn cartan_sd(&self, p: &CPoly) -> CPoly {
        self.cdga.apply_derivation(
            &|g| {
                let (fam, a, i, j) = self.family[g];
                match fam {
                    GenFamily::Entry => CPoly::gen(self.sd_gen(a, i, j)),
                    _ => CPoly::zero(),
                }
            },
            1,
            p,
        )
    }

    /// The infinitesimal gl(V)-action by the matrix unit e^{(z)}_{ab}:
    /// conjugation on every entry family, contragredient on the duals.
    pub fn gl_action(&self, z: ObjId, a: usize, b: usize, p: &CPoly) -> CPoly {
        self.cdga.apply_derivation(
            &|g| {
                let (fam, idx, i, j) = self.family[g];
                let (src, tgt) = match fam {
                    GenFamily::Entry | GenFamily::SD | GenFamily::XHat => {
                        let arr = &self.base.arrows[idx];
                        (arr.src, arr.tgt)
                    }
                    GenFamily::Eps | GenFamily::Theta => (idx, idx),
                };
                let mut out = CPoly::zero();
                match fam {
                    GenFamily::Entry | GenFamily::SD | GenFamily::Eps => {
                        let table: &dyn Fn(usize, usize, usize) -> usize = match fam {
                            GenFamily::Entry => &|aa, ii, jj| self.entry_gen(aa, ii, jj),
                            GenFamily::SD => &|aa, ii, jj| self.sd_gen(aa, ii, jj),
                            _ => &|xx, ii, jj| self.eps_gen(xx, ii, jj),
                        };
                        if tgt == z && i == a {
                            out = out.add(&CPoly::gen(table(idx, b, j)));
                        }
                        if src == z && j == b {
                            out = out.sub(&CPoly::gen(table(idx, i, a)));
                        }
                    }
                    GenFamily::XHat | GenFamily::Theta => {
                        // δ(ξ̂_{ij}) = -Σ coefficients of ξ_{ij} in δ(ξ_{kl})
                        let table: &dyn Fn(usize, usize, usize) -> usize = match fam {
                            GenFamily::XHat => &|aa, ii, jj| self.xhat_gen(aa, ii, jj),
                            _ => &|xx, ii, jj| self.theta_gen(xx, ii, jj),
                        };
                        if tgt == z && i == b {
                            out = out.sub(&CPoly::gen(table(idx, a, j)));
                        }
                        if src == z && j == a {
                            out = out.add(&CPoly::gen(table(idx, i, b)));
                        }
                    }
                }
                out
            },
            0,
            p,
        )
    }

    /// gl(V)-invariance: annihilated by every matrix unit.
    pub fn is_gl_invariant(&self, p: &CPoly) -> bool {
        for z in 0..self.base.objects.len() {
            for a in 0..self.dims.of(z) {
                for b in 0..self.dims.of(z) {
                    if !self.gl_action(z, a, b, p).is_zero() {
                        return false;
                    }
                }
            }
        }
        true
    }
}

// ---------------------------------------------------------------------------
// Van den Bergh functor
// ---------------------------------------------------------------------------

/// A GL_V-equivariant module over the representation CDGA: basis
/// (ξ_b)_{ij} with CPoly coefficients; everything indexed by the source
/// bimodule's basis.
pub struct EqModule<'w> {
    pub world: &'w RepWorld,
    pub module: SemiFreeBimodule,
    /// basis (b, i, j) in this fixed order
    pub basis: Vec<(usize, usize, usize)>,
    index: BTreeMap<(usize, usize, usize), usize>,
    /// differential of each basis element
    pub diff: Vec<ModElement>,
}

/// Σ coefficient · (basis index) with coefficients on the left.
pub type ModElement = BTreeMap<usize, CPoly>;

pub fn mod_add(a: &ModElement, b: &ModElement) -> ModElement {
    let mut out = a.clone();
    for (k, c) in b {
        let e = out.entry(*k).or_insert_with(CPoly::zero);
        *e = e.add(c);
    }
    out.retain(|_, c| !c.is_zero());
    out
}

pub fn mod_scale(a: &ModElement, c: &CPoly, gens: &[CdgaGen]) -> ModElement {
    let mut out = ModElement::new();
    for (k, v) in a {
        let p = c.mul(v, gens);
        if !p.is_zero() {
            out.insert(*k, p);
        }
    }
    out
}

impl<'w> EqModule<'w> {
    pub fn basis_id(&self, b: usize, i: usize, j: usize) -> usize {
        self.index[&(b, i, j)]
    }

    /// Degree of basis element (b,i,j): the bimodule letter's degree.
    pub fn basis_degree(&self, k: usize) -> i64 {
        let (b, _, _) = self.basis[k];
        self.module.basis[b].degree
    }

    pub fn d(&self, e: &ModElement) -> ModElement {
        let gens = &self.world.cdga.gens;
        let mut out = ModElement::new();
        for (k, c) in e {
            // d(c·ξ) = dc·ξ + (-1)^{|c|} c·dξ
            let dc = self.world.cdga.d(c);
            if !dc.is_zero() {
                out = mod_add(&out, &{
                    let mut m = ModElement::new();
                    m.insert(*k, dc);
                    m
                });
            }
            let sign = if c.degree(gens).unwrap_or(0) % 2 == 0 { Q::one() } else { -Q::one() };
            let scaled = mod_scale(&self.diff[*k], &c.scale(&sign), gens);
            out = mod_add(&out, &scaled);
        }
        out
    }
}

/// Applies the Van den Bergh functor to a semi-free bimodule: basis
/// (ξ)_{ij}, differential by matrix-entry expansion with coefficients
/// pulled left of the basis letter.
pub fn vdb<'w>(world: &'w RepWorld, module: &SemiFreeBimodule) -> Result<EqModule<'w>> {
    let mut basis = Vec::new();
    let mut index = BTreeMap::new();
    for (b, gen) in module.basis.iter().enumerate() {
        for i in 0..world.dims.of(gen.tgt) {
            for j in 0..world.dims.of(gen.src) {
                index.insert((b, i, j), basis.len());
                basis.push((b, i, j));
            }
        }
    }
    let mut diff = Vec::new();
    for &(b, i, j) in &basis {
        let d = &module.diff[b];
        let mut out = ModElement::new();
        for ((l, zb, r), c) in &d.terms {
            let ztgt = module.basis[*zb].tgt;
            let zsrc = module.basis[*zb].src;
            let zdeg = module.basis[*zb].degree;
            for a in 0..world.dims.of(ztgt) {
                let lp = world.word_entry(l, i, a)?;
                if lp.is_zero() {
                    continue;
                }
                for bb in 0..world.dims.of(zsrc) {
                    let rp = world.word_entry(r, bb, j)?;
                    if rp.is_zero() {
                        continue;
                    }
                    // (l·ζ·r)_{ij} = Σ l_{ia} ζ_{ab} r_{bj}; pull r left of ζ
                    let rdeg = rp.degree(&world.cdga.gens).unwrap_or(0);
                    let sign = if (rdeg * zdeg) % 2 == 0 { Q::one() } else { -Q::one() };
                    let coeff = lp.mul(&rp, &world.cdga.gens).scale(&(c * sign));
                    let k = index[&(*zb, a, bb)];
                    let e = out.entry(k).or_insert_with(CPoly::zero);
                    *e = e.add(&coeff);
                }
            }
        }
        out.retain(|_, c| !c.is_zero());
        diff.push(out);
    }
    Ok(EqModule { world, module: module.clone(), basis, index, diff })
}

// ---------------------------------------------------------------------------
// trace maps
// ---------------------------------------------------------------------------

/// The multi-trace of a word over T_A(Res(A)): every base letter becomes a
/// matrix entry, every module letter its Cartan letter, multiplied around
/// the cycle with matched indices. Descends to Y- and Υ-classes.
pub fn trace_psi(world: &RepWorld, mctx: &crate::mixed::MixedCtx, w: &Word) -> Result<CPoly> {
    let pres = &mctx.tc.pres;
    if pres.word_src(w) != pres.word_tgt(w) {
        return Err(Error::NotEndomorphism(pres.format_word(w)));
    }
    let base_count = world.base.arrows.len();
    if w.letters.is_empty() {
        // class of an identity: trace of the identity matrix
        return Ok(CPoly::scalar(qi(world.dims.of(w.base) as i64)));
    }
    let gens = &world.cdga.gens;
    let start_obj = pres.word_src(w);
    let mut out = CPoly::zero();
    // Σ over index loops: walk letters left to right, rows before columns
    fn letter_gen(world: &RepWorld, base_count: usize, a: ArrId, i: usize, j: usize) -> usize {
        if a < base_count {
            world.entry_gen(a, i, j)
        } else {
            let b = a - base_count;
            if let Some(arr) = world.res.sd.iter().position(|&s| s == b) {
                world.sd_gen(arr, i, j)
            } else {
                let x = world.res.e.iter().position(|&s| s == b).unwrap();
                world.theta_or_eps(x, i, j)
            }
        }
    }
    let n0 = world.dims.of(start_obj);
    for i0 in 0..n0 {
        // acc: (current column index, polynomial)
        let mut acc: Vec<(usize, CPoly)> = vec![(i0, CPoly::one())];
        for (pos, &a) in w.letters.iter().enumerate() {
            let is_last = pos + 1 == w.letters.len();
            let src = pres.arrows[a].src;
            let cols = world.dims.of(src);
            let mut next: BTreeMap<usize, CPoly> = BTreeMap::new();
            for (row, poly) in &acc {
                let col_range: Vec<usize> = if is_last { vec![i0] } else { (0..cols).collect() };
                for col in col_range {
                    let g = CPoly::gen(letter_gen(world, base_count, a, *row, col));
                    let prod = poly.mul(&g, gens);
                    if prod.is_zero() {
                        continue;
                    }
                    let e = next.entry(col).or_insert_with(CPoly::zero);
                    *e = e.add(&prod);
                }
            }
            acc = next.into_iter().collect();
        }
        for (_, poly) in acc {
            out = out.add(&poly);
        }
    }
    Ok(out)
}

impl RepWorld {
    fn theta_or_eps(&self, x: ObjId, i: usize, j: usize) -> usize {
        self.eps_gen(x, i, j)
    }
}

/// The multi-trace Lie map on cyclic words over the completion alphabet:
/// original letters become matrix entries, dual letters their index-
/// transposed polyvector letters.
pub fn psi_dagger_necklace(world: &RepWorld, comp: &Completion, w: &Word) -> Result<CPoly> {
    let pres = &comp.pi;
    if pres.word_src(w) != pres.word_tgt(w) {
        return Err(Error::NotEndomorphism(pres.format_word(w)));
    }
    if w.letters.is_empty() {
        return Ok(CPoly::scalar(qi(world.dims.of(w.base) as i64)));
    }
    let gens = &world.cdga.gens;
    let start_obj = pres.word_src(w);
    let mut out = CPoly::zero();
    let letter_gen = |l: ArrId, i: usize, j: usize| -> usize {
        match comp.letter[l] {
            CompletionLetter::Original(a) => world.entry_gen(a, i, j),
            // ψ†((ξ^∨)_{ij}) = (ξ_{ji})^∨: transposed indices
            CompletionLetter::XDual(a) => world.xhat_gen(a, j, i),
            CompletionLetter::CDual(x) => world.theta_gen(x, j, i),
        }
    };
    let n0 = world.dims.of(start_obj);
    for i0 in 0..n0 {
        let mut acc: Vec<(usize, CPoly)> = vec![(i0, CPoly::one())];
        for (pos, &l) in w.letters.iter().enumerate() {
            let is_last = pos + 1 == w.letters.len();
            let src = pres.arrows[l].src;
            let cols = world.dims.of(src);
            let mut next: BTreeMap<usize, CPoly> = BTreeMap::new();
            for (row, poly) in &acc {
                let col_range: Vec<usize> = if is_last { vec![i0] } else { (0..cols).collect() };
                for col in col_range {
                    let g = CPoly::gen(letter_gen(l, *row, col));
                    let prod = poly.mul(&g, gens);
                    if prod.is_zero() {
                        continue;
                    }
                    let e = next.entry(col).or_insert_with(CPoly::zero);
                    *e = e.add(&prod);
                }
            }
            acc = next.into_iter().collect();
        }
        for (_, poly) in acc {
            out = out.add(&poly);
        }
    }
    Ok(out)
}

/// ψ† on a single dual-module basis entry, as position data: the dual of
/// (ξ)_{ji}.
pub fn psi_dagger_entry(world: &RepWorld, comp: &Completion, l: ArrId, i: usize, j: usize) -> Result<usize> {
    match comp.letter[l] {
        CompletionLetter::XDual(a) => Ok(world.xhat_gen(a, j, i)),
        CompletionLetter::CDual(x) => Ok(world.theta_gen(x, j, i)),
        CompletionLetter::Original(_) => {
            Err(Error::BadInput("ψ† entry expects a dual letter".into()))
        }
    }
}

// ---------------------------------------------------------------------------
// the Cartan bracket
// ---------------------------------------------------------------------------

/// The shifted Poisson bracket on the Cartan polyvector algebra, given on
/// generators by `{f_α, Xhat[f_α]} = 1` and zero elsewhere, extended with
/// the same conventions the necklace bracket satisfies: antisymmetry
/// `{a,b} = (-1)^{m+|a||b|} {b,a}`, right Leibniz
/// `{a,bc} = {a,b}c + (-1)^{(|a|+m+1)|b|} b{a,c}`, and the left Leibniz
/// rule these two force.
pub fn cartan_bracket(world: &RepWorld, a: &CPoly, b: &CPoly) -> CPoly {
    let gens = &world.cdga.gens;
    let m = world.m;
    let mut out = CPoly::zero();
    for (ma, ca) in &a.terms {
        for (mb, cb) in &b.terms {
            let la = ma.letters();
            let lb = mb.letters();
            let deg_b_total: i64 = lb.iter().map(|&g| gens[g].degree).sum();
            for (pa, &ga) in la.iter().enumerate() {
                for (pb, &gb) in lb.iter().enumerate() {
                    let pair = generator_pair(world, ga, gb);
                    if pair.is_zero() {
                        continue;
                    }
                    let da = gens[ga].degree;
                    let prefix_a: i64 = la[..pa].iter().map(|&g| gens[g].degree).sum();
                    let suffix_a: i64 = la[pa + 1..].iter().map(|&g| gens[g].degree).sum();
                    let prefix_b: i64 = lb[..pb].iter().map(|&g| gens[g].degree).sum();
                    let exp = (m + 1) * prefix_a
                        + suffix_a * deg_b_total
                        + (da + m + 1) * prefix_b;
                    let mut seq: Vec<usize> = la[..pa].to_vec();
                    seq.extend(lb.iter().enumerate().filter(|(k, _)| *k != pb).map(|(_, &g)| g));
                    seq.extend_from_slice(&la[pa + 1..]);
                    if let Some((mono, s)) = normalize_letters(gens, &seq) {
                        let mut sign = s;
                        if exp.rem_euclid(2) == 1 {
                            sign = -sign;
                        }
                        out.add_term(mono, ca * cb * &pair * qi(sign));
                    }
                }
            }
        }
    }
    out
}

/// `{f_{ij}, Xhat[f_{ij}]} = (-1)^{(|f|+m)(|f|+1)}`, the value of the
/// necklace bracket on the matching single-letter pair, with its
/// `(-1)^{m+|f||X|}`-antisymmetric mirror; every other generator pair
/// brackets to 0. At m = 0 this is the displayed `δ_{αβ}` table.
fn generator_pair(world: &RepWorld, ga: usize, gb: usize) -> Q {
    let (fa, ia, ii, ij) = world.family[ga];
    let (fb, ib, bi, bj) = world.family[gb];
    let base = |df: i64, m: i64| -> Q {
        if ((df + m) * (df + 1)).rem_euclid(2) == 0 {
            Q::one()
        } else {
            -Q::one()
        }
    };
    match (fa, fb) {
        (GenFamily::Entry, GenFamily::XHat) if ia == ib && ii == bi && ij == bj => {
            base(world.cdga.gens[ga].degree, world.m)
        }
        (GenFamily::XHat, GenFamily::Entry) if ia == ib && ii == bi && ij == bj => {
            let df = world.cdga.gens[gb].degree;
            let dx = world.cdga.gens[ga].degree;
            let exp = world.m + df * dx;
            let v = base(df, world.m);
            if exp.rem_euclid(2) == 0 {
                v
            } else {
                -v
            }
        }
        _ => Q::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cycompletion::cy_completion;
    use crate::dgcat::{intro_quiver, parse_presentation};
    use crate::mixed::{sample_endo_word, MixedCtx};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kxyt() -> DGCatPresentation {
        parse_presentation(
            "object pt\narrow x : pt -> pt deg 0\narrow y : pt -> pt deg 0\narrow t : pt -> pt deg 1\ndiff t = x*y - y*x\n",
        )
        .unwrap()
    }

    fn kx() -> DGCatPresentation {
        parse_presentation("object pt\narrow x : pt -> pt deg 0\n").unwrap()
    }

    #[test]
    fn cdga_engine_basics() {
        let mut c = Cdga::default();
        let a = c.add_gen("a".into(), 1);
        let b = c.add_gen("b".into(), 1);
        let e = c.add_gen("e".into(), 0);
        // odd squares vanish
        let pa = CPoly::gen(a);
        assert!(pa.mul(&pa, &c.gens).is_zero());
        // Koszul: b·a = -a·b
        let ab = CPoly::gen(a).mul(&CPoly::gen(b), &c.gens);
        let ba = CPoly::gen(b).mul(&CPoly::gen(a), &c.gens);
        assert_eq!(ab, ba.scale(&qi(-1)));
        // even generators commute
        let ea = CPoly::gen(e).mul(&pa, &c.gens);
        let ae = pa.mul(&CPoly::gen(e), &c.gens);
        assert_eq!(ea, ae);
    }

    #[test]
    fn rep_cdga_kxyt_differential() {
        // d(t_{ik}) = Σ_j (x_{ij} y_{jk} - y_{ij} x_{jk}) for n = 2
        let base = kxyt();
        let world = RepWorld::new(&base, DimVector(vec![2]), 0).unwrap();
        let t = base.arrow_id("t").unwrap();
        let x = base.arrow_id("x").unwrap();
        let y = base.arrow_id("y").unwrap();
        for i in 0..2 {
            for k in 0..2 {
                let d = world.cdga.diff[world.entry_gen(t, i, k)].clone();
                let mut expect = CPoly::zero();
                for j in 0..2 {
                    let xy = CPoly::gen(world.entry_gen(x, i, j))
                        .mul(&CPoly::gen(world.entry_gen(y, j, k)), &world.cdga.gens);
                    let yx = CPoly::gen(world.entry_gen(y, i, j))
                        .mul(&CPoly::gen(world.entry_gen(x, j, k)), &world.cdga.gens);
                    expect = expect.add(&xy.sub(&yx));
                }
                assert_eq!(d, expect, "d(t[{},{}])", i + 1, k + 1);
            }
        }
        world.cdga.validate_d_squared().unwrap();
    }

    #[test]
    fn rep_cdga_intro_d_squared() {
        let base = intro_quiver();
        let world = RepWorld::new(&base, DimVector(vec![2, 1]), 0).unwrap();
        world.cdga.validate_d_squared().unwrap();
    }

    #[test]
    fn universal_rep_functorial() {
        let base = kxyt();
        let world = RepWorld::new(&base, DimVector(vec![2]), 0).unwrap();
        let x = NCPoly::generator(base.arrow_id("x").unwrap(), &base);
        let y = NCPoly::generator(base.arrow_id("y").unwrap(), &base);
        let xy = crate::dgcat::compose(&base, &x, &y).unwrap();
        // (x·y)_{ki} = Σ_j x_{kj} y_{ji}
        for k in 0..2 {
            for i in 0..2 {
                let lhs = world.universal_rep(&xy, k, i).unwrap();
                let mut rhs = CPoly::zero();
                for j in 0..2 {
                    rhs = rhs.add(
                        &world
                            .universal_rep(&x, k, j)
                            .unwrap()
                            .mul(&world.universal_rep(&y, j, i).unwrap(), &world.cdga.gens),
                    );
                }
                assert_eq!(lhs, rhs);
            }
        }
        // id entries are Kronecker
        let idp = NCPoly::identity(0);
        assert_eq!(world.universal_rep(&idp, 0, 0).unwrap(), CPoly::one());
        assert!(world.universal_rep(&idp, 0, 1).unwrap().is_zero());
        // d commutes with the universal representation
        let t = NCPoly::generator(base.arrow_id("t").unwrap(), &base);
        for i in 0..2 {
            for j in 0..2 {
                let lhs = world.cdga.d(&world.universal_rep(&t, i, j).unwrap());
                let rhs = world.universal_rep(&base.differential(&t).unwrap(), i, j).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
        // out-of-range indices are rejected
        assert!(matches!(
            world.universal_rep(&x, 2, 0),
            Err(Error::IndexOutOfRange(_))
        ));
    }

    #[test]
    fn vdb_res_kx_alpha_formula() {
        // d((sDx)_{ij}) = Σ_l x_{il}(E)_{lj} - (E)_{il}x_{lj}
        let base = kx();
        let world = RepWorld::new(&base, DimVector(vec![2]), 0).unwrap();
        let resm = world.res.module.clone();
        let eq = vdb(&world, &resm).unwrap();
        let x = base.arrow_id("x").unwrap();
        let sdx = world.res.sd[x];
        let e_letter = world.res.e[0];
        for i in 0..2 {
            for j in 0..2 {
                let d = &eq.diff[eq.basis_id(sdx, i, j)];
                let mut expect: ModElement = ModElement::new();
                for l in 0..2 {
                    let k1 = eq.basis_id(e_letter, l, j);
                    let c1 = CPoly::gen(world.entry_gen(x, i, l));
                    let e1 = expect.entry(k1).or_insert_with(CPoly::zero);
                    *e1 = e1.add(&c1);
                    let k2 = eq.basis_id(e_letter, i, l);
                    let c2 = CPoly::gen(world.entry_gen(x, l, j));
                    let e2 = expect.entry(k2).or_insert_with(CPoly::zero);
                    *e2 = e2.sub(&c2);
                }
                expect.retain(|_, c| !c.is_zero());
                assert_eq!(*d, expect, "α_V formula at ({},{})", i + 1, j + 1);
            }
        }
    }

    #[test]
    fn vdb_d_squared_and_equivariance() {
        for (base, dims) in [(kx(), vec![2]), (intro_quiver(), vec![2, 1])] {
            let world = RepWorld::new(&base, DimVector(dims), 0).unwrap();
            let resm = world.res.module.clone();
            let eq = vdb(&world, &resm).unwrap();
            // d² = 0 on every basis element
            for k in 0..eq.basis.len() {
                let mut e: ModElement = ModElement::new();
                e.insert(k, CPoly::one());
                let dd = eq.d(&eq.d(&e));
                assert!(dd.is_empty(), "d² != 0 on vdb basis {k}");
            }
        }
    }

    #[test]
    fn cartan_world_d_squared() {
        for m in [-1i64, 0, 1] {
            for (base, dims) in [(kx(), vec![2]), (intro_quiver(), vec![2, 1])] {
                let world = RepWorld::new(&base, DimVector(dims), m).unwrap();
                world.cdga.validate_d_squared().unwrap();
            }
        }
    }

    #[test]
    fn trace_of_loop_is_trace() {
        // Ψ(class of x) with n = 2 is x_{11} + x_{22}
        let base = kx();
        let world = RepWorld::new(&base, DimVector(vec![2]), 0).unwrap();
        let mctx = MixedCtx::new(&base).unwrap();
        let x_big = mctx.tc.pres.arrow_id("x").unwrap();
        let w = Word::single(x_big, &mctx.tc.pres);
        let tr = trace_psi(&world, &mctx, &w).unwrap();
        let expect = CPoly::gen(world.entry_gen(0, 0, 0)).add(&CPoly::gen(world.entry_gen(0, 1, 1)));
        assert_eq!(tr, expect);
    }

    #[test]
    fn trace_well_defined_on_classes() {
        // the trace of a word equals the trace of any rotation with the
        // Koszul sign, so it descends to Υ-classes
        let base = intro_quiver();
        let world = RepWorld::new(&base, DimVector(vec![2, 1]), 0).unwrap();
        let mctx = MixedCtx::new(&base).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut tested = 0;
        while tested < 25 {
            let Some(w) = sample_endo_word(&mctx.tc, &mut rng, 5, 3) else { continue };
            tested += 1;
            let t0 = trace_psi(&world, &mctx, &w).unwrap();
            let (rw, s) = crate::bimodule::rotate_once(&mctx.tc.pres, &w);
            let t1 = trace_psi(&world, &mctx, &rw).unwrap();
            assert_eq!(t0, t1.scale(&qi(s)), "trace not rotation-invariant");
        }
    }

    #[test]
    fn psi_images_gl_invariant() {
        let base = intro_quiver();
        let world = RepWorld::new(&base, DimVector(vec![2, 1]), 0).unwrap();
        let mctx = MixedCtx::new(&base).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut tested = 0;
        while tested < 15 {
            let Some(w) = sample_endo_word(&mctx.tc, &mut rng, 4, 2) else { continue };
            tested += 1;
            let tr = trace_psi(&world, &mctx, &w).unwrap();
            assert!(world.is_gl_invariant(&tr), "Ψ-image not gl-invariant");
        }
    }

    #[test]
    fn gl_action_commutes_with_d() {
        let base = intro_quiver();
        let world = RepWorld::new(&base, DimVector(vec![2, 1]), 0).unwrap();
        for g in 0..world.cdga.gens.len() {
            let p = CPoly::gen(g);
            for z in 0..2 {
                for a in 0..world.dims.of(z) {
                    for b in 0..world.dims.of(z) {
                        let lhs = world.cdga.d(&world.gl_action(z, a, b, &p));
                        let rhs = world.gl_action(z, a, b, &world.cdga.d(&p));
                        assert_eq!(lhs, rhs, "gl-action does not commute with d");
                    }
                }
            }
        }
    }

    #[test]
    fn mixed_compatibility_psi_b() {
        // Ψ∘B = sD̃∘Ψ on random classes
        for (base, dims) in [(kx(), vec![2]), (intro_quiver(), vec![2, 2])] {
            let world = RepWorld::new(&base, DimVector(dims), 0).unwrap();
            let mctx = MixedCtx::new(&base).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(100);
            let mut tested = 0;
            while tested < 30 {
                let Some(w) = sample_endo_word(&mctx.tc, &mut rng, 5, 2) else { continue };
                let cls = crate::bimodule::CycElement::from_word(&mctx.tc, &w, qi(1)).unwrap();
                if cls.is_zero() {
                    continue;
                }
                tested += 1;
                let mut lhs = CPoly::zero();
                for (bw, c) in &mctx.b_map(&cls).unwrap().terms {
                    lhs = lhs.add(&trace_psi(&world, &mctx, bw).unwrap().scale(c));
                }
                let mut base_tr = CPoly::zero();
                for (cw, c) in &cls.terms {
                    base_tr = base_tr.add(&trace_psi(&world, &mctx, cw).unwrap().scale(c));
                }
                let rhs = world.cartan_sd(&base_tr);
                assert_eq!(lhs, rhs, "Ψ∘B != sD̃∘Ψ on {}", mctx.tc.pres.format_word(&w));
            }
        }
    }

    #[test]
    fn cartan_sd_conditions() {
        let base = kx();
        let world = RepWorld::new(&base, DimVector(vec![2]), 0).unwrap();
        // sD̃(f_{ij}) = sD(f_{ij})
        let f = CPoly::gen(world.entry_gen(0, 0, 1));
        assert_eq!(world.cartan_sd(&f), CPoly::gen(world.sd_gen(0, 0, 1)));
        // sD̃ kills the letter families
        assert!(world.cartan_sd(&CPoly::gen(world.sd_gen(0, 0, 0))).is_zero());
        assert!(world.cartan_sd(&CPoly::gen(world.eps_gen(0, 0, 0))).is_zero());
        assert!(world.cartan_sd(&CPoly::gen(world.theta_gen(0, 0, 0))).is_zero());
        // (sD̃)² = 0 on products
        let p = f.mul(&CPoly::gen(world.entry_gen(0, 1, 0)), &world.cdga.gens);
        assert!(world.cartan_sd(&world.cartan_sd(&p)).is_zero());
    }

    #[test]
    fn sd_tilde_d_commutator_vanishes_on_invariants() {
        // [sD̃, d] = 0 on gl-invariant inputs (Ψ-images)
        let base = intro_quiver();
        let world = RepWorld::new(&base, DimVector(vec![2, 1]), 0).unwrap();
        let mctx = MixedCtx::new(&base).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut tested = 0;
        while tested < 20 {
            let Some(w) = sample_endo_word(&mctx.tc, &mut rng, 4, 2) else { continue };
            tested += 1;
            let tr = trace_psi(&world, &mctx, &w).unwrap();
            let lhs = world.cartan_sd(&world.cdga.d(&tr));
            let rhs = world.cdga.d(&world.cartan_sd(&tr));
            assert_eq!(lhs, rhs.scale(&qi(-1)), "[sD̃,d] != 0 on a Ψ-image");
        }
    }

    #[test]
    fn cartan_bracket_generator_table() {
        let base = kx();
        for m in [-1i64, 0, 1] {
            let world = RepWorld::new(&base, DimVector(vec![2]), m).unwrap();
            let x11 = CPoly::gen(world.entry_gen(0, 0, 0));
            let x22 = CPoly::gen(world.entry_gen(0, 1, 1));
            let xhat11 = CPoly::gen(world.xhat_gen(0, 0, 0));
            let th = CPoly::gen(world.theta_gen(0, 0, 1));
            let want = if (m * 1).rem_euclid(2) == 0 { CPoly::one() } else { CPoly::one().scale(&qi(-1)) };
            assert_eq!(cartan_bracket(&world, &x11, &xhat11), want);
            assert!(cartan_bracket(&world, &x11, &x22).is_zero());
            assert!(cartan_bracket(&world, &x11, &th).is_zero());
            assert!(cartan_bracket(&world, &xhat11, &th).is_zero());
        }
    }

    #[test]
    fn psi_dagger_necklace_single_pair() {
        // ξ = class(x·X_x), n = 1 → x₁₁·Xhat(x₁₁)
        let base = kx();
        for m in [-1i64, 0, 1] {
            let world = RepWorld::new(&base, DimVector(vec![1]), m).unwrap();
            let comp = cy_completion(&base, 1 - m).unwrap();
            let xa = comp.pi.arrow_id("x").unwrap();
            let xd = comp.x_of[0];
            let w = Word { letters: vec![xa, xd], base: comp.pi.arrows[xd].src };
            let tr = psi_dagger_necklace(&world, &comp, &w).unwrap();
            let expect = CPoly::gen(world.entry_gen(0, 0, 0))
                .mul(&CPoly::gen(world.xhat_gen(0, 0, 0)), &world.cdga.gens);
            assert_eq!(tr, expect);
        }
    }

    #[test]
    fn psi_dagger_images_gl_invariant() {
        let base = kx();
        let world = RepWorld::new(&base, DimVector(vec![2]), 0).unwrap();
        let comp = cy_completion(&base, 1).unwrap();
        let nctx_tc = &comp.tc;
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut tested = 0;
        while tested < 15 {
            let Some(w) = sample_endo_word(nctx_tc, &mut rng, 4, 2) else { continue };
            tested += 1;
            let tr = psi_dagger_necklace(&world, &comp, &w).unwrap();
            assert!(world.is_gl_invariant(&tr), "Ψ†-image not gl-invariant");
        }
    }


    #[test]
    fn psi_dagger_lie_map() {
        // {Ψ†ξ, Ψ†η} = Ψ†({ξ,η}) on random pairs
        let base = kx();
        for m in [0i64, -1] {
            for n in [1usize, 2] {
                let world = RepWorld::new(&base, DimVector(vec![n]), m).unwrap();
                let nctx = crate::necklace::NecklaceCtx::new(&base, m).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + (m + 2) as u64 + n as u64);
                let mut tested = 0;
                while tested < 12 {
                    let Some(wa) = sample_endo_word(&nctx.comp.tc, &mut rng, 4, 2) else { continue };
                    let Some(wb) = sample_endo_word(&nctx.comp.tc, &mut rng, 4, 2) else { continue };
                    let a = nctx.from_word(&wa, qi(1)).unwrap();
                    let b = nctx.from_word(&wb, qi(1)).unwrap();
                    if a.is_zero() || b.is_zero() {
                        continue;
                    }
                    tested += 1;
                    let tr = |e: &crate::necklace::NecklaceElement| -> CPoly {
                        let mut out = CPoly::zero();
                        for (w, c) in &e.terms {
                            out = out
                                .add(&psi_dagger_necklace(&world, &nctx.comp, w).unwrap().scale(c));
                        }
                        out
                    };
                    let lhs = cartan_bracket(&world, &tr(&a), &tr(&b));
                    let rhs = tr(&nctx.bracket(&a, &b).unwrap());
                    assert_eq!(lhs, rhs, "Ψ† is not a Lie map (m={m}, n={n})");
                }
            }
        }
    }

    #[test]
    fn psi_dagger_commutes_with_d() {
        let base = kx();
        let m = 0i64;
        let world = RepWorld::new(&base, DimVector(vec![2]), m).unwrap();
        let nctx = crate::necklace::NecklaceCtx::new(&base, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut tested = 0;
        while tested < 15 {
            let Some(w) = sample_endo_word(&nctx.comp.tc, &mut rng, 4, 2) else { continue };
            let cls = nctx.from_word(&w, qi(1)).unwrap();
            if cls.is_zero() {
                continue;
            }
            tested += 1;
            let tr = |e: &crate::necklace::NecklaceElement| -> CPoly {
                let mut out = CPoly::zero();
                for (w, c) in &e.terms {
                    out = out.add(&psi_dagger_necklace(&world, &nctx.comp, w).unwrap().scale(c));
                }
                out
            };
            let lhs = world.cdga.d(&tr(&cls));
            let rhs = tr(&nctx.diff(&cls).unwrap());
            assert_eq!(lhs, rhs, "Ψ† does not commute with d");
        }
    }
}

// ---------------------------------------------------------------------------
// symplectic transport
// ---------------------------------------------------------------------------

/// Report of the symplectic-transport kernel check.
#[derive(Clone, Debug)]
pub struct SharpVReport {
    pub signed_permutation: bool,
    pub matches_vdb_sharp: bool,
    pub rank: usize,
}

/// Computes `Ψ(ω)♯` on the basis of `vdb(Res(Π))` by contracting the trace
/// of ω against each basis dual, and compares it with the Van den Bergh
/// image of ω♯ under the `ψ†` identification
/// `((ζ)_{ji})^∨ ↔ (ζ^∨)_{ij}`.
pub fn omega_sharp_v(
    world: &RepWorld,
    mctx: &crate::mixed::MixedCtx,
    omega: &crate::bimodule::NatElement,
    sharp: &[crate::bimodule::BimodElement],
) -> Result<SharpVReport> {
    // Ψ(ω) on the ordered tensor: each weight-2 word η⊗ξ contributes
    // Σ_{ij} (η)_{ij}⊗(ξ)_{ji}; the contraction eats the second slot with
    // the sign (-1)^{|ξ|}
    let _ = mctx;
    let mut images: BTreeMap<(usize, usize, usize), BTreeMap<(usize, usize, usize), Q>> =
        BTreeMap::new();
    for (w, c) in &omega.terms {
        let letters = &w.letters;
        if letters.len() != 2 {
            return Err(Error::BadInput(
                "the transport check expects a basis-normal weight-2 form".into(),
            ));
        }
        let to_basis = |a: ArrId| -> Result<usize> {
            let base_count = world.base.arrows.len();
            if a < base_count {
                Err(Error::BadInput("expected a module letter".into()))
            } else {
                Ok(a - base_count)
            }
        };
        // note: world.base here is Π; mctx.tc adjoins Res(Π) letters after it
        let zeta1 = to_basis(letters[0])?;
        let zeta2 = to_basis(letters[1])?;
        let z1 = &world.res.module.basis[zeta1];
        let z2 = &world.res.module.basis[zeta2];
        let mut coeff = c.clone();
        if z2.degree % 2 != 0 {
            coeff = -coeff;
        }
        for i in 0..world.dims.of(z1.tgt) {
            for j in 0..world.dims.of(z1.src) {
                // (η)_{ij} pairs with (ξ)_{ji}
                let e = images.entry((zeta2, j, i)).or_default();
                let cur = e.remove(&(zeta1, i, j)).unwrap_or_else(Q::zero);
                let nv = cur + &coeff;
                if !nv.is_zero() {
                    e.insert((zeta1, i, j), nv);
                }
            }
        }
    }
    // signed permutation?
    let mut hit: BTreeMap<(usize, usize, usize), ()> = BTreeMap::new();
    let mut signed_permutation = true;
    for (_, img) in &images {
        if img.len() != 1 {
            signed_permutation = false;
            continue;
        }
        let (k, c) = img.iter().next().unwrap();
        if c.clone().abs() != Q::one() || hit.insert(*k, ()).is_some() {
            signed_permutation = false;
        }
    }
    let total_basis: usize = world
        .res
        .module
        .basis
        .iter()
        .map(|b| world.dims.of(b.src) * world.dims.of(b.tgt))
        .sum();
    if images.len() != total_basis {
        signed_permutation = false;
    }
    // expected: vdb(ω♯) through the ψ† identification:
    // Ψ(ω)♯(((ζ)_{ji})^∨) should equal Σ (l·ζ'·r ↦ entries)_{ji of ω♯(ζ^∨)}
    let mut matches = true;
    for (zeta, zb) in world.res.module.basis.iter().enumerate() {
        for i in 0..world.dims.of(zb.tgt) {
            for j in 0..world.dims.of(zb.src) {
                // ω♯(ζ^∨) = Σ c·(l, ζ', r): vdb image at entry (i,j)
                let mut expect: BTreeMap<(usize, usize, usize), Q> = BTreeMap::new();
                for ((l, zp, r), c) in &sharp[zeta].terms {
                    if !l.is_id() || !r.is_id() {
                        matches = false;
                        continue;
                    }
                    let cur = expect.remove(&(*zp, i, j)).unwrap_or_else(Q::zero);
                    let nv = cur + c;
                    if !nv.is_zero() {
                        expect.insert((*zp, i, j), nv);
                    }
                }
                // ψ† identification: (ζ^∨)_{ij} ↔ ((ζ)_{ji})^∨
                let got = images.get(&(zeta, j, i)).cloned().unwrap_or_default();
                if got != expect {
                    matches = false;
                }
            }
        }
    }
    Ok(SharpVReport { signed_permutation, matches_vdb_sharp: matches, rank: images.len() })
}

#[cfg(test)]
mod transport_tests {
    use super::*;
    use crate::cycompletion::{cy_completion, cy_form, omega_sharp, PiCtx};
    use crate::dgcat::parse_presentation;


    #[test]
    fn symplectic_transport_kernel() {
        let base = parse_presentation("object pt\narrow x : pt -> pt deg 0\n").unwrap();
        let pictx = PiCtx::new(cy_completion(&base, 2).unwrap()).unwrap();
        let om = cy_form(&pictx).unwrap();
        let sharp = omega_sharp(&pictx, &om).unwrap();
        for n in [1usize, 2] {
            let world = RepWorld::new(&pictx.comp.pi, DimVector(vec![n]), 0).unwrap();
            let mctx = crate::mixed::MixedCtx::new(&pictx.comp.pi).unwrap();
            let rep = omega_sharp_v(&world, &mctx, &om, &sharp).unwrap();
            assert!(rep.signed_permutation, "Ψ(ω)♯ must be a signed permutation (n = {n})");
            assert!(rep.matches_vdb_sharp, "Ψ(ω)♯ must equal vdb(ω♯) (n = {n})");
        }
    }

    #[test]
    fn zero_form_zero_map() {
        let base = parse_presentation("object pt\narrow x : pt -> pt deg 0\n").unwrap();
        let pictx = PiCtx::new(cy_completion(&base, 2).unwrap()).unwrap();
        let om = cy_form(&pictx).unwrap();
        let sharp = omega_sharp(&pictx, &om).unwrap();
        let world = RepWorld::new(&pictx.comp.pi, DimVector(vec![1]), 0).unwrap();
        let mctx = crate::mixed::MixedCtx::new(&pictx.comp.pi).unwrap();
        let zero = crate::bimodule::NatElement::zero();
        let rep = omega_sharp_v(&world, &mctx, &zero, &sharp);
        // a zero form gives an empty contraction, hence no permutation
        assert!(!rep.unwrap().signed_permutation);
    }
}
