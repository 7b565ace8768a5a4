//! Graded quivers, semi-free DG categories and noncommutative polynomials.
//!
//! A presentation is a graded quiver together with a differential assignment
//! on generating arrows; the ambient DG category is the free path category
//! on the quiver with the differential extended by the Leibniz rule. The
//! conventions, used everywhere downstream:
//!
//! * homological grading, `d` has degree -1;
//! * `d(ab) = d(a)·b + (-1)^{|a|} a·d(b)`;
//! * `g*f` means "apply `f`, then `g`", so for `f : x -> y` and
//!   `g : y -> x` the product `g*f` is an endomorphism of `x`.

use crate::{Error, Q, Result};
use num::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

pub type ObjId = usize;
pub type ArrId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arrow {
    pub name: String,
    pub src: ObjId,
    pub tgt: ObjId,
    pub degree: i64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DGCatPresentation {
    pub objects: Vec<String>,
    pub arrows: Vec<Arrow>,
    obj_index: BTreeMap<String, ObjId>,
    arrow_index: BTreeMap<String, ArrId>,
    /// differential of each arrow; `None` means zero
    pub diff: Vec<Option<NCPoly>>,
}

/// A composable word of arrows. `letters[0]` is applied last, matching the
/// way `g*f` is written on paper. The empty word is the identity of `base`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    pub letters: Vec<ArrId>,
    pub base: ObjId,
}

impl Word {
    pub fn id(base: ObjId) -> Self {
        Word { letters: vec![], base }
    }

    pub fn single(a: ArrId, pres: &DGCatPresentation) -> Self {
        Word { letters: vec![a], base: pres.arrows[a].src }
    }

    pub fn is_id(&self) -> bool {
        self.letters.is_empty()
    }
}

/// A noncommutative polynomial: a finite ℚ-linear combination of composable
/// words sharing the same endpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct NCPoly {
    pub src: ObjId,
    pub tgt: ObjId,
    pub terms: BTreeMap<Word, Q>,
}

impl DGCatPresentation {
    pub fn new() -> Self {
        Default::default()
    }

    pub fn add_object(&mut self, name: &str) -> Result<ObjId> {
        if self.obj_index.contains_key(name) {
            return Err(Error::BadInput(format!("duplicate object `{name}`")));
        }
        let id = self.objects.len();
        self.objects.push(name.to_string());
        self.obj_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn add_arrow(&mut self, name: &str, src: ObjId, tgt: ObjId, degree: i64) -> Result<ArrId> {
        if self.arrow_index.contains_key(name) {
            return Err(Error::BadInput(format!("duplicate arrow `{name}`")));
        }
        let id = self.arrows.len();
        self.arrows.push(Arrow { name: name.to_string(), src, tgt, degree });
        self.arrow_index.insert(name.to_string(), id);
        self.diff.push(None);
        Ok(id)
    }

    pub fn object_id(&self, name: &str) -> Result<ObjId> {
        self.obj_index.get(name).copied().ok_or_else(|| Error::UnknownObject(name.to_string()))
    }

    pub fn arrow_id(&self, name: &str) -> Result<ArrId> {
        self.arrow_index.get(name).copied().ok_or_else(|| Error::UnknownArrow(name.to_string()))
    }

    pub fn arrow(&self, id: ArrId) -> &Arrow {
        &self.arrows[id]
    }

    pub fn set_diff(&mut self, arrow: ArrId, p: NCPoly) -> Result<()> {
        let a = &self.arrows[arrow];
        if p.src != a.src || p.tgt != a.tgt {
            return Err(Error::EndpointMismatch(format!(
                "diff of `{}` must lie in hom({}, {})",
                a.name, self.objects[a.src], self.objects[a.tgt]
            )));
        }
        if !p.is_zero() {
            match p.degree(self) {
                Some(d) if d == a.degree - 1 => {}
                Some(d) => {
                    return Err(Error::DegreeMismatch(format!(
                        "diff of `{}` has degree {}, expected {}",
                        a.name,
                        d,
                        a.degree - 1
                    )))
                }
                None => {
                    return Err(Error::InhomogeneousInput(format!("diff of `{}`", a.name)));
                }
            }
        }
        self.diff[arrow] = if p.is_zero() { None } else { Some(p) };
        Ok(())
    }

    pub fn diff_of(&self, arrow: ArrId) -> NCPoly {
        match &self.diff[arrow] {
            Some(p) => p.clone(),
            None => {
                let a = &self.arrows[arrow];
                NCPoly::zero(a.src, a.tgt)
            }
        }
    }

    pub fn word_degree(&self, w: &Word) -> i64 {
        w.letters.iter().map(|&a| self.arrows[a].degree).sum()
    }

    pub fn word_src(&self, w: &Word) -> ObjId {
        w.letters.last().map_or(w.base, |&a| self.arrows[a].src)
    }

    pub fn word_tgt(&self, w: &Word) -> ObjId {
        w.letters.first().map_or(w.base, |&a| self.arrows[a].tgt)
    }

    pub fn word_composable(&self, letters: &[ArrId]) -> bool {
        letters.windows(2).all(|p| self.arrows[p[0]].src == self.arrows[p[1]].tgt)
    }

    /// Total order on words used for canonical printing: length first, then
    /// the sequence of arrow names.
    pub fn word_key(&self, w: &Word) -> (usize, Vec<&str>, &str) {
        (
            w.letters.len(),
            w.letters.iter().map(|&a| self.arrows[a].name.as_str()).collect(),
            if w.is_id() { self.objects[w.base].as_str() } else { "" },
        )
    }

    /// Applies `d` to every arrow twice and reports the defects. The
    /// presentation is a DG category iff every reported value is zero.
    pub fn d_squared_report(&self) -> Vec<(String, NCPoly)> {
        let mut out = Vec::new();
        for (i, a) in self.arrows.iter().enumerate() {
            let dd = self.differential(&self.diff_of(i)).unwrap_or_else(|_| NCPoly::zero(a.src, a.tgt));
            out.push((a.name.clone(), dd));
        }
        out
    }

    pub fn validate_d_squared(&self) -> Result<()> {
        for (name, dd) in self.d_squared_report() {
            if !dd.is_zero() {
                return Err(Error::D2Violation(format!("d²({name}) = {}", self.format_poly(&dd))));
            }
        }
        Ok(())
    }

    /// Leibniz extension of the generator differential to polynomials.
    /// Requires homogeneous input.
    pub fn differential(&self, p: &NCPoly) -> Result<NCPoly> {
        if !p.is_zero() && p.degree(self).is_none() {
            return Err(Error::InhomogeneousInput("differential".into()));
        }
        let mut out = NCPoly::zero(p.src, p.tgt);
        for (w, c) in &p.terms {
            let mut prefix_deg = 0i64;
            for (i, &a) in w.letters.iter().enumerate() {
                if let Some(da) = &self.diff[a] {
                    let sign = if prefix_deg % 2 == 0 { Q::one() } else { -Q::one() };
                    for (dw, dc) in &da.terms {
                        let mut letters = w.letters[..i].to_vec();
                        letters.extend_from_slice(&dw.letters);
                        letters.extend_from_slice(&w.letters[i + 1..]);
                        let word = Word { letters, base: self.word_src(w) };
                        out.add_term(word, c * dc * &sign);
                    }
                }
                prefix_deg += self.arrows[a].degree;
            }
        }
        Ok(out)
    }

    /// Applies the degree-`deg` derivation determined by `images` on
    /// generators: `δ(ab) = δ(a)·b + (-1)^{deg·|a|} a·δ(b)`.
    pub fn apply_derivation(
        &self,
        images: &dyn Fn(ArrId) -> NCPoly,
        deg: i64,
        p: &NCPoly,
    ) -> NCPoly {
        let mut out = NCPoly::zero(p.src, p.tgt);
        for (w, c) in &p.terms {
            let mut prefix_deg = 0i64;
            for (i, &a) in w.letters.iter().enumerate() {
                let img = images(a);
                if !img.is_zero() {
                    let sign = if (deg * prefix_deg) % 2 == 0 { Q::one() } else { -Q::one() };
                    for (iw, ic) in &img.terms {
                        let mut letters = w.letters[..i].to_vec();
                        letters.extend_from_slice(&iw.letters);
                        letters.extend_from_slice(&w.letters[i + 1..]);
                        out.add_term(Word { letters, base: self.word_src(w) }, c * ic * &sign);
                    }
                }
                prefix_deg += self.arrows[a].degree;
            }
        }
        out
    }

    /// All composable words of length at most `max_len`, including one
    /// identity word per object.
    pub fn enumerate_words(&self, max_len: usize) -> Vec<Word> {
        let mut out: Vec<Word> = (0..self.objects.len()).map(Word::id).collect();
        let mut frontier: Vec<Word> = out.clone();
        for _ in 0..max_len {
            let mut next = Vec::new();
            for w in &frontier {
                let tgt = self.word_tgt(w);
                for (a, arr) in self.arrows.iter().enumerate() {
                    if arr.src == tgt {
                        let mut letters = vec![a];
                        letters.extend_from_slice(&w.letters);
                        next.push(Word { letters, base: w.base });
                    }
                }
            }
            out.extend(next.iter().cloned());
            frontier = next;
        }
        out
    }

    /// Topological order on arrows such that each differential only uses
    /// earlier arrows. `Err` carries the arrows of a dependency cycle.
    pub fn cellular_order(&self) -> std::result::Result<Vec<ArrId>, Vec<ArrId>> {
        let n = self.arrows.len();
        let mut deps: Vec<BTreeSet<ArrId>> = vec![BTreeSet::new(); n];
        for i in 0..n {
            if let Some(p) = &self.diff[i] {
                for w in p.terms.keys() {
                    for &a in &w.letters {
                        if a != i {
                            deps[i].insert(a);
                        } else {
                            deps[i].insert(a); // self-dependency is a cycle too
                        }
                    }
                }
            }
        }
        let mut order = Vec::new();
        let mut placed = vec![false; n];
        loop {
            let mut advanced = false;
            for i in 0..n {
                if !placed[i] && deps[i].iter().all(|&a| placed[a]) {
                    placed[i] = true;
                    order.push(i);
                    advanced = true;
                }
            }
            if order.len() == n {
                return Ok(order);
            }
            if !advanced {
                let cycle: Vec<ArrId> = (0..n).filter(|&i| !placed[i]).collect();
                return Err(cycle);
            }
        }
    }

    pub fn format_word(&self, w: &Word) -> String {
        if w.is_id() {
            format!("id({})", self.objects[w.base])
        } else {
            w.letters.iter().map(|&a| self.arrows[a].name.clone()).collect::<Vec<_>>().join("*")
        }
    }

    pub fn format_poly(&self, p: &NCPoly) -> String {
        if p.is_zero() {
            return "0".into();
        }
        let mut terms: Vec<&Word> = p.terms.keys().collect();
        terms.sort_by_key(|w| self.word_key(w));
        let mut s = String::new();
        for (i, w) in terms.iter().enumerate() {
            let c = &p.terms[*w];
            let neg = c < &Q::zero();
            let abs = if neg { -c.clone() } else { c.clone() };
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            if abs.is_one() {
                s.push_str(&self.format_word(w));
            } else {
                let _ = write!(s, "{}*{}", format_q(&abs), self.format_word(w));
            }
        }
        s
    }

    /// Canonical dgquiver text. Parsing the output reproduces the
    /// presentation exactly.
    pub fn to_dgquiver(&self) -> String {
        let mut s = String::new();
        let mut objs: Vec<&String> = self.objects.iter().collect();
        objs.sort();
        for o in objs {
            let _ = writeln!(s, "object {o}");
        }
        let mut arrs: Vec<&Arrow> = self.arrows.iter().collect();
        arrs.sort_by(|a, b| a.name.cmp(&b.name));
        for a in &arrs {
            let _ = writeln!(
                s,
                "arrow {} : {} -> {} deg {}",
                a.name, self.objects[a.src], self.objects[a.tgt], a.degree
            );
        }
        for a in &arrs {
            let id = self.arrow_index[&a.name];
            if let Some(p) = &self.diff[id] {
                let _ = writeln!(s, "diff {} = {}", a.name, self.format_poly(p));
            }
        }
        s
    }
}

pub fn format_q(v: &Q) -> String {
    if v.denom().is_one() {
        format!("{}", v.numer())
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

impl NCPoly {
    pub fn zero(src: ObjId, tgt: ObjId) -> Self {
        NCPoly { src, tgt, terms: BTreeMap::new() }
    }

    pub fn identity(obj: ObjId) -> Self {
        let mut p = NCPoly::zero(obj, obj);
        p.terms.insert(Word::id(obj), Q::one());
        p
    }

    pub fn generator(a: ArrId, pres: &DGCatPresentation) -> Self {
        let arr = pres.arrow(a);
        let mut p = NCPoly::zero(arr.src, arr.tgt);
        p.terms.insert(Word::single(a, pres), Q::one());
        p
    }

    pub fn from_word(w: Word, pres: &DGCatPresentation) -> Self {
        let (src, tgt) = (pres.word_src(&w), pres.word_tgt(&w));
        let mut p = NCPoly::zero(src, tgt);
        p.terms.insert(w, Q::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, w: Word, c: Q) {
        if c.is_zero() {
            return;
        }
        let cur = self.terms.remove(&w).unwrap_or_else(Q::zero);
        let nv = cur + c;
        if !nv.is_zero() {
            self.terms.insert(w, nv);
        }
    }

    pub fn add(&self, other: &NCPoly) -> Result<NCPoly> {
        if self.src != other.src || self.tgt != other.tgt {
            return Err(Error::EndpointMismatch("sum of polynomials with different endpoints".into()));
        }
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &NCPoly) -> Result<NCPoly> {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, c: &Q) -> NCPoly {
        if c.is_zero() {
            return NCPoly::zero(self.src, self.tgt);
        }
        NCPoly { src: self.src, tgt: self.tgt, terms: self.terms.iter().map(|(w, v)| (w.clone(), v * c)).collect() }
    }

    /// Homogeneous degree, or `None` if the terms mix degrees. The zero
    /// polynomial reports `Some` of nothing useful; callers check
    /// `is_zero()` first when it matters.
    pub fn degree(&self, pres: &DGCatPresentation) -> Option<i64> {
        let mut it = self.terms.keys().map(|w| pres.word_degree(w));
        let first = it.next()?;
        if it.all(|d| d == first) {
            Some(first)
        } else {
            None
        }
    }
}

/// Bilinear extension of path concatenation: `compose(g, f) = g*f`,
/// "apply `f`, then `g`".
pub fn compose(pres: &DGCatPresentation, g: &NCPoly, f: &NCPoly) -> Result<NCPoly> {
    if f.tgt != g.src {
        return Err(Error::EndpointMismatch(format!(
            "compose: target of second factor is `{}`, source of first factor is `{}`",
            pres.objects[f.tgt], pres.objects[g.src]
        )));
    }
    let mut out = NCPoly::zero(f.src, g.tgt);
    for (wg, cg) in &g.terms {
        for (wf, cf) in &f.terms {
            let mut letters = wg.letters.clone();
            letters.extend_from_slice(&wf.letters);
            out.add_term(Word { letters, base: f.src }, cg * cf);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// dgquiver parser
// ---------------------------------------------------------------------------

struct LineParser<'a> {
    line: &'a str,
    lineno: usize,
    pos: usize,
}

impl<'a> LineParser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse { line: self.lineno, col: self.pos + 1, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.line.len() && self.line.as_bytes()[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.line[self.pos..].chars().next()
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.line[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        for ch in self.line[self.pos..].chars() {
            if ch.is_alphanumeric() || ch == '_' || ch == '\'' {
                self.pos += ch.len_utf8();
            } else {
                break;
            }
        }
        if self.pos == start {
            self.err("expected identifier")
        } else {
            Ok(self.line[start..self.pos].to_string())
        }
    }

    fn integer(&mut self) -> Result<i64> {
        self.skip_ws();
        let start = self.pos;
        if self.line[self.pos..].starts_with('-') || self.line[self.pos..].starts_with('+') {
            self.pos += 1;
        }
        while self.pos < self.line.len() && self.line.as_bytes()[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start || !self.line[start..self.pos].chars().any(|c| c.is_ascii_digit()) {
            return self.err("expected integer");
        }
        self.line[start..self.pos].parse::<i64>().map_err(|e| Error::Parse {
            line: self.lineno,
            col: start + 1,
            msg: format!("bad integer: {e}"),
        })
    }

    fn rational(&mut self) -> Result<Q> {
        let n = self.integer()?;
        if self.eat("/") {
            let d = self.integer()?;
            if d <= 0 {
                return self.err("denominator must be positive");
            }
            Ok(Q::new(n.into(), d.into()))
        } else {
            Ok(Q::from_integer(n.into()))
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.line.len()
    }

    /// factor ::= arrow name | id(<object>)
    fn factor(&mut self, pres: &DGCatPresentation) -> Result<NCPoly> {
        let name = self.ident()?;
        if name == "id" {
            if !self.eat("(") {
                return self.err("expected `(` after id");
            }
            let obj = self.ident()?;
            if !self.eat(")") {
                return self.err("expected `)`");
            }
            let o = pres.object_id(&obj)?;
            Ok(NCPoly::identity(o))
        } else {
            let a = pres.arrow_id(&name)?;
            Ok(NCPoly::generator(a, pres))
        }
    }

    /// term ::= [<rat> *] factor {* factor}
    fn term(&mut self, pres: &DGCatPresentation) -> Result<NCPoly> {
        let coeff = match self.peek() {
            Some(c) if c.is_ascii_digit() => {
                let q = self.rational()?;
                if !self.eat("*") {
                    return self.err("expected `*` after coefficient");
                }
                q
            }
            _ => Q::one(),
        };
        let mut acc = self.factor(pres)?;
        while self.peek() == Some('*') {
            self.eat("*");
            let f = self.factor(pres)?;
            acc = compose(pres, &acc, &f)?;
        }
        Ok(acc.scale(&coeff))
    }

    /// <poly> ::= ['-'] term { ('+'|'-') term }
    fn poly(&mut self, pres: &DGCatPresentation) -> Result<NCPoly> {
        let mut sign = Q::one();
        if self.eat("-") {
            sign = -Q::one();
        }
        if self.peek() == Some('0') {
            // allow a literal zero polynomial: "0"
            let save = self.pos;
            let q = self.rational()?;
            if q.is_zero() && self.at_end() {
                return self.err("zero polynomial needs endpoints; omit the diff line instead");
            }
            self.pos = save;
        }
        let mut acc = self.term(pres)?.scale(&sign);
        loop {
            if self.eat("+") {
                let t = self.term(pres)?;
                acc = acc.add(&t)?;
            } else if self.eat("-") {
                let t = self.term(pres)?;
                acc = acc.sub(&t)?;
            } else {
                break;
            }
        }
        if !self.at_end() {
            return self.err("trailing input");
        }
        Ok(acc)
    }
}

/// Parses the dgquiver text format. Endpoint and degree checks are applied
/// while reading `diff` lines; `d² = 0` is not checked here.
pub fn parse_presentation(text: &str) -> Result<DGCatPresentation> {
    let mut pres = DGCatPresentation::new();
    // first pass: objects and arrows, so diff lines can be order-independent
    let mut diff_lines: Vec<(usize, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut lp = LineParser { line, lineno: i + 1, pos: 0 };
        if lp.eat("object") {
            let name = lp.ident()?;
            if !lp.at_end() {
                return lp.err("trailing input after object name");
            }
            pres.add_object(&name)?;
        } else if lp.eat("arrow") {
            let name = lp.ident()?;
            if !lp.eat(":") {
                return lp.err("expected `:`");
            }
            let src = lp.ident()?;
            if !lp.eat("->") {
                return lp.err("expected `->`");
            }
            let tgt = lp.ident()?;
            if !lp.eat("deg") {
                return lp.err("expected `deg`");
            }
            let d = lp.integer()?;
            if !lp.at_end() {
                return lp.err("trailing input after degree");
            }
            let s = pres.object_id(&src)?;
            let t = pres.object_id(&tgt)?;
            pres.add_arrow(&name, s, t, d)?;
        } else if lp.eat("diff") {
            diff_lines.push((i + 1, line.to_string()));
        } else {
            return lp.err("expected `object`, `arrow` or `diff`");
        }
    }
    for (lineno, line) in diff_lines {
        let mut lp = LineParser { line: &line, lineno, pos: 0 };
        lp.eat("diff");
        let name = lp.ident()?;
        if !lp.eat("=") {
            return lp.err("expected `=`");
        }
        let a = pres.arrow_id(&name)?;
        let p = lp.poly(&pres)?;
        pres.set_diff(a, p)?;
    }
    Ok(pres)
}

#[cfg(test)]
pub(crate) fn intro_quiver() -> DGCatPresentation {
    parse_presentation(INTRO_QUIVER).unwrap()
}

/// The running two-object example: f : x -> y, g : y -> x, h : x -> x and a
/// degree-1 loop t with d(t) = g*f - h*h.
#[cfg(test)]
pub(crate) const INTRO_QUIVER: &str = "\
object x
object y
arrow f : x -> y deg 0
arrow g : y -> x deg 0
arrow h : x -> x deg 0
arrow t : x -> x deg 1
diff t = g*f - h*h
";

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qi;

    #[test]
    fn parse_intro_quiver() {
        let p = intro_quiver();
        assert_eq!(p.objects.len(), 2);
        assert_eq!(p.arrows.len(), 4);
        let t = p.arrow_id("t").unwrap();
        let dt = p.diff_of(t);
        assert_eq!(p.format_poly(&dt), "g*f - h*h");
    }

    #[test]
    fn parse_defaults_to_zero_diff() {
        let p = parse_presentation("object x\narrow a : x -> x deg 0\n").unwrap();
        let a = p.arrow_id("a").unwrap();
        assert!(p.diff_of(a).is_zero());
    }

    #[test]
    fn diff_endpoint_mismatch_rejected() {
        // f*g lies in hom(y, y) but t is an endomorphism of x
        let text = "\
object x
object y
arrow f : x -> y deg 0
arrow g : y -> x deg 0
arrow t : x -> x deg 1
diff t = f*g
";
        assert!(matches!(parse_presentation(text), Err(Error::EndpointMismatch(_))));
    }

    #[test]
    fn diff_degree_mismatch_rejected() {
        let text = "\
object x
arrow a : x -> x deg 0
arrow t : x -> x deg 3
diff t = a*a
";
        assert!(matches!(parse_presentation(text), Err(Error::DegreeMismatch(_))));
    }

    #[test]
    fn compose_unital_and_mismatch() {
        let p = intro_quiver();
        let f = NCPoly::generator(p.arrow_id("f").unwrap(), &p);
        let idy = NCPoly::identity(p.object_id("y").unwrap());
        assert_eq!(compose(&p, &idy, &f).unwrap(), f);
        let idx = NCPoly::identity(p.object_id("x").unwrap());
        assert_eq!(compose(&p, &f, &idx).unwrap(), f);
        assert!(matches!(compose(&p, &f, &f), Err(Error::EndpointMismatch(_))));
    }

    #[test]
    fn compose_concatenates() {
        let p = intro_quiver();
        let f = NCPoly::generator(p.arrow_id("f").unwrap(), &p);
        let g = NCPoly::generator(p.arrow_id("g").unwrap(), &p);
        let gf = compose(&p, &g, &f).unwrap();
        assert_eq!(p.format_poly(&gf), "g*f");
        assert_eq!(gf.src, p.object_id("x").unwrap());
        assert_eq!(gf.tgt, p.object_id("x").unwrap());
    }

    #[test]
    fn associativity_random() {
        let p = intro_quiver();
        // (h*h)*h == h*(h*h) and mixed-coefficient checks
        let h = NCPoly::generator(p.arrow_id("h").unwrap(), &p);
        let t = NCPoly::generator(p.arrow_id("t").unwrap(), &p);
        let a = h.add(&t.scale(&qi(3))).unwrap();
        let b = h.scale(&crate::q(1, 2));
        let c = h.add(&NCPoly::identity(p.object_id("x").unwrap()).scale(&qi(-2))).unwrap();
        let left = compose(&p, &compose(&p, &a, &b).unwrap(), &c).unwrap();
        let right = compose(&p, &a, &compose(&p, &b, &c).unwrap()).unwrap();
        assert_eq!(left, right);
    }

    #[test]
    fn differential_of_t() {
        let p = intro_quiver();
        let t = NCPoly::generator(p.arrow_id("t").unwrap(), &p);
        let dt = p.differential(&t).unwrap();
        assert_eq!(p.format_poly(&dt), "g*f - h*h");
    }

    #[test]
    fn differential_leibniz_on_tt() {
        // |t| = 1: d(t*t) = d(t)*t - t*d(t), expanded by hand
        let p = intro_quiver();
        let t = NCPoly::generator(p.arrow_id("t").unwrap(), &p);
        let tt = compose(&p, &t, &t).unwrap();
        let dtt = p.differential(&tt).unwrap();
        let dt = p.diff_of(p.arrow_id("t").unwrap());
        let expect = compose(&p, &dt, &t).unwrap().sub(&compose(&p, &t, &dt).unwrap()).unwrap();
        assert_eq!(dtt, expect);
    }

    #[test]
    fn leibniz_property_random() {
        let p = intro_quiver();
        let h = NCPoly::generator(p.arrow_id("h").unwrap(), &p);
        let t = NCPoly::generator(p.arrow_id("t").unwrap(), &p);
        let f = NCPoly::generator(p.arrow_id("f").unwrap(), &p);
        // spot-check d(ab) = da·b + (-1)^{|a|} a·db
        let b = compose(&p, &t, &h).unwrap();
        let ab = compose(&p, &f, &b).unwrap();
        let lhs = p.differential(&ab).unwrap();
        let rhs = compose(&p, &p.differential(&f).unwrap(), &b)
            .unwrap()
            .add(&compose(&p, &f, &p.differential(&b).unwrap()).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
        // and with a degree-1 left factor the sign flips
        let tb = compose(&p, &t, &b).unwrap();
        let lhs = p.differential(&tb).unwrap();
        let rhs = compose(&p, &p.differential(&t).unwrap(), &b)
            .unwrap()
            .sub(&compose(&p, &t, &p.differential(&b).unwrap()).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn d_squared_validates() {
        let p = intro_quiver();
        assert!(p.validate_d_squared().is_ok());
        // d(d(t*t)) = 0 as well
        let t = NCPoly::generator(p.arrow_id("t").unwrap(), &p);
        let tt = compose(&p, &t, &t).unwrap();
        let dd = p.differential(&p.differential(&tt).unwrap()).unwrap();
        assert!(dd.is_zero());
    }

    #[test]
    fn cellular_order_intro() {
        let p = intro_quiver();
        let order = p.cellular_order().unwrap();
        // t must come last; f, g, h in any order
        assert_eq!(order.len(), 4);
        assert_eq!(p.arrows[*order.last().unwrap()].name, "t");
    }

    #[test]
    fn cellular_order_chain() {
        let text = "\
object x
arrow b : x -> x deg 0
arrow a : x -> x deg 1
diff a = b
";
        let p = parse_presentation(text).unwrap();
        let order = p.cellular_order().unwrap();
        let names: Vec<&str> = order.iter().map(|&i| p.arrows[i].name.as_str()).collect();
        assert_eq!(names, vec!["b", "a"]);
    }

    #[test]
    fn cellular_order_cycle_detected() {
        let text = "\
object x
arrow a : x -> x deg 0
arrow b : x -> x deg -1
diff a = b
diff b = b*a*b
";
        let p = parse_presentation(text).unwrap();
        let cyc = p.cellular_order().unwrap_err();
        assert_eq!(cyc.len(), 2);
    }

    #[test]
    fn print_parse_roundtrip() {
        let p = intro_quiver();
        let text = p.to_dgquiver();
        let p2 = parse_presentation(&text).unwrap();
        assert_eq!(p2.to_dgquiver(), text);
        // same objects/arrows/diffs up to identical naming
        assert_eq!(p2.objects.len(), p.objects.len());
        for a in &p.arrows {
            let id2 = p2.arrow_id(&a.name).unwrap();
            assert_eq!(p2.arrows[id2].degree, a.degree);
        }
    }
}
