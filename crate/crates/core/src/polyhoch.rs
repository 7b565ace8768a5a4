//! The poly-Hochschild bracket on finite-dimensional graded data: colored
//! polarized disks, finitely supported collections, the gluing bracket,
//! the structure element 𝝁 of an A∞ presentation, and the infinitesimal
//! bialgebra calculus of two-in/two-out disks.
//!
//! A disk is a cyclic sequence of polarized ends separated by object-colored
//! arcs; a collection assigns to each disk a multilinear map
//! ⊗(A(ζ⁻)[1]) → ⊗(A(ζ⁺)[-m]). Values are stored on starred disks (the
//! star sits at an outgoing end) for every choice of star, with the graded
//! rotation identification baked in, so the stored data is honestly
//! C_n-invariant.

use crate::{qi, Error, Q, Result};
use num::Zero;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Polarity {
    In,
    Out,
}

/// A finite graded category presented by structure tensors: finite hom
/// bases with degrees, a differential, a composition, and optionally
/// higher operations up to an arity cap.
#[derive(Clone, Debug, Default)]
pub struct FinGradedCat {
    pub objects: Vec<String>,
    /// (src, tgt) -> ordered basis (label, degree)
    pub hom: BTreeMap<(usize, usize), Vec<(String, i64)>>,
    /// d: (x, y, i) -> Σ c_j e_j in the same hom space
    pub diff: BTreeMap<(usize, usize, usize), Vec<(usize, Q)>>,
    /// μ(g, f) for f: x->y, g: y->z: ((x,y,i_f),(y,z,i_g)) -> Σ c (x,z,k)
    pub mu: BTreeMap<((usize, usize, usize), (usize, usize, usize)), Vec<(usize, Q)>>,
    /// optional higher operations μ_k, k ≥ 3: inputs listed first-applied
    /// last, as in μ(a_k, …, a_1)
    pub higher: BTreeMap<Vec<(usize, usize, usize)>, Vec<(usize, Q)>>,
}

impl FinGradedCat {
    pub fn basis_degree(&self, b: (usize, usize, usize)) -> i64 {
        self.hom[&(b.0, b.1)][b.2].1
    }

    pub fn dim(&self, x: usize, y: usize) -> usize {
        self.hom.get(&(x, y)).map_or(0, |v| v.len())
    }
}

/// A starred disk: ends listed counterclockwise from the star, which sits
/// at an outgoing end; `arcs[i]` is the boundary color counterclockwise
/// after end `i`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct StarredDisk {
    pub pols: Vec<Polarity>,
    pub arcs: Vec<usize>,
}

impl StarredDisk {
    pub fn len(&self) -> usize {
        self.pols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pols.is_empty()
    }

    /// hom space read by end `i`: counterclockwise (before, after) for
    /// outgoing ends, clockwise for incoming ones.
    pub fn end_hom(&self, i: usize) -> (usize, usize) {
        let n = self.len();
        let before = self.arcs[(i + n - 1) % n];
        let after = self.arcs[i];
        match self.pols[i] {
            Polarity::Out => (before, after),
            Polarity::In => (after, before),
        }
    }

    pub fn ins(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.pols[i] == Polarity::In).collect()
    }

    pub fn outs(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.pols[i] == Polarity::Out).collect()
    }
}

/// Tensor entries of a disk map: (input basis tuple, output basis tuple) in
/// the disk's counterclockwise order from the star.
pub type Tensor = BTreeMap<(Vec<usize>, Vec<usize>), Q>;

/// A finitely supported, rotation-invariant assignment of multilinear maps
/// to colored disks, homogeneous of a fixed degree.
#[derive(Clone, Debug)]
pub struct DiskCollection {
    pub m: i64,
    /// degree of every entry as a map of shifted complexes
    pub degree: i64,
    pub arity_cap: usize,
    pub disks: BTreeMap<StarredDisk, Tensor>,
}

/// Koszul sign of rotating a basis tuple one step (first factor to the
/// back) at the given shifted degrees.
fn rotate_tuple_sign(degs: &[i64]) -> i64 {
    if degs.is_empty() {
        return 1;
    }
    let head = degs[0];
    let rest: i64 = degs[1..].iter().sum();
    if (head * rest).rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

impl DiskCollection {
    pub fn new(m: i64, degree: i64, arity_cap: usize) -> Self {
        DiskCollection { m, degree, arity_cap, disks: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.disks.values().all(|t| t.is_empty())
    }

    /// Weight: number of outgoing ends per supported disk.
    pub fn weights(&self) -> std::collections::BTreeSet<usize> {
        self.disks.keys().map(|d| d.outs().len()).collect()
    }

    fn shifted_in_deg(&self, cat: &FinGradedCat, disk: &StarredDisk, end: usize, b: usize) -> i64 {
        let (x, y) = disk.end_hom(end);
        cat.hom[&(x, y)][b].1 + 1
    }

    fn shifted_out_deg(&self, cat: &FinGradedCat, disk: &StarredDisk, end: usize, b: usize) -> i64 {
        let (x, y) = disk.end_hom(end);
        cat.hom[&(x, y)][b].1 - self.m
    }

    /// Rotates a starred disk one end counterclockwise, transporting every
    /// tensor entry with the graded identification of domains and ranges.
    fn rotate_once(&self, cat: &FinGradedCat, disk: &StarredDisk, tensor: &Tensor) -> (StarredDisk, Tensor) {
        let _n = disk.len();
        let mut pols = disk.pols[1..].to_vec();
        pols.push(disk.pols[0]);
        let mut arcs = disk.arcs[1..].to_vec();
        arcs.push(disk.arcs[0]);
        let new_disk = StarredDisk { pols, arcs };
        let ins = disk.ins();
        let outs = disk.outs();
        let mut out_tensor = Tensor::new();
        for ((iv, ov), c) in tensor {
            let mut sign = 1i64;
            let (niv, nov) = if disk.pols[0] == Polarity::In {
                // the leading input factor moves to the back
                let degs: Vec<i64> = ins
                    .iter()
                    .zip(iv.iter())
                    .map(|(&e, &b)| self.shifted_in_deg(cat, disk, e, b))
                    .collect();
                sign *= rotate_tuple_sign(&degs);
                let mut niv = iv[1..].to_vec();
                niv.push(iv[0]);
                (niv, ov.clone())
            } else {
                let degs: Vec<i64> = outs
                    .iter()
                    .zip(ov.iter())
                    .map(|(&e, &b)| self.shifted_out_deg(cat, disk, e, b))
                    .collect();
                sign *= rotate_tuple_sign(&degs);
                let mut nov = ov[1..].to_vec();
                nov.push(ov[0]);
                (iv.clone(), nov)
            };
            let cur = out_tensor.remove(&(niv.clone(), nov.clone())).unwrap_or_else(Q::zero);
            let nv = cur + c * qi(sign);
            if !nv.is_zero() {
                out_tensor.insert((niv, nov), nv);
            }
        }
        (new_disk, out_tensor)
    }

    /// Adds a disk value given on one starred representative, averaging it
    /// over the full star orbit: every outgoing star position receives the
    /// rotation transport, and a cyclically symmetric disk receives the sum
    /// over its symmetry orbit, so the stored data is always a consistent
    /// collection.
    pub fn add_disk(&mut self, cat: &FinGradedCat, disk: StarredDisk, tensor: Tensor) -> Result<()> {
        let dedup = false;
        if disk.len() > self.arity_cap {
            return Err(Error::CapExceeded(format!(
                "disk with {} ends exceeds the arity cap {}",
                disk.len(),
                self.arity_cap
            )));
        }
        if disk.pols.first() != Some(&Polarity::Out) {
            return Err(Error::BadInput("star must sit at an outgoing end".into()));
        }
        let mut cur_disk = disk;
        let mut cur_tensor = tensor;
        let n = cur_disk.len();
        let mut seen: std::collections::BTreeSet<StarredDisk> = std::collections::BTreeSet::new();
        for _ in 0..n {
            if cur_disk.pols[0] == Polarity::Out && (!dedup || seen.insert(cur_disk.clone())) {
                let entry = self.disks.entry(cur_disk.clone()).or_default();
                for (k, c) in &cur_tensor {
                    let cur = entry.remove(k).unwrap_or_else(Q::zero);
                    let nv = cur + c;
                    if !nv.is_zero() {
                        entry.insert(k.clone(), nv);
                    }
                }
            }
            let (nd, nt) = self.rotate_once(cat, &cur_disk, &cur_tensor);
            cur_disk = nd;
            cur_tensor = nt;
        }
        self.disks.retain(|_, t| !t.is_empty());
        Ok(())
    }

    pub fn scale(&self, c: &Q) -> DiskCollection {
        let mut out = DiskCollection::new(self.m, self.degree, self.arity_cap);
        if c.is_zero() {
            return out;
        }
        for (d, t) in &self.disks {
            out.disks.insert(d.clone(), t.iter().map(|(k, v)| (k.clone(), v * c)).collect());
        }
        out
    }

    pub fn add(&self, o: &DiskCollection) -> DiskCollection {
        let mut out = self.clone();
        for (d, t) in &o.disks {
            let entry = out.disks.entry(d.clone()).or_default();
            for (k, c) in t {
                let cur = entry.remove(k).unwrap_or_else(Q::zero);
                let nv = cur + c;
                if !nv.is_zero() {
                    entry.insert(k.clone(), nv);
                }
            }
        }
        out.disks.retain(|_, t| !t.is_empty());
        out
    }

    pub fn sub(&self, o: &DiskCollection) -> DiskCollection {
        self.add(&o.scale(&qi(-1)))
    }
}

/// Each disk value seen per number of rotations: the invariance check of
/// the stored representation (useful after handmade edits).
pub fn check_rotation_invariance(cat: &FinGradedCat, f: &DiskCollection) -> bool {
    for (d, t) in &f.disks {
        let mut cur_d = d.clone();
        let mut cur_t = t.clone();
        for _ in 0..d.len() {
            let (nd, nt) = f.rotate_once(cat, &cur_d, &cur_t);
            cur_d = nd;
            cur_t = nt;
            if cur_d.pols[0] == Polarity::Out {
                match f.disks.get(&cur_d) {
                    Some(stored) => {
                        if *stored != cur_t {
                            return false;
                        }
                    }
                    None => {
                        if !cur_t.is_empty() {
                            return false;
                        }
                    }
                }
            }
        }
    }
    true
}

/// The gluing bracket `{F,G}`: on each starred disk, the sum over all
/// splittings into a star-side piece and a block piece, over both seam
/// polarities and both assignments of F and G to the two pieces. The
/// G-outer terms carry the prefactor `(-1)^{m+|F||G|}` that makes the
/// bracket graded antisymmetric in the necklace convention.
pub fn ph_bracket(cat: &FinGradedCat, f: &DiskCollection, g: &DiskCollection) -> Result<DiskCollection> {
    if f.m != g.m {
        return Err(Error::ShiftMismatch { expected: f.m, got: g.m });
    }
    let m = f.m;
    let cap = f.arity_cap.max(g.arity_cap);
    let mut out = DiskCollection::new(m, f.degree + g.degree + m + 1, cap);
    // combinatorial candidates: glue every support pair along matching ends
    let mut candidates: std::collections::BTreeSet<StarredDisk> = std::collections::BTreeSet::new();
    let pairs: Vec<(&StarredDisk, &StarredDisk)> = f
        .disks
        .keys()
        .flat_map(|a| g.disks.keys().map(move |b| (a, b)))
        .collect();
    for (da, db) in pairs {
        for sa in 0..da.len() {
            for sb in 0..db.len() {
                if da.pols[sa] == db.pols[sb] {
                    continue;
                }
                if da.end_hom(sa) != db.end_hom(sb) {
                    continue;
                }
                let glued_len = da.len() + db.len() - 2;
                if glued_len == 0 || glued_len > cap {
                    continue;
                }
                // ends of da after sa, then ends of db after sb
                let mut pols = Vec::new();
                let mut arcs = Vec::new();
                for k in 1..da.len() {
                    pols.push(da.pols[(sa + k) % da.len()]);
                    arcs.push(da.arcs[(sa + k) % da.len()]);
                }
                for k in 1..db.len() {
                    pols.push(db.pols[(sb + k) % db.len()]);
                    arcs.push(db.arcs[(sb + k) % db.len()]);
                }
                let disk = StarredDisk { pols, arcs };
                for r in 0..disk.len() {
                    if disk.pols[r] == Polarity::Out {
                        let rot = StarredDisk {
                            pols: (0..disk.len()).map(|i| disk.pols[(i + r) % disk.len()]).collect(),
                            arcs: (0..disk.len()).map(|i| disk.arcs[(i + r) % disk.len()]).collect(),
                        };
                        candidates.insert(rot);
                    }
                }
            }
        }
    }
    for d in candidates {
        let t = bracket_value_at(cat, f, g, &d)?;
        if !t.is_empty() {
            out.disks.insert(d, t);
        }
    }
    Ok(out)
}

/// Looks up a collection's value on a disk presented with an arbitrary
/// leading end, transporting from a stored star rotation.
fn lookup_at_cut(
    cat: &FinGradedCat,
    coll: &DiskCollection,
    disk: &StarredDisk,
) -> Option<Tensor> {
    if disk.pols.first() == Some(&Polarity::Out) {
        return coll.disks.get(disk).cloned();
    }
    let n = disk.len();
    for r in 0..n {
        if disk.pols[r % n] == Polarity::Out {
            let key = StarredDisk {
                pols: (0..n).map(|i| disk.pols[(i + r) % n]).collect(),
                arcs: (0..n).map(|i| disk.arcs[(i + r) % n]).collect(),
            };
            if let Some(t) = coll.disks.get(&key) {
                // rotate the stored value back by n - r steps
                let (rd, rt) = rotate_to_position(cat, coll, &key, t, n - r);
                debug_assert_eq!(rd, *disk);
                return Some(rt);
            } else {
                return None; // stored collections carry every out rotation
            }
        }
    }
    None
}

/// Sum over splittings of a fixed starred disk.
fn bracket_value_at(
    cat: &FinGradedCat,
    f: &DiskCollection,
    g: &DiskCollection,
    d: &StarredDisk,
) -> Result<Tensor> {
    let m = f.m;
    let n = d.len();
    let mut acc = Tensor::new();
    let g_outer_exp = (m + f.degree * g.degree).rem_euclid(2);
    for i in 1..n {
        for len in 1..n {
            let j = i + len;
            if j > n {
                break;
            }
            // block = ends i..j-1; star side = 0..i-1 and j..n-1
            for seam_out_on_block in [true, false] {
                // assemble the two pieces
                let (sigma_b, sigma_s) = if seam_out_on_block {
                    (Polarity::Out, Polarity::In)
                } else {
                    (Polarity::In, Polarity::Out)
                };
                // block piece: [seam, ends i..j-1]; the arc after the seam
                // is the cut piece of arcs[i-1], the arc before it the cut
                // piece of arcs[j-1]
                let mut bpols = vec![sigma_b];
                bpols.extend_from_slice(&d.pols[i..j]);
                let mut barcs = vec![d.arcs[i - 1]];
                barcs.extend_from_slice(&d.arcs[i..j]);
                let block = StarredDisk { pols: bpols, arcs: barcs };
                // star side: [ends 0..i-1, seam, ends j..n-1]
                let mut spols: Vec<Polarity> = d.pols[..i].to_vec();
                spols.push(sigma_s);
                let mut sarcs: Vec<usize> = d.arcs[..i].to_vec();
                sarcs.push(d.arcs[j - 1]);
                if j < n {
                    spols.extend_from_slice(&d.pols[j..]);
                    sarcs.extend_from_slice(&d.arcs[j..]);
                }
                let star_side = StarredDisk { pols: spols, arcs: sarcs };
                for f_on_outer in [true, false] {
                    let (outer_coll, inner_coll) = if f_on_outer { (f, g) } else { (g, f) };
                    let theta = if f_on_outer || g_outer_exp == 0 { qi(1) } else { qi(-1) };
                    let term = if seam_out_on_block {
                        // star side consumes the block's seam output:
                        // outer = star side
                        star_outer_term(cat, outer_coll, inner_coll, d, i, j, &star_side, &block)?
                    } else {
                        // block consumes the star side's seam output:
                        // outer = block
                        block_outer_term(cat, outer_coll, inner_coll, d, i, j, &star_side, &block)?
                    };
                    let Some(term) = term else { continue };
                    for (k, c) in term {
                        let cur = acc.remove(&k).unwrap_or_else(Q::zero);
                        let nv = cur + c * &theta;
                        if !nv.is_zero() {
                            acc.insert(k, nv);
                        }
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Splitting where the star side is the consumer: the block's seam output
/// feeds the star side's seam input.
fn star_outer_term(
    cat: &FinGradedCat,
    outer: &DiskCollection,
    inner: &DiskCollection,
    d: &StarredDisk,
    i: usize,
    j: usize,
    star_side: &StarredDisk,
    block: &StarredDisk,
) -> Result<Option<Tensor>> {
    let Some(st) = lookup_at_cut(cat, outer, star_side) else { return Ok(None) };
    let Some(bt) = inner.disks.get(block).cloned() else { return Ok(None) };
    let m = outer.m;
    // index maps: star-side input slots vs d's input slots
    let d_ins = d.ins();
    let d_outs = d.outs();
    let s_seam_pos = i; // seam within star_side's end list
    let mut acc = Tensor::new();
    for ((siv, sov), sc) in &st {
        for ((biv, bov), bc) in &bt {
            // block seam output = bov[0]
            let s_ins = star_side.ins();
            let seam_in_rank = s_ins.iter().position(|&e| e == s_seam_pos).unwrap();
            if siv[seam_in_rank] != bov[0] {
                continue;
            }
            // Koszul: inner operator passes the star-side inputs before the
            // block (x-part), the twisted seam output returns past nothing,
            // and the block's other outputs pass the star-side inputs after
            // the block (y-part), then the star-side outputs after the seam
            let x_deg: i64 = s_ins
                .iter()
                .take(seam_in_rank)
                .zip(siv.iter())
                .map(|(&e, &b)| outer.shifted_in_deg(cat, star_side, e, b))
                .sum();
            let y_deg: i64 = s_ins
                .iter()
                .zip(siv.iter())
                .skip(seam_in_rank + 1)
                .map(|(&e, &b)| outer.shifted_in_deg(cat, star_side, e, b))
                .sum();
            let w_deg: i64 = block
                .outs()
                .iter()
                .zip(bov.iter())
                .skip(1)
                .map(|(&e, &b)| inner.shifted_out_deg(cat, block, e, b))
                .sum();
            let souts_after: i64 = star_side
                .outs()
                .iter()
                .zip(sov.iter())
                .filter(|(&e, _)| e > s_seam_pos)
                .map(|(&e, &b)| outer.shifted_out_deg(cat, star_side, e, b))
                .sum();
            // the inner operator travels bundled with the seam twist
            let exp = (inner.degree + m + 1) * x_deg + w_deg * y_deg + w_deg * souts_after;
            let sign = if exp.rem_euclid(2) == 0 { 1 } else { -1 };
            // assemble the d-tensor entry
            let mut iv = vec![0usize; d_ins.len()];
            let mut ov = vec![0usize; d_outs.len()];
            // star-side inputs occupy d-input slots outside the block
            let mut s_rank = 0usize;
            for (rank, &e) in d_ins.iter().enumerate() {
                if e < i {
                    iv[rank] = siv[s_rank];
                    s_rank += 1;
                } else if e >= j {
                    // skip the seam rank in siv
                    let adj = s_rank + 1;
                    iv[rank] = siv[adj];
                    s_rank += 1;
                }
            }
            let mut b_rank = 0usize;
            for (rank, &e) in d_ins.iter().enumerate() {
                if e >= i && e < j {
                    iv[rank] = biv[b_rank];
                    b_rank += 1;
                }
            }
            let mut so_rank = 0usize;
            for (rank, &e) in d_outs.iter().enumerate() {
                if e < i {
                    ov[rank] = sov[so_rank];
                    so_rank += 1;
                } else if e >= j {
                    ov[rank] = sov[so_rank];
                    so_rank += 1;
                }
            }
            let mut bo_rank = 1usize; // bov[0] is the seam
            for (rank, &e) in d_outs.iter().enumerate() {
                if e >= i && e < j {
                    ov[rank] = bov[bo_rank];
                    bo_rank += 1;
                }
            }
            let key = (iv, ov);
            let cur = acc.remove(&key).unwrap_or_else(Q::zero);
            let nv = cur + sc * bc * qi(sign);
            if !nv.is_zero() {
                acc.insert(key, nv);
            }
        }
    }
    Ok(Some(acc))
}

/// Splitting where the block is the consumer: the star side's seam output
/// feeds the block's seam input.
fn block_outer_term(
    cat: &FinGradedCat,
    outer: &DiskCollection,
    inner: &DiskCollection,
    d: &StarredDisk,
    i: usize,
    j: usize,
    star_side: &StarredDisk,
    block: &StarredDisk,
) -> Result<Option<Tensor>> {
    let Some(st) = lookup_at_cut(cat, inner, star_side) else { return Ok(None) };
    let Some(bt) = lookup_at_cut(cat, outer, block) else { return Ok(None) };
    let _n = d.len();
    let d_ins = d.ins();
    let d_outs = d.outs();
    let s_seam_pos = i;
    let mut acc = Tensor::new();
    for ((siv, sov), sc) in &st {
        for ((biv, bov), bc) in &bt {
            // star-side seam output feeds block seam input biv... the block
            // tensor is presented cut-first, so its seam input is biv[0]
            let s_outs = star_side.outs();
            let seam_out_rank = s_outs.iter().position(|&e| e == s_seam_pos).unwrap();
            if bov.is_empty() && block.outs().is_empty() {
                // a block with no outgoing ends cannot occur: lookup_at_cut
                // already failed; defensive
            }
            if biv[0] != sov[seam_out_rank] {
                continue;
            }
            // Koszul bookkeeping:
            //   κ₁ move block inputs right past the y-part of d-inputs
            //   κ₂ seam output z left past the star outputs before it
            //   κ₃ star outputs (all non-seam) right past block inputs
            //   κ₄ star outputs before the seam left past the block outputs
            let y_deg: i64 = {
                let s_ins = star_side.ins();
                s_ins
                    .iter()
                    .zip(siv.iter())
                    .filter(|(&e, _)| e > s_seam_pos)
                    .map(|(&e, &b)| inner.shifted_in_deg(cat, star_side, e, b))
                    .sum()
            };
            let b_in_deg: i64 = block
                .ins()
                .iter()
                .zip(biv.iter().skip(1))
                .map(|(&e, &b)| outer.shifted_in_deg(cat, block, e, b))
                .sum();
            let souts_pre: i64 = s_outs
                .iter()
                .zip(sov.iter())
                .filter(|(&e, _)| e < s_seam_pos)
                .map(|(&e, &b)| inner.shifted_out_deg(cat, star_side, e, b))
                .sum();
            let souts_post: i64 = s_outs
                .iter()
                .zip(sov.iter())
                .filter(|(&e, _)| e > s_seam_pos)
                .map(|(&e, &b)| inner.shifted_out_deg(cat, star_side, e, b))
                .sum();
            let z_deg = inner.shifted_out_deg(cat, star_side, s_seam_pos, sov[seam_out_rank]);
            let bouts_deg: i64 = block
                .outs()
                .iter()
                .zip(bov.iter())
                .map(|(&e, &b)| outer.shifted_out_deg(cat, block, e, b))
                .sum();
            // operators: outer = B (block), inner = S (star side)
            // tokens [B, S, x, b, y] -> permute ins to [x, y, b]: κ₁
            // S passes B? no; S evaluates on (x,y): outputs
            // [souts_pre, z, souts_post]; then z left past souts_pre: κ₂;
            // park souts past b: κ₃; B evaluates on [z, b]; then souts_pre
            // left past B-outs: κ₄
            let k1 = b_in_deg * y_deg;
            let k2 = z_deg * souts_pre;
            let k3 = (souts_pre + souts_post) * b_in_deg;
            let k4 = souts_pre * bouts_deg;
            // the inner operator S also passes the outer operator B? both
            // sit leftmost; applying S first costs |S| past B? no: B∘(…)∘S
            // is operator composition, no extra sign; but S must pass the
            // zero tokens left of x: none
            let exp = k1 + k2 + k3 + k4 + inner.degree * 0;
            let sign = if exp.rem_euclid(2) == 0 { 1 } else { -1 };
            let mut iv = vec![0usize; d_ins.len()];
            let mut ov = vec![0usize; d_outs.len()];
            let s_ins = star_side.ins();
            let mut s_rank = 0usize;
            for (rank, &e) in d_ins.iter().enumerate() {
                if e < i || e >= j {
                    iv[rank] = siv[s_rank];
                    s_rank += 1;
                }
            }
            let _ = s_ins;
            let mut b_rank = 1usize; // biv[0] is the seam
            for (rank, &e) in d_ins.iter().enumerate() {
                if e >= i && e < j {
                    iv[rank] = biv[b_rank];
                    b_rank += 1;
                }
            }
            let mut so_rank = 0usize;
            for (rank, &e) in d_outs.iter().enumerate() {
                if e < i || e >= j {
                    if so_rank == seam_out_rank {
                        so_rank += 1; // skip the seam slot
                    }
                    ov[rank] = sov[so_rank];
                    so_rank += 1;
                }
            }
            let mut bo_rank = 0usize;
            for (rank, &e) in d_outs.iter().enumerate() {
                if e >= i && e < j {
                    ov[rank] = bov[bo_rank];
                    bo_rank += 1;
                }
            }
            let key = (iv, ov);
            let cur = acc.remove(&key).unwrap_or_else(Q::zero);
            let nv = cur + sc * bc * qi(sign);
            if !nv.is_zero() {
                acc.insert(key, nv);
            }
        }
    }
    Ok(Some(acc))
}

/// Realizes a stored disk with an arbitrary end at the leading position by
/// repeated graded rotation.
fn rotate_to_position(
    cat: &FinGradedCat,
    coll: &DiskCollection,
    disk: &StarredDisk,
    tensor: &Tensor,
    position: usize,
) -> (StarredDisk, Tensor) {
    let mut cd = disk.clone();
    let mut ct = tensor.clone();
    for _ in 0..position {
        let (nd, nt) = coll.rotate_once(cat, &cd, &ct);
        cd = nd;
        ct = nt;
    }
    (cd, ct)
}

/// Encodes the category structure (d, μ, μ₃, …) as the weight-1 collection
/// 𝝁 of degree -m-2 with one output end; `{𝝁,𝝁} = 0` iff the A∞
/// relations hold.
pub fn mu_collection(cat: &FinGradedCat, m: i64, arity_cap: usize) -> Result<DiskCollection> {
    let mut out = DiskCollection::new(m, -m - 2, arity_cap);
    // d on the 1-in/1-out disk
    for ((x, y, i), img) in &cat.diff {
        let disk = StarredDisk { pols: vec![Polarity::Out, Polarity::In], arcs: vec![*y, *x] };
        // end 0 out: hom (arcs[1], arcs[0]) = (x, y) ✓; end 1 in: hom
        // (arcs[1], arcs[0]) read cw = (x, y) ✓
        let mut tensor = Tensor::new();
        for (k, c) in img {
            tensor.insert((vec![*i], vec![*k]), c.clone());
        }
        out.add_disk(cat, disk, tensor)?;
    }
    // μ on the 2-in/1-out disk: output ccw, inputs ccw after the star read
    // μ(second, first)
    for (((xf, yf, fi), (yg, zg, gi)), img) in &cat.mu {
        if yf != yg {
            continue;
        }
        let disk = StarredDisk {
            pols: vec![Polarity::Out, Polarity::In, Polarity::In],
            arcs: vec![*zg, *yf, *xf],
        };
        let mut tensor = Tensor::new();
        for (k, c) in img {
            // inputs ccw from the star: first the g-slot, then the f-slot,
            // as forced by the boundary colors
            tensor.insert((vec![*gi, *fi], vec![*k]), c.clone());
        }
        out.add_disk(cat, disk, tensor)?;
    }
    // higher operations: inputs (a_k, …, a_1) on a (k-in, 1-out) disk
    for (inputs, img) in &cat.higher {
        let k = inputs.len();
        let first = inputs[k - 1];
        let last = inputs[0];
        let mut pols = vec![Polarity::Out];
        pols.extend(std::iter::repeat(Polarity::In).take(k));
        let mut arcs = vec![last.1];
        for b in inputs.iter() {
            arcs.push(b.1);
        }
        arcs[k] = first.0;
        let disk = StarredDisk { pols, arcs };
        let mut tensor = Tensor::new();
        for (kk, c) in img {
            let ins: Vec<usize> = inputs.iter().map(|b| b.2).collect();
            tensor.insert((ins, vec![*kk]), c.clone());
        }
        out.add_disk(cat, disk, tensor)?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// infinitesimal bialgebras
// ---------------------------------------------------------------------------

/// Encodes a (Δ, μ) pair on a one-object category as the two-disk
/// collection of the intro calculus: μ on the 2-in/1-out disk and Δ on the
/// 1-in/2-out disk, with m = -1 so that Δ has degree 0.
pub fn inf_bialg_encode(
    cat: &FinGradedCat,
    delta: &BTreeMap<usize, Vec<(usize, usize, Q)>>,
    arity_cap: usize,
) -> Result<DiskCollection> {
    if cat.objects.len() != 1 {
        return Err(Error::BadInput("infinitesimal bialgebra encoding expects one object".into()));
    }
    let m = -1;
    let mut out = mu_collection(cat, m, arity_cap)?;
    out.degree = -m - 2;
    // Δ(f) = Σ c · u⊗v on the 1-in/2-out disk; outputs ccw from the star
    let disk = StarredDisk {
        pols: vec![Polarity::Out, Polarity::Out, Polarity::In],
        arcs: vec![0, 0, 0],
    };
    let mut tensor = Tensor::new();
    for (f, img) in delta {
        for (u, v, c) in img {
            // Δ(f) = u ⊗ v with u the first output counterclockwise
            let key = (vec![*f], vec![*u, *v]);
            let cur = tensor.remove(&key).unwrap_or_else(Q::zero);
            let nv = cur + c;
            if !nv.is_zero() {
                tensor.insert(key, nv);
            }
        }
    }
    if !tensor.is_empty() {
        out.add_disk(cat, disk, tensor)?;
    }
    Ok(out)
}

/// The four structural verdicts of the intro calculus, each evaluated
/// directly from the structure tensors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InfBialgReport {
    pub assoc: bool,
    pub coassoc: bool,
    pub eq1: bool,
    pub eq2: bool,
}

type DeltaMap = BTreeMap<usize, Vec<(usize, usize, Q)>>;

fn one_object_basis(cat: &FinGradedCat) -> Result<usize> {
    if cat.objects.len() != 1 {
        return Err(Error::BadInput("expected one object".into()));
    }
    Ok(cat.dim(0, 0))
}

fn mul(cat: &FinGradedCat, g: usize, f: usize) -> Vec<(usize, Q)> {
    cat.mu.get(&((0, 0, f), (0, 0, g))).cloned().unwrap_or_default()
}

fn dl(delta: &DeltaMap, f: usize) -> Vec<(usize, usize, Q)> {
    delta.get(&f).cloned().unwrap_or_default()
}

/// Direct expansion of the displayed equations: for all basis pairs,
/// eq1: Δ(fg) - Δ(f)·g - f·Δ(g) = 0, and eq2: the four-way splitting
/// -Δ(f)¹⊗gΔ(f)² + Δ(g)¹⊗fΔ(g)² + Δ(f)¹g⊗Δ(f)² - Δ(g)¹f⊗Δ(g)² = 0.
pub fn inf_bialg_equations(cat: &FinGradedCat, delta: &DeltaMap) -> Result<InfBialgReport> {
    let n = one_object_basis(cat)?;
    let mut assoc = true;
    let mut coassoc = true;
    let mut eq1 = true;
    let mut eq2 = true;
    let add3 =
        |acc: &mut BTreeMap<(usize, usize, usize), Q>, k: (usize, usize, usize), c: Q| {
            if c.is_zero() {
                return;
            }
            let cur = acc.remove(&k).unwrap_or_else(Q::zero);
            let nv = cur + c;
            if !nv.is_zero() {
                acc.insert(k, nv);
            }
        };
    let add2 = |acc: &mut BTreeMap<(usize, usize), Q>, k: (usize, usize), c: Q| {
        if c.is_zero() {
            return;
        }
        let cur = acc.remove(&k).unwrap_or_else(Q::zero);
        let nv = cur + c;
        if !nv.is_zero() {
            acc.insert(k, nv);
        }
    };
    for f in 0..n {
        // coassociativity: (Δ⊗1)Δ = (1⊗Δ)Δ
        let mut lhs: BTreeMap<(usize, usize, usize), Q> = BTreeMap::new();
        let mut rhs: BTreeMap<(usize, usize, usize), Q> = BTreeMap::new();
        for (u, v, c) in dl(delta, f) {
            for (a, b, c2) in dl(delta, u) {
                add3(&mut lhs, (a, b, v), &c * &c2);
            }
            for (a, b, c2) in dl(delta, v) {
                add3(&mut rhs, (u, a, b), &c * &c2);
            }
        }
        if lhs != rhs {
            coassoc = false;
        }
        for g in 0..n {
            // eq1, read on the (out,out,in,in) disk:
            // Δ(fg) - (Δ(f)¹·g)⊗Δ(f)² - Δ(g)¹⊗(f·Δ(g)²) = 0
            let mut acc1: BTreeMap<(usize, usize), Q> = BTreeMap::new();
            for (p, c) in mul(cat, f, g) {
                for (u, v, c2) in dl(delta, p) {
                    add2(&mut acc1, (u, v), &c * &c2);
                }
            }
            for (u, v, c) in dl(delta, f) {
                for (ug, c2) in mul(cat, u, g) {
                    add2(&mut acc1, (ug, v), -(&c * &c2));
                }
            }
            for (u, v, c) in dl(delta, g) {
                for (fv, c2) in mul(cat, f, v) {
                    add2(&mut acc1, (u, fv), -(&c * &c2));
                }
            }
            if !acc1.is_empty() {
                eq1 = false;
            }
            // eq2, the four-way splitting of the alternating disk:
            // (Δ(f)²·g)⊗Δ(f)¹ - Δ(f)²⊗(g·Δ(f)¹)
            //   - (f·Δ(g)¹)⊗Δ(g)² + Δ(g)¹⊗(Δ(g)²·f) = 0
            let mut acc: BTreeMap<(usize, usize), Q> = BTreeMap::new();
            for (u, v, c) in dl(delta, f) {
                for (vg, c2) in mul(cat, v, g) {
                    add2(&mut acc, (vg, u), &c * &c2);
                }
                for (gu, c2) in mul(cat, g, u) {
                    add2(&mut acc, (v, gu), -(&c * &c2));
                }
            }
            for (u, v, c) in dl(delta, g) {
                for (fu, c2) in mul(cat, f, u) {
                    add2(&mut acc, (fu, v), -(&c * &c2));
                }
                for (vf, c2) in mul(cat, v, f) {
                    add2(&mut acc, (u, vf), &c * &c2);
                }
            }
            if !acc.is_empty() {
                eq2 = false;
            }
            for h in 0..n {
                let mut lhs: BTreeMap<usize, Q> = BTreeMap::new();
                let mut rhs: BTreeMap<usize, Q> = BTreeMap::new();
                for (p, c) in mul(cat, f, g) {
                    for (q, c2) in mul(cat, p, h) {
                        let cur = lhs.remove(&q).unwrap_or_else(Q::zero);
                        let nv = cur + &c * &c2;
                        if !nv.is_zero() {
                            lhs.insert(q, nv);
                        }
                    }
                }
                for (p, c) in mul(cat, g, h) {
                    for (q, c2) in mul(cat, f, p) {
                        let cur = rhs.remove(&q).unwrap_or_else(Q::zero);
                        let nv = cur + &c * &c2;
                        if !nv.is_zero() {
                            rhs.insert(q, nv);
                        }
                    }
                }
                if lhs != rhs {
                    assoc = false;
                }
            }
        }
    }
    Ok(InfBialgReport { assoc, coassoc, eq1, eq2 })
}

/// Reads the component of a collection supported on a given unstarred disk
/// shape: zero iff the collection vanishes on that disk.
pub fn component_is_zero(h: &DiskCollection, pols: &[Polarity]) -> bool {
    // compare as multisets up to rotation: check every stored disk whose
    // polarity cycle matches
    for (d, t) in &h.disks {
        if d.len() != pols.len() {
            continue;
        }
        for r in 0..d.len() {
            let rotated: Vec<Polarity> = (0..d.len()).map(|i| d.pols[(i + r) % d.len()]).collect();
            if rotated == pols && !t.is_empty() {
                return false;
            }
        }
    }
    true
}
