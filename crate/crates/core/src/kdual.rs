//! The Koszul dual 𝒦^!, a curved dg-algebra, and its A∞ model 𝒦^!_∞.
//!
//! Basis monomials are kept in normal form: alternating words in w, z (or in
//! φ₊, φ₋) with an optional central θ written last, and the eight bridge
//! elements s, sφ₊, sθ, sφ₊θ, t, tφ₋, tθ, tφ₋θ in I₀𝒦^!I₁.

use crate::f2::F2Sum;
use crate::idem::Idem;
use crate::ParseError;
use std::collections::HashMap;
use std::fmt;

/// Letters of I₀𝒦^!I₀.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Wz {
    W,
    Z,
}

impl Wz {
    pub fn other(self) -> Wz {
        match self {
            Wz::W => Wz::Z,
            Wz::Z => Wz::W,
        }
    }
}

/// Letters of I₁𝒦^!I₁.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phi {
    Plus,
    Minus,
}

impl Phi {
    pub fn other(self) -> Phi {
        match self {
            Phi::Plus => Phi::Minus,
            Phi::Minus => Phi::Plus,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum St {
    S,
    T,
}

impl St {
    /// The φ that may follow this letter: sφ₊ = zs, tφ₋ = wt.
    pub fn phi(self) -> Phi {
        match self {
            St::S => Phi::Plus,
            St::T => Phi::Minus,
        }
    }

    /// The idempotent-0 letter that may precede it.
    pub fn partner(self) -> Wz {
        match self {
            St::S => Wz::Z,
            St::T => Wz::W,
        }
    }
}

/// A monomial of 𝒦^!. `len == 0` words are the idempotents; their `first`
/// field is normalized to `W` / `Plus`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DualMono {
    Word00 { first: Wz, len: u32, th: bool },
    Word11 { first: Phi, len: u32, th: bool },
    Bridge01 { letter: St, phi: bool, th: bool },
}

pub type DualElt = F2Sum<DualMono>;

fn last_of<L: Copy + PartialEq>(first: L, other: L, len: u32) -> L {
    if len % 2 == 1 {
        first
    } else {
        other
    }
}

impl DualMono {
    pub fn unit(e: Idem) -> DualMono {
        match e {
            Idem::I0 => DualMono::Word00 { first: Wz::W, len: 0, th: false },
            Idem::I1 => DualMono::Word11 { first: Phi::Plus, len: 0, th: false },
        }
    }

    pub fn theta(e: Idem) -> DualMono {
        DualMono::unit(e).with_theta(true).unwrap()
    }

    pub fn w() -> DualMono {
        DualMono::Word00 { first: Wz::W, len: 1, th: false }
    }

    pub fn z() -> DualMono {
        DualMono::Word00 { first: Wz::Z, len: 1, th: false }
    }

    pub fn s() -> DualMono {
        DualMono::Bridge01 { letter: St::S, phi: false, th: false }
    }

    pub fn t() -> DualMono {
        DualMono::Bridge01 { letter: St::T, phi: false, th: false }
    }

    pub fn phi(p: Phi) -> DualMono {
        DualMono::Word11 { first: p, len: 1, th: false }
    }

    pub fn word00(first: Wz, len: u32, th: bool) -> DualMono {
        let first = if len == 0 { Wz::W } else { first };
        DualMono::Word00 { first, len, th }
    }

    pub fn word11(first: Phi, len: u32, th: bool) -> DualMono {
        let first = if len == 0 { Phi::Plus } else { first };
        DualMono::Word11 { first, len, th }
    }

    pub fn left_idem(&self) -> Idem {
        match self {
            DualMono::Word11 { .. } => Idem::I1,
            _ => Idem::I0,
        }
    }

    pub fn right_idem(&self) -> Idem {
        match self {
            DualMono::Word00 { .. } => Idem::I0,
            _ => Idem::I1,
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, DualMono::Word00 { len: 0, th: false, .. } | DualMono::Word11 { len: 0, th: false, .. })
    }

    pub fn has_theta(&self) -> bool {
        match *self {
            DualMono::Word00 { th, .. } | DualMono::Word11 { th, .. } | DualMono::Bridge01 { th, .. } => th,
        }
    }

    /// Sets or clears the θ flag; `None` when asked to set an existing θ (θ² = 0).
    pub fn with_theta(self, on: bool) -> Option<DualMono> {
        if on && self.has_theta() {
            return None;
        }
        Some(match self {
            DualMono::Word00 { first, len, .. } => DualMono::Word00 { first, len, th: on },
            DualMono::Word11 { first, len, .. } => DualMono::Word11 { first, len, th: on },
            DualMono::Bridge01 { letter, phi, .. } => DualMono::Bridge01 { letter, phi, th: on },
        })
    }

    /// Number of letters, counting θ and the trailing φ of a bridge element.
    pub fn length(&self) -> u32 {
        let th = self.has_theta() as u32;
        match *self {
            DualMono::Word00 { len, .. } | DualMono::Word11 { len, .. } => len + th,
            DualMono::Bridge01 { phi, .. } => 1 + phi as u32 + th,
        }
    }

    /// Algebraic grading: minus the number of factors.
    pub fn gr_alg(&self) -> i32 {
        -(self.length() as i32)
    }

    pub fn wt_theta(&self) -> u32 {
        self.has_theta() as u32
    }

    pub fn mul(&self, o: &DualMono) -> Option<DualMono> {
        use DualMono::*;
        if self.right_idem() != o.left_idem() {
            return None;
        }
        if self.has_theta() && o.has_theta() {
            return None;
        }
        let th = self.has_theta() || o.has_theta();
        match (*self, *o) {
            (Word00 { first: f1, len: l1, .. }, Word00 { first: f2, len: l2, .. }) => {
                if l1 == 0 {
                    return Some(DualMono::word00(f2, l2, th));
                }
                if l2 == 0 {
                    return Some(DualMono::word00(f1, l1, th));
                }
                let last = last_of(f1, f1.other(), l1);
                (last != f2).then(|| DualMono::word00(f1, l1 + l2, th))
            }
            (Word11 { first: f1, len: l1, .. }, Word11 { first: f2, len: l2, .. }) => {
                if l1 == 0 {
                    return Some(DualMono::word11(f2, l2, th));
                }
                if l2 == 0 {
                    return Some(DualMono::word11(f1, l1, th));
                }
                let last = last_of(f1, f1.other(), l1);
                (last != f2).then(|| DualMono::word11(f1, l1 + l2, th))
            }
            (Word00 { first, len, .. }, Bridge01 { letter, phi, .. }) => {
                if len == 0 {
                    Some(Bridge01 { letter, phi, th })
                } else if len == 1 && !phi && first == letter.partner() {
                    Some(Bridge01 { letter, phi: true, th })
                } else {
                    None
                }
            }
            (Bridge01 { letter, phi, .. }, Word11 { first, len, .. }) => {
                if len == 0 {
                    Some(Bridge01 { letter, phi, th })
                } else if len == 1 && !phi && first == letter.phi() {
                    Some(Bridge01 { letter, phi: true, th })
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// The differential: μ₁(θ) = wz + zw in idempotent 0, extended by Leibniz.
    /// θ in idempotent 1 or on a bridge element contributes 0.
    pub fn mu1(&self) -> DualElt {
        let mut out = DualElt::zero();
        if let DualMono::Word00 { first, len, th: true } = *self {
            let u = DualMono::word00(first, len, false);
            for f in [Wz::W, Wz::Z] {
                if let Some(p) = u.mul(&DualMono::word00(f, 2, false)) {
                    out.toggle(p);
                }
            }
        }
        out
    }

    /// Reverse of the letter sequence for dividing from the left: returns the
    /// letters of the normal form in order, θ last.
    pub fn letters(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        match *self {
            DualMono::Word00 { first, len, .. } => {
                let mut c = first;
                for _ in 0..len {
                    v.push(if c == Wz::W { "w" } else { "z" });
                    c = c.other();
                }
            }
            DualMono::Word11 { first, len, .. } => {
                let mut c = first;
                for _ in 0..len {
                    v.push(if c == Phi::Plus { "f+" } else { "f-" });
                    c = c.other();
                }
            }
            DualMono::Bridge01 { letter, phi, .. } => {
                v.push(if letter == St::S { "s" } else { "t" });
                if phi {
                    v.push(if letter == St::S { "f+" } else { "f-" });
                }
            }
        }
        if self.has_theta() {
            v.push("th");
        }
        v
    }

    /// The involution w↔z, s↔t, φ₊↔φ₋, θ ↦ θ.
    pub fn elliptic(&self) -> DualMono {
        match *self {
            DualMono::Word00 { first, len, th } => DualMono::word00(first.other(), len, th),
            DualMono::Word11 { first, len, th } => DualMono::word11(first.other(), len, th),
            DualMono::Bridge01 { letter, phi, th } => {
                DualMono::Bridge01 { letter: if letter == St::S { St::T } else { St::S }, phi, th }
            }
        }
    }

    /// All monomials with at most `max_len` letters, in `Ord` order.
    pub fn all_up_to_length(max_len: u32) -> Vec<DualMono> {
        let mut out = Vec::new();
        for th in [false, true] {
            for len in 0..=max_len {
                if len + th as u32 > max_len {
                    continue;
                }
                let firsts: &[usize] = if len == 0 { &[0] } else { &[0, 1] };
                for &f in firsts {
                    out.push(DualMono::word00([Wz::W, Wz::Z][f], len, th));
                    out.push(DualMono::word11([Phi::Plus, Phi::Minus][f], len, th));
                }
            }
            for letter in [St::S, St::T] {
                for phi in [false, true] {
                    let m = DualMono::Bridge01 { letter, phi, th };
                    if m.length() <= max_len {
                        out.push(m);
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Left division: all y' with self · y' = y.
    pub fn left_quotients(&self, y: &DualMono) -> Vec<DualMono> {
        quotients(y, |c| self.mul(c))
    }

    /// Right division: all y' with y' · self = y.
    pub fn right_quotients(&self, y: &DualMono) -> Vec<DualMono> {
        quotients(y, |c| c.mul(self))
    }
}

/// Candidates for a quotient of `y` are the monomials not longer than `y`
/// with compatible idempotents; the filter keeps those whose product is `y`.
fn quotients<F: Fn(&DualMono) -> Option<DualMono>>(y: &DualMono, prod: F) -> Vec<DualMono> {
    let mut out = Vec::new();
    for c in candidates_up_to(y.length()) {
        if prod(&c) == Some(*y) {
            out.push(c);
        }
    }
    out
}

fn candidates_up_to(len: u32) -> Vec<DualMono> {
    thread_local! {
        static CACHE: std::cell::RefCell<HashMap<u32, std::rc::Rc<Vec<DualMono>>>> = Default::default();
    }
    let v = CACHE.with(|c| {
        c.borrow_mut().entry(len).or_insert_with(|| std::rc::Rc::new(DualMono::all_up_to_length(len))).clone()
    });
    (*v).clone()
}

/// Bilinear product.
pub fn kdual_mul(a: &DualElt, b: &DualElt) -> DualElt {
    let mut out = DualElt::zero();
    for x in a {
        for y in b {
            if let Some(p) = x.mul(y) {
                out.toggle(p);
            }
        }
    }
    out
}

pub fn kdual_mu1(a: &DualElt) -> DualElt {
    a.map_linear(|m| m.mu1())
}

/// The curvature φ₊φ₋ + φ₋φ₊ (it lives in idempotent 1).
pub fn kdual_mu0() -> DualElt {
    [DualMono::word11(Phi::Plus, 2, false), DualMono::word11(Phi::Minus, 2, false)].into_iter().collect()
}

/// The curvature in idempotent `e`.
pub fn mu0_at(e: Idem) -> DualElt {
    match e {
        Idem::I0 => DualElt::zero(),
        Idem::I1 => kdual_mu0(),
    }
}

impl fmt::Display for DualMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unit() {
            return write!(f, "{}", self.left_idem());
        }
        write!(f, "{}", self.letters().join("."))
    }
}

/// Parses a monomial in the `.`-separated letter syntax (`z.s.th`, `f+.f-`).
/// Left-form aliases such as `z.s` or `th.s` normalize. A word made only of θ
/// (or `1`) takes its idempotent from `hint`, defaulting to 0.
pub fn parse_dual(s: &str, hint: Option<Idem>) -> Result<DualMono, ParseError> {
    let s = s.trim();
    match s {
        "i0" => return Ok(DualMono::unit(Idem::I0)),
        "i1" => return Ok(DualMono::unit(Idem::I1)),
        _ => {}
    }
    let mut thetas = 0;
    let mut acc: Option<DualMono> = None;
    for tok in s.split(['.', ' ']).filter(|t| !t.is_empty()) {
        let m = match tok {
            "w" => DualMono::w(),
            "z" => DualMono::z(),
            "s" => DualMono::s(),
            "t" => DualMono::t(),
            "f+" | "φ₊" => DualMono::phi(Phi::Plus),
            "f-" | "φ₋" => DualMono::phi(Phi::Minus),
            "th" | "θ" => {
                thetas += 1;
                continue;
            }
            "1" => continue,
            _ => return Err(ParseError::new(s, &format!("unknown letter `{tok}`"))),
        };
        acc = Some(match acc {
            None => m,
            Some(a) => a.mul(&m).ok_or_else(|| ParseError::new(s, "product vanishes"))?,
        });
    }
    if thetas > 1 {
        return Err(ParseError::new(s, "product vanishes (θ² = 0)"));
    }
    let base = acc.unwrap_or_else(|| DualMono::unit(hint.unwrap_or(Idem::I0)));
    base.with_theta(thetas == 1).ok_or_else(|| ParseError::new(s, "product vanishes"))
}

pub fn parse_dual_elt(s: &str, hint: Option<Idem>) -> Result<DualElt, ParseError> {
    let s = s.trim();
    if s == "0" {
        return Ok(DualElt::zero());
    }
    s.split('+')
        .map(|t| t.trim())
        // `f+` contains a plus sign; re-glue those fragments.
        .collect::<Vec<_>>()
        .join("+")
        .replace("f+", "f\u{1}")
        .split('+')
        .map(|t| parse_dual(&t.replace('\u{1}', "+"), hint))
        .collect()
}

// ---------------------------------------------------------------------------
// The A∞ model 𝒦^!_∞ and the retraction 𝒦^! → 𝒦^!_∞.

/// Basis predicate for 𝒦^!_∞: in idempotent 0 only 1, w, z and the single
/// 2-letter word (stored as `wz`), without θ.
pub fn is_kinf_basis(m: &DualMono) -> bool {
    match *m {
        DualMono::Word00 { first, len, th } => !th && (len < 2 || (len == 2 && first == Wz::W)),
        _ => true,
    }
}

pub fn kinf_basis_up_to_length(max_len: u32) -> Vec<DualMono> {
    DualMono::all_up_to_length(max_len).into_iter().filter(is_kinf_basis).collect()
}

/// I: 𝒦^!_∞ → 𝒦^!, sending wz to zw and fixing everything else.
pub fn sdr_inc(m: &DualMono) -> DualElt {
    match *m {
        DualMono::Word00 { len: 2, th: false, .. } => DualElt::term(DualMono::word00(Wz::Z, 2, false)),
        _ => DualElt::term(*m),
    }
}

/// Π: 𝒦^! → 𝒦^!_∞.
pub fn sdr_proj(m: &DualMono) -> DualElt {
    match *m {
        DualMono::Word00 { th: true, .. } => DualElt::zero(),
        DualMono::Word00 { len, .. } if len > 2 => DualElt::zero(),
        DualMono::Word00 { len: 2, .. } => DualElt::term(DualMono::word00(Wz::W, 2, false)),
        _ => DualElt::term(*m),
    }
}

/// H: 𝒦^! → 𝒦^!. Removes the last two letters of an idempotent-0 word and
/// adds θ, except on zw itself; zero on θ-multiples and off idempotent 0.
pub fn sdr_homotopy(m: &DualMono) -> DualElt {
    match *m {
        DualMono::Word00 { first, len, th: false } if len >= 2 => {
            if len == 2 && first == Wz::Z {
                DualElt::zero()
            } else {
                DualElt::term(DualMono::word00(first, len - 2, true))
            }
        }
        _ => DualElt::zero(),
    }
}

/// μ₃ of 𝒦^!_∞: μ₃(aw, z, c) = a·c·θ for c a multiple of s or t, plus the
/// single extra term μ₃(w, wz, t) = tφ₋θ that the transfer produces and the
/// A∞ relations on (w, z, w, t) require. Zero on all other basis triples.
pub fn kdualinf_mu3(a: &DualMono, b: &DualMono, c: &DualMono) -> DualElt {
    let z = DualMono::z();
    if !matches!(c, DualMono::Bridge01 { .. }) {
        return DualElt::zero();
    }
    let wz = DualMono::word00(Wz::W, 2, false);
    if *a == DualMono::w() && *b == wz && *c == DualMono::t() {
        return DualElt::term(DualMono::Bridge01 { letter: St::T, phi: true, th: true });
    }
    if *b != z {
        return DualElt::zero();
    }
    // a = a'·w inside Λ*(w,z): a' = 1 for a = w, a' = z for a = wz = zw.
    let a_prime = match *a {
        DualMono::Word00 { len: 1, first: Wz::W, th: false } => DualMono::unit(Idem::I0),
        DualMono::Word00 { len: 2, th: false, .. } => z,
        _ => return DualElt::zero(),
    };
    a_prime.mul(c).and_then(|p| p.with_theta(true)).map(DualElt::term).unwrap_or_default()
}

/// μ₂ of 𝒦^!_∞, i.e. Π(I(a)·I(b)).
pub fn kinf_mu2(a: &DualMono, b: &DualMono) -> DualElt {
    let prod = kdual_mul(&sdr_inc(a), &sdr_inc(b));
    prod.map_linear(sdr_proj)
}

/// The transferred operation μ_n on 𝒦^!_∞ (n ≥ 2) from the tree formula:
/// include the inputs, repeatedly apply H∘μ₂ to consecutive factors, and finish
/// with Π∘μ₂. 𝒦^! has no μ_n for n ≥ 3; curvature leaves only feed μ₀ and μ₁
/// terms because H vanishes in idempotent 1, so they never reach n ≥ 2.
pub fn hpl_transfer_mu(inputs: &[DualMono]) -> DualElt {
    let n = inputs.len();
    if n < 2 {
        return match n {
            1 => sdr_inc(&inputs[0]).map_linear(|m| m.mu1()).map_linear(sdr_proj),
            _ => DualElt::zero(),
        };
    }
    let mut memo: HashMap<(usize, usize), DualElt> = HashMap::new();
    let top = tree_sum(inputs, 0, n, &mut memo);
    top.map_linear(sdr_proj)
}

/// Sum over binary trees on inputs[lo..hi] of the μ₂-composite, without the
/// final projection or homotopy.
fn tree_sum(inputs: &[DualMono], lo: usize, hi: usize, memo: &mut HashMap<(usize, usize), DualElt>) -> DualElt {
    if let Some(v) = memo.get(&(lo, hi)) {
        return v.clone();
    }
    let mut out = DualElt::zero();
    for mid in lo + 1..hi {
        let left = subtree(inputs, lo, mid, memo);
        if left.is_zero() {
            continue;
        }
        let right = subtree(inputs, mid, hi, memo);
        out.add_sum(kdual_mul(&left, &right));
    }
    memo.insert((lo, hi), out.clone());
    out
}

fn subtree(inputs: &[DualMono], lo: usize, hi: usize, memo: &mut HashMap<(usize, usize), DualElt>) -> DualElt {
    if hi - lo == 1 {
        sdr_inc(&inputs[lo])
    } else {
        tree_sum(inputs, lo, hi, memo).map_linear(sdr_homotopy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> DualMono {
        parse_dual(s, None).unwrap()
    }

    fn e(s: &str) -> DualElt {
        DualElt::term(p(s))
    }

    #[test]
    fn z_times_s() {
        assert_eq!(p("z").mul(&p("s")), Some(p("s.f+")));
        assert_eq!(p("z.s"), p("s.f+"));
    }

    #[test]
    fn w_times_s_vanishes() {
        assert_eq!(p("w").mul(&p("s")), None);
        assert_eq!(p("z").mul(&p("t")), None);
        assert_eq!(p("s").mul(&p("f-")), None);
        assert_eq!(p("t").mul(&p("f+")), None);
    }

    #[test]
    fn theta_moves_right() {
        assert_eq!(p("w.th").mul(&p("z.w")), Some(p("w.z.w.th")));
        assert_eq!(p("th.s"), p("s.th"));
        assert_eq!(p("th.z.s"), p("s.f+.th"));
    }

    #[test]
    fn bridge_basis_has_eight_elements() {
        let n = DualMono::all_up_to_length(10).into_iter().filter(|m| matches!(m, DualMono::Bridge01 { .. })).count();
        assert_eq!(n, 8);
    }

    #[test]
    fn mu1_examples() {
        let th0 = DualMono::theta(Idem::I0);
        assert_eq!(th0.mu1(), e("w.z") + e("z.w"));
        assert_eq!(p("w.th").mu1(), e("w.z.w"));
        assert!(p("f+.f-.th").mu1().is_zero());
        assert!(p("s.th").mu1().is_zero());
        assert!(p("th.s").mu1().is_zero());
    }

    #[test]
    fn mu0_value_and_centrality() {
        let mu0 = kdual_mu0();
        assert_eq!(mu0, e("f+.f-") + e("f-.f+"));
        for b in DualMono::all_up_to_length(4).into_iter().filter(|m| matches!(m, DualMono::Bridge01 { .. })) {
            assert!(kdual_mul(&DualElt::term(b), &mu0).is_zero(), "{b}");
        }
        let f = e("f+");
        assert_eq!(kdual_mul(&mu0, &f), kdual_mul(&f, &mu0));
    }

    #[test]
    fn gr_alg_examples() {
        assert_eq!(p("s.th").gr_alg(), -2);
        assert_eq!(p("f+.f-.f+.th").gr_alg(), -4);
        assert_eq!(DualMono::unit(Idem::I0).gr_alg(), 0);
        assert_eq!(p("z.s.th").gr_alg(), -3);
    }

    #[test]
    fn wt_theta_examples() {
        assert_eq!(p("w.z.th").wt_theta(), 1);
        assert_eq!(p("z.s").wt_theta(), 0);
        assert_eq!(p("th").wt_theta(), 1);
    }

    #[test]
    fn mu3_examples() {
        assert_eq!(kdualinf_mu3(&p("w"), &p("z"), &p("s")), e("s.th"));
        assert!(kdualinf_mu3(&p("z"), &p("w"), &p("s")).is_zero());
        assert_eq!(kdualinf_mu3(&p("w"), &p("z"), &p("t.f-")), e("t.th.f-"));
    }

    #[test]
    fn associativity_length_5() {
        let monos = DualMono::all_up_to_length(5);
        for a in &monos {
            for b in &monos {
                if a.length() + b.length() > 5 {
                    continue;
                }
                for c in &monos {
                    if a.length() + b.length() + c.length() > 5 {
                        continue;
                    }
                    let lhs = a.mul(b).and_then(|ab| ab.mul(c));
                    let rhs = b.mul(c).and_then(|bc| a.mul(&bc));
                    assert_eq!(lhs, rhs, "({a})({b})({c})");
                }
            }
        }
    }

    #[test]
    fn curved_dg_axioms() {
        let monos = DualMono::all_up_to_length(6);
        let mu0 = kdual_mu0();
        assert!(kdual_mu1(&mu0).is_zero());
        for a in &monos {
            assert!(kdual_mu1(&a.mu1()).is_zero(), "μ₁² on {a}");
            if a.length() <= 5 {
                let ea = DualElt::term(*a);
                assert_eq!(kdual_mul(&mu0, &ea), kdual_mul(&ea, &mu0), "centrality on {a}");
            }
        }
        // Leibniz rule.
        for a in &monos {
            for b in &monos {
                if a.length() + b.length() > 6 {
                    continue;
                }
                let ab = a.mul(b).map(DualElt::term).unwrap_or_default();
                let lhs = kdual_mu1(&ab);
                let rhs = kdual_mul(&a.mu1(), &DualElt::term(*b)) + kdual_mul(&DualElt::term(*a), &b.mu1());
                assert_eq!(lhs, rhs, "Leibniz on {a}, {b}");
            }
        }
    }

    #[test]
    fn sdr_identities() {
        for m in kinf_basis_up_to_length(6) {
            assert_eq!(sdr_inc(&m).map_linear(sdr_proj), DualElt::term(m), "ΠI on {m}");
        }
        for m in DualMono::all_up_to_length(6) {
            let lhs = sdr_proj(&m).map_linear(sdr_inc) + DualElt::term(m);
            let d_h = sdr_homotopy(&m).map_linear(|x| x.mu1());
            let h_d = m.mu1().map_linear(sdr_homotopy);
            assert_eq!(lhs, d_h + h_d, "IΠ + id = dH + Hd on {m}");
            assert!(sdr_homotopy(&m).map_linear(sdr_homotopy).is_zero());
            assert!(sdr_homotopy(&m).map_linear(sdr_proj).is_zero());
        }
        for m in kinf_basis_up_to_length(6) {
            assert!(sdr_inc(&m).map_linear(sdr_homotopy).is_zero());
        }
    }

    #[test]
    fn transfer_reproduces_mu2_on_exterior_algebra() {
        assert_eq!(kinf_mu2(&p("w"), &p("z")), e("w.z"));
        assert_eq!(kinf_mu2(&p("z"), &p("w")), e("w.z"));
        assert!(kinf_mu2(&p("w"), &p("w.z")).is_zero());
    }

    #[test]
    fn transfer_reproduces_mu3_on_small_inputs() {
        let basis = kinf_basis_up_to_length(3);
        for a in &basis {
            for b in &basis {
                for c in &basis {
                    if a.right_idem() != b.left_idem() || b.right_idem() != c.left_idem() {
                        continue;
                    }
                    assert_eq!(hpl_transfer_mu(&[*a, *b, *c]), kdualinf_mu3(a, b, c), "μ₃({a},{b},{c})");
                }
            }
        }
    }

    fn kinf_op(v: &[DualMono]) -> DualElt {
        match v.len() {
            2 => kinf_mu2(&v[0], &v[1]),
            3 => kdualinf_mu3(&v[0], &v[1], &v[2]),
            _ => DualElt::zero(),
        }
    }

    /// Σ μ(…, μ(…), …) over all nestings, with curvature insertions.
    fn ainf_relation(v: &[DualMono]) -> DualElt {
        let n = v.len();
        let mut out = DualElt::zero();
        for i in 0..=n {
            for j in i..=n {
                let inner = if j == i {
                    let e = if i < n { v[i].left_idem() } else { v[n - 1].right_idem() };
                    mu0_at(e)
                } else {
                    kinf_op(&v[i..j])
                };
                for m in &inner {
                    let mut w = v[..i].to_vec();
                    w.push(*m);
                    w.extend_from_slice(&v[j..]);
                    out.add_sum(kinf_op(&w));
                }
            }
        }
        out
    }

    #[test]
    fn kinf_satisfies_curved_ainf_relations() {
        let basis: Vec<_> = kinf_basis_up_to_length(3).into_iter().filter(|m| !m.is_unit()).collect();
        let mut stack: Vec<Vec<DualMono>> = basis.iter().map(|m| vec![*m]).collect();
        while let Some(v) = stack.pop() {
            assert!(ainf_relation(&v).is_zero(), "{v:?}");
            if v.len() < 4 {
                for m in &basis {
                    if v.last().unwrap().right_idem() == m.left_idem() {
                        let mut w = v.clone();
                        w.push(*m);
                        stack.push(w);
                    }
                }
            }
        }
    }

    #[test]
    fn transfer_has_no_higher_operations() {
        let basis = kinf_basis_up_to_length(3);
        for a in &basis {
            for b in &basis {
                for c in &basis {
                    for d in &basis {
                        let v = [*a, *b, *c, *d];
                        if v.windows(2).all(|p| p[0].right_idem() == p[1].left_idem()) {
                            assert!(hpl_transfer_mu(&v).is_zero(), "μ₄{v:?}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn left_division() {
        assert_eq!(p("s").left_quotients(&p("s.th")), vec![DualMono::theta(Idem::I1)]);
        assert_eq!(DualMono::theta(Idem::I0).left_quotients(&p("s.th")), vec![p("s")]);
        assert!(p("f+").left_quotients(&DualMono::unit(Idem::I1)).is_empty());
        assert_eq!(p("z").left_quotients(&p("z.s")), vec![p("s")]);
    }

    #[test]
    fn print_parse_roundtrip() {
        for m in DualMono::all_up_to_length(6) {
            assert_eq!(parse_dual(&m.to_string(), Some(m.left_idem())).unwrap(), m, "{m}");
        }
    }

    #[test]
    fn sums_with_f_plus_parse() {
        let s = parse_dual_elt("f+.f- + f-.f+", None).unwrap();
        assert_eq!(s, kdual_mu0());
    }

    fn arb_dual() -> impl Strategy<Value = DualMono> {
        let all = DualMono::all_up_to_length(5);
        (0..all.len()).prop_map(move |i| all[i])
    }

    proptest! {
        #[test]
        fn elliptic_is_an_involutive_morphism(a in arb_dual(), b in arb_dual()) {
            prop_assert_eq!(a.elliptic().elliptic(), a);
            prop_assert_eq!(a.mul(&b).map(|m| m.elliptic()), a.elliptic().mul(&b.elliptic()));
            prop_assert_eq!(
                a.mu1().map_linear(|m| DualElt::term(m.elliptic())),
                a.elliptic().mu1()
            );
        }

        #[test]
        fn gr_alg_additive(a in arb_dual(), b in arb_dual()) {
            if let Some(ab) = a.mul(&b) {
                prop_assert_eq!(ab.gr_alg(), a.gr_alg() + b.gr_alg());
            }
        }
    }
}
