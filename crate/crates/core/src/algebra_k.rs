//! The surgery algebra 𝒦 over the idempotent ring I₀ ⊕ I₁.
//!
//! I₀𝒦I₀ = F[W,Z], I₁𝒦I₁ = F[U,T,T⁻¹], I₁𝒦I₀ is spanned by U^i T^j σ and
//! U^i T^j τ, and I₀𝒦I₁ = 0. The σ, τ relations are σW = UT⁻¹σ, σZ = Tσ,
//! τW = T⁻¹τ, τZ = UTτ.

use crate::f2::F2Sum;
use crate::idem::Idem;
use crate::ParseError;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Col {
    Sigma,
    Tau,
}

impl Col {
    pub fn swap(self) -> Col {
        match self {
            Col::Sigma => Col::Tau,
            Col::Tau => Col::Sigma,
        }
    }
}

/// A monomial of 𝒦. The variant fixes the idempotent pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KMono {
    /// W^w Z^z in idempotent (0,0).
    Poly00 { w: u32, z: u32 },
    /// U^u T^t in idempotent (1,1).
    Laurent11 { u: u32, t: i32 },
    /// U^u T^t σ or U^u T^t τ in idempotent (1,0).
    Arrow10 { u: u32, t: i32, col: Col },
}

pub type KElt = F2Sum<KMono>;

impl KMono {
    pub const W: KMono = KMono::Poly00 { w: 1, z: 0 };
    pub const Z: KMono = KMono::Poly00 { w: 0, z: 1 };
    /// U in idempotent 0, i.e. WZ.
    pub const U0: KMono = KMono::Poly00 { w: 1, z: 1 };
    pub const U: KMono = KMono::Laurent11 { u: 1, t: 0 };
    pub const T: KMono = KMono::Laurent11 { u: 0, t: 1 };
    pub const TINV: KMono = KMono::Laurent11 { u: 0, t: -1 };
    pub const SIGMA: KMono = KMono::Arrow10 { u: 0, t: 0, col: Col::Sigma };
    pub const TAU: KMono = KMono::Arrow10 { u: 0, t: 0, col: Col::Tau };

    pub fn unit(e: Idem) -> KMono {
        match e {
            Idem::I0 => KMono::Poly00 { w: 0, z: 0 },
            Idem::I1 => KMono::Laurent11 { u: 0, t: 0 },
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, KMono::Poly00 { w: 0, z: 0 } | KMono::Laurent11 { u: 0, t: 0 })
    }

    pub fn left_idem(&self) -> Idem {
        match self {
            KMono::Poly00 { .. } => Idem::I0,
            _ => Idem::I1,
        }
    }

    pub fn right_idem(&self) -> Idem {
        match self {
            KMono::Laurent11 { .. } => Idem::I1,
            _ => Idem::I0,
        }
    }

    /// Monomial product; `None` when the product vanishes.
    pub fn mul(&self, other: &KMono) -> Option<KMono> {
        use KMono::*;
        match (*self, *other) {
            (Poly00 { w, z }, Poly00 { w: w2, z: z2 }) => Some(Poly00 { w: w + w2, z: z + z2 }),
            (Laurent11 { u, t }, Laurent11 { u: u2, t: t2 }) => Some(Laurent11 { u: u + u2, t: t + t2 }),
            (Laurent11 { u, t }, Arrow10 { u: u2, t: t2, col }) => Some(Arrow10 { u: u + u2, t: t + t2, col }),
            (Arrow10 { u, t, col }, Poly00 { w, z }) => {
                let shift = z as i32 - w as i32;
                let extra = match col {
                    Col::Sigma => w,
                    Col::Tau => z,
                };
                Some(Arrow10 { u: u + extra, t: t + shift, col })
            }
            _ => None,
        }
    }

    /// Word length in the generators W, Z, U, T^±1, σ, τ (with U counted once).
    pub fn degree(&self) -> u32 {
        match *self {
            KMono::Poly00 { w, z } => w + z,
            KMono::Laurent11 { u, t } => u + t.unsigned_abs(),
            KMono::Arrow10 { u, t, .. } => u + t.unsigned_abs() + 1,
        }
    }

    /// Largest i with a = U^i a'. In idempotent 0, U = WZ.
    pub fn wt_u(&self) -> u32 {
        match *self {
            KMono::Poly00 { w, z } => w.min(z),
            KMono::Laurent11 { u, .. } | KMono::Arrow10 { u, .. } => u,
        }
    }

    /// The filtration used to bound the number of homotopy steps:
    /// min(i,j) + |i − j| on W^iZ^j and i + |j| on U^iT^j.
    pub fn filtration(&self) -> u32 {
        match *self {
            KMono::Poly00 { w, z } => w.max(z),
            KMono::Laurent11 { u, t } => u + t.unsigned_abs(),
            KMono::Arrow10 { u, t, .. } => u + t.unsigned_abs() + 1,
        }
    }

    /// Reads a bare U^k as WZ^k when it has to act in idempotent 0.
    pub fn in_idem(self, e: Idem) -> KMono {
        match (self, e) {
            (KMono::Laurent11 { u, t: 0 }, Idem::I0) => KMono::Poly00 { w: u, z: u },
            _ => self,
        }
    }

    /// The elliptic involution W↔Z, σ↔τ, U ↦ U, T ↦ T⁻¹.
    pub fn elliptic(&self) -> KMono {
        match *self {
            KMono::Poly00 { w, z } => KMono::Poly00 { w: z, z: w },
            KMono::Laurent11 { u, t } => KMono::Laurent11 { u, t: -t },
            KMono::Arrow10 { u, t, col } => KMono::Arrow10 { u, t: -t, col: col.swap() },
        }
    }

    /// All monomials of degree at most `max_deg`, in `Ord` order.
    pub fn all_up_to_degree(max_deg: u32) -> Vec<KMono> {
        let mut out = Vec::new();
        let d = max_deg as i32;
        for w in 0..=max_deg {
            for z in 0..=(max_deg - w) {
                out.push(KMono::Poly00 { w, z });
            }
        }
        for u in 0..=max_deg {
            let r = d - u as i32;
            for t in -r..=r {
                out.push(KMono::Laurent11 { u, t });
            }
        }
        if max_deg >= 1 {
            for col in [Col::Sigma, Col::Tau] {
                for u in 0..max_deg {
                    let r = d - 1 - u as i32;
                    for t in -r..=r {
                        out.push(KMono::Arrow10 { u, t, col });
                    }
                }
            }
        }
        out.sort();
        out
    }
}

/// Bilinear product of two sums.
pub fn k_mul(a: &KElt, b: &KElt) -> KElt {
    let mut out = KElt::zero();
    for x in a {
        for y in b {
            if let Some(p) = x.mul(y) {
                out.toggle(p);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KVar {
    U,
    T,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("derivative of {0} is only defined in I₁𝒦I₁")]
pub struct DerivativeError(pub String);

/// Formal partial derivative mod 2 on I₁𝒦I₁.
pub fn k_derivative(a: &KElt, var: KVar) -> Result<KElt, DerivativeError> {
    let mut out = KElt::zero();
    for m in a {
        match *m {
            KMono::Laurent11 { u, t } => match var {
                KVar::U if u % 2 == 1 => out.toggle(KMono::Laurent11 { u: u - 1, t }),
                KVar::T if t.rem_euclid(2) == 1 => out.toggle(KMono::Laurent11 { u, t: t - 1 }),
                _ => {}
            },
            other => return Err(DerivativeError(other.to_string())),
        }
    }
    Ok(out)
}

fn pow(f: &mut fmt::Formatter<'_>, first: &mut bool, name: &str, e: i64) -> fmt::Result {
    if e == 0 {
        return Ok(());
    }
    if !*first {
        write!(f, " ")?;
    }
    *first = false;
    if e == 1 {
        write!(f, "{name}")
    } else {
        write!(f, "{name}^{e}")
    }
}

impl fmt::Display for KMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unit() {
            return write!(f, "{}", self.left_idem());
        }
        let mut first = true;
        match *self {
            KMono::Poly00 { w, z } => {
                pow(f, &mut first, "W", w as i64)?;
                pow(f, &mut first, "Z", z as i64)
            }
            KMono::Laurent11 { u, t } => {
                pow(f, &mut first, "U", u as i64)?;
                pow(f, &mut first, "T", t as i64)
            }
            KMono::Arrow10 { u, t, col } => {
                pow(f, &mut first, "U", u as i64)?;
                pow(f, &mut first, "T", t as i64)?;
                pow(f, &mut first, if col == Col::Sigma { "sigma" } else { "tau" }, 1)
            }
        }
    }
}

/// Parses a single monomial such as `W^2 Z`, `U T^-1 sigma`, `i0`.
///
/// Factors may appear in any composable order and are multiplied left to
/// right. A bare power of U is read in idempotent `hint` when given (U = WZ in
/// idempotent 0); otherwise it lives in idempotent 1. `1` needs a hint.
pub fn parse_kmono(s: &str, hint: Option<Idem>) -> Result<KMono, ParseError> {
    let s = s.trim();
    match s {
        "i0" => return Ok(KMono::unit(Idem::I0)),
        "i1" => return Ok(KMono::unit(Idem::I1)),
        "1" => return hint.map(KMono::unit).ok_or_else(|| ParseError::new(s, "`1` is ambiguous here; write i0 or i1")),
        _ => {}
    }
    let spaced = s.replace('*', " ").replace('σ', " sigma ").replace('τ', " tau ");
    let mut factors = Vec::new();
    for tok in spaced.split_whitespace() {
        let (name, exp) = match tok.split_once('^') {
            Some((n, e)) => {
                let e: i32 = e.parse().map_err(|_| ParseError::new(s, "bad exponent"))?;
                (n, e)
            }
            None => (tok, 1),
        };
        let base = match name {
            "W" => KMono::W,
            "Z" => KMono::Z,
            "U" => KMono::U,
            "T" => KMono::T,
            "sigma" | "s" => KMono::SIGMA,
            "tau" => KMono::TAU,
            _ => return Err(ParseError::new(s, &format!("unknown factor `{name}`"))),
        };
        if exp < 0 && name != "T" {
            return Err(ParseError::new(s, "only T may carry a negative exponent"));
        }
        if (name == "sigma" || name == "s" || name == "tau") && exp != 1 {
            return Err(ParseError::new(s, "sigma and tau cannot be raised to a power"));
        }
        let m = match base {
            KMono::W => KMono::Poly00 { w: exp as u32, z: 0 },
            KMono::Z => KMono::Poly00 { w: 0, z: exp as u32 },
            KMono::U => KMono::Laurent11 { u: exp as u32, t: 0 },
            KMono::T => KMono::Laurent11 { u: 0, t: exp },
            other => other,
        };
        factors.push(m);
    }
    if factors.is_empty() {
        return Err(ParseError::new(s, "empty monomial"));
    }
    // Only-U products are ambiguous between the two idempotents.
    let only_u = factors.iter().all(|m| matches!(m, KMono::Laurent11 { t: 0, .. }));
    if only_u {
        let u: u32 = factors.iter().map(|m| m.wt_u()).sum();
        let m = KMono::Laurent11 { u, t: 0 };
        return Ok(m.in_idem(hint.unwrap_or(Idem::I1)));
    }
    let mut acc = factors[0];
    for (i, next) in factors.iter().enumerate().skip(1) {
        let mut next = *next;
        // U next to idempotent-0 factors means WZ.
        if matches!(next, KMono::Laurent11 { t: 0, .. }) && acc.right_idem() == Idem::I0 {
            next = next.in_idem(Idem::I0);
        }
        if matches!(acc, KMono::Laurent11 { t: 0, .. }) && i == 1 && next.left_idem() == Idem::I0 {
            acc = acc.in_idem(Idem::I0);
        }
        acc = acc.mul(&next).ok_or_else(|| ParseError::new(s, "factors are not composable"))?;
    }
    Ok(acc)
}

/// Parses a `+`-separated sum of monomials.
pub fn parse_kelt(s: &str, hint: Option<Idem>) -> Result<KElt, ParseError> {
    let s = s.trim();
    if s == "0" {
        return Ok(KElt::zero());
    }
    s.split('+').map(|t| parse_kmono(t, hint)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> KMono {
        parse_kmono(s, None).unwrap()
    }

    #[test]
    fn sigma_w() {
        assert_eq!(KMono::SIGMA.mul(&KMono::W), Some(p("U T^-1 sigma")));
    }

    #[test]
    fn polynomial_product() {
        assert_eq!(p("W^2 Z").mul(&p("W Z^3")), Some(p("W^3 Z^4")));
    }

    #[test]
    fn tau_z() {
        assert_eq!(KMono::TAU.mul(&KMono::Z), Some(p("U T tau")));
    }

    #[test]
    fn sigma_w2z3_by_iterating_generators() {
        // Oracle: apply σW = UT⁻¹σ twice and σZ = Tσ three times by hand.
        let mut acc = KMono::SIGMA;
        for g in [KMono::W, KMono::W, KMono::Z, KMono::Z, KMono::Z] {
            acc = acc.mul(&g).unwrap();
        }
        assert_eq!(acc, p("U^2 T sigma"));
        assert_eq!(KMono::SIGMA.mul(&p("W^2 Z^3")), Some(acc));
    }

    #[test]
    fn crossing_products_vanish() {
        assert_eq!(KMono::W.mul(&KMono::SIGMA), None);
        assert_eq!(KMono::SIGMA.mul(&KMono::T), None);
        assert_eq!(KMono::SIGMA.mul(&KMono::TAU), None);
    }

    #[test]
    fn derivatives() {
        let d = |s: &str, v| k_derivative(&KElt::term(p(s)), v).unwrap();
        assert_eq!(d("U^3 T", KVar::U), KElt::term(p("U^2 T")));
        assert!(d("U^2 T", KVar::U).is_zero());
        assert_eq!(d("U T^-1", KVar::T), KElt::term(p("U T^-2")));
        assert!(k_derivative(&KElt::term(KMono::SIGMA), KVar::U).is_err());
    }

    #[test]
    fn wt_u_examples() {
        assert_eq!(p("W^3 Z").wt_u(), 1);
        assert_eq!(p("U^2 T^-5").wt_u(), 2);
        assert_eq!(KMono::SIGMA.wt_u(), 0);
    }

    #[test]
    fn unit_laws() {
        for m in KMono::all_up_to_degree(4) {
            for e in Idem::BOTH {
                let u = KMono::unit(e);
                let expect_left = if m.left_idem() == e { Some(m) } else { None };
                let expect_right = if m.right_idem() == e { Some(m) } else { None };
                assert_eq!(u.mul(&m), expect_left);
                assert_eq!(m.mul(&u), expect_right);
            }
        }
    }

    #[test]
    fn associativity_exhaustive_degree_8() {
        let monos = KMono::all_up_to_degree(8);
        for a in &monos {
            for b in &monos {
                if a.degree() + b.degree() > 8 {
                    continue;
                }
                let Some(ab) = a.mul(b) else { continue };
                for c in &monos {
                    if a.degree() + b.degree() + c.degree() > 8 {
                        continue;
                    }
                    let lhs = ab.mul(c);
                    let rhs = b.mul(c).and_then(|bc| a.mul(&bc));
                    assert_eq!(lhs, rhs, "({a})({b})({c})");
                }
            }
        }
    }

    #[test]
    fn wt_u_superadditive_degree_8() {
        let monos = KMono::all_up_to_degree(8);
        for a in &monos {
            for b in &monos {
                if a.degree() + b.degree() > 8 {
                    continue;
                }
                if let Some(ab) = a.mul(b) {
                    assert!(ab.wt_u() >= a.wt_u() + b.wt_u(), "{a} * {b}");
                }
            }
        }
    }

    #[test]
    fn print_parse_roundtrip() {
        for m in KMono::all_up_to_degree(5) {
            let hint = Some(m.left_idem());
            assert_eq!(parse_kmono(&m.to_string(), hint).unwrap(), m, "{m}");
        }
    }

    #[test]
    fn bare_u_follows_hint() {
        assert_eq!(parse_kmono("U", Some(Idem::I0)).unwrap(), KMono::U0);
        assert_eq!(parse_kmono("U", None).unwrap(), KMono::U);
        assert_eq!(parse_kmono("U Z", None).unwrap(), p("W Z^2"));
    }

    #[test]
    fn elliptic_is_an_involutive_morphism() {
        let monos = KMono::all_up_to_degree(5);
        for a in &monos {
            assert_eq!(a.elliptic().elliptic(), *a);
            for b in &monos {
                assert_eq!(a.mul(b).map(|m| m.elliptic()), a.elliptic().mul(&b.elliptic()));
            }
        }
    }

    fn arb_mono() -> impl Strategy<Value = KMono> {
        prop_oneof![
            (0u32..6, 0u32..6).prop_map(|(w, z)| KMono::Poly00 { w, z }),
            (0u32..6, -6i32..6).prop_map(|(u, t)| KMono::Laurent11 { u, t }),
            (0u32..6, -6i32..6, any::<bool>()).prop_map(|(u, t, s)| KMono::Arrow10 {
                u,
                t,
                col: if s { Col::Sigma } else { Col::Tau }
            }),
        ]
    }

    proptest! {
        #[test]
        fn degree_is_additive_on_polynomials(a in arb_mono(), b in arb_mono()) {
            if let Some(ab) = a.mul(&b) {
                if matches!(a, KMono::Poly00 { .. }) {
                    prop_assert_eq!(ab.degree(), a.degree() + b.degree());
                }
                prop_assert_eq!(ab.left_idem(), a.left_idem());
                prop_assert_eq!(ab.right_idem(), b.right_idem());
            }
        }

        #[test]
        fn product_defined_iff_idempotents_compose(a in arb_mono(), b in arb_mono()) {
            prop_assert_eq!(a.mul(&b).is_some(), a.right_idem() == b.left_idem());
        }
    }
}
