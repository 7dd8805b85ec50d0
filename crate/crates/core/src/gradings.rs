//! Maslov/Alexander bigradings and the groupoid grading by affine maps of ℚ².

use crate::algebra_k::{Col, KMono};
use crate::idem::Idem;
use crate::kdual::{DualMono, Phi, St, Wz};
use num_rational::Ratio;
use num_traits::{One, Zero};
use std::fmt;

pub type Q = Ratio<i64>;

fn q(n: i64) -> Q {
    Q::from_integer(n)
}

/// A pair of rationals: (gr_w, gr_z) in idempotent 0, (gr, A) elsewhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bigrading(pub Q, pub Q);

impl Bigrading {
    pub fn ints(a: i64, b: i64) -> Bigrading {
        Bigrading(q(a), q(b))
    }
}

impl std::ops::Add for Bigrading {
    type Output = Bigrading;
    fn add(self, o: Bigrading) -> Bigrading {
        Bigrading(self.0 + o.0, self.1 + o.1)
    }
}

impl fmt::Display for Bigrading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

/// x ↦ M x + v.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Affine {
    pub m: [[Q; 2]; 2],
    pub v: [Q; 2],
}

impl Affine {
    pub fn identity() -> Affine {
        Affine::linear([[q(1), q(0)], [q(0), q(1)]])
    }

    pub fn translation(a: Q, b: Q) -> Affine {
        Affine { v: [a, b], ..Affine::identity() }
    }

    pub fn tr(a: i64, b: i64) -> Affine {
        Affine::translation(q(a), q(b))
    }

    pub fn linear(m: [[Q; 2]; 2]) -> Affine {
        Affine { m, v: [Q::zero(), Q::zero()] }
    }

    fn apply_m(&self, x: [Q; 2]) -> [Q; 2] {
        [self.m[0][0] * x[0] + self.m[0][1] * x[1], self.m[1][0] * x[0] + self.m[1][1] * x[1]]
    }

    pub fn apply(&self, x: [Q; 2]) -> [Q; 2] {
        let y = self.apply_m(x);
        [y[0] + self.v[0], y[1] + self.v[1]]
    }

    /// self ∘ other.
    pub fn compose(&self, o: &Affine) -> Affine {
        let mut m = [[Q::zero(); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                *c = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j];
            }
        }
        let v = self.apply(o.v);
        Affine { m, v }
    }

    pub fn det(&self) -> Q {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn inverse(&self) -> Affine {
        let d = self.det();
        assert!(!d.is_zero(), "singular affine map");
        let m = [[self.m[1][1] / d, -self.m[0][1] / d], [-self.m[1][0] / d, self.m[0][0] / d]];
        let lin = Affine::linear(m);
        let w = lin.apply_m(self.v);
        Affine { m, v: [-w[0], -w[1]] }
    }

    pub fn pow(&self, n: i64) -> Affine {
        let base = if n < 0 { self.inverse() } else { *self };
        (0..n.unsigned_abs()).fold(Affine::identity(), |acc, _| acc.compose(&base))
    }

    /// Linear part of the form [[1, a], [0, 1]].
    pub fn is_heisenberg(&self) -> bool {
        self.m[0][0].is_one() && self.m[1][1].is_one() && self.m[1][0].is_zero()
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]] + ({}, {})",
            self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1], self.v[0], self.v[1]
        )
    }
}

/// λ₀ = translation by (1,1), λ₁ = translation by (1,0).
pub fn lambda(e: Idem) -> Affine {
    match e {
        Idem::I0 => Affine::tr(1, 1),
        Idem::I1 => Affine::tr(1, 0),
    }
}

pub fn g_sigma() -> Affine {
    Affine::linear([[q(1), q(0)], [Q::new(1, 2), Q::new(-1, 2)]])
}

pub fn g_tau() -> Affine {
    Affine::linear([[q(0), q(1)], [Q::new(1, 2), Q::new(-1, 2)]])
}

/// A morphism src → tgt of the grading groupoid. An algebra element in
/// I_a · A · I_b is graded by a morphism i_b → i_a.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GroupoidElt {
    pub map: Affine,
    pub src: Idem,
    pub tgt: Idem,
}

impl GroupoidElt {
    pub fn id(e: Idem) -> GroupoidElt {
        GroupoidElt { map: Affine::identity(), src: e, tgt: e }
    }

    pub fn lambda(e: Idem) -> GroupoidElt {
        GroupoidElt { map: lambda(e), src: e, tgt: e }
    }

    /// self ∘ other; `None` when the objects do not match.
    pub fn compose(&self, o: &GroupoidElt) -> Option<GroupoidElt> {
        (self.src == o.tgt).then(|| GroupoidElt { map: self.map.compose(&o.map), src: o.src, tgt: self.tgt })
    }

    pub fn inverse(&self) -> GroupoidElt {
        GroupoidElt { map: self.map.inverse(), src: self.tgt, tgt: self.src }
    }

    /// B ∘ λ_src = λ_tgt ∘ B.
    pub fn is_valid(&self) -> bool {
        self.map.compose(&lambda(self.src)) == lambda(self.tgt).compose(&self.map)
    }

    pub fn is_identity(&self) -> bool {
        self.src == self.tgt && self.map == Affine::identity()
    }
}

/// Bigrading and groupoid grading of a 𝒦 monomial.
pub fn grading_k(a: &KMono) -> (Bigrading, GroupoidElt) {
    match *a {
        KMono::Poly00 { w, z } => {
            let b = Bigrading::ints(-2 * w as i64, -2 * z as i64);
            (b, GroupoidElt { map: Affine::translation(b.0, b.1), src: Idem::I0, tgt: Idem::I0 })
        }
        KMono::Laurent11 { u, t } => {
            let b = Bigrading::ints(-2 * u as i64, t as i64);
            (b, GroupoidElt { map: Affine::translation(b.0, b.1), src: Idem::I1, tgt: Idem::I1 })
        }
        KMono::Arrow10 { u, t, col } => {
            let b = Bigrading::ints(-2 * u as i64, t as i64);
            let base = match col {
                Col::Sigma => g_sigma(),
                Col::Tau => g_tau(),
            };
            let map = Affine::translation(b.0, b.1).compose(&base);
            (b, GroupoidElt { map, src: Idem::I0, tgt: Idem::I1 })
        }
    }
}

/// Bigrading and groupoid grading of a 𝒦^! monomial, read off its normal form.
pub fn grading_kdual(a: &DualMono) -> (Bigrading, GroupoidElt) {
    let mut bi = Bigrading::ints(0, 0);
    let mut g = GroupoidElt::id(a.left_idem());
    let mut push = |bg: Bigrading, ge: GroupoidElt| {
        bi = bi + bg;
        g = g.compose(&ge).expect("letters of a normal form compose");
    };
    let tr = |x: i64, y: i64, e: Idem| GroupoidElt { map: Affine::tr(x, y), src: e, tgt: e };
    match *a {
        DualMono::Word00 { first, len, .. } => {
            let mut c = first;
            for _ in 0..len {
                let (x, y) = if c == Wz::W { (1, -1) } else { (-1, 1) };
                push(Bigrading::ints(x, y), tr(x, y, Idem::I0));
                c = c.other();
            }
        }
        DualMono::Word11 { first, len, .. } => {
            let mut c = first;
            for _ in 0..len {
                let y = if c == Phi::Plus { -1 } else { 1 };
                push(Bigrading::ints(-1, y), tr(-1, y, Idem::I1));
                c = c.other();
            }
        }
        DualMono::Bridge01 { letter, phi, .. } => {
            let base = match letter {
                St::S => g_sigma(),
                St::T => g_tau(),
            };
            let map = base.inverse().compose(&lambda(Idem::I1).inverse());
            push(Bigrading::ints(-1, 0), GroupoidElt { map, src: Idem::I1, tgt: Idem::I0 });
            if phi {
                let y = if letter == St::S { -1 } else { 1 };
                push(Bigrading::ints(-1, y), tr(-1, y, Idem::I1));
            }
        }
    }
    if a.has_theta() {
        let e = a.right_idem();
        let l = lambda(e);
        push(Bigrading(l.v[0], l.v[1]), GroupoidElt::lambda(e));
    }
    (bi, g)
}

/// g' of the Heisenberg repackaging: conjugate or translate by g(σ) so that
/// every grading lands in 𝒢(i₁, i₁).
pub fn heisenberg_collapse(g: &GroupoidElt) -> Affine {
    let s = g_sigma();
    match (g.tgt, g.src) {
        (Idem::I0, Idem::I0) => s.compose(&g.map).compose(&s.inverse()),
        (Idem::I1, Idem::I0) => g.map.compose(&s.inverse()),
        (Idem::I1, Idem::I1) => g.map,
        (Idem::I0, Idem::I1) => s.compose(&g.map),
    }
}

/// The twisted sum of bigradings for a product a·b with a ∈ I₁𝒦I₀ and b ∈ I₀𝒦I₀.
pub fn add_arrow_poly(a: &KMono, b: &KMono) -> Bigrading {
    let (ga, _) = grading_k(a);
    let (gb, _) = grading_k(b);
    let half = (gb.0 - gb.1) / q(2);
    match a {
        KMono::Arrow10 { col: Col::Sigma, .. } => ga + Bigrading(gb.0, half),
        _ => ga + Bigrading(gb.1, half),
    }
}

/// Composite grading of a trace input: g(a_k)∘…∘g(a₁)∘g(b₁)∘…∘g(b_n)∘λ^{k+n−1}.
/// `None` if the inputs are not composable.
pub fn trace_grading(a_seq: &[KMono], b_seq: &[DualMono]) -> Option<GroupoidElt> {
    let mut chain: Vec<GroupoidElt> = Vec::new();
    for a in a_seq.iter().rev() {
        chain.push(grading_k(a).1);
    }
    for b in b_seq {
        chain.push(grading_kdual(b).1);
    }
    let first = chain.first()?;
    let mut acc = GroupoidElt::id(first.tgt);
    for g in &chain {
        acc = acc.compose(g)?;
    }
    let k = (a_seq.len() + b_seq.len()) as i64 - 1;
    let l = GroupoidElt { map: lambda(acc.src).pow(k), src: acc.src, tgt: acc.src };
    acc.compose(&l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra_k::parse_kmono;
    use crate::kdual::{kdual_mu0, kdualinf_mu3, parse_dual, DualElt};

    fn k(s: &str) -> KMono {
        parse_kmono(s, None).unwrap()
    }

    fn d(s: &str) -> DualMono {
        parse_dual(s, None).unwrap()
    }

    #[test]
    fn k_examples() {
        assert_eq!(grading_k(&k("U^2 T^3 sigma")).0, Bigrading::ints(-4, 3));
        assert_eq!(grading_k(&k("W")).1.map, Affine::tr(-2, 0));
        assert_eq!(grading_k(&k("sigma")).1.map, g_sigma());
    }

    #[test]
    fn kdual_examples() {
        assert_eq!(grading_kdual(&d("w")).0, Bigrading::ints(1, -1));
        assert_eq!(grading_kdual(&d("s")).0, Bigrading::ints(-1, 0));
        assert_eq!(g_sigma().inverse(), Affine::linear([[q(1), q(0)], [q(1), q(-2)]]));
        assert_eq!(g_tau().inverse(), Affine::linear([[q(1), q(2)], [q(1), q(0)]]));
    }

    #[test]
    fn heisenberg_examples() {
        let h = |s: &str| heisenberg_collapse(&grading_k(&k(s)).1);
        assert_eq!(h("W"), Affine::tr(-2, -1));
        assert_eq!(h("Z"), Affine::tr(0, 1));
        assert_eq!(h("sigma"), Affine::identity());
        assert_eq!(h("tau"), Affine::linear([[q(1), q(-2)], [q(0), q(1)]]));
        assert_eq!(h("U"), Affine::tr(-2, 0));
        for m in KMono::all_up_to_degree(4) {
            assert!(h(&m.to_string()).is_heisenberg() || m.is_unit(), "{m}");
        }
    }

    #[test]
    fn all_gradings_are_groupoid_morphisms() {
        for m in KMono::all_up_to_degree(5) {
            let g = grading_k(&m).1;
            assert!(g.is_valid(), "{m}");
            assert_eq!((g.src, g.tgt), (m.right_idem(), m.left_idem()));
        }
        for m in DualMono::all_up_to_length(5) {
            let g = grading_kdual(&m).1;
            assert!(g.is_valid(), "{m}");
            assert_eq!((g.src, g.tgt), (m.right_idem(), m.left_idem()));
        }
    }

    #[test]
    fn k_grading_is_multiplicative() {
        let monos = KMono::all_up_to_degree(6);
        for a in &monos {
            for b in &monos {
                if a.degree() + b.degree() > 6 {
                    continue;
                }
                if let Some(ab) = a.mul(b) {
                    let ga = grading_k(a).1;
                    let gb = grading_k(b).1;
                    assert_eq!(Some(grading_k(&ab).1), ga.compose(&gb), "{a} * {b}");
                }
            }
        }
    }

    #[test]
    fn bigrading_addition_laws() {
        let monos = KMono::all_up_to_degree(6);
        for a in &monos {
            for b in &monos {
                let Some(ab) = a.mul(b) else { continue };
                let expect = match (a, b) {
                    (KMono::Arrow10 { .. }, KMono::Poly00 { .. }) => add_arrow_poly(a, b),
                    _ => grading_k(a).0 + grading_k(b).0,
                };
                assert_eq!(grading_k(&ab).0, expect, "{a} * {b}");
            }
        }
    }

    fn check_law(inputs: &[DualMono], out: &DualElt) {
        let n = inputs.len() as i64;
        for m in out {
            let e = m.left_idem();
            let mut acc = GroupoidElt { map: lambda(e).pow(n - 2), src: e, tgt: e };
            for a in inputs {
                acc = acc.compose(&grading_kdual(a).1).unwrap();
            }
            assert_eq!(acc.map, grading_kdual(m).1.map, "{inputs:?} -> {m}");
            let sum: i32 = inputs.iter().map(|a| a.gr_alg()).sum();
            assert_eq!(m.gr_alg(), n as i32 - 2 + sum, "gr_alg {inputs:?} -> {m}");
        }
    }

    #[test]
    fn kdual_grading_law() {
        let monos = DualMono::all_up_to_length(4);
        for m in kdual_mu0() {
            let g = grading_kdual(&m).1;
            assert_eq!(g.map, lambda(Idem::I1).pow(-2));
            assert_eq!(m.gr_alg(), -2);
        }
        for a in &monos {
            check_law(&[*a], &a.mu1());
            for b in &monos {
                check_law(&[*a, *b], &a.mul(b).map(DualElt::term).unwrap_or_default());
            }
        }
        let basis = crate::kdual::kinf_basis_up_to_length(3);
        for a in &basis {
            for b in &basis {
                for c in &basis {
                    check_law(&[*a, *b, *c], &kdualinf_mu3(a, b, c));
                }
            }
        }
    }

    #[test]
    fn trace_law_on_known_values() {
        let u0 = KMono::U0;
        let g = trace_grading(&[u0, k("Z"), k("sigma")], &[d("z.s.th")]).unwrap();
        assert!(g.is_identity(), "{}", g.map);
        let g = trace_grading(&[k("sigma")], &[d("s")]).unwrap();
        assert!(g.is_identity());
        let g = trace_grading(&[k("T^2")], &[d("f+"), d("f+")]).unwrap();
        assert!(g.is_identity());
    }

    #[test]
    fn affine_inverse_roundtrip() {
        let a = g_tau().compose(&Affine::tr(3, -1));
        assert_eq!(a.compose(&a.inverse()), Affine::identity());
        assert_eq!(a.pow(2).compose(&a.pow(-2)), Affine::identity());
    }
}
