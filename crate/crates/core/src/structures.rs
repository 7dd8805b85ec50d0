//! Type-D, DD, type-A, DA and AA structures over 𝒦 and 𝒦^!, their
//! structure-relation checkers, morphisms of type-A modules, cones, the
//! boundedness scans and F₂ homology.
//!
//! Conventions. Input sequences are listed in the order they act: `a[0]` is
//! a₁, the input nearest the generator. A left type-D structure over 𝒦^!
//! multiplies coefficients along a path as old·new; a right type-D structure
//! over 𝒦 as new·old. A DD arrow x → y labelled b|c has b ∈ I_{x.left}𝒦^!I_{y.left}
//! and c ∈ I_{y.right}𝒦I_{x.right}.

use crate::algebra_k::{parse_kmono, KMono};
use crate::f2::F2Sum;
use crate::idem::Idem;
use crate::kdual::{mu0_at, parse_dual, DualMono};
use crate::perturbation::TraceError;
use crate::report::Report;
use crate::ParseError;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

/// A module generator. One-sided modules keep `left == right`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Gen {
    pub id: String,
    pub left: Idem,
    pub right: Idem,
    pub filt: i64,
}

impl Gen {
    pub fn new(id: impl Into<String>, e: Idem) -> Gen {
        Gen { id: id.into(), left: e, right: e, filt: 0 }
    }

    pub fn two(id: impl Into<String>, left: Idem, right: Idem) -> Gen {
        Gen { id: id.into(), left, right, filt: 0 }
    }

    pub fn with_filt(mut self, filt: i64) -> Gen {
        self.filt = filt;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("guard exhausted with live contributions: {0}")]
    NonTermination(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("arrow refers to unknown generator `{0}`")]
    DanglingArrow(String),
    #[error("duplicate generator `{0}`")]
    DuplicateGen(String),
    #[error("arrow {0} has incompatible idempotents")]
    IdemMismatch(String),
}

fn gen_index(gens: &[Gen]) -> HashMap<&str, usize> {
    gens.iter().enumerate().map(|(i, g)| (g.id.as_str(), i)).collect()
}

fn check_unique(gens: &[Gen]) -> Result<(), StructError> {
    let mut seen = BTreeSet::new();
    for g in gens {
        if !seen.insert(g.id.as_str()) {
            return Err(StructError::DuplicateGen(g.id.clone()));
        }
    }
    Ok(())
}

/// The algebra on the D side of a one-sided type-D structure.
pub trait DAlg: Send + Sync + 'static {
    type M: Copy + Ord + std::hash::Hash + fmt::Display + fmt::Debug + Send + Sync;
    const NAME: &'static str;
    /// Idempotent the source generator must carry.
    fn source_idem(m: &Self::M) -> Idem;
    fn target_idem(m: &Self::M) -> Idem;
    /// Product of two coefficients met along a path, older one first.
    fn path_mul(old: &Self::M, new: &Self::M) -> Option<Self::M>;
    fn mu1(m: &Self::M) -> F2Sum<Self::M>;
    fn mu0(e: Idem) -> F2Sum<Self::M>;
    fn is_unit(m: &Self::M) -> bool;
    fn parse(s: &str, hint: Option<Idem>) -> Result<Self::M, ParseError>;
}

/// Right type-D structures over 𝒦: δ¹(x) = Σ y ⊗ c.
#[derive(Clone, Copy, Debug)]
pub struct OverK;
/// Left type-D structures over 𝒦^!: δ¹(x) = Σ b ⊗ y.
#[derive(Clone, Copy, Debug)]
pub struct OverKDual;

impl DAlg for OverK {
    type M = KMono;
    const NAME: &'static str = "K";

    fn source_idem(m: &KMono) -> Idem {
        m.right_idem()
    }

    fn target_idem(m: &KMono) -> Idem {
        m.left_idem()
    }

    fn path_mul(old: &KMono, new: &KMono) -> Option<KMono> {
        new.mul(old)
    }

    fn mu1(_: &KMono) -> F2Sum<KMono> {
        F2Sum::zero()
    }

    fn mu0(_: Idem) -> F2Sum<KMono> {
        F2Sum::zero()
    }

    fn is_unit(m: &KMono) -> bool {
        m.is_unit()
    }

    fn parse(s: &str, hint: Option<Idem>) -> Result<KMono, ParseError> {
        parse_kmono(s, hint)
    }
}

impl DAlg for OverKDual {
    type M = DualMono;
    const NAME: &'static str = "K!";

    fn source_idem(m: &DualMono) -> Idem {
        m.left_idem()
    }

    fn target_idem(m: &DualMono) -> Idem {
        m.right_idem()
    }

    fn path_mul(old: &DualMono, new: &DualMono) -> Option<DualMono> {
        old.mul(new)
    }

    fn mu1(m: &DualMono) -> F2Sum<DualMono> {
        m.mu1()
    }

    fn mu0(e: Idem) -> F2Sum<DualMono> {
        mu0_at(e)
    }

    fn is_unit(m: &DualMono) -> bool {
        m.is_unit()
    }

    fn parse(s: &str, hint: Option<Idem>) -> Result<DualMono, ParseError> {
        parse_dual(s, hint)
    }
}

/// A one-sided type-D structure; each generator's idempotent is `left`.
#[derive(Clone, Debug)]
pub struct DStruct<A: DAlg> {
    pub gens: Vec<Gen>,
    pub arrows: F2Sum<(usize, usize, A::M)>,
}

impl<A: DAlg> DStruct<A> {
    pub fn new(gens: Vec<Gen>) -> Result<Self, StructError> {
        check_unique(&gens)?;
        Ok(DStruct { gens, arrows: F2Sum::zero() })
    }

    /// Adds (mod 2) an arrow after checking idempotents.
    pub fn add_arrow(&mut self, src: usize, dst: usize, m: A::M) -> Result<(), StructError> {
        if A::source_idem(&m) != self.gens[src].left || A::target_idem(&m) != self.gens[dst].left {
            return Err(StructError::IdemMismatch(format!("{} -> {} {m}", self.gens[src].id, self.gens[dst].id)));
        }
        self.arrows.toggle((src, dst, m));
        Ok(())
    }

    pub fn out_arrows(&self) -> Vec<Vec<(usize, A::M)>> {
        let mut out = vec![Vec::new(); self.gens.len()];
        for (s, d, m) in &self.arrows {
            out[*s].push((*d, *m));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, StructError> {
        let (gens, arrows) = parse_lines(text)?;
        let mut d = DStruct::new(gens)?;
        let idx = gen_index(&d.gens);
        let mut pending = Vec::new();
        for (line, src, dst, coef) in arrows {
            let s = *idx.get(src.as_str()).ok_or(StructError::DanglingArrow(src.clone()))?;
            let t = *idx.get(dst.as_str()).ok_or(StructError::DanglingArrow(dst.clone()))?;
            if coef.contains('|') {
                return Err(StructError::Syntax { line, msg: "two-sided label in a type-D file".into() });
            }
            let m = A::parse(&coef, Some(d.gens[s].left))?;
            pending.push((s, t, m));
        }
        for (s, t, m) in pending {
            d.add_arrow(s, t, m)?;
        }
        Ok(d)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.gens {
            out.push_str(&format!("gen {} {}{}\n", g.id, g.left, filt_suffix(g.filt)));
        }
        for (s, d, m) in &self.arrows {
            out.push_str(&format!("arrow {} {} {m}\n", self.gens[*s].id, self.gens[*d].id));
        }
        out
    }
}

/// An arrow of a DD structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DDArrow {
    pub src: usize,
    pub dst: usize,
    pub b: DualMono,
    pub c: KMono,
}

/// A type-DD structure, left over 𝒦^! and right over 𝒦.
#[derive(Clone, Debug, Default)]
pub struct DDStruct {
    pub gens: Vec<Gen>,
    pub arrows: F2Sum<DDArrow>,
}

impl DDStruct {
    pub fn new(gens: Vec<Gen>) -> Result<Self, StructError> {
        check_unique(&gens)?;
        Ok(DDStruct { gens, arrows: F2Sum::zero() })
    }

    pub fn idems_ok(&self, a: &DDArrow) -> bool {
        let (x, y) = (&self.gens[a.src], &self.gens[a.dst]);
        a.b.left_idem() == x.left
            && a.b.right_idem() == y.left
            && a.c.left_idem() == y.right
            && a.c.right_idem() == x.right
    }

    /// Adds (mod 2) an arrow after checking idempotents.
    pub fn add_arrow(&mut self, src: usize, dst: usize, b: DualMono, c: KMono) -> Result<(), StructError> {
        let a = DDArrow { src, dst, b, c };
        if !self.idems_ok(&a) {
            return Err(StructError::IdemMismatch(self.show_arrow(&a)));
        }
        self.arrows.toggle(a);
        Ok(())
    }

    pub fn show_arrow(&self, a: &DDArrow) -> String {
        format!("{} -> {} {}|{}", self.gens[a.src].id, self.gens[a.dst].id, a.b, a.c)
    }

    pub fn out_arrows(&self) -> Vec<Vec<DDArrow>> {
        let mut out = vec![Vec::new(); self.gens.len()];
        for a in &self.arrows {
            out[a.src].push(*a);
        }
        out
    }

    pub fn gen_by_id(&self, id: &str) -> Option<usize> {
        self.gens.iter().position(|g| g.id == id)
    }

    /// The arrows keyed by generator names, for comparing structures whose
    /// generators are listed in different orders.
    pub fn named_arrows(&self) -> BTreeSet<(String, String, DualMono, KMono)> {
        self.arrows.iter().map(|a| (self.gens[a.src].id.clone(), self.gens[a.dst].id.clone(), a.b, a.c)).collect()
    }

    /// Compares two structures arrow for arrow, by generator name.
    pub fn compare(&self, other: &DDStruct, name: &str) -> Report {
        let mut r = Report::new(name);
        let mine: BTreeSet<_> = self.gens.iter().map(|g| (g.id.clone(), g.left, g.right)).collect();
        let theirs: BTreeSet<_> = other.gens.iter().map(|g| (g.id.clone(), g.left, g.right)).collect();
        r.check();
        if mine != theirs {
            r.fail("generators", format!("{theirs:?}"), format!("{mine:?}"));
        }
        let (a, b) = (self.named_arrows(), other.named_arrows());
        for x in a.union(&b) {
            r.check();
            let show = format!("{} -> {} {}|{}", x.0, x.1, x.2, x.3);
            match (a.contains(x), b.contains(x)) {
                (true, false) => r.fail(show, "absent", "present"),
                (false, true) => r.fail(show, "present", "absent"),
                _ => {}
            }
        }
        r
    }

    pub fn parse(text: &str) -> Result<Self, StructError> {
        let (gens, arrows) = parse_lines(text)?;
        let mut d = DDStruct::new(gens)?;
        let idx = gen_index(&d.gens);
        let mut pending = Vec::new();
        for (line, src, dst, coef) in arrows {
            let s = *idx.get(src.as_str()).ok_or(StructError::DanglingArrow(src.clone()))?;
            let t = *idx.get(dst.as_str()).ok_or(StructError::DanglingArrow(dst.clone()))?;
            let (b, c) = coef.split_once('|').ok_or(StructError::Syntax { line, msg: "expected <b>|<c>".into() })?;
            let b = parse_dual(b.trim(), Some(d.gens[s].left))?;
            let c = parse_kmono(c.trim(), Some(d.gens[t].right))?;
            pending.push((s, t, b, c));
        }
        for (s, t, b, c) in pending {
            d.add_arrow(s, t, b, c)?;
        }
        Ok(d)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.gens {
            out.push_str(&format!("gen {} {},{}{}\n", g.id, g.left, g.right, filt_suffix(g.filt)));
        }
        for a in &self.arrows {
            out.push_str(&format!("arrow {} {} {}|{}\n", self.gens[a.src].id, self.gens[a.dst].id, a.b, a.c));
        }
        out
    }

    /// The left type-D structure obtained by sending the right coefficients
    /// through 𝒦 → F (all non-unit monomials to 0); generators keep their
    /// left idempotent.
    pub fn augment_right(&self) -> DStruct<OverKDual> {
        let gens = self.gens.iter().map(|g| Gen { right: g.left, ..g.clone() }).collect();
        let mut d = DStruct { gens, arrows: F2Sum::zero() };
        for a in &self.arrows {
            if a.c.is_unit() {
                d.arrows.toggle((a.src, a.dst, a.b));
            }
        }
        d
    }
}

fn filt_suffix(f: i64) -> String {
    if f == 0 {
        String::new()
    } else {
        format!(" filt={f}")
    }
}

type ArrowLine = (usize, String, String, String);

/// Shared line parser: `gen <id> <i0|i1>[,<i0|i1>] [filt=<n>]`,
/// `arrow <src> <dst> <label>`, `#` comments.
fn parse_lines(text: &str) -> Result<(Vec<Gen>, Vec<ArrowLine>), StructError> {
    let mut gens = Vec::new();
    let mut arrows = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut words = body.split_whitespace();
        match words.next() {
            Some("gen") => {
                let id = words.next().ok_or(StructError::Syntax { line, msg: "missing generator id".into() })?;
                let idems = words.next().ok_or(StructError::Syntax { line, msg: "missing idempotent".into() })?;
                let (l, r) = match idems.split_once(',') {
                    Some((l, r)) => (l, r),
                    None => (idems, idems),
                };
                let parse_idem = |s: &str| {
                    s.parse::<Idem>().map_err(|_| StructError::Syntax { line, msg: format!("bad idempotent `{s}`") })
                };
                let mut g = Gen::two(id, parse_idem(l)?, parse_idem(r)?);
                for w in words {
                    let v = w
                        .strip_prefix("filt=")
                        .ok_or(StructError::Syntax { line, msg: format!("unexpected `{w}`") })?;
                    g.filt =
                        v.parse().map_err(|_| StructError::Syntax { line, msg: format!("bad filtration `{v}`") })?;
                }
                gens.push(g);
            }
            Some("arrow") => {
                let src = words.next().ok_or(StructError::Syntax { line, msg: "missing source".into() })?;
                let dst = words.next().ok_or(StructError::Syntax { line, msg: "missing target".into() })?;
                let label: Vec<&str> = words.collect();
                if label.is_empty() {
                    return Err(StructError::Syntax { line, msg: "missing label".into() });
                }
                arrows.push((line, src.to_string(), dst.to_string(), label.join(" ")));
            }
            Some(w) => return Err(StructError::Syntax { line, msg: format!("unknown keyword `{w}`") }),
            None => {}
        }
    }
    Ok((gens, arrows))
}

/// Curved type-D relation μ₀ ⊗ x + (μ₁ ⊗ id)δ¹ + (μ₂ ⊗ id)δ² = 0 on every
/// generator. Over 𝒦 the first two terms vanish.
pub fn check_type_d<A: DAlg>(d: &DStruct<A>) -> Report {
    let mut r = Report::new(format!("type-D relation over {}", A::NAME));
    let out = d.out_arrows();
    for (x, g) in d.gens.iter().enumerate() {
        let mut sum: F2Sum<(usize, A::M)> = F2Sum::zero();
        for m in &A::mu0(g.left) {
            sum.toggle((x, *m));
        }
        for (y, m1) in &out[x] {
            for m in &A::mu1(m1) {
                sum.toggle((*y, *m));
            }
            for (z, m2) in &out[*y] {
                if let Some(p) = A::path_mul(m1, m2) {
                    sum.toggle((*z, p));
                }
            }
        }
        r.check();
        if !sum.is_zero() {
            let shown: Vec<String> = sum.iter().map(|(z, m)| format!("{m}⊗{}", d.gens[*z].id)).collect();
            r.fail(&g.id, "0", shown.join(" + "));
        }
    }
    r
}

/// Curved DD relation: μ₀ ⊗ x ⊗ 1 + (μ₁ ⊗ id)δ¹ + δ² with left coefficients
/// multiplied in order and right ones in reverse order.
pub fn check_dd(d: &DDStruct) -> Report {
    check_dd_where(d, |_| true)
}

/// The DD relation at the generators selected by `keep`.
pub fn check_dd_where(d: &DDStruct, keep: impl Fn(usize) -> bool) -> Report {
    let mut r = Report::new("DD relation");
    let out = d.out_arrows();
    for (x, g) in d.gens.iter().enumerate() {
        if !keep(x) {
            continue;
        }
        let mut sum: F2Sum<(usize, DualMono, KMono)> = F2Sum::zero();
        for m in &mu0_at(g.left) {
            sum.toggle((x, *m, KMono::unit(g.right)));
        }
        for a1 in &out[x] {
            for m in &a1.b.mu1() {
                sum.toggle((a1.dst, *m, a1.c));
            }
            for a2 in &out[a1.dst] {
                if let (Some(b), Some(c)) = (a1.b.mul(&a2.b), a2.c.mul(&a1.c)) {
                    sum.toggle((a2.dst, b, c));
                }
            }
        }
        r.check();
        if !sum.is_zero() {
            let shown: Vec<String> = sum.iter().map(|(z, b, c)| format!("{b}⊗{}⊗{c}", d.gens[*z].id)).collect();
            r.fail(&g.id, "0", shown.join(" + "));
        }
    }
    r
}

/// A type-A module over 𝒦 given by an evaluator.
pub trait KModule: Send + Sync {
    fn gens(&self) -> &[Gen];
    /// m_{n+1}(a_n, …, a₁, x).
    fn act(&self, a: &[KMono], x: usize) -> Result<F2Sum<usize>, EvalError>;
    /// Number of algebra inputs beyond which every action vanishes, if known.
    fn max_inputs(&self) -> Option<usize>;
}

/// A DA bimodule with a left A∞-action of 𝒦 and a right type-D side over 𝒦.
pub trait KDa: Send + Sync {
    fn gens(&self) -> &[Gen];
    /// δ¹_{n+1}(a_n, …, a₁, x) = Σ y ⊗ c.
    fn delta(&self, a: &[KMono], x: usize) -> Result<F2Sum<(usize, KMono)>, EvalError>;
    fn max_inputs(&self) -> Option<usize>;
}

/// A DA bimodule with a left type-D side over 𝒦^! and a right A∞-action of 𝒦^!.
pub trait KDualDa: Send + Sync {
    fn gens(&self) -> &[Gen];
    /// δ¹_{n+1}(x, b₁, …, b_n) = Σ c ⊗ y.
    fn delta(&self, x: usize, b: &[DualMono]) -> Result<F2Sum<(DualMono, usize)>, EvalError>;
    fn max_inputs(&self) -> Option<usize>;
}

/// An AA bimodule, 𝒦 acting on the left and 𝒦^! on the right.
pub trait KKDualAa: Send + Sync {
    fn gens(&self) -> &[Gen];
    /// m_{k|1|n}(a_k, …, a₁, x, b₁, …, b_n).
    fn act(&self, a: &[KMono], x: usize, b: &[DualMono]) -> Result<F2Sum<usize>, EvalError>;
}

/// Generator of a standard rank-two module in the given idempotent.
pub fn idem_gens(prefix: &str) -> Vec<Gen> {
    Idem::BOTH.iter().map(|e| Gen::new(format!("{prefix}{}", e.index()), *e)).collect()
}

pub type KModuleFn = dyn Fn(&[KMono], usize) -> Result<F2Sum<usize>, EvalError> + Send + Sync;
pub type KDaFn = dyn Fn(&[KMono], usize) -> Result<F2Sum<(usize, KMono)>, EvalError> + Send + Sync;
pub type KDualDaFn = dyn Fn(usize, &[DualMono]) -> Result<F2Sum<(DualMono, usize)>, EvalError> + Send + Sync;

/// Evaluator-backed type-A module. With `unital` set, unit inputs are
/// answered by strict unitality before the rule is consulted.
#[derive(Clone)]
pub struct FnKModule {
    pub gens: Vec<Gen>,
    pub max_inputs: Option<usize>,
    pub unital: bool,
    pub rule: Arc<KModuleFn>,
}

impl KModule for FnKModule {
    fn gens(&self) -> &[Gen] {
        &self.gens
    }

    fn act(&self, a: &[KMono], x: usize) -> Result<F2Sum<usize>, EvalError> {
        if self.unital && a.iter().any(|m| m.is_unit()) {
            return Ok(if a.len() == 1 && a[0].right_idem() == self.gens[x].left {
                F2Sum::term(x)
            } else {
                F2Sum::zero()
            });
        }
        (self.rule)(a, x)
    }

    fn max_inputs(&self) -> Option<usize> {
        self.max_inputs
    }
}

/// Evaluator-backed DA bimodule over (𝒦, 𝒦).
#[derive(Clone)]
pub struct FnKDa {
    pub gens: Vec<Gen>,
    pub max_inputs: Option<usize>,
    pub unital: bool,
    pub rule: Arc<KDaFn>,
}

impl FnKDa {
    /// The identity bimodule: δ₂(a, x) = x' ⊗ a.
    pub fn identity() -> FnKDa {
        FnKDa {
            gens: idem_gens("i"),
            max_inputs: Some(1),
            unital: true,
            rule: Arc::new(|a: &[KMono], _x: usize| {
                Ok(if a.len() == 1 { F2Sum::term((a[0].left_idem().index(), a[0])) } else { F2Sum::zero() })
            }),
        }
    }
}

impl KDa for FnKDa {
    fn gens(&self) -> &[Gen] {
        &self.gens
    }

    fn delta(&self, a: &[KMono], x: usize) -> Result<F2Sum<(usize, KMono)>, EvalError> {
        let g = &self.gens[x];
        if !a.is_empty() && a[0].right_idem() != g.left {
            return Ok(F2Sum::zero());
        }
        if self.unital && a.iter().any(|m| m.is_unit()) {
            return Ok(if a.len() == 1 { F2Sum::term((x, KMono::unit(g.right))) } else { F2Sum::zero() });
        }
        (self.rule)(a, x)
    }

    fn max_inputs(&self) -> Option<usize> {
        self.max_inputs
    }
}

/// Evaluator-backed DA bimodule over (𝒦^!, 𝒦^!).
#[derive(Clone)]
pub struct FnKDualDa {
    pub gens: Vec<Gen>,
    pub max_inputs: Option<usize>,
    pub unital: bool,
    pub rule: Arc<KDualDaFn>,
}

impl FnKDualDa {
    /// The identity bimodule: δ₂(x, b) = b ⊗ x'.
    pub fn identity() -> FnKDualDa {
        FnKDualDa {
            gens: idem_gens("i"),
            max_inputs: Some(1),
            unital: true,
            rule: Arc::new(|_x: usize, b: &[DualMono]| {
                Ok(if b.len() == 1 { F2Sum::term((b[0], b[0].right_idem().index())) } else { F2Sum::zero() })
            }),
        }
    }
}

impl KDualDa for FnKDualDa {
    fn gens(&self) -> &[Gen] {
        &self.gens
    }

    fn delta(&self, x: usize, b: &[DualMono]) -> Result<F2Sum<(DualMono, usize)>, EvalError> {
        let g = &self.gens[x];
        if !b.is_empty() && b[0].left_idem() != g.right {
            return Ok(F2Sum::zero());
        }
        if self.unital && b.iter().any(|m| m.is_unit()) {
            return Ok(if b.len() == 1 { F2Sum::term((DualMono::unit(g.left), x)) } else { F2Sum::zero() });
        }
        (self.rule)(x, b)
    }

    fn max_inputs(&self) -> Option<usize> {
        self.max_inputs
    }
}

/// Composable sequences (a₁, …, a_n) of non-unit 𝒦 monomials of degree at
/// most `deg_cap`, with a_{i+1}·a_i defined idempotent-wise.
pub fn k_sequences(max_len: usize, deg_cap: u32) -> Vec<Vec<KMono>> {
    let monos: Vec<KMono> = KMono::all_up_to_degree(deg_cap).into_iter().filter(|m| !m.is_unit()).collect();
    extend_sequences(max_len, &monos, |prev: &KMono, next: &KMono| next.right_idem() == prev.left_idem())
}

/// Composable sequences (b₁, …, b_n) of non-unit 𝒦^! monomials with at
/// most `len_cap` letters, with b_i·b_{i+1} defined idempotent-wise.
pub fn dual_sequences(max_len: usize, len_cap: u32) -> Vec<Vec<DualMono>> {
    let monos: Vec<DualMono> = DualMono::all_up_to_length(len_cap).into_iter().filter(|m| !m.is_unit()).collect();
    extend_sequences(max_len, &monos, |prev: &DualMono, next: &DualMono| prev.right_idem() == next.left_idem())
}

fn extend_sequences<M: Copy>(max_len: usize, monos: &[M], fits: impl Fn(&M, &M) -> bool) -> Vec<Vec<M>> {
    let mut all = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &layer {
            for m in monos {
                if s.last().is_none_or(|p: &M| fits(p, m)) {
                    let mut t: Vec<M> = s.clone();
                    t.push(*m);
                    next.push(t);
                }
            }
        }
        all.extend(next.iter().cloned());
        layer = next;
    }
    all
}

pub fn show_seq<M: fmt::Display>(s: &[M]) -> String {
    s.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(", ")
}

/// Runs `eval` on every case in parallel and folds the results into a
/// report in case order. `eval` returns `Some((expected, actual))` on failure.
pub fn sweep<C: Sync>(
    name: &str,
    cases: &[C],
    label: impl Fn(&C) -> String + Sync,
    eval: impl Fn(&C) -> Option<(String, String)> + Sync,
) -> Report {
    let results: Vec<Option<(String, String)>> = cases.par_iter().map(&eval).collect();
    let mut r = Report::new(name);
    for (c, res) in cases.iter().zip(results) {
        r.check();
        if let Some((e, a)) = res {
            r.fail(label(c), e, a);
        }
    }
    r
}

fn show_err<T>(r: Result<T, EvalError>) -> Result<T, (String, String)> {
    r.map_err(|e| ("a value".to_string(), format!("error: {e}")))
}

fn replace_at<M: Copy>(s: &[M], i: usize, width: usize, with: &[M]) -> Vec<M> {
    let mut v = s[..i].to_vec();
    v.extend_from_slice(with);
    v.extend_from_slice(&s[i + width..]);
    v
}

/// The type-A relation for a module over 𝒦 at (a, x).
pub fn kmodule_relation(m: &dyn KModule, a: &[KMono], x: usize) -> Result<F2Sum<usize>, EvalError> {
    let mut out = F2Sum::zero();
    for p in 0..=a.len() {
        for y in m.act(&a[..p], x)? {
            out.add_sum(m.act(&a[p..], y)?);
        }
    }
    for i in 0..a.len().saturating_sub(1) {
        if let Some(prod) = a[i + 1].mul(&a[i]) {
            out.add_sum(m.act(&replace_at(a, i, 2, &[prod]), x)?);
        }
    }
    Ok(out)
}

fn fmt_gens(gens: &[Gen], s: &F2Sum<usize>) -> String {
    if s.is_zero() {
        return "0".into();
    }
    s.iter().map(|i| gens[*i].id.clone()).collect::<Vec<_>>().join(" + ")
}

/// Cases (sequence, generator) with the generator able to receive a₁.
fn k_cases(gens: &[Gen], max_len: usize, deg_cap: u32) -> Vec<(Vec<KMono>, usize)> {
    let mut cases = Vec::new();
    for s in k_sequences(max_len, deg_cap) {
        for (x, g) in gens.iter().enumerate() {
            if s.first().is_none_or(|a| a.right_idem() == g.left) {
                cases.push((s.clone(), x));
            }
        }
    }
    cases
}

fn dual_cases(gens: &[Gen], max_len: usize, len_cap: u32) -> Vec<(usize, Vec<DualMono>)> {
    let mut cases = Vec::new();
    for s in dual_sequences(max_len, len_cap) {
        for (x, g) in gens.iter().enumerate() {
            if s.first().is_none_or(|b| b.left_idem() == g.right) {
                cases.push((x, s.clone()));
            }
        }
    }
    cases
}

pub fn check_kmodule(m: &dyn KModule, max_len: usize, deg_cap: u32) -> Report {
    let gens = m.gens();
    let cases = k_cases(gens, max_len, deg_cap);
    sweep(
        "type-A relation over K",
        &cases,
        |(a, x)| format!("m({}; {})", show_seq(a), gens[*x].id),
        |(a, x)| match show_err(kmodule_relation(m, a, *x)) {
            Ok(v) if v.is_zero() => None,
            Ok(v) => Some(("0".into(), fmt_gens(gens, &v))),
            Err(e) => Some(e),
        },
    )
}

/// The DA relation for a bimodule over (𝒦, 𝒦) at (a, x).
pub fn kda_relation(m: &dyn KDa, a: &[KMono], x: usize) -> Result<F2Sum<(usize, KMono)>, EvalError> {
    let mut out = F2Sum::zero();
    for p in 0..=a.len() {
        for (y, c1) in m.delta(&a[..p], x)? {
            for (z, c2) in m.delta(&a[p..], y)? {
                if let Some(c) = c2.mul(&c1) {
                    out.toggle((z, c));
                }
            }
        }
    }
    for i in 0..a.len().saturating_sub(1) {
        if let Some(prod) = a[i + 1].mul(&a[i]) {
            out.add_sum(m.delta(&replace_at(a, i, 2, &[prod]), x)?);
        }
    }
    Ok(out)
}

fn fmt_kda_out(gens: &[Gen], s: &F2Sum<(usize, KMono)>) -> String {
    if s.is_zero() {
        return "0".into();
    }
    s.iter().map(|(y, c)| format!("{}⊗{c}", gens[*y].id)).collect::<Vec<_>>().join(" + ")
}

fn fmt_kdual_out(gens: &[Gen], s: &F2Sum<(DualMono, usize)>) -> String {
    if s.is_zero() {
        return "0".into();
    }
    s.iter().map(|(c, y)| format!("{c}⊗{}", gens[*y].id)).collect::<Vec<_>>().join(" + ")
}

pub fn check_kda(m: &dyn KDa, max_len: usize, deg_cap: u32) -> Report {
    let gens = m.gens();
    let cases = k_cases(gens, max_len, deg_cap);
    sweep(
        "DA relation over (K, K)",
        &cases,
        |(a, x)| format!("δ({}; {})", show_seq(a), gens[*x].id),
        |(a, x)| match show_err(kda_relation(m, a, *x)) {
            Ok(v) if v.is_zero() => None,
            Ok(v) => Some(("0".into(), fmt_kda_out(gens, &v))),
            Err(e) => Some(e),
        },
    )
}

/// The curved DA relation for a bimodule over (𝒦^!, 𝒦^!) at (x, b).
pub fn kdual_da_relation(m: &dyn KDualDa, x: usize, b: &[DualMono]) -> Result<F2Sum<(DualMono, usize)>, EvalError> {
    let gens = m.gens();
    let mut out = F2Sum::zero();
    for p in 0..=b.len() {
        for (c1, y) in m.delta(x, &b[..p])? {
            for (c2, z) in m.delta(y, &b[p..])? {
                if let Some(c) = c1.mul(&c2) {
                    out.toggle((c, z));
                }
            }
        }
    }
    for (c, y) in m.delta(x, b)? {
        for c1 in &c.mu1() {
            out.toggle((*c1, y));
        }
    }
    if b.is_empty() {
        for c in &mu0_at(gens[x].left) {
            out.toggle((*c, x));
        }
    }
    for i in 0..b.len().saturating_sub(1) {
        if let Some(prod) = b[i].mul(&b[i + 1]) {
            out.add_sum(m.delta(x, &replace_at(b, i, 2, &[prod]))?);
        }
    }
    for i in 0..b.len() {
        for d in &b[i].mu1() {
            out.add_sum(m.delta(x, &replace_at(b, i, 1, &[*d]))?);
        }
    }
    for pos in 0..=b.len() {
        let e = if pos == 0 { gens[x].right } else { b[pos - 1].right_idem() };
        for m0 in &mu0_at(e) {
            out.add_sum(m.delta(x, &replace_at(b, pos, 0, &[*m0]))?);
        }
    }
    Ok(out)
}

pub fn check_kdual_da(m: &dyn KDualDa, max_len: usize, len_cap: u32) -> Report {
    let gens = m.gens();
    let cases = dual_cases(gens, max_len, len_cap);
    sweep(
        "DA relation over (K!, K!)",
        &cases,
        |(x, b)| format!("δ({}; {})", gens[*x].id, show_seq(b)),
        |(x, b)| match show_err(kdual_da_relation(m, *x, b)) {
            Ok(v) if v.is_zero() => None,
            Ok(v) => Some(("0".into(), fmt_kdual_out(gens, &v))),
            Err(e) => Some(e),
        },
    )
}

/// The curved AA relation at (a, x, b).
pub fn aa_relation(m: &dyn KKDualAa, a: &[KMono], x: usize, b: &[DualMono]) -> Result<F2Sum<usize>, EvalError> {
    let gens = m.gens();
    let mut out = F2Sum::zero();
    for p in 0..=a.len() {
        for q in 0..=b.len() {
            for y in m.act(&a[..p], x, &b[..q])? {
                out.add_sum(m.act(&a[p..], y, &b[q..])?);
            }
        }
    }
    for i in 0..a.len().saturating_sub(1) {
        if let Some(prod) = a[i + 1].mul(&a[i]) {
            out.add_sum(m.act(&replace_at(a, i, 2, &[prod]), x, b)?);
        }
    }
    for i in 0..b.len().saturating_sub(1) {
        if let Some(prod) = b[i].mul(&b[i + 1]) {
            out.add_sum(m.act(a, x, &replace_at(b, i, 2, &[prod]))?);
        }
    }
    for i in 0..b.len() {
        for d in &b[i].mu1() {
            out.add_sum(m.act(a, x, &replace_at(b, i, 1, &[*d]))?);
        }
    }
    for pos in 0..=b.len() {
        let e = if pos == 0 { gens[x].right } else { b[pos - 1].right_idem() };
        for m0 in &mu0_at(e) {
            out.add_sum(m.act(a, x, &replace_at(b, pos, 0, &[*m0]))?);
        }
    }
    Ok(out)
}

/// Checks the AA relation on (a, x, b) with a from `k_sequences(k_max,
/// deg_cap)` and b from `dual_sequences(n_max, len_cap)`, skipping the
/// cases rejected by `keep` (e.g. those where every term vanishes for
/// grading reasons).
pub fn check_aa(
    m: &dyn KKDualAa,
    (k_max, deg_cap): (usize, u32),
    (n_max, len_cap): (usize, u32),
    keep: &(dyn Fn(&[KMono], &[DualMono]) -> bool + Sync),
) -> Report {
    let gens = m.gens();
    let a_seqs = k_sequences(k_max, deg_cap);
    let b_seqs = dual_sequences(n_max, len_cap);
    let mut cases = Vec::new();
    for a in &a_seqs {
        for b in &b_seqs {
            if a.is_empty() && b.is_empty() {
                continue;
            }
            for (x, g) in gens.iter().enumerate() {
                let fits = a.first().is_none_or(|a1| a1.right_idem() == g.left)
                    && b.first().is_none_or(|b1| b1.left_idem() == g.right);
                if fits && keep(a, b) {
                    cases.push((a.clone(), x, b.clone()));
                }
            }
        }
    }
    sweep(
        "AA relation over (K, K!)",
        &cases,
        |(a, x, b)| format!("m({}; {}; {})", show_seq(a), gens[*x].id, show_seq(b)),
        |(a, x, b)| match show_err(aa_relation(m, a, *x, b)) {
            Ok(v) if v.is_zero() => None,
            Ok(v) => Some(("0".into(), fmt_gens(gens, &v))),
            Err(e) => Some(e),
        },
    )
}

/// Positions at which a unit can be inserted into `s`, with its idempotent.
fn unit_slots_k(s: &[KMono], x_idem: Idem) -> Vec<(usize, Idem)> {
    (0..=s.len()).map(|i| (i, if i == 0 { x_idem } else { s[i - 1].left_idem() })).collect()
}

pub fn check_strict_unital_kmodule(m: &dyn KModule, max_len: usize, deg_cap: u32) -> Report {
    let gens = m.gens();
    let cases = k_cases(gens, max_len.saturating_sub(1), deg_cap);
    sweep(
        "strict unitality (type-A over K)",
        &cases,
        |(a, x)| format!("units in ({}; {})", show_seq(a), gens[*x].id),
        |(a, x)| {
            for (i, e) in unit_slots_k(a, gens[*x].left) {
                let s = replace_at(a, i, 0, &[KMono::unit(e)]);
                let want = if s.len() == 1 { F2Sum::term(*x) } else { F2Sum::zero() };
                match m.act(&s, *x) {
                    Ok(v) if v == want => {}
                    Ok(v) => {
                        return Some((fmt_gens(gens, &want), format!("{} at ({})", fmt_gens(gens, &v), show_seq(&s))))
                    }
                    Err(e) => return Some(("a value".into(), e.to_string())),
                }
            }
            None
        },
    )
}

pub fn check_strict_unital_kda(m: &dyn KDa, max_len: usize, deg_cap: u32) -> Report {
    let gens = m.gens();
    let cases = k_cases(gens, max_len.saturating_sub(1), deg_cap);
    sweep(
        "strict unitality (DA over K)",
        &cases,
        |(a, x)| format!("units in ({}; {})", show_seq(a), gens[*x].id),
        |(a, x)| {
            for (i, e) in unit_slots_k(a, gens[*x].left) {
                let s = replace_at(a, i, 0, &[KMono::unit(e)]);
                let want = if s.len() == 1 { F2Sum::term((*x, KMono::unit(gens[*x].right))) } else { F2Sum::zero() };
                match m.delta(&s, *x) {
                    Ok(v) if v == want => {}
                    Ok(v) => {
                        return Some((
                            fmt_kda_out(gens, &want),
                            format!("{} at ({})", fmt_kda_out(gens, &v), show_seq(&s)),
                        ))
                    }
                    Err(e) => return Some(("a value".into(), e.to_string())),
                }
            }
            None
        },
    )
}

pub fn check_strict_unital_kdual_da(m: &dyn KDualDa, max_len: usize, len_cap: u32) -> Report {
    let gens = m.gens();
    let cases = dual_cases(gens, max_len.saturating_sub(1), len_cap);
    sweep(
        "strict unitality (DA over K!)",
        &cases,
        |(x, b)| format!("units in ({}; {})", gens[*x].id, show_seq(b)),
        |(x, b)| {
            for i in 0..=b.len() {
                let e = if i == 0 { gens[*x].right } else { b[i - 1].right_idem() };
                let s = replace_at(b, i, 0, &[DualMono::unit(e)]);
                let want = if s.len() == 1 { F2Sum::term((DualMono::unit(gens[*x].left), *x)) } else { F2Sum::zero() };
                match m.delta(*x, &s) {
                    Ok(v) if v == want => {}
                    Ok(v) => {
                        return Some((
                            fmt_kdual_out(gens, &want),
                            format!("{} at ({})", fmt_kdual_out(gens, &v), show_seq(&s)),
                        ))
                    }
                    Err(e) => return Some(("a value".into(), e.to_string())),
                }
            }
            None
        },
    )
}

/// A morphism of type-A modules over 𝒦, given by its components
/// f_{n+1}(a_n, …, a₁, x).
#[derive(Clone)]
pub struct MorphismA {
    pub src: Arc<dyn KModule>,
    pub tgt: Arc<dyn KModule>,
    pub f: Arc<KModuleFn>,
}

impl fmt::Debug for MorphismA {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MorphismA({} -> {} generators)", self.src.gens().len(), self.tgt.gens().len())
    }
}

impl MorphismA {
    pub fn eval(&self, a: &[KMono], x: usize) -> Result<F2Sum<usize>, EvalError> {
        (self.f)(a, x)
    }

    /// The identity morphism: f₁ = id, higher components zero.
    pub fn identity(m: Arc<dyn KModule>) -> MorphismA {
        MorphismA {
            src: m.clone(),
            tgt: m,
            f: Arc::new(|a: &[KMono], x: usize| Ok(if a.is_empty() { F2Sum::term(x) } else { F2Sum::zero() })),
        }
    }

    pub fn zero(src: Arc<dyn KModule>, tgt: Arc<dyn KModule>) -> MorphismA {
        MorphismA { src, tgt, f: Arc::new(|_: &[KMono], _: usize| Ok(F2Sum::zero())) }
    }
}

/// d(f) = m ∘ f + f ∘ m + f ∘ μ₂, summed over all splittings.
pub fn morphism_diff(f: &MorphismA) -> MorphismA {
    let g = f.clone();
    MorphismA {
        src: f.src.clone(),
        tgt: f.tgt.clone(),
        f: Arc::new(move |a: &[KMono], x: usize| {
            let mut out = F2Sum::zero();
            for p in 0..=a.len() {
                for y in g.eval(&a[..p], x)? {
                    out.add_sum(g.tgt.act(&a[p..], y)?);
                }
                for y in g.src.act(&a[..p], x)? {
                    out.add_sum(g.eval(&a[p..], y)?);
                }
            }
            for i in 0..a.len().saturating_sub(1) {
                if let Some(prod) = a[i + 1].mul(&a[i]) {
                    out.add_sum(g.eval(&replace_at(a, i, 2, &[prod]), x)?);
                }
            }
            Ok(out)
        }),
    }
}

/// (g ∘ f)(a, x) = Σ g(a_{p+1..n}, f(a_{1..p}, x)).
pub fn morphism_compose(g: &MorphismA, f: &MorphismA) -> MorphismA {
    let (g, f) = (g.clone(), f.clone());
    MorphismA {
        src: f.src.clone(),
        tgt: g.tgt.clone(),
        f: Arc::new(move |a: &[KMono], x: usize| {
            let mut out = F2Sum::zero();
            for p in 0..=a.len() {
                for y in f.eval(&a[..p], x)? {
                    out.add_sum(g.eval(&a[p..], y)?);
                }
            }
            Ok(out)
        }),
    }
}

pub fn morphism_sum(f: &MorphismA, g: &MorphismA) -> MorphismA {
    let (f, g) = (f.clone(), g.clone());
    MorphismA {
        src: f.src.clone(),
        tgt: f.tgt.clone(),
        f: Arc::new(move |a: &[KMono], x: usize| Ok(f.eval(a, x)? + g.eval(a, x)?)),
    }
}

/// Compares two morphisms on every case of `k_cases`.
pub fn morphisms_agree(f: &MorphismA, g: &MorphismA, max_len: usize, deg_cap: u32) -> Report {
    let gens = f.src.gens();
    let cases = k_cases(gens, max_len, deg_cap);
    sweep(
        "morphism equality",
        &cases,
        |(a, x)| format!("({}; {})", show_seq(a), gens[*x].id),
        |(a, x)| match (f.eval(a, *x), g.eval(a, *x)) {
            (Ok(u), Ok(v)) if u == v => None,
            (Ok(u), Ok(v)) => Some((format!("{v:?}"), format!("{u:?}"))),
            (Err(e), _) | (_, Err(e)) => Some(("a value".into(), e.to_string())),
        },
    )
}

/// The mapping cone of f: M → N. Generators of M come first.
pub fn cone(f: &MorphismA) -> FnKModule {
    let n_src = f.src.gens().len();
    let mut gens: Vec<Gen> = f.src.gens().iter().map(|g| Gen { id: format!("{}'", g.id), ..g.clone() }).collect();
    gens.extend(f.tgt.gens().iter().cloned());
    let max_inputs = match (f.src.max_inputs(), f.tgt.max_inputs()) {
        (Some(a), Some(b)) => Some(a.max(b)),
        _ => None,
    };
    let f = f.clone();
    FnKModule {
        gens,
        max_inputs,
        unital: false,
        rule: Arc::new(move |a: &[KMono], x: usize| {
            if x < n_src {
                let mut out: F2Sum<usize> = f.src.act(a, x)?;
                for y in f.eval(a, x)? {
                    out.toggle(y + n_src);
                }
                Ok(out)
            } else {
                Ok(f.tgt.act(a, x - n_src)?.into_iter().map(|y| y + n_src).collect())
            }
        }),
    }
}

/// Largest Σ max(−gr_alg(b_i) − 1, 0) along arrow paths of length at most
/// `max_iter`, skipping paths through an arrow with a unit coefficient.
pub fn cobonsai_scan(n_gens: usize, arrows: &[(usize, usize, DualMono)], max_iter: usize) -> usize {
    let mut best: Vec<Option<usize>> = vec![Some(0); n_gens];
    let mut top = 0;
    for _ in 0..max_iter {
        let mut next: Vec<Option<usize>> = vec![None; n_gens];
        for (s, d, b) in arrows {
            if b.is_unit() {
                continue;
            }
            if let Some(v) = best[*s] {
                let w = v + (-b.gr_alg() - 1).max(0) as usize;
                next[*d] = Some(next[*d].map_or(w, |u| u.max(w)));
                top = top.max(w);
            }
        }
        best = next;
    }
    top
}

pub fn cobonsai_scan_dd(d: &DDStruct, max_iter: usize) -> usize {
    let arrows: Vec<_> = d.arrows.iter().map(|a| (a.src, a.dst, a.b)).collect();
    cobonsai_scan(d.gens.len(), &arrows, max_iter)
}

pub fn cobonsai_scan_d(d: &DStruct<OverKDual>, max_iter: usize) -> usize {
    let arrows: Vec<_> = d.arrows.iter().copied().collect();
    cobonsai_scan(d.gens.len(), &arrows, max_iter)
}

/// Smallest C ≥ 0 with filt(x₀) − filt(x_n) + Σ wt_θ(b_i) − Σ wt_U(c_i) ≤ C
/// along every arrow path of length 1..=`max_iter`, i.e. the
/// commensurability constant of δⁿ on the scanned range.
pub fn commensurability_dd(d: &DDStruct, max_iter: usize) -> i64 {
    let weighted: Vec<(usize, usize, i64)> =
        d.arrows.iter().map(|a| (a.src, a.dst, a.b.wt_theta() as i64 - a.c.wt_u() as i64)).collect();
    commensurability_paths(&d.gens, &weighted, max_iter)
}

pub fn commensurability_d(d: &DStruct<OverKDual>, max_iter: usize) -> i64 {
    let weighted: Vec<(usize, usize, i64)> = d.arrows.iter().map(|(s, t, b)| (*s, *t, b.wt_theta() as i64)).collect();
    commensurability_paths(&d.gens, &weighted, max_iter)
}

fn commensurability_paths(gens: &[Gen], arrows: &[(usize, usize, i64)], max_iter: usize) -> i64 {
    let mut c = 0;
    for (x0, g0) in gens.iter().enumerate() {
        let mut best: Vec<Option<i64>> = vec![None; gens.len()];
        best[x0] = Some(g0.filt);
        for _ in 0..max_iter {
            let mut next: Vec<Option<i64>> = vec![None; gens.len()];
            for (s, t, w) in arrows {
                if let Some(v) = best[*s] {
                    let u = v + w;
                    next[*t] = Some(next[*t].map_or(u, |o| o.max(u)));
                }
            }
            for (y, v) in next.iter().enumerate() {
                if let Some(v) = v {
                    c = c.max(v - gens[y].filt);
                }
            }
            best = next;
        }
    }
    c
}

/// Smallest C ≥ 0 with Σ wt_U(a_i) + filt(x) − filt(y) − wt_U(c) ≤ C on every
/// nonzero output y ⊗ c of the scanned actions.
pub fn commensurability_kda(m: &dyn KDa, max_len: usize, deg_cap: u32) -> Result<i64, EvalError> {
    let gens = m.gens();
    let cases = k_cases(gens, max_len, deg_cap);
    let vals: Result<Vec<i64>, EvalError> = cases
        .par_iter()
        .map(|(a, x)| {
            let wa: i64 = a.iter().map(|m| m.wt_u() as i64).sum();
            Ok(m.delta(a, *x)?
                .iter()
                .map(|(y, c)| wa + gens[*x].filt - gens[*y].filt - c.wt_u() as i64)
                .max()
                .unwrap_or(0))
        })
        .collect();
    Ok(vals?.into_iter().max().unwrap_or(0).max(0))
}

/// Largest number of algebra inputs with a nonzero action among the scanned
/// sequences.
pub fn bonsai_scan_kda(m: &dyn KDa, max_len: usize, deg_cap: u32) -> Result<usize, EvalError> {
    let cases = k_cases(m.gens(), max_len, deg_cap);
    let vals: Result<Vec<usize>, EvalError> =
        cases.par_iter().map(|(a, x)| Ok(if m.delta(a, *x)?.is_zero() { 0 } else { a.len() })).collect();
    Ok(vals?.into_iter().max().unwrap_or(0))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HomologyError {
    #[error("differential does not square to zero at generator {0}")]
    NotDifferential(usize),
    #[error("arrow {0} -> {1} does not lower the grading by one")]
    NotHomogeneous(usize, usize),
    #[error("arrow endpoint {0} out of range")]
    OutOfRange(usize),
}

/// Rank over F₂ of the 0/1 matrix whose rows are given as index sets.
fn f2_rank(rows: &[BTreeSet<usize>]) -> usize {
    let width = rows.iter().flat_map(|r| r.iter().copied()).max().map_or(0, |m| m + 1);
    let words = width.div_ceil(64);
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| {
            let mut v = vec![0u64; words];
            for &i in r {
                v[i / 64] ^= 1 << (i % 64);
            }
            v
        })
        .collect();
    let mut rank = 0;
    for col in 0..width {
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(p) = (rank..m.len()).find(|&i| m[i][w] & bit != 0) else { continue };
        m.swap(rank, p);
        let pivot = m[rank].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i != rank && row[w] & bit != 0 {
                for (a, b) in row.iter_mut().zip(&pivot) {
                    *a ^= b;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn differential_rows(n: usize, arrows: &[(usize, usize)]) -> Result<Vec<BTreeSet<usize>>, HomologyError> {
    let mut rows = vec![BTreeSet::new(); n];
    for &(s, t) in arrows {
        if s >= n || t >= n {
            return Err(HomologyError::OutOfRange(s.max(t)));
        }
        if !rows[s].insert(t) {
            rows[s].remove(&t);
        }
    }
    for (x, row) in rows.iter().enumerate() {
        let mut sq = BTreeSet::new();
        for y in row {
            for z in &rows[*y] {
                if !sq.insert(*z) {
                    sq.remove(z);
                }
            }
        }
        if !sq.is_empty() {
            return Err(HomologyError::NotDifferential(x));
        }
    }
    Ok(rows)
}

/// Total F₂ Betti number of the complex on `n` generators with d(s) ∋ t for
/// each arrow (s, t). Repeated arrows cancel.
pub fn f2_homology_rank(n: usize, arrows: &[(usize, usize)]) -> Result<usize, HomologyError> {
    let rows = differential_rows(n, arrows)?;
    Ok(n - 2 * f2_rank(&rows))
}

/// F₂ Betti numbers by degree for a complex whose differential lowers the
/// given grading by one.
pub fn f2_homology_ranks(degrees: &[i64], arrows: &[(usize, usize)]) -> Result<BTreeMap<i64, usize>, HomologyError> {
    let n = degrees.len();
    let rows = differential_rows(n, arrows)?;
    for (s, row) in rows.iter().enumerate() {
        for &t in row {
            if degrees[t] != degrees[s] - 1 {
                return Err(HomologyError::NotHomogeneous(s, t));
            }
        }
    }
    let mut dims: BTreeMap<i64, usize> = BTreeMap::new();
    let mut ranks: BTreeMap<i64, usize> = BTreeMap::new();
    for &d in degrees {
        *dims.entry(d).or_default() += 1;
    }
    for &d in dims.keys() {
        let part: Vec<BTreeSet<usize>> = (0..n).filter(|&i| degrees[i] == d).map(|i| rows[i].clone()).collect();
        ranks.insert(d, f2_rank(&part));
    }
    Ok(dims.iter().map(|(d, dim)| (*d, dim - ranks[d] - ranks.get(&(d + 1)).copied().unwrap_or(0))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra_k::parse_kmono;
    use crate::kdual::parse_dual;
    use proptest::prelude::*;

    fn k(s: &str) -> KMono {
        parse_kmono(s, None).unwrap()
    }

    fn d(s: &str) -> DualMono {
        parse_dual(s, None).unwrap()
    }

    const CO_TEXT: &str = "\
# cotrace
gen i0 i0,i0
gen i1 i1,i1
arrow i0 i0 w|W
arrow i0 i0 z|Z
arrow i0 i0 th|U
arrow i0 i1 s|sigma
arrow i0 i1 t|tau
arrow i1 i1 f+|T
arrow i1 i1 f-|T^-1
arrow i1 i1 th|U
";

    #[test]
    fn single_generator_without_arrows_is_type_d() {
        let dd: DStruct<OverKDual> = DStruct::new(vec![Gen::new("x", Idem::I0)]).unwrap();
        assert!(check_type_d(&dd).passed());
        let dk: DStruct<OverK> = DStruct::new(vec![Gen::new("x", Idem::I1)]).unwrap();
        assert!(check_type_d(&dk).passed());
    }

    #[test]
    fn w_z_cycle_fails_type_d() {
        let mut m: DStruct<OverKDual> = DStruct::new(vec![Gen::new("x", Idem::I0), Gen::new("y", Idem::I0)]).unwrap();
        m.add_arrow(0, 1, d("w")).unwrap();
        m.add_arrow(1, 0, d("z")).unwrap();
        let r = check_type_d(&m);
        assert!(!r.passed());
        assert_eq!(r.violations.len(), 2);
    }

    #[test]
    fn cotrace_file_passes_and_every_deletion_fails() {
        let co = DDStruct::parse(CO_TEXT).unwrap();
        assert_eq!(co.arrows.len(), 8);
        assert!(check_dd(&co).passed());
        let mut survivors = Vec::new();
        for a in &co.arrows {
            let mut m = co.clone();
            m.arrows.toggle(*a);
            if check_dd(&m).passed() {
                survivors.push(co.show_arrow(a));
            }
        }
        // The s- and t-terms of the relation cancel among themselves
        // (zs = sφ₊ and θs = sθ), so these two deletions are still DD.
        assert_eq!(survivors, vec!["i0 -> i1 s|sigma", "i0 -> i1 t|tau"]);
    }

    #[test]
    fn empty_dd_passes() {
        assert!(check_dd(&DDStruct::default()).passed());
    }

    #[test]
    fn dd_text_roundtrip() {
        let co = DDStruct::parse(CO_TEXT).unwrap();
        let again = DDStruct::parse(&co.to_text()).unwrap();
        assert!(co.compare(&again, "roundtrip").passed());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(DDStruct::parse("gen x i0\narrow x y w|W\n"), Err(StructError::DanglingArrow(_))));
        assert!(matches!(DDStruct::parse("gen x i0\ngen x i1\n"), Err(StructError::DuplicateGen(_))));
        assert!(matches!(DDStruct::parse("gen x i0\narrow x x s|sigma\n"), Err(StructError::IdemMismatch(_))));
        assert!(matches!(DDStruct::parse("node x i0\n"), Err(StructError::Syntax { .. })));
        assert!(matches!(DStruct::<OverKDual>::parse("gen x i0\narrow x x w|W\n"), Err(StructError::Syntax { .. })));
    }

    #[test]
    fn type_d_text_roundtrip_and_filtration() {
        let m = DStruct::<OverKDual>::parse("gen x i0 filt=2\ngen y i1\narrow x y s\n").unwrap();
        assert_eq!(m.gens[0].filt, 2);
        let again = DStruct::<OverKDual>::parse(&m.to_text()).unwrap();
        assert_eq!(m.arrows, again.arrows);
    }

    #[test]
    fn identity_bimodules_pass() {
        let id = FnKDa::identity();
        assert!(check_kda(&id, 3, 3).passed());
        assert!(check_strict_unital_kda(&id, 3, 2).passed());
        let idd = FnKDualDa::identity();
        assert!(check_kdual_da(&idd, 3, 3).passed());
        assert!(check_strict_unital_kdual_da(&idd, 3, 2).passed());
    }

    #[test]
    fn kda_checker_catches_a_bad_action() {
        let mut bad = FnKDa::identity();
        bad.rule = Arc::new(|a: &[KMono], _x: usize| {
            Ok(if a.len() == 1 && a[0] != KMono::W {
                F2Sum::term((a[0].left_idem().index(), a[0]))
            } else {
                F2Sum::zero()
            })
        });
        assert!(!check_kda(&bad, 2, 2).passed());
    }

    #[test]
    fn kdual_da_checker_sees_curvature() {
        let mut bad = FnKDualDa::identity();
        bad.rule = Arc::new(|_x: usize, b: &[DualMono]| {
            let skip = b.len() == 1 && b[0].left_idem() == Idem::I1 && b[0].length() == 2 && !b[0].has_theta();
            Ok(if b.len() == 1 && !skip { F2Sum::term((b[0], b[0].right_idem().index())) } else { F2Sum::zero() })
        });
        let r = check_kdual_da(&bad, 0, 2);
        assert!(!r.passed());
    }

    /// Two generators at idempotent 0 with m₁(x) = y and only unit actions.
    fn small_complex() -> FnKModule {
        FnKModule {
            gens: vec![Gen::new("x", Idem::I0), Gen::new("y", Idem::I0)],
            max_inputs: Some(1),
            unital: true,
            rule: Arc::new(|a: &[KMono], x: usize| {
                Ok(if a.is_empty() && x == 0 { F2Sum::term(1) } else { F2Sum::zero() })
            }),
        }
    }

    #[test]
    fn small_module_relations_and_units() {
        let m = small_complex();
        assert!(check_kmodule(&m, 3, 2).passed());
        assert!(check_strict_unital_kmodule(&m, 3, 2).passed());
    }

    #[test]
    fn injected_unit_action_is_caught() {
        let mut m = small_complex();
        m.unital = false;
        m.rule = Arc::new(|a: &[KMono], x: usize| {
            let mut out = F2Sum::zero();
            if a.is_empty() && x == 0 {
                out.toggle(1);
            }
            if a.len() == 1 && a[0].is_unit() {
                out.toggle(x);
            }
            if a.len() == 2 && a[1].is_unit() && a[0] == KMono::W {
                out.toggle(x);
            }
            Ok(out)
        });
        assert!(!check_strict_unital_kmodule(&m, 2, 1).passed());
    }

    #[test]
    fn diff_of_identity_is_zero() {
        let m: Arc<dyn KModule> = Arc::new(small_complex());
        let id = MorphismA::identity(m.clone());
        let z = MorphismA::zero(m.clone(), m);
        assert!(morphisms_agree(&morphism_diff(&id), &z, 3, 2).passed());
    }

    type Table = Vec<((Vec<KMono>, usize), Vec<usize>)>;

    fn table_morphism(m: Arc<dyn KModule>, table: Table) -> MorphismA {
        let map: BTreeMap<(Vec<KMono>, usize), F2Sum<usize>> =
            table.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect();
        MorphismA {
            src: m.clone(),
            tgt: m,
            f: Arc::new(move |a: &[KMono], x: usize| Ok(map.get(&(a.to_vec(), x)).cloned().unwrap_or_default())),
        }
    }

    fn arb_morphism(m: Arc<dyn KModule>) -> impl Strategy<Value = MorphismA> {
        let keys: Vec<(Vec<KMono>, usize)> = {
            let mut v = Vec::new();
            for s in [
                vec![],
                vec![KMono::W],
                vec![KMono::Z],
                vec![KMono::U0],
                vec![KMono::W, KMono::Z],
                vec![KMono::Z, KMono::W],
            ] {
                for x in 0..2 {
                    v.push((s.clone(), x));
                }
            }
            v
        };
        prop::collection::vec(prop::collection::vec(0usize..2, 0..3), keys.len())
            .prop_map(move |vals| table_morphism(m.clone(), keys.iter().cloned().zip(vals).collect()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn leibniz_and_d_squared(f in arb_morphism(Arc::new(small_complex())), g in arb_morphism(Arc::new(small_complex()))) {
            let lhs = morphism_diff(&morphism_compose(&g, &f));
            let rhs = morphism_sum(&morphism_compose(&morphism_diff(&g), &f), &morphism_compose(&g, &morphism_diff(&f)));
            prop_assert!(morphisms_agree(&lhs, &rhs, 3, 2).passed());
            let dd = morphism_diff(&morphism_diff(&f));
            let zero = MorphismA::zero(f.src.clone(), f.tgt.clone());
            prop_assert!(morphisms_agree(&dd, &zero, 3, 2).passed());
        }

        #[test]
        fn cone_is_a_module_iff_cycle(f in arb_morphism(Arc::new(small_complex()))) {
            let zero = MorphismA::zero(f.src.clone(), f.tgt.clone());
            let closed = morphisms_agree(&morphism_diff(&f), &zero, 3, 2).passed();
            prop_assert_eq!(check_kmodule(&cone(&f), 3, 2).passed(), closed);
        }
    }

    #[test]
    fn cone_of_identity_is_acyclic() {
        let m: Arc<dyn KModule> = Arc::new(small_complex());
        let c = cone(&MorphismA::identity(m));
        assert!(check_kmodule(&c, 2, 2).passed());
        let mut arrows = Vec::new();
        for x in 0..c.gens.len() {
            for y in c.act(&[], x).unwrap() {
                arrows.push((x, y));
            }
        }
        assert_eq!(f2_homology_rank(4, &arrows), Ok(0));
    }

    #[test]
    fn homology_examples() {
        assert_eq!(f2_homology_rank(2, &[(0, 1)]), Ok(0));
        assert_eq!(f2_homology_rank(1, &[]), Ok(1));
        assert_eq!(f2_homology_rank(3, &[(0, 1), (0, 1)]), Ok(3));
        assert_eq!(f2_homology_rank(3, &[(0, 1), (1, 2)]), Err(HomologyError::NotDifferential(0)));
        let r = f2_homology_ranks(&[1, 0, 0], &[(0, 1)]).unwrap();
        assert_eq!(r, BTreeMap::from([(0, 1), (1, 0)]));
        assert_eq!(f2_homology_ranks(&[1, 1], &[(0, 1)]), Err(HomologyError::NotHomogeneous(0, 1)));
    }

    #[test]
    fn scans_on_small_structures() {
        let co = DDStruct::parse(CO_TEXT).unwrap();
        assert_eq!(cobonsai_scan_dd(&co, 6), 0);
        assert_eq!(commensurability_dd(&co, 6), 0);
        assert_eq!(cobonsai_scan_dd(&DDStruct::default(), 4), 0);
        let mut m = DDStruct::new(vec![Gen::new("x", Idem::I0), Gen::new("y", Idem::I0).with_filt(-1)]).unwrap();
        m.add_arrow(0, 1, d("z.w"), k("Z")).unwrap();
        assert_eq!(cobonsai_scan_dd(&m, 3), 1);
        assert_eq!(commensurability_dd(&m, 3), 1);
        assert_eq!(commensurability_kda(&FnKDa::identity(), 2, 3), Ok(0));
        assert_eq!(bonsai_scan_kda(&FnKDa::identity(), 3, 2), Ok(1));
    }

    #[test]
    fn augmentation_keeps_unit_coefficients() {
        let mut m = DDStruct::new(vec![Gen::new("x", Idem::I0), Gen::new("y", Idem::I0)]).unwrap();
        m.add_arrow(0, 1, DualMono::unit(Idem::I0), k("W")).unwrap();
        m.add_arrow(0, 1, d("w"), KMono::unit(Idem::I0)).unwrap();
        let a = m.augment_right();
        assert_eq!(a.arrows.len(), 1);
        assert!(a.arrows.contains(&(0, 1, d("w"))));
    }

    #[test]
    fn sequence_counts() {
        assert_eq!(k_sequences(0, 3), vec![Vec::<KMono>::new()]);
        let one = k_sequences(1, 1);
        assert_eq!(one.len(), 1 + 2 + 3 + 2);
        for s in k_sequences(3, 2) {
            for w in s.windows(2) {
                assert!(w[1].mul(&w[0]).is_some() || w[1].right_idem() == w[0].left_idem());
            }
        }
        for s in dual_sequences(3, 2) {
            for w in s.windows(2) {
                assert_eq!(w[0].right_idem(), w[1].left_idem());
            }
        }
    }
}
