//! Box tensor products. A type-D side supplies sequences of algebra
//! elements along its arrow paths; the A∞ side consumes them.
//!
//! Products with the trace run the trace's perturbation walk directly on
//! the arrows of the type-D side, so no input sequence is enumerated.

use crate::algebra_k::KMono;
use crate::f2::F2Sum;
use crate::idem::Idem;
use crate::kdual::DualMono;
use crate::perturbation::{trace_feed, Feed, SeqFeed};
use crate::structures::{DDArrow, DDStruct, DStruct, EvalError, Gen, KDa, KDualDa, KModule, OverKDual};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

/// Right 𝒦^! inputs drawn from the arrows of a DD structure. The payload is
/// the endpoint and the product c_n⋯c₁ of the right coefficients.
pub struct DDRightFeed<'a> {
    dd: &'a DDStruct,
    out: Vec<Vec<DDArrow>>,
}

impl<'a> DDRightFeed<'a> {
    pub fn new(dd: &'a DDStruct) -> Self {
        DDRightFeed { dd, out: dd.out_arrows() }
    }
}

impl Feed<DualMono> for DDRightFeed<'_> {
    type Pos = usize;
    type Pay = (usize, KMono);

    fn moves(&self, p: &usize) -> Vec<(DualMono, usize, (usize, KMono))> {
        self.out[*p].iter().filter(|a| !a.b.is_unit()).map(|a| (a.b, a.dst, (a.dst, a.c))).collect()
    }

    fn stop(&self, p: &usize) -> Option<(usize, KMono)> {
        Some((*p, KMono::unit(self.dd.gens[*p].right)))
    }

    fn chain(&self, edge: &(usize, KMono), rest: &(usize, KMono)) -> Option<(usize, KMono)> {
        rest.1.mul(&edge.1).map(|c| (rest.0, c))
    }
}

/// Right 𝒦^! inputs drawn from the arrows of a left type-D structure.
pub struct DRightFeed {
    out: Vec<Vec<(usize, DualMono)>>,
}

impl DRightFeed {
    pub fn new(d: &DStruct<OverKDual>) -> Self {
        DRightFeed { out: d.out_arrows() }
    }
}

impl Feed<DualMono> for DRightFeed {
    type Pos = usize;
    type Pay = usize;

    fn moves(&self, p: &usize) -> Vec<(DualMono, usize, usize)> {
        self.out[*p].iter().filter(|(_, b)| !b.is_unit()).map(|(y, b)| (*b, *y, *y)).collect()
    }

    fn stop(&self, p: &usize) -> Option<usize> {
        Some(*p)
    }

    fn chain(&self, _: &usize, rest: &usize) -> Option<usize> {
        Some(*rest)
    }
}

/// Left 𝒦 inputs drawn from exactly `len` consecutive arrows of a DD
/// structure. The payload is the endpoint and the product b₁⋯b_len.
pub struct DDLeftFeed<'a> {
    dd: &'a DDStruct,
    out: &'a [Vec<DDArrow>],
    len: usize,
}

impl Feed<KMono> for DDLeftFeed<'_> {
    type Pos = (usize, usize);
    type Pay = (usize, DualMono);

    fn moves(&self, p: &(usize, usize)) -> Vec<(KMono, (usize, usize), (usize, DualMono))> {
        if p.1 >= self.len {
            return Vec::new();
        }
        self.out[p.0].iter().filter(|a| !a.c.is_unit()).map(|a| (a.c, (a.dst, p.1 + 1), (a.dst, a.b))).collect()
    }

    fn stop(&self, p: &(usize, usize)) -> Option<(usize, DualMono)> {
        (p.1 == self.len).then(|| (p.0, DualMono::unit(self.dd.gens[p.0].left)))
    }

    fn chain(&self, edge: &(usize, DualMono), rest: &(usize, DualMono)) -> Option<(usize, DualMono)> {
        edge.1.mul(&rest.1).map(|b| (rest.0, b))
    }
}

fn walk_cap(a: &[KMono]) -> usize {
    let size: u32 = a.iter().map(|m| m.degree() + 1).sum();
    6 * size as usize + 12
}

fn dual_walk_cap(k: usize, b: &[DualMono]) -> usize {
    let size: u32 = b.iter().map(|m| m.length() + 1).sum();
    6 * (size as usize + k) + 12
}

/// The trace boxed with a DD structure: a DA bimodule over (𝒦, 𝒦) whose
/// generators are those of the DD structure.
pub struct TrBoxDD {
    pub dd: DDStruct,
    out: Vec<Vec<DDArrow>>,
}

impl TrBoxDD {
    pub fn new(dd: DDStruct) -> Self {
        let out = dd.out_arrows();
        TrBoxDD { dd, out }
    }
}

impl KDa for TrBoxDD {
    fn gens(&self) -> &[Gen] {
        &self.dd.gens
    }

    fn delta(&self, a: &[KMono], x: usize) -> Result<F2Sum<(usize, KMono)>, EvalError> {
        let g = &self.dd.gens[x];
        if a.first().is_some_and(|a1| a1.right_idem() != g.left) {
            return Ok(F2Sum::zero());
        }
        if a.iter().any(|m| m.is_unit()) {
            return Ok(if a.len() == 1 { F2Sum::term((x, KMono::unit(g.right))) } else { F2Sum::zero() });
        }
        let mut out = F2Sum::zero();
        if a.is_empty() {
            for arr in self.out[x].iter().filter(|arr| arr.b.is_unit()) {
                out.toggle((arr.dst, arr.c));
            }
        }
        let feed = DDRightFeed { dd: &self.dd, out: self.out.clone() };
        for (e, (), (y, c)) in trace_feed(g.left, &SeqFeed(a), 0, &feed, x, walk_cap(a))? {
            debug_assert_eq!(e, self.dd.gens[y].left);
            out.toggle((y, c));
        }
        Ok(out)
    }

    fn max_inputs(&self) -> Option<usize> {
        None
    }
}

/// The trace boxed with a left type-D structure over 𝒦^!: a type-A module over 𝒦.
pub struct TrBoxD {
    pub d: DStruct<OverKDual>,
    feed: DRightFeed,
}

impl TrBoxD {
    pub fn new(d: DStruct<OverKDual>) -> Self {
        let feed = DRightFeed::new(&d);
        TrBoxD { d, feed }
    }
}

impl KModule for TrBoxD {
    fn gens(&self) -> &[Gen] {
        &self.d.gens
    }

    fn act(&self, a: &[KMono], x: usize) -> Result<F2Sum<usize>, EvalError> {
        let e = self.d.gens[x].left;
        if a.first().is_some_and(|a1| a1.right_idem() != e) {
            return Ok(F2Sum::zero());
        }
        if a.iter().any(|m| m.is_unit()) {
            return Ok(if a.len() == 1 { F2Sum::term(x) } else { F2Sum::zero() });
        }
        let mut out = F2Sum::zero();
        if a.is_empty() {
            for (y, b) in &self.feed.out[x] {
                if b.is_unit() {
                    out.toggle(*y);
                }
            }
        }
        for (_, (), y) in trace_feed(e, &SeqFeed(a), 0, &self.feed, x, walk_cap(a))? {
            out.toggle(y);
        }
        Ok(out)
    }

    fn max_inputs(&self) -> Option<usize> {
        None
    }
}

/// A DD structure boxed with the trace: a DA bimodule over (𝒦^!, 𝒦^!).
///
/// A nonzero trace action m_{k|1|n} has k = 1 − n + Σ len(b_i), so exactly
/// that many DD arrows are fed in. With `guard` set, the two next lengths are
/// also evaluated and must vanish.
pub struct DDBoxTr {
    pub dd: DDStruct,
    out: Vec<Vec<DDArrow>>,
    pub guard: bool,
}

impl DDBoxTr {
    pub fn new(dd: DDStruct, guard: bool) -> Self {
        let out = dd.out_arrows();
        DDBoxTr { dd, out, guard }
    }

    fn run(&self, x: usize, b: &[DualMono], len: usize) -> Result<F2Sum<(DualMono, usize)>, EvalError> {
        let feed = DDLeftFeed { dd: &self.dd, out: &self.out, len };
        let start = self.dd.gens[x].right;
        let mut out = F2Sum::zero();
        for (e, (y, beta), ()) in trace_feed(start, &feed, (x, 0), &SeqFeed(b), 0, dual_walk_cap(len, b))? {
            debug_assert_eq!(e, self.dd.gens[y].right);
            out.toggle((beta, y));
        }
        Ok(out)
    }
}

impl KDualDa for DDBoxTr {
    fn gens(&self) -> &[Gen] {
        &self.dd.gens
    }

    fn delta(&self, x: usize, b: &[DualMono]) -> Result<F2Sum<(DualMono, usize)>, EvalError> {
        let g = &self.dd.gens[x];
        if b.first().is_some_and(|b1| b1.left_idem() != g.right) {
            return Ok(F2Sum::zero());
        }
        if b.iter().any(|m| m.is_unit()) {
            return Ok(if b.len() == 1 { F2Sum::term((DualMono::unit(g.left), x)) } else { F2Sum::zero() });
        }
        let mut out = F2Sum::zero();
        if b.is_empty() {
            for arr in self.out[x].iter().filter(|arr| arr.c.is_unit()) {
                out.toggle((arr.b, arr.dst));
            }
        }
        let letters: i64 = b.iter().map(|m| m.length() as i64).sum();
        let k = 1 - b.len() as i64 + letters;
        if k >= 0 {
            out.add_sum(self.run(x, b, k as usize)?);
        }
        if self.guard {
            for extra in [k + 1, k + 2] {
                if extra >= 0 && !self.run(x, b, extra as usize)?.is_zero() {
                    return Err(EvalError::NonTermination(format!(
                        "{extra} arrows feed a nonzero trace action on ({})",
                        crate::structures::show_seq(b)
                    )));
                }
            }
        }
        Ok(out)
    }

    fn max_inputs(&self) -> Option<usize> {
        None
    }
}

/// A path of DD arrows with the product of its left coefficients.
struct Path {
    end: usize,
    beta: DualMono,
    cs: Vec<KMono>,
}

/// Paths of exactly `len` arrows from `x` whose left coefficients multiply
/// to a nonzero monomial.
fn left_paths(dd: &DDStruct, out: &[Vec<DDArrow>], x: usize, len: usize) -> Vec<Path> {
    let mut layer = vec![Path { end: x, beta: DualMono::unit(dd.gens[x].left), cs: Vec::new() }];
    for _ in 0..len {
        let mut next = Vec::new();
        for p in &layer {
            for a in &out[p.end] {
                if let Some(beta) = p.beta.mul(&a.b) {
                    let mut cs = p.cs.clone();
                    cs.push(a.c);
                    next.push(Path { end: a.dst, beta, cs });
                }
            }
        }
        layer = next;
    }
    layer
}

/// Paths of exactly `len` arrows from `x` with the product c_len⋯c₁ of
/// their right coefficients and the list of left coefficients.
fn right_paths(dd: &DDStruct, out: &[Vec<DDArrow>], x: usize, len: usize) -> Vec<(usize, Vec<DualMono>, KMono)> {
    let mut layer = vec![(x, Vec::new(), KMono::unit(dd.gens[x].right))];
    for _ in 0..len {
        let mut next = Vec::new();
        for (end, bs, c) in &layer {
            for a in &out[*end] {
                if let Some(c2) = a.c.mul(c) {
                    let mut bs = bs.clone();
                    bs.push(a.b);
                    next.push((a.dst, bs, c2));
                }
            }
        }
        layer = next;
    }
    layer
}

/// How far to feed an A∞ side that declares no bound of its own.
#[derive(Clone, Copy, Debug)]
pub struct Guards {
    /// Largest number of inputs fed when the A∞ side declares no bound.
    pub max_inputs: usize,
    /// Number of further lengths that must produce nothing.
    pub check_beyond: usize,
}

impl Default for Guards {
    fn default() -> Self {
        Guards { max_inputs: 6, check_beyond: 2 }
    }
}

fn input_bound(declared: Option<usize>, g: Guards) -> (usize, usize) {
    match declared {
        Some(n) => (n, 0),
        None => (g.max_inputs, g.check_beyond),
    }
}

pub fn pair_name(a: &str, b: &str) -> String {
    format!("{a}.{b}")
}

fn pair_gens(left: &[Gen], right: &[Gen]) -> (Vec<Gen>, HashMap<(usize, usize), usize>) {
    let mut gens = Vec::new();
    let mut index = HashMap::new();
    for (i, x) in left.iter().enumerate() {
        for (j, y) in right.iter().enumerate() {
            if x.right == y.left {
                index.insert((i, j), gens.len());
                gens.push(Gen { id: pair_name(&x.id, &y.id), left: x.left, right: y.right, filt: x.filt + y.filt });
            }
        }
    }
    (gens, index)
}

fn nonterm(what: &str, len: usize) -> EvalError {
    EvalError::NonTermination(format!("{what} still acts on {len} inputs beyond the guard"))
}

/// N ⊠ M for a DD structure N and a DA bimodule M over (𝒦, 𝒦).
pub fn box_dd_da(n: &DDStruct, m: &dyn KDa, guards: Guards) -> Result<DDStruct, EvalError> {
    let out = n.out_arrows();
    let (gens, index) = pair_gens(&n.gens, m.gens());
    let mut res = DDStruct { gens, arrows: F2Sum::zero() };
    let (bound, beyond) = input_bound(m.max_inputs(), guards);
    let mut pairs: Vec<_> = index.iter().map(|(k, v)| (*k, *v)).collect();
    pairs.sort();
    for ((x, y), src) in pairs {
        for len in 0..=bound + beyond {
            for p in left_paths(n, &out, x, len) {
                for (y2, c) in m.delta(&p.cs, y)? {
                    if len > bound {
                        return Err(nonterm("DA bimodule", len));
                    }
                    let dst = index[&(p.end, y2)];
                    res.arrows.toggle(DDArrow { src, dst, b: p.beta, c });
                }
            }
        }
    }
    Ok(res)
}

/// N ⊠ M for a DD structure N and a type-A module M over 𝒦.
pub fn box_dd_a(n: &DDStruct, m: &dyn KModule, guards: Guards) -> Result<DStruct<OverKDual>, EvalError> {
    let out = n.out_arrows();
    let (gens, index) = pair_gens(&n.gens, m.gens());
    let gens = gens.into_iter().map(|g| Gen { right: g.left, ..g }).collect();
    let mut res = DStruct { gens, arrows: F2Sum::zero() };
    let (bound, beyond) = input_bound(m.max_inputs(), guards);
    let mut pairs: Vec<_> = index.iter().map(|(k, v)| (*k, *v)).collect();
    pairs.sort();
    for ((x, y), src) in pairs {
        for len in 0..=bound + beyond {
            for p in left_paths(n, &out, x, len) {
                for y2 in m.act(&p.cs, y)? {
                    if len > bound {
                        return Err(nonterm("type-A module", len));
                    }
                    res.arrows.toggle((src, index[&(p.end, y2)], p.beta));
                }
            }
        }
    }
    Ok(res)
}

/// M ⊠ N for a DA bimodule M over (𝒦^!, 𝒦^!) and a DD structure N.
pub fn box_dualda_dd(m: &dyn KDualDa, n: &DDStruct, guards: Guards) -> Result<DDStruct, EvalError> {
    let out = n.out_arrows();
    let (gens, index) = pair_gens(m.gens(), &n.gens);
    let mut res = DDStruct { gens, arrows: F2Sum::zero() };
    let (bound, beyond) = input_bound(m.max_inputs(), guards);
    let mut pairs: Vec<_> = index.iter().map(|(k, v)| (*k, *v)).collect();
    pairs.sort();
    for ((y, x), src) in pairs {
        for len in 0..=bound + beyond {
            for (end, bs, c) in right_paths(n, &out, x, len) {
                for (beta, y2) in m.delta(y, &bs)? {
                    if len > bound {
                        return Err(nonterm("DA bimodule", len));
                    }
                    res.arrows.toggle(DDArrow { src, dst: index[&(y2, end)], b: beta, c });
                }
            }
        }
    }
    Ok(res)
}

/// Which kind of structure sits on one side of a bimodule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    D,
    A,
    Empty,
}

/// The algebra acting on a side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alg {
    K,
    KDual,
}

/// A module or bimodule together with the type of each side.
#[derive(Clone)]
pub enum SidedModule {
    /// Left type-D over 𝒦^!.
    D(DStruct<OverKDual>),
    /// Left type-D over 𝒦^!, right type-D over 𝒦.
    DD(DDStruct),
    /// Left type-A over 𝒦.
    A(Arc<dyn KModule>),
    /// Left type-A over 𝒦, right type-D over 𝒦.
    DA(Arc<dyn KDa>),
    /// Left type-D over 𝒦^!, right type-A over 𝒦^!.
    DualDA(Arc<dyn KDualDa>),
    /// The trace: left type-A over 𝒦, right type-A over 𝒦^!.
    Trace,
}

impl SidedModule {
    pub fn left(&self) -> (Side, Option<Alg>) {
        match self {
            SidedModule::D(_) | SidedModule::DD(_) | SidedModule::DualDA(_) => (Side::D, Some(Alg::KDual)),
            SidedModule::A(_) | SidedModule::DA(_) | SidedModule::Trace => (Side::A, Some(Alg::K)),
        }
    }

    pub fn right(&self) -> (Side, Option<Alg>) {
        match self {
            SidedModule::D(_) | SidedModule::A(_) => (Side::Empty, None),
            SidedModule::DD(_) | SidedModule::DA(_) => (Side::D, Some(Alg::K)),
            SidedModule::DualDA(_) | SidedModule::Trace => (Side::A, Some(Alg::KDual)),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SidedModule::D(_) => "type-D over K!",
            SidedModule::DD(_) => "DD over (K!, K)",
            SidedModule::A(_) => "type-A over K",
            SidedModule::DA(_) => "DA over (K, K)",
            SidedModule::DualDA(_) => "DA over (K!, K!)",
            SidedModule::Trace => "trace AA over (K, K!)",
        }
    }
}

impl fmt::Debug for SidedModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SidedModule({})", self.kind())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BoxError {
    #[error("cannot pair {0} with {1}: the right side of the first must be the opposite type of the left side of the second over the same algebra")]
    SideMismatch(String, String),
    #[error("pairing {0} with {1} is not implemented")]
    Unsupported(String, String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// M ⊠ N, pairing the right side of M with the left side of N.
pub fn box_tensor(m: &SidedModule, n: &SidedModule, guards: Guards) -> Result<SidedModule, BoxError> {
    let (rs, ra) = m.right();
    let (ls, la) = n.left();
    let complementary = matches!((rs, ls), (Side::D, Side::A) | (Side::A, Side::D));
    if !complementary || ra != la {
        return Err(BoxError::SideMismatch(m.kind().into(), n.kind().into()));
    }
    Ok(match (m, n) {
        (SidedModule::DD(a), SidedModule::A(b)) => SidedModule::D(box_dd_a(a, b.as_ref(), guards)?),
        (SidedModule::DD(a), SidedModule::DA(b)) => SidedModule::DD(box_dd_da(a, b.as_ref(), guards)?),
        (SidedModule::DD(a), SidedModule::Trace) => SidedModule::DualDA(Arc::new(DDBoxTr::new(a.clone(), false))),
        (SidedModule::Trace, SidedModule::D(b)) => SidedModule::A(Arc::new(TrBoxD::new(b.clone()))),
        (SidedModule::Trace, SidedModule::DD(b)) => SidedModule::DA(Arc::new(TrBoxDD::new(b.clone()))),
        (SidedModule::DualDA(a), SidedModule::DD(b)) => SidedModule::DD(box_dualda_dd(a.as_ref(), b, guards)?),
        _ => return Err(BoxError::Unsupported(m.kind().into(), n.kind().into())),
    })
}

/// The generator of a two-sided structure sitting in idempotent `e` on both sides.
pub fn idem_gen_index(gens: &[Gen], e: Idem) -> Option<usize> {
    gens.iter().position(|g| g.left == e && g.right == e)
}
