//! The bimodule ℒ, its retraction onto the rank-two trace, and the trace
//! actions obtained from the perturbation lemma with a twist.
//!
//! A state of ℒ is x ⊗ y* with x ∈ 𝒦 and y* dual to a 𝒦^! monomial y, where
//! x and y end in the same idempotent. Its ℒ-idempotents are the left
//! idempotents of x and y.

use crate::algebra_k::{Col, KMono};
use crate::f2::F2Sum;
use crate::idem::Idem;
use crate::kdual::{DualMono, Phi, St, Wz};
use crate::report::Report;
use std::collections::HashMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LState {
    pub x: KMono,
    pub y: DualMono,
}

pub type LElt = F2Sum<LState>;

impl LState {
    pub fn new(x: KMono, y: DualMono) -> Option<LState> {
        (x.right_idem() == y.right_idem()).then_some(LState { x, y })
    }

    pub fn idems(&self) -> (Idem, Idem) {
        (self.x.left_idem(), self.y.left_idem())
    }

    /// All states with 𝒦-degree ≤ `deg` and dual length ≤ `len`.
    pub fn all_bounded(deg: u32, len: u32) -> Vec<LState> {
        let xs = KMono::all_up_to_degree(deg);
        let ys = DualMono::all_up_to_length(len);
        let mut out = Vec::new();
        for x in &xs {
            for y in &ys {
                if let Some(s) = LState::new(*x, *y) {
                    out.push(s);
                }
            }
        }
        out
    }
}

impl fmt::Display for LState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|({})*", self.x, self.y)
    }
}

fn single(x: KMono, y: DualMono) -> LElt {
    LState::new(x, y).map(LElt::term).unwrap_or_default()
}

/// The eight arrows b|c of the cotrace, as (𝒦^! coefficient, 𝒦 coefficient).
pub fn cotrace_arrows() -> Vec<(DualMono, KMono)> {
    vec![
        (DualMono::w(), KMono::W),
        (DualMono::z(), KMono::Z),
        (DualMono::theta(Idem::I0), KMono::U0),
        (DualMono::s(), KMono::SIGMA),
        (DualMono::t(), KMono::TAU),
        (DualMono::phi(Phi::Plus), KMono::T),
        (DualMono::phi(Phi::Minus), KMono::TINV),
        (DualMono::theta(Idem::I1), KMono::U),
    ]
}

/// m_{1|1|0}(a, −): (x, y) ↦ (a·x, y).
pub fn l_left_act(a: &KMono, s: &LState) -> Option<LState> {
    a.mul(&s.x).map(|x| LState { x, y: s.y })
}

/// m_{0|1|1}(−, b): (x, y) ↦ Σ (x, y') over b·y' = y.
pub fn l_right_act(s: &LState, b: &DualMono) -> Vec<LState> {
    b.left_quotients(&s.y).into_iter().filter_map(|y| LState::new(s.x, y)).collect()
}

/// The part of m_{0|1|0} coming from the cotrace arrows: (x, y'·b) ↦ (x·c, y').
pub fn cotrace_term(s: &LState) -> LElt {
    cotrace_term_with(s, &cotrace_arrows())
}

pub fn cotrace_term_with(s: &LState, arrows: &[(DualMono, KMono)]) -> LElt {
    let mut out = LElt::zero();
    for (b, c) in arrows {
        let Some(xc) = s.x.mul(c) else { continue };
        for y in b.right_quotients(&s.y) {
            if let Some(t) = LState::new(xc, y) {
                out.toggle(t);
            }
        }
    }
    out
}

/// The part of m_{0|1|0} dual to μ₁: (x, u·wz) and (x, u·zw) ↦ (x, uθ).
pub fn mu1_dual(s: &LState) -> LElt {
    match s.y {
        DualMono::Word00 { first, len, th: false } if len >= 2 => single(s.x, DualMono::word00(first, len - 2, true)),
        _ => LElt::zero(),
    }
}

/// The full m_{0|1|0} of ℒ.
pub fn l_diff(s: &LState) -> LElt {
    cotrace_term(s) + mu1_dual(s)
}

fn last00(y: &DualMono) -> Option<Wz> {
    match *y {
        DualMono::Word00 { first, len, .. } if len > 0 => Some(if len % 2 == 1 { first } else { first.other() }),
        _ => None,
    }
}

fn last11(y: &DualMono) -> Option<Phi> {
    match *y {
        DualMono::Word11 { first, len, .. } if len > 0 => Some(if len % 2 == 1 { first } else { first.other() }),
        _ => None,
    }
}

fn word_len(y: &DualMono) -> u32 {
    match *y {
        DualMono::Word00 { len, .. } | DualMono::Word11 { len, .. } => len,
        DualMono::Bridge01 { .. } => 0,
    }
}

/// Removes the last letter of a word, keeping θ.
fn drop_last(y: &DualMono) -> DualMono {
    match *y {
        DualMono::Word00 { first, len, th } => DualMono::word00(first, len - 1, th),
        DualMono::Word11 { first, len, th } => DualMono::word11(first, len - 1, th),
        b => b,
    }
}

fn append(y: &DualMono, letter: DualMono) -> DualMono {
    y.mul(&letter).expect("appending the opposite letter never vanishes")
}

fn poly(w: u32, z: u32) -> KMono {
    KMono::Poly00 { w, z }
}

fn laurent(u: u32, t: i32) -> KMono {
    KMono::Laurent11 { u, t }
}

fn arrow(u: u32, t: i32, col: Col) -> KMono {
    KMono::Arrow10 { u, t, col }
}

/// A bridge element with the given letter, φ flag and θ flag.
fn bridge(letter: St, phi: bool, th: bool) -> DualMono {
    DualMono::Bridge01 { letter, phi, th }
}

/// The internal differential d of ℒ, one table per pair of idempotents.
pub fn sdr_d(s: &LState) -> LElt {
    let y = s.y;
    match (s.x, y) {
        (KMono::Poly00 { w: a, z: b }, DualMono::Word00 { len, th, .. }) => {
            if len == 0 {
                if th && a == b {
                    return single(poly(a + 1, b + 1), DualMono::unit(Idem::I0));
                }
                return LElt::zero();
            }
            match last00(&y) {
                Some(Wz::W) if a >= b => single(poly(a + 1, b), drop_last(&y)),
                Some(Wz::Z) if b >= a => single(poly(a, b + 1), drop_last(&y)),
                _ => LElt::zero(),
            }
        }
        (KMono::Laurent11 { u, t }, DualMono::Bridge01 { letter, phi, th }) => {
            let col = if letter == St::S { Col::Sigma } else { Col::Tau };
            let rest = if phi {
                DualMono::word00(letter.partner(), 1, th)
            } else {
                DualMono::unit(Idem::I0).with_theta(th).unwrap()
            };
            single(arrow(u, t, col), rest)
        }
        (KMono::Arrow10 { u, t, col }, DualMono::Word00 { len, .. }) if len >= 2 => match (col, last00(&y)) {
            (Col::Sigma, Some(Wz::Z)) => single(arrow(u, t + 1, col), drop_last(&y)),
            (Col::Tau, Some(Wz::W)) => single(arrow(u, t - 1, col), drop_last(&y)),
            _ => LElt::zero(),
        },
        (KMono::Laurent11 { u, t: j }, DualMono::Word11 { th, .. }) => {
            let mut out = LElt::zero();
            if th {
                out.toggle(LState { x: laurent(u + 1, j), y: y.with_theta(false).unwrap() });
            }
            match last11(&y) {
                Some(Phi::Plus) if j >= 0 => out.toggle(LState { x: laurent(u, j + 1), y: drop_last(&y) }),
                Some(Phi::Minus) if j <= 0 => out.toggle(LState { x: laurent(u, j - 1), y: drop_last(&y) }),
                _ => {}
            }
            out
        }
        _ => LElt::zero(),
    }
}

/// The homotopy H of the retraction.
pub fn sdr_h(s: &LState) -> LElt {
    let y = s.y;
    let mut out = LElt::zero();
    match (s.x, y) {
        (KMono::Poly00 { w: a, z: b }, DualMono::Word00 { len, th, .. }) => {
            if len == 0 {
                let w = DualMono::w().with_theta(th).unwrap();
                let z = DualMono::z().with_theta(th).unwrap();
                if a > b {
                    out.toggle(LState { x: poly(a - 1, b), y: w });
                }
                if b > a {
                    out.toggle(LState { x: poly(a, b - 1), y: z });
                }
                if !th && a == b && a > 0 {
                    out.toggle(LState { x: poly(a - 1, b - 1), y: DualMono::theta(Idem::I0) });
                }
            } else {
                match last00(&y) {
                    Some(Wz::W) if b > a => out.toggle(LState { x: poly(a, b - 1), y: append(&y, DualMono::z()) }),
                    Some(Wz::Z) if a > b => out.toggle(LState { x: poly(a - 1, b), y: append(&y, DualMono::w()) }),
                    _ => {}
                }
            }
        }
        (KMono::Arrow10 { u, t, col }, DualMono::Word00 { th, .. }) => {
            let letter = if col == Col::Sigma { St::S } else { St::T };
            let (partner, away, away_step) = match col {
                Col::Sigma => (Wz::Z, Wz::W, -1),
                Col::Tau => (Wz::W, Wz::Z, 1),
            };
            let len = word_len(&y);
            if len == 0 {
                out.toggle(LState { x: laurent(u, t), y: bridge(letter, false, th) });
            } else if len == 1 && last00(&y) == Some(partner) {
                out.toggle(LState { x: laurent(u, t), y: bridge(letter, true, th) });
            } else if last00(&y) == Some(away) {
                let letter_dual = DualMono::word00(partner, 1, false);
                out.toggle(LState { x: arrow(u, t + away_step, col), y: append(&y, letter_dual) });
            }
        }
        (KMono::Laurent11 { u, t: j }, DualMono::Word11 { len, th, .. }) => {
            if len == 0 {
                let fp = DualMono::phi(Phi::Plus).with_theta(th).unwrap();
                let fm = DualMono::phi(Phi::Minus).with_theta(th).unwrap();
                if j > 0 {
                    out.toggle(LState { x: laurent(u, j - 1), y: fp });
                }
                if j < 0 {
                    out.toggle(LState { x: laurent(u, j + 1), y: fm });
                }
                if !th && j == 0 && u > 0 {
                    out.toggle(LState { x: laurent(u - 1, 0), y: DualMono::theta(Idem::I1) });
                }
            } else {
                match last11(&y) {
                    Some(Phi::Minus) if j > 0 => {
                        out.toggle(LState { x: laurent(u, j - 1), y: append(&y, DualMono::phi(Phi::Plus)) })
                    }
                    Some(Phi::Plus) if j < 0 => {
                        out.toggle(LState { x: laurent(u, j + 1), y: append(&y, DualMono::phi(Phi::Minus)) })
                    }
                    _ => {}
                }
            }
        }
        _ => {}
    }
    out
}

/// Π: ℒ → Tr, nonzero only on 1 ⊗ 1* in the diagonal idempotents.
pub fn sdr_pi(s: &LState) -> F2Sum<Idem> {
    let (a, b) = s.idems();
    if a == b && s.x.is_unit() && s.y.is_unit() {
        F2Sum::term(a)
    } else {
        F2Sum::zero()
    }
}

/// I: Tr → ℒ.
pub fn sdr_i(e: Idem) -> LState {
    LState { x: KMono::unit(e), y: DualMono::unit(e) }
}

/// The μ₂-part of the twist: the cotrace arrows not already in d.
pub fn alpha_mu2(s: &LState) -> LElt {
    cotrace_term(s) + sdr_d(s)
}

/// The full twist α₀|₁|₀ = m₀|₁|₀ − d.
pub fn alpha010(s: &LState) -> LElt {
    alpha_mu2(s) + mu1_dual(s)
}

fn apply(f: impl Fn(&LState) -> LElt, v: &LElt) -> LElt {
    v.map_linear(f)
}

/// Checks the five retraction identities and d² = 0 on bounded states.
pub fn sdr_verify(deg_cap: u32) -> Report {
    sdr_verify_with(deg_cap, &sdr_h)
}

pub fn sdr_verify_with(deg_cap: u32, h: &dyn Fn(&LState) -> LElt) -> Report {
    let mut r = Report::new(format!("SDR identities on ℒ (degree ≤ {deg_cap})"));
    for e in Idem::BOTH {
        let i = sdr_i(e);
        r.compare(format!("ΠI({e})"), &F2Sum::term(e), &sdr_pi(&i));
        r.compare(format!("HI({e})"), &LElt::zero(), &h(&i));
        r.compare(format!("dI({e})"), &LElt::zero(), &sdr_d(&i));
    }
    for s in LState::all_bounded(deg_cap, deg_cap) {
        let v = LElt::term(s);
        let hv = apply(h, &v);
        let ip = sdr_pi(&s).map_linear(|e| LElt::term(sdr_i(*e)));
        let lhs = ip + v.clone();
        let rhs = apply(sdr_d, &hv) + apply(h, &apply(sdr_d, &v));
        r.compare(format!("IΠ + id = dH + Hd at {s}"), &lhs, &rhs);
        r.compare(format!("HH at {s}"), &LElt::zero(), &apply(h, &hv));
        r.compare(format!("ΠH at {s}"), &F2Sum::zero(), &hv.map_linear(sdr_pi));
        r.compare(format!("dd at {s}"), &LElt::zero(), &apply(sdr_d, &apply(sdr_d, &v)));
        r.compare(format!("Πd at {s}"), &F2Sum::zero(), &sdr_d(&s).map_linear(sdr_pi));
    }
    r
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("perturbation series still live after {0} steps")]
    CapExceeded(usize),
    #[error("unexpected μ₁-dual component {0} on a contributing path")]
    UnexpectedMu1(String),
}

/// The six μ₁-dual components that may appear on a contributing path.
fn allowed_mu1(from: &LState) -> bool {
    let w = |s: &str| crate::kdual::parse_dual(s, None).unwrap();
    match from.x {
        KMono::Poly00 { .. } => from.y == w("w.z") || from.y == w("z.w"),
        KMono::Arrow10 { col: Col::Sigma, .. } => from.y == w("w.z") || from.y == w("z.w.z"),
        KMono::Arrow10 { col: Col::Tau, .. } => from.y == w("z.w") || from.y == w("w.z.w"),
        _ => false,
    }
}

/// One α-step in a contributing path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Left(KMono),
    Right(DualMono),
    Mu1,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Left(a) => write!(f, "{a}·"),
            Step::Right(b) => write!(f, "·{b}"),
            Step::Mu1 => write!(f, "μ₁*"),
        }
    }
}

/// One side's supply of trace inputs: a graph of positions whose edges carry
/// an algebra input and a payload. A fixed input sequence is a path graph;
/// a type-D structure supplies its arrows.
pub trait Feed<I> {
    type Pos: Clone + Eq + std::hash::Hash;
    type Pay: Ord + Clone;
    /// Edges leaving `p`: input, next position, payload.
    fn moves(&self, p: &Self::Pos) -> Vec<(I, Self::Pos, Self::Pay)>;
    /// Payload for ending the walk at `p`, or `None` if the walk may not end there.
    fn stop(&self, p: &Self::Pos) -> Option<Self::Pay>;
    /// Payload of an edge followed by the rest of the walk; `None` is zero.
    fn chain(&self, edge: &Self::Pay, rest: &Self::Pay) -> Option<Self::Pay>;
}

/// A fixed input sequence, first input first.
pub struct SeqFeed<'a, I>(pub &'a [I]);

impl<I: Copy> Feed<I> for SeqFeed<'_, I> {
    type Pos = usize;
    type Pay = ();

    fn moves(&self, p: &usize) -> Vec<(I, usize, ())> {
        self.0.get(*p).map(|x| vec![(*x, p + 1, ())]).unwrap_or_default()
    }

    fn stop(&self, p: &usize) -> Option<()> {
        (*p == self.0.len()).then_some(())
    }

    fn chain(&self, _: &(), _: &()) -> Option<()> {
        Some(())
    }
}

/// Trace outputs tagged with both sides' payloads.
pub type FeedOut<L, R> = F2Sum<(Idem, L, R)>;

type Memo<L, R> = HashMap<
    (LState, <L as Feed<KMono>>::Pos, <R as Feed<DualMono>>::Pos),
    FeedOut<<L as Feed<KMono>>::Pay, <R as Feed<DualMono>>::Pay>,
>;

struct TraceCtx<'f, L: Feed<KMono>, R: Feed<DualMono>> {
    left: &'f L,
    right: &'f R,
    cap: usize,
    memo: Memo<L, R>,
}

enum Edge<A, B> {
    Left(KMono, A),
    Right(DualMono, B),
    Mu1,
}

type Succ<L, R> = (
    LState,
    <L as Feed<KMono>>::Pos,
    <R as Feed<DualMono>>::Pos,
    Edge<<L as Feed<KMono>>::Pay, <R as Feed<DualMono>>::Pay>,
);

impl<L: Feed<KMono>, R: Feed<DualMono>> TraceCtx<'_, L, R> {
    fn successors(&self, s: &LState, lp: &L::Pos, rp: &R::Pos) -> Vec<Succ<L, R>> {
        let mut next = Vec::new();
        for (a, lp2, pay) in self.left.moves(lp) {
            if let Some(t) = l_left_act(&a, s) {
                next.push((t, lp2, rp.clone(), Edge::Left(a, pay)));
            }
        }
        for (b, rp2, pay) in self.right.moves(rp) {
            for t in l_right_act(s, &b) {
                next.push((t, lp.clone(), rp2.clone(), Edge::Right(b, pay.clone())));
            }
        }
        for t in &mu1_dual(s) {
            next.push((*t, lp.clone(), rp.clone(), Edge::Mu1));
        }
        next
    }

    /// Sum over walks Π α (H α)* starting at `s` from the given positions.
    fn eval(&mut self, s: LState, lp: L::Pos, rp: R::Pos, depth: usize) -> Result<FeedOut<L::Pay, R::Pay>, TraceError> {
        if let Some(v) = self.memo.get(&(s, lp.clone(), rp.clone())) {
            return Ok(v.clone());
        }
        let mut out = F2Sum::zero();
        for (t, lp2, rp2, edge) in self.successors(&s, &lp, &rp) {
            if depth >= self.cap {
                return Err(TraceError::CapExceeded(self.cap));
            }
            let mut rest = F2Sum::zero();
            if let (Some(ls), Some(rs)) = (self.left.stop(&lp2), self.right.stop(&rp2)) {
                for e in &sdr_pi(&t) {
                    rest.toggle((*e, ls.clone(), rs.clone()));
                }
            }
            for h in &sdr_h(&t) {
                rest.add_sum(self.eval(*h, lp2.clone(), rp2.clone(), depth + 1)?);
            }
            let contrib: FeedOut<L::Pay, R::Pay> = match &edge {
                Edge::Mu1 => rest,
                Edge::Left(_, pay) => {
                    rest.into_iter().filter_map(|(e, l, r)| self.left.chain(pay, &l).map(|l| (e, l, r))).collect()
                }
                Edge::Right(_, pay) => {
                    rest.into_iter().filter_map(|(e, l, r)| self.right.chain(pay, &r).map(|r| (e, l, r))).collect()
                }
            };
            if matches!(edge, Edge::Mu1) && !contrib.is_zero() && !allowed_mu1(&s) {
                return Err(TraceError::UnexpectedMu1(format!("{s} -> {t}")));
            }
            out.add_sum(contrib);
        }
        self.memo.insert((s, lp, rp), out.clone());
        Ok(out)
    }

    fn paths(&self, s: LState, lp: L::Pos, rp: R::Pos, depth: usize, prefix: &mut Vec<String>, out: &mut Vec<String>) {
        if depth >= self.cap {
            return;
        }
        for (t, lp2, rp2, edge) in self.successors(&s, &lp, &rp) {
            let step = match &edge {
                Edge::Left(a, _) => Step::Left(*a),
                Edge::Right(b, _) => Step::Right(*b),
                Edge::Mu1 => Step::Mu1,
            };
            prefix.push(format!("--{step}--> {t}"));
            if self.left.stop(&lp2).is_some() && self.right.stop(&rp2).is_some() {
                for e in &sdr_pi(&t) {
                    out.push(format!("{} --Π--> {e}", prefix.join(" ")));
                }
            }
            for h in &sdr_h(&t) {
                prefix.push(format!("--H--> {h}"));
                self.paths(*h, lp2.clone(), rp2.clone(), depth + 1, prefix, out);
                prefix.pop();
            }
            prefix.pop();
        }
    }
}

fn step_cap(k: usize, n: usize) -> usize {
    3 * (k + n) + 3
}

/// Runs the trace walk from generator `start` with both sides supplied by
/// feeds. Unit inputs must not appear on either feed; `cap` bounds the
/// number of α-steps on any walk.
pub fn trace_feed<L: Feed<KMono>, R: Feed<DualMono>>(
    start: Idem,
    left: &L,
    lp: L::Pos,
    right: &R,
    rp: R::Pos,
    cap: usize,
) -> Result<FeedOut<L::Pay, R::Pay>, TraceError> {
    let mut ctx = TraceCtx { left, right, cap, memo: HashMap::new() };
    ctx.eval(sdr_i(start), lp, rp, 0)
}

/// Strictly unital values: a unit input only survives in m₂-type actions.
fn unit_shortcut(start: Idem, a_seq: &[KMono], b_seq: &[DualMono]) -> Option<F2Sum<Idem>> {
    let units = a_seq.iter().any(|a| a.is_unit()) || b_seq.iter().any(|b| b.is_unit());
    if !units {
        return None;
    }
    let idem = a_seq.first().map(|a| a.right_idem()).or(b_seq.first().map(|b| b.left_idem()));
    Some(if a_seq.len() + b_seq.len() == 1 && idem == Some(start) { F2Sum::term(start) } else { F2Sum::zero() })
}

/// m_{k|1|n}(a_k, …, a₁, i_start, b₁, …, b_n) of the trace, with a₁ and b₁
/// listed first (they act first).
pub fn trace_action_from(start: Idem, a_seq: &[KMono], b_seq: &[DualMono]) -> Result<F2Sum<Idem>, TraceError> {
    if let Some(v) = unit_shortcut(start, a_seq, b_seq) {
        return Ok(v);
    }
    let out = trace_feed(start, &SeqFeed(a_seq), 0, &SeqFeed(b_seq), 0, step_cap(a_seq.len(), b_seq.len()))?;
    Ok(out.iter().map(|(e, _, _)| *e).collect())
}

/// The trace action summed over both generators.
pub fn trace_action(a_seq: &[KMono], b_seq: &[DualMono]) -> Result<F2Sum<Idem>, TraceError> {
    let mut out = F2Sum::zero();
    for e in Idem::BOTH {
        out.add_sum(trace_action_from(e, a_seq, b_seq)?);
    }
    Ok(out)
}

/// Every path Π α H α … α I that ends in a nonzero idempotent, printed
/// state by state. Paths that cancel in pairs are listed individually.
pub fn trace_paths(a_seq: &[KMono], b_seq: &[DualMono]) -> Vec<String> {
    let mut out = Vec::new();
    if unit_shortcut(Idem::I0, a_seq, b_seq).is_some() {
        return out;
    }
    let (left, right) = (SeqFeed(a_seq), SeqFeed(b_seq));
    let ctx = TraceCtx { left: &left, right: &right, cap: step_cap(a_seq.len(), b_seq.len()), memo: HashMap::new() };
    for e in Idem::BOTH {
        let mut prefix = vec![format!("I({e}) = {}", sdr_i(e))];
        ctx.paths(sdr_i(e), 0, 0, 0, &mut prefix, &mut out);
    }
    out
}

/// Linear maps on F₂-spans given by their values on basis elements.
pub type LinMap<'a, S, T> = Box<dyn Fn(&S) -> F2Sum<T> + 'a>;

/// The perturbation lemma with a twist: given a retraction (Π, I, H) of a
/// complex onto a smaller one and a twist α with αH nilpotent, produces
/// β = Π α Σ(Hα)^k I, Ĩ = Σ(Hα)^k I, Π̃ = Π Σ(αH)^k and H̃ = H Σ(αH)^k.
pub struct HplTwist<'a, S: Ord + Clone, T: Ord + Clone> {
    pub pi: LinMap<'a, S, T>,
    pub inc: LinMap<'a, T, S>,
    pub h: LinMap<'a, S, S>,
    pub alpha: LinMap<'a, S, S>,
    pub bound: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("αH not nilpotent within {0} iterations")]
pub struct NilpotencyError(pub usize);

impl<S: Ord + Clone, T: Ord + Clone> HplTwist<'_, S, T> {
    /// Σ_k (f g)^k applied to v, where f∘g is the given composite step.
    fn series(&self, v: F2Sum<S>, step: impl Fn(&F2Sum<S>) -> F2Sum<S>) -> Result<F2Sum<S>, NilpotencyError> {
        let mut total = v.clone();
        let mut cur = v;
        for _ in 0..self.bound {
            cur = step(&cur);
            if cur.is_zero() {
                return Ok(total);
            }
            total.add_sum(cur.clone());
        }
        Err(NilpotencyError(self.bound))
    }

    fn h_alpha(&self, v: &F2Sum<S>) -> F2Sum<S> {
        v.map_linear(|s| (self.alpha)(s)).map_linear(|s| (self.h)(s))
    }

    fn alpha_h(&self, v: &F2Sum<S>) -> F2Sum<S> {
        v.map_linear(|s| (self.h)(s)).map_linear(|s| (self.alpha)(s))
    }

    pub fn inc_tilde(&self, t: &T) -> Result<F2Sum<S>, NilpotencyError> {
        self.series((self.inc)(t), |v| self.h_alpha(v))
    }

    pub fn beta(&self, t: &T) -> Result<F2Sum<T>, NilpotencyError> {
        let it = self.inc_tilde(t)?;
        Ok(it.map_linear(|s| (self.alpha)(s)).map_linear(|s| (self.pi)(s)))
    }

    pub fn pi_tilde(&self, s: &S) -> Result<F2Sum<T>, NilpotencyError> {
        let v = self.series(F2Sum::term(s.clone()), |v| self.alpha_h(v))?;
        Ok(v.map_linear(|s| (self.pi)(s)))
    }

    pub fn h_tilde(&self, s: &S) -> Result<F2Sum<S>, NilpotencyError> {
        let v = self.series(F2Sum::term(s.clone()), |v| self.alpha_h(v))?;
        Ok(v.map_linear(|s| (self.h)(s)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra_k::parse_kmono;
    use crate::kdual::parse_dual;

    fn k(s: &str) -> KMono {
        parse_kmono(s, None).unwrap()
    }

    fn d(s: &str) -> DualMono {
        parse_dual(s, None).unwrap()
    }

    fn tr(a: &[&str], b: &[&str]) -> F2Sum<Idem> {
        let a: Vec<KMono> = a.iter().map(|s| k(s)).collect();
        let b: Vec<DualMono> = b.iter().map(|s| d(s)).collect();
        trace_action(&a, &b).unwrap()
    }

    fn i1() -> F2Sum<Idem> {
        F2Sum::term(Idem::I1)
    }

    #[test]
    fn left_action_examples() {
        assert!(LState::new(KMono::unit(Idem::I1), DualMono::theta(Idem::I0)).is_none());
        let v = LState::new(KMono::unit(Idem::I0), DualMono::theta(Idem::I0)).unwrap();
        assert_eq!(l_left_act(&KMono::SIGMA, &v), LState::new(KMono::SIGMA, DualMono::theta(Idem::I0)));
        let v = sdr_i(Idem::I0);
        assert_eq!(l_left_act(&KMono::U0, &v).unwrap().x, KMono::U0);
        assert_eq!(l_left_act(&KMono::unit(Idem::I0), &sdr_i(Idem::I1)), None);
    }

    #[test]
    fn right_action_examples() {
        let v = LState::new(KMono::unit(Idem::I1), d("s.th")).unwrap();
        assert_eq!(
            l_right_act(&v, &d("s")),
            vec![LState::new(KMono::unit(Idem::I1), DualMono::theta(Idem::I1)).unwrap()]
        );
        assert!(l_right_act(&sdr_i(Idem::I1), &d("f+")).is_empty());
    }

    #[test]
    fn diff_examples() {
        let v = LState::new(KMono::unit(Idem::I0), d("w.z")).unwrap();
        assert!(l_diff(&v).contains(&LState::new(KMono::unit(Idem::I0), DualMono::theta(Idem::I0)).unwrap()));
        let v = LState::new(KMono::unit(Idem::I1), d("s")).unwrap();
        assert!(l_diff(&v).contains(&LState::new(KMono::SIGMA, DualMono::unit(Idem::I0)).unwrap()));
        let v = LState::new(KMono::T, DualMono::unit(Idem::I1)).unwrap();
        assert!(l_diff(&v).is_zero());
    }

    #[test]
    fn d_is_part_of_the_cotrace_term() {
        for s in LState::all_bounded(6, 6) {
            let dd = sdr_d(&s);
            let ct = cotrace_term(&s);
            for t in &dd {
                assert!(ct.contains(t), "d({s}) has {t} outside the cotrace term");
            }
        }
    }

    #[test]
    fn h_examples() {
        let v = LState::new(KMono::T, DualMono::unit(Idem::I1)).unwrap();
        assert_eq!(sdr_h(&v), LElt::term(LState::new(KMono::unit(Idem::I1), d("f+")).unwrap()));
        let v = LState::new(KMono::SIGMA, DualMono::theta(Idem::I0)).unwrap();
        assert_eq!(sdr_h(&v), LElt::term(LState::new(KMono::unit(Idem::I1), d("s.th")).unwrap()));
        assert_eq!(sdr_pi(&sdr_i(Idem::I0)), F2Sum::term(Idem::I0));
        assert!(sdr_pi(&LState::new(KMono::W, DualMono::unit(Idem::I0)).unwrap()).is_zero());
    }

    #[test]
    fn sdr_identities_degree_6() {
        let r = sdr_verify(6);
        assert!(r.passed(), "{r}");
        assert!(sdr_verify(0).passed());
    }

    #[test]
    fn perturbed_h_fails() {
        let broken = |s: &LState| {
            let mut h = sdr_h(s);
            if *s == LState::new(KMono::T, DualMono::unit(Idem::I1)).unwrap() {
                h = LElt::zero();
            }
            h
        };
        assert!(!sdr_verify_with(3, &broken).passed());
    }

    #[test]
    fn no_contribution_identities() {
        for s in LState::all_bounded(6, 6) {
            let hv = sdr_h(&s);
            let ahv = hv.map_linear(alpha_mu2);
            assert!(ahv.map_linear(sdr_h).is_zero(), "H α H at {s}");
            assert!(ahv.map_linear(sdr_pi).is_zero(), "Π α H at {s}");
            let mut v = LElt::term(s);
            for _ in 0..3 {
                v = v.map_linear(sdr_h).map_linear(alpha010);
            }
            assert!(v.is_zero(), "(αH)³ at {s}");
        }
        for e in Idem::BOTH {
            assert!(alpha_mu2(&sdr_i(e)).is_zero());
        }
    }

    #[test]
    fn hand_computed_tree_values() {
        assert_eq!(tr(&["sigma"], &["s"]), i1());
        assert_eq!(tr(&["W Z", "sigma"], &["s.th"]), i1());
        assert!(tr(&["sigma", "U"], &["s.th"]).is_zero());
        assert_eq!(tr(&["W Z", "Z", "sigma"], &["z.s.th"]), i1());
        for n in 1..=5 {
            let a = [format!("T^{n}")];
            let b: Vec<&str> = vec!["f+"; n];
            assert_eq!(tr(&[a[0].as_str()], &b), i1(), "n = {n}");
        }
    }

    #[test]
    fn other_factorizations_vanish() {
        for (a, b) in [
            (["sigma", "T", "U"], "z.s.th"),
            (["sigma", "U", "T"], "z.s.th"),
            (["W Z", "sigma", "T"], "z.s.th"),
            (["Z", "W Z", "sigma"], "z.s.th"),
            (["Z", "sigma", "U"], "z.s.th"),
        ] {
            let a: Vec<KMono> = a.iter().map(|s| k(s)).collect();
            assert!(trace_action(&a, &[d(b)]).unwrap().is_zero(), "{a:?}");
        }
    }

    #[test]
    fn unit_and_zero_sided_actions() {
        assert_eq!(trace_action(&[KMono::unit(Idem::I0)], &[]).unwrap(), F2Sum::term(Idem::I0));
        assert_eq!(trace_action(&[], &[DualMono::unit(Idem::I1)]).unwrap(), i1());
        assert!(trace_action(&[KMono::unit(Idem::I1), k("T")], &[]).unwrap().is_zero());
        assert!(trace_action(&[], &[]).unwrap().is_zero());
        for b in DualMono::all_up_to_length(3).into_iter().filter(|b| !b.is_unit()) {
            assert!(trace_action(&[], &[b]).unwrap().is_zero(), "{b}");
            assert!(trace_action(&[], &[b, b]).unwrap().is_zero(), "{b}");
        }
    }

    #[test]
    fn paths_for_sigma_s() {
        let p = trace_paths(&[KMono::SIGMA], &[d("s")]);
        assert_eq!(p.len(), 1, "{p:?}");
        assert!(p[0].ends_with("i1"));
    }

    #[test]
    fn generic_twist_engine() {
        // Zero twist: β vanishes and Ĩ = I.
        let zero = HplTwist::<LState, Idem> {
            pi: Box::new(sdr_pi),
            inc: Box::new(|e| LElt::term(sdr_i(*e))),
            h: Box::new(sdr_h),
            alpha: Box::new(|_| LElt::zero()),
            bound: 4,
        };
        for e in Idem::BOTH {
            assert!(zero.beta(&e).unwrap().is_zero());
            assert_eq!(zero.inc_tilde(&e).unwrap(), LElt::term(sdr_i(e)));
        }
        // Twisting by α₀|₁|₀ gives m₀|₁|₀ = 0 on the trace.
        let tw = HplTwist::<LState, Idem> { alpha: Box::new(alpha010), ..zero };
        for e in Idem::BOTH {
            assert!(tw.beta(&e).unwrap().is_zero());
        }
        let s = LState::new(KMono::W, DualMono::unit(Idem::I0)).unwrap();
        assert!(tw.h_tilde(&s).is_ok());
        assert!(tw.pi_tilde(&s).is_ok());
    }
}
