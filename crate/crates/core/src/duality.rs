//! The cotrace and trace bimodules, the duality identities between them,
//! and dualization of modules and bimodules.

use crate::algebra_k::KMono;
use crate::boxtensor::{box_dd_a, box_dd_da, DDBoxTr, Guards, TrBoxD, TrBoxDD};
use crate::f2::F2Sum;
use crate::gradings::{grading_k, grading_kdual, trace_grading, GroupoidElt};
use crate::idem::Idem;
use crate::kdual::DualMono;
use crate::perturbation::{cotrace_arrows, trace_action_from};
use crate::report::Report;
use crate::structures::{
    check_aa, cone, dual_sequences, idem_gens, k_sequences, morphism_diff, show_seq, sweep, DDStruct, DStruct,
    EvalError, FnKModule, Gen, KDa, KDualDa, KKDualAa, KModule, MorphismA, OverKDual,
};
use std::sync::Arc;

/// The cotrace DD bimodule on generators i0, i1.
pub fn cotrace() -> DDStruct {
    let mut d = DDStruct::new(vec![Gen::new("i0", Idem::I0), Gen::new("i1", Idem::I1)]).expect("distinct names");
    for (b, c) in cotrace_arrows() {
        d.add_arrow(b.left_idem().index(), b.right_idem().index(), b, c).expect("cotrace arrows respect idempotents");
    }
    d
}

/// The trace as an AA bimodule over (𝒦, 𝒦^!), with generator k in idempotent i_k.
pub struct TraceModule {
    gens: Vec<Gen>,
}

impl Default for TraceModule {
    fn default() -> Self {
        TraceModule { gens: idem_gens("i") }
    }
}

impl KKDualAa for TraceModule {
    fn gens(&self) -> &[Gen] {
        &self.gens
    }

    fn act(&self, a: &[KMono], x: usize, b: &[DualMono]) -> Result<F2Sum<usize>, EvalError> {
        let out = trace_action_from(Idem::BOTH[x], a, b)?;
        Ok(out.iter().map(|e| e.index()).collect())
    }
}

/// The AA relation of the trace. Cases whose inputs cannot balance the
/// algebraic grading, even after one μ₀ insertion or μ₁ application, are
/// skipped: every term of the relation vanishes on them.
pub fn check_trace_aa(k: (usize, u32), n: (usize, u32)) -> Report {
    let keep = |a: &[KMono], b: &[DualMono]| {
        let letters: i64 = b.iter().map(|m| m.length() as i64).sum();
        let excess = a.len() as i64 + b.len() as i64 - 1 - letters;
        (-2..=1).contains(&excess)
    };
    let mut r = check_aa(&TraceModule::default(), k, n, &keep);
    r.name = "trace AA relation".into();
    r
}

/// Strict unitality of the trace and vanishing of m_{0|1|n}.
pub fn check_trace_unital(k: (usize, u32), n: (usize, u32)) -> Report {
    let tr = TraceModule::default();
    let mut cases = Vec::new();
    for a in k_sequences(k.0, k.1) {
        for b in dual_sequences(n.0, n.1) {
            if a.len() + b.len() < n.0 + k.0 {
                cases.push((a.clone(), b));
            }
        }
    }
    let mut r = sweep(
        "trace strict unitality",
        &cases,
        |(a, b)| format!("units inserted in ({}; {})", show_seq(a), show_seq(b)),
        |(a, b)| {
            for x in 0..2 {
                let e = Idem::BOTH[x];
                if a.first().is_some_and(|m| m.right_idem() != e) || b.first().is_some_and(|m| m.left_idem() != e) {
                    continue;
                }
                for i in 0..=a.len() {
                    let at = if i == 0 { e } else { a[i - 1].left_idem() };
                    let mut s = a.clone();
                    s.insert(i, KMono::unit(at));
                    let want = if s.len() + b.len() == 1 { F2Sum::term(x) } else { F2Sum::zero() };
                    match tr.act(&s, x, b) {
                        Ok(v) if v == want => {}
                        Ok(v) => {
                            return Some((format!("{want:?}"), format!("{v:?} at ({}; {})", show_seq(&s), show_seq(b))))
                        }
                        Err(err) => return Some(("a value".into(), err.to_string())),
                    }
                }
                for i in 0..=b.len() {
                    let at = if i == 0 { e } else { b[i - 1].right_idem() };
                    let mut s = b.clone();
                    s.insert(i, DualMono::unit(at));
                    let want = if a.len() + s.len() == 1 { F2Sum::term(x) } else { F2Sum::zero() };
                    match tr.act(a, x, &s) {
                        Ok(v) if v == want => {}
                        Ok(v) => {
                            return Some((format!("{want:?}"), format!("{v:?} at ({}; {})", show_seq(a), show_seq(&s))))
                        }
                        Err(err) => return Some(("a value".into(), err.to_string())),
                    }
                }
            }
            None
        },
    );
    let b_seqs = dual_sequences(n.0 + 1, n.1);
    let zero_left = sweep(
        "m_{0|1|n} vanishes",
        &b_seqs,
        |b| format!("m(; {})", show_seq(b)),
        |b| {
            for e in Idem::BOTH {
                match trace_action_from(e, &[], b) {
                    Ok(v) if v.is_zero() || b.is_empty() => {}
                    Ok(v) => return Some(("0".into(), format!("{v:?}"))),
                    Err(err) => return Some(("a value".into(), err.to_string())),
                }
            }
            None
        },
    );
    r.absorb(zero_left);
    r
}

/// Tr ⊠ Co equals the identity DA bimodule over (𝒦, 𝒦): δ₂(a, i) = i' ⊗ a
/// and every other δ vanishes, on sequences of at most `max_len` monomials
/// of degree at most `max_deg`.
pub fn verify_tr_co_identity(max_deg: u32, max_len: usize) -> Report {
    let m = TrBoxDD::new(cotrace());
    let mut cases = Vec::new();
    for a in k_sequences(max_len, max_deg) {
        for x in 0..2 {
            if a.first().is_none_or(|a1| a1.right_idem() == Idem::BOTH[x]) {
                cases.push((a.clone(), x));
            }
        }
    }
    sweep(
        "Tr ⊠ Co = identity over (K, K)",
        &cases,
        |(a, x)| format!("delta({}; i{x})", show_seq(a)),
        |(a, x)| {
            let want = if a.len() == 1 { F2Sum::term((a[0].left_idem().index(), a[0])) } else { F2Sum::zero() };
            match m.delta(a, *x) {
                Ok(v) if v == want => None,
                Ok(v) => Some((show_kda(&want), show_kda(&v))),
                Err(e) => Some(("a value".into(), e.to_string())),
            }
        },
    )
}

/// Co ⊠ Tr equals the identity DA bimodule over (𝒦^!, 𝒦^!): δ₂(i, b) = b ⊗ i'
/// and every other δ vanishes, on sequences of at most `max_seq` monomials of
/// length at most `max_len`. Lengths beyond the grading bound are evaluated
/// as guards and must vanish.
pub fn verify_co_tr_identity(max_len: u32, max_seq: usize) -> Report {
    let m = DDBoxTr::new(cotrace(), true);
    let mut cases = Vec::new();
    for b in dual_sequences(max_seq, max_len) {
        for x in 0..2 {
            if b.first().is_none_or(|b1| b1.left_idem() == Idem::BOTH[x]) {
                cases.push((x, b.clone()));
            }
        }
    }
    sweep(
        "Co ⊠ Tr = identity over (K!, K!)",
        &cases,
        |(x, b)| format!("delta(i{x}; {})", show_seq(b)),
        |(x, b)| {
            let want = if b.len() == 1 { F2Sum::term((b[0], b[0].right_idem().index())) } else { F2Sum::zero() };
            match m.delta(*x, b) {
                Ok(v) if v == want => None,
                Ok(v) => Some((show_dual_da(&want), show_dual_da(&v))),
                Err(e) => Some(("a value".into(), e.to_string())),
            }
        },
    )
}

fn show_kda(v: &F2Sum<(usize, KMono)>) -> String {
    if v.is_zero() {
        return "0".into();
    }
    v.iter().map(|(y, c)| format!("i{y}⊗{c}")).collect::<Vec<_>>().join(" + ")
}

fn show_dual_da(v: &F2Sum<(DualMono, usize)>) -> String {
    if v.is_zero() {
        return "0".into();
    }
    v.iter().map(|(b, y)| format!("{b}⊗i{y}")).collect::<Vec<_>>().join(" + ")
}

/// Checks the weight inequality, the algebraic-grading balance and the
/// groupoid-grading identity on a nonzero trace action.
fn law_violation(a: &[KMono], b: &[DualMono]) -> Option<String> {
    let wt_u: u32 = a.iter().map(|m| m.wt_u()).sum();
    let wt_th: u32 = b.iter().map(|m| m.wt_theta()).sum();
    if wt_u > wt_th {
        return Some(format!("weight {wt_u} > {wt_th}"));
    }
    let gr: i64 = b.iter().map(|m| m.gr_alg() as i64).sum();
    let balance = a.len() as i64 + b.len() as i64 - 1 + gr;
    if balance != 0 {
        return Some(format!("algebraic grading off by {balance}"));
    }
    match trace_grading(a, b) {
        Some(g) if g.is_identity() => None,
        Some(g) => Some(format!("groupoid grading {} ≠ id", g.map)),
        None => Some("inputs not composable".into()),
    }
}

/// Paths of `len` cotrace arrows from i_start, as (b-list, c-list, end).
/// With `nonzero_b`, paths whose 𝒦^! coefficients multiply to zero are dropped.
fn co_paths(start: Idem, len: usize, nonzero_b: bool) -> Vec<(Vec<DualMono>, Vec<KMono>, Idem)> {
    let arrows = cotrace_arrows();
    let mut layer = vec![(Vec::new(), Vec::new(), start, DualMono::unit(start))];
    for _ in 0..len {
        let mut next = Vec::new();
        for (bs, cs, e, beta) in &layer {
            for (b, c) in arrows.iter().filter(|(b, _)| b.left_idem() == *e) {
                let beta = match beta.mul(b) {
                    Some(x) => x,
                    None if nonzero_b => continue,
                    None => *beta,
                };
                let (mut bs, mut cs) = (bs.clone(), cs.clone());
                bs.push(*b);
                cs.push(*c);
                next.push((bs, cs, b.right_idem(), beta));
            }
        }
        layer = next;
    }
    layer.into_iter().map(|(bs, cs, e, _)| (bs, cs, e)).collect()
}

/// Both duality identities recomputed from individual trace actions over
/// explicit cotrace paths. Every nonzero action met is checked against the
/// weight, balance and groupoid-grading laws, and the sums are compared with
/// the box tensor engine.
///
/// Tr ⊠ Co: single inputs a of degree ≤ `max_deg`, cotrace paths of length
/// ≤ `path_len`. Co ⊠ Tr: sequences of ≤ `max_seq` monomials of length
/// ≤ `max_len`, cotrace paths of every length up to the grading bound plus two.
pub fn law_sweep(max_deg: u32, path_len: usize, max_len: u32, max_seq: usize) -> Report {
    let tr_co = TrBoxDD::new(cotrace());
    let co_tr = DDBoxTr::new(cotrace(), false);
    let mut cases: Vec<(Vec<KMono>, Vec<DualMono>, Idem)> = Vec::new();
    for a in k_sequences(1, max_deg).into_iter().filter(|a| a.len() == 1) {
        let e = a[0].right_idem();
        cases.push((a, Vec::new(), e));
    }
    for b in dual_sequences(max_seq, max_len) {
        for e in Idem::BOTH {
            if b.first().is_none_or(|b1| b1.left_idem() == e) {
                cases.push((Vec::new(), b.clone(), e));
            }
        }
    }
    let mut r = sweep(
        "weight and grading laws",
        &cases,
        |(a, b, e)| format!("({}; {e}; {})", show_seq(a), show_seq(b)),
        |(a, b, e)| {
            let run = || -> Result<Option<(String, String)>, EvalError> {
                if b.is_empty() {
                    let mut sum: F2Sum<(usize, KMono)> = F2Sum::zero();
                    for len in 0..=path_len {
                        for (bs, cs, end) in co_paths(*e, len, false) {
                            let Some(c) = cs.iter().try_fold(KMono::unit(*e), |acc, c| c.mul(&acc)) else { continue };
                            for out in trace_action_from(*e, a, &bs)? {
                                debug_assert_eq!(out, end);
                                if let Some(v) = law_violation(a, &bs) {
                                    return Ok(Some((
                                        "laws hold".into(),
                                        format!("{v} at ({}; {})", show_seq(a), show_seq(&bs)),
                                    )));
                                }
                                sum.toggle((end.index(), c));
                            }
                        }
                    }
                    let engine = tr_co.delta(a, e.index())?;
                    return Ok((sum != engine).then(|| (show_kda(&engine), show_kda(&sum))));
                }
                let letters: usize = b.iter().map(|m| m.length() as usize).sum();
                let top = (1 + letters).saturating_sub(b.len()) + 2;
                let mut sum: F2Sum<(DualMono, usize)> = F2Sum::zero();
                for len in 0..=top {
                    for (bs, cs, end) in co_paths(*e, len, true) {
                        let Some(beta) = bs.iter().try_fold(DualMono::unit(*e), |acc, x| acc.mul(x)) else { continue };
                        for out in trace_action_from(*e, &cs, b)? {
                            debug_assert_eq!(out, end);
                            if let Some(v) = law_violation(&cs, b) {
                                return Ok(Some((
                                    "laws hold".into(),
                                    format!("{v} at ({}; {})", show_seq(&cs), show_seq(b)),
                                )));
                            }
                            sum.toggle((beta, end.index()));
                        }
                    }
                }
                let engine = co_tr.delta(e.index(), b)?;
                Ok((sum != engine).then(|| (show_dual_da(&engine), show_dual_da(&sum))))
            };
            run().unwrap_or_else(|err| Some(("a value".into(), err.to_string())))
        },
    );
    r.note(format!("Tr⊠Co: degree ≤ {max_deg}, paths ≤ {path_len}; Co⊠Tr: {max_seq} inputs of length ≤ {max_len}"));
    r
}

/// Every cotrace arrow b|c has groupoid grading λ⁻¹, and b has algebraic
/// grading −1.
pub fn check_cotrace_gradings() -> Report {
    let co = cotrace();
    let mut r = Report::new("cotrace gradings");
    for a in &co.arrows {
        let e = co.gens[a.src].left;
        let composite = grading_kdual(&a.b).1.compose(&grading_k(&a.c).1);
        let want = GroupoidElt::lambda(e).inverse();
        r.check();
        if composite != Some(want) {
            r.fail(
                co.show_arrow(a),
                format!("{}", want.map),
                composite.map_or("not composable".into(), |g| g.map.to_string()),
            );
        }
        r.compare(format!("gr_alg of {}", a.b), &-1, &a.b.gr_alg());
    }
    r
}

fn strip_cotrace_names(gens: &mut [Gen]) {
    for g in gens {
        if let Some((_, rest)) = g.id.split_once('.') {
            g.id = rest.to_string();
        }
    }
}

/// Co ⊠ M for a DA bimodule M over (𝒦, 𝒦); generators keep the names of M.
pub fn dualize_da(m: &dyn KDa, guards: Guards) -> Result<DDStruct, EvalError> {
    let mut d = box_dd_da(&cotrace(), m, guards)?;
    strip_cotrace_names(&mut d.gens);
    Ok(d)
}

/// Co ⊠ M for a type-A module M over 𝒦; generators keep the names of M.
pub fn dualize_module(m: &dyn KModule, guards: Guards) -> Result<DStruct<OverKDual>, EvalError> {
    let mut d = box_dd_a(&cotrace(), m, guards)?;
    strip_cotrace_names(&mut d.gens);
    Ok(d)
}

/// Tr ⊠ N for a DD structure N, evaluated on demand.
pub fn undualize_dd(n: DDStruct) -> TrBoxDD {
    TrBoxDD::new(n)
}

/// Tr ⊠ N for a left type-D structure N over 𝒦^!, evaluated on demand.
pub fn undualize_d(n: DStruct<OverKDual>) -> TrBoxD {
    TrBoxD::new(n)
}

/// dualize(undualize(N)) = N arrow for arrow. Inputs to Tr ⊠ N are fed up
/// to `guards.max_inputs`, and the next `guards.check_beyond` lengths must
/// produce nothing.
pub fn roundtrip_dd_check(n: &DDStruct, guards: Guards) -> Report {
    let name = "dualize(undualize(N)) = N";
    match dualize_da(&undualize_dd(n.clone()), guards) {
        Ok(back) => {
            let mut r = back.compare(n, name);
            r.note(format!("inputs up to {} with {} guard lengths", guards.max_inputs, guards.check_beyond));
            r
        }
        Err(e) => {
            let mut r = Report::new(name);
            r.check();
            r.fail("round trip", "a DD structure", e.to_string());
            r
        }
    }
}

/// A two-generator module over 𝒦 in idempotent 0 with W·x = y and every
/// other action zero.
pub fn small_module() -> FnKModule {
    FnKModule {
        gens: vec![Gen::new("x", Idem::I0), Gen::new("y", Idem::I0)],
        max_inputs: Some(1),
        unital: true,
        rule: Arc::new(|a: &[KMono], x: usize| {
            Ok(if a == [KMono::W] && x == 0 { F2Sum::term(1) } else { F2Sum::zero() })
        }),
    }
}

/// Smoke test for undualize ∘ dualize ≃ id on `small_module`: the
/// generator-matching map M → Tr ⊠ (Co ⊠ M) is a cycle and its cone is
/// acyclic.
pub fn cone_smoke_test(max_len: usize, deg_cap: u32) -> Report {
    let mut r = Report::new("cone of M -> Tr⊠(Co⊠M) is acyclic");
    let m: Arc<dyn KModule> = Arc::new(small_module());
    let d = match dualize_module(m.as_ref(), Guards::default()) {
        Ok(d) => d,
        Err(e) => {
            r.check();
            r.fail("dualize", "a type-D structure", e);
            return r;
        }
    };
    let back: Arc<dyn KModule> = Arc::new(undualize_d(d));
    let names_match = m.gens().iter().zip(back.gens()).all(|(a, b)| a.id == b.id);
    r.compare("generator names", &true, &names_match);
    let f = MorphismA {
        src: m,
        tgt: back,
        f: Arc::new(|a: &[KMono], x: usize| Ok(if a.is_empty() { F2Sum::term(x) } else { F2Sum::zero() })),
    };
    let df = morphism_diff(&f);
    let mut cases = Vec::new();
    for a in k_sequences(max_len, deg_cap) {
        for x in 0..f.src.gens().len() {
            if a.first().is_none_or(|a1| a1.right_idem() == f.src.gens()[x].left) {
                cases.push((a.clone(), x));
            }
        }
    }
    r.absorb(sweep(
        "d(f) = 0",
        &cases,
        |(a, x)| format!("df({}; {x})", show_seq(a)),
        |(a, x)| match df.eval(a, *x) {
            Ok(v) if v.is_zero() => None,
            Ok(v) => Some(("0".into(), format!("{v:?}"))),
            Err(e) => Some(("a value".into(), e.to_string())),
        },
    ));
    let c = cone(&f);
    let mut arrows = Vec::new();
    for x in 0..c.gens.len() {
        match c.act(&[], x) {
            Ok(v) => arrows.extend(v.iter().map(|y| (x, *y))),
            Err(e) => r.fail("cone differential", "a value", e),
        }
    }
    r.check();
    match crate::structures::f2_homology_rank(c.gens.len(), &arrows) {
        Ok(0) => {}
        Ok(k) => r.fail("cone homology", 0, k),
        Err(e) => r.fail("cone homology", 0, e),
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra_k::parse_kmono;
    use crate::kdual::parse_dual;
    use crate::structures::{check_dd, check_strict_unital_kda, FnKDa};

    fn k(s: &str) -> KMono {
        parse_kmono(s, None).unwrap()
    }

    fn d(s: &str) -> DualMono {
        parse_dual(s, None).unwrap()
    }

    #[test]
    fn cotrace_is_a_dd_structure() {
        let co = cotrace();
        assert_eq!(co.arrows.len(), 8);
        assert!(check_dd(&co).passed());
        assert!(check_cotrace_gradings().passed());
    }

    #[test]
    fn tr_co_small() {
        let r = verify_tr_co_identity(2, 2);
        assert!(r.passed(), "{r}");
        let m = TrBoxDD::new(cotrace());
        assert_eq!(m.delta(&[k("sigma")], 0).unwrap(), F2Sum::term((1, k("sigma"))));
        assert!(m.delta(&[k("sigma")], 1).unwrap().is_zero());
    }

    #[test]
    fn co_tr_small() {
        let r = verify_co_tr_identity(3, 2);
        assert!(r.passed(), "{r}");
        let m = DDBoxTr::new(cotrace(), true);
        assert_eq!(m.delta(1, &[d("f+")]).unwrap(), F2Sum::term((d("f+"), 1)));
        assert_eq!(m.delta(0, &[d("z.s.th")]).unwrap(), F2Sum::term((d("z.s.th"), 1)));
    }

    #[test]
    fn laws_small() {
        let r = law_sweep(2, 4, 2, 2);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn law_check_rejects_unbalanced_inputs() {
        assert!(law_violation(&[k("sigma")], &[d("s")]).is_none());
        assert!(law_violation(&[k("sigma"), k("U")], &[d("s")]).is_some());
        assert!(law_violation(&[k("U"), k("sigma")], &[d("s")]).is_some());
    }

    #[test]
    fn trace_aa_and_units_small() {
        let r = check_trace_aa((2, 1), (2, 2));
        assert!(r.passed(), "{r}");
        let r = check_trace_unital((2, 2), (2, 2));
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn dualize_identity_is_cotrace() {
        let co = dualize_da(&FnKDa::identity(), Guards::default()).unwrap();
        assert!(co.compare(&cotrace(), "Co").passed());
    }

    #[test]
    fn undualize_cotrace_is_identity() {
        let m = undualize_dd(cotrace());
        assert!(check_strict_unital_kda(&m, 2, 2).passed());
        for a in k_sequences(1, 3).into_iter().filter(|a| a.len() == 1) {
            let x = a[0].right_idem().index();
            assert_eq!(m.delta(&a, x).unwrap(), F2Sum::term((a[0].left_idem().index(), a[0])));
        }
    }

    #[test]
    fn roundtrips() {
        let g = Guards { max_inputs: 3, check_beyond: 1 };
        assert!(roundtrip_dd_check(&cotrace(), g).passed());
        assert!(roundtrip_dd_check(&DDStruct::default(), g).passed());
    }

    #[test]
    fn roundtrip_detects_a_changed_structure() {
        let mut co = cotrace();
        co.arrows.toggle(crate::structures::DDArrow { src: 0, dst: 0, b: d("w"), c: k("W") });
        let r = roundtrip_dd_check(&co, Guards { max_inputs: 2, check_beyond: 1 });
        assert!(!r.passed() || !check_dd(&co).passed());
    }

    #[test]
    fn smoke_test_passes() {
        let r = cone_smoke_test(2, 2);
        assert!(r.passed(), "{r}");
    }
}
