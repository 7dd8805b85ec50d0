//! Verification suites grouping the individual checkers, shared by the
//! command line and the acceptance harness.

use crate::algebra_k::{parse_kmono, KMono};
use crate::duality::{
    check_cotrace_gradings, check_trace_aa, check_trace_unital, cotrace, law_sweep, verify_co_tr_identity,
    verify_tr_co_identity,
};
use crate::examples::{
    check_u_equivariance, verify_elliptic, verify_lspace_formulas, verify_transformer, verify_whitehead_da,
    verify_whitehead_dd, whitehead_model, StaircaseData,
};
use crate::f2::F2Sum;
use crate::idem::Idem;
use crate::kdual::{
    hpl_transfer_mu, kdual_mu0, kdual_mu1, kdual_mul, kdualinf_mu3, kinf_basis_up_to_length, parse_dual,
};
use crate::kdual::{DualElt, DualMono};
use crate::perturbation::{sdr_verify, trace_action};
use crate::report::Report;
use crate::structures::{check_dd, DDStruct};
use rayon::prelude::*;

/// Associativity and unit laws of 𝒦 on monomials of total degree ≤ `max_deg`.
pub fn verify_k_algebra(max_deg: u32) -> Report {
    let mut r = Report::new(format!("𝒦 associativity (degree ≤ {max_deg})"));
    let monos = KMono::all_up_to_degree(max_deg);
    let rows: Vec<(String, String, String)> = monos
        .par_iter()
        .flat_map_iter(|a| {
            let monos = &monos;
            monos.iter().filter(move |b| a.degree() + b.degree() <= max_deg).flat_map(move |b| {
                monos.iter().filter(move |c| a.degree() + b.degree() + c.degree() <= max_deg).filter_map(move |c| {
                    let lhs = a.mul(b).and_then(|ab| ab.mul(c));
                    let rhs = b.mul(c).and_then(|bc| a.mul(&bc));
                    (lhs != rhs).then(|| (format!("({a})({b})({c})"), format!("{rhs:?}"), format!("{lhs:?}")))
                })
            })
        })
        .collect();
    let triples: usize = monos
        .iter()
        .map(|a| {
            monos
                .iter()
                .filter(|b| a.degree() + b.degree() <= max_deg)
                .map(|b| monos.iter().filter(|c| a.degree() + b.degree() + c.degree() <= max_deg).count())
                .sum::<usize>()
        })
        .sum();
    r.checked += triples;
    for (i, e, a) in rows {
        r.fail(i, e, a);
    }
    for a in &monos {
        let (l, rt) = (KMono::unit(a.left_idem()), KMono::unit(a.right_idem()));
        let show_k = |m: Option<KMono>| m.map_or("0".to_string(), |m| m.to_string());
        r.compare(format!("1·{a}"), &a.to_string(), &show_k(l.mul(a)));
        r.compare(format!("{a}·1"), &a.to_string(), &show_k(a.mul(&rt)));
    }
    r
}

/// Associativity (length ≤ `assoc_len`), μ₁² = 0, the Leibniz rule,
/// μ₁(μ₀) = 0 and centrality of μ₀ (length ≤ `dg_len`) for 𝒦^!.
pub fn verify_kdual_algebra(assoc_len: u32, dg_len: u32) -> Report {
    let mut r = Report::new(format!("𝒦^! curved dg axioms (associativity ≤ {assoc_len}, μ₁ ≤ {dg_len})"));
    let monos = DualMono::all_up_to_length(assoc_len);
    for a in &monos {
        for b in monos.iter().filter(|b| a.length() + b.length() <= assoc_len) {
            for c in monos.iter().filter(|c| a.length() + b.length() + c.length() <= assoc_len) {
                let lhs = a.mul(b).and_then(|ab| ab.mul(c));
                let rhs = b.mul(c).and_then(|bc| a.mul(&bc));
                r.compare(format!("({a})({b})({c})"), &show(&rhs.map(DualElt::term)), &show(&lhs.map(DualElt::term)));
            }
        }
    }
    let mu0 = kdual_mu0();
    r.compare("μ₁(μ₀)", &String::from("0"), &show(&Some(kdual_mu1(&mu0))));
    let monos = DualMono::all_up_to_length(dg_len);
    for a in &monos {
        r.compare(format!("μ₁²({a})"), &String::from("0"), &show(&Some(kdual_mu1(&a.mu1()))));
        if a.length() < dg_len {
            let ea = DualElt::term(*a);
            r.compare(
                format!("μ₀·{a} = {a}·μ₀"),
                &show(&Some(kdual_mul(&mu0, &ea))),
                &show(&Some(kdual_mul(&ea, &mu0))),
            );
        }
        for b in monos.iter().filter(|b| a.length() + b.length() <= dg_len) {
            let ab = a.mul(b).map(DualElt::term).unwrap_or_default();
            let lhs = kdual_mu1(&ab);
            let rhs = kdual_mul(&a.mu1(), &DualElt::term(*b)) + kdual_mul(&DualElt::term(*a), &b.mu1());
            r.compare(format!("Leibniz on ({a}, {b})"), &show(&Some(rhs)), &show(&Some(lhs)));
        }
    }
    r
}

fn show(v: &Option<DualElt>) -> String {
    match v {
        None => "0".into(),
        Some(e) if e.is_zero() => "0".into(),
        Some(e) => e.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(" + "),
    }
}

/// Composable sequences of `n` non-unit basis elements of 𝒦^!_∞ with at
/// most `total` letters in all.
fn kinf_sequences(n: usize, total: u32) -> Vec<Vec<DualMono>> {
    let basis: Vec<DualMono> = kinf_basis_up_to_length(total).into_iter().filter(|m| !m.is_unit()).collect();
    let mut out = vec![(Vec::new(), 0u32)];
    for _ in 0..n {
        let mut next = Vec::new();
        for (s, len) in &out {
            for m in &basis {
                let l = len + m.length();
                let fits = s.last().is_none_or(|p: &DualMono| p.right_idem() == m.left_idem());
                if l <= total && fits {
                    let mut t = s.clone();
                    t.push(*m);
                    next.push((t, l));
                }
            }
        }
        out = next;
    }
    out.into_iter().map(|(s, _)| s).collect()
}

/// The tree transfer over the retraction 𝒦^! → 𝒦^!_∞ against the explicit
/// μ₃, and vanishing of μ₄, …, μ_{max_n} on inputs of at most `total`
/// letters.
pub fn verify_transfer(max_n: usize, total: u32) -> Report {
    let mut r = Report::new(format!("𝒦^!_∞ transfer (μ₃ explicit, μ₄…μ_{max_n} = 0, ≤ {total} letters)"));
    for n in 3..=max_n {
        let seqs = kinf_sequences(n, total);
        let rows: Vec<(String, String, String)> = seqs
            .par_iter()
            .filter_map(|s| {
                let got = hpl_transfer_mu(s);
                let want = if n == 3 { kdualinf_mu3(&s[0], &s[1], &s[2]) } else { DualElt::zero() };
                (got != want)
                    .then(|| (format!("μ{n}{}", crate::structures::show_seq(s)), show(&Some(want)), show(&Some(got))))
            })
            .collect();
        r.checked += seqs.len();
        for (i, e, a) in rows {
            r.fail(i, e, a);
        }
    }
    r
}

/// The retraction identities for ℒ on states of degree and length ≤ `cap`.
pub fn verify_sdr(cap: u32) -> Report {
    sdr_verify(cap)
}

/// Co passes the curved DD relation, and each single-arrow deletion is
/// tested. Returns the report for Co itself and the deletions that still
/// pass.
pub fn cotrace_mutations() -> (Report, Vec<String>) {
    let co = cotrace();
    let mut r = check_dd(&co);
    r.name = "cotrace DD relation".into();
    let mut survivors = Vec::new();
    for a in &co.arrows {
        let mut m: DDStruct = co.clone();
        m.arrows.toggle(*a);
        r.check();
        if check_dd(&m).passed() {
            survivors.push(co.show_arrow(a));
        }
    }
    (r, survivors)
}

fn k(s: &str, hint: Idem) -> KMono {
    parse_kmono(s, Some(hint)).expect("literal monomial")
}

fn d(s: &str) -> DualMono {
    parse_dual(s, None).expect("literal monomial")
}

fn show_idems(v: &F2Sum<Idem>) -> String {
    if v.is_zero() {
        return "0".into();
    }
    v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(" + ")
}

/// The trace values computed by hand, the vanishing factorizations, strict
/// unitality, m_{0|1|n} = 0, and the AA relation on a small range.
pub fn verify_trace_values() -> Report {
    let mut r = Report::new("trace values");
    let i0 = Idem::I0;
    let i1 = F2Sum::term(Idem::I1);
    let mut case = |name: &str, a: Vec<KMono>, b: Vec<DualMono>, want: F2Sum<Idem>| {
        let got = trace_action(&a, &b).map(|v| show_idems(&v)).unwrap_or_else(|e| e.to_string());
        r.compare(name, &show_idems(&want), &got);
    };
    case("m(σ; s)", vec![KMono::SIGMA], vec![d("s")], i1.clone());
    case("m(U, σ; sθ)", vec![k("U", i0), KMono::SIGMA], vec![d("s.th")], i1.clone());
    case("m(σ, U; sθ)", vec![KMono::SIGMA, KMono::U], vec![d("s.th")], F2Sum::zero());
    case("m(U, Z, σ; zsθ)", vec![k("U", i0), KMono::Z, KMono::SIGMA], vec![d("z.s.th")], i1.clone());
    for (name, a) in [
        ("m(σ, T, U; zsθ)", vec![KMono::SIGMA, KMono::T, KMono::U]),
        ("m(σ, U, T; zsθ)", vec![KMono::SIGMA, KMono::U, KMono::T]),
        ("m(U, σ, T; zsθ)", vec![k("U", i0), KMono::SIGMA, KMono::T]),
        ("m(Z, U, σ; zsθ)", vec![KMono::Z, k("U", i0), KMono::SIGMA]),
        ("m(Z, σ, U; zsθ)", vec![KMono::Z, KMono::SIGMA, KMono::U]),
    ] {
        case(name, a, vec![d("z.s.th")], F2Sum::zero());
    }
    for n in 1..=5 {
        let phis = vec![d("f+"); n];
        case(&format!("m(T^{n}; φ₊^{n})"), vec![KMono::Laurent11 { u: 0, t: n as i32 }], phis, i1.clone());
    }
    r.absorb(check_trace_unital((2, 3), (2, 3)));
    r.absorb(check_trace_aa((2, 2), (2, 2)));
    r
}

/// The cotrace DD relation, with the single-arrow deletions that still
/// satisfy it listed as a note.
pub fn cotrace_report() -> Report {
    let (mut r, survivors) = cotrace_mutations();
    let n = cotrace().arrows.len();
    r.note(format!(
        "{} of {n} single-arrow deletions break the DD relation; still DD after deletion: {}",
        n - survivors.len(),
        if survivors.is_empty() { "none".to_string() } else { survivors.join(", ") }
    ));
    r
}

/// 𝒦 and 𝒦^! axioms up to twice `max_deg`, the transfer up to
/// `max_len + 2` inputs and the retraction of ℒ up to degree `max_deg + 2`.
pub fn verify_algebra(max_deg: u32, max_len: usize) -> Vec<Report> {
    vec![
        verify_k_algebra(2 * max_deg),
        verify_kdual_algebra(2 * max_deg, max_deg + 2),
        verify_transfer(max_len + 2, max_len as u32 + 2),
        verify_sdr(max_deg + 2),
    ]
}

/// The cotrace, the trace values, Tr ⊠ Co = id, Co ⊠ Tr = id, the weight
/// and grading laws on every nonzero trace action of those sweeps, and the
/// cotrace gradings.
pub fn verify_duality(max_deg: u32, max_len: usize) -> Vec<Report> {
    vec![
        cotrace_report(),
        verify_trace_values(),
        verify_tr_co_identity(max_deg, max_len),
        verify_co_tr_identity(max_deg, max_len),
        law_sweep(max_deg, 2 * max_deg as usize, max_deg, max_len),
        check_cotrace_gradings(),
    ]
}

/// Elliptic, transformer and Whitehead examples. `max_iter` bounds the
/// cobonsai and commensurability scans.
pub fn verify_examples(max_iter: usize) -> Vec<Report> {
    vec![
        verify_elliptic(),
        verify_transformer(),
        verify_whitehead_dd(max_iter),
        verify_whitehead_da(),
        verify_lspace_formulas(&StaircaseData::whitehead(), 3, 3),
        check_u_equivariance(&whitehead_model(), 3, 3),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        for r in [verify_k_algebra(4), verify_kdual_algebra(3, 4), verify_transfer(4, 4), verify_trace_values()] {
            assert!(r.passed(), "{r}");
        }
    }

    #[test]
    fn cotrace_mutation_survivors() {
        let (r, survivors) = cotrace_mutations();
        assert!(r.passed(), "{r}");
        assert_eq!(survivors, vec!["i0 -> i1 s|sigma", "i0 -> i1 t|tau"]);
    }

    #[test]
    fn transfer_catches_a_wrong_mu3() {
        let seqs = kinf_sequences(3, 3);
        let s = seqs.iter().find(|s| !kdualinf_mu3(&s[0], &s[1], &s[2]).is_zero()).expect("some μ₃ is nonzero");
        assert_ne!(hpl_transfer_mu(s), DualElt::zero());
    }
}
