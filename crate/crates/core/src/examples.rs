//! Worked examples: the elliptic and transformer bimodules, and the DD and
//! DA bimodules of two-component L-space links built from staircase data.
//!
//! Staircase complexes are infinite; data files carry a finite Alexander
//! window and every identity is checked only where the window cannot cut
//! it off.

use crate::algebra_k::{k_derivative, k_mul, parse_kmono, Col, KElt, KMono, KVar};
use crate::boxtensor::{box_dualda_dd, Guards, TrBoxDD};
use crate::duality::{cotrace, dualize_da, roundtrip_dd_check};
use crate::f2::F2Sum;
use crate::idem::Idem;
use crate::kdual::{parse_dual, DualMono, Phi};
use crate::report::Report;
use crate::structures::{
    check_dd, check_dd_where, check_kda, check_kdual_da, check_strict_unital_kda, check_strict_unital_kdual_da,
    cobonsai_scan_dd, commensurability_dd, commensurability_kda, idem_gens, k_sequences, DDStruct, EvalError, FnKDa,
    FnKDualDa, Gen, KDa, StructError,
};
use crate::ParseError;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

pub const WHITEHEAD_STAIR: &str = include_str!("../data/whitehead.stair");
pub const UNKNOTS_STAIR: &str = include_str!("../data/unknots.stair");
pub const WHITEHEAD_DD: &str = include_str!("../data/whitehead.dd");
pub const WHITEHEAD_DA: &str = include_str!("../data/whitehead.da");
pub const ELLIPTIC_DD: &str = include_str!("../data/elliptic.dd");
pub const TRANSFORMER_DD: &str = include_str!("../data/transformer.dd");

fn builtin_dd(text: &str) -> DDStruct {
    DDStruct::parse(text).expect("built-in DD text parses")
}

/// Drops everything after the first `.` of each generator name, leaving the
/// name contributed by the left factor of a box product.
fn keep_left_names(d: &mut DDStruct) {
    for g in &mut d.gens {
        if let Some((l, _)) = g.id.split_once('.') {
            g.id = l.to_string();
        }
    }
}

// ---------------------------------------------------------------------------
// Elliptic symmetry

/// The DA bimodule of the elliptic symmetry E: δ₂(a, x) = x' ⊗ E(a).
pub fn elliptic_da() -> FnKDa {
    FnKDa {
        gens: idem_gens("i"),
        max_inputs: Some(1),
        unital: true,
        rule: Arc::new(|a: &[KMono], _x: usize| {
            Ok(if a.len() == 1 {
                let e = a[0].elliptic();
                F2Sum::term((e.left_idem().index(), e))
            } else {
                F2Sum::zero()
            })
        }),
    }
}

/// The DA bimodule over 𝒦^! of the dual symmetry ℰ: δ₂(x, b) = ℰ(b) ⊗ x'.
pub fn elliptic_dual_da() -> FnKDualDa {
    FnKDualDa {
        gens: idem_gens("i"),
        max_inputs: Some(1),
        unital: true,
        rule: Arc::new(|_x: usize, b: &[DualMono]| {
            Ok(if b.len() == 1 {
                let e = b[0].elliptic();
                F2Sum::term((e, e.right_idem().index()))
            } else {
                F2Sum::zero()
            })
        }),
    }
}

pub fn elliptic_dd() -> DDStruct {
    builtin_dd(ELLIPTIC_DD)
}

/// Co ⊠ E and ℰ ⊠ Co against the printed diagram, plus E∘E = id.
pub fn verify_elliptic() -> Report {
    let mut r = Report::new("elliptic bimodule");
    let g = Guards::default();
    let expected = elliptic_dd();
    let e = elliptic_da();
    r.absorb(check_kda(&e, 3, 3));
    r.absorb(check_strict_unital_kda(&e, 3, 3));
    r.absorb(check_kdual_da(&elliptic_dual_da(), 3, 3));
    match dualize_da(&e, g) {
        Ok(co_e) => {
            r.absorb(co_e.compare(&expected, "Co ⊠ E"));
            r.absorb(check_dd(&co_e));
            r.compare("Co ⊠ E arrow count", &expected.arrows.len(), &co_e.arrows.len());
        }
        Err(err) => fail_eval(&mut r, "Co ⊠ E", err),
    }
    match box_dualda_dd(&elliptic_dual_da(), &cotrace(), g) {
        Ok(mut e_co) => {
            keep_left_names(&mut e_co);
            r.absorb(e_co.compare(&expected, "ℰ ⊠ Co"));
        }
        Err(err) => fail_eval(&mut r, "ℰ ⊠ Co", err),
    }
    for a in KMono::all_up_to_degree(4) {
        r.compare(format!("E(E({a}))"), &a, &a.elliptic().elliptic());
    }
    for b in DualMono::all_up_to_length(4) {
        r.compare(format!("ℰ(ℰ({b}))"), &b, &b.elliptic().elliptic());
    }
    r
}

fn fail_eval(r: &mut Report, what: &str, e: EvalError) {
    r.check();
    r.fail(what, "an evaluable product", e.to_string());
}

// ---------------------------------------------------------------------------
// Transformer

/// The transformer DA bimodule 𝒯: identity δ₂ plus
/// δ₄(cτ, b, a; i₀) = i₁ ⊗ ∂_U(a)·T·∂_T(b)·cτ for b, a, c in I₁𝒦I₁.
/// With c restricted to 1 the DA relation fails on (Z, τ, T, U).
pub fn transformer_da() -> FnKDa {
    FnKDa {
        gens: idem_gens("i"),
        max_inputs: Some(3),
        unital: true,
        rule: Arc::new(|a: &[KMono], _x: usize| {
            let mut out = F2Sum::zero();
            match a.len() {
                1 => out.toggle((a[0].left_idem().index(), a[0])),
                3 if matches!(a[0], KMono::Arrow10 { col: Col::Tau, .. }) => {
                    let du = k_derivative(&KElt::term(a[2]), KVar::U).expect("input lies in I1 K I1");
                    let dt = k_derivative(&KElt::term(a[1]), KVar::T).expect("input lies in I1 K I1");
                    let c = k_mul(&k_mul(&k_mul(&du, &KElt::term(KMono::T)), &dt), &KElt::term(a[0]));
                    for m in &c {
                        out.toggle((1, *m));
                    }
                }
                _ => {}
            }
            Ok(out)
        }),
    }
}

/// tθφ₋, the extra coefficient produced by the transformer.
pub fn t_theta_phi_minus() -> DualMono {
    parse_dual("t.th.f-", None).expect("t θ φ₋ is a monomial")
}

/// 𝒮𝒯 over 𝒦^!: identity δ₂ plus δ₃(i₀, t, φ₋) = tθφ₋ ⊗ i₁.
pub fn transformer_dual_da() -> FnKDualDa {
    FnKDualDa {
        gens: idem_gens("i"),
        max_inputs: Some(2),
        unital: true,
        rule: Arc::new(|_x: usize, b: &[DualMono]| {
            let mut out = F2Sum::zero();
            if b.len() == 1 {
                out.toggle((b[0], b[0].right_idem().index()));
            } else if b == [DualMono::t(), DualMono::phi(Phi::Minus)] {
                out.toggle((t_theta_phi_minus(), 1));
            }
            Ok(out)
        }),
    }
}

pub fn transformer_dd() -> DDStruct {
    builtin_dd(TRANSFORMER_DD)
}

fn t_pow(t: i32) -> KMono {
    KMono::Laurent11 { u: 0, t }
}

fn u_pow(u: u32) -> KMono {
    KMono::Laurent11 { u, t: 0 }
}

/// The transformer's DA relations, its δ₄ values, Co ⊠ 𝒯 against the
/// printed diagram, and 𝒮𝒯 ⊠ Co = Co ⊠ 𝒯.
pub fn verify_transformer() -> Report {
    let mut r = Report::new("transformer bimodule");
    let g = Guards::default();
    let t = transformer_da();
    r.absorb(check_kda(&t, 4, 3));
    r.absorb(check_strict_unital_kda(&t, 3, 2));
    let st = transformer_dual_da();
    r.absorb(check_kdual_da(&st, 3, 3));
    r.absorb(check_strict_unital_kdual_da(&st, 3, 2));
    let tt = KMono::Arrow10 { u: 0, t: 1, col: Col::Tau };
    let cases = [
        (vec![KMono::TAU, KMono::T, KMono::U], F2Sum::term((1, tt))),
        (vec![KMono::TAU, KMono::T, u_pow(2)], F2Sum::zero()),
        (vec![KMono::TAU, t_pow(-1), KMono::U], F2Sum::term((1, KMono::Arrow10 { u: 0, t: -1, col: Col::Tau }))),
        (vec![KMono::SIGMA, KMono::T, KMono::U], F2Sum::zero()),
    ];
    for (a, want) in cases {
        let got = t.delta(&a, 0).unwrap_or_default();
        r.compare(format!("δ₄({}, i0)", crate::structures::show_seq(&a)), &show_out(&want), &show_out(&got));
    }
    match commensurability_kda(&t, 3, 3) {
        Ok(c) => r.compare("commensurability constant of 𝒯", &1, &c),
        Err(e) => fail_eval(&mut r, "commensurability of 𝒯", e),
    }
    let expected = transformer_dd();
    let co_t = match dualize_da(&t, g) {
        Ok(d) => d,
        Err(e) => {
            fail_eval(&mut r, "Co ⊠ 𝒯", e);
            return r;
        }
    };
    r.absorb(co_t.compare(&expected, "Co ⊠ 𝒯"));
    r.absorb(check_dd(&co_t));
    match box_dualda_dd(&st, &cotrace(), g) {
        Ok(mut st_co) => {
            keep_left_names(&mut st_co);
            r.absorb(st_co.compare(&co_t, "𝒮𝒯 ⊠ Co = Co ⊠ 𝒯"));
        }
        Err(e) => fail_eval(&mut r, "𝒮𝒯 ⊠ Co", e),
    }
    r
}

fn show_out(s: &F2Sum<(usize, KMono)>) -> String {
    if s.is_zero() {
        return "0".into();
    }
    s.iter().map(|(y, c)| format!("i{y}⊗{c}")).collect::<Vec<_>>().join(" + ")
}

// ---------------------------------------------------------------------------
// Staircase data

/// The eight structure maps a staircase file supplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StairMap {
    LW,
    LZ,
    LSigma,
    LTau,
    HWZ,
    HZW,
    HSigmaZ,
    HTauW,
}

impl StairMap {
    pub const ALL: [StairMap; 8] = [
        StairMap::LW,
        StairMap::LZ,
        StairMap::LSigma,
        StairMap::LTau,
        StairMap::HWZ,
        StairMap::HZW,
        StairMap::HSigmaZ,
        StairMap::HTauW,
    ];

    pub fn key(self) -> &'static str {
        match self {
            StairMap::LW => "L_W",
            StairMap::LZ => "L_Z",
            StairMap::LSigma => "L_sigma",
            StairMap::LTau => "L_tau",
            StairMap::HWZ => "h_WZ",
            StairMap::HZW => "h_ZW",
            StairMap::HSigmaZ => "h_sigmaZ",
            StairMap::HTauW => "h_tauW",
        }
    }

    /// Change of the doubled Alexander index.
    pub fn shift(self) -> i64 {
        match self {
            StairMap::LW | StairMap::HTauW => -2,
            StairMap::LZ | StairMap::HSigmaZ => 2,
            _ => 0,
        }
    }

    /// Whether the map lands in T^s ⊗ S rather than in some C_s.
    pub fn to_s(self) -> bool {
        matches!(self, StairMap::LSigma | StairMap::LTau | StairMap::HSigmaZ | StairMap::HTauW)
    }

    /// The 𝒦^! weight of the map in the DD bimodule.
    pub fn weight(self) -> DualMono {
        let (w, z, s, t) = (DualMono::w(), DualMono::z(), DualMono::s(), DualMono::t());
        let prod = |a: DualMono, b: DualMono| a.mul(&b).expect("weight is a nonzero monomial");
        match self {
            StairMap::LW => w,
            StairMap::LZ => z,
            StairMap::LSigma => s,
            StairMap::LTau => t,
            StairMap::HWZ => prod(z, w),
            StairMap::HZW => prod(w, z),
            StairMap::HSigmaZ => prod(z, s),
            StairMap::HTauW => prod(w, t),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StairGen {
    pub name: String,
    /// Upper or lower corner of the staircase.
    pub upper: bool,
}

/// One `src dst coef` line of a map table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StairEntry {
    pub src: String,
    pub dst: String,
    pub coef: KMono,
}

/// Staircase complexes C_s and S with the maps between them. Alexander
/// indices and the linking number are stored doubled.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StaircaseData {
    pub lk2: i64,
    pub window: (i64, i64),
    pub c: BTreeMap<i64, Vec<StairGen>>,
    pub s: Vec<StairGen>,
    pub diff: Vec<StairEntry>,
    pub maps: BTreeMap<StairMap, Vec<StairEntry>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StairError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("unknown generator `{0}`")]
    UnknownGen(String),
    #[error("index bookkeeping: {0}")]
    Index(String),
    #[error("arrow escapes the window: {0}")]
    Window(String),
    #[error("identity fails: {0}")]
    Identity(String),
}

#[derive(Clone, Copy)]
enum Section {
    Head,
    C(i64),
    S,
    Diff,
    Map(StairMap),
}

impl StaircaseData {
    pub fn parse(text: &str) -> Result<StaircaseData, StairError> {
        let mut d = StaircaseData::default();
        let mut window = None;
        let mut sec = Section::Head;
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |msg: String| StairError::Syntax { line, msg };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(h) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
                sec = if let Some(v) = h.strip_prefix("C s=") {
                    let s2: i64 = v.trim().parse().map_err(|_| err(format!("bad index `{v}`")))?;
                    d.c.entry(s2).or_default();
                    Section::C(s2)
                } else if h == "S" {
                    Section::S
                } else if h == "diff" {
                    Section::Diff
                } else if let Some(k) = h.strip_prefix("map ") {
                    let m = StairMap::ALL
                        .into_iter()
                        .find(|m| m.key() == k.trim())
                        .ok_or_else(|| err(format!("unknown map `{k}`")))?;
                    d.maps.entry(m).or_default();
                    Section::Map(m)
                } else {
                    return Err(err(format!("unknown section `{h}`")));
                };
                continue;
            }
            let words: Vec<&str> = body.split_whitespace().collect();
            match sec {
                Section::Head => match words.as_slice() {
                    ["lk", v] => d.lk2 = v.parse().map_err(|_| err(format!("bad linking number `{v}`")))?,
                    ["window", a, b] => {
                        let a: i64 = a.parse().map_err(|_| err(format!("bad window `{a}`")))?;
                        let b: i64 = b.parse().map_err(|_| err(format!("bad window `{b}`")))?;
                        if a > b || (b - a) % 2 != 0 {
                            return Err(err("window ends must differ by an integer".into()));
                        }
                        window = Some((a, b));
                    }
                    _ => return Err(err(format!("unexpected `{body}`"))),
                },
                Section::C(_) | Section::S => {
                    let upper = match words.as_slice() {
                        [_, "upper"] => true,
                        [_, "lower"] => false,
                        _ => return Err(err("expected `<name> upper|lower`".into())),
                    };
                    let g = StairGen { name: words[0].to_string(), upper };
                    match sec {
                        Section::C(s2) => d.c.get_mut(&s2).expect("section registered").push(g),
                        _ => d.s.push(g),
                    }
                }
                Section::Diff | Section::Map(_) => {
                    let [src, dst, coef] = words.as_slice() else {
                        return Err(err("expected `<src> <dst> <coef>`".into()));
                    };
                    let e = StairEntry {
                        src: src.to_string(),
                        dst: dst.to_string(),
                        coef: parse_kmono(coef, Some(Idem::I0))?,
                    };
                    if e.coef.left_idem() != Idem::I0 || e.coef.right_idem() != Idem::I0 {
                        return Err(err(format!("coefficient `{coef}` is not in F[W,Z]")));
                    }
                    match sec {
                        Section::Diff => d.diff.push(e),
                        Section::Map(m) => d.maps.get_mut(&m).expect("section registered").push(e),
                        _ => unreachable!(),
                    }
                }
            }
        }
        d.window = window.ok_or(StairError::Syntax { line: 0, msg: "missing `window`".into() })?;
        Ok(d)
    }

    pub fn whitehead() -> StaircaseData {
        StaircaseData::parse(WHITEHEAD_STAIR).expect("built-in staircase data parses")
    }

    pub fn unknots() -> StaircaseData {
        StaircaseData::parse(UNKNOTS_STAIR).expect("built-in staircase data parses")
    }
}

/// An F[W,Z]-linear combination of generators.
pub type Lin = F2Sum<(usize, KMono)>;

/// A map given by its value on every generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinMap(pub Vec<Lin>);

fn scale(c: KMono, v: &Lin) -> Lin {
    v.iter().map(|(g, d)| (*g, c.mul(d).expect("coefficients commute in F[W,Z]"))).collect()
}

impl LinMap {
    pub fn zero(n: usize) -> LinMap {
        LinMap(vec![Lin::zero(); n])
    }

    pub fn identity(n: usize) -> LinMap {
        LinMap((0..n).map(|g| Lin::term((g, KMono::unit(Idem::I0)))).collect())
    }

    pub fn apply(&self, v: &Lin) -> Lin {
        let mut out = Lin::zero();
        for (g, c) in v {
            out.add_sum(scale(*c, &self.0[*g]));
        }
        out
    }

    /// self ∘ first.
    pub fn after(&self, first: &LinMap) -> LinMap {
        LinMap(first.0.iter().map(|v| self.apply(v)).collect())
    }

    pub fn plus(&self, o: &LinMap) -> LinMap {
        LinMap(
            self.0
                .iter()
                .zip(&o.0)
                .map(|(a, b)| {
                    let mut s = a.clone();
                    s.add_sum(b.clone());
                    s
                })
                .collect(),
        )
    }

    pub fn times(&self, c: KMono) -> LinMap {
        LinMap(self.0.iter().map(|v| scale(c, v)).collect())
    }

    pub fn pow(&self, n: u32) -> LinMap {
        let mut out = LinMap::identity(self.0.len());
        for _ in 0..n {
            out = self.after(&out);
        }
        out
    }

    /// The morphism differential d∘f + f∘d.
    pub fn boundary(&self, d: &LinMap) -> LinMap {
        d.after(self).plus(&self.after(d))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenKind {
    /// A generator of C_s, with doubled s.
    C { s2: i64, upper: bool },
    /// T^t ⊗ (generator `s` of S), with doubled t.
    T { t2: i64, s: usize },
}

/// Staircase data laid out on one generator list: the C_s generators in
/// file order, then T^t ⊗ S for every t in the window.
#[derive(Clone, Debug)]
pub struct LspaceModel {
    pub data: StaircaseData,
    pub gens: Vec<Gen>,
    pub kinds: Vec<GenKind>,
    pub d: LinMap,
    pub maps: BTreeMap<StairMap, LinMap>,
    pub lt: LinMap,
    pub lt_inv: LinMap,
}

/// T^t written with a half-integer exponent when t is odd.
fn t_label(t2: i64) -> String {
    if t2 % 2 == 0 {
        format!("T^{}", t2 / 2)
    } else {
        format!("T^{t2}/2")
    }
}

impl LspaceModel {
    /// Lays out the data and checks index bookkeeping and every homotopy
    /// identity at generators away from the window ends.
    pub fn new(data: &StaircaseData) -> Result<LspaceModel, StairError> {
        let (lo, hi) = data.window;
        let mut gens = Vec::new();
        let mut kinds = Vec::new();
        for (s2, cs) in &data.c {
            if *s2 < lo || *s2 > hi || (s2 - lo) % 2 != 0 {
                return Err(StairError::Window(format!("C_s with 2s = {s2} lies outside the window")));
            }
            for g in cs {
                gens.push(Gen::new(g.name.clone(), Idem::I0));
                kinds.push(GenKind::C { s2: *s2, upper: g.upper });
            }
        }
        let mut t2 = lo;
        while t2 <= hi {
            for (k, g) in data.s.iter().enumerate() {
                let name = if data.s.len() == 1 { t_label(t2) } else { format!("{}.{}", t_label(t2), g.name) };
                gens.push(Gen::two(name, Idem::I1, Idem::I0));
                kinds.push(GenKind::T { t2, s: k });
            }
            t2 += 2;
        }
        let n = gens.len();
        let c_index: HashMap<&str, usize> = gens
            .iter()
            .enumerate()
            .filter(|(i, _)| matches!(kinds[*i], GenKind::C { .. }))
            .map(|(i, g)| (g.id.as_str(), i))
            .collect();
        if c_index.len() != kinds.iter().filter(|k| matches!(k, GenKind::C { .. })).count() {
            return Err(StairError::Index("duplicate C_s generator name".into()));
        }
        let s_index: HashMap<&str, usize> = data.s.iter().enumerate().map(|(i, g)| (g.name.as_str(), i)).collect();
        let t_gen = |t2: i64, s: usize| -> Option<usize> { kinds.iter().position(|k| *k == GenKind::T { t2, s }) };
        let s2_of = |g: usize| match kinds[g] {
            GenKind::C { s2, .. } => s2,
            GenKind::T { t2, .. } => t2,
        };

        let mut d = LinMap::zero(n);
        for e in &data.diff {
            match (c_index.get(e.src.as_str()), c_index.get(e.dst.as_str())) {
                (Some(&x), Some(&y)) => {
                    if s2_of(x) != s2_of(y) {
                        return Err(StairError::Index(format!("differential {} -> {} changes s", e.src, e.dst)));
                    }
                    d.0[x].toggle((y, e.coef));
                }
                _ => {
                    let x = *s_index.get(e.src.as_str()).ok_or_else(|| StairError::UnknownGen(e.src.clone()))?;
                    let y = *s_index.get(e.dst.as_str()).ok_or_else(|| StairError::UnknownGen(e.dst.clone()))?;
                    for (g, k) in kinds.iter().enumerate() {
                        if let GenKind::T { t2, s } = *k {
                            if s == x {
                                d.0[g].toggle((t_gen(t2, y).expect("same window"), e.coef));
                            }
                        }
                    }
                }
            }
        }

        let mut maps = BTreeMap::new();
        for m in StairMap::ALL {
            let mut f = LinMap::zero(n);
            for e in data.maps.get(&m).map(Vec::as_slice).unwrap_or(&[]) {
                let x = *c_index.get(e.src.as_str()).ok_or_else(|| StairError::UnknownGen(e.src.clone()))?;
                let target = s2_of(x) + m.shift();
                let y = if m.to_s() {
                    let k = *s_index.get(e.dst.as_str()).ok_or_else(|| StairError::UnknownGen(e.dst.clone()))?;
                    t_gen(target, k).ok_or_else(|| {
                        StairError::Window(format!(
                            "{} sends {} to {} outside the window",
                            m.key(),
                            e.src,
                            t_label(target)
                        ))
                    })?
                } else {
                    let y = *c_index.get(e.dst.as_str()).ok_or_else(|| StairError::UnknownGen(e.dst.clone()))?;
                    if s2_of(y) != target {
                        return Err(StairError::Index(format!(
                            "{} sends {} (2s = {}) to {} (2s = {}), expected 2s = {target}",
                            m.key(),
                            e.src,
                            s2_of(x),
                            e.dst,
                            s2_of(y)
                        )));
                    }
                    y
                };
                f.0[x].toggle((y, e.coef));
            }
            maps.insert(m, f);
        }

        let mut lt = LinMap::zero(n);
        let mut lt_inv = LinMap::zero(n);
        for (g, k) in kinds.iter().enumerate() {
            if let GenKind::T { t2, s } = *k {
                let one = KMono::unit(Idem::I0);
                if let Some(y) = t_gen(t2 + 2, s) {
                    lt.0[g].toggle((y, one));
                }
                if let Some(y) = t_gen(t2 - 2, s) {
                    lt_inv.0[g].toggle((y, one));
                }
            }
        }

        let model = LspaceModel { data: data.clone(), gens, kinds, d, maps, lt, lt_inv };
        model.check_identities()?;
        Ok(model)
    }

    pub fn map(&self, m: StairMap) -> &LinMap {
        &self.maps[&m]
    }

    pub fn n(&self) -> usize {
        self.gens.len()
    }

    /// Whether g sits strictly inside the window, at distance at least
    /// `margin` steps from either end.
    pub fn inside(&self, g: usize, margin: i64) -> bool {
        let (lo, hi) = self.data.window;
        let s2 = match self.kinds[g] {
            GenKind::C { s2, .. } | GenKind::T { t2: s2, .. } => s2,
        };
        s2 - 2 * margin >= lo && s2 + 2 * margin <= hi
    }

    /// L_T^k for any integer k.
    pub fn lt_pow(&self, k: i64) -> LinMap {
        if k >= 0 {
            self.lt.pow(k as u32)
        } else {
            self.lt_inv.pow((-k) as u32)
        }
    }

    pub fn u(&self) -> LinMap {
        LinMap::identity(self.n()).times(KMono::U0)
    }

    /// h_{σ,W} = L_{T⁻¹} h_{σ,Z} L_W + L_{T⁻¹} L_σ h_{Z,W}.
    pub fn h_sigma_w(&self) -> LinMap {
        use StairMap::*;
        let a = self.lt_inv.after(self.map(HSigmaZ)).after(self.map(LW));
        let b = self.lt_inv.after(self.map(LSigma)).after(self.map(HZW));
        a.plus(&b)
    }

    /// h_{τ,Z} = L_T h_{τ,W} L_Z + L_T L_τ h_{W,Z}.
    pub fn h_tau_z(&self) -> LinMap {
        use StairMap::*;
        let a = self.lt.after(self.map(HTauW)).after(self.map(LZ));
        let b = self.lt.after(self.map(LTau)).after(self.map(HWZ));
        a.plus(&b)
    }

    fn check_identities(&self) -> Result<(), StairError> {
        use StairMap::*;
        let d = &self.d;
        let zero = LinMap::zero(self.n());
        let u = self.u();
        let mut eqs: Vec<(String, LinMap, LinMap, i64)> = vec![("d² = 0".into(), d.after(d), zero.clone(), 0)];
        for m in [LW, LZ, LSigma, LTau] {
            eqs.push((format!("{} is a chain map", m.key()), self.map(m).boundary(d), zero.clone(), 0));
        }
        eqs.push((
            "∂h_WZ = L_W L_Z + U".into(),
            self.map(HWZ).boundary(d),
            self.map(LW).after(self.map(LZ)).plus(&u),
            1,
        ));
        eqs.push((
            "∂h_ZW = L_Z L_W + U".into(),
            self.map(HZW).boundary(d),
            self.map(LZ).after(self.map(LW)).plus(&u),
            1,
        ));
        eqs.push((
            "∂h_σZ = L_σ L_Z + L_T L_σ".into(),
            self.map(HSigmaZ).boundary(d),
            self.map(LSigma).after(self.map(LZ)).plus(&self.lt.after(self.map(LSigma))),
            1,
        ));
        eqs.push((
            "∂h_τW = L_τ L_W + L_{T⁻¹} L_τ".into(),
            self.map(HTauW).boundary(d),
            self.map(LTau).after(self.map(LW)).plus(&self.lt_inv.after(self.map(LTau))),
            1,
        ));
        for (name, lhs, rhs, margin) in eqs {
            for g in 0..self.n() {
                // The homotopies are maps out of the C_s.
                let on_c = matches!(self.kinds[g], GenKind::C { .. });
                if !self.inside(g, margin) || (margin > 0 && !on_c) {
                    continue;
                }
                if lhs.0[g] != rhs.0[g] {
                    return Err(StairError::Identity(format!(
                        "{name} at {}: {} vs {}",
                        self.gens[g].id,
                        self.show(&lhs.0[g]),
                        self.show(&rhs.0[g])
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn show(&self, v: &Lin) -> String {
        if v.is_zero() {
            return "0".into();
        }
        v.iter().map(|(g, c)| format!("{}⊗{c}", self.gens[*g].id)).collect::<Vec<_>>().join(" + ")
    }

    /// The DD bimodule over (𝒦^!, F[W,Z]).
    pub fn dd(&self) -> DDStruct {
        let mut dd = DDStruct::new(self.gens.clone()).expect("generator names are distinct");
        let mut add = |x: usize, y: usize, b: DualMono, c: KMono| {
            dd.add_arrow(x, y, b, c).expect("staircase arrows respect idempotents");
        };
        for (x, v) in self.d.0.iter().enumerate() {
            for (y, c) in v {
                add(x, *y, DualMono::unit(self.gens[x].left), *c);
            }
        }
        for (m, f) in &self.maps {
            for (x, v) in f.0.iter().enumerate() {
                for (y, c) in v {
                    add(x, *y, m.weight(), *c);
                }
            }
        }
        for (x, g) in self.gens.iter().enumerate() {
            add(x, x, DualMono::theta(g.left), KMono::U0);
        }
        for (x, v) in self.lt.0.iter().enumerate() {
            for (y, c) in v {
                add(x, *y, DualMono::phi(Phi::Plus), *c);
            }
        }
        for (x, v) in self.lt_inv.0.iter().enumerate() {
            for (y, c) in v {
                add(x, *y, DualMono::phi(Phi::Minus), *c);
            }
        }
        dd
    }
}

impl fmt::Display for StairMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Parses staircase data and checks all of its identities.
pub fn load_staircase(text: &str) -> Result<LspaceModel, StairError> {
    LspaceModel::new(&StaircaseData::parse(text)?)
}

/// The DD bimodule of a two-component L-space link: L_W, L_Z, h_WZ, h_ZW,
/// L_σ, L_τ, h_σZ, h_τW weighted by w, z, zw, wz, s, t, zs, wt; θ|U on every
/// generator; φ₊|1 and φ₋|1 between neighbouring T powers.
pub fn build_lspace_dd(data: &StaircaseData) -> Result<DDStruct, StairError> {
    Ok(LspaceModel::new(data)?.dd())
}

pub fn whitehead_model() -> LspaceModel {
    LspaceModel::new(&StaircaseData::whitehead()).expect("built-in staircase data is consistent")
}

/// The printed Whitehead DD diagram.
pub fn whitehead_dd() -> DDStruct {
    builtin_dd(WHITEHEAD_DD)
}

/// The printed Whitehead DA diagram: nonzero δ values keyed by generator and
/// input sequence (in acting order).
pub type DaTable = BTreeMap<(String, Vec<KMono>), BTreeMap<String, KMono>>;

pub fn parse_da_table(text: &str) -> Result<DaTable, StructError> {
    let mut t = DaTable::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let [x, inputs, y, c] = body.split_whitespace().collect::<Vec<_>>()[..] else {
            return Err(StructError::Syntax { line, msg: "expected `<x> <inputs> <y> <c>`".into() });
        };
        let mut a = Vec::new();
        if inputs != "-" {
            for s in inputs.split(',').rev() {
                a.push(parse_kmono(s, Some(Idem::I1))?);
            }
        }
        let c = parse_kmono(c, Some(Idem::I0))?;
        let slot = t.entry((x.to_string(), a)).or_default();
        if slot.insert(y.to_string(), c).is_some() {
            return Err(StructError::Syntax { line, msg: "repeated entry".into() });
        }
    }
    Ok(t)
}

pub fn whitehead_da_table() -> DaTable {
    parse_da_table(WHITEHEAD_DA).expect("built-in DA table parses")
}

/// Tr ⊠ (built Whitehead DD), compared with the printed DA diagram on δ₁,
/// on every δ₂ with a single letter input and on every δ₃ with two letter
/// inputs.
pub fn verify_whitehead_da() -> Report {
    let mut r = Report::new("Tr ⊠ Whitehead DD = printed DA");
    let model = whitehead_model();
    let tr = TrBoxDD::new(model.dd());
    let table = whitehead_da_table();
    let letters = [KMono::W, KMono::Z, KMono::SIGMA, KMono::TAU, KMono::T, KMono::TINV, KMono::U];
    let mut seqs: Vec<Vec<KMono>> = vec![vec![]];
    seqs.extend(letters.iter().map(|a| vec![*a]));
    for a1 in letters {
        for a2 in letters {
            if a2.right_idem() == a1.left_idem() {
                seqs.push(vec![a1, a2]);
            }
        }
    }
    for key in table.keys() {
        if !seqs.contains(&key.1) {
            seqs.push(key.1.clone());
        }
    }
    for (x, g) in model.gens.iter().enumerate() {
        for a in &seqs {
            if a.first().is_some_and(|a1| a1.right_idem() != g.left) {
                continue;
            }
            let want: BTreeMap<String, KMono> = table.get(&(g.id.clone(), a.clone())).cloned().unwrap_or_default();
            let want: Lin = want
                .iter()
                .map(|(y, c)| (model.gens.iter().position(|h| &h.id == y).expect("known generator"), *c))
                .collect();
            match tr.delta(a, x) {
                Ok(got) => {
                    let input = format!(
                        "δ({}{}{})",
                        crate::structures::show_seq(a),
                        if a.is_empty() { "" } else { ", " },
                        g.id
                    );
                    r.compare(input, &model.show(&want), &model.show(&got));
                }
                Err(e) => fail_eval(&mut r, &g.id, e),
            }
        }
    }
    r
}

/// Tr ⊠ (built DD) against the closed-form L-space actions for all powers
/// i, j up to the bounds and T powers within ±3.
pub fn verify_lspace_formulas(data: &StaircaseData, i_max: u32, j_max: u32) -> Report {
    let mut r = Report::new(format!("L-space closed forms (i ≤ {i_max}, j ≤ {j_max})"));
    let model = match LspaceModel::new(data) {
        Ok(m) => m,
        Err(e) => {
            r.check();
            r.fail("staircase data", "consistent data", e.to_string());
            return r;
        }
    };
    let tr = TrBoxDD::new(model.dd());
    let n = model.n();
    let zero = LinMap::zero(n);
    let u = |k: u32| KMono::Poly00 { w: k, z: k };
    let wp = |k: u32| KMono::Poly00 { w: k, z: 0 };
    let zp = |k: u32| KMono::Poly00 { w: 0, z: k };
    let ts = |t: i32, col: Col| KMono::Arrow10 { u: 0, t, col };
    use StairMap::*;
    let (lw, lz) = (model.map(LW), model.map(LZ));
    let (hwz, hzw) = (model.map(HWZ), model.map(HZW));
    let (hsz, htw) = (model.map(HSigmaZ), model.map(HTauW));
    let (hsw, htz) = (model.h_sigma_w(), model.h_tau_z());
    let sum = |terms: Vec<LinMap>| terms.into_iter().fold(zero.clone(), |acc, t| acc.plus(&t));

    // (label, inputs in acting order, expected map)
    let mut cases: Vec<(String, Vec<KMono>, LinMap)> = Vec::new();
    let jm = i_max.max(j_max);
    for j in 1..=jm {
        cases.push((format!("δ₂(Z^{j})"), vec![zp(j)], lz.pow(j)));
        cases.push((format!("δ₂(W^{j})"), vec![wp(j)], lw.pow(j)));
    }
    for i in 1..=i_max {
        for j in 1..=j_max {
            // Each summand carries U^{n-1}; without it the sum is not homogeneous.
            let wz =
                sum((1..=i.min(j)).map(|k| lw.pow(i - k).after(hwz).after(&lz.pow(j - k)).times(u(k - 1))).collect());
            cases.push((format!("δ₃(W^{i}, Z^{j})"), vec![zp(j), wp(i)], wz));
            let zw =
                sum((1..=i.min(j)).map(|k| lz.pow(i - k).after(hzw).after(&lw.pow(j - k)).times(u(k - 1))).collect());
            cases.push((format!("δ₃(Z^{i}, W^{j})"), vec![wp(j), zp(i)], zw));
            cases.push((format!("δ₃(Z^{i}, Z^{j})"), vec![zp(j), zp(i)], zero.clone()));
            cases.push((format!("δ₃(W^{i}, W^{j})"), vec![wp(j), wp(i)], zero.clone()));
        }
    }
    for ti in -3i32..=3 {
        if ti != 0 {
            cases.push((format!("δ₂(T^{ti})"), vec![t_pow(ti)], model.lt_pow(ti as i64)));
        }
        cases.push((
            format!("δ₂(T^{ti}σ)"),
            vec![ts(ti, Col::Sigma)],
            model.lt_pow(ti as i64).after(model.map(LSigma)),
        ));
        cases.push((format!("δ₂(T^{ti}τ)"), vec![ts(ti, Col::Tau)], model.lt_pow(ti as i64).after(model.map(LTau))));
        for tj in -3i32..=3 {
            if tj == 0 {
                continue;
            }
            for col in [Col::Sigma, Col::Tau] {
                cases.push((
                    format!("δ₃(T^{tj}, T^{ti}{})", col_name(col)),
                    vec![ts(ti, col), t_pow(tj)],
                    zero.clone(),
                ));
            }
        }
        let i = ti as i64;
        for j in 1..=j_max {
            let sz = sum((1..=j).map(|k| model.lt_pow(i + k as i64 - 1).after(hsz).after(&lz.pow(j - k))).collect());
            cases.push((format!("δ₃(T^{ti}σ, Z^{j})"), vec![zp(j), ts(ti, Col::Sigma)], sz));
            let sw = sum((1..=j)
                .map(|k| model.lt_pow(i - k as i64 + 1).after(&hsw).after(&lw.pow(j - k)).times(u(k - 1)))
                .collect());
            cases.push((format!("δ₃(T^{ti}σ, W^{j})"), vec![wp(j), ts(ti, Col::Sigma)], sw));
            let tw = sum((1..=j).map(|k| model.lt_pow(i - k as i64 + 1).after(htw).after(&lw.pow(j - k))).collect());
            cases.push((format!("δ₃(T^{ti}τ, W^{j})"), vec![wp(j), ts(ti, Col::Tau)], tw));
            let tz = sum((1..=j)
                .map(|k| model.lt_pow(i + k as i64 - 1).after(&htz).after(&lz.pow(j - k)).times(u(k - 1)))
                .collect());
            cases.push((format!("δ₃(T^{ti}τ, Z^{j})"), vec![zp(j), ts(ti, Col::Tau)], tz));
        }
    }

    let rows: Vec<(String, String, String)> = cases
        .par_iter()
        .flat_map_iter(|(label, a, want)| {
            let model = &model;
            let tr = &tr;
            (0..n).filter_map(move |x| {
                if a[0].right_idem() != model.gens[x].left {
                    return None;
                }
                let got = tr.delta(a, x).map(|v| model.show(&v)).unwrap_or_else(|e| e.to_string());
                Some((format!("{label} at {}", model.gens[x].id), model.show(&want.0[x]), got))
            })
        })
        .collect();
    for (input, want, got) in rows {
        r.compare(input, &want, &got);
    }
    r
}

fn col_name(c: Col) -> &'static str {
    match c {
        Col::Sigma => "σ",
        Col::Tau => "τ",
    }
}

/// δ(…, U·a_i, …) = U·δ(…, a_i, …) for Tr ⊠ (built DD) on scanned inputs of
/// length up to `max_len` and degree up to `deg_cap`.
pub fn check_u_equivariance(model: &LspaceModel, max_len: usize, deg_cap: u32) -> Report {
    let mut r = Report::new("U-equivariance");
    let tr = TrBoxDD::new(model.dd());
    let mut cases = Vec::new();
    for a in k_sequences(max_len, deg_cap) {
        if a.is_empty() {
            continue;
        }
        for x in 0..model.n() {
            if a[0].right_idem() == model.gens[x].left {
                for i in 0..a.len() {
                    cases.push((a.clone(), x, i));
                }
            }
        }
    }
    let rows: Vec<(String, String, String)> = cases
        .par_iter()
        .map(|(a, x, i)| {
            let mut ua = a.clone();
            let e = ua[*i].left_idem();
            ua[*i] = KMono::U.in_idem(e).mul(&ua[*i]).expect("U is central");
            let lhs = tr.delta(&ua, *x).map(|v| model.show(&v)).unwrap_or_else(|e| e.to_string());
            let rhs = tr.delta(a, *x).map(|v| model.show(&scale(KMono::U0, &v))).unwrap_or_else(|e| e.to_string());
            (
                format!("δ({}, {}) with U on input {}", crate::structures::show_seq(a), model.gens[*x].id, i + 1),
                rhs,
                lhs,
            )
        })
        .collect();
    for (input, want, got) in rows {
        r.compare(input, &want, &got);
    }
    r
}

/// Built DD against the printed diagram, its DD relation away from the
/// window ends, the cobonsai bound and commensurability constant, and the
/// round trip through the trace.
pub fn verify_whitehead_dd(max_iter: usize) -> Report {
    let mut r = Report::new("Whitehead DD");
    let model = whitehead_model();
    let dd = model.dd();
    r.absorb(dd.compare(&whitehead_dd(), "built = printed"));
    r.absorb(check_dd_where(&dd, |g| model.inside(g, 1)));
    r.compare(format!("cobonsai bound (depth {max_iter})"), &1, &cobonsai_scan_dd(&dd, max_iter));
    r.compare(format!("commensurability constant (depth {max_iter})"), &0, &commensurability_dd(&dd, max_iter));
    r.absorb(roundtrip_dd_check(&dd, Guards { max_inputs: 3, check_beyond: 1 }));
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn elliptic_matches_diagram() {
        let r = verify_elliptic();
        assert!(r.passed(), "{r}");
        let co_e = dualize_da(&elliptic_da(), Guards::default()).unwrap();
        let w_z = (String::from("i0"), String::from("i0"), DualMono::w(), KMono::Z);
        assert!(co_e.named_arrows().contains(&w_z));
        assert_eq!(co_e.arrows.len(), 8);
    }

    #[test]
    fn transformer_delta4_values() {
        let t = transformer_da();
        let tt = KMono::Arrow10 { u: 0, t: 1, col: Col::Tau };
        assert_eq!(t.delta(&[KMono::TAU, KMono::T, KMono::U], 0).unwrap(), F2Sum::term((1, tt)));
        assert!(t.delta(&[KMono::TAU, KMono::T, u_pow(2)], 0).unwrap().is_zero());
    }

    #[test]
    fn transformer_matches_diagram() {
        let r = verify_transformer();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn staircase_files_load() {
        let w = StaircaseData::whitehead();
        assert_eq!(w.window, (-6, 6));
        assert_eq!(w.c[&0].len(), 3);
        assert!(w.c[&0][1].upper);
        whitehead_model();
        LspaceModel::new(&StaircaseData::unknots()).unwrap();
    }

    #[test]
    fn zero_homotopy_is_rejected() {
        let mut w = StaircaseData::whitehead();
        w.maps.insert(StairMap::HWZ, Vec::new());
        let err = LspaceModel::new(&w).unwrap_err();
        assert!(matches!(err, StairError::Identity(ref m) if m.contains("h_WZ")), "{err}");
    }

    #[test]
    fn bad_index_is_rejected() {
        let text = WHITEHEAD_STAIR.replace("x1 x2 1\n", "x1 x3 1\n");
        assert!(matches!(load_staircase(&text), Err(StairError::Index(_))));
    }

    #[test]
    fn escaping_arrow_is_rejected() {
        let text = WHITEHEAD_STAIR.replace("[map h_sigmaZ]\n", "[map h_sigmaZ]\nx3 S 1\n");
        assert!(matches!(load_staircase(&text), Err(StairError::Window(_))));
    }

    #[test]
    fn unknots_pass_dd_relation() {
        let m = LspaceModel::new(&StaircaseData::unknots()).unwrap();
        let dd = m.dd();
        let r = check_dd_where(&dd, |g| m.inside(g, 1));
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn whitehead_dd_matches_diagram() {
        let r = verify_whitehead_dd(8);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn whitehead_da_matches_diagram() {
        let r = verify_whitehead_da();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn whitehead_formulas_small() {
        let r = verify_lspace_formulas(&StaircaseData::whitehead(), 2, 2);
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn whitehead_h_sigma_w_vanishes() {
        let m = whitehead_model();
        assert_eq!(m.h_sigma_w(), LinMap::zero(m.n()));
        assert_eq!(m.h_tau_z(), LinMap::zero(m.n()));
    }

    #[test]
    fn whitehead_u_equivariant_small() {
        let r = check_u_equivariance(&whitehead_model(), 2, 1);
        assert!(r.passed(), "{r}");
    }
}
