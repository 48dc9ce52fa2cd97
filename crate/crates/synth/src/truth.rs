//! Small-function resynthesis over at most four variables.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::network::{Builder, Lit, Probe};

pub(crate) const VAR_TT: [u16; 4] = [0xAAAA, 0xCCCC, 0xF0F0, 0xFF00];

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Expr {
    Const(bool),
    Leaf(u8),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
}

impl Expr {
    fn not(e: Expr) -> Expr {
        match e {
            Expr::Not(inner) => *inner,
            Expr::Const(c) => Expr::Const(!c),
            other => Expr::Not(Box::new(other)),
        }
    }

    fn and(a: Expr, b: Expr) -> Expr {
        Expr::And(Box::new(a), Box::new(b))
    }

    fn or(a: Expr, b: Expr) -> Expr {
        Expr::not(Expr::and(Expr::not(a), Expr::not(b)))
    }

    fn lit(var: usize, positive: bool) -> Expr {
        let leaf = Expr::Leaf(var as u8);
        if positive {
            leaf
        } else {
            Expr::not(leaf)
        }
    }

    pub(crate) fn ands(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Leaf(_) => 0,
            Expr::Not(e) => e.ands(),
            Expr::And(a, b) => 1 + a.ands() + b.ands(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Leaf(_) => 0,
            Expr::Not(e) => e.depth(),
            Expr::And(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    #[cfg(test)]
    pub(crate) fn eval(&self) -> u16 {
        match self {
            Expr::Const(c) => if *c { 0xFFFF } else { 0 },
            Expr::Leaf(i) => VAR_TT[*i as usize],
            Expr::Not(e) => !e.eval(),
            Expr::And(a, b) => a.eval() & b.eval(),
        }
    }

    fn cost(&self) -> (usize, usize) {
        (self.ands(), self.depth())
    }
}

fn cofactors(f: u16, v: usize) -> (u16, u16) {
    let m = VAR_TT[v];
    let s = 1 << v;
    let lo = f & !m;
    let hi = f & m;
    (lo | (lo << s), hi | (hi >> s))
}

fn depends_on(f: u16, v: usize) -> bool {
    let (f0, f1) = cofactors(f, v);
    f0 != f1
}

/// A product term: bit i of `mask` selects variable i, bit i of `pos` its
/// polarity.
#[derive(Debug, Clone, Copy)]
struct Cube {
    mask: u8,
    pos: u8,
}

/// Minato-Morreale irredundant SOP of any function between `lower` and
/// `upper`. Returns the cubes and the function they cover.
fn isop(lower: u16, upper: u16, top: usize, out: &mut Vec<Cube>) -> u16 {
    if lower == 0 {
        return 0;
    }
    if upper == 0xFFFF {
        out.push(Cube { mask: 0, pos: 0 });
        return 0xFFFF;
    }
    let mut v = top;
    while !(depends_on(lower, v) || depends_on(upper, v)) {
        v -= 1;
    }
    let (l0, l1) = cofactors(lower, v);
    let (u0, u1) = cofactors(upper, v);
    let start = out.len();
    let r0 = isop(l0 & !u1, u0, v.saturating_sub(1), out);
    for c in &mut out[start..] {
        c.mask |= 1 << v;
    }
    let mid = out.len();
    let r1 = isop(l1 & !u0, u1, v.saturating_sub(1), out);
    for c in &mut out[mid..] {
        c.mask |= 1 << v;
        c.pos |= 1 << v;
    }
    let rest_lower = (l0 & !r0) | (l1 & !r1);
    let rs = isop(rest_lower, u0 & u1, v.saturating_sub(1), out);
    (r0 & !VAR_TT[v]) | (r1 & VAR_TT[v]) | rs
}

fn balanced(mut terms: Vec<Expr>, op: fn(Expr, Expr) -> Expr, empty: Expr) -> Expr {
    if terms.is_empty() {
        return empty;
    }
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        let mut it = terms.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(op(a, b)),
                None => next.push(a),
            }
        }
        terms = next;
    }
    terms.pop().expect("non-empty")
}

fn sop(f: u16) -> Expr {
    let mut cubes = Vec::new();
    isop(f, f, 3, &mut cubes);
    let terms = cubes
        .iter()
        .map(|c| {
            let lits = (0..4)
                .filter(|i| c.mask >> i & 1 == 1)
                .map(|i| Expr::lit(i, c.pos >> i & 1 == 1))
                .collect();
            balanced(lits, Expr::and, Expr::Const(true))
        })
        .collect();
    balanced(terms, Expr::or, Expr::Const(false))
}

/// Splits off every literal `l` with `f = l & g`, as a balanced conjunction.
fn and_factor(f: u16, memo: &mut HashMap<u16, Expr>) -> Option<Expr> {
    let mut lits = Vec::new();
    let mut g = f;
    'outer: loop {
        for v in 0..4 {
            if !depends_on(g, v) {
                continue;
            }
            let (g0, g1) = cofactors(g, v);
            if g0 == 0 {
                lits.push(Expr::lit(v, true));
                g = g1;
                continue 'outer;
            }
            if g1 == 0 {
                lits.push(Expr::lit(v, false));
                g = g0;
                continue 'outer;
            }
        }
        break;
    }
    if lits.is_empty() {
        return None;
    }
    let mut terms = Vec::with_capacity(lits.len() + 1);
    if g != 0xFFFF {
        terms.push(synth(g, memo));
    }
    terms.extend(lits);
    Some(balanced(terms, Expr::and, Expr::Const(true)))
}

fn synth_uncached(f: u16, memo: &mut HashMap<u16, Expr>) -> Expr {
    if f == 0 || f == 0xFFFF {
        return Expr::Const(f != 0);
    }
    for (v, &tt) in VAR_TT.iter().enumerate() {
        if f == tt {
            return Expr::lit(v, true);
        }
        if f == !tt {
            return Expr::lit(v, false);
        }
    }
    if let Some(e) = and_factor(f, memo) {
        return e;
    }
    if let Some(e) = and_factor(!f, memo) {
        return Expr::not(e);
    }
    let support: Vec<usize> = (0..4).filter(|&v| depends_on(f, v)).collect();
    let mut best = sop(f);
    let consider = |e: Expr, best: &mut Expr| {
        if e.cost() < best.cost() {
            *best = e;
        }
    };
    consider(Expr::not(sop(!f)), &mut best);
    for &v in &support {
        let (f0, f1) = cofactors(f, v);
        let e = if f0 == !f1 {
            // f = v xor f0
            let g = synth(f0, memo);
            Expr::or(
                Expr::and(Expr::lit(v, true), Expr::not(g.clone())),
                Expr::and(Expr::lit(v, false), g),
            )
        } else {
            Expr::or(
                Expr::and(Expr::lit(v, true), synth(f1, memo)),
                Expr::and(Expr::lit(v, false), synth(f0, memo)),
            )
        };
        consider(e, &mut best);
    }
    best
}

fn synth(f: u16, memo: &mut HashMap<u16, Expr>) -> Expr {
    if let Some(e) = memo.get(&f) {
        return e.clone();
    }
    let e = synth_uncached(f, memo);
    memo.insert(f, e.clone());
    e
}

thread_local! {
    static MEMO: RefCell<HashMap<u16, Expr>> = RefCell::new(HashMap::new());
}

/// A small AND/INV expression computing `f` over the variables of [`VAR_TT`].
pub(crate) fn resynthesize(f: u16) -> Expr {
    MEMO.with(|m| synth(f, &mut m.borrow_mut()))
}

/// Builds `e` with `leaves[i]` substituted for variable i.
pub(crate) fn build(b: &mut Builder, e: &Expr, leaves: &[Lit]) -> Lit {
    match e {
        Expr::Const(c) => Lit::FALSE.negate_if(*c),
        Expr::Leaf(i) => leaves[*i as usize],
        Expr::Not(x) => !build(b, x, leaves),
        Expr::And(x, y) => {
            let (p, q) = (build(b, x, leaves), build(b, y, leaves));
            b.and(p, q)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum DryLit {
    Real(Lit),
    Virtual(u32, bool),
}

impl DryLit {
    fn not(self) -> DryLit {
        match self {
            DryLit::Real(l) => DryLit::Real(!l),
            DryLit::Virtual(id, c) => DryLit::Virtual(id, !c),
        }
    }
}

struct DryRun<'a> {
    b: &'a Builder,
    virt_levels: Vec<u32>,
    seen: HashMap<(DryLit, DryLit), u32>,
}

impl DryRun<'_> {
    fn level(&self, l: DryLit) -> u32 {
        match l {
            DryLit::Real(l) => self.b.level(l),
            DryLit::Virtual(id, _) => self.virt_levels[id as usize],
        }
    }

    fn and(&mut self, x: DryLit, y: DryLit) -> DryLit {
        if let (DryLit::Real(p), DryLit::Real(q)) = (x, y) {
            match self.b.probe(p, q) {
                Probe::Existing(l) => return DryLit::Real(l),
                Probe::New { .. } => {}
            }
        }
        for (s, t) in [(x, y), (y, x)] {
            match s {
                DryLit::Real(Lit::FALSE) => return s,
                DryLit::Real(Lit::TRUE) => return t,
                _ => {}
            }
        }
        if x == y {
            return x;
        }
        if x == y.not() {
            return DryLit::Real(Lit::FALSE);
        }
        let key = if x <= y { (x, y) } else { (y, x) };
        if let Some(&id) = self.seen.get(&key) {
            return DryLit::Virtual(id, false);
        }
        let id = self.virt_levels.len() as u32;
        let level = 1 + self.level(x).max(self.level(y));
        self.virt_levels.push(level);
        self.seen.insert(key, id);
        DryLit::Virtual(id, false)
    }

    fn eval(&mut self, e: &Expr, leaves: &[Lit]) -> DryLit {
        match e {
            Expr::Const(c) => DryLit::Real(Lit::FALSE.negate_if(*c)),
            Expr::Leaf(i) => DryLit::Real(leaves[*i as usize]),
            Expr::Not(x) => self.eval(x, leaves).not(),
            Expr::And(x, y) => {
                let (p, q) = (self.eval(x, leaves), self.eval(y, leaves));
                self.and(p, q)
            }
        }
    }
}

/// Number of nodes `build` would add and the level of its result.
pub(crate) fn dry_run(b: &Builder, e: &Expr, leaves: &[Lit]) -> (usize, u32) {
    let mut d = DryRun {
        b,
        virt_levels: Vec::new(),
        seen: HashMap::new(),
    };
    let root = d.eval(e, leaves);
    (d.virt_levels.len(), d.level(root))
}
