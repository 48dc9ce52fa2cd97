//! Local two-level rewriting.

use crate::network::{Builder, Lit, Network};

struct Ctx<'a> {
    net: &'a Network,
    refs: Vec<u32>,
    map: Vec<Lit>,
    zero_gain: bool,
}

impl Ctx<'_> {
    fn m(&self, l: Lit) -> Lit {
        self.map[l.var() as usize].negate_if(l.is_complemented())
    }

    /// Mapped fan-ins of the AND behind `l`, if any.
    fn dec(&self, l: Lit) -> Option<(Lit, Lit)> {
        if self.net.is_and(l.var()) {
            let [a, b] = self.net.fanins(l.var());
            Some((self.m(a), self.m(b)))
        } else {
            None
        }
    }

    fn single(&self, l: Lit) -> bool {
        self.refs[l.var() as usize] == 1
    }

    fn rules(&self, b: &mut Builder, x: Lit, y: Lit) -> Option<Lit> {
        for (s, t) in [(x, y), (y, x)] {
            let (ms, mt) = (self.m(s), self.m(t));
            let Some((a1, a2)) = self.dec(s) else { continue };
            let t_and = self.dec(t).filter(|_| !t.is_complemented());
            if !s.is_complemented() {
                if mt == a1 || mt == a2 {
                    return Some(ms);
                }
                if mt == !a1 || mt == !a2 {
                    return Some(Lit::FALSE);
                }
                if let Some((c1, c2)) = t_and {
                    if [c1, c2].iter().any(|&c| c == !a1 || c == !a2) {
                        return Some(Lit::FALSE);
                    }
                    if [c1, c2].iter().all(|&c| c == a1 || c == a2) {
                        return Some(ms);
                    }
                }
            } else {
                // s = !(a1 & a2)
                if mt == !a1 || mt == !a2 {
                    return Some(mt);
                }
                if let Some((c1, c2)) = t_and {
                    if [c1, c2].iter().any(|&c| c == !a1 || c == !a2) {
                        return Some(mt);
                    }
                }
                if self.zero_gain || self.single(s) {
                    if mt == a1 {
                        return Some(b.and(a1, !a2));
                    }
                    if mt == a2 {
                        return Some(b.and(a2, !a1));
                    }
                }
            }
        }
        self.share(b, x, y)
    }

    /// (a & b) & (a & d) -> (a & b) & d when one side can be dropped.
    fn share(&self, b: &mut Builder, x: Lit, y: Lit) -> Option<Lit> {
        if x.is_complemented() || y.is_complemented() {
            return None;
        }
        let ((a1, a2), (c1, c2)) = (self.dec(x)?, self.dec(y)?);
        let other = |p: Lit, q: Lit, r1: Lit, r2: Lit| -> Option<Lit> {
            if p == r1 || p == r2 {
                Some(q)
            } else if q == r1 || q == r2 {
                Some(p)
            } else {
                None
            }
        };
        let y_rest = other(c1, c2, a1, a2)?;
        let x_rest = other(a1, a2, c1, c2)?;
        if self.single(y) || (self.zero_gain && !self.single(x)) {
            Some(b.and(self.m(x), y_rest))
        } else if self.single(x) {
            Some(b.and(self.m(y), x_rest))
        } else {
            None
        }
    }
}

pub(crate) fn sweep(net: &Network, zero_gain: bool) -> Network {
    let mut ctx = Ctx {
        net,
        refs: net.refs(),
        map: (0..net.num_vars() as u32).map(|v| Lit::new(v, false)).collect(),
        zero_gain,
    };
    let mut b = Builder::new(net.num_inputs());
    for v in net.and_vars() {
        let [x, y] = net.fanins(v);
        let lit = match ctx.rules(&mut b, x, y) {
            Some(l) => l,
            None => b.and(ctx.m(x), ctx.m(y)),
        };
        ctx.map[v as usize] = lit;
    }
    let outputs = net.outputs().iter().map(|&o| ctx.m(o)).collect();
    b.finish(outputs)
}
