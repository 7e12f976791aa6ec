use std::collections::HashMap;
use std::sync::Arc;

use crate::C64;

use super::expr::{Expr, Node};
use super::tape::{Instr, Tape};
use super::{DerivIndex, Wirt};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
enum PNode {
    Const(u64, u64),
    Var(u32),
    ConjVar(u32),
    Sum(Vec<NodeId>),
    Product(Vec<NodeId>),
    Pow(NodeId, i32),
    Log(NodeId),
    Conj(NodeId),
}

/// Hash-consed expression store with memoized Wirtinger differentiation.
///
/// Node ids are allocated after their children, so id order is a
/// topological order; [`Tape`] compilation relies on this.
#[derive(Default)]
pub struct ExprPool {
    nodes: Vec<PNode>,
    /// Holomorphic / antiholomorphic variable dependence bitmasks.
    deps: Vec<(u64, u64)>,
    lookup: HashMap<PNode, NodeId>,
    imported: HashMap<*const Node, NodeId>,
    // keeps imported Arcs alive so their addresses stay unique
    pinned: Vec<Expr>,
    diff_memo: HashMap<(NodeId, Wirt), NodeId>,
    exported: HashMap<NodeId, Expr>,
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn key(c: C64) -> PNode {
    // normalise -0.0 so that 0 and -0 intern to the same node
    let re = if c.re == 0.0 { 0.0 } else { c.re };
    let im = if c.im == 0.0 { 0.0 } else { c.im };
    PNode::Const(re.to_bits(), im.to_bits())
}

impl ExprPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn insert(&mut self, node: PNode) -> NodeId {
        if let Some(&id) = self.lookup.get(&node) {
            return id;
        }
        let deps = match &node {
            PNode::Const(..) => (0, 0),
            PNode::Var(i) => (1u64 << i, 0),
            PNode::ConjVar(i) => (0, 1u64 << i),
            PNode::Sum(xs) | PNode::Product(xs) => xs.iter().fold((0, 0), |acc, x| {
                let d = self.deps[x.idx()];
                (acc.0 | d.0, acc.1 | d.1)
            }),
            PNode::Pow(x, _) | PNode::Log(x) => self.deps[x.idx()],
            PNode::Conj(x) => {
                let d = self.deps[x.idx()];
                (d.1, d.0)
            }
        };
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(node.clone());
        self.deps.push(deps);
        self.lookup.insert(node, id);
        id
    }

    fn const_of(&self, id: NodeId) -> Option<C64> {
        match self.nodes[id.idx()] {
            PNode::Const(re, im) => Some(C64::new(f64::from_bits(re), f64::from_bits(im))),
            _ => None,
        }
    }

    pub fn constant(&mut self, c: C64) -> NodeId {
        self.insert(key(c))
    }

    pub fn zero(&mut self) -> NodeId {
        self.constant(ZERO)
    }

    pub fn one(&mut self) -> NodeId {
        self.constant(ONE)
    }

    pub fn var(&mut self, i: usize) -> NodeId {
        assert!(i < 64, "at most 64 variables are supported");
        self.insert(PNode::Var(i as u32))
    }

    pub fn conj_var(&mut self, i: usize) -> NodeId {
        assert!(i < 64, "at most 64 variables are supported");
        self.insert(PNode::ConjVar(i as u32))
    }

    pub fn sum(&mut self, terms: &[NodeId]) -> NodeId {
        let mut flat = Vec::with_capacity(terms.len());
        let mut acc = ZERO;
        for &t in terms {
            if let Some(c) = self.const_of(t) {
                acc += c;
                continue;
            }
            match &self.nodes[t.idx()] {
                PNode::Sum(inner) => {
                    for &s in inner {
                        match self.const_of(s) {
                            Some(c) => acc += c,
                            None => flat.push(s),
                        }
                    }
                }
                _ => flat.push(t),
            }
        }
        flat.sort_unstable();
        if acc != ZERO {
            let c = self.constant(acc);
            flat.insert(0, c);
        }
        match flat.len() {
            0 => self.zero(),
            1 => flat[0],
            _ => self.insert(PNode::Sum(flat)),
        }
    }

    pub fn product(&mut self, factors: &[NodeId]) -> NodeId {
        let mut flat = Vec::with_capacity(factors.len());
        let mut acc = ONE;
        for &f in factors {
            if let Some(c) = self.const_of(f) {
                acc *= c;
                continue;
            }
            match &self.nodes[f.idx()] {
                PNode::Product(inner) => {
                    for &s in inner {
                        match self.const_of(s) {
                            Some(c) => acc *= c,
                            None => flat.push(s),
                        }
                    }
                }
                _ => flat.push(f),
            }
        }
        if acc == ZERO {
            return self.zero();
        }
        flat.sort_unstable();
        if acc != ONE {
            let c = self.constant(acc);
            flat.insert(0, c);
        }
        match flat.len() {
            0 => self.one(),
            1 => flat[0],
            _ => self.insert(PNode::Product(flat)),
        }
    }

    pub fn powi(&mut self, base: NodeId, k: i32) -> NodeId {
        if k == 0 {
            return self.one();
        }
        if k == 1 {
            return base;
        }
        if let Some(c) = self.const_of(base) {
            if c != ZERO || k > 0 {
                return self.constant(c.powi(k));
            }
        }
        if let PNode::Pow(inner, j) = self.nodes[base.idx()] {
            return self.powi(inner, j * k);
        }
        self.insert(PNode::Pow(base, k))
    }

    pub fn ln(&mut self, arg: NodeId) -> NodeId {
        if let Some(c) = self.const_of(arg) {
            if c.re > 0.0 && c.im == 0.0 {
                return self.constant(C64::new(c.re.ln(), 0.0));
            }
        }
        self.insert(PNode::Log(arg))
    }

    pub fn conj(&mut self, arg: NodeId) -> NodeId {
        if let Some(c) = self.const_of(arg) {
            return self.constant(c.conj());
        }
        match self.nodes[arg.idx()] {
            PNode::Var(i) => self.insert(PNode::ConjVar(i)),
            PNode::ConjVar(i) => self.insert(PNode::Var(i)),
            PNode::Conj(inner) => inner,
            _ => self.insert(PNode::Conj(arg)),
        }
    }

    /// Interns an expression tree, preserving its sharing.
    pub fn import(&mut self, e: &Expr) -> NodeId {
        let ptr = Arc::as_ptr(&e.0);
        if let Some(&id) = self.imported.get(&ptr) {
            return id;
        }
        let id = match e.node() {
            Node::Const(c) => self.constant(*c),
            Node::Var(i) => self.var(*i),
            Node::ConjVar(i) => self.conj_var(*i),
            Node::Sum(xs) => {
                let ids: Vec<_> = xs.iter().map(|x| self.import(x)).collect();
                self.sum(&ids)
            }
            Node::Product(xs) => {
                let ids: Vec<_> = xs.iter().map(|x| self.import(x)).collect();
                self.product(&ids)
            }
            Node::Pow(x, k) => {
                let b = self.import(x);
                self.powi(b, *k)
            }
            Node::Log(x) => {
                let a = self.import(x);
                self.ln(a)
            }
            Node::Conj(x) => {
                let a = self.import(x);
                self.conj(a)
            }
        };
        self.imported.insert(ptr, id);
        self.pinned.push(e.clone());
        id
    }

    /// Rebuilds an [`Expr`] tree for a pooled node; shared nodes stay shared.
    pub fn export(&mut self, id: NodeId) -> Expr {
        if let Some(e) = self.exported.get(&id) {
            return e.clone();
        }
        let e = match self.nodes[id.idx()].clone() {
            PNode::Const(re, im) => Expr::constant(C64::new(f64::from_bits(re), f64::from_bits(im))),
            PNode::Var(i) => Expr::var(i as usize),
            PNode::ConjVar(i) => Expr::conj_var(i as usize),
            PNode::Sum(xs) => {
                let parts: Vec<_> = xs.into_iter().map(|x| self.export(x)).collect();
                Expr::sum(parts)
            }
            PNode::Product(xs) => {
                let parts: Vec<_> = xs.into_iter().map(|x| self.export(x)).collect();
                Expr::product(parts)
            }
            PNode::Pow(x, k) => self.export(x).powi(k),
            PNode::Log(x) => self.export(x).ln(),
            PNode::Conj(x) => self.export(x).conj(),
        };
        self.exported.insert(id, e.clone());
        e
    }

    fn depends_on(&self, id: NodeId, w: Wirt) -> bool {
        let (holo, anti) = self.deps[id.idx()];
        match w {
            Wirt::Holo(i) => holo & (1u64 << i) != 0,
            Wirt::Anti(i) => anti & (1u64 << i) != 0,
        }
    }

    /// First-order Wirtinger derivative.
    pub fn diff(&mut self, id: NodeId, w: Wirt) -> NodeId {
        if !self.depends_on(id, w) {
            return self.zero();
        }
        if let Some(&d) = self.diff_memo.get(&(id, w)) {
            return d;
        }
        let d = match self.nodes[id.idx()].clone() {
            PNode::Const(..) => self.zero(),
            // dependence mask already guarantees the index matches
            PNode::Var(_) | PNode::ConjVar(_) => self.one(),
            PNode::Sum(xs) => {
                let parts: Vec<_> = xs.iter().map(|&x| self.diff(x, w)).collect();
                self.sum(&parts)
            }
            PNode::Product(xs) => {
                let mut terms = Vec::with_capacity(xs.len());
                for (i, &x) in xs.iter().enumerate() {
                    if !self.depends_on(x, w) {
                        continue;
                    }
                    let dx = self.diff(x, w);
                    let mut factors: Vec<NodeId> = xs
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, &f)| f)
                        .collect();
                    factors.push(dx);
                    terms.push(self.product(&factors));
                }
                self.sum(&terms)
            }
            PNode::Pow(x, k) => {
                let dx = self.diff(x, w);
                let lower = self.powi(x, k - 1);
                let kc = self.constant(C64::new(k as f64, 0.0));
                self.product(&[kc, lower, dx])
            }
            PNode::Log(x) => {
                let dx = self.diff(x, w);
                let inv = self.powi(x, -1);
                self.product(&[dx, inv])
            }
            PNode::Conj(x) => {
                let dx = self.diff(x, w.flipped());
                self.conj(dx)
            }
        };
        self.diff_memo.insert((id, w), d);
        d
    }

    /// Mixed partial along a [`DerivIndex`], applied in canonical order.
    pub fn derivative(&mut self, id: NodeId, d: &DerivIndex) -> NodeId {
        d.ops().fold(id, |acc, w| self.diff(acc, w))
    }

    /// Compiles the sub-DAG reachable from `roots` into an evaluation tape.
    pub fn compile(&self, roots: &[NodeId]) -> Tape {
        let mut reach = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = roots.to_vec();
        while let Some(id) = stack.pop() {
            if reach[id.idx()] {
                continue;
            }
            reach[id.idx()] = true;
            match &self.nodes[id.idx()] {
                PNode::Sum(xs) | PNode::Product(xs) => stack.extend(xs.iter().copied()),
                PNode::Pow(x, _) | PNode::Log(x) | PNode::Conj(x) => stack.push(*x),
                _ => {}
            }
        }
        let mut slot = vec![u32::MAX; self.nodes.len()];
        let mut instrs = Vec::new();
        let mut args = Vec::new();
        let mut labels = Vec::new();
        let mut max_var = 0usize;
        for (i, node) in self.nodes.iter().enumerate() {
            if !reach[i] {
                continue;
            }
            slot[i] = instrs.len() as u32;
            let instr = match node {
                PNode::Const(re, im) => Instr::Const(C64::new(f64::from_bits(*re), f64::from_bits(*im))),
                PNode::Var(v) => {
                    max_var = max_var.max(*v as usize + 1);
                    Instr::Var(*v)
                }
                PNode::ConjVar(v) => {
                    max_var = max_var.max(*v as usize + 1);
                    Instr::ConjVar(*v)
                }
                PNode::Sum(xs) | PNode::Product(xs) => {
                    let start = args.len() as u32;
                    args.extend(xs.iter().map(|x| slot[x.idx()]));
                    let end = args.len() as u32;
                    if matches!(node, PNode::Sum(_)) {
                        Instr::Sum(start, end)
                    } else {
                        Instr::Product(start, end)
                    }
                }
                PNode::Pow(x, k) => {
                    labels.push((instrs.len() as u32, NodeId(i as u32)));
                    Instr::Pow(slot[x.idx()], *k)
                }
                PNode::Log(x) => {
                    labels.push((instrs.len() as u32, NodeId(i as u32)));
                    Instr::Log(slot[x.idx()])
                }
                PNode::Conj(x) => Instr::Conj(slot[x.idx()]),
            };
            instrs.push(instr);
        }
        let outputs = roots.iter().map(|r| slot[r.idx()]).collect();
        let labels = labels.into_iter().map(|(s, id)| (s, self.render(id, 240))).collect();
        Tape::new(instrs, args, outputs, max_var, labels)
    }

    fn render(&self, id: NodeId, limit: usize) -> String {
        use std::fmt::Write;
        fn go(p: &ExprPool, id: NodeId, out: &mut String, limit: usize) {
            if out.len() > limit {
                if !out.ends_with('…') {
                    out.push('…');
                }
                return;
            }
            match &p.nodes[id.idx()] {
                PNode::Const(re, im) => {
                    let c = C64::new(f64::from_bits(*re), f64::from_bits(*im));
                    if c.im == 0.0 {
                        let _ = write!(out, "{}", c.re);
                    } else {
                        let _ = write!(out, "({} + {}*i)", c.re, c.im);
                    }
                }
                PNode::Var(i) => {
                    let _ = write!(out, "w{}", i + 1);
                }
                PNode::ConjVar(i) => {
                    let _ = write!(out, "conj(w{})", i + 1);
                }
                PNode::Sum(xs) | PNode::Product(xs) => {
                    let sep = if matches!(p.nodes[id.idx()], PNode::Sum(_)) {
                        " + "
                    } else {
                        "*"
                    };
                    out.push('(');
                    for (k, x) in xs.iter().enumerate() {
                        if k > 0 {
                            out.push_str(sep);
                        }
                        go(p, *x, out, limit);
                    }
                    out.push(')');
                }
                PNode::Pow(x, k) => {
                    out.push_str("pow(");
                    go(p, *x, out, limit);
                    let _ = write!(out, ", {k})");
                }
                PNode::Log(x) => {
                    out.push_str("log(");
                    go(p, *x, out, limit);
                    out.push(')');
                }
                PNode::Conj(x) => {
                    out.push_str("conj(");
                    go(p, *x, out, limit);
                    out.push(')');
                }
            }
        }
        let mut out = String::new();
        go(self, id, &mut out, limit);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_consing_shares_nodes() {
        let mut p = ExprPool::new();
        let a = p.var(0);
        let b = p.conj_var(0);
        let x = p.product(&[a, b]);
        let y = p.product(&[b, a]);
        assert_eq!(x, y);
        let n = p.len();
        let _ = p.product(&[a, b]);
        assert_eq!(p.len(), n);
    }

    #[test]
    fn product_rule_on_abs_sq() {
        let mut p = ExprPool::new();
        let e = p.import(&Expr::abs_sq(0));
        let d = p.diff(e, Wirt::Holo(0));
        let expect = p.conj_var(0);
        assert_eq!(d, expect);
        let dd = p.diff(d, Wirt::Anti(0));
        assert_eq!(p.const_of(dd), Some(ONE));
    }

    #[test]
    fn conj_node_rule() {
        // d/dw conj(w^2 * conj(w)) = conj(d/dconj(w) [w^2 conj(w)]) = conj(w^2) = conj(w)^2
        let mut p = ExprPool::new();
        let w = Expr::var(0);
        let inner = Expr::product([w.powi(2), Expr::conj_var(0)]);
        let e = inner.conj();
        let id = p.import(&e);
        let d = p.diff(id, Wirt::Holo(0));
        let t = p.compile(&[d]);
        let z = C64::new(0.3, -0.8);
        let v = t.eval_one(&[z]).unwrap();
        assert!((v - z.conj() * z.conj()).norm() < 1e-14);
    }

    #[test]
    fn roundtrip_export() {
        let mut p = ExprPool::new();
        let e = (Expr::one() + Expr::abs_sq(0)).ln();
        let id = p.import(&e);
        let d = p.derivative(id, &DerivIndex::new(vec![0], vec![0]).unwrap());
        let back = p.export(d);
        let z = [C64::new(0.2, 0.1)];
        let direct = back.eval(&z).unwrap();
        let taped = p.compile(&[d]).eval_one(&z).unwrap();
        assert!((direct - taped).norm() < 1e-15);
    }
}
