use super::AutodiffError;

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(u32);

impl Var {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A run of consecutively created nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarRange {
    start: u32,
    len: u32,
}

impl VarRange {
    /// Nodes `start..start + len`; callers guarantee they were created
    /// consecutively.
    pub(crate) fn new(start: usize, len: usize) -> Self {
        Self {
            start: start as u32,
            len: len as u32,
        }
    }

    #[inline]
    pub fn len(self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(self, i: usize) -> Var {
        debug_assert!(i < self.len as usize);
        Var(self.start + i as u32)
    }

    /// Sub-range `[offset, offset + len)`.
    #[inline]
    pub fn slice(self, offset: usize, len: usize) -> VarRange {
        debug_assert!(offset + len <= self.len as usize);
        VarRange {
            start: self.start + offset as u32,
            len: len as u32,
        }
    }

    pub fn iter(self) -> impl Iterator<Item = Var> {
        (self.start..self.start + self.len).map(Var)
    }
}

/// Operation tag recorded for each node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Leaf,
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Tanh,
    Square,
    Scale,
    Sum,
    /// `Σ w_j x_j (+ bias)` over two contiguous ranges; index into the dot
    /// table.
    Dot(u32),
    /// Node with caller-supplied local partials.
    Custom,
}

#[derive(Clone, Copy, Debug)]
struct DotRecord {
    w: u32,
    x: u32,
    len: u32,
}

/// Reverse-mode tape of scalar nodes in creation (topological) order.
///
/// Each node stores its value, an [`Op`] tag and the local partials with
/// respect to its parents. Parents always have a smaller index than the
/// child. [`Op::Dot`] nodes do not store per-term partials: the partial with
/// respect to `w_j` is the value of `x_j` and vice versa, read back from the
/// tape during the reverse sweep.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    values: Vec<f64>,
    ops: Vec<Op>,
    edge_end: Vec<u32>,
    parents: Vec<u32>,
    partials: Vec<f64>,
    dots: Vec<DotRecord>,
    leaves: Vec<u32>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize, edges: usize) -> Self {
        Self {
            values: Vec::with_capacity(nodes),
            ops: Vec::with_capacity(nodes),
            edge_end: Vec::with_capacity(nodes),
            parents: Vec::with_capacity(edges),
            partials: Vec::with_capacity(edges),
            dots: Vec::new(),
            leaves: Vec::new(),
        }
    }

    /// Drops all nodes, keeping allocations.
    pub fn clear(&mut self) {
        self.values.clear();
        self.ops.clear();
        self.edge_end.clear();
        self.parents.clear();
        self.partials.clear();
        self.dots.clear();
        self.leaves.clear();
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn num_edges(&self) -> usize {
        self.parents.len()
    }

    #[inline]
    pub fn value(&self, v: Var) -> f64 {
        self.values[v.index()]
    }

    pub fn values(&self, r: VarRange) -> &[f64] {
        &self.values[r.start as usize..(r.start + r.len) as usize]
    }

    pub fn op(&self, v: Var) -> Op {
        self.ops[v.index()]
    }

    /// Local partials `(parent, ∂node/∂parent)` recorded for `v`. Dot nodes
    /// report their implicit per-term partials as well.
    pub fn local_partials(&self, v: Var) -> Vec<(Var, f64)> {
        let i = v.index();
        let mut out: Vec<(Var, f64)> = self
            .edge_range(i)
            .map(|k| (Var(self.parents[k]), self.partials[k]))
            .collect();
        if let Op::Dot(rec) = self.ops[i] {
            let d = self.dots[rec as usize];
            for j in 0..d.len {
                out.push((Var(d.w + j), self.values[(d.x + j) as usize]));
                out.push((Var(d.x + j), self.values[(d.w + j) as usize]));
            }
        }
        out
    }

    /// Registered leaves in registration order.
    pub fn leaves(&self) -> impl Iterator<Item = Var> + '_ {
        self.leaves.iter().map(|&i| Var(i))
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves.len()
    }

    #[inline]
    fn edge_range(&self, i: usize) -> std::ops::Range<usize> {
        let start = if i == 0 { 0 } else { self.edge_end[i - 1] as usize };
        start..self.edge_end[i] as usize
    }

    #[inline]
    fn push(&mut self, op: Op, value: f64, edges: &[(Var, f64)]) -> Var {
        debug_assert!(value.is_finite(), "non-finite value recorded for {op:?}");
        let id = self.values.len();
        for &(p, d) in edges {
            debug_assert!(p.index() < id);
            self.parents.push(p.0);
            self.partials.push(d);
        }
        self.values.push(value);
        self.ops.push(op);
        self.edge_end.push(self.parents.len() as u32);
        Var(id as u32)
    }

    /// Registers a differentiable input.
    pub fn leaf(&mut self, value: f64) -> Var {
        let v = self.push(Op::Leaf, value, &[]);
        self.leaves.push(v.0);
        v
    }

    /// Registers `values.len()` consecutive leaves.
    pub fn leaves_from(&mut self, values: &[f64]) -> VarRange {
        let start = self.values.len() as u32;
        for &x in values {
            self.leaf(x);
        }
        VarRange {
            start,
            len: values.len() as u32,
        }
    }

    pub fn constant(&mut self, value: f64) -> Var {
        self.push(Op::Const, value, &[])
    }

    pub fn constants_from(&mut self, values: &[f64]) -> VarRange {
        let start = self.values.len() as u32;
        for &x in values {
            self.constant(x);
        }
        VarRange {
            start,
            len: values.len() as u32,
        }
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(Op::Add, v, &[(a, 1.0), (b, 1.0)])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) - self.value(b);
        self.push(Op::Sub, v, &[(a, 1.0), (b, -1.0)])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        self.push(Op::Mul, x * y, &[(a, y), (b, x)])
    }

    pub fn div(&mut self, a: Var, b: Var) -> Result<Var, AutodiffError> {
        let (x, y) = (self.value(a), self.value(b));
        if y == 0.0 {
            return Err(AutodiffError::DivisionByZero { node: b.index() });
        }
        Ok(self.push(Op::Div, x / y, &[(a, 1.0 / y), (b, -x / (y * y))]))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let t = self.value(a).tanh();
        self.push(Op::Tanh, t, &[(a, 1.0 - t * t)])
    }

    pub fn square(&mut self, a: Var) -> Var {
        let x = self.value(a);
        self.push(Op::Square, x * x, &[(a, 2.0 * x)])
    }

    /// `k · a` for a constant `k`.
    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let x = self.value(a);
        self.push(Op::Scale, k * x, &[(a, k)])
    }

    /// Weighted sum `Σ k_i a_i` with constant weights.
    pub fn linear_combination(&mut self, terms: &[(Var, f64)]) -> Var {
        let v = terms.iter().map(|&(a, k)| k * self.value(a)).sum();
        self.push(Op::Sum, v, terms)
    }

    pub fn sum(&mut self, terms: &[Var]) -> Var {
        let edges: Vec<(Var, f64)> = terms.iter().map(|&a| (a, 1.0)).collect();
        self.linear_combination(&edges)
    }

    /// `Σ_j w_j x_j (+ bias)` where `w` and `x` are contiguous ranges of the
    /// same length.
    pub fn dot(&mut self, w: VarRange, x: VarRange, bias: Option<Var>) -> Var {
        assert_eq!(w.len, x.len, "dot operands differ in length");
        let ws = &self.values[w.start as usize..(w.start + w.len) as usize];
        let xs = &self.values[x.start as usize..(x.start + x.len) as usize];
        let mut v: f64 = ws.iter().zip(xs).map(|(a, b)| a * b).sum();
        let rec = self.dots.len() as u32;
        self.dots.push(DotRecord {
            w: w.start,
            x: x.start,
            len: w.len,
        });
        match bias {
            Some(b) => {
                v += self.value(b);
                self.push(Op::Dot(rec), v, &[(b, 1.0)])
            }
            None => self.push(Op::Dot(rec), v, &[]),
        }
    }

    /// Records a node with explicit value and local partials. The caller is
    /// responsible for the partials being correct.
    pub fn custom(&mut self, value: f64, edges: &[(Var, f64)]) -> Var {
        self.push(Op::Custom, value, edges)
    }

    /// Adjoints `∂output/∂node` for every node up to `output`.
    pub fn adjoints(&self, output: Var) -> Vec<f64> {
        let mut adj = Vec::new();
        self.adjoints_into(output, &mut adj);
        adj
    }

    /// Reverse sweep into a caller-owned buffer, visiting each node at or
    /// below `output` once.
    pub fn adjoints_into(&self, output: Var, adj: &mut Vec<f64>) {
        let out = output.index();
        adj.clear();
        adj.resize(out + 1, 0.0);
        adj[out] = 1.0;
        for i in (0..=out).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            for k in self.edge_range(i) {
                adj[self.parents[k] as usize] += self.partials[k] * a;
            }
            if let Op::Dot(rec) = self.ops[i] {
                let d = self.dots[rec as usize];
                let (w, x, n) = (d.w as usize, d.x as usize, d.len as usize);
                let (xs, ws) = (&self.values[x..x + n], &self.values[w..w + n]);
                for (g, v) in adj[w..w + n].iter_mut().zip(xs) {
                    *g += a * v;
                }
                for (g, v) in adj[x..x + n].iter_mut().zip(ws) {
                    *g += a * v;
                }
            }
        }
    }

    /// `∂output/∂leaf` for every registered leaf, in registration order.
    /// Leaves created after `output` get zero.
    pub fn backward(&self, output: Var) -> Vec<f64> {
        let adj = self.adjoints(output);
        self.leaves
            .iter()
            .map(|&l| adj.get(l as usize).copied().unwrap_or(0.0))
            .collect()
    }

    /// Gradient with respect to a contiguous range of leaves, reusing `adj`
    /// as scratch.
    pub fn gradient_over(&self, output: Var, wrt: VarRange, adj: &mut Vec<f64>, out: &mut [f64]) {
        assert_eq!(out.len(), wrt.len());
        self.adjoints_into(output, adj);
        for (j, o) in out.iter_mut().enumerate() {
            *o = adj.get(wrt.start as usize + j).copied().unwrap_or(0.0);
        }
    }
}
