//! The saturation engine: hash-consed term nodes, a union-find over them and
//! congruence closure of the function and relation tables.
//!
//! The state remembers what changed since the last call to
//! [`ChaseState::take_delta`], so that matching can be restricted to
//! matches touching something new.

use std::collections::{HashMap, HashSet};

use crate::structure::eval::{CAtom, CTerm};
use crate::structure::{Elem, Interpretation, PartialStructure};
use crate::syntax::{Context, Sequent, Theory};

pub(crate) type Node = usize;

/// A function table (rows are arguments followed by the value) or a
/// relation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum Table {
    Fn(usize),
    Rel(usize),
}

/// Rows of one table grouped by their values at `positions`. Rows made
/// stale by merges are skipped on lookup and dropped by compaction.
struct Index {
    table: Table,
    positions: Vec<usize>,
    rows: HashMap<Vec<Node>, Vec<Vec<Node>>>,
    len: usize,
}

impl Index {
    fn add(&mut self, row: &[Node]) {
        let key = self.positions.iter().map(|&p| row[p]).collect();
        self.rows.entry(key).or_default().push(row.to_vec());
        self.len += 1;
    }
}

/// Rows and nodes that appeared since the previous [`ChaseState::take_delta`].
#[derive(Default)]
pub(crate) struct Delta {
    pub rows: HashMap<Table, Vec<Vec<Node>>>,
    /// New classes, per sort index.
    pub nodes: Vec<Vec<Node>>,
}

pub(crate) struct ChaseState<'t> {
    theory: &'t Theory,
    fn_ids: HashMap<&'t str, usize>,
    fn_names: Vec<&'t str>,
    fn_result: Vec<usize>,
    rel_ids: HashMap<&'t str, usize>,
    rel_names: Vec<&'t str>,
    /// Sort index of each node.
    sort: Vec<usize>,
    parent: Vec<Node>,
    size: Vec<usize>,
    /// Least node of each class, kept at the root.
    least: Vec<Node>,
    by_sort: Vec<Vec<Node>>,
    funcs: Vec<HashMap<Vec<Node>, Node>>,
    rels: Vec<HashSet<Vec<Node>>>,
    /// Rows mentioning each class, possibly stale.
    uses: Vec<Vec<(Table, Vec<Node>)>>,
    /// Classes merged away whose uses still need repair.
    pending: Vec<Node>,
    indexes: Vec<Index>,
    new_rows: Vec<(Table, Vec<Node>)>,
    new_nodes: Vec<Node>,
}

/// A canonical picture of the state as a partial structure.
pub(crate) struct Snapshot {
    pub model: PartialStructure,
    /// Element of each node's class.
    pub elem_of: Vec<Elem>,
}

impl<'t> ChaseState<'t> {
    pub fn new(theory: &'t Theory) -> Self {
        let sig = &theory.signature;
        let sort_idx = |s| sig.sort_index(s).expect("declared sort");
        let fn_names: Vec<&str> = sig.functions().map(|(f, _)| f).collect();
        let fn_result = sig.functions().map(|(_, d)| sort_idx(&d.result)).collect();
        let rel_names: Vec<&str> = sig.relations().map(|(r, _)| r).collect();
        ChaseState {
            theory,
            fn_ids: fn_names.iter().enumerate().map(|(i, f)| (*f, i)).collect(),
            funcs: vec![HashMap::new(); fn_names.len()],
            fn_names,
            fn_result,
            rel_ids: rel_names.iter().enumerate().map(|(i, r)| (*r, i)).collect(),
            rels: vec![HashSet::new(); rel_names.len()],
            rel_names,
            sort: Vec::new(),
            parent: Vec::new(),
            size: Vec::new(),
            least: Vec::new(),
            by_sort: vec![Vec::new(); sig.sorts().len()],
            uses: Vec::new(),
            pending: Vec::new(),
            indexes: Vec::new(),
            new_rows: Vec::new(),
            new_nodes: Vec::new(),
        }
    }

    pub fn fn_id(&self, f: &str) -> usize {
        self.fn_ids[f]
    }

    pub fn rel_id(&self, r: &str) -> usize {
        self.rel_ids[r]
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn class_count(&self) -> usize {
        (0..self.parent.len()).filter(|&n| self.parent[n] == n).count()
    }

    pub fn fresh(&mut self, sort: usize) -> Node {
        let n = self.parent.len();
        self.sort.push(sort);
        self.parent.push(n);
        self.size.push(1);
        self.least.push(n);
        self.uses.push(Vec::new());
        self.by_sort[sort].push(n);
        self.new_nodes.push(n);
        n
    }

    /// Root of `n` without path compression.
    pub fn find(&self, mut n: Node) -> Node {
        while self.parent[n] != n {
            n = self.parent[n];
        }
        n
    }

    fn find_mut(&mut self, n: Node) -> Node {
        let root = self.find(n);
        let mut cur = n;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Least node in the class of `n`; classes of one sort are numbered in
    /// this order.
    pub fn least(&self, n: Node) -> Node {
        self.least[self.find(n)]
    }

    fn union(&mut self, a: Node, b: Node) {
        let (a, b) = (self.find_mut(a), self.find_mut(b));
        if a == b {
            return;
        }
        debug_assert_eq!(self.sort[a], self.sort[b], "equations are sort-checked at elaboration");
        let (big, small) = if self.size[a] >= self.size[b] { (a, b) } else { (b, a) };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.least[big] = self.least[big].min(self.least[small]);
        self.pending.push(small);
    }

    /// Records a row just added to its table.
    fn insert_row(&mut self, table: Table, row: Vec<Node>) {
        for ix in self.indexes.iter_mut().filter(|ix| ix.table == table) {
            ix.add(&row);
        }
        for (i, &n) in row.iter().enumerate() {
            if !row[..i].contains(&n) {
                self.uses[n].push((table, row.clone()));
            }
        }
        self.new_rows.push((table, row));
    }

    fn is_current(&self, table: Table, row: &[Node]) -> bool {
        match table {
            Table::Fn(f) => {
                let (args, v) = row.split_at(row.len() - 1);
                self.funcs[f].get(args) == Some(&v[0])
            }
            Table::Rel(r) => self.rels[r].contains(row),
        }
    }

    /// Restores canonical tables after merges: every row mentioning a merged
    /// class is rewritten, and function entries whose arguments now agree
    /// merge their values, until nothing changes. Rewritten rows count as new.
    pub fn rebuild(&mut self) {
        while let Some(c) = self.pending.pop() {
            for (table, row) in std::mem::take(&mut self.uses[c]) {
                match table {
                    Table::Fn(f) => {
                        let old_args = &row[..row.len() - 1];
                        let Some(w) = self.funcs[f].remove(old_args) else {
                            continue;
                        };
                        let args: Vec<Node> = old_args.iter().map(|&a| self.find_mut(a)).collect();
                        let v = self.find_mut(w);
                        match self.funcs[f].get(&args) {
                            Some(&u) => {
                                self.union(u, v);
                                let u = self.find_mut(u);
                                if u != self.funcs[f][&args] {
                                    self.set_value(f, args, u);
                                }
                            }
                            None => self.set_value(f, args, v),
                        }
                    }
                    Table::Rel(r) => {
                        if !self.rels[r].remove(&row) {
                            continue;
                        }
                        let args: Vec<Node> = row.iter().map(|&a| self.find_mut(a)).collect();
                        if self.rels[r].insert(args.clone()) {
                            self.insert_row(table, args);
                        }
                    }
                }
            }
        }
        for i in 0..self.indexes.len() {
            let table = self.indexes[i].table;
            let live = match table {
                Table::Fn(f) => self.funcs[f].len(),
                Table::Rel(r) => self.rels[r].len(),
            };
            if self.indexes[i].len > 2 * live + 16 {
                let rows: Vec<Vec<Node>> = self.rows(table).collect();
                let ix = &mut self.indexes[i];
                ix.rows.clear();
                ix.len = 0;
                for row in rows {
                    ix.add(&row);
                }
            }
        }
    }

    fn set_value(&mut self, f: usize, args: Vec<Node>, v: Node) {
        let mut row = args.clone();
        row.push(v);
        self.funcs[f].insert(args, v);
        self.insert_row(Table::Fn(f), row);
    }

    /// Current rows of `table`.
    pub fn rows(&self, table: Table) -> Box<dyn Iterator<Item = Vec<Node>> + '_> {
        match table {
            Table::Fn(f) => Box::new(self.funcs[f].iter().map(|(args, &v)| {
                let mut row = args.clone();
                row.push(v);
                row
            })),
            Table::Rel(r) => Box::new(self.rels[r].iter().cloned()),
        }
    }

    /// Registers an index of `table` on `positions`, returning its handle.
    pub fn index(&mut self, table: Table, positions: &[usize]) -> usize {
        if let Some(i) = self.indexes.iter().position(|ix| ix.table == table && ix.positions == positions) {
            return i;
        }
        let mut ix = Index {
            table,
            positions: positions.to_vec(),
            rows: HashMap::new(),
            len: 0,
        };
        for row in self.rows(table) {
            ix.add(&row);
        }
        self.indexes.push(ix);
        self.indexes.len() - 1
    }

    /// Rows of the indexed table whose values at the indexed positions are
    /// `key`; the state must be rebuilt.
    pub fn lookup<'s>(&'s self, index: usize, key: &[Node]) -> impl Iterator<Item = &'s Vec<Node>> + 's {
        let ix = &self.indexes[index];
        let rows = ix.rows.get(key).map_or(&[][..], |v| v.as_slice());
        rows.iter().filter(move |row| self.is_current(ix.table, row))
    }

    pub fn value(&self, f: usize, args: &[Node]) -> Option<Node> {
        self.funcs[f].get(args).copied()
    }

    pub fn has(&self, r: usize, args: &[Node]) -> bool {
        self.rels[r].contains(args)
    }

    /// Current classes of a sort.
    pub fn classes(&self, sort: usize) -> impl Iterator<Item = Node> + '_ {
        self.by_sort[sort].iter().copied().filter(|&n| self.parent[n] == n)
    }

    /// Everything new since the last call, restricted to rows and classes
    /// still present; the state must be rebuilt.
    pub fn take_delta(&mut self) -> Delta {
        let mut delta = Delta {
            rows: HashMap::new(),
            nodes: vec![Vec::new(); self.by_sort.len()],
        };
        let mut seen: HashSet<(Table, Vec<Node>)> = HashSet::new();
        for (table, row) in std::mem::take(&mut self.new_rows) {
            if self.is_current(table, &row) && seen.insert((table, row.clone())) {
                delta.rows.entry(table).or_default().push(row);
            }
        }
        for n in std::mem::take(&mut self.new_nodes) {
            if self.parent[n] == n {
                delta.nodes[self.sort[n]].push(n);
            }
        }
        delta
    }

    /// Node for `t` at `env`, creating application nodes as needed.
    fn ensure(&mut self, t: &CTerm, env: &[Node]) -> Node {
        match t {
            CTerm::Var(i) => self.find_mut(env[*i]),
            CTerm::App(f, args) => {
                let args: Vec<Node> = args.iter().map(|a| self.ensure(a, env)).collect();
                let args: Vec<Node> = args.into_iter().map(|a| self.find_mut(a)).collect();
                let fid = self.fn_ids[f];
                if let Some(&v) = self.funcs[fid].get(&args) {
                    return self.find_mut(v);
                }
                let v = self.fresh(self.fn_result[fid]);
                self.set_value(fid, args, v);
                v
            }
        }
    }

    /// Makes every atom true at `env`.
    pub fn enforce(&mut self, atoms: &[CAtom], env: &[Node]) {
        for a in atoms {
            match a {
                CAtom::Eq(l, r) => {
                    let x = self.ensure(l, env);
                    let y = self.ensure(r, env);
                    self.union(x, y);
                }
                CAtom::Rel(r, args) => {
                    let nodes: Vec<Node> = args.iter().map(|t| self.ensure(t, env)).collect();
                    let nodes: Vec<Node> = nodes.into_iter().map(|n| self.find_mut(n)).collect();
                    let rid = self.rel_ids[r];
                    if self.rels[rid].insert(nodes.clone()) {
                        self.insert_row(Table::Rel(rid), nodes);
                    }
                }
            }
        }
    }

    pub fn is_dirty(&self) -> bool {
        !self.pending.is_empty()
    }

    /// Whether every atom holds at `env`; the state must be rebuilt.
    pub fn holds_all(&self, atoms: &[CAtom], env: &[Node]) -> bool {
        let env: Vec<Node> = env.iter().map(|&n| self.find(n)).collect();
        atoms.iter().all(|a| a.holds(self, &env))
    }

    /// Elements numbered per sort by the least node of their class.
    pub fn snapshot(&self) -> Snapshot {
        let sig = &self.theory.signature;
        let mut model = PartialStructure::empty(sig.clone());
        let mut elem_of = vec![usize::MAX; self.parent.len()];
        let mut counts = vec![0; sig.sorts().len()];
        let mut root_elem: HashMap<Node, Elem> = HashMap::new();
        for n in 0..self.parent.len() {
            let r = self.find(n);
            let e = *root_elem.entry(r).or_insert_with(|| {
                counts[self.sort[n]] += 1;
                counts[self.sort[n]] - 1
            });
            elem_of[n] = e;
        }
        for (i, s) in sig.sorts().iter().enumerate() {
            model.set_carrier(s, counts[i]);
        }
        for (f, table) in self.funcs.iter().enumerate() {
            for (args, &v) in table {
                let args = args.iter().map(|&a| elem_of[a]).collect();
                model.insert_function(self.fn_names[f], args, elem_of[v]);
            }
        }
        for (r, table) in self.rels.iter().enumerate() {
            for args in table {
                model.insert_relation(self.rel_names[r], args.iter().map(|&a| elem_of[a]).collect());
            }
        }
        Snapshot { model, elem_of }
    }
}

impl Interpretation for ChaseState<'_> {
    fn apply(&self, f: &str, args: &[Elem]) -> Option<Elem> {
        let args: Vec<Node> = args.iter().map(|&a| self.find(a)).collect();
        self.funcs[*self.fn_ids.get(f)?].get(&args).map(|&v| self.find(v))
    }

    fn holds(&self, r: &str, args: &[Elem]) -> bool {
        let Some(&rid) = self.rel_ids.get(r) else {
            return false;
        };
        let args: Vec<Node> = args.iter().map(|&a| self.find(a)).collect();
        self.rels[rid].contains(&args)
    }
}

/// An axiom with its atoms compiled against its own context.
pub(crate) struct CompiledAxiom<'a> {
    pub conclusion: Vec<CAtom<'a>>,
}

impl<'a> CompiledAxiom<'a> {
    pub fn new(sequent: &'a Sequent) -> Self {
        CompiledAxiom {
            conclusion: compile_atoms(&sequent.context, &sequent.conclusion.atoms),
        }
    }
}

pub(crate) fn compile_atoms<'a>(ctx: &Context, atoms: &'a [crate::syntax::Atom]) -> Vec<CAtom<'a>> {
    atoms.iter().map(|a| CAtom::compile(ctx, a)).collect()
}
