//! Premises as conjunctive queries over the chase tables.
//!
//! Every application in a premise gets a variable of its own, so a premise
//! becomes a conjunction of table rows and equations between variables.
//! Between scans, a match that uses only old rows and old classes was
//! already a match at the previous scan, so later scans start from each new
//! row (or new class, for variables no row mentions) in turn.

use std::collections::HashSet;

use super::state::{ChaseState, Delta, Node, Table};
use crate::structure::eval::{CAtom, CTerm};
use crate::syntax::Sequent;

enum QAtom {
    /// A row of `table`; for functions the last variable is the value.
    Row(Table, Vec<usize>),
    Eq(usize, usize),
}

/// Binds the unbound variables of a row and checks the repeated ones.
#[derive(Clone, Default)]
struct RowBinding {
    bind: Vec<(usize, usize)>,
    check: Vec<(usize, usize)>,
}

impl RowBinding {
    fn new(vars: &[usize], bound: &mut [bool], skip: &[usize]) -> Self {
        let mut b = RowBinding::default();
        for (pos, &v) in vars.iter().enumerate() {
            if skip.contains(&pos) {
                continue;
            }
            if bound[v] {
                b.check.push((pos, v));
            } else {
                bound[v] = true;
                b.bind.push((pos, v));
            }
        }
        b
    }

    fn apply(&self, row: &[Node], env: &mut [Node]) -> bool {
        for &(pos, v) in &self.bind {
            env[v] = row[pos];
        }
        self.check.iter().all(|&(pos, v)| env[v] == row[pos])
    }
}

enum Step {
    /// Rows of an index whose key positions agree with `key`.
    Scan {
        index: usize,
        key: Vec<usize>,
        rows: RowBinding,
    },
    /// A function at bound arguments; binds or checks the value.
    Value {
        f: usize,
        args: Vec<usize>,
        res: usize,
        bind: bool,
    },
    Has {
        r: usize,
        args: Vec<usize>,
    },
    /// `a` is bound; binds or checks `b`.
    Eq {
        a: usize,
        b: usize,
        bind: bool,
    },
    Domain {
        var: usize,
        sort: usize,
    },
}

enum Start {
    Everything,
    Row(Table, RowBinding),
    Class(usize, usize),
}

struct Plan {
    start: Start,
    steps: Vec<Step>,
}

pub(crate) struct Matcher {
    arity: usize,
    vars: usize,
    full: Plan,
    pivots: Vec<Plan>,
}

impl Matcher {
    pub fn new(st: &mut ChaseState, sequent: &Sequent, sort_index: impl Fn(&crate::syntax::Sort) -> usize) -> Self {
        let ctx = &sequent.context;
        let sorts: Vec<usize> = ctx.sorts().map(&sort_index).collect();
        let arity = sorts.len();
        let mut vars = arity;
        let mut atoms = Vec::new();
        for a in &sequent.premise.atoms {
            match CAtom::compile(ctx, a) {
                CAtom::Eq(l, r) => {
                    let l = flatten(st, &l, &mut vars, &mut atoms);
                    let r = flatten(st, &r, &mut vars, &mut atoms);
                    atoms.push(QAtom::Eq(l, r));
                }
                CAtom::Rel(r, args) => {
                    let args = args.iter().map(|t| flatten(st, t, &mut vars, &mut atoms)).collect();
                    atoms.push(QAtom::Row(Table::Rel(st.rel_id(r)), args));
                }
            }
        }

        // Variables reached from some row through equations.
        let mut covered = vec![false; vars];
        for a in &atoms {
            if let QAtom::Row(_, vs) = a {
                for &v in vs {
                    covered[v] = true;
                }
            }
        }
        loop {
            let mut changed = false;
            for a in &atoms {
                if let QAtom::Eq(x, y) = *a {
                    if covered[x] != covered[y] {
                        covered[x] = true;
                        covered[y] = true;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let full = plan(st, &atoms, &sorts, Start::Everything, vec![false; vars], None);
        let mut pivots = Vec::new();
        for (i, a) in atoms.iter().enumerate() {
            if let QAtom::Row(table, vs) = a {
                let mut bound = vec![false; vars];
                let rows = RowBinding::new(vs, &mut bound, &[]);
                pivots.push(plan(st, &atoms, &sorts, Start::Row(*table, rows), bound, Some(i)));
            }
        }
        for (v, &s) in sorts.iter().enumerate() {
            if !covered[v] {
                let mut bound = vec![false; vars];
                bound[v] = true;
                pivots.push(plan(st, &atoms, &sorts, Start::Class(v, s), bound, None));
            }
        }
        Matcher {
            arity,
            vars,
            full,
            pivots,
        }
    }

    /// Every match, as classes for the context variables.
    pub fn all(&self, st: &ChaseState) -> HashSet<Vec<Node>> {
        let mut out = HashSet::new();
        self.run(st, &self.full, None, &mut out);
        out
    }

    /// Every match using a row or class of `delta`, and possibly others.
    pub fn new_matches(&self, st: &ChaseState, delta: &Delta) -> HashSet<Vec<Node>> {
        let mut out = HashSet::new();
        for p in &self.pivots {
            self.run(st, p, Some(delta), &mut out);
        }
        out
    }

    fn run(&self, st: &ChaseState, p: &Plan, delta: Option<&Delta>, out: &mut HashSet<Vec<Node>>) {
        let mut env = vec![0; self.vars];
        match &p.start {
            Start::Everything => self.go(st, &p.steps, &mut env, out),
            Start::Row(table, rows) => {
                for row in delta.and_then(|d| d.rows.get(table)).into_iter().flatten() {
                    if rows.apply(row, &mut env) {
                        self.go(st, &p.steps, &mut env, out);
                    }
                }
            }
            Start::Class(v, s) => {
                for &n in delta.map_or(&[][..], |d| &d.nodes[*s]) {
                    env[*v] = n;
                    self.go(st, &p.steps, &mut env, out);
                }
            }
        }
    }

    fn go(&self, st: &ChaseState, steps: &[Step], env: &mut Vec<Node>, out: &mut HashSet<Vec<Node>>) {
        let Some((step, rest)) = steps.split_first() else {
            out.insert(env[..self.arity].to_vec());
            return;
        };
        match step {
            Step::Scan { index, key, rows } => {
                let key: Vec<Node> = key.iter().map(|&v| env[v]).collect();
                for row in st.lookup(*index, &key) {
                    if rows.apply(row, env) {
                        self.go(st, rest, env, out);
                    }
                }
            }
            Step::Value { f, args, res, bind } => {
                let args: Vec<Node> = args.iter().map(|&v| env[v]).collect();
                match st.value(*f, &args) {
                    Some(n) if *bind => {
                        env[*res] = n;
                        self.go(st, rest, env, out);
                    }
                    Some(n) if env[*res] == n => self.go(st, rest, env, out),
                    _ => {}
                }
            }
            Step::Has { r, args } => {
                let args: Vec<Node> = args.iter().map(|&v| env[v]).collect();
                if st.has(*r, &args) {
                    self.go(st, rest, env, out);
                }
            }
            Step::Eq { a, b, bind } => {
                if *bind {
                    env[*b] = env[*a];
                    self.go(st, rest, env, out);
                } else if env[*a] == env[*b] {
                    self.go(st, rest, env, out);
                }
            }
            Step::Domain { var, sort } => {
                let classes: Vec<Node> = st.classes(*sort).collect();
                for n in classes {
                    env[*var] = n;
                    self.go(st, rest, env, out);
                }
            }
        }
    }
}

fn flatten(st: &ChaseState, t: &CTerm, vars: &mut usize, atoms: &mut Vec<QAtom>) -> usize {
    match t {
        CTerm::Var(i) => *i,
        CTerm::App(f, args) => {
            let mut vs: Vec<usize> = args.iter().map(|a| flatten(st, a, vars, atoms)).collect();
            let res = *vars;
            *vars += 1;
            vs.push(res);
            atoms.push(QAtom::Row(Table::Fn(st.fn_id(f)), vs));
            res
        }
    }
}

/// Orders the atoms other than `skip` greedily: equations and lookups at
/// bound arguments first, then index scans on the most bound positions,
/// then whole carriers for variables nothing else constrains.
fn plan(st: &mut ChaseState, atoms: &[QAtom], sorts: &[usize], start: Start, mut bound: Vec<bool>, skip: Option<usize>) -> Plan {
    let mut todo: Vec<usize> = (0..atoms.len()).filter(|&i| Some(i) != skip).collect();
    let mut steps = Vec::new();
    loop {
        // (priority, atom position in todo); lower is better.
        let mut best: Option<(usize, usize)> = None;
        for (k, &i) in todo.iter().enumerate() {
            let prio = match &atoms[i] {
                QAtom::Eq(a, b) if bound[*a] || bound[*b] => 0,
                QAtom::Eq(..) => continue,
                QAtom::Row(Table::Fn(_), vs) if vs[..vs.len() - 1].iter().all(|&v| bound[v]) => 1,
                QAtom::Row(Table::Rel(_), vs) if vs.iter().all(|&v| bound[v]) => 1,
                QAtom::Row(_, vs) => 2 + vs.iter().filter(|&&v| !bound[v]).count(),
            };
            if best.is_none_or(|(p, _)| prio < p) {
                best = Some((prio, k));
            }
        }
        let Some((_, k)) = best else {
            match (0..sorts.len()).find(|&v| !bound[v]) {
                Some(var) => {
                    bound[var] = true;
                    steps.push(Step::Domain { var, sort: sorts[var] });
                    continue;
                }
                None => break,
            }
        };
        let i = todo.remove(k);
        steps.push(match &atoms[i] {
            &QAtom::Eq(a, b) => {
                let (a, b) = if bound[a] { (a, b) } else { (b, a) };
                let bind = !bound[b];
                bound[b] = true;
                Step::Eq { a, b, bind }
            }
            QAtom::Row(Table::Fn(f), vs) if vs[..vs.len() - 1].iter().all(|&v| bound[v]) => {
                let res = vs[vs.len() - 1];
                let bind = !bound[res];
                bound[res] = true;
                Step::Value {
                    f: *f,
                    args: vs[..vs.len() - 1].to_vec(),
                    res,
                    bind,
                }
            }
            QAtom::Row(Table::Rel(r), vs) if vs.iter().all(|&v| bound[v]) => Step::Has { r: *r, args: vs.clone() },
            QAtom::Row(table, vs) => {
                let positions: Vec<usize> = (0..vs.len()).filter(|&p| bound[vs[p]]).collect();
                let key = positions.iter().map(|&p| vs[p]).collect();
                let rows = RowBinding::new(vs, &mut bound, &positions);
                Step::Scan {
                    index: st.index(*table, &positions),
                    key,
                    rows,
                }
            }
        });
    }
    Plan { start, steps }
}
