//! Lazy free-variable sets with mark/run memoization.
//!
//! Every function carries a `mark` and a cached set. The program carries a
//! global `run` counter. A query bumps `run` by two and walks the functions
//! reachable through local functions. While walking, the mark decides what
//! a visit does:
//!
//! * `0`: the memo is invalid. Reset it and recompute.
//! * `run - 1`: the memo is from the previous pass of this query. Recompute
//!   and join with the old value.
//! * `run`, function still on the walk stack: a cycle. Return the partial
//!   set and schedule another pass.
//! * anything else: the memo is valid.
//!
//! Passes repeat with `run + 1` until one changes nothing. A query that sees
//! no cycle finishes after its first pass. The final `run` is rounded up to
//! even, so the next query's passes can never collide with stale marks.

use lamg_sets::SetHandle;

use crate::ir::{Label, Program};
use crate::Error;

/// Cost of one [`Program::free_vars_stats`] query.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FvStats {
    /// Number of passes over the reachable functions.
    pub iterations: u32,
    /// Function visits that (re)computed a set, summed over all passes.
    pub visited: u64,
    /// The first pass met no cycle and was final.
    pub acyclic_fast_path: bool,
}

struct Frame {
    l: Label,
    lfs: Vec<Label>,
    idx: usize,
    acc: SetHandle,
    old: SetHandle,
    refresh: bool,
}

impl Program {
    pub fn run(&self) -> u64 {
        self.run
    }

    pub fn mark(&self, l: Label) -> u64 {
        self.funs[l.index()].mark
    }

    /// The memoized set of `l`, valid or not.
    pub fn cached_fv(&self, l: Label) -> SetHandle {
        self.funs[l.index()].fv
    }

    /// Free variables of `l`, computed or recalled.
    pub fn free_vars(&mut self, l: Label) -> Result<SetHandle, Error> {
        self.free_vars_with(l, |_| {}).map(|(s, _)| s)
    }

    pub fn free_vars_stats(&mut self, l: Label) -> Result<(SetHandle, FvStats), Error> {
        self.free_vars_with(l, |_| {})
    }

    /// Like [`free_vars_stats`](Self::free_vars_stats), calling `after_pass`
    /// with the program state after every pass.
    pub fn free_vars_with(
        &mut self,
        l: Label,
        mut after_pass: impl FnMut(&Program),
    ) -> Result<(SetHandle, FvStats), Error> {
        if !self.contains(l) {
            return Err(Error::UnknownLabel(l.0));
        }
        self.run += 2;
        let m = self.funs[l.index()].mark;
        if m != 0 && m != self.run - 1 && m != self.run {
            return Ok((self.funs[l.index()].fv, FvStats { iterations: 1, visited: 0, acyclic_fast_path: true }));
        }
        let mut stats = FvStats::default();
        loop {
            stats.iterations += 1;
            let (cycle, changed) = self.fv_pass(l, &mut stats.visited);
            after_pass(self);
            if stats.iterations == 1 && !cycle {
                stats.acyclic_fast_path = true;
                break;
            }
            if stats.iterations > 1 && !changed {
                break;
            }
            self.run += 1;
        }
        if self.run % 2 == 1 {
            self.run += 1;
        }
        Ok((self.funs[l.index()].fv, stats))
    }

    /// One walk from `root`. Returns (cycle seen, some set changed).
    fn fv_pass(&mut self, root: Label, visited: &mut u64) -> (bool, bool) {
        let mut cycle = false;
        let mut changed = false;
        let mut stack: Vec<Frame> = Vec::new();
        self.fv_enter(root, &mut stack, &mut cycle, visited);
        while let Some(top) = stack.last_mut() {
            if top.idx < top.lfs.len() {
                let g = top.lfs[top.idx];
                top.idx += 1;
                if let Some(s) = self.fv_enter(g, &mut stack, &mut cycle, visited) {
                    let top = stack.last_mut().unwrap();
                    top.acc = self.vars.union(top.acc, s);
                }
                continue;
            }
            let fr = stack.pop().unwrap();
            let mut new = self.vars.remove(fr.acc, fr.l.0);
            if fr.refresh {
                new = self.vars.union(fr.old, new);
            }
            changed |= new != fr.old;
            let f = &mut self.funs[fr.l.index()];
            f.fv = new;
            f.on_stack = false;
            if let Some(parent) = stack.last_mut() {
                parent.acc = self.vars.union(parent.acc, new);
            }
        }
        (cycle, changed)
    }

    /// Visits `l`: returns its set directly, or pushes a frame to compute it.
    fn fv_enter(&mut self, l: Label, stack: &mut Vec<Frame>, cycle: &mut bool, visited: &mut u64) -> Option<SetHandle> {
        let run = self.run;
        let f = &mut self.funs[l.index()];
        let refresh = if f.mark == 0 {
            f.fv = SetHandle::Empty;
            false
        } else if f.mark == run - 1 {
            true
        } else {
            if f.mark == run && f.on_stack {
                *cycle = true;
            }
            return Some(f.fv);
        };
        f.mark = run;
        f.on_stack = true;
        *visited += 1;
        let old = f.fv;
        let (acc, lfs) = match f.body {
            Some(b) => {
                let n = self.node(b);
                (n.lv, self.fun_set(n.lf))
            }
            None => (SetHandle::Empty, Vec::new()),
        };
        stack.push(Frame { l, lfs, idx: 0, acc, old, refresh });
        None
    }

    /// Zeroes the mark of `l` and, transitively, of its users. Stops at
    /// functions already marked invalid.
    pub fn invalidate(&mut self, l: Label) {
        let mut work = vec![l];
        while let Some(x) = work.pop() {
            let f = &mut self.funs[x.index()];
            if f.mark == 0 && x != l {
                continue;
            }
            f.mark = 0;
            f.fv = SetHandle::Empty;
            let users = f.users;
            for u in self.fns.elements(users) {
                if self.funs[u as usize].mark != 0 {
                    work.push(Label(u));
                }
            }
        }
    }

    /// Queries every function in label order.
    pub fn free_vars_all(&mut self) {
        for l in self.labels().collect::<Vec<_>>() {
            let _ = self.free_vars(l);
        }
    }

    pub fn var_in_fv(&mut self, v: Label, of: Label) -> bool {
        let s = self.free_vars(of).expect("label in range");
        self.vars.member(s, v.0)
    }
}

/// Marks and memoized sets of every function at one moment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRow {
    pub run: u64,
    pub marks: Vec<u64>,
    pub fvs: Vec<Vec<Label>>,
}

impl Program {
    pub fn snapshot(&self) -> TraceRow {
        TraceRow {
            run: self.run,
            marks: self.funs.iter().map(|f| f.mark).collect(),
            fvs: self.funs.iter().map(|f| self.var_set(f.fv)).collect(),
        }
    }

    /// Queries `l`, recording a snapshot after every pass.
    pub fn trace_query(&mut self, l: Label) -> Result<Vec<TraceRow>, Error> {
        let mut rows = Vec::new();
        self.free_vars_with(l, |p| rows.push(p.snapshot()))?;
        Ok(rows)
    }
}
