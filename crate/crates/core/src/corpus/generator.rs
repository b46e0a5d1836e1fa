//! Seeded program generator with planted vulnerabilities.
//!
//! Statements are produced in textual order while tracking, for every
//! variable, whether its most recent textual definition is an
//! `assert_nonzero` guard and whether it sits inside a loop. That is all the
//! bookkeeping the three vulnerability classes need. Filler code is
//! sanitized against the same facts so it never matches a class by
//! accident, and decoys reuse the surface shape of each plant.

use super::ir::{emit, lines_of, Expr, Func, Stmt};
use super::{CorpusError, LabeledLine, StatementRecord, VulnClass};
use crate::frontend::SourceProgram;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

pub const MAX_ATTEMPTS: usize = 100;

pub(crate) const VAR_NAMES: &[&str] = &[
    "a", "b", "c", "d", "e", "g", "h", "k", "m", "n", "p", "q", "r", "s", "t", "u", "v", "w", "x",
    "y", "z", "acc", "amt", "bal", "cnt", "fee", "idx", "lim", "rate", "res", "sum", "tmp", "val",
];

pub(crate) const FUNC_NAMES: &[&str] = &[
    "apply", "audit", "calc", "check", "compute", "deposit", "payout", "settle", "transfer",
    "update", "withdraw",
];

/// Expected number of plants per emitted line when plants are drawn at random.
const PLANTS_PER_LINE: f64 = 0.022;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlantSpec {
    /// Zero to three plants, scaled with program length, classes uniform.
    Random,
    Exactly(Vec<VulnClass>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSpec {
    pub min_lines: usize,
    pub max_lines: usize,
    pub plants: PlantSpec,
}

impl Default for SizeSpec {
    fn default() -> Self {
        SizeSpec {
            min_lines: 15,
            max_lines: 45,
            plants: PlantSpec::Random,
        }
    }
}

impl SizeSpec {
    pub fn lines(min_lines: usize, max_lines: usize) -> Self {
        SizeSpec {
            min_lines,
            max_lines,
            plants: PlantSpec::Random,
        }
    }

    pub fn with_plants(mut self, plants: Vec<VulnClass>) -> Self {
        self.plants = PlantSpec::Exactly(plants);
        self
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.min_lines < 3 || self.min_lines > self.max_lines || self.max_lines > 128 {
            return Err(CorpusError::InvalidSpec(format!(
                "line range {}..={} must lie within 3..=128",
                self.min_lines, self.max_lines
            )));
        }
        if let PlantSpec::Exactly(p) = &self.plants {
            if p.len() > 3 {
                return Err(CorpusError::InvalidSpec(format!("{} plants requested, at most 3", p.len())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedProgram {
    pub program: SourceProgram,
    /// One entry per assignment or declaration line, in line order.
    pub labels: Vec<LabeledLine>,
    pub statements: Vec<StatementRecord>,
}

pub fn generate_program(seed: u64, spec: &SizeSpec) -> Result<GeneratedProgram, CorpusError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_ATTEMPTS {
        let target = rng.gen_range(spec.min_lines..=spec.max_lines);
        let plants = match &spec.plants {
            PlantSpec::Exactly(p) => p.clone(),
            PlantSpec::Random => draw_plants(&mut rng, target),
        };
        let mut builder = Builder {
            rng: &mut rng,
            funcs: Vec::new(),
        };
        let Some(funcs) = builder.program(target, &plants) else {
            continue;
        };
        let emitted = emit(&funcs);
        let lines = emitted.source.lines().count();
        let planted: usize = emitted.labels.iter().filter(|l| l.label == 1).count();
        if lines < spec.min_lines || lines > spec.max_lines || planted < plants.len() {
            continue;
        }
        return Ok(GeneratedProgram {
            program: SourceProgram::new(format!("p{seed:016x}"), emitted.source),
            labels: emitted.labels,
            statements: emitted.statements,
        });
    }
    Err(CorpusError::GenerationRetryExceeded { attempts: MAX_ATTEMPTS })
}

fn draw_plants(rng: &mut ChaCha8Rng, target: usize) -> Vec<VulnClass> {
    let expected = PLANTS_PER_LINE * target as f64;
    let mut n = expected.floor() as usize;
    if rng.gen_bool(expected.fract()) {
        n += 1;
    }
    (0..n.min(3))
        .map(|_| *VulnClass::ALL.choose(rng).expect("non-empty"))
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Def {
    in_loop: bool,
    guarded: bool,
    param: bool,
}

#[derive(Default)]
struct Scope {
    defs: BTreeMap<String, Def>,
    /// Variables filler may read, in definition order.
    readable: Vec<String>,
    used: BTreeSet<String>,
    loop_depth: usize,
    if_depth: usize,
}

impl Scope {
    fn is_guarded(&self, name: &str) -> bool {
        self.defs.get(name).is_some_and(|d| d.guarded)
    }

    fn loop_defined(&self, name: &str) -> bool {
        self.defs.get(name).is_some_and(|d| d.in_loop)
    }

    fn define(&mut self, name: &str, value: &Expr) {
        self.defs.insert(
            name.to_string(),
            Def {
                in_loop: self.loop_depth > 0,
                guarded: value.contains_call("assert_nonzero"),
                param: false,
            },
        );
        self.used.insert(name.to_string());
        if !self.readable.iter().any(|r| r == name) {
            self.readable.push(name.to_string());
        }
    }

    fn taint(&mut self, name: &str) {
        self.readable.retain(|r| r != name);
    }
}

struct Builder<'r> {
    rng: &'r mut ChaCha8Rng,
    /// Earlier functions as (name, arity); later functions may call them.
    funcs: Vec<(String, usize)>,
}

impl Builder<'_> {
    fn program(&mut self, target: usize, plants: &[VulnClass]) -> Option<Vec<Func>> {
        let max_funcs = (target / 12).clamp(1, 3);
        let n_funcs = self.rng.gen_range(1..=max_funcs);
        let mut names: Vec<&str> = FUNC_NAMES.to_vec();
        names.shuffle(self.rng);
        let mut per_func: Vec<Vec<VulnClass>> = vec![Vec::new(); n_funcs];
        for &p in plants {
            let i = self.rng.gen_range(0..n_funcs);
            per_func[i].push(p);
        }
        let share = (target + 1) / n_funcs;
        let mut funcs = Vec::new();
        for (i, plants) in per_func.iter().enumerate() {
            // header, return, closing brace, and the blank separator
            let overhead = if i == 0 { 3 } else { 4 };
            let budget = share.saturating_sub(overhead).max(1);
            let f = self.function(names[i], budget, plants);
            self.funcs.push((f.name.clone(), f.params.len()));
            funcs.push(f);
        }
        Some(funcs)
    }

    fn function(&mut self, name: &str, budget: usize, plants: &[VulnClass]) -> Func {
        let mut sc = Scope::default();
        let n_params = self.rng.gen_range(2..=3);
        let mut pool: Vec<&str> = VAR_NAMES.to_vec();
        pool.shuffle(self.rng);
        let params: Vec<String> = pool[..n_params].iter().map(|s| s.to_string()).collect();
        for p in &params {
            sc.defs.insert(
                p.clone(),
                Def {
                    in_loop: false,
                    guarded: false,
                    param: true,
                },
            );
            sc.used.insert(p.clone());
            sc.readable.push(p.clone());
        }

        let mut pending: Vec<VulnClass> = plants.to_vec();
        let mut tail_dac = false;
        if let Some(pos) = pending.iter().position(|&p| p == VulnClass::DeadAfterCall) {
            if self.rng.gen_bool(0.5) {
                pending.remove(pos);
                tail_dac = true;
            }
        }
        let mut thresholds: Vec<usize> = pending.iter().map(|_| self.rng.gen_range(0..budget)).collect();
        thresholds.sort_unstable();

        let mut body = Vec::new();
        let mut used = 0;
        let mut next = 0;
        loop {
            if next < pending.len() && thresholds[next] <= used {
                let stmts = self.plant(&mut sc, pending[next]);
                used += lines_of(&stmts);
                body.extend(stmts);
                next += 1;
                continue;
            }
            if used >= budget {
                if next < pending.len() {
                    thresholds[next] = used;
                    continue;
                }
                break;
            }
            let stmts = self.filler(&mut sc, budget - used);
            used += lines_of(&stmts);
            body.extend(stmts);
        }
        if tail_dac {
            body.extend(self.dead_after_call(&mut sc));
        } else if self.rng.gen_bool(0.3) {
            body.push(self.terminal_call(&mut sc));
        }
        let ret = self.leaf(&sc);
        body.push(Stmt::Return(ret));
        Func {
            name: name.to_string(),
            params,
            body,
        }
    }

    fn pick<'a>(&mut self, names: &'a [String]) -> Option<&'a String> {
        names.choose(self.rng)
    }

    fn int(&mut self) -> Expr {
        Expr::Int(self.rng.gen_range(1..=9))
    }

    /// A readable variable, or a literal when none exists.
    fn var_or_int(&mut self, sc: &Scope) -> Expr {
        match self.pick(&sc.readable) {
            Some(v) => Expr::var(v),
            None => self.int(),
        }
    }

    /// A readable variable other than `denom`, or a literal.
    fn numerator(&mut self, sc: &Scope, denom: &str) -> Expr {
        let others: Vec<String> = sc.readable.iter().filter(|v| *v != denom).cloned().collect();
        match self.pick(&others) {
            Some(v) => Expr::var(v),
            None => self.int(),
        }
    }

    fn leaf(&mut self, sc: &Scope) -> Expr {
        if self.rng.gen_bool(0.75) {
            self.var_or_int(sc)
        } else {
            self.int()
        }
    }

    /// A small sanitized expression for the operand a plant does not
    /// depend on, so plants and decoys share the surface of filler.
    fn operand(&mut self, sc: &Scope) -> Expr {
        let e = self.arith(sc, 1);
        self.sanitize(e, sc)
    }

    /// A numerator for a division by `denom`.
    fn dividend(&mut self, sc: &Scope, denom: &str) -> Expr {
        if self.rng.gen_bool(0.5) {
            self.numerator(sc, denom)
        } else {
            self.operand(sc)
        }
    }

    fn arith(&mut self, sc: &Scope, depth: usize) -> Expr {
        if depth == 0 || self.rng.gen_bool(0.35) {
            if self.rng.gen_bool(0.05) {
                return Expr::Neg(Box::new(self.var_or_int(sc)));
            }
            return self.leaf(sc);
        }
        let op = *[("+", 4), ("-", 3), ("*", 3), ("/", 1), ("%", 1)]
            .choose_weighted(self.rng, |o| o.1)
            .expect("weights")
            ;
        let l = self.arith(sc, depth - 1);
        let mut r = self.arith(sc, depth - 1);
        if matches!((&l, &r), (Expr::Var(a), Expr::Var(b)) if a == b) {
            r = self.int();
        }
        Expr::bin(op.0, l, r)
    }

    fn condition(&mut self, sc: &Scope) -> Expr {
        let op = *["<", ">", "=="].choose(self.rng).expect("non-empty");
        let l = self.var_or_int(sc);
        let r = self.leaf(sc);
        Expr::bin(op, l, r)
    }

    /// Rewrite filler so it matches no vulnerability class: divisions and
    /// remainders by anything but a literal or a guarded variable get a
    /// literal, and unchecked additions on loop-defined variables become
    /// subtractions.
    fn sanitize(&mut self, e: Expr, sc: &Scope) -> Expr {
        match e {
            Expr::Bin(op, l, r) => {
                let l = self.sanitize(*l, sc);
                let mut r = self.sanitize(*r, sc);
                let mut op = op;
                if op == "/" || op == "%" {
                    let safe = match &r {
                        Expr::Int(_) => true,
                        Expr::Var(v) => op == "/" && sc.is_guarded(v),
                        _ => false,
                    };
                    if !safe {
                        r = self.int();
                    }
                }
                if op == "+" && sc.if_depth == 0 {
                    let risky = |x: &Expr| matches!(x, Expr::Var(v) if sc.loop_defined(v));
                    if risky(&l) || risky(&r) {
                        op = "-";
                    }
                }
                Expr::bin(op, l, r)
            }
            Expr::Neg(x) => Expr::Neg(Box::new(self.sanitize(*x, sc))),
            Expr::Call(n, args) => {
                let args = args.into_iter().map(|a| self.sanitize(a, sc)).collect();
                Expr::Call(n, args)
            }
            other => other,
        }
    }

    /// Target for a new definition: a fresh name most of the time, otherwise
    /// a readable non-parameter variable.
    fn target(&mut self, sc: &Scope) -> String {
        let reassignable: Vec<String> = sc
            .readable
            .iter()
            .filter(|v| !sc.defs[v.as_str()].param)
            .cloned()
            .collect();
        let fresh: Vec<&str> = VAR_NAMES.iter().copied().filter(|n| !sc.used.contains(*n)).collect();
        if !reassignable.is_empty() && (fresh.is_empty() || self.rng.gen_bool(0.3)) {
            return self.pick(&reassignable).expect("non-empty").clone();
        }
        match fresh.choose(self.rng) {
            Some(n) => n.to_string(),
            None => self.pick(&sc.readable).cloned().unwrap_or_else(|| "tmp".to_string()),
        }
    }

    fn def_to(&mut self, sc: &mut Scope, target: String, value: Expr, vuln: Option<VulnClass>) -> Stmt {
        let decl = !sc.used.contains(&target);
        sc.define(&target, &value);
        Stmt::Def {
            decl,
            target,
            value,
            vuln,
        }
    }

    fn def(&mut self, sc: &mut Scope, value: Expr) -> Stmt {
        let target = self.target(sc);
        self.def_to(sc, target, value, None)
    }

    fn simple(&mut self, sc: &mut Scope) -> Stmt {
        let v = self.arith(sc, 2);
        let v = self.sanitize(v, sc);
        let target = self.target(sc);
        // no self-copies such as `g = g`
        let v = match v {
            Expr::Var(ref name) if *name == target => Expr::bin("*", v, self.int()),
            other => other,
        };
        self.def_to(sc, target, v, None)
    }

    /// `var s = ext_call(x)` as the last statement of its block: the
    /// benign twin of a dead-after-call plant. Nothing may read `s`.
    fn terminal_call(&mut self, sc: &mut Scope) -> Stmt {
        let arg = self.var_or_int(sc);
        let s = self.target(sc);
        let stmt = self.def_to(sc, s.clone(), Expr::call("ext_call", vec![arg]), None);
        sc.taint(&s);
        stmt
    }

    fn filler(&mut self, sc: &mut Scope, max_lines: usize) -> Vec<Stmt> {
        let nested = sc.loop_depth + sc.if_depth;
        let mut kinds: Vec<(u8, u32)> = vec![(0, 30), (1, 10), (2, 8), (3, 10)];
        if !self.funcs.is_empty() {
            kinds.push((4, 5));
        }
        if max_lines >= 3 && nested < 2 {
            kinds.push((5, 10));
        }
        if max_lines >= 4 && nested < 2 {
            kinds.push((6, 10));
        }
        let kind = kinds.choose_weighted(self.rng, |k| k.1).expect("weights").0;
        match kind {
            1 => self.builtin_call(sc, max_lines),
            2 => self.guard(sc),
            3 => self.guarded_division(sc),
            4 => {
                let (name, arity) = self.funcs.choose(self.rng).expect("non-empty").clone();
                let args = (0..arity).map(|_| self.leaf(sc)).collect();
                vec![self.def(sc, Expr::Call(name, args))]
            }
            5 => self.if_block(sc, max_lines),
            6 => self.while_block(sc, max_lines),
            _ => vec![self.simple(sc)],
        }
    }

    /// A pure built-in call, often followed by a use of its result. This is
    /// the benign shape of a dead-after-call plant.
    fn builtin_call(&mut self, sc: &mut Scope, max_lines: usize) -> Vec<Stmt> {
        let value = match self.rng.gen_range(0..3) {
            0 => Expr::call("hash", vec![self.var_or_int(sc)]),
            1 => Expr::call("min", vec![self.var_or_int(sc), self.leaf(sc)]),
            _ => Expr::call("max", vec![self.var_or_int(sc), self.leaf(sc)]),
        };
        let first = self.def(sc, value);
        let mut out = vec![first];
        if max_lines >= 2 && self.rng.gen_bool(0.6) {
            let Stmt::Def { target, .. } = &out[0] else { unreachable!() };
            let op = *["+", "-", "*"].choose(self.rng).expect("non-empty");
            let v = Expr::bin(op, Expr::var(target), self.leaf(sc));
            let v = self.sanitize(v, sc);
            out.push(self.def(sc, v));
        }
        out
    }

    /// `d = assert_nonzero(d)` or `var g = assert_nonzero(x)`.
    fn guard(&mut self, sc: &mut Scope) -> Vec<Stmt> {
        let Some(src) = self.pick(&sc.readable).cloned() else {
            return vec![self.simple(sc)];
        };
        let value = Expr::call("assert_nonzero", vec![Expr::var(&src)]);
        let target = if self.rng.gen_bool(0.5) {
            src
        } else {
            self.target(sc)
        };
        vec![self.def_to(sc, target, value, None)]
    }

    /// Division by a guarded variable: the benign twin of an unchecked
    /// division.
    fn guarded_division(&mut self, sc: &mut Scope) -> Vec<Stmt> {
        let guarded: Vec<String> = sc.readable.iter().filter(|v| sc.is_guarded(v)).cloned().collect();
        let mut out = Vec::new();
        let denom = match self.pick(&guarded).cloned() {
            Some(d) => d,
            None => {
                out.extend(self.guard(sc));
                let Some(Stmt::Def { target, .. }) = out.last() else { unreachable!() };
                target.clone()
            }
        };
        let numer = self.dividend(sc, &denom);
        let v = Expr::bin("/", numer, Expr::var(&denom));
        let v = self.sanitize(v, sc);
        out.push(self.def(sc, v));
        out
    }

    fn if_block(&mut self, sc: &mut Scope, max_lines: usize) -> Vec<Stmt> {
        let cond = self.condition(sc);
        sc.if_depth += 1;
        let mut then = self.inner_block(sc, (max_lines - 2).min(2));
        if self.rng.gen_bool(0.2) {
            then.push(self.terminal_call(sc));
        }
        let used = 2 + lines_of(&then);
        let els = if max_lines >= used + 2 && self.rng.gen_bool(0.3) {
            Some(self.inner_block(sc, (max_lines - used - 1).min(2)))
        } else {
            None
        };
        sc.if_depth -= 1;
        vec![Stmt::If { cond, then, els }]
    }

    fn while_block(&mut self, sc: &mut Scope, max_lines: usize) -> Vec<Stmt> {
        let Some(counter) = self.pick(&sc.readable).cloned() else {
            return vec![self.simple(sc)];
        };
        let cond = Expr::bin(">", Expr::var(&counter), Expr::Int(0));
        sc.loop_depth += 1;
        let mut body = self.inner_block(sc, (max_lines - 3).min(2));
        let step = Expr::bin("-", Expr::var(&counter), Expr::Int(1));
        body.push(self.def_to(sc, counter, step, None));
        sc.loop_depth -= 1;
        let mut out = vec![Stmt::While { cond, body }];
        if max_lines >= lines_of(&out) + 3 && self.rng.gen_bool(0.4) {
            out.extend(self.bounded_use(sc, &out.clone()));
        }
        out
    }

    /// `if v < K { var r = v + y }` for a variable defined in the loop just
    /// emitted: the bound-checked twin of a loop-overflow plant.
    fn bounded_use(&mut self, sc: &mut Scope, loop_stmts: &[Stmt]) -> Vec<Stmt> {
        let Some(Stmt::While { body, .. }) = loop_stmts.first() else {
            return Vec::new();
        };
        let defined: Vec<String> = defined_targets(body)
            .into_iter()
            .filter(|v| sc.readable.contains(v))
            .collect();
        let Some(v) = self.pick(&defined).cloned() else {
            return Vec::new();
        };
        let bound = Expr::Int(self.rng.gen_range(10..=1000));
        let cond = Expr::bin("<", Expr::var(&v), bound);
        sc.if_depth += 1;
        let other = self.leaf(sc);
        let stmt = self.def(sc, Expr::bin("+", Expr::var(&v), other));
        sc.if_depth -= 1;
        vec![Stmt::If {
            cond,
            then: vec![stmt],
            els: None,
        }]
    }

    fn inner_block(&mut self, sc: &mut Scope, max_lines: usize) -> Vec<Stmt> {
        let n = self.rng.gen_range(1..=max_lines.max(1));
        (0..n).map(|_| self.simple(sc)).collect()
    }

    fn plant(&mut self, sc: &mut Scope, class: VulnClass) -> Vec<Stmt> {
        match class {
            VulnClass::DeadAfterCall => {
                let cond = self.condition(sc);
                sc.if_depth += 1;
                let then = self.dead_after_call(sc);
                sc.if_depth -= 1;
                vec![Stmt::If { cond, then, els: None }]
            }
            VulnClass::UncheckedDiv => self.unchecked_division(sc),
            VulnClass::LoopOverflow => self.loop_overflow(sc),
        }
    }

    /// `var s = ext_call(x)` followed by one or two assignments reading its
    /// result. Must end its block.
    fn dead_after_call(&mut self, sc: &mut Scope) -> Vec<Stmt> {
        let arg = self.var_or_int(sc);
        let call = Expr::call("ext_call", vec![arg]);
        let s = self.target(sc);
        let mut out = vec![self.def_to(sc, s.clone(), call, None)];
        sc.taint(&s);
        let mut prev = s.clone();
        for i in 0..self.rng.gen_range(1..=2) {
            let op = *["+", "-", "*"].choose(self.rng).expect("non-empty");
            let other = if i == 0 { self.operand(sc) } else { Expr::var(&s) };
            let t = self.target(sc);
            out.push(self.def_to(sc, t.clone(), Expr::bin(op, Expr::var(&prev), other), Some(VulnClass::DeadAfterCall)));
            sc.taint(&t);
            prev = t;
        }
        out
    }

    /// `var q = x / d` where `d` is a parameter or was last assigned without
    /// a guard.
    fn unchecked_division(&mut self, sc: &mut Scope) -> Vec<Stmt> {
        let mut out = Vec::new();
        let unguarded: Vec<String> = sc.readable.iter().filter(|v| !sc.is_guarded(v)).cloned().collect();
        let denom = match self.pick(&unguarded).cloned() {
            Some(d) if self.rng.gen_bool(0.5) => d,
            _ => {
                let v = self.arith(sc, 1);
                let v = self.sanitize(v, sc);
                let stmt = self.def(sc, v);
                let Stmt::Def { target, .. } = &stmt else { unreachable!() };
                let d = target.clone();
                out.push(stmt);
                d
            }
        };
        let numer = self.dividend(sc, &denom);
        let t = self.target(sc);
        out.push(self.def_to(sc, t, Expr::bin("/", numer, Expr::var(&denom)), Some(VulnClass::UncheckedDiv)));
        out
    }

    /// A loop updating an accumulator, then an unchecked addition on it.
    fn loop_overflow(&mut self, sc: &mut Scope) -> Vec<Stmt> {
        let mut out = Vec::new();
        let counter = match self.pick(&sc.readable).cloned() {
            Some(c) => c,
            None => {
                let v = self.int();
                let stmt = self.def(sc, v);
                let Stmt::Def { target, .. } = &stmt else { unreachable!() };
                let c = target.clone();
                out.push(stmt);
                c
            }
        };
        let others: Vec<String> = sc.readable.iter().filter(|v| **v != counter).cloned().collect();
        let acc = match self.pick(&others).cloned() {
            Some(a) if self.rng.gen_bool(0.6) => a,
            _ => {
                let v = self.leaf(sc);
                let v = self.sanitize(v, sc);
                let mut t = self.target(sc);
                if t == counter {
                    t = VAR_NAMES.iter().find(|n| !sc.used.contains(**n)).unwrap_or(&"acc").to_string();
                }
                out.push(self.def_to(sc, t.clone(), v, None));
                t
            }
        };
        let cond = Expr::bin(">", Expr::var(&counter), Expr::Int(0));
        sc.loop_depth += 1;
        let op = *["*", "-"].choose(self.rng).expect("non-empty");
        let update_value = Expr::bin(op, Expr::var(&acc), self.leaf(sc));
        let update_value = self.sanitize(update_value, sc);
        let mut body = Vec::new();
        if self.rng.gen_bool(0.3) {
            let bound = Expr::bin("<", Expr::var(&acc), Expr::Int(self.rng.gen_range(10..=1000)));
            sc.if_depth += 1;
            let update = self.def_to(sc, acc.clone(), update_value, None);
            sc.if_depth -= 1;
            body.push(Stmt::If {
                cond: bound,
                then: vec![update],
                els: None,
            });
        } else {
            body.push(self.def_to(sc, acc.clone(), update_value, None));
        }
        let step = Expr::bin("-", Expr::var(&counter), Expr::Int(1));
        body.push(self.def_to(sc, counter, step, None));
        sc.loop_depth -= 1;
        out.push(Stmt::While { cond, body });

        let other = self.operand(sc);
        let sum = if self.rng.gen_bool(0.5) {
            Expr::bin("+", Expr::var(&acc), other)
        } else {
            Expr::bin("+", other, Expr::var(&acc))
        };
        let t = self.target(sc);
        out.push(self.def_to(sc, t, sum, Some(VulnClass::LoopOverflow)));
        out
    }
}

fn defined_targets(stmts: &[Stmt]) -> Vec<String> {
    let mut out = Vec::new();
    for s in stmts {
        match s {
            Stmt::Def { target, .. } => out.push(target.clone()),
            Stmt::If { then, els, .. } => {
                out.extend(defined_targets(then));
                if let Some(e) = els {
                    out.extend(defined_targets(e));
                }
            }
            Stmt::While { body, .. } => out.extend(defined_targets(body)),
            Stmt::Return(_) => {}
        }
    }
    out
}
