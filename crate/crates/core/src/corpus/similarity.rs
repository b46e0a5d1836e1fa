//! BASE / MOD-DEP / NO-MOD-DEP program triplets.
//!
//! Every base program has the shape
//!
//! ```text
//! func f(a, w, i) {
//!     var z = a * 3
//!     ...filler...
//!     while i > 0 {
//!         z = z * w
//!     }
//!     ...filler...
//!     var r = z - w        <- line of interest
//!     return r
//! }
//! ```
//!
//! MOD-DEP renames every identifier that does not occur on the line of
//! interest, flips the operator of `z`'s initial definition, and draws new
//! filler. NO-MOD-DEP is the base with the loop around `z`'s update removed.

use super::generator::{FUNC_NAMES, VAR_NAMES};
use super::ir::{emit, Expr, Func, Stmt};
use crate::frontend::SourceProgram;
use crate::seed::rng_for;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinesOfInterest {
    pub base: usize,
    pub mod_dep: usize,
    pub no_mod_dep: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimilarityTriplet {
    pub base: SourceProgram,
    pub mod_dep: SourceProgram,
    pub no_mod_dep: SourceProgram,
    pub line_of_interest: LinesOfInterest,
}

struct Names {
    func: String,
    a: String,
    i: String,
    z: String,
    w: String,
    r: String,
}

struct Shape {
    names: Names,
    init_op: &'static str,
    before: Vec<Stmt>,
    after: Vec<Stmt>,
    loi_op: &'static str,
}

pub fn generate_similarity_triplets(n: usize, seed: u64) -> Vec<SimilarityTriplet> {
    assert!(n >= 1, "at least one triplet");
    let mut rng = rng_for(seed, "similarity");
    (0..n).map(|k| triplet(k, &mut rng)).collect()
}

fn triplet(k: usize, rng: &mut ChaCha8Rng) -> SimilarityTriplet {
    let mut pool: Vec<&str> = VAR_NAMES.to_vec();
    pool.shuffle(rng);
    let mut take = {
        let mut it = pool.into_iter();
        move || it.next().expect("name pool is large enough").to_string()
    };
    let mut funcs: Vec<&str> = FUNC_NAMES.to_vec();
    funcs.shuffle(rng);

    let base_names = Names {
        func: funcs[0].to_string(),
        a: take(),
        i: take(),
        z: take(),
        w: take(),
        r: take(),
    };
    let base_fill: Vec<String> = (0..5).map(|_| take()).collect();
    let mod_names = Names {
        func: funcs[1].to_string(),
        a: take(),
        i: take(),
        z: base_names.z.clone(),
        w: base_names.w.clone(),
        r: base_names.r.clone(),
    };
    let mod_fill: Vec<String> = (0..5).map(|_| take()).collect();

    let init_op = *["*", "-"].choose(rng).expect("non-empty");
    let loi_op = *["-", "*"].choose(rng).expect("non-empty");
    let (before, after) = filler(rng, &base_names, &base_fill);
    let base = Shape {
        names: base_names,
        init_op,
        before,
        after,
        loi_op,
    };
    let (before, after) = filler(rng, &mod_names, &mod_fill);
    let modified = Shape {
        names: mod_names,
        init_op: if init_op == "*" { "-" } else { "*" },
        before,
        after,
        loi_op,
    };

    let (base_src, base_loi) = render(&base, true);
    let (mod_src, mod_loi) = render(&modified, true);
    let (nomod_src, nomod_loi) = render(&base, false);
    SimilarityTriplet {
        base: SourceProgram::new(format!("base-{k:02}"), base_src),
        mod_dep: SourceProgram::new(format!("mod-dep-{k:02}"), mod_src),
        no_mod_dep: SourceProgram::new(format!("no-mod-dep-{k:02}"), nomod_src),
        line_of_interest: LinesOfInterest {
            base: base_loi,
            mod_dep: mod_loi,
            no_mod_dep: nomod_loi,
        },
    }
}

/// Filler declarations that read `a`, `i`, and earlier filler but never
/// write `z`, `w`, or `r`.
fn filler(rng: &mut ChaCha8Rng, names: &Names, fresh: &[String]) -> (Vec<Stmt>, Vec<Stmt>) {
    let n_before = rng.gen_range(1..=3);
    let n_after = rng.gen_range(0..=2);
    let mut readable = vec![names.a.clone(), names.i.clone()];
    let mut stmts = Vec::new();
    for target in fresh.iter().take(n_before + n_after) {
        let leaf = |rng: &mut ChaCha8Rng| {
            if rng.gen_bool(0.7) {
                Expr::var(readable.choose(rng).expect("non-empty"))
            } else {
                Expr::Int(rng.gen_range(1..=9))
            }
        };
        let op = *["+", "-", "*"].choose(rng).expect("non-empty");
        let value = Expr::bin(op, leaf(rng), leaf(rng));
        stmts.push(Stmt::Def {
            decl: true,
            target: target.clone(),
            value,
            vuln: None,
        });
        readable.push(target.clone());
    }
    let after = stmts.split_off(n_before);
    (stmts, after)
}

fn render(shape: &Shape, with_loop: bool) -> (String, usize) {
    let n = &shape.names;
    let mut body = vec![Stmt::Def {
        decl: true,
        target: n.z.clone(),
        value: Expr::bin(shape.init_op, Expr::var(&n.a), Expr::Int(3)),
        vuln: None,
    }];
    body.extend(shape.before.iter().cloned());
    let update = Stmt::Def {
        decl: false,
        target: n.z.clone(),
        value: Expr::bin("*", Expr::var(&n.z), Expr::var(&n.w)),
        vuln: None,
    };
    if with_loop {
        body.push(Stmt::While {
            cond: Expr::bin(">", Expr::var(&n.i), Expr::Int(0)),
            body: vec![update],
        });
    } else {
        body.push(update);
    }
    body.extend(shape.after.iter().cloned());
    body.push(Stmt::Def {
        decl: true,
        target: n.r.clone(),
        value: Expr::bin(shape.loi_op, Expr::var(&n.z), Expr::var(&n.w)),
        vuln: None,
    });
    body.push(Stmt::Return(Expr::var(&n.r)));
    let func = Func {
        name: n.func.clone(),
        params: vec![n.a.clone(), n.w.clone(), n.i.clone()],
        body,
    };
    let emitted = emit(&[func]);
    let loi = emitted
        .statements
        .iter()
        .find(|s| s.writes == [n.r.clone()])
        .expect("line of interest is emitted")
        .line;
    (emitted.source, loi)
}
