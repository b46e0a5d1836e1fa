use super::{ModelConfig, ModelError, PreparedProgram};
use super::prepare::DefineSource;
use std::collections::{BTreeSet, HashMap, HashSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotDefine {
    Undefined,
    OneHot(usize),
    /// Index of another plan node.
    Node(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanSlot {
    /// `None` when define vectors are disabled.
    pub define: Option<SlotDefine>,
    /// Index into [`Plan::paths`].
    pub context: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanNode {
    pub program: usize,
    pub line: usize,
    pub slots: Vec<PlanSlot>,
    /// 0 for nodes without line dependencies, else one more than the
    /// deepest dependency.
    pub level: usize,
}

/// The unrolled recursion for a set of lines: one node per line
/// representation to compute (shared when memoizing), listed so that every
/// node comes after its dependencies.
#[derive(Debug, Clone, Default)]
pub struct Plan {
    pub nodes: Vec<PlanNode>,
    /// Distinct encoded paths referenced by any slot.
    pub paths: Vec<Vec<usize>>,
    pub roots: Vec<usize>,
    pub levels: Vec<Vec<usize>>,
}

impl Plan {
    /// Direct line dependencies of a node.
    pub fn dependencies(&self, node: usize) -> Vec<usize> {
        self.nodes[node]
            .slots
            .iter()
            .filter_map(|s| match s.define {
                Some(SlotDefine::Node(n)) => Some(n),
                _ => None,
            })
            .collect()
    }

    /// Lines whose representations are computed on the way to `root`,
    /// excluding the root itself.
    pub fn lines_reached(&self, root: usize) -> BTreeSet<usize> {
        let mut seen = HashSet::new();
        let mut stack = self.dependencies(root);
        let mut lines = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                lines.insert(self.nodes[n].line);
                stack.extend(self.dependencies(n));
            }
        }
        lines
    }
}

struct Builder<'a> {
    programs: &'a [&'a PreparedProgram],
    cfg: &'a ModelConfig,
    plan: Plan,
    memo: HashMap<(usize, usize), usize>,
    in_progress: HashSet<(usize, usize)>,
    path_ids: HashMap<Vec<usize>, usize>,
}

impl Builder<'_> {
    fn visit(&mut self, program: usize, line: usize, depth: usize) -> Result<SlotDefine, ModelError> {
        if depth > self.cfg.max_recursion_depth {
            return Err(ModelError::RecursionDepthExceeded { line, depth });
        }
        let key = (program, line);
        if let Some(&n) = self.memo.get(&key) {
            return Ok(SlotDefine::Node(n));
        }
        if self.in_progress.contains(&key) {
            return Ok(SlotDefine::Undefined);
        }
        let prog = self.programs[program];
        let token_slots = prog.slots(line).ok_or(ModelError::LineNotRepresented {
            line,
            represented: prog.represented_lines(),
        })?;
        self.in_progress.insert(key);
        let mut slots = Vec::with_capacity(token_slots.len());
        let mut level = 0;
        for ts in token_slots {
            let define = if self.cfg.no_endpoints {
                None
            } else {
                Some(match ts.define {
                    DefineSource::Undefined => SlotDefine::Undefined,
                    DefineSource::OneHot(i) => SlotDefine::OneHot(i),
                    DefineSource::Line(ep) => {
                        let d = self.visit(program, ep, depth + 1)?;
                        if let SlotDefine::Node(n) = d {
                            level = level.max(self.plan.nodes[n].level + 1);
                        }
                        d
                    }
                })
            };
            let context = ts.context.as_ref().map(|p| {
                let next = self.path_ids.len();
                *self.path_ids.entry(p.indices.clone()).or_insert_with(|| {
                    self.plan.paths.push(p.indices.clone());
                    next
                })
            });
            slots.push(PlanSlot { define, context });
        }
        self.in_progress.remove(&key);
        let id = self.plan.nodes.len();
        self.plan.nodes.push(PlanNode {
            program,
            line,
            slots,
            level,
        });
        if self.cfg.memoize {
            self.memo.insert(key, id);
        }
        Ok(SlotDefine::Node(id))
    }
}

/// Plan the representations of `roots` given as (program index, line).
pub fn build_plan(
    programs: &[&PreparedProgram],
    roots: &[(usize, usize)],
    cfg: &ModelConfig,
) -> Result<Plan, ModelError> {
    let mut b = Builder {
        programs,
        cfg,
        plan: Plan::default(),
        memo: HashMap::new(),
        in_progress: HashSet::new(),
        path_ids: HashMap::new(),
    };
    for &(program, line) in roots {
        match b.visit(program, line, 0)? {
            SlotDefine::Node(n) => b.plan.roots.push(n),
            _ => unreachable!("a root is never in progress"),
        }
    }
    let depth = b.plan.nodes.iter().map(|n| n.level + 1).max().unwrap_or(0);
    let mut levels = vec![Vec::new(); depth];
    for (i, n) in b.plan.nodes.iter().enumerate() {
        levels[n.level].push(i);
    }
    b.plan.levels = levels;
    Ok(b.plan)
}
