//! Consistent identifier renaming.

use crate::frontend::{is_builtin, parse_source, pretty_print, Ast, FrontendError, SourceProgram};
use crate::seed::rng_for;
use rand::seq::SliceRandom;
use std::collections::BTreeMap;

/// Rename every variable, parameter, and user function consistently.
/// Built-ins keep their names. New names are `id0`, `id1`, ... assigned
/// in a seeded random order.
pub fn alpha_rename(ast: &Ast, seed: u64) -> Ast {
    let mut names: Vec<String> = Vec::new();
    for n in &ast.nodes {
        if let Some(name) = &n.name {
            if !is_builtin(name) && !names.contains(name) {
                names.push(name.clone());
            }
        }
    }
    let mut fresh: Vec<usize> = (0..names.len()).collect();
    fresh.shuffle(&mut rng_for(seed, "rename"));
    let mapping: BTreeMap<&str, String> = names
        .iter()
        .zip(&fresh)
        .map(|(old, k)| (old.as_str(), format!("id{k}")))
        .collect();

    let mut out = ast.clone();
    for n in &mut out.nodes {
        if let Some(name) = &n.name {
            if let Some(new) = mapping.get(name.as_str()) {
                n.name = Some(new.clone());
            }
        }
    }
    out.functions = ast
        .functions
        .iter()
        .map(|(k, &v)| (mapping.get(k.as_str()).cloned().unwrap_or_else(|| k.clone()), v))
        .collect();
    out
}

/// Rename a canonical program and print it back. Line numbers are kept
/// because the printer preserves one statement per line.
pub fn alpha_rename_source(program: &SourceProgram, seed: u64) -> Result<SourceProgram, FrontendError> {
    let ast = parse_source(&program.source)?;
    let renamed = pretty_print(&alpha_rename(&ast, seed));
    Ok(SourceProgram::new(format!("{}-renamed", program.id), renamed))
}
