//! Seeded random models with lookup-table equations.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::lang::parse_model;
use crate::model::CausalModel;

/// Name of the generator written into reports.
pub const RNG_NAME: &str = "ChaCha8";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    General,
    /// Every variable except the output is root-form.
    Independence,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "general" => Ok(Mode::General),
            "independence" => Ok(Mode::Independence),
            _ => Err(format!("unknown mode `{s}` (expected general or independence)")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Number of endogenous variables, 1 to 6.
    pub n_endogenous: usize,
    /// Domain sizes are drawn from 2 to this value (at most 4).
    pub max_domain: u32,
    pub mode: Mode,
    /// Chance that a non-output variable is root-form in general mode.
    pub root_prob: f64,
    /// Cap on the number of contexts; further would-be roots get tables.
    pub max_contexts: u128,
}

impl GeneratorConfig {
    pub fn new(seed: u64, n_endogenous: usize, mode: Mode) -> GeneratorConfig {
        GeneratorConfig { seed, n_endogenous, max_domain: 3, mode, root_prob: 0.4, max_contexts: 10_000 }
    }
}

/// Nested `ite` over `parents` selecting entries of `table`, whose rows are
/// laid out with the first parent most significant.
fn table_expr(names: &[String], sizes: &[u32], table: &[u32]) -> String {
    if table.iter().all(|&v| v == table[0]) {
        return table[0].to_string();
    }
    let k = sizes[0] as usize;
    let block = table.len() / k;
    let branch = |i: usize| table_expr(&names[1..], &sizes[1..], &table[i * block..(i + 1) * block]);
    let mut out = branch(k - 1);
    for i in (0..k - 1).rev() {
        out = format!("ite({} = {}, {}, {})", names[0], i, branch(i), out);
    }
    out
}

/// Model source for a configuration. Variables are `V1..Vn` in topological
/// order; the last one is the output.
pub fn random_source(cfg: &GeneratorConfig) -> String {
    let n = cfg.n_endogenous.clamp(1, 6);
    let max_domain = cfg.max_domain.clamp(2, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sizes: Vec<u32> = (0..n).map(|_| rng.random_range(2..=max_domain)).collect();
    let mut exo = String::new();
    let mut endo = String::new();
    let mut contexts: u128 = 1;
    for i in 0..n {
        let name = format!("V{}", i + 1);
        let k = sizes[i];
        let last = i + 1 == n;
        let want_root = match cfg.mode {
            Mode::Independence => !last || n == 1,
            Mode::General => i == 0 || rng.random_bool(cfg.root_prob.clamp(0.0, 1.0)),
        };
        let root = i == 0 || (want_root && contexts * k as u128 <= cfg.max_contexts);
        let domain = (0..k).map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
        if root {
            contexts *= k as u128;
            let _ = writeln!(exo, "exo U_{name}: {{{domain}}}");
            let _ = writeln!(endo, "var {name}: {{{domain}}} = U_{name}");
            continue;
        }
        let parents: Vec<usize> = match cfg.mode {
            Mode::Independence => (0..i).collect(),
            Mode::General => {
                let mut ps: Vec<usize> = (0..i).filter(|_| rng.random_bool(0.6)).collect();
                while ps.len() > 3 {
                    let drop = rng.random_range(0..ps.len());
                    ps.remove(drop);
                }
                if ps.is_empty() {
                    ps.push(rng.random_range(0..i));
                }
                ps
            }
        };
        let names: Vec<String> = parents.iter().map(|&p| format!("V{}", p + 1)).collect();
        let psizes: Vec<u32> = parents.iter().map(|&p| sizes[p]).collect();
        let rows: usize = psizes.iter().map(|&s| s as usize).product();
        let table: Vec<u32> = (0..rows).map(|_| rng.random_range(0..k)).collect();
        let _ = writeln!(endo, "var {name}: {{{domain}}} = {}", table_expr(&names, &psizes, &table));
    }
    format!("model random_{}\n{exo}{endo}", cfg.seed)
}

pub fn random_model(cfg: &GeneratorConfig) -> CausalModel {
    let src = random_source(cfg);
    match parse_model(&src) {
        Ok(m) => m,
        Err(e) => panic!("generated model failed to validate: {e}\n{src}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::independent;

    #[test]
    fn same_seed_same_model() {
        let cfg = GeneratorConfig::new(1, 4, Mode::General);
        assert_eq!(random_source(&cfg), random_source(&cfg));
    }

    #[test]
    fn independence_mode_has_root_inputs() {
        for seed in 0..30 {
            let m = random_model(&GeneratorConfig::new(seed, 4, Mode::Independence));
            let y = m.id("V4").unwrap();
            assert!(independent(&m, y));
            for v in ["V1", "V2", "V3"] {
                let id = m.id(v).unwrap();
                assert!(m.parents_of(id).iter().all(|&p| m.is_exogenous(p)));
            }
        }
    }

    #[test]
    fn table_expression_selects_rows() {
        let names = vec!["A".to_string(), "B".to_string()];
        let e = table_expr(&names, &[2, 2], &[0, 1, 1, 1]);
        assert_eq!(e, "ite(A = 0, ite(B = 0, 0, 1), 1)");
    }
}
