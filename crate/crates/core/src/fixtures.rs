//! Bundled example models.

use crate::lang::parse_model;
use crate::model::CausalModel;

pub const LOAN: &str = include_str!("../fixtures/loan.scm");
pub const FIRE: &str = include_str!("../fixtures/fire.scm");
pub const HIRING: &str = include_str!("../fixtures/hiring.scm");
pub const SHORTCUT: &str = include_str!("../fixtures/shortcut.scm");
pub const HIRING_PATHS: &str = include_str!("../fixtures/hiring.paths");

fn load(src: &str) -> CausalModel {
    match parse_model(src) {
        Ok(m) => m,
        Err(e) => panic!("bundled fixture failed to load: {e}"),
    }
}

pub fn loan() -> CausalModel {
    load(LOAN)
}

pub fn fire() -> CausalModel {
    load(FIRE)
}

pub fn hiring() -> CausalModel {
    load(HIRING)
}

pub fn shortcut() -> CausalModel {
    load(SHORTCUT)
}

/// Name and source of every bundled model.
pub fn all() -> [(&'static str, &'static str); 4] {
    [("loan", LOAN), ("fire", FIRE), ("hiring", HIRING), ("shortcut", SHORTCUT)]
}
