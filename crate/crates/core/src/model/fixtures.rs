//! The bundled example arenas (also shipped as files under `fixtures/`).

use super::{parse_model, Model};

pub const M1_TEXT: &str = include_str!("../../../../fixtures/m1.model");
pub const M1X_TEXT: &str = include_str!("../../../../fixtures/m1x.model");
pub const M2_TEXT: &str = include_str!("../../../../fixtures/m2.model");
pub const M3_TEXT: &str = include_str!("../../../../fixtures/m3.model");
pub const M2_UNREACHABLE_TEXT: &str = include_str!("../../../../fixtures/m2-unreachable.model");

fn load(text: &str) -> Model {
    parse_model(text).expect("bundled fixture parses")
}

pub fn m1() -> Model {
    load(M1_TEXT)
}

pub fn m1x() -> Model {
    load(M1X_TEXT)
}

pub fn m2() -> Model {
    load(M2_TEXT)
}

pub fn m3() -> Model {
    load(M3_TEXT)
}

pub fn m2_unreachable() -> Model {
    load(M2_UNREACHABLE_TEXT)
}

/// The four solvable fixtures, by name.
pub fn all() -> Vec<(&'static str, Model)> {
    vec![("M1", m1()), ("M1x", m1x()), ("M2", m2()), ("M3", m3())]
}
