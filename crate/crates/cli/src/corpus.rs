//! Shipped example inputs.

use afx_core::cantor::{contracting_line, example_generator, ExampleKind, FiniteDynSystem};
use afx_core::crossed::EmbedProblem;

macro_rules! corpus_files {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../corpus/", $name, ".json")))),*]
    };
}

/// Decision problems with their expected verdict class.
pub const DECIDE_CORPUS: &[(&str, &str)] = corpus_files!(
    "doubling_nonunital",
    "fibonacci_stable",
    "tripling_nonunital",
    "golden_square_stable",
    "doubling_identity_nonunital",
    "fibonacci_identity_nonunital",
    "finite_two_stage_identity",
    "triangular_identity_unital",
    "doubling_unital",
    "full_swap_unital",
    "symmetric_swap_unital",
    "fibonacci_shift_unital",
);

pub const OTHER_FILES: &[(&str, &str)] = corpus_files!(
    "torsion_quotient",
    "antidiagonal_subgroup",
    "cone_salient",
    "cone_line"
);

/// Generated dynamical systems and their default sizes.
pub const GENERATED: &[(&str, usize)] = &[
    ("remark_4_3", 9),
    ("remark_4_8", 50),
    ("contracting_line", 0),
];

pub fn names() -> Vec<&'static str> {
    DECIDE_CORPUS
        .iter()
        .chain(OTHER_FILES)
        .map(|(n, _)| *n)
        .chain(GENERATED.iter().map(|(n, _)| *n))
        .collect()
}

pub fn file(name: &str) -> Option<&'static str> {
    DECIDE_CORPUS
        .iter()
        .chain(OTHER_FILES)
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
}

pub fn problem(name: &str) -> Option<EmbedProblem> {
    file(name).map(|t| serde_json::from_str(t).expect("shipped corpus parses"))
}

/// Generated system by name; `size` overrides the default size.
pub fn generated(
    name: &str,
    size: Option<usize>,
) -> Option<Result<FiniteDynSystem, afx_core::cantor::CantorError>> {
    let default = GENERATED.iter().find(|(n, _)| *n == name)?.1;
    let size = size.unwrap_or(default);
    Some(match name {
        "contracting_line" => Ok(contracting_line()),
        other => other
            .parse::<ExampleKind>()
            .map_err(|_| afx_core::cantor::CantorError::SizeTooSmall)
            .and_then(|k| example_generator(k, size)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_file_parses() {
        for (name, _) in DECIDE_CORPUS {
            let p = problem(name).unwrap();
            p.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert_eq!(DECIDE_CORPUS.len(), 12);
        for (name, _) in GENERATED {
            generated(name, None).unwrap().unwrap();
        }
    }
}
