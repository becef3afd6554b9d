//! Runs the code blocks of the guide in `book/` as doctests, one module per
//! chapter so a failure points at its chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/coherent-states.md")]
pub mod coherent_states {}
#[doc = include_str!("../../../book/src/time-slicing.md")]
pub mod time_slicing {}
#[doc = include_str!("../../../book/src/wiener.md")]
pub mod wiener {}
#[doc = include_str!("../../../book/src/classical-limit.md")]
pub mod classical_limit {}
#[doc = include_str!("../../../book/src/rotsym.md")]
pub mod rotsym {}
#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    // every chapter in SUMMARY.md has a module above
    #[test]
    fn summary_chapters_are_included() {
        let summary = include_str!("../../../book/src/SUMMARY.md");
        let lib = include_str!("lib.rs");
        let chapters: BTreeSet<&str> = summary
            .split(['(', ')'])
            .filter(|s| s.ends_with(".md"))
            .collect();
        assert_eq!(chapters.len(), 7);
        for c in chapters {
            assert!(
                lib.contains(&format!("book/src/{c}\")")),
                "{c} is not compiled"
            );
        }
    }
}
