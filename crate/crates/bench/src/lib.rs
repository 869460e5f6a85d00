//! Fixtures shared by the criterion benchmarks.

use cocktail_core::{make_state, DesignSpace, DesignWeights, InformationState, SpaceFamily};

/// A builtin space together with its uniform starting state.
pub fn uniform_fixture(family: SpaceFamily, size: usize) -> (DesignSpace, DesignWeights) {
    let space = family.build(size).expect("builtin sizes are valid");
    let weights = DesignWeights::uniform(space.len());
    (space, weights)
}

pub fn state<'s>(space: &'s DesignSpace, weights: &DesignWeights) -> InformationState<'s> {
    make_state(space, weights.clone()).expect("uniform designs are nonsingular")
}
