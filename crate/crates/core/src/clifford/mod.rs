//! Clifford group: Pauli algebra, tableaux, sampling and moment operators.

pub mod moments;
pub mod pauli;
pub mod synth;
pub mod tableau;

pub use pauli::Pauli;
pub use tableau::{brickwork_pairs, enumerate_clifford, generator_walk_step, sample_clifford, CliffordTableau};
pub use synth::synthesize_unitary;
pub use moments::{clifford_projector, CliffordProjector, ProjectorMethod};
