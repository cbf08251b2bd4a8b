//! Exact-arithmetic toolkit for principal minor problems: black-box PMAP
//! solving, read-once determinant learning, and principal minor equivalence
//! testing.

pub mod combinat;
pub mod cutfinder;
pub mod error;
pub mod field;
pub mod gen;
pub mod oracle;
pub mod matrix;
pub mod pmap;
pub mod pme;
pub mod reconstructor;
pub mod rod;
pub mod smallrecon;

pub use cutfinder::{
    find_cut_explicit, find_plausible_set, has_cut_bruteforce, minimal_plausible_set, satisfies_p,
    PlausibleSet,
};
pub use error::{Error, Result};
pub use field::{choose_prime, Field, FieldSpec, PrimeField, RationalField};
pub use gen::{
    banded_gap_pair, cycle_gap_pair, gen_planted_cut, gen_random_dense, gen_rod_instance,
    geometric_gap_pair, stream_rng, STREAM_GENERATION, STREAM_ISOLATION, STREAM_SHIFT,
};
pub use matrix::{AnyMatrix, CutWitness, Matrix};
pub use oracle::{PMOracle, PolyBox};
pub use pmap::{
    find_irreducible_blocks, recombine, solve_blackbox_pmap, solve_blackbox_pmap_run,
    PhaseTimings, PmapRun, SolveStats,
};
pub use pme::{
    dense_adjugate_shift, lagrange_combine_diagonals, nonzero_witness_minor, pme_bruteforce,
    pme_randomized, prop_r_adjugate_shift, test_pme, NonzeroGoal, PmeMethod, PmeVerdict,
    ShiftTarget,
};
pub use rod::{
    homogenize_box, isolate_monomial, learn_rod, lift_pmap_solution, pmap_shaped_box,
    pmap_to_rod_extract, reduce_rod_to_pmap, AnyRod, IsolationContext, RodInstance,
};
pub use reconstructor::{
    combine_across_cut, no_cut_sequence, reconstruct_no_cut, reconstruct_prop_r,
    reconstruct_prop_r_with_stats, verify_property_r, NoCutSequence, ReconStats,
};
pub use smallrecon::{family4, pme_upto4, recon2, recon3, submatrix_family, Family4, SubmatrixFamily};
