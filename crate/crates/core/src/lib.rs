//! Modal transition systems and non-reducible modal transition systems:
//! modal refinement, NMTS refinement, strong bisimulation and bounded
//! analysis of implementation sets.

pub mod bisim;
pub mod coreach;
pub mod dot;
pub mod format;
pub mod fuzz;
pub mod impls;
pub mod model;
pub mod random;
pub mod refine;

pub use bisim::{are_bisimilar, bisimilar, canonical_key, minimize, BisimError, CanonicalKey};
pub use coreach::{coreachable, CoreachRelation};
pub use format::{parse_system, serialize, ParseError};
pub use impls::{
    impl_gap, implementations_upto, thorough_refines_bounded, EnumerationConfig, ImplementationSet, Strategy,
    ThoroughVerdict,
};
pub use model::{Lts, ModalSystem, Modality, ModelError, StateId, SystemDraft};
pub use refine::{
    is_nmts, modal_refines, nmts_refines, refines, refines_with_certificate, verify_relation, Certificate, Clause,
    RefineError, RefinementKind, StateRelation,
};
