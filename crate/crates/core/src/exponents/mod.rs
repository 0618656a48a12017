//! Liu–Hughes error exponents, source reliability and the joint
//! source-channel exponents built from them.

mod ecthx;
mod joint;
mod lh;
mod solver;
mod source;

pub use lh::{exponent_lh, exponent_x_lh, exponent_xy_lh, exponent_y_lh, BracketCurve, LhExponent, LhProfile, PROFILE_POINTS};
pub use solver::{minimize_over_vlh, Bracket, ExponentResult, Objective, SolverConfig, VlhProblem};
pub use source::source_reliability;
pub use joint::{
    block_sizes, ej0_exponent, ej_exponent, equivalent_form_ej0, es_lh_exponent, proposition1_check, source_reliability_on,
    AuxConfig, AuxExponentTable, BestConstant, EquivalentFormReport, JsccAnalysis, JsccExponent, PairCompositionMap,
    Proposition1Report, RateGrid, RateToCompositionMap, DEFAULT_GRID_POINTS, WITNESS_K,
};
pub use ecthx::{
    cthx_terms, ecthx_exponent, mixture, v_star, v_star_star, CthxTerms, EcthxConfig, EcthxResult, TildeStructure, TILDE_U,
    TILDE_X, TILDE_XT, TILDE_Y, TILDE_Z,
};
