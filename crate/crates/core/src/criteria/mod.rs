//! Recurrence and transience machinery: annulus crossing statistics and the
//! cut/merge series, envelope events, good-box fields with inter-box paths,
//! and rough-embedding constants.

mod annuli;
mod boxes;
mod envelopes;
mod series;

pub use annuli::{annulus_edge_stats, AnnulusRow, AnnulusStats};
pub use boxes::{
    alpha_d, alpha_dm, assign_vs_reference_vertices, beta_d, build_box_path_gabriel,
    build_box_path_vs, classify_good_boxes_gabriel, classify_good_boxes_vs,
    estimate_good_box_probability, gabriel_feasibility_window, gabriel_path_budget,
    sample_conditioned_gabriel_pair, verify_rough_embedding, BoxField, BoxPath,
    GabrielSegmentReport, GoodBoxParams, GoodBoxProbability, PathBudget, PathOutcome,
    RoughEmbeddingReport, DEFAULT_P_STAR,
};
pub use envelopes::{envelope_events, euler_crossing_check, EnvelopeConstants, EnvelopeRow};
pub use series::{recurrence_series, RecurrenceSeries, SeriesTerm};
