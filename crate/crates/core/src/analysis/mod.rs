//! Stage and total complexity, flow conditioning and scaling fits.

mod complexity;
mod condition;
mod scaling;

pub use complexity::{
    exact_sqrt, stage_complexity, subroutine_stage_complexity, subroutine_value, total_complexity, ComplexityReport,
    StageRow, SubroutineRow,
};
pub use condition::{condition_flow, condition_flows, Conditioning};
pub use scaling::{canonical_instance, scaling_report, slope, table_specialities, Monomial, RRule, ScalingPoint, ScalingReport, ScalingSpec, StageFit};
