//! SIC-POVM state tomography and mixed-state preparation.

pub mod prep;
pub mod tomography;

pub use prep::{prep_plan, prep_run, BranchOutput, PrepPlan, PrepReport};
pub use tomography::{
    project_to_density_matrix, tomo_pipeline, tomo_reconstruct, TomographyResult,
};
