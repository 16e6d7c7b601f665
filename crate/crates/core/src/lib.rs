pub mod error;
pub mod model;
pub mod analytic;
pub mod liouville;
pub mod inference;
pub mod io;
pub mod figures;
pub mod validate;
pub mod cli;
