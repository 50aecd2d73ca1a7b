pub mod binary;
pub mod corpus;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod multiclass;
pub mod oracle;
pub mod state;
