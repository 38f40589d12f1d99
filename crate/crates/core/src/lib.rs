pub mod corpus;
pub mod eval;
pub mod features;
pub mod svm;
pub mod ensemble;
pub mod remote;
pub mod vote;
