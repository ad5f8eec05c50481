pub mod corpus;
pub mod ltl;
pub mod rewrite;
pub mod slicer;
pub mod term;
pub mod webapp;
