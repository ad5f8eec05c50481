#![allow(dead_code)]

pub mod ac;
pub mod ltl;
