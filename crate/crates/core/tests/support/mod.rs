#![allow(dead_code)]

pub mod agents;
pub mod gen;
pub mod plans;
pub mod stub;
