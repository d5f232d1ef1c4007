#![no_std]

extern crate alloc;

pub mod deps;
pub mod diagnosis;
pub mod interp;
pub mod lang;
pub mod logic;
pub mod obs;
pub mod planner;
pub mod slicer;
pub mod session;
