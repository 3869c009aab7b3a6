#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod counterexample;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod num;
pub mod qns_engine;
pub mod quadrature;
pub mod radius_sets;
pub mod regions;
pub mod sampling;
