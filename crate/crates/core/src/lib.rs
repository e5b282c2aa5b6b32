//! Planning toolkit for O-RAN radio unit placement, TWDM-PON front/mid-haul
//! design and DU/CU placement on access-edge servers.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assoc;
pub mod cost;
pub mod deploy;
pub mod error;
pub mod lagrangian;
pub mod models;
pub mod report;
pub mod scenario;

pub use error::{Error, Result};
