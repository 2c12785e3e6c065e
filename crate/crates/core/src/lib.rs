pub mod bench;
pub mod blocktext;
pub mod compat;
pub mod demo;
pub mod idl;
pub mod ir;
pub mod pipeline;
pub mod runtime;
pub mod testkit;
pub mod wire;
