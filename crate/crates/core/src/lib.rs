pub mod bench;
pub mod cases;
pub mod cli;
pub mod greedy;
pub mod interp;
pub mod mesh_fem;
pub mod numerics;
pub mod rom;
pub mod snapshots_rb;
