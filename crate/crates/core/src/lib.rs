pub mod analysis;
pub mod cli;
pub mod fixtures;
pub mod formulation;
pub mod grid;
pub mod milp;
pub mod network;
pub mod oracle;
