pub mod belief;
pub mod experiments;
pub mod table;
pub mod error;
pub mod game;
pub mod io;
pub mod lp;
pub mod selection;
pub mod static_eq;
pub mod tables;
pub mod dynamic;
pub mod pbne;
pub mod te;
