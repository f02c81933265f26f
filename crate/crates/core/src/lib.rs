pub mod analysis;
pub mod circuit;
pub mod clifford;
pub mod error;
pub mod experiment;
pub mod gf2;
pub mod lattice;
pub mod oracle;
pub mod pauli;
pub mod plot;
pub mod report;
pub mod run;
pub mod seeding;
pub mod stabilizer;
pub mod validate;
