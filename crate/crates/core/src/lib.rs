pub mod cli;
pub mod config;
pub mod conformal;
pub mod continuation;
pub mod dispersion;
pub mod field;
pub mod grid;
pub mod io;
pub mod linear_wave;
pub mod ode;
pub mod uniform_stream;
pub mod vorticity;
