pub mod conitope;
pub mod engine;
pub mod error;
pub mod io;
pub mod lift;
pub mod matrix;
pub mod sdp;
pub mod tol;
