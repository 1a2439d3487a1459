//! Jordan sets as box unions, cells, quantizers and their moments.

mod cell;
mod jordan;
mod quantizer;

pub use cell::{compensating_offset, Cell, CellPiece};
pub use jordan::{BoxIndex, HalfOpenBox, JordanSet};
pub use quantizer::Quantizer;
