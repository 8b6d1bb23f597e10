//! Spectral solver for the rotating stratified Boussinesq system in a
//! periodic channel with rigid lids, in primitive and generalized
//! potential vorticity form, together with its fast-rotation limit.

pub mod error;
pub mod field;
pub mod gpv;
pub mod grid;
pub mod harness;
pub mod helmholtz;
pub mod init;
pub mod integrate;
pub mod norms;
pub mod snapshot;
pub mod spectral;
pub mod state;
pub mod tendency;

pub use error::{Error, Result};
pub use field::{
    BoundaryField, CHVectorField, CScalarField, Elem, Field3, HVector, HVectorField, ScalarField, VProfile,
};
pub use grid::ChannelGrid;
pub use spectral::Channel;
pub use state::{DiagnosticsRecord, FastComponents, FastPair, GpvState, LimitState, PrimitiveState};
