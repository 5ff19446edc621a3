//! Surface and volume meshes, generators, file formats and fields.

mod field;
pub mod generate;
pub mod io;
mod surface;
mod volume;

pub use field::{BoundaryField, Field, FieldTag, VolumeField};
pub use generate::{shell_ball, solid_torus, unit_ball, unit_sphere};
pub use io::{load_surface_mesh, load_volume_mesh};
pub use surface::SurfaceMesh;
pub use volume::VolumeMesh;
