//! File formats: PGM rasters in, binary fields, SVG and OBJ out, JSON shape and catalog files.

pub mod catalog;
pub mod field_file;
pub mod obj;
pub mod pgm;
pub mod shape_file;
pub mod svg;

pub use catalog::{load_catalog, read_catalog, write_catalog};
pub use field_file::{read_field, write_field, FIELD_MAGIC, FIELD_VERSION};
pub use obj::{cuboid_mesh, read_obj, write_obj};
pub use pgm::{read_raster_pgm, write_raster_pgm};
pub use shape_file::{OutlineFile, ShapeFile};
pub use svg::{write_svg, SvgFrame};
