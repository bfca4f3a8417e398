//! Floor-plan registration against partial occupancy maps, and a
//! deterministic grid simulator that navigates on the registered plan.
//!
//! The registration searches every room-subset variant of a corner-point
//! floor plan under the eight dihedral transforms, keeps the candidate with
//! the highest IoU against the preprocessed LiDAR mask, and recovers the
//! horizontal and vertical scale from the matched extents.

pub mod d4;
pub mod error;
pub mod floorplan;
pub mod geometry;
pub mod pgm;
pub mod raster;
pub mod registration;
pub mod simulator;
pub mod synth;

pub use d4::{d4_canonical, Flip, Rotation, D4};
pub use error::{Error, Result};
pub use floorplan::{enumerate_variants, parse_plan, render_variant, shared_walls, FloorPlan, PlanVariant, Room, RoomKind, SharedWall};
pub use geometry::{bounding_box, corner_points, shoelace_area, simplify_contour, Point, Polygon};
pub use raster::{BinaryMask, Cell, GrayImage, OccupancyGrid};
