//! Dimension theory toolkit for planar self-affine sets.

pub mod diagnostics;
pub mod domination;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod presets;
pub mod pressure;
pub mod render;
pub mod slices;
pub mod symbolic;
pub mod system;
pub mod transfer;

pub use diagnostics::{CheckReport, Verdict};
pub use domination::{DominConstants, DominationCertificate};
pub use error::{Error, Result};
pub use geometry::Polygon;
pub use linalg::{Matrix2, Multicone, ProjInterval, ProjPoint, Vec2};
pub use presets::Preset;
pub use slices::{ContentEstimate, SliceQuery};
pub use symbolic::{InfiniteWord, StoppingSection, Word};
pub use system::{AffineMap, IfsSystem, StructureTag};
pub use transfer::{KaenmakiApprox, KaenmakiMeasure, TransferOperator};
