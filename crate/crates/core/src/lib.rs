//! Monocular relative pose estimation from beacon corners.
//!
//! The pipeline for one frame:
//!
//! 1. project the known beacon positions at the current pose estimate
//!    ([`geometry`]),
//! 2. extract corners from the image's value channel with Harris, SUSAN or
//!    FAST ([`image`], [`detectors`]),
//! 3. pair projections and corners by mutual nearest neighbour and drop
//!    gross matching errors ([`correspondence`]),
//! 4. refine the pose with Levenberg-Marquardt on the reprojection error
//!    ([`solver`]).
//!
//! [`scenegen`] renders synthetic beacon frames with known ground truth and
//! [`harness`] runs whole approach trajectories and writes comparison reports.

pub mod correspondence;
pub mod detectors;
pub mod geometry;
pub mod harness;
pub mod image;
pub mod scenegen;
pub mod solver;

pub use correspondence::{eliminate_gross_errors, mutual_nearest_match, MatchSet, MatchedPair};
pub use detectors::{
    detect, fast_detect, harris_detect, non_max_suppress, susan_detect, Corner, DetectError, DetectorConfig,
    DetectorKind, FastConfig, HarrisConfig, SusanConfig, SusanMask,
};
pub use geometry::{
    extrinsic_from_pose, intrinsics_from_fov, kc10_pfps, project_point, project_visible_set, rotation_about_axis,
    Axis, CameraIntrinsics, FeaturePoint3D, GeometryError, PixelPoint, PoseVector, RigidTransform,
};
pub use harness::{run_frame, run_trajectory, summarize, FrameResult, FrameStatus, RunConfig};
pub use image::{read_image, v_channel, write_image, AnyImage, GrayImage, ImageError, RgbImage};
pub use scenegen::{gen_trajectory, render_frame, SceneConfig, TrajectoryConfig};
pub use solver::{initial_pose, lm_solve, PoseEstimate, SolveError, SolverConfig};
