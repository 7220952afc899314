//! Kinematics, calibration and trajectory toolkit for an arm-mounted
//! concentric tube steerable drill, with a synthetic simulation harness.
//!
//! Units are millimetres and radians unless a field says otherwise.

pub mod calibration;
pub mod ctsdr;
pub mod error;
pub mod frame_graph;
pub mod io;
pub mod kinematics;
pub mod se3;
pub mod sim;

pub use calibration::{
    fit_plane, hand_eye_calibrate, pivot_calibrate, HandEyePair, HandEyeResult, PivotResult,
    PivotSample, Plane,
};
pub use ctsdr::{plan_waypoints, DrillPlan, Phase, ProcedureState, Waypoint};
pub use error::{Error, Result};
pub use frame_graph::{build_entry_pose, EntryGoal, FrameGraph, FrameId};
pub use kinematics::{forward_kinematics, solve_ik, space_jacobian, JointVector, RobotModel};
pub use se3::{Rotation, ScrewAxis, Transform, Vec3};
