use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ctsdr_core::calibration::{
    fit_plane, fit_plane_toward, hand_eye_calibrate_with, pivot_calibrate, HandEyeOptions,
    HandEyePair, PivotSample,
};
use ctsdr_core::ctsdr::{plan_waypoints, DrillPlan, SteeringGuide};
use ctsdr_core::frame_graph::{build_entry_pose, EntryGoal};
use ctsdr_core::io::{self, RobotModelFile};
use ctsdr_core::kinematics::{forward_kinematics, JointVector, RobotModel, DOF};
use ctsdr_core::se3::{Transform, Vec3};
use ctsdr_core::sim::{
    self, aggregate, run_trials, GroundTruth, NoiseModel, SimConfig, TrialReport,
};

/// Kinematics, calibration, planning and simulation for the arm-mounted
/// steerable drill. Lengths in mm, angles in degrees.
#[derive(Parser)]
#[command(name = "ctsdr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// End-effector pose for a joint configuration.
    Fk {
        /// Robot model JSON; the bundled arm when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Seven joint angles in degrees, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        theta: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Tool tip offset and pivot point from a pose log.
    PivotCalib {
        #[arg(long)]
        poses: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve AX = ZB from two row-aligned pose logs.
    HandeyeCalib {
        /// Tracker-side poses A_i.
        #[arg(long)]
        a: PathBuf,
        /// Robot-side poses B_i.
        #[arg(long)]
        b: PathBuf,
        /// Run the Gauss-Newton refinement after the linear solve.
        #[arg(long)]
        refine: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Least-squares plane through digitized points.
    FitPlane {
        /// CSV with header x,y,z.
        #[arg(long)]
        points: PathBuf,
        /// Point the normal is oriented toward (default: origin).
        #[arg(long, allow_hyphen_values = true)]
        toward: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build the entry pose and drilling plan; writes the plan JSON and a
    /// waypoint CSV.
    Plan {
        #[arg(long, allow_hyphen_values = true)]
        entry: String,
        /// Outward face normal.
        #[arg(long, allow_hyphen_values = true)]
        normal: String,
        /// Desired tool -Y direction at entry (default: world -Y in the face plane).
        #[arg(long, allow_hyphen_values = true)]
        heading: Option<String>,
        #[arg(long, default_value_t = ctsdr_core::ctsdr::DEFAULT_RADIUS)]
        radius: f64,
        #[arg(long, default_value_t = EntryGoal::DEFAULT_STANDOFF)]
        standoff: f64,
        /// Straight drilling depth past the face.
        #[arg(long, default_value_t = 13.0)]
        straight: f64,
        #[arg(long, default_value_t = 35.0)]
        arc: f64,
        /// Tool tip in the end-effector frame.
        #[arg(long, allow_hyphen_values = true, default_value = "187.5,1.5,42")]
        tip: String,
        /// Maximum waypoint spacing (mm).
        #[arg(long, default_value_t = 1.0)]
        step: f64,
        /// Waypoint CSV path (default: next to --output).
        #[arg(long)]
        waypoints: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo trials of the full calibrate-align-drill pipeline.
    Simulate {
        /// Specimen mount angle(s) in degrees.
        #[arg(long, value_enum, num_args = 1.., required = true)]
        angle: Vec<MountAngle>,
        #[arg(long, default_value_t = 0.25)]
        noise_pos: f64,
        #[arg(long, default_value_t = 0.05)]
        noise_rot: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-trial CSV path (default: next to --output; omitted when
        /// neither is given).
        #[arg(long)]
        trials_csv: Option<PathBuf>,
        /// Summary JSON path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write synthetic datasets with a ground-truth sidecar.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        #[arg(long, value_enum, default_value = "30")]
        angle: MountAngle,
        #[arg(long, default_value_t = 15)]
        count: usize,
        #[arg(long, default_value_t = 0.0)]
        noise_pos: f64,
        #[arg(long, default_value_t = 0.0)]
        noise_rot: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the generated files.
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MountAngle {
    #[value(name = "0")]
    Flat,
    #[value(name = "30")]
    Thirty,
    #[value(name = "60")]
    Sixty,
}

impl MountAngle {
    fn degrees(self) -> f64 {
        match self {
            MountAngle::Flat => 0.0,
            MountAngle::Thirty => 30.0,
            MountAngle::Sixty => 60.0,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Pivot,
    Handeye,
    Face,
}

fn parse_list(text: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let vals = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("{what}: bad number {s:?}")))
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != n {
        bail!(ctsdr_core::Error::Format(format!(
            "{what}: expected {n} values, got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn parse_vec3(text: &str, what: &str) -> Result<Vec3> {
    let v = parse_list(text, 3, what)?;
    Ok(Vec3::new(v[0], v[1], v[2]))
}

fn emit_json<T: Serialize + ?Sized>(output: Option<&Path>, value: &T) -> Result<()> {
    io::emit(output, &io::to_json_string(value)?)?;
    Ok(())
}

/// `dir/name.json` becomes `dir/name.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

#[derive(Serialize, Deserialize)]
struct PlanOutput {
    goal: EntryGoal,
    plan: DrillPlan,
    ee_t_tip: Transform,
    waypoint_count: usize,
}

#[derive(Serialize)]
struct HandEyeTruth {
    mount_angle: f64,
    noise: NoiseModel,
    x: Transform,
    z: Transform,
}

#[derive(Serialize)]
struct PivotTruth {
    noise: NoiseModel,
    x_tip: [f64; 3],
}

#[derive(Serialize)]
struct FaceTruth {
    mount_angle: f64,
    noise: NoiseModel,
    normal: [f64; 3],
    entry_point: [f64; 3],
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fk { model, theta, output } => {
            let model = match model {
                Some(p) => RobotModelFile::load(&p)
                    .and_then(|f| f.to_model())
                    .with_context(|| format!("loading {}", p.display()))?,
                None => RobotModel::default_arm(),
            };
            let deg: [f64; DOF] = parse_list(&theta, DOF, "theta")?.try_into().unwrap();
            let q = JointVector::from_degrees(deg);
            model.check_limits(&q)?;
            emit_json(output.as_deref(), &forward_kinematics(&model, &q))
        }
        Command::PivotCalib { poses, output } => {
            let samples: Vec<PivotSample> = io::read_pose_log(&poses)?
                .into_iter()
                .map(|r| r.pose.into())
                .collect();
            emit_json(output.as_deref(), &pivot_calibrate(&samples)?)
        }
        Command::HandeyeCalib { a, b, refine, output } => {
            let a = io::read_pose_log(&a)?;
            let b = io::read_pose_log(&b)?;
            if a.len() != b.len() {
                bail!(ctsdr_core::Error::Format(format!(
                    "pose logs differ in length: {} vs {}",
                    a.len(),
                    b.len()
                )));
            }
            let pairs: Vec<HandEyePair> = a
                .iter()
                .zip(&b)
                .map(|(a, b)| HandEyePair { a: a.pose, b: b.pose })
                .collect();
            let opts = HandEyeOptions {
                refine,
                ..Default::default()
            };
            emit_json(output.as_deref(), &hand_eye_calibrate_with(&pairs, &opts)?)
        }
        Command::FitPlane { points, toward, output } => {
            let pts = io::read_points(&points)?;
            let plane = match toward {
                Some(t) => fit_plane_toward(&pts, &parse_vec3(&t, "toward")?)?,
                None => fit_plane(&pts)?,
            };
            emit_json(output.as_deref(), &plane)
        }
        Command::Plan {
            entry,
            normal,
            heading,
            radius,
            standoff,
            straight,
            arc,
            tip,
            step,
            waypoints,
            output,
        } => {
            let entry = parse_vec3(&entry, "entry")?;
            let normal = parse_vec3(&normal, "normal")?;
            let mut goal = EntryGoal::with_default_heading(entry, normal, standoff)?;
            if let Some(h) = heading {
                goal.bend_heading = parse_vec3(&h, "heading")?.into();
            }
            let mut plan = DrillPlan::with_standoff(build_entry_pose(&goal)?, standoff);
            plan.straight_travel = straight + standoff;
            plan.arc_length = arc;
            plan.guide = SteeringGuide { radius };
            let ee_t_tip = Transform::from_translation(parse_vec3(&tip, "tip")?);
            let wps = plan_waypoints(&plan, &ee_t_tip, step)?;
            let csv_path = waypoints.or_else(|| output.as_deref().map(|p| sibling(p, "waypoints.csv")));
            if let Some(p) = &csv_path {
                fs::write(p, io::waypoints_to_string(&wps)?)?;
            }
            emit_json(
                output.as_deref(),
                &PlanOutput {
                    goal,
                    plan,
                    ee_t_tip,
                    waypoint_count: wps.len(),
                },
            )
        }
        Command::Simulate {
            angle,
            noise_pos,
            noise_rot,
            trials,
            seed,
            trials_csv,
            output,
        } => {
            if trials == 0 {
                bail!(ctsdr_core::Error::OutOfRange("--trials must be at least 1".into()));
            }
            let noise = NoiseModel::new(noise_pos, noise_rot, seed)?;
            let cfg = SimConfig::default_arm();
            let plan = DrillPlan::new(Transform::identity());
            let mut reports: Vec<TrialReport> = Vec::new();
            for a in angle {
                let gt = GroundTruth::new(a.degrees())?;
                reports.extend(run_trials(&gt, &noise, &plan, trials, &cfg)?);
            }
            let csv_path = trials_csv.or_else(|| output.as_deref().map(|p| sibling(p, "trials.csv")));
            if let Some(p) = &csv_path {
                fs::write(p, io::trials_to_string(&reports)?)?;
            }
            emit_json(output.as_deref(), &aggregate(&reports, plan.guide.radius))
        }
        Command::Synth {
            kind,
            angle,
            count,
            noise_pos,
            noise_rot,
            seed,
            output,
        } => {
            let noise = NoiseModel::new(noise_pos, noise_rot, seed)?;
            let gt = GroundTruth::new(angle.degrees())?;
            fs::create_dir_all(&output)?;
            match kind {
                SynthKind::Pivot => {
                    let poses: Vec<Transform> = sim::synth_pivot_dataset(&gt, count, &noise)
                        .iter()
                        .map(|s| Transform::new(s.rotation, s.position))
                        .collect();
                    io::write_pose_log(output.join("pivot.csv"), &io::pose_records("robot_ee", &poses))?;
                    io::write_json(
                        output.join("pivot_truth.json"),
                        &PivotTruth {
                            noise,
                            x_tip: gt.tip_true,
                        },
                    )?;
                }
                SynthKind::Handeye => {
                    let cfg = SimConfig::default_arm();
                    let configs = sim::handeye_joint_configs(&cfg.model, &cfg.home_config, count, seed);
                    let pairs = sim::synth_handeye_dataset(&gt, &configs, &cfg.model, &noise);
                    let a: Vec<Transform> = pairs.iter().map(|p| p.a).collect();
                    let b: Vec<Transform> = pairs.iter().map(|p| p.b).collect();
                    io::write_pose_log(output.join("a.csv"), &io::pose_records("tracker_tool", &a))?;
                    io::write_pose_log(output.join("b.csv"), &io::pose_records("robot_ee", &b))?;
                    io::write_json(
                        output.join("truth.json"),
                        &HandEyeTruth {
                            mount_angle: gt.mount_angle,
                            noise,
                            x: gt.x_true,
                            z: gt.z_true,
                        },
                    )?;
                }
                SynthKind::Face => {
                    let pts = sim::synth_digitizer_points(&gt, (count.max(2), (count * 2 / 3).max(2)), &noise);
                    io::write_points(output.join("face.csv"), &pts)?;
                    io::write_json(
                        output.join("face_truth.json"),
                        &FaceTruth {
                            mount_angle: gt.mount_angle,
                            noise,
                            normal: gt.face_normal().into(),
                            entry_point: gt.entry_point().into(),
                        },
                    )?;
                }
            }
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    message: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let core = err.chain().find_map(|e| e.downcast_ref::<ctsdr_core::Error>());
            let report = ErrorReport {
                error: core.map_or("error", |e| e.kind()),
                message: format!("{err:#}"),
            };
            eprintln!("{}", serde_json::to_string(&report).unwrap_or_else(|_| report.message.clone()));
            match core {
                Some(e) if e.is_degenerate() => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
