//! File formats: robot model JSON, pose-log and point CSVs, and a JSON
//! writer that prints every float with 17 significant digits.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ctsdr::Waypoint;
use crate::error::{Error, Result};
use crate::kinematics::{make_screw_axis, RobotModel};
use crate::se3::{project_to_rotation, Mat3, Rotation, Transform, Vec3};
use crate::sim::TrialReport;

pub const MODEL_UNITS: &str = "mm_rad";
/// Rotation validity tolerance applied to pose logs before re-projection.
pub const POSE_LOG_TOL: f64 = 1e-6;

pub const POSE_LOG_HEADER: [&str; 14] = [
    "idx", "frame", "r00", "r01", "r02", "r10", "r11", "r12", "r20", "r21", "r22", "tx", "ty", "tz",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub w: [f64; 3],
    pub q: [f64; 3],
    pub h: f64,
}

/// On-disk robot description. Lengths are mm, angles rad.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotModelFile {
    pub units: String,
    pub joints: Vec<JointSpec>,
    pub home: Transform,
    pub limits: Vec<[f64; 2]>,
}

impl RobotModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: RobotModelFile = serde_json::from_str(text)?;
        if file.units != MODEL_UNITS {
            return Err(Error::InvalidModel(format!(
                "units must be \"{MODEL_UNITS}\", got \"{}\"",
                file.units
            )));
        }
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_model(&self) -> Result<RobotModel> {
        if self.units != MODEL_UNITS {
            return Err(Error::InvalidModel(format!("unsupported units \"{}\"", self.units)));
        }
        let axes = self
            .joints
            .iter()
            .map(|j| make_screw_axis(j.w.into(), j.q.into(), j.h))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::InvalidModel(e.to_string()))?;
        let limits = self.limits.iter().map(|l| (l[0], l[1])).collect();
        RobotModel::new(axes, self.home, limits)
    }

    pub fn from_model(model: &RobotModel) -> Self {
        RobotModelFile {
            units: MODEL_UNITS.to_string(),
            joints: model
                .axes()
                .iter()
                .map(|s| JointSpec {
                    w: s.w.into(),
                    q: s.point_on_axis().into(),
                    h: s.pitch(),
                })
                .collect(),
            home: *model.home(),
            limits: model.limits().iter().map(|&(lo, hi)| [lo, hi]).collect(),
        }
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    const PAD: &str = "  ";
    match v {
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => out.push_str(&u.to_string()),
            (_, Some(i), _) => out.push_str(&i.to_string()),
            (_, _, Some(f)) => out.push_str(&fmt_f64(f)),
            _ => out.push_str(&n.to_string()),
        },
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(|i| !i.is_array() && !i.is_object()) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_value(out, item, indent);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&PAD.repeat(indent + 1));
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&PAD.repeat(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                out.push_str(&PAD.repeat(indent + 1));
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(out, item, indent + 1);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&PAD.repeat(indent));
            out.push('}');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Pretty JSON with 17-significant-digit floats and a trailing newline.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    from_json_str(&fs::read_to_string(path)?)
}

/// One captured pose of a pose log.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseRecord {
    pub idx: usize,
    pub frame: String,
    pub pose: Transform,
}

fn parse_f64(field: &str, line: u64, column: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("line {line}: column {column}: bad number {field:?}")))
}

fn check_header(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Format(format!(
            "expected header {}, got {}",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

pub fn parse_pose_log<R: Read>(reader: R) -> Result<Vec<PoseRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    check_header(rdr.headers()?, &POSE_LOG_HEADER)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let idx = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: bad index {:?}", &record[0])))?;
        let mut nums = [0.0; 12];
        for (k, n) in nums.iter_mut().enumerate() {
            *n = parse_f64(&record[k + 2], line, POSE_LOG_HEADER[k + 2])?;
        }
        let m = Mat3::from_row_slice(&nums[..9]);
        Rotation::from_matrix_tol(m, POSE_LOG_TOL)
            .map_err(|e| Error::InvalidRotation(format!("line {line}: {e}")))?;
        let rotation = project_to_rotation(&m)?;
        out.push(PoseRecord {
            idx,
            frame: record[1].trim().to_string(),
            pose: Transform::new(rotation, Vec3::new(nums[9], nums[10], nums[11])),
        });
    }
    Ok(out)
}

pub fn read_pose_log(path: impl AsRef<Path>) -> Result<Vec<PoseRecord>> {
    parse_pose_log(fs::File::open(path)?)
}

pub fn pose_log_to_string(records: &[PoseRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(POSE_LOG_HEADER)?;
    for r in records {
        let mut row = vec![r.idx.to_string(), r.frame.clone()];
        row.extend(r.pose.rotation.to_row_major().iter().map(|&x| fmt_f64(x)));
        row.extend(r.pose.translation.iter().map(|&x| fmt_f64(x)));
        w.write_record(&row)?;
    }
    csv_to_string(w)
}

pub fn write_pose_log(path: impl AsRef<Path>, records: &[PoseRecord]) -> Result<()> {
    fs::write(path, pose_log_to_string(records)?)?;
    Ok(())
}

/// Pose log records for a sequence of poses in one frame.
pub fn pose_records(frame: &str, poses: &[Transform]) -> Vec<PoseRecord> {
    poses
        .iter()
        .enumerate()
        .map(|(idx, &pose)| PoseRecord {
            idx,
            frame: frame.to_string(),
            pose,
        })
        .collect()
}

pub fn parse_points<R: Read>(reader: R) -> Result<Vec<Vec3>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    check_header(rdr.headers()?, &["x", "y", "z"])?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::Format(format!("line {line}: expected 3 columns")));
        }
        out.push(Vec3::new(
            parse_f64(&record[0], line, "x")?,
            parse_f64(&record[1], line, "y")?,
            parse_f64(&record[2], line, "z")?,
        ));
    }
    Ok(out)
}

pub fn read_points(path: impl AsRef<Path>) -> Result<Vec<Vec3>> {
    parse_points(fs::File::open(path)?)
}

pub fn points_to_string(points: &[Vec3]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["x", "y", "z"])?;
    for p in points {
        w.write_record(p.iter().map(|&x| fmt_f64(x)))?;
    }
    csv_to_string(w)
}

pub fn write_points(path: impl AsRef<Path>, points: &[Vec3]) -> Result<()> {
    fs::write(path, points_to_string(points)?)?;
    Ok(())
}

fn pose_columns(prefix: &str) -> Vec<String> {
    POSE_LOG_HEADER[2..]
        .iter()
        .map(|c| format!("{prefix}_{c}"))
        .collect()
}

fn pose_fields(t: &Transform) -> impl Iterator<Item = String> {
    let r = t.rotation.to_row_major();
    let p: [f64; 3] = t.translation.into();
    r.into_iter().chain(p).map(fmt_f64)
}

pub fn waypoints_to_string(waypoints: &[Waypoint]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["time".to_string(), "phase".to_string(), "rpm".to_string()];
    header.extend(pose_columns("ee"));
    header.extend(pose_columns("tip"));
    w.write_record(&header)?;
    for wp in waypoints {
        let mut row = vec![fmt_f64(wp.time), wp.phase.name().to_string(), fmt_f64(wp.rpm)];
        row.extend(pose_fields(&wp.ee_target));
        row.extend(pose_fields(&wp.tip_target));
        w.write_record(&row)?;
    }
    csv_to_string(w)
}

pub const TRIAL_HEADER: [&str; 11] = [
    "seed",
    "mount_angle",
    "entry_position_error",
    "entry_offset_y",
    "entry_offset_z",
    "straight_length_measured",
    "straight_length_error",
    "rotation_goal",
    "rotation_commanded",
    "rotation_actual",
    "radius_measured",
];

pub fn trials_to_string(reports: &[TrialReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRIAL_HEADER)?;
    for r in reports {
        let mut row = vec![r.seed.to_string()];
        row.extend(
            [
                r.mount_angle,
                r.entry_position_error,
                r.entry_offset_y,
                r.entry_offset_z,
                r.straight_length_measured,
                r.straight_length_error,
                r.rotation_goal,
                r.rotation_commanded,
                r.rotation_actual,
                r.radius_measured,
            ]
            .map(fmt_f64),
        );
        w.write_record(&row)?;
    }
    csv_to_string(w)
}

pub fn parse_trials<R: Read>(reader: R) -> Result<Vec<TrialReport>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    check_header(rdr.headers()?, &TRIAL_HEADER)?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let seed = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("line {line}: bad seed {:?}", &record[0])))?;
        let mut v = [0.0; 10];
        for (k, x) in v.iter_mut().enumerate() {
            *x = parse_f64(&record[k + 1], line, TRIAL_HEADER[k + 1])?;
        }
        out.push(TrialReport {
            seed,
            mount_angle: v[0],
            entry_position_error: v[1],
            entry_offset_y: v[2],
            entry_offset_z: v[3],
            straight_length_measured: v[4],
            straight_length_error: v[5],
            rotation_goal: v[6],
            rotation_commanded: v[7],
            rotation_actual: v[8],
            radius_measured: v[9],
        });
    }
    Ok(out)
}

fn csv_to_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
}

/// Writes `text` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
