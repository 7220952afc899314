//! Named coordinate frames of the drilling setup and the transforms between
//! them.
//!
//! An edge `(parent, child, T)` stores `T = parent_T_child`, the pose of the
//! child frame in the parent. The world frame is the robot base. The
//! calibrated robot-world/hand-eye pair uses the chain
//! `tracker_T_ndi · ndi_T_world = tracker_T_ee · ee_T_world`, i.e.
//! `X = ndi_T_world` and `Z = tracker_T_ee`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se3::{Rotation, Transform, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameId {
    World,
    RobotBase,
    RobotEe,
    SdrTip,
    NdiCamera,
    TrackerTool,
    DigitizerMarkers,
    DigitizerTip,
    Specimen,
}

impl FrameId {
    pub const ALL: [FrameId; 9] = [
        FrameId::World,
        FrameId::RobotBase,
        FrameId::RobotEe,
        FrameId::SdrTip,
        FrameId::NdiCamera,
        FrameId::TrackerTool,
        FrameId::DigitizerMarkers,
        FrameId::DigitizerTip,
        FrameId::Specimen,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FrameId::World => "world",
            FrameId::RobotBase => "robot_base",
            FrameId::RobotEe => "robot_ee",
            FrameId::SdrTip => "sdr_tip",
            FrameId::NdiCamera => "ndi_camera",
            FrameId::TrackerTool => "tracker_tool",
            FrameId::DigitizerMarkers => "digitizer_markers",
            FrameId::DigitizerTip => "digitizer_tip",
            FrameId::Specimen => "specimen",
        }
    }
}

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FrameId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FrameId::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Format(format!("unknown frame '{s}'")))
    }
}

/// Where an edge's transform came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeSource {
    Static,
    Fk,
    Tracked,
    Calibrated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub parent: FrameId,
    pub child: FrameId,
    pub transform: Transform,
    pub source: EdgeSource,
}

/// Tree of frames. Mutation is single-writer; `resolve` only reads.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct FrameGraph {
    edges: Vec<Edge>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    edges: Vec<Edge>,
}

impl TryFrom<GraphRepr> for FrameGraph {
    type Error = Error;
    fn try_from(r: GraphRepr) -> Result<Self> {
        let mut g = FrameGraph::new();
        for e in r.edges {
            g.add_edge(e.parent, e.child, e.transform, e.source)?;
        }
        Ok(g)
    }
}

impl From<FrameGraph> for GraphRepr {
    fn from(g: FrameGraph) -> Self {
        GraphRepr { edges: g.edges }
    }
}

impl FrameGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    fn find(&self, a: FrameId, b: FrameId) -> Option<usize> {
        self.edges
            .iter()
            .position(|e| (e.parent == a && e.child == b) || (e.parent == b && e.child == a))
    }

    /// Adds `parent_T_child`. Rejects duplicates in either direction and
    /// edges that would close a cycle.
    pub fn add_edge(
        &mut self,
        parent: FrameId,
        child: FrameId,
        transform: Transform,
        source: EdgeSource,
    ) -> Result<()> {
        if parent == child || self.find(parent, child).is_some() {
            return Err(Error::DuplicateEdge {
                parent: parent.to_string(),
                child: child.to_string(),
            });
        }
        if self.path(parent, child).is_some() {
            return Err(Error::AmbiguousPath(format!(
                "{parent} and {child} are already connected"
            )));
        }
        self.edges.push(Edge {
            parent,
            child,
            transform,
            source,
        });
        Ok(())
    }

    /// Replaces the transform between two frames, adding the edge if absent.
    pub fn set_edge(
        &mut self,
        parent: FrameId,
        child: FrameId,
        transform: Transform,
        source: EdgeSource,
    ) -> Result<()> {
        match self.find(parent, child) {
            Some(i) => {
                self.edges[i] = Edge {
                    parent,
                    child,
                    transform,
                    source,
                };
                Ok(())
            }
            None => self.add_edge(parent, child, transform, source),
        }
    }

    pub fn remove_edge(&mut self, a: FrameId, b: FrameId) -> Option<Edge> {
        self.find(a, b).map(|i| self.edges.remove(i))
    }

    pub fn contains(&self, f: FrameId) -> bool {
        self.edges.iter().any(|e| e.parent == f || e.child == f)
    }

    /// BFS over the undirected edge set; returns the sequence of frames.
    fn path(&self, from: FrameId, to: FrameId) -> Option<Vec<FrameId>> {
        if from == to {
            return Some(vec![from]);
        }
        let mut prev: HashMap<FrameId, FrameId> = HashMap::new();
        let mut seen = HashSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(u) = queue.pop_front() {
            for e in &self.edges {
                let v = if e.parent == u {
                    e.child
                } else if e.child == u {
                    e.parent
                } else {
                    continue;
                };
                if seen.insert(v) {
                    prev.insert(v, u);
                    if v == to {
                        let mut path = vec![to];
                        let mut cur = to;
                        while let Some(&p) = prev.get(&cur) {
                            path.push(p);
                            cur = p;
                        }
                        path.reverse();
                        return Some(path);
                    }
                    queue.push_back(v);
                }
            }
        }
        None
    }

    /// `from_T_to`: the pose of `to` expressed in `from`.
    pub fn resolve(&self, from: FrameId, to: FrameId) -> Result<Transform> {
        if from == to {
            return Ok(Transform::identity());
        }
        let path = self.path(from, to).ok_or_else(|| Error::NoPath {
            from: from.to_string(),
            to: to.to_string(),
        })?;
        let mut acc = Transform::identity();
        for w in path.windows(2) {
            let e = &self.edges[self.find(w[0], w[1]).expect("edge on path")];
            acc = if e.parent == w[0] {
                acc * e.transform
            } else {
                acc * e.transform.inverse()
            };
        }
        Ok(acc)
    }
}

/// Inputs for the drill entry pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntryGoal {
    /// Indicated entry point on the specimen face (mm, world).
    pub entry_point: [f64; 3],
    /// Outward unit normal of the face (world).
    pub surface_normal: [f64; 3],
    /// Desired direction of the tool's -Y axis at entry (world).
    pub bend_heading: [f64; 3],
    /// Approach offset along the outward normal (mm).
    pub standoff: f64,
}

impl EntryGoal {
    pub const DEFAULT_STANDOFF: f64 = 5.0;

    /// Uses world -Y projected into the face plane as the bend heading.
    pub fn with_default_heading(entry_point: Vec3, surface_normal: Vec3, standoff: f64) -> Result<Self> {
        let n = surface_normal
            .try_normalize(1e-12)
            .ok_or_else(|| Error::DegenerateGeometry("zero surface normal".into()))?;
        let down_y = -Vec3::y();
        let heading = down_y - n * down_y.dot(&n);
        if heading.norm() < 1e-9 {
            return Err(Error::UndefinedRoll);
        }
        Ok(EntryGoal {
            entry_point: entry_point.into(),
            surface_normal: n.into(),
            bend_heading: heading.normalize().into(),
            standoff,
        })
    }
}

/// Tool pose at the start of drilling.
///
/// The tool +X axis points into the face (`-normal`), -Y follows the bend
/// heading after removing its component along X, and `Z = X × Y`. The
/// origin is backed off the face by `standoff` along the outward normal.
pub fn build_entry_pose(goal: &EntryGoal) -> Result<Transform> {
    if !(goal.standoff >= 0.0 && goal.standoff.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "standoff must be non-negative, got {}",
            goal.standoff
        )));
    }
    let n = Vec3::from(goal.surface_normal)
        .try_normalize(1e-12)
        .ok_or_else(|| Error::DegenerateGeometry("zero surface normal".into()))?;
    let x = -n;
    let h = Vec3::from(goal.bend_heading);
    let lateral = h - x * h.dot(&x);
    if lateral.norm() < 1e-9 * h.norm().max(1.0) {
        return Err(Error::UndefinedRoll);
    }
    let y = -lateral.normalize();
    let z = x.cross(&y);
    let rotation = Rotation::from_matrix(nalgebra::Matrix3::from_columns(&[x, y, z]))?;
    Ok(Transform::new(
        rotation,
        Vec3::from(goal.entry_point) + n * goal.standoff,
    ))
}
