use std::fmt;

use serde::{Deserialize, Serialize};

use super::DrillPlan;

/// Spindle must reach this fraction of the drilling speed before drilling.
pub const SPIN_UP_FRACTION: f64 = 0.95;
/// Spindle must drop below this multiple of the retract speed before
/// retracting.
pub const SPIN_DOWN_FRACTION: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Home,
    Aligning,
    SpinUp,
    StraightDrill,
    CurvedDrill,
    SpinDown,
    RetractCurved,
    RetractStraight,
    ReturnHome,
    Done,
    Faulted,
}

impl Phase {
    pub const ORDER: [Phase; 10] = [
        Phase::Home,
        Phase::Aligning,
        Phase::SpinUp,
        Phase::StraightDrill,
        Phase::CurvedDrill,
        Phase::SpinDown,
        Phase::RetractCurved,
        Phase::RetractStraight,
        Phase::ReturnHome,
        Phase::Done,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Phase::Home => "home",
            Phase::Aligning => "aligning",
            Phase::SpinUp => "spin_up",
            Phase::StraightDrill => "straight_drill",
            Phase::CurvedDrill => "curved_drill",
            Phase::SpinDown => "spin_down",
            Phase::RetractCurved => "retract_curved",
            Phase::RetractStraight => "retract_straight",
            Phase::ReturnHome => "return_home",
            Phase::Done => "done",
            Phase::Faulted => "faulted",
        }
    }

    /// Travel covered within the phase (mm); zero for stationary phases.
    pub fn length(&self, plan: &DrillPlan) -> f64 {
        match self {
            Phase::StraightDrill | Phase::RetractStraight => plan.straight_travel,
            Phase::CurvedDrill | Phase::RetractCurved => plan.arc_length,
            _ => 0.0,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    Arrived,
    /// Spindle reports its measured speed (rpm).
    AtSpeed(f64),
    PhaseComplete,
    Fault,
    Reset,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcedureState {
    pub phase: Phase,
    /// mm travelled within the current phase.
    pub progress: f64,
    pub spindle_rpm: f64,
}

impl Default for ProcedureState {
    fn default() -> Self {
        ProcedureState {
            phase: Phase::Home,
            progress: 0.0,
            spindle_rpm: 0.0,
        }
    }
}

/// A refused transition; the state is returned unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejected {
    pub state: ProcedureState,
    pub event: Event,
    pub reason: String,
}

impl fmt::Display for Rejected {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} rejected in {}: {}", self.event, self.state.phase, self.reason)
    }
}

impl std::error::Error for Rejected {}

/// Pure transition function of the drilling procedure.
///
/// `Home → Aligning → SpinUp → StraightDrill → CurvedDrill → SpinDown →
/// RetractCurved → RetractStraight → ReturnHome → Done`. A fault from any
/// phase leads to `Faulted`, which only `Reset` leaves; `Reset` is also
/// accepted in `Done`.
pub fn step_procedure(
    plan: &DrillPlan,
    state: &ProcedureState,
    event: Event,
) -> Result<ProcedureState, Rejected> {
    use Phase::*;
    let reject = |reason: String| Rejected {
        state: *state,
        event,
        reason,
    };
    let enter = |phase: Phase, rpm: f64| ProcedureState {
        phase,
        progress: 0.0,
        spindle_rpm: rpm,
    };
    let rpm = state.spindle_rpm;
    match (state.phase, event) {
        (Faulted, Event::Reset) | (Done, Event::Reset) => Ok(ProcedureState::default()),
        (Faulted, Event::Fault) => Ok(*state),
        (Faulted, _) => Err(reject("procedure is faulted; reset required".into())),
        (_, Event::Fault) => Ok(ProcedureState {
            phase: Faulted,
            ..*state
        }),
        (Home, Event::PhaseComplete) => Ok(enter(Aligning, 0.0)),
        (Aligning, Event::Arrived) => Ok(enter(SpinUp, rpm)),
        (SpinUp, Event::AtSpeed(measured)) => {
            if measured >= SPIN_UP_FRACTION * plan.drill_rpm {
                Ok(enter(StraightDrill, measured))
            } else {
                Err(reject(format!(
                    "spindle at {measured} rpm, need at least {}",
                    SPIN_UP_FRACTION * plan.drill_rpm
                )))
            }
        }
        (StraightDrill, Event::PhaseComplete) => Ok(enter(CurvedDrill, rpm)),
        (CurvedDrill, Event::PhaseComplete) => Ok(enter(SpinDown, rpm)),
        (SpinDown, Event::AtSpeed(measured)) => {
            if measured <= SPIN_DOWN_FRACTION * plan.retract_rpm {
                Ok(enter(RetractCurved, measured))
            } else {
                Err(reject(format!(
                    "spindle at {measured} rpm, need at most {}",
                    SPIN_DOWN_FRACTION * plan.retract_rpm
                )))
            }
        }
        (RetractCurved, Event::PhaseComplete) => Ok(enter(RetractStraight, rpm)),
        (RetractStraight, Event::PhaseComplete) => Ok(enter(ReturnHome, rpm)),
        (ReturnHome, Event::Arrived) => Ok(enter(Done, 0.0)),
        (phase, ev) => Err(reject(format!("{ev:?} is not valid in {phase}"))),
    }
}

/// Single-owner driver around [`step_procedure`].
#[derive(Debug, Clone)]
pub struct Procedure {
    plan: DrillPlan,
    state: ProcedureState,
    history: Vec<Phase>,
}

impl Procedure {
    pub fn new(plan: DrillPlan) -> Self {
        Procedure {
            plan,
            state: ProcedureState::default(),
            history: vec![Phase::Home],
        }
    }

    pub fn state(&self) -> &ProcedureState {
        &self.state
    }

    /// Phases entered so far, starting with `Home`.
    pub fn history(&self) -> &[Phase] {
        &self.history
    }

    pub fn step(&mut self, event: Event) -> Result<Phase, Rejected> {
        let next = step_procedure(&self.plan, &self.state, event)?;
        if next.phase != self.state.phase {
            self.history.push(next.phase);
        }
        self.state = next;
        Ok(next.phase)
    }

    /// Records travel within the current phase, clamped to its length.
    pub fn advance(&mut self, mm: f64) {
        let len = self.state.phase.length(&self.plan);
        self.state.progress = (self.state.progress + mm.max(0.0)).min(len);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::se3::Transform;

    fn plan() -> DrillPlan {
        DrillPlan::new(Transform::identity())
    }

    fn happy_path(plan: &DrillPlan) -> Vec<Event> {
        vec![
            Event::PhaseComplete,
            Event::Arrived,
            Event::AtSpeed(plan.drill_rpm),
            Event::PhaseComplete,
            Event::PhaseComplete,
            Event::AtSpeed(plan.retract_rpm),
            Event::PhaseComplete,
            Event::PhaseComplete,
            Event::Arrived,
        ]
    }

    #[test]
    fn home_rejects_arrived() {
        let p = plan();
        let s = ProcedureState::default();
        let r = step_procedure(&p, &s, Event::Arrived).unwrap_err();
        assert_eq!(r.state, s);
    }

    #[test]
    fn happy_path_reaches_done() {
        let p = plan();
        let mut proc_ = Procedure::new(p);
        for e in happy_path(&p) {
            proc_.step(e).unwrap();
        }
        assert_eq!(proc_.state().phase, Phase::Done);
        assert_eq!(proc_.history(), &Phase::ORDER);
    }

    #[test]
    fn fault_from_curved_drill() {
        let p = plan();
        let s = ProcedureState {
            phase: Phase::CurvedDrill,
            progress: 10.0,
            spindle_rpm: 8250.0,
        };
        let f = step_procedure(&p, &s, Event::Fault).unwrap();
        assert_eq!(f.phase, Phase::Faulted);
        assert!(step_procedure(&p, &f, Event::PhaseComplete).is_err());
        assert_eq!(step_procedure(&p, &f, Event::Reset).unwrap().phase, Phase::Home);
    }

    #[test]
    fn spindle_guards() {
        let p = plan();
        let spin_up = ProcedureState {
            phase: Phase::SpinUp,
            ..Default::default()
        };
        assert!(step_procedure(&p, &spin_up, Event::AtSpeed(7000.0)).is_err());
        assert_eq!(
            step_procedure(&p, &spin_up, Event::AtSpeed(0.95 * 8250.0))
                .unwrap()
                .phase,
            Phase::StraightDrill
        );
        let spin_down = ProcedureState {
            phase: Phase::SpinDown,
            spindle_rpm: 8250.0,
            ..Default::default()
        };
        assert!(step_procedure(&p, &spin_down, Event::AtSpeed(1200.0)).is_err());
        assert_eq!(
            step_procedure(&p, &spin_down, Event::AtSpeed(1050.0))
                .unwrap()
                .phase,
            Phase::RetractCurved
        );
    }

    #[test]
    fn progress_is_clamped() {
        let p = plan();
        let mut proc_ = Procedure::new(p);
        for e in &happy_path(&p)[..3] {
            proc_.step(*e).unwrap();
        }
        assert_eq!(proc_.state().phase, Phase::StraightDrill);
        proc_.advance(10.0);
        proc_.advance(10.0);
        assert_eq!(proc_.state().progress, 18.0);
        proc_.step(Event::PhaseComplete).unwrap();
        assert_eq!(proc_.state().progress, 0.0);
    }
}
