//! The six reference scenarios. Each runs 6 s of virtual time with the
//! fault or operator event at 3 s, after every monitor has warmed up.

use super::scenario::{EventKind, ScenarioScript, ScriptEvent};
use super::Fault;
use crate::aggregation::Reason;
use crate::system_state::{OperatorEvent, VehicleState};
use crate::{path, DataValue, DiagnosticState};

pub const BUILTIN_NAMES: [&str; 6] = [
    "scenario_1",
    "scenario_2",
    "scenario_3",
    "scenario_4",
    "scenario_5",
    "scenario_6",
];

const T0: u64 = 3_000;
const DURATION: u64 = 6_000;

fn assert(t_ms: u64, group: &str, expected: DiagnosticState, deadline_ms: u64, reason: Option<Reason>) -> ScriptEvent {
    ScriptEvent::new(
        t_ms,
        EventKind::Assert {
            group: path!(group),
            expected,
            deadline_ms,
            reason,
        },
    )
}

fn inject(t_ms: u64, target: &str, fault: Fault) -> ScriptEvent {
    ScriptEvent::new(
        t_ms,
        EventKind::Inject {
            target: path!(target),
            fault,
        },
    )
}

fn script(name: &str, description: &str, initial_state: VehicleState, events: Vec<ScriptEvent>) -> ScenarioScript {
    ScenarioScript {
        name: name.into(),
        description: description.into(),
        initial_state,
        duration_ms: DURATION,
        strip_dependencies: false,
        events,
    }
}

fn lidar_outage_events(dependency_aware: bool) -> Vec<ScriptEvent> {
    use DiagnosticState::*;
    let mut events = vec![
        inject(T0, "/sensors/lidar_front", Fault::Outage),
        assert(T0, "/sensors", Error, 800, None),
    ];
    if dependency_aware {
        events.push(assert(T0, "/localization", Ignore, 800, Some(Reason::UpstreamError)));
        events.push(assert(T0, "/perception", Ignore, 800, Some(Reason::UpstreamError)));
    } else {
        events.push(assert(T0, "/localization", Error, 1_500, None));
        events.push(assert(T0, "/perception", Error, 1_500, None));
    }
    events
}

pub fn builtin_scenarios() -> Vec<ScenarioScript> {
    use DiagnosticState::*;
    let planner_outage = || inject(T0, "/planning/planner", Fault::Outage);
    vec![
        ScenarioScript {
            strip_dependencies: true,
            ..script(
                "scenario_1",
                "lidar outage evaluated without dependency edges",
                VehicleState::Localized,
                lidar_outage_events(false),
            )
        },
        script(
            "scenario_2",
            "lidar outage with dependency-aware evaluation",
            VehicleState::Localized,
            lidar_outage_events(true),
        ),
        script(
            "scenario_3",
            "localization fitness collapse",
            VehicleState::Localized,
            vec![
                assert(T0, "/sensors", Ok, 0, None),
                inject(
                    T0,
                    "/localization/ndt",
                    Fault::Value {
                        value: DataValue::Number(0.1),
                    },
                ),
                assert(T0, "/localization", Error, 100, None),
                assert(T0, "/perception", Ignore, 100, Some(Reason::UpstreamError)),
            ],
        ),
        script(
            "scenario_4",
            "planner outage while not Active",
            VehicleState::Localized,
            vec![
                assert(0, "/planning", Ignore, 0, Some(Reason::Gated)),
                planner_outage(),
                assert(T0, "/planning", Ignore, 0, Some(Reason::Gated)),
            ],
        ),
        script(
            "scenario_5",
            "mission clearance with a healthy planner",
            VehicleState::Localized,
            vec![
                assert(0, "/planning", Ignore, 0, Some(Reason::Gated)),
                ScriptEvent::new(
                    T0,
                    EventKind::OperatorEvent {
                        event: OperatorEvent::MissionWithClearance,
                    },
                ),
                assert(T0, "/planning", Ok, 100, Some(Reason::Nominal)),
            ],
        ),
        script(
            "scenario_6",
            "planner outage while Active",
            VehicleState::Active,
            vec![
                ScriptEvent::new(0, EventKind::SetSpeed { speed_mps: 5.0 }),
                planner_outage(),
                assert(T0, "/planning", Error, 800, None),
            ],
        ),
    ]
}

pub fn builtin_scenario(name: &str) -> Option<ScenarioScript> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_match_and_validate() {
        let all = builtin_scenarios();
        assert_eq!(all.iter().map(|s| s.name.as_str()).collect::<Vec<_>>(), BUILTIN_NAMES);
        for s in &all {
            s.validate().unwrap();
        }
        assert!(builtin_scenario("scenario_7").is_none());
    }
}
