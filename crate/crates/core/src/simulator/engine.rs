use std::collections::BTreeMap;
use std::path::PathBuf;

use super::stub::{ComponentStub, WorldSample};
use super::timeline::{ActionRecord, IncidentRecord, Notice, StateChangeRecord, Timeline};
use super::VirtualClock;
use crate::aggregation::{evaluate_graph, DiagnosticGraph, EvaluationSnapshot, Finding, LeafDecl};
use crate::bus::{Body, Bus, BusHealth, ChannelFilter, Command, Envelope, Subscription};
use crate::config::GraphConfig;
use crate::countermeasures::{decide_action, recorder_status, Action, CountermeasurePolicy, FlushOutcome, IncidentRecorder};
use crate::monitors::{secs_to_ms, Monitor};
use crate::system_state::{Transition, VehicleState, VehicleStateMachine};
use crate::{path, DiagnosticState, DiagnosticStatus, NamePath};

const TAP_CAPACITY: usize = 1 << 16;
const BUS_MAX_DROP_RATE_HZ: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub initial_state: VehicleState,
    /// Evaluate with every dependency edge removed.
    pub strip_dependencies: bool,
    pub incident_dir: Option<PathBuf>,
    /// Added to virtual time in incident file names.
    pub epoch_offset_ms: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            initial_state: VehicleState::Default,
            strip_dependencies: false,
            incident_dir: None,
            epoch_offset_ms: 0,
        }
    }
}

/// Stubs, monitors, evaluator and countermeasures stepped over one clock.
///
/// Each [`Simulation::step`] runs, in order: stub emission, delivery to
/// monitors, monitor steps, graph evaluation, action decision and incident
/// recording. Commands are applied between steps only.
pub struct Simulation {
    config: GraphConfig,
    graph: DiagnosticGraph,
    extra_leaves: Vec<LeafDecl>,
    policy: CountermeasurePolicy,
    clock: VirtualClock,
    bus: Bus,
    tap: Subscription,
    bus_health: BusHealth,
    stubs: Vec<ComponentStub>,
    monitors: Vec<Box<dyn Monitor>>,
    routes: BTreeMap<NamePath, Vec<usize>>,
    statuses: BTreeMap<NamePath, DiagnosticStatus>,
    last_stamps: BTreeMap<NamePath, u64>,
    machine: VehicleStateMachine,
    position_m: f64,
    speed_mps: f64,
    recorder: IncidentRecorder,
    snapshot: EvaluationSnapshot,
    action: Action,
    acked_tick: Option<u64>,
    timeline: Timeline,
}

impl Simulation {
    pub fn new(config: &GraphConfig, options: SimOptions) -> Result<Self, Vec<Finding>> {
        let config = if options.strip_dependencies {
            config.without_dependencies()
        } else {
            config.clone()
        };
        let graph = DiagnosticGraph::from_config(&config)?;
        let bus = Bus::new();
        let tap = bus.subscribe_with_capacity(ChannelFilter::All, TAP_CAPACITY);
        let policy = config.countermeasures.clone();
        let mut recorder = IncidentRecorder::new(secs_to_ms(policy.recording_window_s), secs_to_ms(policy.debounce_s));
        if let Some(dir) = options.incident_dir {
            recorder = recorder.with_output(dir, options.epoch_offset_ms);
        }
        let machine = VehicleStateMachine::new(options.initial_state);
        let snapshot = evaluate_graph(&graph, &BTreeMap::new(), machine.state(), 0);
        let mut sim = Simulation {
            graph,
            extra_leaves: Vec::new(),
            policy,
            clock: VirtualClock::new(config.evaluation.tick_ms),
            bus,
            tap,
            bus_health: BusHealth::new(BUS_MAX_DROP_RATE_HZ),
            stubs: config.stubs.iter().cloned().map(ComponentStub::new).collect(),
            monitors: Vec::new(),
            routes: BTreeMap::new(),
            statuses: BTreeMap::new(),
            last_stamps: BTreeMap::new(),
            machine,
            position_m: 0.0,
            speed_mps: 0.0,
            recorder,
            snapshot,
            action: Action::None,
            acked_tick: None,
            timeline: Timeline::default(),
            config,
        };
        for decl in sim.config.monitors.clone() {
            sim.attach(decl.spec.build());
        }
        Ok(sim)
    }

    fn attach(&mut self, monitor: Box<dyn Monitor>) {
        let index = self.monitors.len();
        for channel in monitor.channels() {
            self.routes.entry(channel).or_default().push(index);
        }
        self.monitors.push(monitor);
    }

    /// Registers a domain-specific monitor as an additional leaf.
    pub fn add_monitor(&mut self, monitor: Box<dyn Monitor>, stale_after_ms: Option<u64>) -> Result<(), Vec<Finding>> {
        let mut extra = self.extra_leaves.clone();
        extra.push(LeafDecl {
            name: monitor.name().clone(),
            stale_after_ms,
        });
        self.graph = DiagnosticGraph::from_config_with_leaves(&self.config, &extra)?;
        self.extra_leaves = extra;
        self.attach(monitor);
        Ok(())
    }

    pub fn bus(&self) -> &Bus {
        &self.bus
    }

    pub fn graph(&self) -> &DiagnosticGraph {
        &self.graph
    }

    /// Time of the next step.
    pub fn now_ms(&self) -> u64 {
        self.clock.now_ms()
    }

    pub fn tick_ms(&self) -> u64 {
        self.clock.tick_ms()
    }

    pub fn vehicle_state(&self) -> VehicleState {
        self.machine.state()
    }

    /// Latest snapshot; before the first step every group is UNKNOWN or gated.
    pub fn snapshot(&self) -> &EvaluationSnapshot {
        &self.snapshot
    }

    pub fn action(&self) -> Action {
        self.action
    }

    pub fn acked_tick(&self) -> Option<u64> {
        self.acked_tick
    }

    pub fn stub_names(&self) -> impl Iterator<Item = &NamePath> {
        self.stubs.iter().map(ComponentStub::name)
    }

    pub fn timeline(&self) -> &Timeline {
        &self.timeline
    }

    pub fn into_timeline(self) -> Timeline {
        self.timeline
    }

    pub fn set_scenario_name(&mut self, name: &str) {
        self.timeline.scenario = name.to_string();
    }

    fn stub_mut(&mut self, target: &NamePath) -> Option<&mut ComponentStub> {
        self.stubs.iter_mut().find(|s| s.name() == target)
    }

    fn command_error(&mut self, message: String) -> Envelope {
        let now = self.clock.now_ms();
        self.timeline.notices.push(Notice {
            tick_ms: now,
            message: message.clone(),
        });
        Envelope::new(
            now,
            path!("/diag/command"),
            Body::Status(DiagnosticStatus::new(path!("/diag/command"), DiagnosticState::Error, now).with_message(message)),
        )
    }

    fn ack(&self, of: &Command) -> Envelope {
        Envelope::new(self.clock.now_ms(), path!("/system/command"), Body::Command(Command::ack(of.verb())))
    }

    /// Applies one command and returns the response envelope.
    ///
    /// Unknown targets and invalid arguments produce a `/diag/command`
    /// ERROR status instead of a failure.
    pub fn handle_command(&mut self, command: Command) -> Envelope {
        if let Err(reason) = command.validate() {
            return self.command_error(format!("{}: {reason}", command.verb()));
        }
        let now = self.clock.now_ms();
        match &command {
            Command::GetSnapshot => Envelope::new(
                self.snapshot.tick_ms,
                path!("/diag/snapshot"),
                Body::Snapshot(self.snapshot.clone()),
            ),
            Command::InjectFault { target, fault } => match self.stub_mut(target) {
                Some(stub) => {
                    stub.inject(fault.clone());
                    self.ack(&command)
                }
                None => self.command_error(format!("inject_fault: unknown target {target}")),
            },
            Command::ClearFault { target } => match self.stub_mut(target) {
                Some(stub) => {
                    stub.clear();
                    self.ack(&command)
                }
                None => self.command_error(format!("clear_fault: unknown target {target}")),
            },
            Command::OperatorEvent { event } => {
                let transition = self.machine.apply(*event);
                if let Some(notice) = &transition.notice {
                    self.timeline.notices.push(Notice {
                        tick_ms: now,
                        message: notice.clone(),
                    });
                }
                self.timeline.state_changes.push(StateChangeRecord {
                    tick_ms: now,
                    transition: transition.clone(),
                });
                let envelope = Envelope::new(now, path!("/system/state"), Body::StateChange(transition));
                self.bus.publish(envelope.clone());
                envelope
            }
            Command::SetSpeed { speed_mps } => {
                self.speed_mps = *speed_mps;
                self.ack(&command)
            }
            Command::Ack { tick_ms, .. } => {
                self.acked_tick = tick_ms.or(Some(self.snapshot.tick_ms));
                self.ack(&command)
            }
        }
    }

    /// Drains the internal tap into the recorder and feeds data to monitors.
    fn pump(&mut self, now_ms: u64) {
        for envelope in self.tap.drain() {
            if let Body::Data(message) = &envelope.body {
                if let Some(targets) = self.routes.get(&envelope.channel) {
                    for &m in targets {
                        self.monitors[m].observe(&envelope.channel, message, envelope.ts);
                    }
                }
            }
            self.recorder.record(envelope, now_ms);
        }
    }

    /// Runs one tick at [`Simulation::now_ms`] and advances the clock.
    pub fn step(&mut self) -> &EvaluationSnapshot {
        let now = self.clock.now_ms();
        let world = WorldSample {
            x: self.position_m,
            y: 0.0,
            speed_mps: self.speed_mps,
        };

        for stub in &mut self.stubs {
            for (channel, message) in stub.emit(now, world, &self.last_stamps) {
                let newest = self.last_stamps.entry(channel.clone()).or_insert(message.stamp_ms);
                *newest = (*newest).max(message.stamp_ms);
                self.bus.publish(Envelope::data(now, channel, message));
            }
        }
        self.pump(now);

        for monitor in &mut self.monitors {
            let status = monitor.step(now);
            self.bus.publish(Envelope::new(now, status.name.clone(), Body::Status(status.clone())));
            self.statuses.insert(status.name.clone(), status);
        }
        let bus_status = self.bus_health.step(&self.bus, now);
        self.bus.publish(Envelope::new(now, bus_status.name.clone(), Body::Status(bus_status.clone())));
        self.statuses.insert(bus_status.name.clone(), bus_status);
        self.pump(now);

        let snapshot = evaluate_graph(&self.graph, &self.statuses, self.machine.state(), now);
        self.bus.publish(Envelope::new(now, path!("/diag/snapshot"), Body::Snapshot(snapshot.clone())));
        let action = decide_action(&snapshot, &self.policy, self.machine.state());
        if action != self.action || self.timeline.actions.is_empty() {
            self.bus.publish(Envelope::new(now, path!("/diag/action"), Body::Action(action)));
            self.timeline.actions.push(ActionRecord { tick_ms: now, action });
        }
        self.action = action;
        self.pump(now);

        self.record_incident(&snapshot, now);

        self.timeline.snapshots.push(snapshot.clone());
        self.snapshot = snapshot;
        self.position_m += self.speed_mps * self.clock.tick_ms() as f64 / 1000.0;
        self.clock.advance();
        &self.snapshot
    }

    /// Flushes the ring buffer when a group newly enters WARNING or ERROR.
    fn record_incident(&mut self, snapshot: &EvaluationSnapshot, now: u64) {
        let degraded = snapshot.groups.iter().zip(&self.snapshot.groups).find(|(new, old)| {
            matches!(new.effective_state, DiagnosticState::Warning | DiagnosticState::Error)
                && new.effective_state != old.effective_state
        });
        let Some((group, _)) = degraded else { return };
        let label = group.name.segments().join("_");
        let record = |incident: Option<&crate::countermeasures::Incident>, file: Option<String>, debounced| IncidentRecord {
            tick_ms: now,
            label: label.clone(),
            file,
            entries: incident.map_or(0, |i| i.entries.len()),
            span_ms: incident.map_or(0, |i| i.span_ms()),
            debounced,
        };
        let entry = match self.recorder.flush(now, &label, Some(snapshot)) {
            FlushOutcome::Recorded { incident, path } => record(
                Some(&incident),
                path.and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())),
                false,
            ),
            FlushOutcome::Debounced => record(None, None, true),
            FlushOutcome::Failed { incident, error } => {
                let status = recorder_status(now, &error);
                self.bus.publish(Envelope::new(now, status.name.clone(), Body::Status(status.clone())));
                self.statuses.insert(status.name.clone(), status);
                self.timeline.notices.push(Notice {
                    tick_ms: now,
                    message: format!("incident write failed: {error}"),
                });
                record(Some(&incident), None, false)
            }
        };
        self.timeline.incidents.push(entry);
    }

    /// Last transition accepted or rejected, if any.
    pub fn last_transition(&self) -> Option<&Transition> {
        self.timeline.state_changes.last().map(|r| &r.transition)
    }
}
