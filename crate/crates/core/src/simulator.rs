//! Discrete-event simulation of replicated checkpoint/restart execution.
//!
//! Two semantics share one configuration:
//!
//! * `Model` mode reproduces the analysis assumptions exactly: all n
//!   processes advance in synchronized intervals of length `tc`; an
//!   interval succeeds iff every process keeps at least one replica alive
//!   through it (survival draws are i.i.d. with `p = exp(-lambda tc)`);
//!   success costs `tc + ts`, a failed attempt costs `tc` and is retried
//!   with fresh replicas. Detection time is zero.
//! * `Volpex` mode simulates the execution protocol: replicas compute
//!   work quanta at their own speed and issue a StoreCheckpoint request
//!   after every quantum; the server accepts a request only if it advances
//!   the saved state and the checkpoint interval has elapsed; failures are
//!   noticed one heartbeat timeout after they happen, and replacements
//!   start either immediately (no survivor) or at the next accepted save
//!   of a survivor.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::failure_model::ExponentialFailureModel;
use crate::overhead_model::{success_prob_over_interval, JobSpec};

/// Which execution semantics to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Synchronized intervals matching the analytic overhead model.
    Model,
    /// Request-based asynchronous checkpointing with heartbeat detection.
    Volpex,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Model => "model",
            Mode::Volpex => "volpex",
        }
    }
}

pub const DEFAULT_HEARTBEAT_TIMEOUT: f64 = 60.0;
pub const DEFAULT_BUDGET_FACTOR: f64 = 1e4;

/// Full simulation configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub spec: JobSpec,
    /// Checkpoint interval in seconds.
    pub tc: f64,
    /// Checkpoint save cost in seconds.
    pub ts: f64,
    pub failure_model: ExponentialFailureModel,
    /// Work units per process; one StoreCheckpoint request fires per unit.
    pub total_work: u64,
    /// Seconds of computation per work unit at unit speed.
    pub quantum_time: f64,
    /// Delay between a failure and the server noticing it (volpex mode).
    pub heartbeat_timeout: f64,
    pub mode: Mode,
    /// Client speeds are drawn uniformly from `[1-s, 1+s]`; 0 pins all
    /// clients to unit speed for oracle comparability.
    pub speed_spread: f64,
    /// The run aborts once simulated time exceeds
    /// `budget_factor * failure-free completion time`.
    pub budget_factor: f64,
    /// Record a per-event trace in the result.
    pub record_trace: bool,
}

impl SimConfig {
    pub fn new(
        spec: JobSpec,
        tc: f64,
        ts: f64,
        failure_model: ExponentialFailureModel,
        total_work: u64,
    ) -> Self {
        Self {
            spec,
            tc,
            ts,
            failure_model,
            total_work,
            quantum_time: 1.0,
            heartbeat_timeout: DEFAULT_HEARTBEAT_TIMEOUT,
            mode: Mode::Volpex,
            speed_spread: 0.0,
            budget_factor: DEFAULT_BUDGET_FACTOR,
            record_trace: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tc.is_finite() || self.tc <= 0.0 {
            return Err(Error::NonPositiveInterval(self.tc));
        }
        if !self.ts.is_finite() || self.ts < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "save cost must be non-negative and finite, got {}",
                self.ts
            )));
        }
        if self.total_work < 1 {
            return Err(Error::InvalidConfig(
                "total work must be at least 1 unit".to_string(),
            ));
        }
        if !self.quantum_time.is_finite() || self.quantum_time <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "quantum time must be positive and finite, got {}",
                self.quantum_time
            )));
        }
        if !self.heartbeat_timeout.is_finite() || self.heartbeat_timeout < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "heartbeat timeout must be non-negative and finite, got {}",
                self.heartbeat_timeout
            )));
        }
        if !(0.0..1.0).contains(&self.speed_spread) {
            return Err(Error::InvalidConfig(format!(
                "speed spread must lie in [0, 1), got {}",
                self.speed_spread
            )));
        }
        if !self.budget_factor.is_finite() || self.budget_factor <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "budget factor must be positive, got {}",
                self.budget_factor
            )));
        }
        Ok(())
    }

    /// Completion time of a failure-free run at the slowest admissible
    /// client speed; the time budget is a multiple of this.
    fn failure_free_time(&self) -> f64 {
        let slowest = 1.0 - self.speed_spread;
        self.total_work as f64 * (self.quantum_time / slowest + self.ts)
    }
}

/// Server decision for one StoreCheckpoint request.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckpointDecision {
    Save,
    Ignore,
}

/// Per-process record of the last accepted checkpoint.
///
/// A request is saved only if it advances the saved work position and the
/// checkpoint interval has elapsed since the previous save; the first
/// request for a process always saves (no prior state, elapsed treated as
/// infinite). Everything else is ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerCheckpointState {
    last: Vec<Option<(u64, f64)>>,
}

impl ServerCheckpointState {
    pub fn new(processes: u32) -> Self {
        Self {
            last: vec![None; processes as usize],
        }
    }

    /// Apply the acceptance rule; on `Save` the stored state advances to
    /// `(requested_number, now)`.
    pub fn accept(
        &mut self,
        process: u32,
        requested_number: u64,
        now: f64,
        tc: f64,
    ) -> CheckpointDecision {
        let slot = &mut self.last[process as usize];
        let save = match *slot {
            None => true,
            Some((number, time)) => requested_number > number && now - time > tc,
        };
        if save {
            *slot = Some((requested_number, now));
            CheckpointDecision::Save
        } else {
            CheckpointDecision::Ignore
        }
    }

    /// Last accepted (work number, time) for a process, if any.
    pub fn last_saved(&self, process: u32) -> Option<(u64, f64)> {
        self.last[process as usize]
    }

    fn last_saved_number(&self, process: u32) -> u64 {
        self.last[process as usize].map_or(0, |(n, _)| n)
    }
}

/// Trace event kinds, ordered roughly by lifecycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    /// Replica died; `info` = its work position at death.
    Failure,
    /// Server noticed the death; `info` = replicas the server still
    /// believes alive.
    Detection,
    /// StoreCheckpoint accepted; `info` = saved work number.
    SaveAccepted,
    /// StoreCheckpoint ignored; `info` = requested work number.
    SaveIgnored,
    /// Replica (re)started; `info` = starting work position.
    Spawn,
    /// Process reached its total work; `info` = total work.
    Complete,
}

impl TraceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceKind::Failure => "failure",
            TraceKind::Detection => "detection",
            TraceKind::SaveAccepted => "save_accepted",
            TraceKind::SaveIgnored => "save_ignored",
            TraceKind::Spawn => "spawn",
            TraceKind::Complete => "complete",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceKind,
    pub process: u32,
    pub replica: u32,
    pub info: u64,
}

/// Render a trace as CSV (`time_s,event,process,replica,detail`).
pub fn trace_to_csv(trace: &[TraceEvent]) -> String {
    let mut out = String::from("time_s,event,process,replica,detail\n");
    for ev in trace {
        out.push_str(&format!(
            "{:.6},{},{},{},{}\n",
            ev.time,
            ev.kind.as_str(),
            ev.process,
            ev.replica,
            ev.info
        ));
    }
    out
}

/// Post-run check of the server acceptance invariants over a trace:
/// accepted numbers strictly increase per process and accepted saves for
/// a process are separated by more than the checkpoint interval.
pub fn check_trace_acceptance_invariants(
    trace: &[TraceEvent],
    processes: u32,
    tc: f64,
) -> std::result::Result<(), String> {
    let mut last: Vec<Option<(u64, f64)>> = vec![None; processes as usize];
    for ev in trace {
        if ev.kind != TraceKind::SaveAccepted {
            continue;
        }
        let slot = &mut last[ev.process as usize];
        if let Some((number, time)) = *slot {
            if ev.info <= number {
                return Err(format!(
                    "process {}: saved number {} does not advance past {}",
                    ev.process, ev.info, number
                ));
            }
            if ev.time - time <= tc {
                return Err(format!(
                    "process {}: saves at {} and {} violate the {} s interval",
                    ev.process, time, ev.time, tc
                ));
            }
        }
        *slot = Some((ev.info, ev.time));
    }
    Ok(())
}

/// Outcome of one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub completion_time: f64,
    pub checkpoints_saved: u64,
    pub requests_ignored: u64,
    /// Replica deaths over the run.
    pub failures: u64,
    /// Work units performed but discarded due to failures/retries.
    pub work_lost: f64,
    pub trace: Option<Vec<TraceEvent>>,
}

/// Run one simulation. Deterministic for a given `(config, seed)` pair.
pub fn run(config: &SimConfig, seed: u64) -> Result<SimResult> {
    config.validate()?;
    match config.mode {
        Mode::Model => run_model(config, seed),
        Mode::Volpex => VolpexSim::new(config, seed).run(),
    }
}

// ---------------------------------------------------------------------------
// Model mode
// ---------------------------------------------------------------------------

fn run_model(cfg: &SimConfig, seed: u64) -> Result<SimResult> {
    let work_seconds = cfg.total_work as f64 * cfg.quantum_time;
    let intervals_exact = work_seconds / cfg.tc;
    let intervals = intervals_exact.round();
    if intervals < 1.0 || (intervals_exact - intervals).abs() > 1e-9 * intervals_exact.max(1.0) {
        return Err(Error::WorkNotDivisible {
            work_seconds,
            interval: cfg.tc,
        });
    }
    let steps = intervals as u64;
    let units_per_interval = cfg.total_work as f64 / intervals;

    let n = cfg.spec.processes();
    let r = cfg.spec.replicas();
    let p = (-cfg.failure_model.lambda() * cfg.tc).exp();
    let budget = cfg.budget_factor * intervals * (cfg.tc + cfg.ts);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut elapsed = 0.0;
    let mut failures = 0u64;
    let mut work_lost = 0.0;
    for _ in 0..steps {
        loop {
            elapsed += cfg.tc;
            if elapsed > budget {
                return Err(Error::BudgetExceeded { elapsed, budget });
            }
            let mut all_alive = true;
            for _ in 0..n {
                let mut process_alive = false;
                for _ in 0..r {
                    if rng.gen::<f64>() < p {
                        process_alive = true;
                    } else {
                        failures += 1;
                    }
                }
                all_alive &= process_alive;
            }
            if all_alive {
                elapsed += cfg.ts;
                break;
            }
            // The whole super-step is retried: every process redoes the
            // interval's work.
            work_lost += n as f64 * units_per_interval;
        }
    }

    Ok(SimResult {
        completion_time: elapsed,
        checkpoints_saved: steps * n as u64,
        requests_ignored: 0,
        failures,
        work_lost,
        trace: None,
    })
}

/// Mean simulated time per successful super-step in model mode.
///
/// This is the Monte-Carlo counterpart of the analytic expected overhead
/// `G(Tc)`: each trial walks the renewal tree (retry the interval until
/// every process keeps a replica alive, then pay the save cost).
///
/// Trials are simulated attempt by attempt with one survival draw per
/// replica while the total draw budget permits; where the per-attempt
/// success probability is so small that literal attempt simulation is
/// intractable, the attempt count is drawn from its exact distribution
/// (geometric in the interval-success probability) instead, which is
/// distributionally identical.
pub fn monte_carlo_overhead(config: &SimConfig, trials: u64, seed: u64) -> Result<f64> {
    config.validate()?;
    if config.mode != Mode::Model {
        return Err(Error::InvalidConfig(
            "the overhead oracle is defined for model-mode semantics".to_string(),
        ));
    }
    if trials < 1 {
        return Err(Error::InvalidConfig("trials must be >= 1".to_string()));
    }
    const DRAW_BUDGET: f64 = 1e9;

    let n = config.spec.processes();
    let r = config.spec.replicas();
    let p = (-config.failure_model.lambda() * config.tc).exp();
    let p_all = success_prob_over_interval(config.tc, &config.failure_model, &config.spec)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let expected_draws = if p_all > 0.0 {
        trials as f64 / p_all * (n as u64 * r as u64) as f64
    } else {
        f64::INFINITY
    };

    let mut total = 0.0;
    if expected_draws <= DRAW_BUDGET {
        for _ in 0..trials {
            let mut attempts = 0u64;
            loop {
                attempts += 1;
                let all_alive = (0..n).all(|_| (0..r).any(|_| rng.gen::<f64>() < p));
                if all_alive {
                    break;
                }
            }
            total += attempts as f64 * config.tc + config.ts;
        }
    } else {
        // ln(1 - p_all) via ln_1p keeps the tail exact for tiny p_all.
        let log_q = (-p_all).ln_1p();
        for _ in 0..trials {
            let u = 1.0 - rng.gen::<f64>();
            let attempts = (u.ln() / log_q).ceil().max(1.0);
            total += attempts * config.tc + config.ts;
        }
    }
    Ok(total / trials as f64)
}

// ---------------------------------------------------------------------------
// Volpex mode
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
enum Action {
    /// The replica's node dies.
    Fail,
    /// The replica finishes a work unit and issues a StoreCheckpoint.
    UnitDone,
    /// The server's heartbeat timeout for a dead replica expires.
    Detect,
}

impl Action {
    /// Same-timestamp ordering: failures before requests before restarts.
    fn priority(&self) -> u8 {
        match self {
            Action::Fail => 0,
            Action::UnitDone => 1,
            Action::Detect => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct QueuedEvent {
    time: f64,
    priority: u8,
    seq: u64,
    action: Action,
    process: u32,
    slot: u32,
    incarnation: u64,
}

impl Eq for QueuedEvent {}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.priority.cmp(&other.priority))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone)]
struct Replica {
    incarnation: u64,
    alive: bool,
    /// Set once the heartbeat timeout for a death has expired. Replicas
    /// that died but were not yet detected still look alive to the server.
    detected_dead: bool,
    work_done: u64,
    speed: f64,
}

struct VolpexSim<'a> {
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Reverse<QueuedEvent>>,
    seq: u64,
    replicas: Vec<Vec<Replica>>,
    server: ServerCheckpointState,
    /// Slots per process waiting for the next accepted save to respawn.
    pending_respawn: Vec<Vec<u32>>,
    process_complete: Vec<bool>,
    complete_count: u32,
    checkpoints_saved: u64,
    requests_ignored: u64,
    failures: u64,
    work_lost: f64,
    trace: Option<Vec<TraceEvent>>,
}

impl<'a> VolpexSim<'a> {
    fn new(cfg: &'a SimConfig, seed: u64) -> Self {
        let n = cfg.spec.processes();
        let r = cfg.spec.replicas();
        Self {
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            queue: BinaryHeap::new(),
            seq: 0,
            replicas: (0..n)
                .map(|_| {
                    (0..r)
                        .map(|_| Replica {
                            incarnation: 0,
                            alive: false,
                            detected_dead: true,
                            work_done: 0,
                            speed: 1.0,
                        })
                        .collect()
                })
                .collect(),
            server: ServerCheckpointState::new(n),
            pending_respawn: vec![Vec::new(); n as usize],
            process_complete: vec![false; n as usize],
            complete_count: 0,
            checkpoints_saved: 0,
            requests_ignored: 0,
            failures: 0,
            work_lost: 0.0,
            trace: cfg.record_trace.then(Vec::new),
        }
    }

    fn record(&mut self, time: f64, kind: TraceKind, process: u32, replica: u32, info: u64) {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEvent {
                time,
                kind,
                process,
                replica,
                info,
            });
        }
    }

    fn schedule(&mut self, time: f64, action: Action, process: u32, slot: u32, incarnation: u64) {
        self.seq += 1;
        self.queue.push(Reverse(QueuedEvent {
            time,
            priority: action.priority(),
            seq: self.seq,
            action,
            process,
            slot,
            incarnation,
        }));
    }

    /// Start a fresh replica in `slot` at work position `start_work`.
    /// Draw order (speed, then lifetime) is fixed for determinism.
    fn spawn(&mut self, now: f64, process: u32, slot: u32, start_work: u64) {
        let spread = self.cfg.speed_spread;
        let speed = 1.0 - spread + 2.0 * spread * self.rng.gen::<f64>();
        let lifetime = self.cfg.failure_model.sample_time_to_failure(&mut self.rng);

        let replica = &mut self.replicas[process as usize][slot as usize];
        replica.incarnation += 1;
        replica.alive = true;
        replica.detected_dead = false;
        replica.work_done = start_work;
        replica.speed = speed;
        let incarnation = replica.incarnation;

        if lifetime.is_finite() {
            self.schedule(now + lifetime, Action::Fail, process, slot, incarnation);
        }
        self.schedule(
            now + self.cfg.quantum_time / speed,
            Action::UnitDone,
            process,
            slot,
            incarnation,
        );
        self.record(now, TraceKind::Spawn, process, slot, start_work);
    }

    fn run(mut self) -> Result<SimResult> {
        let budget = self.cfg.budget_factor * self.cfg.failure_free_time();
        let n = self.cfg.spec.processes();
        let r = self.cfg.spec.replicas();
        for process in 0..n {
            for slot in 0..r {
                self.spawn(0.0, process, slot, 0);
            }
        }

        while let Some(Reverse(ev)) = self.queue.pop() {
            if ev.time > budget {
                return Err(Error::BudgetExceeded {
                    elapsed: ev.time,
                    budget,
                });
            }
            if self.process_complete[ev.process as usize] {
                continue;
            }
            let replica = &self.replicas[ev.process as usize][ev.slot as usize];
            if replica.incarnation != ev.incarnation {
                continue; // event from a replaced replica
            }
            match ev.action {
                Action::Fail => self.on_fail(&ev),
                Action::UnitDone => {
                    if self.on_unit_done(&ev) {
                        return Ok(self.finish(ev.time));
                    }
                }
                Action::Detect => self.on_detect(&ev),
            }
        }
        unreachable!("event queue drained before the job completed");
    }

    fn on_fail(&mut self, ev: &QueuedEvent) {
        let replica = &mut self.replicas[ev.process as usize][ev.slot as usize];
        if !replica.alive {
            return;
        }
        replica.alive = false;
        let unsaved = replica
            .work_done
            .saturating_sub(self.server.last_saved_number(ev.process));
        self.failures += 1;
        self.work_lost += unsaved as f64;
        let work = replica.work_done;
        self.record(ev.time, TraceKind::Failure, ev.process, ev.slot, work);
        self.schedule(
            ev.time + self.cfg.heartbeat_timeout,
            Action::Detect,
            ev.process,
            ev.slot,
            ev.incarnation,
        );
    }

    /// Returns true when the whole job just completed.
    fn on_unit_done(&mut self, ev: &QueuedEvent) -> bool {
        let total_work = self.cfg.total_work;
        let tc = self.cfg.tc;
        let replica = &mut self.replicas[ev.process as usize][ev.slot as usize];
        if !replica.alive {
            return false;
        }
        replica.work_done += 1;
        let work = replica.work_done;
        let speed = replica.speed;

        if work == total_work {
            self.process_complete[ev.process as usize] = true;
            self.complete_count += 1;
            self.record(ev.time, TraceKind::Complete, ev.process, ev.slot, work);
            return self.complete_count == self.cfg.spec.processes();
        }

        let next_unit = self.cfg.quantum_time / speed;
        match self.server.accept(ev.process, work, ev.time, tc) {
            CheckpointDecision::Save => {
                self.checkpoints_saved += 1;
                self.record(ev.time, TraceKind::SaveAccepted, ev.process, ev.slot, work);
                // Queued replacements start from the checkpoint just taken.
                let pending = std::mem::take(&mut self.pending_respawn[ev.process as usize]);
                for slot in pending {
                    self.spawn(ev.time, ev.process, slot, work);
                }
                // Saving blocks the saving replica for the save cost.
                self.schedule(
                    ev.time + self.cfg.ts + next_unit,
                    Action::UnitDone,
                    ev.process,
                    ev.slot,
                    ev.incarnation,
                );
            }
            CheckpointDecision::Ignore => {
                self.requests_ignored += 1;
                self.record(ev.time, TraceKind::SaveIgnored, ev.process, ev.slot, work);
                self.schedule(
                    ev.time + next_unit,
                    Action::UnitDone,
                    ev.process,
                    ev.slot,
                    ev.incarnation,
                );
            }
        }
        false
    }

    fn on_detect(&mut self, ev: &QueuedEvent) {
        {
            let replica = &mut self.replicas[ev.process as usize][ev.slot as usize];
            if replica.alive || replica.detected_dead {
                return;
            }
            replica.detected_dead = true;
        }
        let believed_alive = self.replicas[ev.process as usize]
            .iter()
            .filter(|r| !r.detected_dead)
            .count() as u64;
        self.record(
            ev.time,
            TraceKind::Detection,
            ev.process,
            ev.slot,
            believed_alive,
        );
        if believed_alive == 0 {
            // No survivor: restart immediately from the latest checkpoint.
            let start = self.server.last_saved_number(ev.process);
            self.spawn(ev.time, ev.process, ev.slot, start);
        } else {
            // A survivor exists: wait for its next accepted save.
            self.pending_respawn[ev.process as usize].push(ev.slot);
        }
    }

    fn finish(self, completion_time: f64) -> SimResult {
        SimResult {
            completion_time,
            checkpoints_saved: self.checkpoints_saved,
            requests_ignored: self.requests_ignored,
            failures: self.failures,
            work_lost: self.work_lost,
            trace: self.trace,
        }
    }
}
