use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::model::ModelParams;

/// Independent random stream `chain_index` derived from a master seed.
pub fn chain_rng(master_seed: u64, chain_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(chain_index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Birth,
    Death,
    RejectedBirth,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Birth => "birth",
            EventKind::Death => "death",
            EventKind::RejectedBirth => "rejected_birth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub location: Point,
    pub at_time: f64,
}

/// Configuration, clock and random stream of one chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub config: Configuration,
    time: f64,
    rng: ChaCha8Rng,
    /// Clock of the next (not yet typed) event, drawn lazily.
    pending: Option<f64>,
    pub proposals: u64,
    pub births: u64,
    pub deaths: u64,
}

impl ChainState {
    pub fn new(config: Configuration, rng: ChaCha8Rng) -> Self {
        ChainState { config, time: 0.0, rng, pending: None, proposals: 0, births: 0, deaths: 0 }
    }

    /// Empty start on stream `chain_index` of `master_seed`.
    pub fn empty(params: &ModelParams, master_seed: u64, chain_index: u64) -> Self {
        Self::new(params.empty_configuration(), chain_rng(master_seed, chain_index))
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Fraction of birth proposals that were accepted.
    pub fn acceptance_ratio(&self) -> Option<f64> {
        (self.proposals > 0).then(|| self.births as f64 / self.proposals as f64)
    }

    /// Clock of the next event, or infinity when every rate vanishes.
    pub fn next_event_time(&mut self, params: &ModelParams) -> f64 {
        if let Some(t) = self.pending {
            return t;
        }
        let total = self.config.len() as f64 + params.proposal_rate();
        let t = if total > 0.0 {
            let w: f64 = Exp1.sample(&mut self.rng);
            self.time + w / total
        } else {
            f64::INFINITY
        };
        self.pending = Some(t);
        t
    }

    /// Performs the next event of the thinned chain: with `n` points the
    /// total rate is `n + z|box|`; a death picks a uniform point, a proposal
    /// draws a uniform location and is accepted with `exp(-E(x, gamma))`.
    /// Rejected proposals advance the clock only.
    pub fn step_event(&mut self, params: &ModelParams) -> Option<Event> {
        let t = self.next_event_time(params);
        if !t.is_finite() {
            return None;
        }
        self.pending = None;
        self.time = t;
        let n = self.config.len();
        let total = n as f64 + params.proposal_rate();
        let u = self.rng.random::<f64>() * total;
        if u < n as f64 {
            let p = self.config.remove((u as usize).min(n - 1));
            self.deaths += 1;
            return Some(Event { kind: EventKind::Death, location: p, at_time: t });
        }
        self.proposals += 1;
        let x = params.sim_box().sample_uniform(&mut self.rng);
        let accept = params.birth_weight(&x, &self.config);
        // u < 0 never happens, so a zero weight always rejects
        if self.rng.random::<f64>() < accept && self.config.insert(x).is_ok() {
            self.births += 1;
            Some(Event { kind: EventKind::Birth, location: x, at_time: t })
        } else {
            Some(Event { kind: EventKind::RejectedBirth, location: x, at_time: t })
        }
    }

    /// Runs every event with clock `<= until`, then sets the clock to `until`.
    pub fn advance_to(&mut self, params: &ModelParams, until: f64, mut on_event: impl FnMut(&Event, &Configuration)) {
        while self.next_event_time(params) <= until {
            match self.step_event(params) {
                Some(e) => on_event(&e, &self.config),
                None => break,
            }
        }
        if until > self.time {
            self.time = until;
        }
    }

    /// Runs to the horizon, recording every event and the configuration at
    /// each scheduled time (value of the last event at or before it).
    pub fn run(&mut self, params: &ModelParams, horizon: Horizon, schedule: &[f64]) -> Result<Trajectory> {
        horizon.validate()?;
        if schedule.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Parameter("snapshot schedule must be sorted".into()));
        }
        let start = self.time;
        let mut traj = Trajectory {
            start_time: start,
            initial: self.config.points().to_vec(),
            events: Vec::new(),
            snapshots: vec![Snapshot { time: start, points: self.config.points().to_vec() }],
            end_time: start,
        };
        let mut pending = schedule.iter().copied().filter(|&s| s > start).peekable();
        let mut record_until = |traj: &mut Trajectory, cfg: &Configuration, t: f64, inclusive: bool| {
            while let Some(&s) = pending.peek() {
                if s < t || (inclusive && s <= t) {
                    traj.snapshots.push(Snapshot { time: s, points: cfg.points().to_vec() });
                    pending.next();
                } else {
                    break;
                }
            }
        };
        match horizon {
            Horizon::Events(n) => {
                for _ in 0..n {
                    let t = self.next_event_time(params);
                    if !t.is_finite() {
                        break;
                    }
                    record_until(&mut traj, &self.config, t, false);
                    let e = self.step_event(params).expect("finite clock implies an event");
                    traj.events.push(e);
                }
                traj.end_time = self.time;
            }
            Horizon::Time(span) => {
                let end = start + span;
                loop {
                    let t = self.next_event_time(params);
                    if t > end {
                        break;
                    }
                    record_until(&mut traj, &self.config, t, false);
                    let e = self.step_event(params).expect("finite clock implies an event");
                    traj.events.push(e);
                }
                record_until(&mut traj, &self.config, end, true);
                self.time = end;
                traj.end_time = end;
            }
        }
        Ok(traj)
    }
}

/// When a run stops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// A number of events, rejected proposals included.
    Events(u64),
    /// A span of process time.
    Time(f64),
}

impl Horizon {
    fn validate(&self) -> Result<()> {
        match *self {
            Horizon::Events(_) => Ok(()),
            Horizon::Time(t) if t.is_finite() && t >= 0.0 => Ok(()),
            Horizon::Time(t) => Err(Error::Parameter(format!("time horizon must be finite and >= 0, got {t}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub points: Vec<Point>,
}

/// Initial points, the ordered event log, and recorded snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub start_time: f64,
    pub initial: Vec<Point>,
    pub events: Vec<Event>,
    pub snapshots: Vec<Snapshot>,
    pub end_time: f64,
}

impl Trajectory {
    /// Rebuilds the snapshots by replaying the event log from the initial
    /// points.
    pub fn replay(&self, params: &ModelParams) -> Result<Vec<Snapshot>> {
        let mut cfg = params.configuration(self.initial.iter().copied())?;
        let mut out = vec![Snapshot { time: self.start_time, points: cfg.points().to_vec() }];
        let times: Vec<f64> = self.snapshots.iter().skip(1).map(|s| s.time).collect();
        let mut next = 0;
        for e in &self.events {
            while next < times.len() && times[next] < e.at_time {
                out.push(Snapshot { time: times[next], points: cfg.points().to_vec() });
                next += 1;
            }
            match e.kind {
                EventKind::Birth => {
                    cfg.insert(e.location)?;
                }
                EventKind::Death => {
                    if !cfg.remove_point(&e.location) {
                        return Err(Error::Domain(format!("death of absent point {:?}", e.location.0)));
                    }
                }
                EventKind::RejectedBirth => {}
            }
        }
        while next < times.len() {
            out.push(Snapshot { time: times[next], points: cfg.points().to_vec() });
            next += 1;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Boundary, SimBox};
    use crate::potential::Potential;

    fn params(z: f64, pot: Potential) -> ModelParams {
        ModelParams::new(z, pot, SimBox::cube(2, 1.0, Boundary::Periodic).unwrap()).unwrap()
    }

    #[test]
    fn free_birth_from_empty() {
        let p = params(2.0, Potential::Zero);
        let mut waits = 0.0;
        let n = 20_000;
        for k in 0..n {
            let mut s = ChainState::empty(&p, 1, k);
            let e = s.step_event(&p).unwrap();
            assert_eq!(e.kind, EventKind::Birth);
            waits += e.at_time;
        }
        let mean = waits / n as f64;
        // Exponential(2): mean 0.5, sd of the mean 0.5/sqrt(n)
        assert!((mean - 0.5).abs() < 4.0 * 0.5 / (n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn zero_activity_only_kills() {
        let p = params(0.0, Potential::Zero);
        let cfg = p.configuration([Point::new(&[0.5, 0.5]).unwrap()]).unwrap();
        let mut s = ChainState::new(cfg, chain_rng(5, 0));
        let e = s.step_event(&p).unwrap();
        assert_eq!(e.kind, EventKind::Death);
        assert!(s.config.is_empty());
        assert!(s.step_event(&p).is_none());
    }

    #[test]
    fn hard_core_overlap_always_rejected() {
        let p = params(50.0, Potential::hard_core(0.49).unwrap());
        // a point at the centre blocks almost the whole unit torus
        let cfg = p.configuration([Point::new(&[0.5, 0.5]).unwrap()]).unwrap();
        let mut s = ChainState::new(cfg, chain_rng(9, 0));
        for _ in 0..2000 {
            let e = s.step_event(&p).unwrap();
            if e.kind == EventKind::Birth {
                let c = Point::new(&[0.5, 0.5]).unwrap();
                if s.config.contains(&c) {
                    assert!(p.sim_box().dist2(&e.location, &c) >= 0.49 * 0.49);
                }
            }
            if e.kind == EventKind::RejectedBirth {
                assert!(p.birth_weight(&e.location, &s.config) < 1.0);
            }
        }
    }

    #[test]
    fn zero_event_horizon_keeps_only_initial_snapshot() {
        let p = params(1.0, Potential::Zero);
        let mut s = ChainState::empty(&p, 3, 0);
        let t = s.run(&p, Horizon::Events(0), &[0.5, 1.0]).unwrap();
        assert_eq!(t.snapshots.len(), 1);
        assert!(t.events.is_empty());
    }

    #[test]
    fn same_seed_same_trajectory_and_replay_matches() {
        let p = params(3.0, Potential::strauss(1.0, 0.3).unwrap());
        let sched: Vec<f64> = (1..20).map(|k| k as f64 * 0.5).collect();
        let a = ChainState::empty(&p, 77, 2).run(&p, Horizon::Time(10.0), &sched).unwrap();
        let b = ChainState::empty(&p, 77, 2).run(&p, Horizon::Time(10.0), &sched).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.snapshots.len(), 20);
        assert_eq!(a.replay(&p).unwrap(), a.snapshots);
        let c = ChainState::empty(&p, 77, 3).run(&p, Horizon::Time(10.0), &sched).unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn acceptance_is_one_without_interaction() {
        let p = params(5.0, Potential::Zero);
        let mut s = ChainState::empty(&p, 1, 0);
        s.advance_to(&p, 50.0, |_, _| {});
        assert_eq!(s.acceptance_ratio(), Some(1.0));
        let q = params(5.0, Potential::strauss(2.0, 0.3).unwrap());
        let mut s = ChainState::empty(&q, 1, 0);
        s.advance_to(&q, 50.0, |_, _| {});
        assert!(s.acceptance_ratio().unwrap() < 1.0);
    }
}
