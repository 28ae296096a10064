//! Detection rates, accidental coincidences, detector dead time and
//! channel multiplexing, with a timestamp-level Monte Carlo to check them.
//!
//! Detector ids follow the channel layout: channel `c` has its signal
//! detector at `2c` and its idler detector at `2c + 1`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

/// Largest number of pair births a single simulation may draw.
pub const EVENT_BUDGET: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CountingError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(&'static str),
    #[error("simulation would draw {expected:.3e} events, above the budget of {budget:.0e}")]
    EventBudget { expected: f64, budget: f64 },
    #[error("stream of detector {detector} is not strictly increasing at index {index}")]
    Unsorted { detector: usize, index: usize },
    #[error("stream of detector {detector} has a timestamp outside [0, duration)")]
    OutOfWindow { detector: usize },
    #[error("event streams must come in signal/idler pairs, got {0} streams")]
    UnpairedStreams(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingScenario {
    /// Pairs generated per second in the crystal.
    pub generated_pair_rate: f64,
    pub eta_signal: f64,
    pub eta_idler: f64,
    pub coincidence_window_s: f64,
    /// Per-detector non-paralyzable dead time.
    pub dead_time_s: f64,
    pub channels: u32,
    pub pump_power_mw: f64,
}

impl CountingScenario {
    pub fn new(
        generated_pair_rate: f64,
        eta_signal: f64,
        eta_idler: f64,
        coincidence_window_s: f64,
        dead_time_s: f64,
        channels: u32,
        pump_power_mw: f64,
    ) -> Result<Self, CountingError> {
        let sc = Self {
            generated_pair_rate,
            eta_signal,
            eta_idler,
            coincidence_window_s,
            dead_time_s,
            channels,
            pump_power_mw,
        };
        sc.validate()?;
        Ok(sc)
    }

    /// Back-solves the generated rate from a detected brightness
    /// (pairs/s/mW) and the arm efficiencies.
    pub fn from_brightness(
        brightness: f64,
        pump_power_mw: f64,
        eta_signal: f64,
        eta_idler: f64,
        coincidence_window_s: f64,
        dead_time_s: f64,
        channels: u32,
    ) -> Result<Self, CountingError> {
        if !(brightness >= 0.0 && brightness.is_finite()) {
            return Err(CountingError::InvalidScenario(
                "brightness must be non-negative",
            ));
        }
        let rate = brightness * pump_power_mw / (eta_signal * eta_idler);
        Self::new(
            rate,
            eta_signal,
            eta_idler,
            coincidence_window_s,
            dead_time_s,
            channels,
            pump_power_mw,
        )
    }

    pub fn validate(&self) -> Result<(), CountingError> {
        let eff = |e: f64| e > 0.0 && e <= 1.0;
        if !(self.generated_pair_rate >= 0.0 && self.generated_pair_rate.is_finite()) {
            return Err(CountingError::InvalidScenario(
                "generated pair rate must be non-negative",
            ));
        }
        if !eff(self.eta_signal) || !eff(self.eta_idler) {
            return Err(CountingError::InvalidScenario(
                "efficiencies must lie in (0, 1]",
            ));
        }
        if !(self.coincidence_window_s >= 0.0 && self.coincidence_window_s.is_finite()) {
            return Err(CountingError::InvalidScenario(
                "coincidence window must be non-negative",
            ));
        }
        if !(self.dead_time_s >= 0.0 && self.dead_time_s.is_finite()) {
            return Err(CountingError::InvalidScenario(
                "dead time must be non-negative",
            ));
        }
        if self.channels == 0 {
            return Err(CountingError::InvalidScenario(
                "at least one channel is required",
            ));
        }
        if !(self.pump_power_mw > 0.0 && self.pump_power_mw.is_finite()) {
            return Err(CountingError::InvalidScenario(
                "pump power must be positive",
            ));
        }
        Ok(())
    }

    /// Detected pairs per second per mW of pump.
    pub fn brightness(&self) -> f64 {
        self.generated_pair_rate * self.eta_signal * self.eta_idler / self.pump_power_mw
    }

    pub fn with_channels(self, channels: u32) -> Result<Self, CountingError> {
        let sc = Self { channels, ..self };
        sc.validate()?;
        Ok(sc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectedRates {
    pub singles_signal: f64,
    pub singles_idler: f64,
    pub coincidences: f64,
    pub pair_to_singles_signal: f64,
    pub pair_to_singles_idler: f64,
}

pub fn detected_rates(sc: &CountingScenario) -> DetectedRates {
    let singles_signal = sc.generated_pair_rate * sc.eta_signal;
    let singles_idler = sc.generated_pair_rate * sc.eta_idler;
    DetectedRates {
        singles_signal,
        singles_idler,
        coincidences: sc.generated_pair_rate * sc.eta_signal * sc.eta_idler,
        pair_to_singles_signal: sc.eta_idler,
        pair_to_singles_idler: sc.eta_signal,
    }
}

/// Accidental coincidence rate of two uncorrelated streams.
pub fn accidental_rate(singles_signal: f64, singles_idler: f64, window_s: f64) -> f64 {
    singles_signal * singles_idler * window_s
}

/// Non-paralyzable dead time: R / (1 + R·τ).
pub fn dead_time_observed(rate_in: f64, dead_time_s: f64) -> f64 {
    rate_in / (1.0 + rate_in * dead_time_s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRates {
    pub singles_signal: f64,
    pub singles_idler: f64,
    pub coincidences: f64,
    pub accidentals: f64,
    /// Coincidence-to-accidental ratio.
    pub car: f64,
    pub observed_singles_signal: f64,
    pub observed_singles_idler: f64,
    pub observed_coincidences: f64,
    pub observed_accidentals: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplexSummary {
    pub channels: u32,
    pub per_channel: ChannelRates,
    pub total: ChannelRates,
}

/// Splits the detected rates evenly over `sc.channels` matched channel
/// pairs. Dead time acts on each channel's detectors; a pair survives
/// when both of its photons do.
pub fn multiplex_summary(sc: &CountingScenario) -> MultiplexSummary {
    let rates = detected_rates(sc);
    let n = sc.channels as f64;
    let s_s = rates.singles_signal / n;
    let s_i = rates.singles_idler / n;
    let c = rates.coincidences / n;
    let acc = accidental_rate(s_s, s_i, sc.coincidence_window_s);
    let obs_s = dead_time_observed(s_s, sc.dead_time_s);
    let obs_i = dead_time_observed(s_i, sc.dead_time_s);
    let keep_s = if s_s > 0.0 { obs_s / s_s } else { 1.0 };
    let keep_i = if s_i > 0.0 { obs_i / s_i } else { 1.0 };
    let per_channel = ChannelRates {
        singles_signal: s_s,
        singles_idler: s_i,
        coincidences: c,
        accidentals: acc,
        car: c / acc,
        observed_singles_signal: obs_s,
        observed_singles_idler: obs_i,
        observed_coincidences: c * keep_s * keep_i,
        observed_accidentals: accidental_rate(obs_s, obs_i, sc.coincidence_window_s),
    };
    let total_acc = rates.singles_signal * rates.singles_idler * sc.coincidence_window_s / n;
    let total = ChannelRates {
        singles_signal: rates.singles_signal,
        singles_idler: rates.singles_idler,
        coincidences: rates.coincidences,
        accidentals: total_acc,
        car: rates.coincidences / total_acc,
        observed_singles_signal: obs_s * n,
        observed_singles_idler: obs_i * n,
        observed_coincidences: per_channel.observed_coincidences * n,
        observed_accidentals: per_channel.observed_accidentals * n,
    };
    MultiplexSummary {
        channels: sc.channels,
        per_channel,
        total,
    }
}

/// Smallest channel count, up to `max_channels`, whose per-detector
/// observed singles stay at or below `max_observed_singles` and whose
/// total CAR reaches `min_car`.
pub fn smallest_channel_count(
    sc: &CountingScenario,
    max_observed_singles: f64,
    min_car: f64,
    max_channels: u32,
) -> Option<u32> {
    (1..=max_channels).find(|&n| {
        let m = multiplex_summary(&CountingScenario { channels: n, ..*sc });
        m.per_channel.observed_singles_signal <= max_observed_singles
            && m.per_channel.observed_singles_idler <= max_observed_singles
            && m.total.car >= min_car
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventStreams {
    /// Sorted timestamps (s) per detector id.
    pub streams: Vec<Vec<f64>>,
    pub duration_s: f64,
    pub seed: u64,
}

impl EventStreams {
    pub fn new(streams: Vec<Vec<f64>>, duration_s: f64, seed: u64) -> Result<Self, CountingError> {
        let es = Self {
            streams,
            duration_s,
            seed,
        };
        es.validate()?;
        Ok(es)
    }

    pub fn validate(&self) -> Result<(), CountingError> {
        if !self.streams.len().is_multiple_of(2) {
            return Err(CountingError::UnpairedStreams(self.streams.len()));
        }
        for (detector, s) in self.streams.iter().enumerate() {
            if let Some(index) = s.windows(2).position(|w| !(w[1] > w[0])) {
                return Err(CountingError::Unsorted {
                    detector,
                    index: index + 1,
                });
            }
            if s.iter().any(|&t| !(t >= 0.0 && t < self.duration_s)) {
                return Err(CountingError::OutOfWindow { detector });
            }
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.streams.len() / 2
    }

    pub fn signal(&self, channel: usize) -> &[f64] {
        &self.streams[2 * channel]
    }

    pub fn idler(&self, channel: usize) -> &[f64] {
        &self.streams[2 * channel + 1]
    }

    pub fn total_events(&self) -> usize {
        self.streams.iter().map(Vec::len).sum()
    }
}

fn check_budget(expected: f64) -> Result<(), CountingError> {
    if !(expected <= EVENT_BUDGET) {
        return Err(CountingError::EventBudget {
            expected,
            budget: EVENT_BUDGET,
        });
    }
    Ok(())
}

fn check_duration(duration_s: f64) -> Result<(), CountingError> {
    if !(duration_s > 0.0 && duration_s.is_finite()) {
        return Err(CountingError::InvalidScenario("duration must be positive"));
    }
    Ok(())
}

struct DeadTimeFilter {
    dead_time: f64,
    last: Option<f64>,
}

impl DeadTimeFilter {
    fn new(dead_time: f64) -> Self {
        Self {
            dead_time,
            last: None,
        }
    }

    fn admit(&mut self, t: f64) -> bool {
        match self.last {
            Some(last) if t - last < self.dead_time || t <= last => false,
            _ => {
                self.last = Some(t);
                true
            }
        }
    }
}

/// Poisson pair births at the generated rate, independent arm losses,
/// uniform channel assignment and per-detector dead time.
pub fn simulate_event_streams(
    sc: &CountingScenario,
    duration_s: f64,
    seed: u64,
) -> Result<EventStreams, CountingError> {
    sc.validate()?;
    check_duration(duration_s)?;
    check_budget(sc.generated_pair_rate * duration_s)?;
    let n = sc.channels as usize;
    let mut streams = vec![Vec::new(); 2 * n];
    if sc.generated_pair_rate == 0.0 {
        return EventStreams::new(streams, duration_s, seed);
    }
    let mut filters: Vec<_> = (0..2 * n)
        .map(|_| DeadTimeFilter::new(sc.dead_time_s))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = Exp::new(sc.generated_pair_rate)
        .map_err(|_| CountingError::InvalidScenario("generated pair rate must be finite"))?;
    let mut t = 0.0;
    loop {
        t += gap.sample(&mut rng);
        if t >= duration_s {
            break;
        }
        let channel = if n == 1 { 0 } else { rng.random_range(0..n) };
        let keep_s = rng.random::<f64>() < sc.eta_signal;
        let keep_i = rng.random::<f64>() < sc.eta_idler;
        for (detector, keep) in [(2 * channel, keep_s), (2 * channel + 1, keep_i)] {
            if keep && filters[detector].admit(t) {
                streams[detector].push(t);
            }
        }
    }
    EventStreams::new(streams, duration_s, seed)
}

/// Two independent Poisson streams on a single channel, with no pair
/// correlations at all.
pub fn simulate_uncorrelated_streams(
    rate_signal: f64,
    rate_idler: f64,
    duration_s: f64,
    seed: u64,
) -> Result<EventStreams, CountingError> {
    check_duration(duration_s)?;
    if !(rate_signal >= 0.0 && rate_idler >= 0.0) {
        return Err(CountingError::InvalidScenario("rates must be non-negative"));
    }
    check_budget((rate_signal + rate_idler) * duration_s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut streams = Vec::with_capacity(2);
    for rate in [rate_signal, rate_idler] {
        let mut s = Vec::new();
        if rate > 0.0 {
            let gap = Exp::new(rate)
                .map_err(|_| CountingError::InvalidScenario("rate must be finite"))?;
            let mut t = 0.0;
            loop {
                let next = t + gap.sample(&mut rng);
                if next >= duration_s {
                    break;
                }
                if next > t {
                    s.push(next);
                }
                t = next;
            }
        }
        streams.push(s);
    }
    EventStreams::new(streams, duration_s, seed)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoincidenceCounts {
    pub total: u64,
    pub per_channel: Vec<u64>,
}

/// Counts signal/idler coincidences with t_i − t_s ∈ [0, window), pairing
/// each event at most once, earliest first.
pub fn count_coincidences(
    streams: &EventStreams,
    window_s: f64,
) -> Result<CoincidenceCounts, CountingError> {
    count_coincidences_delayed(streams, window_s, 0.0)
}

/// As [`count_coincidences`] with the idler stream shifted earlier by
/// `delay_s`. A delay far beyond the pair correlation time counts only
/// accidentals.
pub fn count_coincidences_delayed(
    streams: &EventStreams,
    window_s: f64,
    delay_s: f64,
) -> Result<CoincidenceCounts, CountingError> {
    streams.validate()?;
    let per_channel: Vec<u64> = (0..streams.channels())
        .map(|c| sweep(streams.signal(c), streams.idler(c), window_s, delay_s))
        .collect();
    Ok(CoincidenceCounts {
        total: per_channel.iter().sum(),
        per_channel,
    })
}

fn sweep(signal: &[f64], idler: &[f64], window: f64, delay: f64) -> u64 {
    let mut count = 0;
    let mut j = 0;
    for &ts in signal {
        while j < idler.len() && idler[j] - delay < ts {
            j += 1;
        }
        if j == idler.len() {
            break;
        }
        if idler[j] - delay - ts < window {
            count += 1;
            j += 1;
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn scenario(rate: f64, eta: f64, window: f64, dead: f64, channels: u32) -> CountingScenario {
        CountingScenario::new(rate, eta, eta, window, dead, channels, 1.0).unwrap()
    }

    #[test]
    fn detected_rates_at_measured_brightness() {
        let r = detected_rates(&scenario(12.7e6, 0.21, 1e-9, 0.0, 1));
        assert!((r.coincidences - 0.56e6).abs() / 0.56e6 < 0.01);
        assert_eq!(r.pair_to_singles_signal, 0.21);
        let lossless = detected_rates(&scenario(5e5, 1.0, 1e-9, 0.0, 1));
        assert_eq!(lossless.coincidences, 5e5);
        assert_eq!(lossless.pair_to_singles_idler, 1.0);
    }

    #[test]
    fn back_solved_watt_rate() {
        let sc =
            CountingScenario::from_brightness(0.56e6, 1000.0, 0.21, 0.21, 1e-9, 0.0, 1).unwrap();
        let expected = 0.56e6 * 1000.0 / (0.21 * 0.21);
        assert!((sc.generated_pair_rate - expected).abs() < 1e-3);
        assert!(sc.generated_pair_rate > 1.0e10 && sc.generated_pair_rate < 1.5e10);
        assert!((sc.brightness() - 0.56e6).abs() < 1e-6);
    }

    #[test]
    fn accidental_and_dead_time_reference_values() {
        assert!((accidental_rate(1e5, 1e5, 1e-9) - 10.0).abs() < 1e-12);
        assert_eq!(accidental_rate(0.0, 1e5, 1e-9), 0.0);
        assert_eq!(dead_time_observed(1234.5, 0.0), 1234.5);
        assert!((dead_time_observed(1e6, 1e-6) - 5e5).abs() < 1e-6);
        assert!((dead_time_observed(1e15, 1e-6) - 1e6).abs() / 1e6 < 1e-8);
    }

    #[test]
    fn multiplexing_divides_accidentals() {
        let one = multiplex_summary(&scenario(1e7, 0.3, 1e-9, 0.0, 1));
        let eight = multiplex_summary(&scenario(1e7, 0.3, 1e-9, 0.0, 8));
        let r = detected_rates(&scenario(1e7, 0.3, 1e-9, 0.0, 1));
        assert_eq!(
            one.total.accidentals,
            accidental_rate(r.singles_signal, r.singles_idler, 1e-9)
        );
        assert!(
            (eight.total.accidentals - one.total.accidentals / 8.0).abs()
                <= 1e-12 * one.total.accidentals
        );
        assert_eq!(eight.total.coincidences, one.total.coincidences);
        let summed = eight.per_channel.singles_signal * 8.0;
        assert!((summed - r.singles_signal).abs() <= 1e-12 * r.singles_signal);
    }

    #[test]
    fn watt_scenario_channel_count() {
        let sc =
            CountingScenario::from_brightness(0.56e6, 1000.0, 0.21, 0.21, 1e-9, 50e-9, 1).unwrap();
        // scan oracle written out directly from the rate formulas
        let singles = sc.generated_pair_rate * 0.21;
        let pairs = sc.generated_pair_rate * 0.21 * 0.21;
        let oracle = (1..=10_000u32)
            .find(|&n| {
                let per = singles / n as f64;
                let observed = per / (1.0 + per * 50e-9);
                let car = pairs / (singles * singles * 1e-9 / n as f64);
                observed <= 1e7 && car >= 10.0
            })
            .unwrap();
        assert_eq!(smallest_channel_count(&sc, 1e7, 10.0, 10_000), Some(oracle));
        assert_eq!(oracle, 134);
    }

    #[test]
    fn lossless_simulation_counts_every_birth() {
        let sc = scenario(2e5, 1.0, 1e-6, 0.0, 3);
        let es = simulate_event_streams(&sc, 0.5, 11).unwrap();
        let births = es.streams.iter().step_by(2).map(Vec::len).sum::<usize>();
        let counts = count_coincidences(&es, 1e-3).unwrap();
        assert_eq!(counts.total as usize, births);
        assert_eq!(counts.per_channel.len(), 3);
    }

    #[test]
    fn simulation_is_reproducible() {
        let sc = scenario(1e5, 0.4, 1e-9, 1e-7, 2);
        let a = simulate_event_streams(&sc, 0.2, 5).unwrap();
        let b = simulate_event_streams(&sc, 0.2, 5).unwrap();
        let c = simulate_event_streams(&sc, 0.2, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn binomial_pair_count() {
        let sc = scenario(1e6, 0.2, 1e-9, 0.0, 1);
        let es = simulate_event_streams(&sc, 10.0, 2024).unwrap();
        let n = count_coincidences(&es, 1e-9).unwrap().total as f64;
        let expected = 1e6 * 0.2 * 0.2 * 10.0;
        assert!((n - expected).abs() <= 5.0 * expected.sqrt(), "{n}");
    }

    #[test]
    fn uncorrelated_accidentals() {
        let es = simulate_uncorrelated_streams(1e5, 1e5, 100.0, 77).unwrap();
        let n = count_coincidences(&es, 1e-9).unwrap().total as f64;
        let expected = accidental_rate(1e5, 1e5, 1e-9) * 100.0;
        assert!((n - expected).abs() <= 5.0 * expected.sqrt(), "{n}");
    }

    #[test]
    fn dead_time_matches_nonparalyzable_rate() {
        let sc = scenario(2e6, 1.0, 1e-9, 2e-7, 1);
        let es = simulate_event_streams(&sc, 1.0, 9).unwrap();
        let observed = es.signal(0).len() as f64;
        let expected = dead_time_observed(2e6, 2e-7);
        assert!(
            (observed - expected).abs() <= 5.0 * expected.sqrt(),
            "{observed} vs {expected}"
        );
        assert!(es.signal(0).windows(2).all(|w| w[1] - w[0] >= 2e-7));
    }

    #[test]
    fn identical_and_disjoint_streams() {
        let s: Vec<f64> = (0..100).map(|k| k as f64 * 1e-3).collect();
        let es = EventStreams::new(vec![s.clone(), s.clone()], 1.0, 0).unwrap();
        assert_eq!(count_coincidences(&es, 1e-12).unwrap().total, 100);
        let shifted: Vec<f64> = s.iter().map(|t| t + 5e-4).collect();
        let es = EventStreams::new(vec![s, shifted], 1.0, 0).unwrap();
        assert_eq!(count_coincidences(&es, 1e-4).unwrap().total, 0);
    }

    #[test]
    fn window_is_one_sided() {
        let es = EventStreams::new(vec![vec![0.5], vec![0.5 - 1e-10]], 1.0, 0).unwrap();
        assert_eq!(count_coincidences(&es, 1e-9).unwrap().total, 0);
        let es = EventStreams::new(vec![vec![0.5], vec![0.75]], 1.0, 0).unwrap();
        assert_eq!(count_coincidences(&es, 0.25).unwrap().total, 0);
        assert_eq!(count_coincidences(&es, 0.2500001).unwrap().total, 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let unsorted = EventStreams {
            streams: vec![vec![0.2, 0.1], vec![]],
            duration_s: 1.0,
            seed: 0,
        };
        assert_eq!(
            count_coincidences(&unsorted, 1e-9),
            Err(CountingError::Unsorted {
                detector: 0,
                index: 1
            })
        );
        assert!(matches!(
            simulate_event_streams(&scenario(1e9, 0.5, 1e-9, 0.0, 1), 1.0, 0),
            Err(CountingError::EventBudget { .. })
        ));
        assert!(CountingScenario::new(1.0, 0.0, 0.5, 1e-9, 0.0, 1, 1.0).is_err());
        assert!(CountingScenario::new(1.0, 0.5, 0.5, 1e-9, 0.0, 0, 1.0).is_err());
    }

    #[test]
    fn monte_carlo_agrees_with_analytic_rates() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let duration = 1.0;
        for k in 0..20 {
            let rate = 10f64.powf(rng.random_range(4.0..6.0));
            let eta_s = rng.random_range(0.05..1.0);
            let eta_i = rng.random_range(0.05..1.0);
            let window = rng.random_range(0.5e-9..5e-9);
            let channels = rng.random_range(1..4);
            let sc = CountingScenario::new(rate, eta_s, eta_i, window, 0.0, channels, 1.0).unwrap();
            let es = simulate_event_streams(&sc, duration, 100 + k).unwrap();
            let m = multiplex_summary(&sc);
            let within = |observed: f64, rate: f64| {
                let expected = rate * duration;
                (observed - expected).abs() <= 5.0 * expected.max(1.0).sqrt()
            };
            let singles_s: usize = (0..es.channels()).map(|c| es.signal(c).len()).sum();
            let singles_i: usize = (0..es.channels()).map(|c| es.idler(c).len()).sum();
            assert!(
                within(singles_s as f64, m.total.singles_signal),
                "scenario {k}"
            );
            assert!(
                within(singles_i as f64, m.total.singles_idler),
                "scenario {k}"
            );
            let zero_delay = count_coincidences(&es, window).unwrap().total as f64;
            assert!(
                within(zero_delay, m.total.coincidences + m.total.accidentals),
                "scenario {k}"
            );
            let delayed = count_coincidences_delayed(&es, window, 1e-5).unwrap().total as f64;
            assert!(within(delayed, m.total.accidentals), "scenario {k}");
        }
    }

    proptest! {
        #[test]
        fn car_scales_with_channels(rate in 1e3f64..1e10, eta in 0.01f64..1.0, window in 1e-10f64..1e-8, n in 1u32..512) {
            let one = multiplex_summary(&scenario(rate, eta, window, 0.0, 1));
            let many = multiplex_summary(&scenario(rate, eta, window, 0.0, n));
            prop_assert!((many.total.car - n as f64 * one.total.car).abs() <= 1e-12 * many.total.car);
            let summed = many.per_channel.singles_signal * n as f64;
            prop_assert!((summed - one.total.singles_signal).abs() <= 1e-12 * one.total.singles_signal);
        }

        #[test]
        fn dead_time_monotone_and_bounded(a in 0.0f64..1e9, b in 0.0f64..1e9, tau in 1e-9f64..1e-5) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(dead_time_observed(lo, tau) <= dead_time_observed(hi, tau));
            prop_assert!(dead_time_observed(hi, tau) <= 1.0 / tau);
        }
    }
}
