//! Sweeps, immunity scans, initial slopes and protection-pattern
//! comparisons, all in double precision.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fidelity::{FidelityEngine, Method};
use crate::noise::{ChannelKind, KrausChannel, NoiseAssignment};
use crate::patterns::GateKind;

/// Error-rate probes used by the immunity scan.
pub const IMMUNITY_PROBES: [f64; 4] = [0.25, 0.5, 0.75, 1.0];
/// Distance from 1 below which a fidelity counts as unaffected.
pub const IMMUNITY_TOL: f64 = 1e-9;
/// Base step of the finite-difference slope.
pub const SLOPE_STEP: f64 = 1e-6;
/// Pointwise tolerance when ordering two curves.
pub const ORDER_TOL: f64 = 1e-12;

/// Maps an error rate to a channel.
pub trait ChannelFactory: Sync {
    fn name(&self) -> String;
    fn channel(&self, p: f64) -> Result<KrausChannel<f64>>;
}

impl ChannelFactory for ChannelKind {
    fn name(&self) -> String {
        ChannelKind::name(*self).to_string()
    }

    fn channel(&self, p: f64) -> Result<KrausChannel<f64>> {
        self.at(p)
    }
}

/// A named closure usable as a [`ChannelFactory`].
pub struct FnFactory<F> {
    pub name: String,
    pub build: F,
}

impl<F> ChannelFactory for FnFactory<F>
where
    F: Fn(f64) -> Result<KrausChannel<f64>> + Sync,
{
    fn name(&self) -> String {
        self.name.clone()
    }

    fn channel(&self, p: f64) -> Result<KrausChannel<f64>> {
        (self.build)(p)
    }
}

/// Fidelity as a function of the error rate, with the same channel on every
/// exposed qubit.
#[derive(Clone, Debug)]
pub struct FidelityCurve {
    pub gate: GateKind,
    pub channel: String,
    pub exposed: BTreeSet<usize>,
    pub method: Method,
    /// `(p, F)` with strictly increasing `p`.
    pub points: Vec<(f64, f64)>,
}

impl FidelityCurve {
    pub fn value_at(&self, p: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|(q, _)| (q - p).abs() <= 1e-12)
            .map(|&(_, f)| f)
    }

    /// Largest distance of a point from the straight line through the first
    /// and last points.
    pub fn max_affine_deviation(&self) -> f64 {
        let (Some(&(p0, f0)), Some(&(p1, f1))) = (self.points.first(), self.points.last()) else {
            return 0.0;
        };
        if p1 == p0 {
            return 0.0;
        }
        let slope = (f1 - f0) / (p1 - p0);
        self.points
            .iter()
            .map(|&(p, f)| (f - (f0 + slope * (p - p0))).abs())
            .fold(0.0, f64::max)
    }
}

/// Builds an inclusive grid `start, start+step, ...` up to `stop`; the last
/// point is kept when it lies within `step/2` of `stop`.
pub fn grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if step.is_nan() || step <= 0.0 || !start.is_finite() || !stop.is_finite() {
        return Err(Error::arg("grid needs finite bounds and a positive step"));
    }
    if stop < start {
        return Err(Error::arg("grid stop is below its start"));
    }
    let count = ((stop - start) / step + 0.5).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(Error::arg("grid has too many points"));
    }
    Ok((0..count)
        .map(|k| {
            let p = start + step * k as f64;
            // Snap to a clean decimal so CSV output reads naturally.
            (p * 1e12).round() / 1e12
        })
        .collect())
}

/// Default grid `0, 0.05, ..., 0.5`.
pub fn default_grid() -> Vec<f64> {
    grid(0.0, 0.5, 0.05).expect("valid default grid")
}

fn check_grid(points: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::arg("empty error-rate grid"));
    }
    if let Some(p) = points.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::arg(format!("error rate {p} outside [0, 1]")));
    }
    if points.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::arg("error-rate grid must be strictly increasing"));
    }
    Ok(())
}

fn check_qubits(
    engine: &FidelityEngine<f64>,
    gate: &GateKind,
    qubits: &BTreeSet<usize>,
) -> Result<()> {
    let n = engine.pattern(gate)?.num_qubits();
    if let Some(q) = qubits.iter().find(|&&q| q >= n) {
        return Err(Error::arg(format!(
            "qubit {q} is not in the {} pattern ({n} qubits)",
            gate.name()
        )));
    }
    Ok(())
}

fn assignment(
    factory: &dyn ChannelFactory,
    exposed: &BTreeSet<usize>,
    p: f64,
) -> Result<NoiseAssignment<f64>> {
    Ok(NoiseAssignment::uniform(
        exposed.iter().copied(),
        &factory.channel(p)?,
    ))
}

fn evaluate(
    engine: &FidelityEngine<f64>,
    gate: &GateKind,
    factory: &dyn ChannelFactory,
    exposed: &BTreeSet<usize>,
    p: f64,
    method: Method,
) -> Result<f64> {
    let noise = assignment(factory, exposed, p)?;
    Ok(match method {
        Method::Formula => engine.formula(gate, &noise)?.value,
        Method::Oracle => engine.oracle(gate, &noise)?.value,
    })
}

/// Evaluates the fidelity at every grid point. Points are computed in
/// parallel and returned in grid order.
pub fn sweep_curve(
    engine: &FidelityEngine<f64>,
    gate: &GateKind,
    factory: &dyn ChannelFactory,
    exposed: &BTreeSet<usize>,
    points: &[f64],
    method: Method,
) -> Result<FidelityCurve> {
    check_grid(points)?;
    check_qubits(engine, gate, exposed)?;
    let values = points
        .par_iter()
        .map(|&p| evaluate(engine, gate, factory, exposed, p, method).map(|f| (p, f)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FidelityCurve {
        gate: *gate,
        channel: factory.name(),
        exposed: exposed.clone(),
        method,
        points: values,
    })
}

#[derive(Clone, Debug)]
pub struct ImmunityRow {
    pub qubit: usize,
    pub label: String,
    pub channel: ChannelKind,
    /// Fidelity at each of [`IMMUNITY_PROBES`].
    pub values: [f64; 4],
    pub immune: bool,
}

#[derive(Clone, Debug)]
pub struct ImmunityReport {
    pub gate: GateKind,
    /// One row per (qubit, channel), qubit-major.
    pub rows: Vec<ImmunityRow>,
}

impl ImmunityReport {
    pub fn immune(&self) -> impl Iterator<Item = (usize, ChannelKind)> + '_ {
        self.rows
            .iter()
            .filter(|r| r.immune)
            .map(|r| (r.qubit, r.channel))
    }

    pub fn immune_qubits(&self, channel: ChannelKind) -> BTreeSet<usize> {
        self.immune()
            .filter(|&(_, c)| c == channel)
            .map(|(q, _)| q)
            .collect()
    }
}

/// Checks every (qubit, built-in channel) pair for exact immunity.
pub fn immunity_scan(engine: &FidelityEngine<f64>, gate: &GateKind) -> Result<ImmunityReport> {
    let pattern = engine.pattern(gate)?;
    let pairs: Vec<(usize, ChannelKind)> = (0..pattern.num_qubits())
        .flat_map(|q| ChannelKind::ALL.into_iter().map(move |c| (q, c)))
        .collect();
    let rows = pairs
        .par_iter()
        .map(|&(qubit, channel)| {
            let exposed = BTreeSet::from([qubit]);
            let mut values = [0.0; 4];
            for (v, &p) in values.iter_mut().zip(&IMMUNITY_PROBES) {
                *v = evaluate(engine, gate, &channel, &exposed, p, Method::Formula)?;
            }
            Ok(ImmunityRow {
                qubit,
                label: pattern.label_of(qubit),
                channel,
                values,
                immune: values.iter().all(|v| (v - 1.0).abs() <= IMMUNITY_TOL),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ImmunityReport { gate: *gate, rows })
}

#[derive(Clone, Debug)]
pub struct SlopeReport {
    pub gate: GateKind,
    pub channel: String,
    pub exposed: BTreeSet<usize>,
    /// Signed `dF/dp` at `p = 0`.
    pub slope: f64,
    pub per_qubit: BTreeMap<usize, f64>,
}

impl SlopeReport {
    /// `|slope − Σ per-qubit slopes|`.
    pub fn additivity_gap(&self) -> f64 {
        (self.slope - self.per_qubit.values().sum::<f64>()).abs()
    }
}

/// One-sided difference quotient at `p = 0` with one Richardson step,
/// `2 D(h/2) − D(h)`, which cancels the first-order error term.
fn slope_of(
    engine: &FidelityEngine<f64>,
    gate: &GateKind,
    factory: &dyn ChannelFactory,
    exposed: &BTreeSet<usize>,
) -> Result<f64> {
    if exposed.is_empty() {
        return Ok(0.0);
    }
    let f = |p| evaluate(engine, gate, factory, exposed, p, Method::Formula);
    let f0 = f(0.0)?;
    let h = SLOPE_STEP;
    let d_h = (f(h)? - f0) / h;
    let d_half = (f(h / 2.0)? - f0) / (h / 2.0);
    Ok(2.0 * d_half - d_h)
}

/// Initial slope of the fidelity for `exposed`, and of every singleton.
pub fn initial_slope(
    engine: &FidelityEngine<f64>,
    gate: &GateKind,
    factory: &dyn ChannelFactory,
    exposed: &BTreeSet<usize>,
) -> Result<SlopeReport> {
    check_qubits(engine, gate, exposed)?;
    let slope = slope_of(engine, gate, factory, exposed)?;
    let per_qubit = exposed
        .par_iter()
        .map(|&q| Ok((q, slope_of(engine, gate, factory, &BTreeSet::from([q]))?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    Ok(SlopeReport {
        gate: *gate,
        channel: factory.name(),
        exposed: exposed.clone(),
        slope,
        per_qubit,
    })
}

#[derive(Clone, Debug)]
pub struct AdditivityReport {
    pub subsets_checked: usize,
    pub max_gap: f64,
    /// Subset with the largest gap.
    pub worst: BTreeSet<usize>,
}

/// Compares the slope of every qubit subset of size `1..=max_size` with the
/// sum of its singleton slopes.
pub fn slope_additivity(
    engine: &FidelityEngine<f64>,
    gate: &GateKind,
    factory: &dyn ChannelFactory,
    max_size: usize,
) -> Result<AdditivityReport> {
    let n = engine.pattern(gate)?.num_qubits();
    let singles = (0..n)
        .map(|q| slope_of(engine, gate, factory, &BTreeSet::from([q])))
        .collect::<Result<Vec<_>>>()?;
    let subsets: Vec<BTreeSet<usize>> = (1u32..(1 << n))
        .filter(|m| (m.count_ones() as usize) <= max_size)
        .map(|m| (0..n).filter(|q| m & (1 << q) != 0).collect())
        .collect();
    let gaps = subsets
        .par_iter()
        .map(|s| {
            let total = slope_of(engine, gate, factory, s)?;
            let sum: f64 = s.iter().map(|&q| singles[q]).sum();
            Ok((total - sum).abs())
        })
        .collect::<Result<Vec<f64>>>()?;
    let (worst, max_gap) =
        gaps.iter().enumerate().fold(
            (0, 0.0),
            |(bi, bg), (i, &g)| if g > bg { (i, g) } else { (bi, bg) },
        );
    Ok(AdditivityReport {
        subsets_checked: subsets.len(),
        max_gap,
        worst: subsets.get(worst).cloned().unwrap_or_default(),
    })
}

/// Pointwise ordering of two curves.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dominance {
    /// Equal within [`ORDER_TOL`] everywhere.
    Equal,
    /// `F_A ≥ F_B` everywhere and strictly somewhere.
    ADominates,
    BDominates,
    Crossing,
}

impl fmt::Display for Dominance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dominance::Equal => "A = B",
            Dominance::ADominates => "A >= B",
            Dominance::BDominates => "B >= A",
            Dominance::Crossing => "crossing",
        })
    }
}

#[derive(Clone, Debug)]
pub struct PatternComparison {
    pub protected_a: BTreeSet<usize>,
    pub protected_b: BTreeSet<usize>,
    pub curve_a: FidelityCurve,
    pub curve_b: FidelityCurve,
    pub slope_a: SlopeReport,
    pub slope_b: SlopeReport,
    pub dominance: Dominance,
}

/// Exposes every pattern qubit outside each protected set and compares the
/// resulting curves.
pub fn compare_patterns(
    engine: &FidelityEngine<f64>,
    gate: &GateKind,
    factory: &dyn ChannelFactory,
    protected_a: &BTreeSet<usize>,
    protected_b: &BTreeSet<usize>,
    points: &[f64],
) -> Result<PatternComparison> {
    check_qubits(engine, gate, protected_a)?;
    check_qubits(engine, gate, protected_b)?;
    let n = engine.pattern(gate)?.num_qubits();
    let exposed = |protected: &BTreeSet<usize>| -> BTreeSet<usize> {
        (0..n).filter(|q| !protected.contains(q)).collect()
    };
    let (ea, eb) = (exposed(protected_a), exposed(protected_b));
    let curve_a = sweep_curve(engine, gate, factory, &ea, points, Method::Formula)?;
    let curve_b = sweep_curve(engine, gate, factory, &eb, points, Method::Formula)?;
    let slope_a = initial_slope(engine, gate, factory, &ea)?;
    let slope_b = initial_slope(engine, gate, factory, &eb)?;

    let diffs: Vec<f64> = curve_a
        .points
        .iter()
        .zip(&curve_b.points)
        .map(|(a, b)| a.1 - b.1)
        .collect();
    let a_above = diffs.iter().any(|&d| d > ORDER_TOL);
    let b_above = diffs.iter().any(|&d| d < -ORDER_TOL);
    let dominance = match (a_above, b_above) {
        (false, false) => Dominance::Equal,
        (true, false) => Dominance::ADominates,
        (false, true) => Dominance::BDominates,
        (true, true) => Dominance::Crossing,
    };
    Ok(PatternComparison {
        protected_a: protected_a.clone(),
        protected_b: protected_b.clone(),
        curve_a,
        curve_b,
        slope_a,
        slope_b,
        dominance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn engine() -> FidelityEngine<f64> {
        FidelityEngine::default()
    }

    #[test]
    fn grid_is_inclusive() {
        let g = grid(0.0, 0.5, 0.05).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[10], 0.5);
        assert_eq!(g[3], 0.15);
        assert_eq!(grid(0.0, 0.52, 0.05).unwrap().len(), 11);
        assert_eq!(grid(0.0, 0.53, 0.05).unwrap().len(), 12);
        assert!(grid(0.0, 0.5, 0.0).is_err());
        assert!(grid(0.5, 0.0, 0.1).is_err());
    }

    #[test]
    fn sweep_validation() {
        let e = engine();
        let g = GateKind::Identity;
        let none = BTreeSet::new();
        let k = ChannelKind::Dephasing;
        assert!(sweep_curve(&e, &g, &k, &none, &[], Method::Formula).is_err());
        assert!(sweep_curve(&e, &g, &k, &none, &[0.2, 0.1], Method::Formula).is_err());
        assert!(sweep_curve(&e, &g, &k, &none, &[1.5], Method::Formula).is_err());
        assert!(sweep_curve(&e, &g, &k, &BTreeSet::from([7]), &[0.1], Method::Formula).is_err());
    }

    #[test]
    fn empty_exposure_is_flat() {
        let e = engine();
        let c = sweep_curve(
            &e,
            &GateKind::Hadamard,
            &ChannelKind::AmplitudeDamping,
            &BTreeSet::new(),
            &default_grid(),
            Method::Formula,
        )
        .unwrap();
        assert!(c.points.iter().all(|&(_, f)| (f - 1.0).abs() < 1e-12));
        let s = initial_slope(
            &e,
            &GateKind::Hadamard,
            &ChannelKind::Dephasing,
            &BTreeSet::new(),
        )
        .unwrap();
        assert_eq!(s.slope, 0.0);
    }

    #[test]
    fn dephasing_on_a_chain_qubit_is_linear() {
        let e = engine();
        let c = sweep_curve(
            &e,
            &GateKind::Identity,
            &ChannelKind::Dephasing,
            &BTreeSet::from([3]),
            &default_grid(),
            Method::Formula,
        )
        .unwrap();
        assert!(c.max_affine_deviation() < 1e-9);
        assert!((c.value_at(0.5).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn custom_factory() {
        let e = engine();
        let f = FnFactory {
            name: "half-dephasing".into(),
            build: |p: f64| KrausChannel::dephasing(p / 2.0),
        };
        let c = sweep_curve(
            &e,
            &GateKind::Identity,
            &f,
            &BTreeSet::from([3]),
            &[0.0, 1.0],
            Method::Formula,
        )
        .unwrap();
        assert!((c.points[1].1 - 0.5).abs() < 1e-12);
        assert_eq!(c.channel, "half-dephasing");
    }

    #[test]
    fn identity_immunity() {
        let r = immunity_scan(&engine(), &GateKind::Identity).unwrap();
        assert_eq!(
            r.immune_qubits(ChannelKind::Dephasing),
            BTreeSet::from([0, 6])
        );
        assert_eq!(
            r.immune_qubits(ChannelKind::BitFlip),
            BTreeSet::from([2, 3, 4])
        );
    }

    #[test]
    fn hadamard_slopes() {
        let e = engine();
        let g = GateKind::Hadamard;
        let s = initial_slope(&e, &g, &ChannelKind::Dephasing, &BTreeSet::from([2, 4, 6])).unwrap();
        assert!((s.slope + 3.0).abs() < 1e-6, "{}", s.slope);
        assert!(s.additivity_gap() < 1e-6);
    }

    #[test]
    fn identical_protection_gives_identical_curves() {
        let e = engine();
        let p = BTreeSet::from([1, 3, 5]);
        let c = compare_patterns(
            &e,
            &GateKind::Hadamard,
            &ChannelKind::Dephasing,
            &p,
            &p,
            &default_grid(),
        )
        .unwrap();
        assert_eq!(c.dominance, Dominance::Equal);
        assert_eq!(c.curve_a.points, c.curve_b.points);
    }
}
