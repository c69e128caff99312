//! Sequential projective readout of one site: trajectory enumeration and
//! classical Fisher information with respect to the local field `B_x`.
//!
//! Each round evolves the state freely for `τ_i` under the local-field
//! Hamiltonian, then measures `S^z` of the readout site, which has six
//! outcomes. The outcome tree is expanded depth-first in descending `m_z`
//! order, so identical configurations produce identical trees.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dicke::{dicke_state, DickeIndex, Propagator, StateVector};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::fit::{fit_power_law, PowerLawFit};
use crate::half::HalfInteger;
use crate::operator::{diagonalize, HermitianOperator, Unit};
use crate::spin::{build_hamiltonian_local_x, site_level, ModelParameters, SpinQuantum, SITES};

/// Conditional outcome probabilities at or below this are dropped; their mass
/// is added to the tree remainder.
pub const OUTCOME_CUTOFF: f64 = 1e-15;
/// Trajectories with probability below this are left out of the Fisher sum.
pub const FISHER_PROBABILITY_CUTOFF: f64 = 1e-12;
pub const DEFAULT_DELTA_B: f64 = 1e-4;
pub const MAX_PRUNE_THRESHOLD: f64 = 1e-6;
/// Largest remainder for which a Fisher information is reported.
pub const MAX_TRUSTED_REMAINDER: f64 = 1e-6;
/// 6^6: exhaustive enumeration up to six measurements.
pub const DEFAULT_LEAF_BUDGET: u64 = 46_656;
pub const DEFAULT_MEASURED_SITE: usize = 3;

const OUTCOMES: usize = 6;

/// Flat basis indices belonging to each readout outcome of one site.
#[derive(Debug, Clone)]
struct SiteReadout {
    indices: Vec<Vec<usize>>,
}

impl SiteReadout {
    fn new(site: usize) -> Result<Self> {
        if !(1..=SITES).contains(&site) {
            return Err(Error::InvalidSite { site, sites: SITES });
        }
        let spin = SpinQuantum::FE3;
        let d = spin.local_dim();
        let mut indices = vec![Vec::with_capacity(spin.cluster_dim() / d); d];
        for i in 0..spin.cluster_dim() {
            indices[site_level(i, site, d)].push(i);
        }
        Ok(Self { indices })
    }

    fn m_z(&self, level: usize) -> HalfInteger {
        SpinQuantum::FE3.m_half_of_level(level)
    }

    fn probability(&self, psi: &DVector<Complex64>, level: usize) -> f64 {
        self.indices[level].iter().map(|&i| psi[i].norm_sqr()).sum()
    }

    fn project(&self, psi: &DVector<Complex64>, level: usize, p: f64) -> StateVector {
        let mut out = DVector::zeros(psi.len());
        let scale = 1.0 / p.sqrt();
        for &i in &self.indices[level] {
            out[i] = psi[i] * scale;
        }
        StateVector::from_normalized(out)
    }
}

/// The six `I ⊗ I ⊗ |m⟩⟨m|`-type projectors of one site, ordered by descending `m`.
#[derive(Debug, Clone)]
pub struct MeasurementProjectors {
    pub site: usize,
    pub outcomes: Vec<HalfInteger>,
    pub projectors: Vec<HermitianOperator>,
}

pub fn build_projectors(site: usize) -> Result<MeasurementProjectors> {
    let readout = SiteReadout::new(site)?;
    let dim = SpinQuantum::FE3.cluster_dim();
    let mut outcomes = Vec::with_capacity(OUTCOMES);
    let mut projectors = Vec::with_capacity(OUTCOMES);
    for level in 0..OUTCOMES {
        let mut diag = vec![0.0; dim];
        for &i in &readout.indices[level] {
            diag[i] = 1.0;
        }
        outcomes.push(readout.m_z(level));
        projectors.push(HermitianOperator::from_real_diagonal(&diag, Unit::Dimensionless));
    }
    Ok(MeasurementProjectors { site, outcomes, projectors })
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub m_z: HalfInteger,
    pub probability: f64,
    pub post_state: StateVector,
}

/// One free evolution followed by a readout of `site`. Outcomes with
/// probability at or below [`OUTCOME_CUTOFF`] are omitted.
pub fn protocol_step_with(v: &StateVector, propagator: &Propagator, site: usize) -> Result<Vec<StepOutcome>> {
    let readout = SiteReadout::new(site)?;
    let evolved = propagator.apply(v);
    let psi = evolved.amplitudes();
    Ok((0..OUTCOMES)
        .filter_map(|level| {
            let p = readout.probability(psi, level);
            (p > OUTCOME_CUTOFF).then(|| StepOutcome {
                m_z: readout.m_z(level),
                probability: p,
                post_state: readout.project(psi, level, p),
            })
        })
        .collect())
}

/// [`protocol_step_with`] for a single step of length `tau` at `model.b_x`.
pub fn protocol_step(v: &StateVector, tau: f64, model: &ModelParameters, site: usize) -> Result<Vec<StepOutcome>> {
    let d = diagonalize(&build_hamiltonian_local_x(&model.with_b_z(0.0))?)?;
    protocol_step_with(v, &Propagator::new(&d, tau), site)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Exchange, g-factor and the sensed field `b_x`; `b_z` is ignored.
    pub model: ModelParameters,
    pub dicke_k: DickeIndex,
    pub n_seq: usize,
    /// Free-evolution durations θ_i (dimensionless), one per measurement.
    pub tau_list: Vec<f64>,
    pub measured_site: usize,
    pub prune_threshold: f64,
    pub leaf_budget: u64,
}

impl ProtocolConfig {
    /// Equal intervals, site-3 readout, exhaustive enumeration.
    pub fn uniform(model: ModelParameters, dicke_k: DickeIndex, n_seq: usize, tau: f64) -> Self {
        Self {
            model,
            dicke_k,
            n_seq,
            tau_list: vec![tau; n_seq],
            measured_site: DEFAULT_MEASURED_SITE,
            prune_threshold: 0.0,
            leaf_budget: DEFAULT_LEAF_BUDGET,
        }
    }

    pub fn b_x(&self) -> f64 {
        self.model.b_x
    }

    /// Same protocol truncated to its first `n_seq` measurements.
    pub fn truncated(&self, n_seq: usize) -> Self {
        let n = n_seq.min(self.n_seq);
        Self { n_seq: n, tau_list: self.tau_list[..n].to_vec(), ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.n_seq == 0 {
            return Err(Error::InvalidParameter("n_seq must be at least 1".into()));
        }
        if self.tau_list.len() != self.n_seq {
            return Err(Error::InvalidParameter(format!(
                "tau_list has {} entries for n_seq = {}",
                self.tau_list.len(),
                self.n_seq
            )));
        }
        if self.tau_list.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter("all tau must be positive".into()));
        }
        if !(0.0..=MAX_PRUNE_THRESHOLD).contains(&self.prune_threshold) {
            return Err(Error::InvalidParameter(format!(
                "prune threshold {} outside [0, {MAX_PRUNE_THRESHOLD}]",
                self.prune_threshold
            )));
        }
        if !(1..=SITES).contains(&self.measured_site) {
            return Err(Error::InvalidSite { site: self.measured_site, sites: SITES });
        }
        let full = (OUTCOMES as u64).checked_pow(self.n_seq as u32).unwrap_or(u64::MAX);
        if self.prune_threshold == 0.0 && full > self.leaf_budget {
            return Err(Error::BudgetExceeded { leaves: full, budget: self.leaf_budget });
        }
        Ok(())
    }
}

/// Propagators for each step, sharing one diagonalization and reusing
/// identical step lengths.
fn step_propagators(model: &ModelParameters, tau_list: &[f64]) -> Result<Vec<std::sync::Arc<Propagator>>> {
    let d = diagonalize(&build_hamiltonian_local_x(&model.with_b_z(0.0))?)?;
    let mut out: Vec<std::sync::Arc<Propagator>> = Vec::with_capacity(tau_list.len());
    for &tau in tau_list {
        match out.iter().find(|u| u.theta() == tau) {
            Some(u) => out.push(u.clone()),
            None => out.push(std::sync::Arc::new(Propagator::new(&d, tau))),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct TrajectoryNode {
    pub outcomes: Vec<HalfInteger>,
    pub probability: f64,
    pub post_state: Option<StateVector>,
}

#[derive(Debug, Clone)]
pub struct TrajectoryTree {
    /// Complete trajectories of length `n_seq`, in expansion order.
    pub leaves: Vec<TrajectoryNode>,
    /// Probability mass of pruned branches and omitted outcomes.
    pub remainder: f64,
}

impl TrajectoryTree {
    pub fn total_probability(&self) -> f64 {
        self.leaves.iter().map(|l| l.probability).sum::<f64>() + self.remainder
    }
}

struct Expansion<'a> {
    readout: &'a SiteReadout,
    steps: &'a [std::sync::Arc<Propagator>],
    prune_threshold: f64,
    keep_states: bool,
    budget: u64,
}

#[derive(Default)]
struct Partial {
    leaves: Vec<TrajectoryNode>,
    remainder: f64,
}

impl Expansion<'_> {
    /// Children of a node whose next step is `depth`: (outcome, probability, state).
    fn children(
        &self,
        state: &StateVector,
        prob: f64,
        depth: usize,
        acc: &mut Partial,
    ) -> Vec<(HalfInteger, f64, StateVector)> {
        let evolved = self.steps[depth].apply(state);
        let psi = evolved.amplitudes();
        let mut out = Vec::with_capacity(OUTCOMES);
        for level in 0..OUTCOMES {
            let p = self.readout.probability(psi, level);
            let child = prob * p;
            if p <= OUTCOME_CUTOFF || child < self.prune_threshold {
                acc.remainder += child;
                continue;
            }
            out.push((self.readout.m_z(level), child, self.readout.project(psi, level, p)));
        }
        out
    }

    fn descend(
        &self,
        outcomes: &mut Vec<HalfInteger>,
        state: &StateVector,
        prob: f64,
        acc: &mut Partial,
    ) -> Result<()> {
        let depth = outcomes.len();
        if depth == self.steps.len() {
            if acc.leaves.len() as u64 >= self.budget {
                return Err(Error::BudgetExceeded { leaves: acc.leaves.len() as u64 + 1, budget: self.budget });
            }
            acc.leaves.push(TrajectoryNode {
                outcomes: outcomes.clone(),
                probability: prob,
                post_state: self.keep_states.then(|| state.clone()),
            });
            return Ok(());
        }
        for (m, p, child) in self.children(state, prob, depth, acc) {
            outcomes.push(m);
            self.descend(outcomes, &child, p, acc)?;
            outcomes.pop();
        }
        Ok(())
    }
}

fn expand_tree(c: &ProtocolConfig, keep_states: bool, exec: Execution) -> Result<TrajectoryTree> {
    c.validate()?;
    let readout = SiteReadout::new(c.measured_site)?;
    let steps = step_propagators(&c.model, &c.tau_list)?;
    let exp = Expansion {
        readout: &readout,
        steps: &steps,
        prune_threshold: c.prune_threshold,
        keep_states,
        budget: c.leaf_budget,
    };
    let initial = dicke_state(c.dicke_k)?;

    let mut root = Partial::default();
    let first = exp.children(&initial, 1.0, 0, &mut root);
    let subtrees = exec.map(&first, |(m, p, state)| -> Result<Partial> {
        let mut acc = Partial::default();
        exp.descend(&mut vec![*m], state, *p, &mut acc)?;
        Ok(acc)
    });
    let mut tree = TrajectoryTree { leaves: Vec::new(), remainder: root.remainder };
    for sub in subtrees {
        let sub = sub?;
        tree.leaves.extend(sub.leaves);
        tree.remainder += sub.remainder;
        if tree.leaves.len() as u64 > c.leaf_budget {
            return Err(Error::BudgetExceeded { leaves: tree.leaves.len() as u64, budget: c.leaf_budget });
        }
    }
    Ok(tree)
}

/// Full outcome tree of depth `n_seq`, with the post-measurement state of every leaf.
pub fn enumerate_trajectories(c: &ProtocolConfig, exec: Execution) -> Result<TrajectoryTree> {
    expand_tree(c, true, exec)
}

/// As [`enumerate_trajectories`] without storing leaf states.
pub fn trajectory_probabilities(c: &ProtocolConfig, exec: Execution) -> Result<TrajectoryTree> {
    expand_tree(c, false, exec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CfiEstimate {
    pub n_seq: usize,
    /// Classical Fisher information, T⁻².
    pub f_value: f64,
    pub inverse: f64,
    /// Trajectories skipped because their probability is below [`FISHER_PROBABILITY_CUTOFF`].
    pub excluded_terms: usize,
    pub excluded_mass: f64,
    /// Largest tree remainder over the three field values.
    pub pruning_remainder: f64,
}

// Field offsets -δ, 0, +δ.
const FIELDS: usize = 3;
const BASE: usize = 1;

#[derive(Clone)]
struct FisherAccumulator {
    f: Vec<f64>,
    excluded_terms: Vec<usize>,
    excluded_mass: Vec<f64>,
    /// Mass removed when creating children at each depth, per field.
    removed: [Vec<f64>; FIELDS],
}

impl FisherAccumulator {
    fn new(n: usize) -> Self {
        Self {
            f: vec![0.0; n + 1],
            excluded_terms: vec![0; n + 1],
            excluded_mass: vec![0.0; n + 1],
            removed: [vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]],
        }
    }

    fn merge(&mut self, other: &FisherAccumulator) {
        for n in 0..self.f.len() {
            self.f[n] += other.f[n];
            self.excluded_terms[n] += other.excluded_terms[n];
            self.excluded_mass[n] += other.excluded_mass[n];
            for k in 0..FIELDS {
                self.removed[k][n] += other.removed[k][n];
            }
        }
    }
}

#[derive(Clone)]
struct JointNode {
    states: [Option<StateVector>; FIELDS],
    probs: [f64; FIELDS],
}

struct JointExpansion<'a> {
    readout: &'a SiteReadout,
    steps: [Vec<std::sync::Arc<Propagator>>; FIELDS],
    prune_threshold: f64,
    delta_b: f64,
}

impl JointExpansion<'_> {
    fn children(&self, node: &JointNode, depth: usize, acc: &mut FisherAccumulator) -> Vec<JointNode> {
        let evolved: [Option<StateVector>; FIELDS] =
            std::array::from_fn(|k| node.states[k].as_ref().map(|s| self.steps[k][depth].apply(s)));
        let mut out = Vec::with_capacity(OUTCOMES);
        for level in 0..OUTCOMES {
            let mut child = JointNode { states: [None, None, None], probs: [0.0; FIELDS] };
            let mut live = false;
            let mut cond = [0.0; FIELDS];
            for k in 0..FIELDS {
                if let Some(psi) = &evolved[k] {
                    cond[k] = self.readout.probability(psi.amplitudes(), level);
                    child.probs[k] = node.probs[k] * cond[k];
                    live |= cond[k] > OUTCOME_CUTOFF;
                }
            }
            let pruned = child.probs.iter().all(|&p| p < self.prune_threshold);
            if !live || pruned {
                for k in 0..FIELDS {
                    acc.removed[k][depth + 1] += child.probs[k];
                }
                continue;
            }
            for k in 0..FIELDS {
                if let Some(psi) = &evolved[k] {
                    if cond[k] > OUTCOME_CUTOFF {
                        child.states[k] = Some(self.readout.project(psi.amplitudes(), level, cond[k]));
                    } else {
                        acc.removed[k][depth + 1] += child.probs[k];
                        child.probs[k] = 0.0;
                    }
                }
            }
            out.push(child);
        }
        out
    }

    fn record(&self, node: &JointNode, depth: usize, acc: &mut FisherAccumulator) {
        let p = node.probs[BASE];
        if p < FISHER_PROBABILITY_CUTOFF {
            acc.excluded_terms[depth] += 1;
            acc.excluded_mass[depth] += p;
            return;
        }
        let dp = (node.probs[2] - node.probs[0]) / (2.0 * self.delta_b);
        acc.f[depth] += dp * dp / p;
    }

    fn descend(&self, node: &JointNode, depth: usize, acc: &mut FisherAccumulator) {
        self.record(node, depth, acc);
        if depth == self.steps[BASE].len() {
            return;
        }
        for child in self.children(node, depth, acc) {
            self.descend(&child, depth + 1, acc);
        }
    }
}

/// Fisher information for every prefix length `1..=n_seq` from one joint
/// expansion at `b_x - δ`, `b_x`, `b_x + δ`; derivatives by central difference.
pub fn fisher_information_series(c: &ProtocolConfig, delta_b: f64, exec: Execution) -> Result<Vec<CfiEstimate>> {
    c.validate()?;
    if !(delta_b > 0.0) || !delta_b.is_finite() {
        return Err(Error::InvalidParameter(format!("delta_b must be positive, got {delta_b}")));
    }
    let readout = SiteReadout::new(c.measured_site)?;
    let fields = [c.b_x() - delta_b, c.b_x(), c.b_x() + delta_b];
    let mut steps: [Vec<std::sync::Arc<Propagator>>; FIELDS] = Default::default();
    for k in 0..FIELDS {
        steps[k] = step_propagators(&c.model.with_b_x(fields[k]), &c.tau_list)?;
    }
    let exp = JointExpansion { readout: &readout, steps, prune_threshold: c.prune_threshold, delta_b };

    let initial = dicke_state(c.dicke_k)?;
    let root =
        JointNode { states: [Some(initial.clone()), Some(initial.clone()), Some(initial)], probs: [1.0; FIELDS] };
    let n = c.n_seq;
    let mut total = FisherAccumulator::new(n);
    let first = exp.children(&root, 0, &mut total);
    let subtrees = exec.map(&first, |child| {
        let mut acc = FisherAccumulator::new(n);
        exp.descend(child, 1, &mut acc);
        acc
    });
    for sub in &subtrees {
        total.merge(sub);
    }

    let mut out = Vec::with_capacity(n);
    let mut removed = [0.0; FIELDS];
    for depth in 1..=n {
        for (r, per_depth) in removed.iter_mut().zip(&total.removed) {
            *r += per_depth[depth];
        }
        let remainder = removed.iter().copied().fold(0.0, f64::max);
        if remainder > MAX_TRUSTED_REMAINDER {
            return Err(Error::UntrustedFisher(remainder));
        }
        let f = total.f[depth];
        out.push(CfiEstimate {
            n_seq: depth,
            f_value: f,
            inverse: 1.0 / f,
            excluded_terms: total.excluded_terms[depth],
            excluded_mass: total.excluded_mass[depth],
            pruning_remainder: remainder,
        });
    }
    Ok(out)
}

/// Fisher information of the full `n_seq`-measurement protocol.
pub fn classical_fisher_information(c: &ProtocolConfig, delta_b: f64, exec: Execution) -> Result<CfiEstimate> {
    Ok(*fisher_information_series(c, delta_b, exec)?.last().expect("n_seq ≥ 1"))
}

/// Fisher information for `n = 1..=n_seq` with the power-law fit of `1/F` against `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensingScan {
    pub dicke_k: u32,
    pub b_x: f64,
    pub tau: Vec<f64>,
    pub estimates: Vec<CfiEstimate>,
    pub fit: PowerLawFit,
}

impl SensingScan {
    /// `1/F` strictly decreasing in `n_seq`.
    pub fn inverse_strictly_decreasing(&self) -> bool {
        self.estimates.windows(2).all(|w| w[1].inverse < w[0].inverse)
    }
}

pub fn sensing_scan(c: &ProtocolConfig, delta_b: f64, exec: Execution) -> Result<SensingScan> {
    let estimates = fisher_information_series(c, delta_b, exec)?;
    let points: Vec<(f64, f64)> = estimates.iter().map(|e| (e.n_seq as f64, e.inverse)).collect();
    let fit = fit_power_law(&points)?;
    Ok(SensingScan { dicke_k: c.dicke_k.get(), b_x: c.b_x(), tau: c.tau_list.clone(), estimates, fit })
}

const TAU_LADDER_START: f64 = 0.01;
const TAU_LADDER_STEPS: usize = 24;
const NONDEGENERATE_MAX_P: f64 = 0.999;

/// Default step length: the first `0.01 · 2^k` for which one step from
/// `|D_0⟩` at `B_x = 1 T` has no outcome with probability ≥ 0.999.
pub fn default_tau(model: &ModelParameters) -> Result<f64> {
    let d = diagonalize(&build_hamiltonian_local_x(&model.with_b_z(0.0).with_b_x(1.0))?)?;
    let initial = dicke_state(DickeIndex::new(0)?)?;
    let mut tau = TAU_LADDER_START;
    for _ in 0..TAU_LADDER_STEPS {
        let outcomes = protocol_step_with(&initial, &Propagator::new(&d, tau), DEFAULT_MEASURED_SITE)?;
        let max_p = outcomes.iter().map(|o| o.probability).fold(0.0, f64::max);
        if max_p < NONDEGENERATE_MAX_P {
            return Ok(tau);
        }
        tau *= 2.0;
    }
    Err(Error::Inconsistent("no step length yields a non-degenerate readout".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::max_abs;
    use nalgebra::DMatrix;

    fn d(k: u32) -> DickeIndex {
        DickeIndex::new(k).unwrap()
    }

    #[test]
    fn projectors_resolve_identity() {
        let proj = build_projectors(3).unwrap();
        assert_eq!(proj.outcomes.first().unwrap().to_string(), "5/2");
        let mut sum = DMatrix::<Complex64>::zeros(216, 216);
        for (a, pa) in proj.projectors.iter().enumerate() {
            sum += pa.matrix();
            let sq = pa.matrix() * pa.matrix();
            assert!(max_abs(&(sq - pa.matrix())) < 1e-12);
            for pb in &proj.projectors[a + 1..] {
                assert!(max_abs(&(pa.matrix() * pb.matrix())) < 1e-12);
            }
        }
        assert!(max_abs(&(sum - DMatrix::identity(216, 216))) < 1e-12);
        assert!(build_projectors(0).is_err());
    }

    #[test]
    fn projectors_on_lowest_dicke_state() {
        let proj = build_projectors(3).unwrap();
        let d0 = dicke_state(d(0)).unwrap();
        assert_eq!(d0.expectation(&proj.projectors[0]).unwrap(), 0.0);
        assert_eq!(d0.expectation(&proj.projectors[5]).unwrap(), 1.0);
    }

    #[test]
    fn zero_field_step_is_deterministic() {
        let model = ModelParameters::fe3();
        let out = protocol_step(&dicke_state(d(0)).unwrap(), 0.3, &model, 3).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].m_z, HalfInteger::from_twice(-5));
        assert!((out[0].probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn step_is_complete() {
        let model = ModelParameters::fe3().with_b_x(5.0);
        for k in 0..4 {
            let out = protocol_step(&dicke_state(d(k)).unwrap(), 0.7, &model, 3).unwrap();
            let total: f64 = out.iter().map(|o| o.probability).sum();
            assert!((total - 1.0).abs() < 1e-10);
            for o in &out {
                assert!((o.post_state.norm() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn config_validation() {
        let model = ModelParameters::fe3().with_b_x(1.0);
        let mut c = ProtocolConfig::uniform(model, d(0), 3, 0.1);
        assert!(c.validate().is_ok());
        c.tau_list.pop();
        assert!(c.validate().is_err());
        let mut c = ProtocolConfig::uniform(model, d(0), 3, 0.1);
        c.prune_threshold = 1e-3;
        assert!(c.validate().is_err());
        let c = ProtocolConfig::uniform(model, d(0), 7, 0.1);
        assert!(matches!(c.validate(), Err(Error::BudgetExceeded { .. })));
        let c = ProtocolConfig::uniform(model, d(0), 0, 0.1);
        assert!(c.validate().is_err());
        let c = ProtocolConfig::uniform(model, d(0), 2, -0.1);
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_measurement_tree_is_the_step() {
        let model = ModelParameters::fe3().with_b_x(1.0);
        let c = ProtocolConfig::uniform(model, d(1), 1, 0.4);
        let tree = enumerate_trajectories(&c, Execution::Sequential).unwrap();
        let step = protocol_step(&dicke_state(d(1)).unwrap(), 0.4, &model, 3).unwrap();
        assert_eq!(tree.leaves.len(), step.len());
        for (leaf, o) in tree.leaves.iter().zip(&step) {
            assert_eq!(leaf.outcomes, vec![o.m_z]);
            assert!((leaf.probability - o.probability).abs() < 1e-14);
            let state = leaf.post_state.as_ref().unwrap();
            assert!((state.amplitudes() - o.post_state.amplitudes()).norm() < 1e-12);
        }
    }

    #[test]
    fn three_measurement_tree_is_complete() {
        let model = ModelParameters::fe3().with_b_x(5.0);
        let c = ProtocolConfig::uniform(model, d(2), 3, 0.5);
        let tree = enumerate_trajectories(&c, Execution::Parallel).unwrap();
        assert!(tree.leaves.len() <= 216);
        assert!((tree.total_probability() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_field_gives_single_trajectory() {
        let c = ProtocolConfig::uniform(ModelParameters::fe3(), d(0), 4, 0.3);
        let tree = trajectory_probabilities(&c, Execution::Sequential).unwrap();
        assert_eq!(tree.leaves.len(), 1);
        assert_eq!(tree.leaves[0].outcomes, vec![HalfInteger::from_twice(-5); 4]);
        assert!((tree.leaves[0].probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pruning_moves_mass_to_remainder() {
        let model = ModelParameters::fe3().with_b_x(1.0);
        let mut c = ProtocolConfig::uniform(model, d(3), 3, 0.3);
        c.prune_threshold = 1e-6;
        let tree = trajectory_probabilities(&c, Execution::Sequential).unwrap();
        assert!(tree.remainder > 0.0);
        assert!(tree.leaves.iter().all(|l| l.probability >= 1e-6));
        assert!((tree.total_probability() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fisher_is_nonnegative_at_zero_field() {
        let c = ProtocolConfig::uniform(ModelParameters::fe3(), d(0), 2, 0.3);
        let f = classical_fisher_information(&c, DEFAULT_DELTA_B, Execution::Sequential).unwrap();
        assert!(f.f_value >= 0.0);
        assert!(classical_fisher_information(&c, 0.0, Execution::Sequential).is_err());
    }

    #[test]
    fn series_matches_separate_runs() {
        let model = ModelParameters::fe3().with_b_x(1.0);
        let c = ProtocolConfig::uniform(model, d(1), 3, 0.2);
        let series = fisher_information_series(&c, DEFAULT_DELTA_B, Execution::Sequential).unwrap();
        for n in 1..=3 {
            let alone = classical_fisher_information(&c.truncated(n), DEFAULT_DELTA_B, Execution::Sequential).unwrap();
            assert!((alone.f_value - series[n - 1].f_value).abs() <= 1e-12 * alone.f_value);
        }
    }

    #[test]
    fn default_step_length() {
        let tau = default_tau(&ModelParameters::fe3()).unwrap();
        assert!((tau - 0.08).abs() < 1e-12);
    }
}
