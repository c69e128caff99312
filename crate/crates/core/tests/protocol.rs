//! Sequential-measurement protocol: small-step oracle, determinism across
//! execution modes, pruning and error paths.

use spin_triangle::dicke::{dicke_state, DickeIndex};
use spin_triangle::sensing::{
    classical_fisher_information, default_tau, enumerate_trajectories, fisher_information_series, protocol_step,
    sensing_scan, trajectory_probabilities, ProtocolConfig, DEFAULT_DELTA_B,
};
use spin_triangle::{Error, Execution, HalfInteger, ModelParameters};

fn d(k: u32) -> DickeIndex {
    DickeIndex::new(k).unwrap()
}

/// Leading order of `p(m_3 = -3/2)` from `|D_0⟩`: the transverse field lifts
/// site 1 (amplitude `gμ_B B √5 / 2`), exchange moves the excitation to site 3
/// (amplitude `5J/2`), and the second-order propagator term contributes
/// `τ²/2` times their product.
fn second_order_transfer(p: &ModelParameters, tau: f64) -> f64 {
    let field = p.zeeman_kelvin_per_tesla() * p.b_x * 5f64.sqrt() / 2.0;
    let hop = 2.5 * p.j_kelvin();
    let amp = 0.5 * tau * tau * field * hop;
    amp * amp
}

#[test]
fn small_step_matches_second_order_expansion() {
    let p = ModelParameters::fe3().with_b_x(1.0);
    let v = dicke_state(d(0)).unwrap();
    for (tau, tol) in [(1e-4, 0.01), (3e-4, 0.05)] {
        let out = protocol_step(&v, tau, &p, 3).unwrap();
        let p_low = out.iter().find(|o| o.m_z == HalfInteger::from_twice(-3)).unwrap().probability;
        let oracle = second_order_transfer(&p, tau);
        assert!((p_low / oracle - 1.0).abs() < tol, "tau {tau}: {p_low:e} vs {oracle:e}");
        // the unexcited outcome dominates
        let top = out.iter().max_by(|a, b| a.probability.total_cmp(&b.probability)).unwrap();
        assert_eq!(top.m_z, HalfInteger::from_twice(-5));
    }
}

#[test]
fn outcomes_in_descending_order() {
    let p = ModelParameters::fe3().with_b_x(5.0);
    let out = protocol_step(&dicke_state(d(7)).unwrap(), 0.3, &p, 3).unwrap();
    assert!(out.windows(2).all(|w| w[0].m_z > w[1].m_z));
}

#[test]
fn sequential_and_parallel_agree_exactly() {
    let model = ModelParameters::fe3().with_b_x(1.0);
    let c = ProtocolConfig::uniform(model, d(2), 4, 0.08);
    let a = enumerate_trajectories(&c, Execution::Sequential).unwrap();
    let b = enumerate_trajectories(&c, Execution::Parallel).unwrap();
    assert_eq!(a.leaves.len(), b.leaves.len());
    for (x, y) in a.leaves.iter().zip(&b.leaves) {
        assert_eq!(x.outcomes, y.outcomes);
        assert_eq!(x.probability, y.probability);
    }
    let fa = fisher_information_series(&c, DEFAULT_DELTA_B, Execution::Sequential).unwrap();
    let fb = fisher_information_series(&c, DEFAULT_DELTA_B, Execution::Parallel).unwrap();
    assert_eq!(fa, fb);
}

#[test]
fn leaf_states_carry_last_outcome() {
    let model = ModelParameters::fe3().with_b_x(5.0);
    let c = ProtocolConfig::uniform(model, d(1), 2, 0.2);
    let tree = enumerate_trajectories(&c, Execution::Sequential).unwrap();
    for leaf in &tree.leaves {
        let state = leaf.post_state.as_ref().unwrap();
        assert!((state.site_sz(3) - leaf.outcomes[1].value()).abs() < 1e-10);
    }
    let bare = trajectory_probabilities(&c, Execution::Sequential).unwrap();
    assert!(bare.leaves.iter().all(|l| l.post_state.is_none()));
}

#[test]
fn per_step_durations_are_honoured() {
    let model = ModelParameters::fe3().with_b_x(1.0);
    let mut c = ProtocolConfig::uniform(model, d(0), 2, 0.08);
    let uniform = classical_fisher_information(&c, DEFAULT_DELTA_B, Execution::Sequential).unwrap();
    c.tau_list = vec![0.08, 0.5];
    let mixed = classical_fisher_information(&c, DEFAULT_DELTA_B, Execution::Sequential).unwrap();
    assert!((uniform.f_value - mixed.f_value).abs() > 1e-6 * uniform.f_value);
}

#[test]
fn exhaustive_enumeration_respects_budget() {
    let model = ModelParameters::fe3().with_b_x(1.0);
    let c = ProtocolConfig::uniform(model, d(0), 7, 0.08);
    assert!(matches!(
        trajectory_probabilities(&c, Execution::Sequential),
        Err(Error::BudgetExceeded { leaves: 279_936, budget: 46_656 })
    ));
    let mut small = ProtocolConfig::uniform(model, d(3), 3, 0.5);
    small.leaf_budget = 10;
    assert!(matches!(trajectory_probabilities(&small, Execution::Sequential), Err(Error::BudgetExceeded { .. })));
}

#[test]
fn pruned_fisher_reports_remainder() {
    let model = ModelParameters::fe3().with_b_x(1.0);
    let mut c = ProtocolConfig::uniform(model, d(0), 4, 0.08);
    c.prune_threshold = 1e-9;
    let est = classical_fisher_information(&c, DEFAULT_DELTA_B, Execution::Sequential).unwrap();
    let exact = classical_fisher_information(
        &ProtocolConfig { prune_threshold: 0.0, ..c.clone() },
        DEFAULT_DELTA_B,
        Execution::Sequential,
    )
    .unwrap();
    assert!(est.pruning_remainder > 0.0 && est.pruning_remainder <= 1e-6, "{est:?}");
    assert!(est.f_value <= exact.f_value * (1.0 + 1e-9));

    c.prune_threshold = 1e-6;
    c.dicke_k = d(3);
    c.n_seq = 8;
    c.tau_list = vec![0.5; 8];
    match classical_fisher_information(&c, DEFAULT_DELTA_B, Execution::Sequential) {
        Err(Error::UntrustedFisher(r)) => assert!(r > 1e-6),
        other => panic!("expected an untrusted estimate, got {other:?}"),
    }
}

#[test]
fn invalid_protocols_are_rejected() {
    let model = ModelParameters::fe3().with_b_x(1.0);
    let mut c = ProtocolConfig::uniform(model, d(0), 2, 0.08);
    c.measured_site = 4;
    assert!(matches!(c.validate(), Err(Error::InvalidSite { site: 4, .. })));
    let c = ProtocolConfig::uniform(model, d(0), 2, 0.08);
    assert!(fisher_information_series(&c, -1e-4, Execution::Sequential).is_err());
    assert!(matches!(sensing_scan(&c, DEFAULT_DELTA_B, Execution::Sequential), Err(Error::InvalidFitInput(_))));
    assert!(protocol_step(&dicke_state(d(0)).unwrap(), 0.1, &model, 0).is_err());
}

#[test]
fn default_step_gives_informative_readout() {
    let model = ModelParameters::fe3();
    let tau = default_tau(&model).unwrap();
    let out = protocol_step(&dicke_state(d(0)).unwrap(), tau, &model.with_b_x(1.0), 3).unwrap();
    assert!(out.iter().all(|o| o.probability < 0.999));
    let half = protocol_step(&dicke_state(d(0)).unwrap(), tau / 2.0, &model.with_b_x(1.0), 3).unwrap();
    assert!(half.iter().any(|o| o.probability >= 0.999));
}
