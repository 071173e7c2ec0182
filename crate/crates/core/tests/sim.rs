//! Monte Carlo harness and baseline policies.

mod common;

use common::{random_instance, rel_close};
use mediasched::scenario;
use mediasched::sim::{
    baseline_constant_channel, baseline_distortion_greedy, baseline_oracle, loss_seed, monte_carlo,
    run_episode, Scheduler, SimSetup,
};
use mediasched::{
    sample_path, solve, ChannelModel, ChannelState, CostKind, CostModel, MediaTrace, Packet,
};

fn setup<'a>(inst: &'a common::Instance, loss_rate: f64) -> SimSetup<'a> {
    SimSetup {
        trace: &inst.trace,
        channel: &inst.channel,
        cost: &inst.cost,
        alpha: inst.alpha,
        lambda: inst.lambda,
        loss_rate,
    }
}

#[test]
fn logged_utility_matches_the_running_total() {
    for seed in 0..30 {
        let inst = random_instance(4000 + seed, CostKind::Convex, 0.4);
        let policy = solve(
            &inst.trace,
            &inst.channel,
            &inst.cost,
            inst.alpha,
            inst.lambda,
        )
        .unwrap();
        let path = sample_path(&inst.channel, inst.trace.horizon(), seed);
        let r = run_episode(&policy, &setup(&inst, 0.3), &path, loss_seed(seed, 0)).unwrap();
        assert!(rel_close(
            r.utility_from_log(inst.alpha, inst.lambda),
            r.discounted_utility,
            1e-12
        ));
        let gain: f64 = r.log.iter().map(|s| s.gain).sum();
        assert!(rel_close(gain, r.total_distortion_gain, 1e-12));
    }
}

#[test]
fn delivered_packets_have_delivered_parents() {
    for seed in 0..40 {
        let inst = random_instance(4100 + seed, CostKind::Convex, 0.6);
        let policy = solve(
            &inst.trace,
            &inst.channel,
            &inst.cost,
            inst.alpha,
            inst.lambda,
        )
        .unwrap();
        for ep in 0..20 {
            let path = sample_path(&inst.channel, inst.trace.horizon(), seed * 100 + ep);
            let r = run_episode(&policy, &setup(&inst, 0.4), &path, loss_seed(seed, ep)).unwrap();
            for &id in &r.delivered {
                let p = inst.trace.packet(inst.trace.index_of(id).unwrap());
                assert!(
                    p.parents.iter().all(|q| r.delivered.contains(q)),
                    "seed {seed}: {id}"
                );
            }
            let mut seen = std::collections::HashSet::new();
            assert!(
                r.delivered.iter().all(|id| seen.insert(*id)),
                "delivered twice"
            );
        }
    }
}

#[test]
fn loss_free_run_on_a_constant_channel_earns_the_computed_value() {
    let channel = ChannelModel::constant(ChannelState {
        id: 0,
        gain: 1.5,
        rate: 1.0,
        loss_prob: 0.0,
    });
    for seed in 0..20 {
        let mut inst = random_instance(4200 + seed, CostKind::Convex, 0.3);
        inst.channel = channel.clone();
        let policy = solve(
            &inst.trace,
            &inst.channel,
            &inst.cost,
            inst.alpha,
            inst.lambda,
        )
        .unwrap();
        let path = vec![0; inst.trace.horizon() + 1];
        let r = run_episode(&policy, &setup(&inst, 0.0), &path, 0).unwrap();
        assert!(
            rel_close(r.discounted_utility, policy.initial_value().unwrap(), 1e-9),
            "seed {seed}"
        );
    }
}

#[test]
fn monte_carlo_is_reproducible_and_paired() {
    let inst = random_instance(4300, CostKind::Convex, 0.0);
    let policy = solve(
        &inst.trace,
        &inst.channel,
        &inst.cost,
        inst.alpha,
        inst.lambda,
    )
    .unwrap();
    let a = monte_carlo(&policy, "p", &setup(&inst, 0.1), 200, 17).unwrap();
    let b = monte_carlo(&policy, "p", &setup(&inst, 0.1), 200, 17).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.paired_difference(&b).mean, 0.0);
    assert!(a
        .episodes
        .windows(2)
        .all(|w| w[0].episode + 1 == w[1].episode));
    let c = monte_carlo(&policy, "p", &setup(&inst, 0.1), 200, 18).unwrap();
    assert_ne!(a.utility.mean, c.utility.mean);
}

#[test]
fn oracle_policy_earns_its_value_on_average() {
    let inst = random_instance(4400, CostKind::Convex, 0.5);
    let oracle = baseline_oracle(
        &inst.trace,
        &inst.channel,
        &inst.cost,
        inst.alpha,
        inst.lambda,
    )
    .unwrap();
    let n = 4000;
    let r = monte_carlo(&oracle, "oracle", &setup(&inst, 0.0), n, 3).unwrap();
    assert!((r.utility.mean - oracle.initial_value()).abs() <= 3.0 * r.utility.std_error(n));
}

#[test]
fn greedy_baseline_sends_decodable_sets_in_distortion_order() {
    let inst = random_instance(4500, CostKind::Convex, 0.5);
    let greedy =
        baseline_distortion_greedy(&inst.trace, &inst.channel, &inst.cost, inst.lambda).unwrap();
    let r = monte_carlo(&greedy, "greedy", &setup(&inst, 0.2), 300, 1).unwrap();
    assert_eq!(r.n_episodes, 300);
}

#[test]
fn constant_baseline_ignores_the_observed_state() {
    let inst = random_instance(4600, CostKind::Convex, 0.0);
    let constant = baseline_constant_channel(
        &inst.trace,
        &inst.channel,
        &inst.cost,
        inst.alpha,
        inst.lambda,
    )
    .unwrap();
    let policy = solve(
        &inst.trace,
        &inst.channel,
        &inst.cost,
        inst.alpha,
        inst.lambda,
    )
    .unwrap();
    let s0 = policy.initial_state(0);
    let choices: Vec<_> = (0..inst.channel.len())
        .map(|h| {
            constant
                .decide(&mediasched::JointState { channel: h, ..s0 })
                .unwrap()
        })
        .collect();
    assert!(choices.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn bad_inputs_are_rejected() {
    let inst = random_instance(4700, CostKind::Convex, 0.0);
    let policy = solve(
        &inst.trace,
        &inst.channel,
        &inst.cost,
        inst.alpha,
        inst.lambda,
    )
    .unwrap();
    assert!(monte_carlo(&policy, "p", &setup(&inst, 1.0), 10, 0).is_err());
    assert!(monte_carlo(&policy, "p", &setup(&inst, 0.0), 0, 0).is_err());
    assert!(run_episode(&policy, &setup(&inst, 0.0), &[0], 0).is_err());
    let bad_path = vec![inst.channel.len(); inst.trace.horizon() + 1];
    assert!(run_episode(&policy, &setup(&inst, 0.0), &bad_path, 0).is_err());
}

#[test]
fn losses_lower_the_mean_on_the_standard_scenario() {
    let sc = scenario::standard().unwrap();
    let policy = solve(&sc.trace, &sc.channel, &sc.cost, sc.alpha, sc.lambda).unwrap();
    let mean = |loss_rate| {
        let setup = SimSetup {
            trace: &sc.trace,
            channel: &sc.channel,
            cost: &sc.cost,
            alpha: sc.alpha,
            lambda: sc.lambda,
            loss_rate,
        };
        monte_carlo(&policy, "p", &setup, 1000, 2)
            .unwrap()
            .utility
            .mean
    };
    assert!(mean(0.2) < mean(0.0));
}

#[test]
fn lost_packet_is_resent_before_its_deadline() {
    let trace = MediaTrace::new(vec![Packet {
        id: 0,
        size_bits: 1.0,
        distortion: 5.0,
        arrival: 0,
        deadline: 6,
        parents: vec![],
    }])
    .unwrap();
    let channel = ChannelModel::constant(ChannelState {
        id: 0,
        gain: 1.0,
        rate: 1.0,
        loss_prob: 0.0,
    });
    let cost = CostModel::linear();
    let policy = solve(&trace, &channel, &cost, 0.9, 1.0).unwrap();
    let setup = SimSetup {
        trace: &trace,
        channel: &channel,
        cost: &cost,
        alpha: 0.9,
        lambda: 1.0,
        loss_rate: 0.5,
    };
    let path = vec![0; 7];
    let resent = (0..50u64).any(|s| {
        let r = run_episode(&policy, &setup, &path, s).unwrap();
        r.log.iter().filter(|l| !l.sent.is_empty()).count() > 1
    });
    assert!(resent);
}
