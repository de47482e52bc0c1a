//! Law-level properties of the semantics: monotonicity, equivalence-
//! relation laws, locality of guards, commutation on explored trees,
//! and the combinatorial bounds behind redundancy pruning.

use std::collections::HashMap;

use proptest::prelude::*;

use gossip_core::analysis::{generated_prefixes, simulates};
use gossip_core::engine::{enabled_rules, ExploreConfig};
use gossip_core::equivalence::{agent_view, class_representatives, class_situations, equivalent};
use gossip_core::logic::{build_axiom, eval_propositional, AxiomKind, Formula};
use gossip_core::model::{
    find_epistemically_redundant, reachable_situations, situation_trace, AgentId, Call,
    CallSequence, Digraph, GossipSituation, SecretId,
};
use gossip_core::protocol::{builtin, Builtin};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn call_strategy(n: usize) -> impl Strategy<Value = Call> {
    (0..n, 0..n - 1).prop_map(move |(a, b)| {
        let callee = if b >= a { b + 1 } else { b };
        Call::new(AgentId(a), AgentId(callee))
    })
}

fn sequence_strategy(n: usize, max_len: usize) -> impl Strategy<Value = CallSequence> {
    prop::collection::vec(call_strategy(n), 0..=max_len).prop_map(CallSequence::new)
}

fn formula_strategy(n: usize) -> impl Strategy<Value = Formula> {
    let atom = (0..n, 0..n).prop_map(|(a, s)| Formula::atom(AgentId(a), SecretId(s)));
    atom.prop_recursive(3, 24, 2, move |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
            (0..n, inner.clone()).prop_map(|(a, f)| Formula::know(AgentId(a), f)),
            (0..n, inner).prop_map(|(a, f)| Formula::common([AgentId(a)], f)),
        ]
    })
}

proptest! {
    #[test]
    fn secret_sets_only_grow(seq in sequence_strategy(4, 10)) {
        let trace = situation_trace(4, &seq).unwrap();
        for w in trace.windows(2) {
            for agent in 0..4 {
                let a = AgentId(agent);
                prop_assert!(w[0].secrets_of(a).is_subset(w[1].secrets_of(a)));
            }
        }
    }

    #[test]
    fn calls_leave_participants_symmetric(seq in sequence_strategy(4, 8), c in call_strategy(4)) {
        let s = GossipSituation::initial(4).unwrap().apply_sequence(&seq);
        let t = s.apply_call(c);
        prop_assert_eq!(t.secrets_of(c.caller), t.secrets_of(c.callee));
        // idempotent: the same call again changes nothing
        prop_assert_eq!(t.apply_call(c), t);
    }

    #[test]
    fn unproductive_blocks_are_stationary(seq in sequence_strategy(3, 12)) {
        let trace = situation_trace(3, &seq).unwrap();
        // wherever no call in a window is productive, the situation is
        // constant across the window
        for start in 0..seq.len() {
            for end in start..seq.len() {
                let productive = (start..=end).any(|i| trace[i] != trace[i + 1]);
                if !productive {
                    prop_assert_eq!(&trace[start], &trace[end + 1]);
                }
            }
        }
    }

    #[test]
    fn equivalence_laws(
        s1 in sequence_strategy(3, 5),
        s2 in sequence_strategy(3, 5),
        s3 in sequence_strategy(3, 5),
        agent in 0..3usize,
    ) {
        let a = AgentId(agent);
        prop_assert!(equivalent(&s1, &s1, a, 3).unwrap());
        prop_assert_eq!(
            equivalent(&s1, &s2, a, 3).unwrap(),
            equivalent(&s2, &s1, a, 3).unwrap()
        );
        if equivalent(&s1, &s2, a, 3).unwrap() && equivalent(&s2, &s3, a, 3).unwrap() {
            prop_assert!(equivalent(&s1, &s3, a, 3).unwrap());
        }
    }

    #[test]
    fn appending_unobserved_calls_preserves_equivalence(
        seq in sequence_strategy(3, 5),
        agent in 0..3usize,
        extra in prop::collection::vec(call_strategy(3), 1..3),
    ) {
        let a = AgentId(agent);
        let bystanders: Vec<Call> = extra.into_iter().filter(|c| !c.involves(a)).collect();
        let mut extended = seq.clone();
        for c in bystanders {
            extended.push(c);
        }
        prop_assert!(equivalent(&seq, &extended, a, 3).unwrap());
    }

    #[test]
    fn equivalent_sequences_agree_on_final_secrets(
        s1 in sequence_strategy(3, 5),
        s2 in sequence_strategy(3, 5),
        agent in 0..3usize,
    ) {
        let a = AgentId(agent);
        if equivalent(&s1, &s2, a, 3).unwrap() {
            let v1 = agent_view(&s1, a, 3).unwrap();
            let v2 = agent_view(&s2, a, 3).unwrap();
            prop_assert_eq!(v1.final_secrets(), v2.final_secrets());
        }
    }

    #[test]
    fn class_contains_own_situation(seq in sequence_strategy(3, 4), agent in 0..3usize) {
        let g = Digraph::complete(3).unwrap();
        let a = AgentId(agent);
        let class = class_situations(&seq, a, 3, &g).unwrap();
        let own = GossipSituation::initial(3).unwrap().apply_sequence(&seq);
        prop_assert!(class.contains(&own));
    }

    #[test]
    fn representatives_are_equivalent_to_the_sequence(
        seq in sequence_strategy(3, 3),
        agent in 0..3usize,
    ) {
        let g = Digraph::complete(3).unwrap();
        let a = AgentId(agent);
        let bound = seq.len() + 1;
        let reps = class_representatives(&seq, a, 3, &g, bound, 200_000).unwrap();
        prop_assert!(reps.contains(&seq));
        for d in reps.iter().take(40) {
            prop_assert!(equivalent(d, &seq, a, 3).unwrap());
        }
    }

    #[test]
    fn sequence_text_round_trip(seq in sequence_strategy(5, 8)) {
        let rendered = seq.render();
        prop_assert_eq!(CallSequence::parse(&rendered).unwrap(), seq);
    }

    #[test]
    fn formula_text_round_trip(f in formula_strategy(3)) {
        let table = gossip_core::parse::AgentTable::letters(3).unwrap();
        let rendered = f.render(&table);
        let parsed = gossip_core::logic::parse_formula(&rendered, &table).unwrap();
        prop_assert_eq!(parsed, f);
    }

    #[test]
    fn atom_truth_matches_membership(seq in sequence_strategy(3, 6), a in 0..3usize, s in 0..3usize) {
        let sit = GossipSituation::initial(3).unwrap().apply_sequence(&seq);
        let f = Formula::atom(AgentId(a), SecretId(s));
        prop_assert_eq!(
            eval_propositional(&f, &sit),
            sit.knows(AgentId(a), SecretId(s))
        );
    }

    #[test]
    fn fuzzed_guards_parse_iff_they_classify(f in formula_strategy(3)) {
        // the parser accepts a rule exactly when its guard passes the
        // caller-owned fragment check
        let table = gossip_core::parse::AgentTable::letters(3).unwrap();
        let source = format!(
            "agents: a b c\ngraph: complete\nprogram a:\n  {} ~> a b\n",
            f.render(&table)
        );
        let parsed = gossip_core::protocol::parse_protocol(&source);
        let classified = gossip_core::protocol::classify_guard(&f, AgentId(0));
        prop_assert_eq!(parsed.is_ok(), classified.is_ok());
        if let Ok(p) = parsed {
            prop_assert_eq!(&p.programs()[0].rules[0].guard, &f);
            let frag = classified.unwrap();
            prop_assert!(matches!(
                frag,
                gossip_core::logic::Fragment::L0 | gossip_core::logic::Fragment::L1a(_)
            ));
        }
    }

    #[test]
    fn rule_locality(seq in sequence_strategy(3, 4), c in call_strategy(3)) {
        // appending a call not involving an agent never changes which of
        // its rules are enabled
        let cfg = ExploreConfig::default();
        for p in [
            builtin(Builtin::Lns, 3, None).unwrap(),
            builtin(Builtin::Hms, 3, None).unwrap(),
        ] {
            let before = enabled_rules(&p, &seq, &cfg).unwrap();
            let after = enabled_rules(&p, &seq.extended(c), &cfg).unwrap();
            for agent in 0..3 {
                let a = AgentId(agent);
                if !c.involves(a) {
                    let fa: Vec<_> = before.iter().filter(|id| id.agent == a).collect();
                    let fb: Vec<_> = after.iter().filter(|id| id.agent == a).collect();
                    prop_assert_eq!(fa, fb);
                }
            }
        }
    }
}

#[test]
fn explored_trees_commute_disjoint_adjacent_calls() {
    let cfg = ExploreConfig::default();
    for p in [
        builtin(Builtin::Lns, 4, None).unwrap(),
        builtin(Builtin::TwoPhase, 4, None).unwrap(),
    ] {
        let prefixes = generated_prefixes(&p, 8, &cfg).unwrap();
        for s in &prefixes {
            let calls = s.calls();
            for i in 0..calls.len().saturating_sub(1) {
                let (x, y) = (calls[i], calls[i + 1]);
                if !y.involves(x.caller) && !y.involves(x.callee) {
                    let mut swapped = calls.to_vec();
                    swapped.swap(i, i + 1);
                    assert!(
                        prefixes.contains(&CallSequence::new(swapped)),
                        "swap of {} at {i} left the tree",
                        s.render()
                    );
                }
            }
        }
    }
}

#[test]
fn no_calls_by_experts_in_propositional_leaves() {
    // terminating propositional protocols never let an expert place a
    // further call on the way to a leaf
    let cfg = ExploreConfig::default();
    for p in [
        builtin(Builtin::Lns, 3, None).unwrap(),
        builtin(Builtin::Lns, 4, None).unwrap(),
    ] {
        let n = p.agent_count();
        let report = gossip_core::engine::explore(&p, &cfg).unwrap();
        assert!(report.lassos.is_empty());
        for leaf in &report.leaves {
            let trace = situation_trace(n, leaf).unwrap();
            for (i, call) in leaf.iter().enumerate() {
                assert!(
                    !trace[i].is_expert(call.caller),
                    "expert {} calls at step {i} of {}",
                    call.caller,
                    leaf.render()
                );
            }
        }
    }
}

#[test]
fn leaves_have_no_enabled_rules_and_interior_nodes_do() {
    let cfg = ExploreConfig::default();
    for p in [
        builtin(Builtin::Lns, 3, None).unwrap(),
        builtin(Builtin::Hms, 3, None).unwrap(),
    ] {
        let report = gossip_core::engine::explore(&p, &cfg).unwrap();
        let prefixes = generated_prefixes(&p, 10, &cfg).unwrap();
        for s in &prefixes {
            let enabled = enabled_rules(&p, s, &cfg).unwrap();
            assert_eq!(
                enabled.is_empty(),
                report.leaves.contains(s),
                "enabledness mismatch at {}",
                s.render()
            );
        }
    }
}

/// Longest redundancy-free sequence length by dynamic programming over
/// (situation, calls used in the current stationary block). Productive
/// calls reset the block; a redundancy-free sequence can repeat a call
/// only across situations, never within one.
fn max_redundancy_free_len(n: usize) -> usize {
    let calls = Digraph::complete(n).unwrap().calls();
    let root = GossipSituation::initial(n).unwrap();
    let mut memo: HashMap<(GossipSituation, u64), usize> = HashMap::new();
    fn best(
        sit: &GossipSituation,
        used: u64,
        calls: &[Call],
        memo: &mut HashMap<(GossipSituation, u64), usize>,
    ) -> usize {
        if let Some(&v) = memo.get(&(sit.clone(), used)) {
            return v;
        }
        let mut m = 0;
        for (i, &c) in calls.iter().enumerate() {
            let t = sit.apply_call(c);
            if t != *sit {
                m = m.max(1 + best(&t, 1 << i, calls, memo));
            } else if used >> i & 1 == 0 {
                m = m.max(1 + best(sit, used | 1 << i, calls, memo));
            }
        }
        memo.insert((sit.clone(), used), m);
        m
    }
    best(&root, 0, &calls, &mut memo)
}

#[test]
fn redundancy_free_sequences_are_short() {
    // measured maxima, well under the fourth-power bound
    assert_eq!(max_redundancy_free_len(2), 2);
    let max3 = max_redundancy_free_len(3);
    assert_eq!(max3, 10);
    assert!(max3 < 3usize.pow(4));

    // sequences at the fourth-power length always contain a redundant call
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let calls = Digraph::complete(3).unwrap().calls();
    for _ in 0..25 {
        let seq: CallSequence = (0..81).map(|_| *calls.choose(&mut rng).unwrap()).collect();
        assert!(find_epistemically_redundant(&seq, 3).unwrap().is_some());
    }
}

#[test]
fn reachable_situations_satisfy_the_chain_axiom() {
    let g = Digraph::complete(3).unwrap();
    let axiom = build_axiom(3, AxiomKind::Chain).unwrap();
    for sit in reachable_situations(3, &g).unwrap() {
        assert!(eval_propositional(&axiom, &sit), "fails at {}", sit.render());
    }
}

#[test]
fn simulation_is_transitive_on_the_builtin_matrix() {
    let cfg = ExploreConfig::default();
    let protocols = [
        builtin(Builtin::Lns, 3, None).unwrap(),
        builtin(Builtin::Hms, 3, None).unwrap(),
        builtin(Builtin::Exp, 3, None).unwrap(),
    ];
    let mut sim = [[false; 3]; 3];
    for (i, p) in protocols.iter().enumerate() {
        for (j, q) in protocols.iter().enumerate() {
            sim[i][j] = simulates(p, q, &cfg).unwrap().simulates;
        }
    }
    for i in 0..3 {
        assert!(sim[i][i], "reflexivity at {i}");
        for j in 0..3 {
            for k in 0..3 {
                if sim[i][j] && sim[j][k] {
                    assert!(sim[i][k], "transitivity breaks at {i},{j},{k}");
                }
            }
        }
    }
    // expected shape: every lns call has a non-expert caller, so exp
    // simulates lns; hms lets an expert call (after ab,ac agent c may
    // still place cb), which exp cannot mimic
    assert!(sim[2][0] && !sim[2][1]);
    assert!(sim[1][0] && !sim[0][1] && !sim[0][2]);
}

#[test]
fn generated_prefix_sets_are_prefix_closed() {
    let cfg = ExploreConfig::default();
    for p in [
        builtin(Builtin::Lns, 3, None).unwrap(),
        builtin(Builtin::Hms, 3, None).unwrap(),
        builtin(Builtin::Exp, 3, None).unwrap(),
    ] {
        let prefixes = generated_prefixes(&p, 4, &cfg).unwrap();
        for s in &prefixes {
            for l in 0..s.len() {
                assert!(prefixes.contains(&s.prefix(l)));
            }
        }
    }
}
