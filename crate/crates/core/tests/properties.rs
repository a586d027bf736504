mod common;

fn report(check: common::Check) {
    match check {
        Ok(summary) => println!("{summary}"),
        Err(v) => panic!("{} violations:\n{}", v.len(), v.join("\n")),
    }
}

#[test]
fn reduction_steps_are_sound() {
    report(common::step_soundness(1000, 7));
}

#[test]
fn elimination_respects_bounds() {
    report(common::bounds());
}

#[test]
fn clusters_match_naive_scc() {
    report(common::scc_oracle(200, 11));
}

#[test]
fn endsequents_have_no_small_countermodel() {
    report(common::model_oracle(3));
}

#[test]
fn structural_lemmas_hold() {
    report(common::lemmas());
}

#[test]
fn rounds_lower_the_rank() {
    use gke::analysis::tree_cut_rank;
    use gke::elimination::reduction_round;
    for (name, t) in common::corpus() {
        let Some(r) = tree_cut_rank(t) else { continue };
        let out = reduction_round(t).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(tree_cut_rank(&out) < Some(r), "{name}");
        assert_eq!(out.sequent, t.sequent, "{name}");
        assert!(gke::check_proof(&out).accepted, "{name}");
    }
}

#[test]
fn minimal_focus_is_idempotent() {
    use gke::analysis::{is_minimally_focused, minimally_focus};
    use gke::Derivation;
    let inputs = common::FIXTURES.into_iter().map(|n| (n.to_string(), common::fixture(n))).chain(common::corpus().iter().cloned());
    for (name, t) in inputs {
        let once = minimally_focus(&Derivation::from_tree(&t));
        let twice = minimally_focus(&Derivation::from_tree(&once));
        assert_eq!(once, twice, "{name}");
        assert!(is_minimally_focused(&Derivation::from_tree(&once)), "{name}");
        assert!(gke::check_proof(&once).accepted, "{name}");
        assert_eq!(once.sequent, t.sequent, "{name}");
    }
}

#[test]
fn clusters_are_focused_and_ordered() {
    use gke::analysis::compute_clusters;
    use gke::Derivation;
    for (name, t) in common::lemma_subjects() {
        let d = Derivation::from_tree(&t);
        let info = compute_clusters(&d);
        for v in d.ids() {
            assert!(!info.in_nontrivial(v) || d.sequent(v).has_focus(), "{name}: node {} unfocused", v.0);
        }
        let nontrivial: Vec<usize> = (0..info.clusters.len()).filter(|&c| info.is_nontrivial(c)).collect();
        // Reachability between clusters, from one member of each.
        let reach = |a: usize, b: usize| {
            let target = info.clusters[b][0];
            let mut seen = std::collections::BTreeSet::from([info.clusters[a][0]]);
            let mut stack = vec![info.clusters[a][0]];
            while let Some(u) = stack.pop() {
                if u == target {
                    return true;
                }
                for w in d.successors(u) {
                    if seen.insert(w) {
                        stack.push(w);
                    }
                }
            }
            false
        };
        let below = |a: usize, b: usize| a != b && reach(a, b);
        for &a in &nontrivial {
            assert!(!below(a, a));
            for &b in &nontrivial {
                assert!(!(below(a, b) && below(b, a)), "{name}: clusters {a} and {b}");
                if below(a, b) {
                    assert!(info.cluster_depth[a] > info.cluster_depth[b], "{name}: depth of {a} and {b}");
                    for &c in &nontrivial {
                        assert!(!below(b, c) || below(a, c), "{name}: transitivity");
                    }
                }
            }
        }
    }
}
