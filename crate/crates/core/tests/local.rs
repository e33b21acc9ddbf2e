use std::time::Instant;

use ejm_core::local::{
    anneal_search, asymmetric_model, bell_lp_check, chsh_value, classical_bound, evaluate_model,
    exhaustive_search, q_model, q_model_all_equal_closed_form, sample_model, AnnealOptions,
    BellTarget, ExhaustiveOptions, LocalityCertificate, Objective, RingLocalModel, Target, Verdict,
};
use ejm_core::measurements::ejm_basis;
use ejm_core::network::{joint_distribution_naive, NetworkTopology};

fn ejm_triangle() -> ejm_core::network::JointDistribution {
    joint_distribution_naive(NetworkTopology::triangle(), &ejm_basis()).unwrap()
}

#[test]
fn q_model_matches_closed_form_on_grid() {
    let mut best = (0.0, f64::NEG_INFINITY);
    for i in 0..=100 {
        let q = i as f64 / 100.0;
        let d = evaluate_model(&q_model(q).unwrap()).unwrap();
        let p = d.all_equal();
        assert!(
            (p - q_model_all_equal_closed_form(q)).abs() < 1e-12,
            "q = {q}"
        );
        let total: f64 = d.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        if p > best.1 {
            best = (q, p);
        }
    }
    assert_eq!(best.0, 0.5);
    assert!((best.1 - 61.0 / 256.0).abs() < 1e-12);
}

#[test]
fn classical_quantum_gap() {
    let classical = (0..=100)
        .map(|i| {
            evaluate_model(&q_model(i as f64 / 100.0).unwrap())
                .unwrap()
                .all_equal()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let quantum = ejm_triangle().all_equal();
    assert!(classical < quantum);
    assert!((quantum - 25.0 / 64.0).abs() < 1e-12);
}

#[test]
fn monte_carlo_agrees_with_exact_values() {
    let shots = 1_000_000u64;
    let d = sample_model(&q_model(0.5).unwrap(), shots, 42).unwrap();
    let p = 61.0 / 256.0;
    let sigma = (p * (1.0 - p) / shots as f64).sqrt();
    assert!((d.all_equal() - p).abs() < 3.0 * sigma);

    let d = sample_model(&asymmetric_model(), shots, 42).unwrap();
    let sigma = (0.25 / shots as f64).sqrt();
    assert!((d.event(|o| o[0] == o[1]) - 0.5).abs() < 3.0 * sigma);
}

#[test]
fn model_files_round_trip() {
    for m in [q_model(0.3).unwrap(), asymmetric_model()] {
        let text = m.to_json().unwrap();
        let back = RingLocalModel::from_json(&text).unwrap();
        assert_eq!(evaluate_model(&back).unwrap(), evaluate_model(&m).unwrap());
    }
}

#[test]
fn exhaustive_binary_search() {
    let start = Instant::now();
    let r = exhaustive_search(&ExhaustiveOptions::new(2, Objective::MaxAllEqual)).unwrap();
    assert!(r.value >= 0.5);
    assert!((r.reevaluate(None).unwrap() - r.value).abs() < 1e-12);
    assert_eq!(r.candidates, 1 << 24);

    let target = Target::new(&ejm_triangle());
    let mut opts = ExhaustiveOptions::new(2, Objective::MinL1ToTarget);
    opts.target = Some(target.clone());
    let l1 = exhaustive_search(&opts).unwrap();
    assert!(l1.value > 0.0);
    assert!((l1.reevaluate(Some(&target)).unwrap() - l1.value).abs() < 1e-12);
    println!(
        "binary-source L1 distance to the quantum triangle: {}",
        l1.value
    );
    assert!(start.elapsed().as_secs() < 300);
}

#[test]
fn exhaustive_search_is_deterministic() {
    let target = Target::coarse_grained(&ejm_triangle());
    let mut opts = ExhaustiveOptions::new(2, Objective::MinLinfToTarget);
    opts.target = Some(target.clone());
    opts.bijective_responses = true;
    let a = exhaustive_search(&opts).unwrap();
    let b = exhaustive_search(&opts).unwrap();
    assert_eq!(a, b);
    assert!((a.reevaluate(Some(&target)).unwrap() - a.value).abs() < 1e-12);
}

#[test]
fn annealing_finds_strong_all_equal_models() {
    for c in [2, 4] {
        let opts = AnnealOptions::new(NetworkTopology::triangle(), c, Objective::MaxAllEqual);
        let r = anneal_search(&opts).unwrap();
        assert!(r.value >= 0.5, "cardinality {c}: {}", r.value);
        assert!((r.reevaluate(None).unwrap() - r.value).abs() < 1e-12);
        assert_eq!(r, anneal_search(&opts).unwrap());
    }
}

#[test]
fn annealing_toward_coarse_grained_target() {
    let target = Target::coarse_grained(&ejm_triangle());
    let mut opts = AnnealOptions::new(NetworkTopology::triangle(), 4, Objective::MinLinfToTarget);
    opts.target = Some(target.clone());
    opts.schedule.steps = 20_000;
    let r = anneal_search(&opts).unwrap();
    assert!((r.reevaluate(Some(&target)).unwrap() - r.value).abs() < 1e-12);
    let last = r.trace.last().unwrap().value;
    assert_eq!(last, r.value);
    println!("coarse-grained Linf distance after annealing: {}", r.value);
}

#[test]
fn ejm_line_conditional_is_bell_local() {
    let start = Instant::now();
    let line =
        joint_distribution_naive(NetworkTopology::open_line(4).unwrap(), &ejm_basis()).unwrap();
    let target = BellTarget::from_open_line(&line).unwrap();
    let cert = bell_lp_check(&target);
    assert_eq!(cert.verdict, Verdict::Local, "{cert:?}");
    assert!(cert.residual.unwrap() < 1e-8);
    assert!(cert.verify(&target));
    let back: LocalityCertificate = serde_json::from_str(&cert.to_json().unwrap()).unwrap();
    assert!(back.verify(&target));
    assert!(start.elapsed().as_secs() < 120);
    // no CHSH violation either on the first two inputs
    assert!(chsh_value(&target) <= 2.0);
}

#[test]
fn pr_box_certificate_separates_every_vertex() {
    let target = BellTarget::pr_box();
    let cert = bell_lp_check(&target);
    assert_eq!(cert.verdict, Verdict::Nonlocal);
    let f = cert.functional.as_ref().unwrap();
    let bound = classical_bound(f);
    assert!(target.functional_value(f) - bound > 1e-9);
    assert!((cert.classical_bound.unwrap() - bound).abs() < 1e-12);
    assert_eq!(chsh_value(&target), 4.0);
}
