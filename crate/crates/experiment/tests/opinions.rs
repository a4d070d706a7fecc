//! Expert opinion combination on synthetic easy/hard item sets: 200 items,
//! 20 experts who are right 90% of the time on easy items and 30% on hard
//! ones, with a homophilous item graph.

use gsr_core::solvers::SolverConfig;
use gsr_experiment::opinions::label_accuracy;
use gsr_experiment::{combine_opinions, synth_experts, CombineMethod, ExpertSpec};

#[test]
fn graph_denoising_beats_majority_vote() {
    let cfg = SolverConfig {
        alpha: 3.0,
        beta: 0.3,
        ..SolverConfig::default()
    };
    let mut wins = 0;
    let mut lines = Vec::new();
    for seed in 0..10 {
        let inst = synth_experts(&ExpertSpec {
            seed,
            ..ExpertSpec::default()
        })
        .unwrap();
        let avg = combine_opinions(&inst.opinions, &inst.graph, CombineMethod::Avg, &cfg).unwrap();
        let gmcr = combine_opinions(
            &inst.opinions,
            &inst.graph,
            CombineMethod::GmcrDenoise,
            &cfg,
        )
        .unwrap();
        let acc_avg = label_accuracy(&inst.truth, &avg.labels);
        let acc_gmcr = label_accuracy(&inst.truth, &gmcr.labels);
        wins += usize::from(acc_gmcr >= acc_avg);
        lines.push(format!("seed {seed}: avg {acc_avg:.3} gmcr {acc_gmcr:.3}"));
    }
    println!("{}", lines.join("\n"));
    assert!(
        wins >= 8,
        "gmcr-denoise matched or beat avg on {wins}/10 seeds"
    );
}
