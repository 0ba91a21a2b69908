//! Train parameter-matched classifiers on a D4-invariant task, one with
//! max G-pooling and one with the triple-correlation layer, and compare
//! test accuracy over several seeds.
//!
//! Run with: cargo run --release --example train_comparison

use grouptc::group::GroupKind;
use grouptc::train::{run_comparison, synth_dataset, GridSpec, TrainConfig};

fn main() {
    let dataset = synth_dataset(&GroupKind::Dihedral(4), 10, 24, 8, GridSpec::Square(5), 1)
        .expect("dataset builds");
    println!(
        "D4 task: {} classes, {} train / {} val / {} test samples on a 5x5 grid",
        dataset.n_classes,
        dataset.train.len(),
        dataset.val.len(),
        dataset.test.len()
    );

    let config = TrainConfig {
        learning_rate: 1e-3,
        epochs: 4,
        batch_size: 32,
        ..Default::default()
    };
    let report = run_comparison(&dataset, &config, &[0, 1, 2, 3], 6, 48).expect("training runs");

    println!(
        "\nparameters: tc {} vs max {} ({:.2}% apart)",
        report.tc_params, report.max_params, report.param_diff_percent
    );
    println!("seed  tc-accuracy  max-accuracy");
    for r in &report.results {
        println!("{:>4}  {:>11.3}  {:>12.3}", r.seed, r.tc_accuracy, r.max_accuracy);
    }
    println!(
        "\nmean  {:.3} +- {:.3}   {:.3} +- {:.3}",
        report.tc_mean, report.tc_std, report.max_mean, report.max_std
    );
    println!(
        "triple correlation {} max pooling at this budget",
        if report.tc_mean > report.max_mean {
            "beats"
        } else if report.tc_mean == report.max_mean {
            "ties"
        } else {
            "trails"
        }
    );
}
