//! G-convolution lifts a grid signal to a signal on the group; max
//! G-pooling collapses it to an invariant (but lossy) summary.
//!
//! Run with: cargo run --example group_convolution

use grouptc::action::{apply_signal_action, square_grid_action, DomainSignal};
use grouptc::gconv::{g_convolve, max_g_pool, FilterBank};
use grouptc::group::GroupKind;
use grouptc::rng::Rng;

fn main() {
    let action = square_grid_action(&GroupKind::Dihedral(4), 4).unwrap();
    let mut rng = Rng::new(7);
    let f = DomainSignal::new(
        (0..16).map(|_| rng.uniform(0.0, 1.0)).collect(),
        action.shape().clone(),
    );
    let bank = FilterBank::new(
        (0..3).map(|_| (0..16).map(|_| rng.uniform(-1.0, 1.0)).collect()).collect(),
    );

    let theta = g_convolve(&bank, &f, &action).unwrap();
    println!("feature map: {} channels x {} group elements", theta.channels(), 8);
    for (k, row) in theta.values.iter().enumerate() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:+.2}")).collect();
        println!("  channel {k}: {}", cells.join(" "));
    }

    // Equivariance: convolving a translated input equals translating the
    // output along the group.
    let h = 3;
    let fh = apply_signal_action(&action, h, &f).unwrap();
    let lhs = g_convolve(&bank, &fh, &action).unwrap();
    let rhs = theta.translate(h);
    let worst = lhs
        .values
        .iter()
        .flatten()
        .zip(rhs.values.iter().flatten())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("\nequivariance residual for h={h}: {worst:.2e}");

    // Max pooling is invariant under every group translate of the input.
    let pooled = max_g_pool(&theta);
    println!("max pool: {:?}", pooled.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>());
    for h in 0..8 {
        let moved = apply_signal_action(&action, h, &f).unwrap();
        let again = max_g_pool(&g_convolve(&bank, &moved, &action).unwrap());
        assert!(pooled
            .iter()
            .zip(&again)
            .all(|(a, b)| (a - b).abs() < 1e-12));
    }
    println!("max pool identical across all 8 translates of the input");
}
