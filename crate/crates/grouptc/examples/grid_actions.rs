//! Exact permutation actions on pixel grids and voxel cubes.
//!
//! Run with: cargo run --example grid_actions

use grouptc::action::{
    apply_signal_action, cube_grid_action, regular_action, square_grid_action, DomainSignal,
};
use grouptc::group::{make_group, GroupKind};

fn show_grid(label: &str, values: &[f64], n: usize) {
    println!("{label}");
    for i in 0..n {
        let row: Vec<String> =
            (0..n).map(|j| format!("{:>3}", values[i * n + j] as i64)).collect();
        println!("  {}", row.join(" "));
    }
}

fn main() {
    // D4 acting on a 3x3 grid; the center pixel is fixed by everything.
    let action = square_grid_action(&GroupKind::Dihedral(4), 3).unwrap();
    let f = DomainSignal::new(
        (0..9).map(|x| x as f64).collect(),
        action.shape().clone(),
    );
    show_grid("input:", &f.values, 3);
    let rotated = apply_signal_action(&action, 1, &f).unwrap(); // r = 90 degrees
    show_grid("rotated by r:", &rotated.values, 3);
    let flipped = apply_signal_action(&action, 4, &f).unwrap(); // s = horizontal flip
    show_grid("flipped by s:", &flipped.values, 3);

    // Compatibility is exact: acting by g1 then g2 equals acting by g2*g1...
    // in signal terms L_{g1}[L_{g2}[f]] = L_{g1 g2}[f].
    let group = action.group().clone();
    let double = apply_signal_action(&action, 1, &rotated).unwrap();
    let direct = apply_signal_action(&action, group.mul(1, 1), &f).unwrap();
    println!("two quarter turns equal a half turn: {}", double.values == direct.values);

    // The regular action: the group acting on itself by left translation.
    let klein = make_group(&GroupKind::Klein).unwrap();
    let reg = regular_action(&klein);
    let theta = DomainSignal::new(vec![2.0, 0.0, 1.0, 1.0], reg.shape().clone());
    let moved = apply_signal_action(&reg, 2, &theta).unwrap();
    println!("\nklein signal {:?} translated by 10 -> {:?}", theta.values, moved.values);

    // Octahedral rotations of a 2x2x2 voxel cube act faithfully.
    let cube = cube_grid_action(&GroupKind::Octahedral, 2).unwrap();
    let distinct: std::collections::HashSet<Vec<usize>> =
        (0..24).map(|g| cube.perm(g).to_vec()).collect();
    println!("\nO on 2x2x2 voxels: {} distinct permutations of 8 voxels", distinct.len());
}
