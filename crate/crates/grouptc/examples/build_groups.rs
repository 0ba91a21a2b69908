//! Construct the built-in groups, validate a hand-written Cayley table,
//! and see what validation rejects.
//!
//! Run with: cargo run --example build_groups

use grouptc::group::{make_group, FiniteGroup, GroupKind};

fn main() {
    for kind in [
        GroupKind::Cyclic(4),
        GroupKind::Cyclic(8),
        GroupKind::Klein,
        GroupKind::Dihedral(4),
        GroupKind::Dihedral(16),
        GroupKind::Octahedral,
        GroupKind::FullOctahedral,
    ] {
        let g = make_group(&kind).unwrap();
        println!(
            "{:<6} order {:>2}  commutative {:<5}  conjugacy classes {}",
            g.name(),
            g.order(),
            g.is_commutative(),
            g.conjugacy_classes().len()
        );
    }

    // A Cayley table can come from anywhere; validation derives the rest.
    let table = vec![
        vec![0, 1, 2, 3],
        vec![1, 2, 3, 0],
        vec![2, 3, 0, 1],
        vec![3, 0, 1, 2],
    ];
    let c4 = FiniteGroup::from_cayley(table, None, "my-c4").unwrap();
    println!("\nhand-written table: identity {} inverse of 1 is {}", c4.identity(), c4.inv(1));

    // Broken tables are rejected with the failing axiom.
    let broken = vec![vec![0, 1], vec![1, 1]];
    let err = FiniteGroup::from_cayley(broken, None, "broken").unwrap_err();
    println!("broken table rejected: {err}");

    // Oh is O x C2, witnessed by an explicit bijection.
    let oh = make_group(&GroupKind::FullOctahedral).unwrap();
    let product = make_group(&GroupKind::DirectProduct(
        Box::new(GroupKind::Octahedral),
        Box::new(GroupKind::Cyclic(2)),
    ))
    .unwrap();
    let phi = grouptc::group::oh_to_o_x_c2_bijection();
    let ok = (0..48).all(|x| {
        (0..48).all(|y| product.mul(phi[x], phi[y]) == phi[oh.mul(x, y)])
    });
    println!("\nOh isomorphic to O x C2 via the stored bijection: {ok}");
}
