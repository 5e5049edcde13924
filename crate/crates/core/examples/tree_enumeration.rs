//! Ordered m-ary trees, their counts and the arrangements of autonomous
//! moves on their branches.

use wildkac::trees::{count_arrangements, count_trees, enumerate_arrangements, enumerate_trees};

fn main() -> wildkac::Result<()> {
    for m in 2..=4 {
        let counts: Vec<String> = (0..=8).map(|n| count_trees(m, n).to_string()).collect();
        println!("m={m}: {}", counts.join(" "));
    }
    println!("\nternary trees with two nodes:");
    for tree in enumerate_trees(3, 2, 8)? {
        println!("  {:<14} {}", tree.shape(), tree.labeled());
    }
    println!("\none move on a tree with 7 branches ({} ways):", count_arrangements(7, 1));
    for arr in enumerate_arrangements(7, 1, 100)? {
        println!("  {:?}", arr.counts());
    }
    println!("\nbinary trees with 20 nodes: {}", count_trees(2, 20));
    Ok(())
}
