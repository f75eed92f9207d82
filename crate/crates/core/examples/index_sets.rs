//! Hyperbolic cross sizes, intrinsic weights and the weighted cardinality s(k).
//!
//!     cargo run --release --example index_sets

use polycs::diagnostics::lambda_weighted_size;
use polycs::multiindex::{
    hc_cardinality_bound, hyperbolic_cross, hyperbolic_cross_cardinality, is_lower, max_lower_weighted_cardinality,
    LowerCardinalityMode,
};
use polycs::{Family, WeightVector};

fn main() -> polycs::Result<()> {
    println!("{:>3} {:>3} {:>8} {:>12}", "d", "k", "|HC|", "bound");
    for (d, k) in [(2, 4), (4, 10), (8, 19), (8, 22), (16, 13)] {
        println!("{d:>3} {k:>3} {:>8} {:>12}", hyperbolic_cross_cardinality(d, k), hc_cardinality_bound(d, k));
    }

    let lambda = hyperbolic_cross(2, 6)?;
    println!("\nHC(2,6) is lower: {}", is_lower(&lambda));
    for family in [Family::Chebyshev, Family::Legendre] {
        let u = WeightVector::intrinsic(&lambda, family, 1.0)?;
        let listed: Vec<String> = lambda
            .iter()
            .zip(u.values())
            .map(|(i, w)| format!("{:?}:{w:.2}", i.entries()))
            .collect();
        println!("{} weights: {}", family.name(), listed.join(" "));
        println!("  |Lambda|_(1,u) = {}", lambda_weighted_size(&lambda, family)?);
    }

    println!("\ns(k) for d = 3: exact vs k^gamma");
    for k in 1..=8 {
        let row: Vec<String> = [Family::Chebyshev, Family::Legendre]
            .iter()
            .map(|&f| {
                let exact = max_lower_weighted_cardinality(3, k, f, LowerCardinalityMode::BruteForce).unwrap();
                let bound = max_lower_weighted_cardinality(3, k, f, LowerCardinalityMode::UpperBound).unwrap();
                format!("{}: {exact:>4} <= {bound:>6.1}", f.name())
            })
            .collect();
        println!("k={k}  {}", row.join("   "));
    }
    Ok(())
}
