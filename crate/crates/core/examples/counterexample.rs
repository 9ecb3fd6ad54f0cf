//! Builds the block sequence with symbolic huge parameters, checks every
//! constraint, and encloses the two series that bracket the walk.

use combwalk::counterexample::{
    bound_lower_terms, bound_upper_series, build_sequence, verify_constraints, CexParams,
};

fn main() -> combwalk::Result<()> {
    let seq = build_sequence(&CexParams::default(), 12)?;
    let v = verify_constraints(&seq)?;
    println!("{} constraints, all hold: {}", v.rows.len(), v.all_hold);
    for f in v.failures() {
        println!("  failed: {f:?}");
    }

    let up = bound_upper_series(&seq, 12)?;
    println!(
        "upper partial sum <= {:.4}, limit {:.4}, bounded {}",
        up.partial_sums.last().copied().unwrap_or(0.0),
        up.limit,
        up.bounded
    );
    let low = bound_lower_terms(&seq, 12)?;
    for (t, c) in low.terms.iter().zip(&low.cumulative) {
        println!(
            "  k={:>2} term >= {:.3e} cumulative >= {:.3e}",
            t.index, t.lo, c
        );
    }
    Ok(())
}
