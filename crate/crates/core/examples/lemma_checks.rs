//! Numerical sweeps of the auxiliary inequalities: uniform-sum
//! concentration, the binomial inverse-root bound, the backtrack maximum
//! and the three-block toy recursion.

use combwalk::counterexample::{binom_sweep, omega, toy_scale_validation, unif_sweep, ToyParams};
use combwalk::criteria::backtrack_bound_sweep;
use combwalk::LatticePmf;

fn main() -> combwalk::Result<()> {
    let u = unif_sweep(&[2, 3, 4, 5, 6, 7, 8], &[1, 2, 3, 4, 5, 6])?;
    println!("uniform sums: {} violations", u.violations);
    for c in u.cases.iter().filter(|c| !c.holds) {
        println!(
            "  l={} m={} max mass {:.4} > {:.4}",
            c.l, c.m, c.max_mass, c.bound
        );
    }

    let ns: Vec<u64> = (1..=200).collect();
    let b = binom_sweep(&ns, &[0.01, 0.05, 0.1, 0.25, 0.5])?;
    println!(
        "binomial: {} cases, {} violations",
        b.cases.len(),
        b.violations
    );
    for p in [1e-2, 1e-4, 1e-6] {
        println!(
            "  omega({p:e}) sqrt(2ep) = {:.4}",
            omega(p) * (2.0 * std::f64::consts::E * p).sqrt()
        );
    }

    let nu = LatticePmf::new(1, vec![0.5, 0.25, 0.25], 0.0)?;
    let bt = backtrack_bound_sweep(&nu, 0.4, 6)?;
    println!(
        "backtrack: {} cases, all hold {}",
        bt.len(),
        bt.iter().all(|c| c.check.holds)
    );

    let toy = toy_scale_validation(&ToyParams::default(), 256, 0)?;
    for l in &toy.levels {
        println!("  level {} worst ratio {:.3}", l.k, l.worst_ratio);
    }
    println!("toy recursion holds: {}", toy.holds);
    Ok(())
}
