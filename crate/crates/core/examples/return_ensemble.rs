//! Return statistics of a DRRW with unit persistence, then the same walk
//! started from every reachable configuration.

use combwalk::montecarlo::{dichotomy_probe, distance_trend, ensemble, EnsembleOptions};
use combwalk::{DrrwSpec, LatticePmf};

fn main() -> combwalk::Result<()> {
    let drrw = DrrwSpec::isotropic(LatticePmf::dirac(1), 1.0 / 3.0)?;
    let spec = drrw.to_quadcomb()?;

    let e = ensemble(&spec, &EnsembleOptions::new(20_000, 200, 7))?;
    println!(
        "returned {:.3}, mean returns {:.1}, returned by 1000: {:.3}",
        e.summary.returned_fraction,
        e.summary.mean_returns,
        e.returned_by(1000)
    );

    for row in distance_trend(&spec, &[1_000, 4_000, 16_000], 100, 7, 0)? {
        println!(
            "T={:>6} returned {:.3} median min-dist {:.1}",
            row.horizon, row.returned_fraction, row.min_dist_quantiles[1].1
        );
    }

    let probe = dichotomy_probe(&spec, &EnsembleOptions::new(5_000, 50, 11))?;
    for r in &probe.rows {
        println!("{} {:.2}", r.start, r.fraction);
    }
    println!(
        "chi2 {:.2} (dof {}) p {:.3}",
        probe.chi_square, probe.dof, probe.p_value
    );
    Ok(())
}
