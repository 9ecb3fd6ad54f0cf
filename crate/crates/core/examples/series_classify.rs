//! Exact series classification of two DRRWs: unit persistence (recurrent)
//! and persistence with tail `n^{-1/2}` (transient).

use combwalk::criteria::{classify_drrw, ClassifyOptions};
use combwalk::{DrrwSpec, LatticePmf};

fn report(name: &str, spec: &DrrwSpec, n: usize) -> combwalk::Result<()> {
    let r = classify_drrw(spec, n, &ClassifyOptions::default())?;
    let gamma = |e: &combwalk::criteria::SeriesEvidence| e.fit.map_or(f64::NAN, |f| f.gamma);
    println!(
        "{name}: {:?} via {:?}, a: sum {:.3} gamma {:.3}, b: sum {:.3} gamma {:.3}",
        r.verdict,
        r.engine,
        r.a.partial_sum,
        gamma(&r.a),
        r.b.partial_sum,
        gamma(&r.b)
    );
    Ok(())
}

fn main() -> combwalk::Result<()> {
    let unit = DrrwSpec::isotropic(LatticePmf::dirac(1), 1.0 / 3.0)?;
    report("unit", &unit, 2048)?;

    // P(length >= n) = n^{-1/2}, remaining mass on the cut
    let cut = 1usize << 14;
    let mut masses: Vec<f64> = (1..cut)
        .map(|n| (n as f64).powf(-0.5) - ((n + 1) as f64).powf(-0.5))
        .collect();
    masses.push((cut as f64).powf(-0.5));
    let nu = LatticePmf::new(1, masses, 0.0)?;
    let heavy = DrrwSpec::isotropic(nu, 1.0 / 3.0)?;
    report("heavy", &heavy, 128)?;
    Ok(())
}
