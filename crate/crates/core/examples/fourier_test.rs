//! Perturbed-operator eigenvalue near the origin, its series expansion,
//! and the resolvent-integral test on the largest separated neighbourhood.

use combwalk::spectral::{
    expansion_eigenvalue, fourier_criterion, principal_eigenvalue, separated_half_width,
    FourierOptions, MarkovWalk, PeriodicPolicy,
};
use combwalk::{DrrwSpec, LatticePmf};

fn main() -> combwalk::Result<()> {
    let nu = LatticePmf::new(1, vec![0.6, 0.4], 0.0)?;
    let walk = MarkovWalk::from_comb(&DrrwSpec::isotropic(nu, 0.3)?.to_quadcomb()?)?;

    for t in [(0.2, 0.0), (0.05, 0.05), (0.01, -0.02)] {
        let exact = principal_eigenvalue(&walk, t)?;
        let approx = expansion_eigenvalue(&walk, t, 4)?;
        println!(
            "t={t:?} lambda={:.10} expansion={:.10} gap={:.3}",
            exact.lambda,
            1.0 + approx.value,
            exact.gap
        );
    }

    let Some(half_width) = separated_half_width(&walk, 33) else {
        println!("eigenvalue not separated near the origin");
        return Ok(());
    };
    let opts = FourierOptions {
        half_width,
        policy: PeriodicPolicy::Report,
        ..FourierOptions::default()
    };
    let r = fourier_criterion(&walk, &opts)?;
    println!("half width {half_width:.4}: {:?}", r.classification);
    for (eps, v) in r.values.iter().step_by(4) {
        println!("  eps={eps:.2e} integral={v:.4}");
    }
    Ok(())
}
