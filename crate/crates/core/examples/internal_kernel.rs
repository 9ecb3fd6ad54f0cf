//! Internal Markov chain of a DRRW, its stationary law, and a simulated
//! skeleton compared against the kernel rows.

use combwalk::skeleton::{build_kernel, skeleton_check, stationary_residual};
use combwalk::{DrrwSpec, LatticePmf};

fn main() -> combwalk::Result<()> {
    let nu = LatticePmf::new(1, vec![0.5, 0.3, 0.2], 0.0)?;
    let drrw = DrrwSpec::isotropic(nu, 0.25)?;
    let spec = drrw.to_quadcomb()?;

    let k = build_kernel(&spec)?;
    println!(
        "{} states, residual {:.1e}",
        k.len(),
        stationary_residual(&k.matrix, &k.pi)
    );
    for (s, p) in k.states.iter().zip(&k.pi) {
        println!("  pi({s}) = {p:.5}");
    }

    let check = skeleton_check(&spec, Some(&drrw), 200_000, 3)?;
    println!(
        "{} breaks, max row TV {:.4}, chi2 p-value {:.3}",
        check.breaks, check.max_row_tv, check.p_value
    );
    if let Some((h, v)) = check.margin_tv {
        println!("stint TV: horizontal {h:.4}, vertical {v:.4}");
    }
    Ok(())
}
