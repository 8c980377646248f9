use anderson_lab::operator::{dyadic_block, min_spacing, spacing_exponent, spectrum, spectrum_table};
use anderson_lab::potential::{PotentialDistribution, PotentialSource};

fn main() -> anderson_lab::Result<()> {
    let d = PotentialDistribution::uniform(0.0, 5.0)?;
    let v = d.sample(2 * 4usize.pow(4), 3, 0);

    let mut spectra = Vec::new();
    for m in 1..=4 {
        let block = dyadic_block(&v, m)?;
        let spec = spectrum(&block, 1e-13, true)?;
        let worst = spec.eigenvectors.as_ref().map_or(0.0, |vs| vs.iter().map(|x| x.residual).fold(0.0, f64::max));
        let gap = min_spacing(&spec)?;
        println!(
            "m = {m}: sites [{}, {}), {} eigenvalues in [{:.3}, {:.3}], min gap {gap:.2e} (C = {:.2}), max residual {worst:.1e}",
            block.offset,
            block.end(),
            spec.len(),
            spec.eigenvalues[0],
            spec.eigenvalues[spec.len() - 1],
            spacing_exponent(gap, spec.len()),
        );
        assert_eq!(block.sturm_count(2.5), spec.count_at_most(2.5));
        spectra.push(spec);
    }
    let csv = spectrum_table(&spectra[..1]).to_csv()?;
    print!("{csv}");
    Ok(())
}
