use anderson_lab::approx::Interval;
use anderson_lab::potential::PotentialDistribution;
use anderson_lab::spectralstats::{energy_grid, ids_estimate, lower_wegner_check, wegner_check, WEGNER_TOL};

fn main() -> anderson_lab::Result<()> {
    let d = PotentialDistribution::uniform(0.0, 1.0)?;
    let grid = energy_grid(-2.5, 3.5, 0.01)?;
    let ids = ids_estimate(&d, &grid, 512, 200, 7)?;
    for e in [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 3.0] {
        println!("N({e:>4}) = {:.4}", ids.value_at(e));
    }

    let w = wegner_check(&ids, d.density_bound(), WEGNER_TOL)?;
    println!(
        "largest fitted density {:.4} at E = {:.2}; bound A = {} (pass: {})",
        w.max_density, w.argmax, w.bound, w.pass
    );
    let lower = lower_wegner_check(&ids, Interval::new(2.1, 2.6), d.essential_spectrum())?;
    println!("smallest density on [2.1, 2.6]: {:.4} +- {:.4}", lower.a_i, lower.a_i_std_err);
    Ok(())
}
