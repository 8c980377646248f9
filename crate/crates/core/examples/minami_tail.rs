use anderson_lab::approx::Interval;
use anderson_lab::potential::PotentialDistribution;
use anderson_lab::spectralstats::{count_concentration, min_concentration_length, minami_tail};

fn main() -> anderson_lab::Result<()> {
    let d = PotentialDistribution::uniform(0.0, 1.0)?;
    let tail = minami_tail(&d, d.density_bound(), 64, Interval::new(0.5, 0.51), 3, 10_000, 3)?;
    println!("{:>2} {:>10} {:>10} {:>10}", "r", "P(# >= r)", "std_err", "bound");
    for row in &tail.rows {
        println!("{:>2} {:>10.5} {:>10.5} {:>10.5}", row.r, row.empirical, row.std_err, row.bound);
    }

    // a_I and A as fitted on [2.1, 2.6] by the density_of_states example
    let (a_i, a_emp) = (0.25, 0.44);
    let i = Interval::new(2.1, 2.6);
    println!("shortest admissible block: L = {}", min_concentration_length(a_i, a_emp, i.length()));
    let c = count_concentration(&d, 2048, i, a_i, a_emp, 200, 4)?;
    println!(
        "P(count >= {:.1}) = {:.3} against a_I/(15 A) = {:.4}",
        c.count_threshold, c.empirical, c.target
    );
    Ok(())
}
