use anderson_lab::approx::{khinchin_experiment, ApproxSequence, Interval};
use anderson_lab::potential::PotentialDistribution;

fn main() -> anderson_lab::Result<()> {
    let d = PotentialDistribution::uniform(0.0, 5.0)?;
    let i = Interval::new(1.5, 3.5);
    let divergent = ApproxSequence::harmonic(0.5)?;
    let convergent = ApproxSequence::power(0.5, 2.0)?;
    let rep = khinchin_experiment(&d, d.essential_spectrum(), i, &divergent, &convergent, 2048, 256, 3, 12)?;
    for (t, trial) in rep.trials.iter().enumerate() {
        println!("trial {t}: {} eigenpairs", trial.eigenpairs);
        println!("  {:>5} {:>10} {:>10}", "K", "divergent", "convergent");
        for (a, b) in trial.divergent.iter().zip(&trial.convergent) {
            println!("  {:>5} {:>10.4} {:>10.4}", a.0, a.1, b.1);
        }
    }
    println!(
        "divergent cover larger in {} of {} trials; convergent tails within the sum bound in {}",
        rep.dominating_trials,
        rep.trials.len(),
        rep.tail_bound_trials
    );
    Ok(())
}
