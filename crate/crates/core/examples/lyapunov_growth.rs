use anderson_lab::potential::{ConstantPotential, PotentialDistribution, PotentialSource};
use anderson_lab::transfer::{growth_profile, lyapunov_curve, lyapunov_estimate};

fn main() -> anderson_lab::Result<()> {
    let d = PotentialDistribution::uniform(0.0, 1.0)?;

    let exact = ((3.0 + 5f64.sqrt()) / 2.0).ln();
    let free = lyapunov_estimate(&ConstantPotential(0.0), 3.0, 100_000, 2, 0)?;
    println!("constant potential at E - c = 3: {:.6} (closed form {exact:.6})", free.gamma_hat);

    let s = d.essential_spectrum();
    let grid: Vec<f64> = (0..=10).map(|i| s.lo + 0.1 * i as f64 * s.length()).collect();
    let curve = lyapunov_curve(&d, &grid, 50_000, 8, 1)?;
    println!("{:>8} {:>10} {:>10}", "E", "gamma", "std_err");
    for e in &curve.estimates {
        println!("{:>8.3} {:>10.5} {:>10.2e}", e.energy, e.gamma_hat, e.std_err);
    }

    let v = d.sample(100_000, 2, 0);
    let e = 0.5;
    let checkpoints = [100, 1_000, 10_000, 100_000];
    println!("growth rate (1/n) log ||Phi_n({e})|| on one realization, gamma = {:.5}", curve.at(e));
    for (n, rate) in growth_profile(&v, e, &checkpoints)? {
        println!("  n = {n:>6}: {rate:.5}");
    }
    Ok(())
}
