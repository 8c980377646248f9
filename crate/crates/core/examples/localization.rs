use anderson_lab::localization::{box_eigenpairs, counting_band, decay_fit};
use anderson_lab::potential::{PotentialDistribution, PotentialSource};
use anderson_lab::transfer::lyapunov_curve;

fn main() -> anderson_lab::Result<()> {
    let d = PotentialDistribution::uniform(0.0, 5.0)?;
    let s = d.essential_spectrum();
    let grid: Vec<f64> = (0..=40).map(|i| s.lo + s.length() * i as f64 / 40.0).collect();
    let gamma = lyapunov_curve(&d, &grid, 20_000, 8, 101)?;

    let n = 512;
    let v = d.sample(n, 100, 0);
    let pairs = box_eigenpairs(&v, 1e-13)?;
    let bulk: Vec<_> = pairs.iter().filter(|p| p.center > n / 4 && p.center <= 3 * n / 4).collect();
    let mut passed = 0;
    for p in &bulk {
        let fit = decay_fit(p, gamma.at(p.energy), 0.5, 32)?;
        passed += fit.pass as usize;
    }
    println!("{passed} of {} bulk eigenfunctions decay at rate (1 - tau) gamma, tau = 0.5", bulk.len());

    for p in pairs.iter().filter(|p| [100, 200, 300].contains(&p.label)) {
        println!(
            "label {:>3}: center {:>3}, E = {:.4}, fitted rate {:.3} vs gamma {:.3}",
            p.label,
            p.center,
            p.energy,
            p.decay_rate,
            gamma.at(p.energy)
        );
    }
    for b in counting_band(&pairs, &[64, 128, 256]) {
        println!("L = {:>3}: {} centers in [1, L], band {:.2}, within: {}", b.l, b.count, b.band, b.within);
    }
    Ok(())
}
