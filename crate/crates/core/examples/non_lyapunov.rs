use anderson_lab::localization::box_eigenpairs;
use anderson_lab::potential::{PotentialDistribution, PotentialSource};
use anderson_lab::transfer::{lyapunov_curve, non_lyapunov_scan, prop_a_check};

fn main() -> anderson_lab::Result<()> {
    let d = PotentialDistribution::uniform(0.0, 5.0)?;
    let s = d.essential_spectrum();
    let grid: Vec<f64> = (0..=40).map(|i| s.lo + s.length() * i as f64 / 40.0).collect();
    let gamma = lyapunov_curve(&d, &grid, 20_000, 8, 32)?;
    let gamma_bar = gamma.max();

    let n = 1024;
    let v = d.sample(n, 31, 0);
    let pairs = box_eigenpairs(&v, 1e-13)?;
    for p in pairs.iter().filter(|p| [150, 200, 250].contains(&p.center)) {
        let g = gamma.at(p.energy);
        let rep = prop_a_check(&v, p.energy, p.center, g, gamma_bar, 0.5, 0.05)?;
        let at = &rep.points[0];
        println!(
            "center {}: E = {:.5}, log ||Phi_2k|| = {:.2} vs 12 tau gamma k = {:.2}",
            p.center, p.energy, at.log_norm, rep.gamma_bound
        );
        let scan = non_lyapunov_scan(&v, p.energy, 2 * p.center, 0.5, g)?;
        println!(
            "  min growth rate {:.4} at n = {} vs tau gamma = {:.4}: flagged {}",
            scan.min_rate,
            scan.argmin,
            0.5 * g,
            scan.flag
        );
    }
    let far = d.j_hi() + 10.0;
    let scan = non_lyapunov_scan(&v, far, n, 0.5, gamma.at(far))?;
    println!("E = {far} (outside the spectrum): min rate {:.3}, flagged {}", scan.min_rate, scan.flag);
    Ok(())
}
