use anderson_lab::approx::{covering_function, Interval, IntervalUnion};
use anderson_lab::gauge::{canonical_cover, cover_measure_upper, GaugeFunction};

fn main() -> anderson_lab::Result<()> {
    let i = Interval::new(0.0, 1.0);
    let b = IntervalUnion::new(vec![(0.05, 0.3), (0.32, 0.6), (0.7, 0.95)]);
    println!("B = {:?}, mes B = {:.3}", b.intervals(), b.measure());
    for theta in [0.01, 0.05, 0.2] {
        let cov = covering_function(&b, i, theta)?;
        println!(
            "theta = {theta}: mes A = {:.4} <= {:.4} ({}); A = {:?}",
            cov.measure,
            cov.bound,
            cov.holds,
            cov.set.intervals()
        );
    }

    let target = IntervalUnion::new(vec![(0.1, 0.2), (0.5, 0.75)]);
    println!("canonical 0.05-cover of {:?}: {} pieces", target.intervals(), canonical_cover(&target, 0.05).len());
    for (name, rho) in [("t", GaugeFunction::lebesgue()), ("t^0.5", GaugeFunction::power(0.5)?)] {
        let est = cover_measure_upper(&target, &rho, &[0.1, 0.01, 0.001])?;
        let row: Vec<String> = est.iter().map(|e| format!("eps {}: {:.4}", e.eps, e.estimate)).collect();
        println!("rho = {name}: {}", row.join(", "));
    }
    Ok(())
}
