use anderson_lab::approx::ApproxSequence;
use anderson_lab::gauge::{integrability_test, series_test, GaugeFunction};

fn main() -> anderson_lab::Result<()> {
    let gamma_bar = 0.25;
    let alpha = ApproxSequence::exponential(gamma_bar)?;
    let gauges = [
        ("t", GaugeFunction::lebesgue()),
        ("t^0.5", GaugeFunction::power(0.5)?),
        ("1/log(1/t)", GaugeFunction::reciprocal_log()),
    ];
    for (name, rho) in &gauges {
        let series = series_test(rho, &alpha, 100_000)?;
        let integ = integrability_test(rho, 1e-12);
        println!("rho = {name}: series {:?}, rho(t)/t near 0 {:?}", series.verdict, integ.verdict);
        for (k, s) in &series.partial_sums {
            println!("  K = {k:>6}: {s:.6}");
        }
    }
    let rho = GaugeFunction::reciprocal_log();
    let slope = series_test(&rho, &alpha, 100_000)?.log_slope(1_000, 100_000).unwrap();
    println!("slope against log K: {slope:.4}, 1/(2 gamma_bar) = {:.4}", 1.0 / (2.0 * gamma_bar));
    Ok(())
}
