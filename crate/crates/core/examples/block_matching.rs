use anderson_lab::localization::{block_match, box_eigenpairs, bulk_window, good_bad_split};
use anderson_lab::potential::{PotentialDistribution, PotentialSource};

fn main() -> anderson_lab::Result<()> {
    let d = PotentialDistribution::uniform(0.0, 5.0)?;
    for m in [3, 4] {
        let (lo, hi) = bulk_window(m);
        println!("m = {m}: bulk labels [{lo}, {hi})");
        for r in 0..4 {
            let v = d.sample(8 * 4usize.pow(m), 1000, r);
            let pairs = box_eigenpairs(&v, 1e-13)?;
            let bm = block_match(&v, m, &pairs, 1e-13)?;
            let bulk: Vec<f64> = bm.entries.iter().map(|e| e.energy).collect();
            let split = good_bad_split(&bm.block_spectrum, &bulk, m, bm.max_distance);
            println!(
                "  realization {r}: max distance {:.2e} (c = {:.3}), below 1/2 8^-m = {:.2e}: {}; bad {} <= {}",
                bm.max_distance,
                bm.fitted_c,
                bm.threshold,
                bm.all_below_threshold,
                split.bad.len(),
                split.bad_bound
            );
        }
    }
    Ok(())
}
