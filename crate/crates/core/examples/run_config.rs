use anderson_lab::experiment::{emit_report, run_experiment, ExperimentConfig, RunOptions};

const CONFIG: &str = r#"
experiment = "jarnik"
master_seed = 5
trials = 2

[distribution]
kind = "uniform"
lo = 0.0
hi = 5.0

[interval]
lo = 2.0
hi = 3.0

[alpha]
kind = "exponential"
gamma_bar = 0.25

[gauge]
kind = "reciprocal_log"

[sizes]
k_max = 100000
n = 1024
"#;

fn main() -> anderson_lab::Result<()> {
    let config = ExperimentConfig::from_toml(CONFIG)?;
    let out = run_experiment(&config, None)?;
    for c in &out.report.checks {
        println!("{} {} = {:.4e} {} {:.4e}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.relation, c.tolerance);
    }
    let dir = std::env::temp_dir().join("anderson-lab-example");
    let files = emit_report(&out, &RunOptions { out_dir: Some(dir), workers: None })?;
    println!("input hash {}", out.report.input_hash);
    println!("report written to {}", files.report.display());
    Ok(())
}
