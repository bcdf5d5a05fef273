//! Paths of the oscillating process and of its cell process, written as CSV.

use homog::config::{ExperimentConfig, Preset};
use homog::rng::stream_rng;
use homog::sim::{simulate_cell_path, simulate_eps_path, SimOptions};

fn main() -> homog::Result<()> {
    let model = ExperimentConfig::from_preset(Preset::Su18).model_spec()?;
    let opts = SimOptions { record_events: true, ..SimOptions::default() };
    let out = std::env::temp_dir().join("homog_paths");
    std::fs::create_dir_all(&out)?;
    for eps in [0.5, 0.1] {
        let p = simulate_eps_path(&model, eps, 1.0, &[0.0], &opts, &mut stream_rng(3, "example/path", 0))?;
        let file = out.join(format!("eps_{eps}.csv"));
        p.write_csv(std::fs::File::create(&file)?)?;
        println!("ε = {eps}: X_1 = {:+.4}, {} of {} proposals accepted -> {}", p.end[0], p.n_accepted, p.n_proposals, file.display());
    }
    let cell = simulate_cell_path(&model, 1.0, &[0.5], &opts, &mut stream_rng(3, "example/cell", 0))?;
    println!("cell process: X̃_1 mod 1 = {:.4}", cell.end[0]);
    Ok(())
}
