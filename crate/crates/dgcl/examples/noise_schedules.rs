//! Print the three variance schedules side by side for a short chain.
//!
//! Run with: cargo run --example noise_schedules

use dgcl::diffusion::{NoiseSchedule, ScheduleKind};

fn main() {
    let steps = 10;
    let (beta_min, beta_max) = (1e-5, 2e-2);
    let schedules: Vec<NoiseSchedule> = ScheduleKind::ALL
        .iter()
        .map(|&k| NoiseSchedule::build(k, steps, beta_min, beta_max).unwrap())
        .collect();

    println!("beta_t by schedule kind (T = {steps}, range [{beta_min}, {beta_max}]):");
    println!("{:>4} {:>12} {:>12} {:>12}", "t", "linear", "quadratic", "sigmoid");
    for t in 1..=steps {
        println!(
            "{t:>4} {:>12.6} {:>12.6} {:>12.6}",
            schedules[0].betas[t], schedules[1].betas[t], schedules[2].betas[t]
        );
    }

    println!("\ncumulative signal retention (alpha-bar):");
    println!("{:>4} {:>12} {:>12} {:>12}", "t", "linear", "quadratic", "sigmoid");
    for t in 0..=steps {
        println!(
            "{t:>4} {:>12.6} {:>12.6} {:>12.6}",
            schedules[0].alpha_cumprod[t],
            schedules[1].alpha_cumprod[t],
            schedules[2].alpha_cumprod[t]
        );
    }

    println!("\nposterior standard deviations:");
    for s in &schedules {
        let sigmas: Vec<String> = (1..=steps)
            .map(|t| format!("{:.5}", s.posterior_variance[t].sqrt()))
            .collect();
        println!("{:>10}: {}", s.kind.name(), sigmas.join(" "));
    }
}
