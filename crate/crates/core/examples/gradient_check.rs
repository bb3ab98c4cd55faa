//! Analytic policy gradients against central finite differences.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use rand::Rng;
use stubborn::policy::FeatureLayout;
use stubborn::rng::{substream, Stream};
use stubborn::{Action, Observation, PolicyParams};

fn main() -> stubborn::Result<()> {
    let mut rng = substream(17, Stream::Init);
    let params = PolicyParams::init(FeatureLayout::default(), 10.0, 40, 32, &mut rng);
    let obs = Observation {
        est_left: 6.5,
        est_right: 4.0,
        own_prev: Some(Action::Left),
        other_prev: Some(Action::Right),
        skirmish_turn_norm: 2.0 / 40.0,
        turn_in_skirmish: 2,
        own_handicap: None,
    };
    let analytic = params.logprob_grad(&obs, Action::Left)?;
    let mut probe = params.clone();
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    println!("{:>6} {:>14} {:>14} {:>10}", "index", "analytic", "numeric", "rel err");
    for k in 0..probe.len() {
        let orig = probe.theta()[k];
        probe.theta_mut()[k] = orig + h;
        let up = probe.log_prob(&obs, Action::Left)?;
        probe.theta_mut()[k] = orig - h;
        let down = probe.log_prob(&obs, Action::Left)?;
        probe.theta_mut()[k] = orig;
        let numeric = (up - down) / (2.0 * h);
        let rel = (analytic[k] - numeric).abs() / analytic[k].abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
        // the value tower does not touch log π, so most sampled rows would read 0 = 0
        if analytic[k] != 0.0 && rng.random::<f64>() < 0.01 {
            println!("{k:>6} {:>14.6e} {numeric:>14.6e} {rel:>10.2e}", analytic[k]);
        }
    }
    println!("{} parameters, worst relative error {worst:.2e}", params.len());
    Ok(())
}
