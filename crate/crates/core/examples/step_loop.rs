//! Driving the environment by hand: observe, choose, step, and watch a skirmish resolve.
//!
//! ```bash
//! cargo run --example step_loop
//! ```

use stubborn::{Action, Agent, EnvConfig, EpisodeState, TurnEvent};

fn main() -> stubborn::Result<()> {
    let env = EnvConfig {
        turns_per_episode: 8,
        ..EnvConfig::default()
    };
    let mut ep = EpisodeState::new(&env, 2024)?;
    // agent A insists on its favourite; agent B yields after one turn of disagreement
    while !ep.is_over() {
        let a = ep.observe(Agent::A)?;
        let b = ep.observe(Agent::B)?;
        let favourite = |d: f64| if d >= 0.0 { Action::Left } else { Action::Right };
        let action_a = favourite(a.d());
        let action_b = match b.other_prev {
            Some(theirs) if b.turn_in_skirmish >= 1 => theirs,
            _ => favourite(b.d()),
        };
        let sk = ep.current().clone();
        let out = ep.step(action_a, action_b)?;
        println!(
            "turn {:>2}  true ({:5.2}, {:5.2})  A sees d={:+5.2}  B sees d={:+5.2}  -> {:?}/{:?}  {:?} {:.2}",
            ep.turn_index(),
            sk.true_left,
            sk.true_right,
            a.d(),
            b.d(),
            action_a,
            action_b,
            out.event,
            out.reward
        );
        if out.event == TurnEvent::Disagree && out.episode_ended {
            println!("episode ended mid-disagreement");
        }
    }
    println!("total reward {:.2} (shared by both agents)", ep.cumulative_reward(Agent::A));
    Ok(())
}
