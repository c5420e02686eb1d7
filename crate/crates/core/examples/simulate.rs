//! Time- and frequency-domain runs agree with the kernel.

use sensor_game::platoon::platoon_ne_prediction;
use sensor_game::simulator::{dc_gain_empirical, frequency_response, log_spaced, simulate_platoon, SimConfig};
use sensor_game::spectral::{grounded_system, kernel_for};
use sensor_game::topology::{generate, TreeKind};
use sensor_game::{Mode, PlatoonScenario};

fn main() -> sensor_game::Result<()> {
    let net = generate(TreeKind::RandomTree, 9, 0, Mode::Undirected, Some(3))?;
    let (attacker, detector) = ([0, 4], [2, 7]);
    let cfg = SimConfig::first_order_defaults(&grounded_system(&net)?)?;
    println!("empirical DC gain {}", dc_gain_empirical(&net, &attacker, &detector, &cfg)?);
    println!("kernel block {}", kernel_for(&net)?.submatrix(&detector, &attacker));
    for (omega, gain) in frequency_response(&net, &attacker, &detector, &log_spaced(1e-2, 1e2, 1))? {
        println!("omega {omega:>8.3}  gain {gain:.6}");
    }

    let scn = PlatoonScenario::with_uniform_gap(6, 0, Mode::Undirected, 2.0, 1.0, 10.0)?;
    let pair = platoon_ne_prediction(&scn, 1)?;
    let run = simulate_platoon(&scn, &pair.attacker, &pair.detector, &[1.0], &SimConfig::platoon_defaults(&scn)?)?;
    println!(
        "platoon: sensor position deviation {:.6}, velocity deviation {:.2e}",
        run.steady_position_deviation[0], run.steady_velocity_deviation[0]
    );
    Ok(())
}
