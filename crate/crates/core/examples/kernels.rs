//! Payoff kernels of a small tree: closed form, numeric inverse, and 2-tree counts.

use sensor_game::format::matrix_csv;
use sensor_game::spectral::{closed_form_undirected, grounded_system, invert_numeric, two_tree_count};
use sensor_game::{LeaderNetwork, Mode};

fn main() -> sensor_game::Result<()> {
    let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (1, 5), (5, 6)];
    let net = LeaderNetwork::new(7, &edges, Mode::Undirected, 0)?;

    let closed = closed_form_undirected(&net)?;
    let numeric = invert_numeric(&grounded_system(&net)?)?;
    println!("followers {:?}", closed.follower_order);
    print!("{}", matrix_csv(&closed.inv));
    println!("max |closed - numeric| = {:e}", closed.max_discrepancy(&numeric));

    // Shared leader-path nodes of followers 3 and 6, counted two ways.
    let (r, c) = (net.follower_position(3).unwrap(), net.follower_position(6).unwrap());
    println!("entry(3, 6) = {}, 2-tree count = {}", closed.entry(r, c), two_tree_count(&net, 3, 6)?);

    let directed = net_directed()?;
    println!("directed kernel:");
    print!("{}", matrix_csv(&sensor_game::spectral::closed_form_directed(&directed)?.inv));
    Ok(())
}

fn net_directed() -> sensor_game::Result<LeaderNetwork> {
    LeaderNetwork::new(5, &[(0, 1), (1, 2), (1, 3), (0, 4)], Mode::Directed, 0)
}
