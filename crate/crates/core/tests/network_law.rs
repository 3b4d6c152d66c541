use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use trustnet_market::network::fit_degree_exponent;
use trustnet_market::TrustNetwork;

#[test]
fn early_nodes_collect_more_links() {
    let (n, m) = (400, 3);
    let (mut first, mut last) = (0.0, 0.0);
    for seed in 0..50 {
        let net = TrustNetwork::generate_ba(n, m, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        first += net.degree(0) as f64;
        last += net.degree(n - 1) as f64;
    }
    assert!(first / 50.0 > last / 50.0);
    // The last node only has its own m links.
    assert_eq!(last / 50.0, m as f64);
}

#[test]
fn mid_size_exponent_is_stable_across_seeds() {
    let slopes: Vec<f64> = (0..10)
        .map(|seed| {
            let net =
                TrustNetwork::generate_ba(1000, 4, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            fit_degree_exponent(&net.degrees()).unwrap().slope
        })
        .collect();
    let lo = slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(hi - lo < 0.6, "{slopes:?}");
    assert!(slopes.iter().all(|s| (-3.6..-2.0).contains(s)), "{slopes:?}");
}

#[test]
fn default_size_network_is_heavy_tailed() {
    let net = TrustNetwork::generate_ba(3969, 8, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
    assert_eq!(net.edge_count(), 8 * (3969 - 8) + 8 * 7 / 2);
    let mut d = net.degrees();
    d.sort_unstable();
    assert!(d[d.len() - 1] >= 10 * d[d.len() / 2]);
    assert_eq!(d[0], 8);
    let fit = net.degree_distribution().unwrap();
    assert!((-3.5..=-2.0).contains(&fit.fitted_exponent));
    assert!(fit.fit_r2 > 0.9);
}

#[test]
fn isolated_nodes_have_no_links() {
    let net = TrustNetwork::generate_ba_with_isolated(200, 3, 0.1, &mut ChaCha8Rng::seed_from_u64(1))
        .unwrap();
    let zero = net.degrees().iter().filter(|&&d| d == 0).count();
    assert_eq!(zero, 20);
    assert!(net.least_connected(180).is_ok());
    assert!(net.least_connected(181).is_err());
}
