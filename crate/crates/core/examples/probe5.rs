use wsnloc::experiment::initial_point;
use wsnloc::netgen::{generate_connected, sample_noise, GenSpec};
use wsnloc::rng::Stream;
use wsnloc::solver::*;
use wsnloc::Clustering;
fn main() {
    for seed in 0..50u64 {
        let mut s = Stream::new(seed, 98, 0);
        let m = 3 + s.index(3);
        let k = m + 10 + s.index(41);
        let spec = GenSpec::new(k, m, 0.4, 0.01).with_seed(seed);
        let (net, _) = generate_connected(&spec, 500).unwrap();
        let net = sample_noise(&net, 0.01, seed, 0).unwrap().net;
        let x0 = initial_point(seed, 0, net.n_sensors() * 2, 0.01);
        for iters in [2000, 20000] {
            let cfg = SolverConfig { max_iters: iters, tolerance: Some(1e-14), ..Default::default() };
            let (st, tr) = solve(&net, &Clustering::whole(net.n_sensors()), &x0, &cfg).unwrap();
            let r = criticality(&net, &st.x, &st.u);
            if r.res_x > 1e-6 || r.res_u > 1e-6 {
                let zero_u = st.u.chunks(2).filter(|u| u[0] == 0.0 && u[1] == 0.0).count();
                println!("seed {seed} N {} iters {iters} sweeps {} res {:?} zero-u {zero_u}", net.n_sensors(), tr.sweeps, r);
            }
        }
    }
}
