//! Dev probe (ignored by default): decompose the Monte Carlo SINR balance.

use d2dcell::model::NetworkConfig;
use d2dcell::sim;

#[test]
#[ignore]
fn sinr_decomposition() {
    let cfg = NetworkConfig::default();
    let w = sim::default_window(&cfg, 300.0).unwrap();
    let mut sig = Vec::new();
    let mut ic = Vec::new();
    let mut id = Vec::new();
    let mut sinr = Vec::new();
    let mut equiv = Vec::new();
    for s in 0..400u64 {
        let dep = sim::sample_deployment(&cfg, s, w, 300.0).unwrap();
        let dep = sim::assign_modes(dep, &cfg).unwrap();
        let dep = sim::schedule_and_pair(dep, &cfg, s).unwrap();
        for smp in sim::measure_sinr(&dep, &cfg).unwrap() {
            if smp.mode == d2dcell::model::Mode::Cellular {
                sig.push(smp.signal_mw);
                ic.push(smp.i_cellular_mw);
                id.push(smp.i_d2d_mw);
                sinr.push(smp.sinr);
                equiv.push(smp.serving_equiv);
            }
        }
    }
    let q = |v: &mut Vec<f64>, name: &str| {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = v.len();
        eprintln!(
            "{name}: q10={:.3e} q50={:.3e} q90={:.3e}",
            v[n / 10],
            v[n / 2],
            v[9 * n / 10]
        );
    };
    eprintln!("n = {}", sinr.len());
    q(&mut sig, "signal");
    q(&mut ic, "i_cell");
    q(&mut id, "i_d2d ");
    q(&mut sinr, "sinr  ");
    q(&mut equiv, "equiv ");
}

#[test]
#[ignore]
fn serving_equiv_law_check() {
    let cfg = NetworkConfig::default();
    // Unbiased: every guard UE.
    let mc = sim::mode_split_campaign(&cfg, 5, 100_000).unwrap();
    let mut all = mc.serving_equiv.clone();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let law = d2dcell::equivalence::serving_distance_law(&cfg).unwrap();
    let n = all.len();
    eprintln!("all-UE samples n={n}");
    for q in [0.1, 0.5, 0.9] {
        let emp = all[(q * n as f64) as usize];
        let lawq = law.quantile(q);
        eprintln!("q{:.0}: empirical {emp:.2} law {lawq:.2}", q * 100.0);
    }
    let (dp, dm) = d2dcell::validation::ks_statistics(&mut all, |r| law.cdf(r));
    eprintln!("KS: D+={dp:.4} D-={dm:.4}");
    eprintln!("q_hat={} vs q={}", mc.q_hat, d2dcell::equivalence::mode_probability(&cfg).unwrap().q);
}
