//! Per-packet features of one window: VbSS subcarriers, amplitude
//! differences, multipath eigenvalues and the power delay profile, then the
//! fitted, normalized sequence the LSTM consumes.
//!
//!     cargo run --example feature_bank

use rideside::csi::make_windows;
use rideside::features::{
    amplitude_difference, fit_pdp_pca, multipath_profile, power_delay_profile, vbss_select, FeatureConfig,
    FeatureExtractor, VbssScore,
};
use rideside::sim::{simulate, Point, Scenario};

fn main() -> anyhow::Result<()> {
    let sc = Scenario {
        rider_pos: Point::new(0.0, 3.0),
        ..Scenario::default()
    };
    let trace = simulate(&sc)?;
    let windows = make_windows(&trace.packets, 3.0, 0.4, sc.side(), "demo", sc.condition);
    let w = &windows[windows.len() / 2];
    println!("window at {:.1} s with {} packets", w.start_time, w.len());

    let picked = vbss_select(&w.packets, 14, 2, VbssScore::CovSum)?;
    println!("VbSS subcarriers: {picked:?}");

    let p = &w.packets[w.len() / 2];
    let diff = amplitude_difference(p, (0, 2));
    println!("amplitude difference (first 5): {:?}", &diff[..5]);
    let mp = multipath_profile(p, (0, 2), 1e6);
    println!("multipath: lambda1 {:.3e} lambda2 {:.3e} ratio {:.1}", mp.lambda1, mp.lambda2, mp.ratio);
    let pdp = power_delay_profile(p, (0, 2));
    println!("PDP: {} taps, strongest tap {:?}", pdp.len(), argmax(&pdp));

    let rows: Vec<Vec<f64>> = w.packets.iter().map(|p| power_delay_profile(p, (0, 2))).collect();
    let basis = fit_pdp_pca(&rows, 3)?;
    println!("PCA explained variance: {:?}", basis.explained_variance_ratio);

    let fx = FeatureExtractor::fit(&FeatureConfig::default(), &windows)?;
    let seq = fx.sequence(w)?;
    println!("sequence: {} steps x {} features, {} valid", seq.len(), seq.dim(), seq.valid_len);
    Ok(())
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i)
}
