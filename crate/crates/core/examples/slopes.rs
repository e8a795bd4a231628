//! Fitted high-SNR slopes of each scheme on the two-user example network.

use imrc_core::dofest::{estimate_dof, snr_sweep};
use imrc_core::{paper_example_channels, Combining, GainMode, PowerPolicy, Scheme};

fn main() {
    let ch = paper_example_channels();
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 5.0).collect();
    let bm = |policy| Scheme::BlockMarkov {
        policy,
        combining: Combining::NonCoherent,
        gain_mode: GainMode::PaperFormula,
    };
    let schemes = [
        Scheme::TwoHop { relay_exponent: 1.0 },
        bm(PowerPolicy::Symmetric),
        bm(PowerPolicy::Asymmetric),
        bm(PowerPolicy::Abundant),
        Scheme::NoRelayTdm,
        Scheme::NoRelayTin,
        Scheme::CoopBc,
        Scheme::HalfDuplex { relay_exponent: 1.0 },
    ];
    for scheme in &schemes {
        let label = scheme.default_label();
        let curve = snr_sweep(scheme, &label, &ch, "example", &grid, 1.0).expect("sweep");
        let fit = estimate_dof(&curve, (60.0, 100.0)).expect("fit");
        println!("{label:<28} slope {:.3}  (40 dB: {:.2} bits)", fit.slope, curve.points[8].sum_rate_bits);
    }
}
