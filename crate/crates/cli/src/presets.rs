//! Experiment files shipped with the binary.

/// `(name, description, text)` in listing order.
pub const PRESETS: [(&str, &str, &str); 9] = [
    ("baseline", "baseline deployment, closed form against Monte Carlo at 20-40 dB", include_str!("../presets/baseline.cfg")),
    ("snr-designs", "rates versus transmit SNR, optimised against random phases", include_str!("../presets/snr-designs.cfg")),
    ("snr-sic", "rates versus transmit SNR with and without SIC error", include_str!("../presets/snr-sic.cfg")),
    ("snr-si", "rates versus transmit SNR with weak and strong self-interference", include_str!("../presets/snr-si.cfg")),
    ("elements-targets", "rates versus element count for high and low edge targets", include_str!("../presets/elements-targets.cfg")),
    ("tau-targets", "sum rate versus DL power share for DL edge targets 6 and 3", include_str!("../presets/tau-targets.cfg")),
    ("bidir-elements", "bidirectional rates versus element count, ideal and impaired cancellation", include_str!("../presets/bidir-elements.cfg")),
    ("bidir-snr", "bidirectional rates versus transmit SNR, high edge target", include_str!("../presets/bidir-snr.cfg")),
    ("bidir-tau", "bidirectional rates versus DL power share for three power splits", include_str!("../presets/bidir-tau.cfg")),
];

pub fn get(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.0 == name).map(|p| p.2)
}
