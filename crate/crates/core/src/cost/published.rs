//! Published hand-gesture benchmark figures, kept verbatim for comparison
//! tables. These are measurements reported by the original authors and are
//! never recomputed or edited here. `source` holds the table row as printed.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PublishedRow {
    pub platform: &'static str,
    pub modality: &'static str,
    /// Name of the matching benchmark network in this crate, if modelled.
    pub network: Option<&'static str>,
    pub accuracy_pct: f64,
    pub accuracy_std: f64,
    /// Mean energy per inference, microjoules.
    pub energy_uj: f64,
    /// Mean inference time, milliseconds.
    pub time_ms: f64,
    /// Energy-delay product, microjoule-seconds.
    pub edp_ujs: f64,
    pub source: &'static str,
}

impl PublishedRow {
    /// Inference time in seconds.
    pub fn time_s(&self) -> f64 {
        self.time_ms * 1e-3
    }

    pub fn energy_j(&self) -> f64 {
        self.energy_uj * 1e-6
    }
}

macro_rules! row {
    ($platform:literal, $modality:literal, $net:expr, $acc:literal, $std:literal, $e:literal, $t:literal, $edp:literal, $src:literal) => {
        PublishedRow {
            platform: $platform,
            modality: $modality,
            network: $net,
            accuracy_pct: $acc,
            accuracy_std: $std,
            energy_uj: $e,
            time_ms: $t,
            edp_ujs: $edp,
            source: $src,
        }
    };
}

pub const MEMRISTIVE: [PublishedRow; 6] = [
    // & EMG (MLP$^\dagger$) & 64.6~$\pm$~2.2 & 0.038 & 6.0~$\cdot10^{-4}$~~ & 2.38~$\cdot10^{-8}$~~
    row!("Memristive", "EMG", Some("mlp_emg_a"), 64.6, 2.2, 0.038, 6.0e-4, 2.38e-8,
        r"EMG (MLP$^\dagger$) & 64.6~$\pm$~2.2 & 0.038 & 6.0~$\cdot10^{-4}$~~ & 2.38~$\cdot10^{-8}$"),
    // & EMG (MLP$^\ddagger$) & 63.8~$\pm$~1.4 & 0.026 & 4.0~$\cdot10^{-4}$ & 1.04~$\cdot10^{-8}$
    row!("Memristive", "EMG", Some("mlp_emg_b"), 63.8, 1.4, 0.026, 4.0e-4, 1.04e-8,
        r"EMG (MLP$^\ddagger$) & 63.8~$\pm$~1.4 & 0.026 & 4.0~$\cdot10^{-4}$ & 1.04~$\cdot10^{-8}$"),
    // & APS (CNN$^\diamond$) & 96.2~$\pm$~3.3 & 4.83 & 1.0~$\cdot10^{-3}$ & 4.83~$\cdot10^{-6}$
    row!("Memristive", "APS", Some("cnn_aps"), 96.2, 3.3, 4.83, 1.0e-3, 4.83e-6,
        r"APS (CNN$^\diamond$) & 96.2~$\pm$~3.3 & 4.83 & 1.0~$\cdot10^{-3}$ & 4.83~$\cdot10^{-6}$"),
    // & APS (MLP$^\mp$) & 82.4~$\pm$~8.5 & 0.18 & 4.0~$\cdot10^{-4}$ & 7.2~$\cdot10^{-8}$
    row!("Memristive", "APS", Some("mlp_aps"), 82.4, 8.5, 0.18, 4.0e-4, 7.2e-8,
        r"APS (MLP$^\mp$) & 82.4~$\pm$~8.5 & 0.18 & 4.0~$\cdot10^{-4}$ & 7.2~$\cdot10^{-8}$"),
    // & EMG+APS (CNN$^\cup$) & 94.8~$\pm$~2.0 & 4.90 & 1.2~$\cdot10^{-3}$ & 5.88~$\cdot10^{-6}$
    row!("Memristive", "EMG+APS", Some("fused_cnn"), 94.8, 2.0, 4.90, 1.2e-3, 5.88e-6,
        r"EMG+APS (CNN$^\cup$) & 94.8~$\pm$~2.0 & 4.90 & 1.2~$\cdot10^{-3}$ & 5.88~$\cdot10^{-6}$"),
    // & EMG+APS (MLP$^\cup$) & 83.4~$\pm$~2.8 & 0.33 & 6.0~$\cdot10^{-4}$ & 1.98~$\cdot10^{-7}$
    row!("Memristive", "EMG+APS", Some("fused_mlp"), 83.4, 2.8, 0.33, 6.0e-4, 1.98e-7,
        r"EMG+APS (MLP$^\cup$) & 83.4~$\pm$~2.8 & 0.33 & 6.0~$\cdot10^{-4}$ & 1.98~$\cdot10^{-7}$"),
];

/// Other platforms of the same comparison, for context in reports.
pub const REFERENCE: [PublishedRow; 17] = [
    row!("Loihi", "EMG", Some("mlp_emg_a"), 55.7, 2.7, 173.2, 5.89, 1.0,
        r"EMG (MLP$^\dagger$)  & 55.7 $\pm$ 2.7  & 173.2 $\pm$ 21.2  & 5.89 $\pm$ 0.18  & 1.0 $\pm$ 0.1"),
    row!("Loihi", "DVS", None, 92.1, 1.2, 815.3, 6.64, 5.4,
        r"DVS (CNN$^\diamond$)  & 92.1 $\pm$ 1.2  & 815.3 $\pm$ 115.9  & 6.64 $\pm$ 0.14  & 5.4 $\pm$ 0.8"),
    row!("Loihi", "EMG+DVS", None, 96.0, 0.4, 1104.5, 7.75, 8.6,
        r"EMG+DVS (CNN$^\cup$)  & 96.0 $\pm$ 0.4  & 1104.5 $\pm$ 58.8  & 7.75 $\pm$ 0.07  & 8.6 $\pm$ 0.5"),
    row!("ODIN+MorphIC", "EMG", Some("mlp_emg_b"), 53.6, 1.4, 7.42, 23.5, 0.17,
        r"EMG (MLP$^\ddagger$) & 53.6~$\pm$~1.4~~ & 7.42~$\pm$~0.11 & 23.5~$\pm$~0.35 & 0.17~$\pm$~0.01"),
    row!("ODIN+MorphIC", "DVS", None, 85.1, 4.1, 57.2, 17.3, 1.00,
        r"DVS (MLP$^\mp$) & 85.1~$\pm$~4.1 & 57.2~$\pm$~6.8 & 17.3~$\pm$~2.0 & 1.00~$\pm$~0.24"),
    row!("ODIN+MorphIC", "EMG+DVS", None, 89.4, 3.0, 37.4, 19.5, 0.42,
        r"EMG+DVS (MLP$^\cup$)~ & 89.4~$\pm$~3.0 & 37.4~$\pm$~4.2 & 19.5~$\pm$~0.3 & 0.42~$\pm$~0.08"),
    row!("Embedded GPU", "EMG", Some("mlp_emg_a"), 68.1, 2.8, 25.5e3, 3.8, 97.3,
        r"EMG (MLP$^\dagger$) & 68.1~$\pm$~2.8 & (25.5~$\pm$~8.4)~$\cdot10^3$ & 3.8~$\pm$~0.1 & 97.3~$\pm$~4.4"),
    row!("Embedded GPU", "EMG", Some("mlp_emg_b"), 67.2, 3.6, 23.9e3, 2.8, 67.2,
        r"EMG (MLP$^\ddagger$) & 67.2~$\pm$~3.6 & (23.9~$\pm$~5.6)~$\cdot 10^3$ & 2.8~$\pm$~0.08 & 67.2~$\pm$~2.9"),
    row!("Embedded GPU", "APS", Some("cnn_aps"), 92.4, 1.6, 31.7e3, 5.9, 186.9,
        r"APS (CNN$^\diamond$) & 92.4~$\pm$~1.6 & (31.7~$\pm$~7.4)~$\cdot 10^3$ & 5.9~$\pm$~0.1 & 186.9~$\pm$~3.9"),
    row!("Embedded GPU", "APS", Some("mlp_aps"), 84.2, 4.3, 30.2e3, 6.9, 211.3,
        r"APS (MLP$^\mp$) & 84.2~$\pm$~4.3 & (30.2~$\pm$~7.5)~$\cdot 10^3$ & 6.9~$\pm$~0.1 & 211.3~$\pm$~6.1"),
    row!("Embedded GPU", "EMG+APS", Some("fused_cnn"), 95.4, 1.7, 32.1e3, 6.9, 221.1,
        r"EMG+APS (CNN$^\cup$) & 95.4~$\pm$~1.7 & (32.1~$\pm$~7.9)~$\cdot 10^3$ & 6.9~$\pm$~0.05 & 221.1~$\pm$~4.1"),
    row!("Embedded GPU", "EMG+APS", Some("fused_mlp"), 88.1, 4.1, 32.0e3, 7.9, 253.0,
        r"EMG+APS (MLP$^\cup$) & 88.1~$\pm$~4.1 & (32.0~$\pm$~8.9)~$\cdot 10^3$ & 7.9~$\pm$~0.05 & 253~$\pm$~3.9"),
    row!("FPGA", "EMG", Some("mlp_emg_a"), 67.2, 2.3, 17.6e3, 4.2, 74.1,
        r"EMG (MLP$^\dagger$) & 67.2~$\pm$~2.3 & (17.6~$\pm$~1.1)~$10^3$ & 4.2~$\pm$~0.1 & 74.1~$\pm$~1.2"),
    row!("FPGA", "EMG", Some("mlp_emg_b"), 63.8, 1.4, 13.9e3, 3.5, 48.9,
        r"EMG (MLP$^\ddagger$) & 63.8~$\pm$~1.4 & (13.9~$\pm$~1.8)~$\cdot 10^3$ & 3.5~$\pm$~0.1 & 48.9~$\pm$~1.9"),
    row!("FPGA", "APS", Some("cnn_aps"), 96.7, 3.0, 24.0e3, 5.4, 130.8,
        r"APS (CNN$^\diamond$) & 96.7~$\pm$~3.0 & (24.0~$\pm$~1.2)~$10^3$ & 5.4~$\pm$~0.2 & 130.8~$\pm$~1.4"),
    row!("FPGA", "APS", Some("mlp_aps"), 82.9, 8.4, 23.1e3, 5.7, 131.4,
        r"APS (MLP$^\mp$) & 82.9~$\pm$~8.4 & (23.1~$\pm$~2.6)~$\cdot 10^{3}$~~ & 5.7~$\pm$~0.2 & 131.4~$\pm$~2.8"),
    row!("FPGA", "EMG+APS", Some("fused_cnn"), 94.8, 2.0, 31.2e3, 6.3, 196.3,
        r"EMG+APS (CNN$^\cup$) & 94.8~$\pm$~2.0 & (31.2~$\pm$~3.0)~$10^3$ & 6.3~$\pm$~0.1 & 196.3~$\pm$~3.1"),
];

/// Memristive row for a benchmark network name.
pub fn memristive(network: &str) -> Option<&'static PublishedRow> {
    MEMRISTIVE.iter().find(|r| r.network == Some(network))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_memristive_row_is_named_and_unique() {
        let mut names: Vec<_> = MEMRISTIVE.iter().map(|r| r.network.unwrap()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 6);
        assert!(memristive("cnn_aps").is_some());
        assert!(memristive("resnet").is_none());
    }

    #[test]
    fn sources_quote_the_stored_numbers() {
        for r in MEMRISTIVE {
            assert!(r.source.contains(&format!("{}", r.energy_uj)) || r.source.contains(&format!("{:.2}", r.energy_uj)), "{r:?}");
        }
    }
}
