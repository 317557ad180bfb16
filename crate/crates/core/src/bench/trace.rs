use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Channel names used by the loop runners.
pub mod channel {
    /// Amplifier command computed by the simulated side.
    pub const V_CMD: &str = "v_cmd";
    /// Voltage at the hardware coupling point.
    pub const V_PCC: &str = "v_pcc";
    /// Current drawn by the hardware under test.
    pub const I_HUT: &str = "i_hut";
    /// Current fed back into the simulated side.
    pub const I_FB: &str = "i_fb";

    pub const LOOP: [&str; 4] = [V_CMD, V_PCC, I_HUT, I_FB];
}

/// Equal-length sampled channels at a fixed step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    dt_s: f64,
    names: Vec<String>,
    data: Vec<Vec<f64>>,
    diverged: bool,
}

impl Trace {
    pub fn new<S: AsRef<str>>(dt_s: f64, names: &[S]) -> Self {
        Self {
            dt_s,
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
            data: names.iter().map(|_| Vec::new()).collect(),
            diverged: false,
        }
    }

    /// Build from whole channels. Panics if lengths differ.
    pub fn from_channels(dt_s: f64, channels: Vec<(String, Vec<f64>)>) -> Self {
        let len = channels.first().map_or(0, |c| c.1.len());
        assert!(channels.iter().all(|c| c.1.len() == len), "channel lengths differ");
        let (names, data) = channels.into_iter().unzip();
        Self {
            dt_s,
            names,
            data,
            diverged: false,
        }
    }

    pub fn dt_s(&self) -> f64 {
        self.dt_s
    }

    pub fn len(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn diverged(&self) -> bool {
        self.diverged
    }

    pub fn set_diverged(&mut self, diverged: bool) {
        self.diverged = diverged;
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.data[i].as_slice())
    }

    pub fn channels(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.data.iter().map(Vec::as_slice))
    }

    /// Appends one sample per channel, in channel order.
    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.data.len(), "row width");
        for (c, &x) in self.data.iter_mut().zip(row) {
            c.push(x);
        }
    }

    pub fn truncate(&mut self, len: usize) {
        self.data.iter_mut().for_each(|c| c.truncate(len));
    }

    pub fn time_s(&self, index: usize) -> f64 {
        index as f64 * self.dt_s
    }
}
