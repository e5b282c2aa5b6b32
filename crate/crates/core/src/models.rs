//! Radio, framing and baseband compute formulas shared by the planners.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FIBER_SPEED_M_PER_S: f64 = 2e8;
pub const AIR_SPEED_M_PER_S: f64 = 3e8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalConstants {
    pub fiber_speed: f64,
    pub air_speed: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            fiber_speed: FIBER_SPEED_M_PER_S,
            air_speed: AIR_SPEED_M_PER_S,
        }
    }
}

impl PhysicalConstants {
    /// One-way propagation time over `km` of fiber.
    pub fn fiber_delay(&self, km: f64) -> f64 {
        km * 1e3 / self.fiber_speed
    }

    pub fn air_delay(&self, km: f64) -> f64 {
        km * 1e3 / self.air_speed
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuKind {
    Macro,
    Small,
}

/// NR carrier configuration. `overhead` is 0.14 for downlink and 0.08 for
/// uplink by default; neither it nor `capability_mismatch` has a published value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RadioConfig {
    pub carriers: u32,
    pub scaling: f64,
    pub mimo_layers: u32,
    pub modulation_order: u32,
    pub capability_mismatch: f64,
    pub max_code_rate: f64,
    pub numerology: u32,
    pub prb_count: u32,
    pub overhead: f64,
    pub tti: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carriers: 1,
            scaling: 1.0,
            mimo_layers: 4,
            modulation_order: 8,
            capability_mismatch: 1.0,
            max_code_rate: 948.0 / 1024.0,
            numerology: 1,
            prb_count: 273,
            overhead: 0.14,
            tti: 0.5e-3,
        }
    }
}

impl RadioConfig {
    pub fn uplink() -> Self {
        Self {
            overhead: 0.08,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("scaling", self.scaling),
            ("capability_mismatch", self.capability_mismatch),
            ("max_code_rate", self.max_code_rate),
            ("overhead", self.overhead),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(name, format!("{v} is outside [0, 1]")));
            }
        }
        for (name, v) in [
            ("carriers", self.carriers),
            ("mimo_layers", self.mimo_layers),
            ("modulation_order", self.modulation_order),
            ("prb_count", self.prb_count),
        ] {
            if v < 1 {
                return Err(Error::param(name, "must be at least 1"));
            }
        }
        if self.numerology > 6 {
            return Err(Error::param(
                "numerology",
                format!("{} is not in 0..=6", self.numerology),
            ));
        }
        if !(self.tti > 0.0 && self.tti.is_finite()) {
            return Err(Error::param("tti", "must be positive"));
        }
        Ok(())
    }

    /// Average OFDM symbol duration for the numerology (14 symbols per slot).
    pub fn symbol_duration(&self) -> f64 {
        1e-3 / (14.0 * f64::from(1u32 << self.numerology))
    }
}

pub fn ru_max_throughput(cfg: &RadioConfig) -> Result<f64> {
    cfg.validate()?;
    let per_carrier = cfg.scaling
        * f64::from(cfg.mimo_layers)
        * f64::from(cfg.modulation_order)
        * cfg.capability_mismatch
        * cfg.max_code_rate
        * (12.0 * f64::from(cfg.prb_count) / cfg.symbol_duration())
        * (1.0 - cfg.overhead);
    Ok(per_carrier * f64::from(cfg.carriers))
}

pub fn path_loss(kind: RuKind, d_km: f64) -> Result<f64> {
    if !(d_km > 0.0) || !d_km.is_finite() {
        return Err(Error::Domain(format!(
            "path loss distance must be positive, got {d_km}"
        )));
    }
    Ok(match kind {
        RuKind::Macro => 128.1 + 37.6 * d_km.log10(),
        RuKind::Small => 37.0 + 30.0 * d_km.log10(),
    })
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interferer {
    pub loss_db: f64,
    pub tx_power_dbm: f64,
}

/// Shannon rate at the UE. Noise is a density in dBm/Hz integrated over the band.
pub fn ue_throughput(
    bandwidth_hz: f64,
    tx_power_dbm: f64,
    noise_dbm_per_hz: f64,
    own_loss_db: f64,
    interferers: &[Interferer],
) -> f64 {
    let signal = dbm_to_mw(tx_power_dbm - own_loss_db);
    let noise = dbm_to_mw(noise_dbm_per_hz) * bandwidth_hz;
    let interference: f64 = interferers
        .iter()
        .map(|i| dbm_to_mw(i.tx_power_dbm - i.loss_db))
        .sum();
    bandwidth_hz * (1.0 + signal / (noise + interference)).log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageQuery {
    pub slice_peak_rate: f64,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub noise_dbm_per_hz: f64,
    pub kind: RuKind,
    pub cap_km: f64,
    pub resolution_km: f64,
}

impl CoverageQuery {
    fn rate_at(&self, d_km: f64) -> f64 {
        // d > 0 is guaranteed by the callers below.
        let loss = path_loss(self.kind, d_km).expect("positive distance");
        ue_throughput(
            self.bandwidth_hz,
            self.tx_power_dbm,
            self.noise_dbm_per_hz,
            loss,
            &[],
        )
    }
}

/// Largest distance (on a `resolution_km` grid, capped at `cap_km`) at which an
/// interference-free UE still gets `slice_peak_rate`.
pub fn max_coverage_distance(q: &CoverageQuery) -> Result<f64> {
    if !(q.resolution_km > 0.0) {
        return Err(Error::param("resolution_km", "must be positive"));
    }
    if !(q.cap_km >= q.resolution_km) {
        return Err(Error::param(
            "cap_km",
            "must be at least one resolution step",
        ));
    }
    if !(q.bandwidth_hz > 0.0) {
        return Err(Error::param("bandwidth_hz", "must be positive"));
    }
    if q.rate_at(q.cap_km) >= q.slice_peak_rate {
        return Ok(q.cap_km);
    }
    if q.rate_at(q.resolution_km) < q.slice_peak_rate {
        return Err(Error::Infeasible(format!(
            "rate {} bps is unreachable even at {} km",
            q.slice_peak_rate, q.resolution_km
        )));
    }
    // Invariant: rate(lo) >= target, rate(hi) < target, both on the grid.
    let mut lo: u64 = 1;
    let mut hi: u64 = (q.cap_km / q.resolution_km).floor() as u64;
    if q.rate_at(hi as f64 * q.resolution_km) >= q.slice_peak_rate {
        return Ok(hi as f64 * q.resolution_km);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if q.rate_at(mid as f64 * q.resolution_km) >= q.slice_peak_rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo as f64 * q.resolution_km)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitShares {
    pub ru: f64,
    pub du: f64,
    pub cu: f64,
}

impl Default for SplitShares {
    fn default() -> Self {
        Self {
            ru: 0.4,
            du: 0.5,
            cu: 0.1,
        }
    }
}

impl SplitShares {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("ru", self.ru), ("du", self.du), ("cu", self.cu)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::param(
                    format!("split_shares.{name}"),
                    format!("{v} is outside [0, 1]"),
                ));
            }
        }
        let sum = self.ru + self.du + self.cu;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param(
                "split_shares",
                format!("shares sum to {sum}, not 1"),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComputeSpec {
    pub antennas: u32,
    pub modulation_bits: u32,
    pub code_rate: f64,
    pub layers: u32,
    pub prb: u32,
    pub split_shares: SplitShares,
}

impl Default for ComputeSpec {
    fn default() -> Self {
        Self {
            antennas: 4,
            modulation_bits: 8,
            code_rate: 948.0 / 1024.0,
            layers: 4,
            prb: 273,
            split_shares: SplitShares::default(),
        }
    }
}

pub fn bbu_gops(spec: &ComputeSpec) -> f64 {
    let a = f64::from(spec.antennas);
    let per_prb = 3.0 * a
        + a * a
        + f64::from(spec.modulation_bits) * spec.code_rate * f64::from(spec.layers) / 3.0;
    per_prb * f64::from(spec.prb) / 10.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GopsSplit {
    pub ru: f64,
    pub du: f64,
    pub cu: f64,
}

impl GopsSplit {
    pub fn total(&self) -> f64 {
        self.ru + self.du + self.cu
    }
}

/// The CU part is the remainder so that the three parts add back to `total`.
pub fn split_gops(total: f64, shares: &SplitShares) -> Result<GopsSplit> {
    shares.validate()?;
    if !(total >= 0.0) || !total.is_finite() {
        return Err(Error::param(
            "total",
            format!("{total} is not a finite non-negative GOPS value"),
        ));
    }
    if total == 0.0 {
        return Ok(GopsSplit {
            ru: 0.0,
            du: 0.0,
            cu: 0.0,
        });
    }
    // Parts on the ulp grid of `total` make ru + du and the remainder exact,
    // so the three add back to `total` with no rounding.
    let grid = total.next_up() - total;
    let snap = |x: f64| (x / grid).floor() * grid;
    let ru = snap(total * shares.ru);
    let du = snap(total * shares.du).min(total - ru);
    let cu = total - (ru + du);
    Ok(GopsSplit { ru, du, cu })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EthernetModel {
    pub payload_bits: f64,
    pub frame_bits: f64,
    pub burst_interval: f64,
}

impl Default for EthernetModel {
    fn default() -> Self {
        Self {
            payload_bits: 1500.0 * 8.0,
            frame_bits: 1542.0 * 8.0,
            burst_interval: 0.5e-3,
        }
    }
}

impl EthernetModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.payload_bits > 0.0) {
            return Err(Error::param("payload_bits", "must be positive"));
        }
        if self.frame_bits < self.payload_bits {
            return Err(Error::param("frame_bits", "must be at least payload_bits"));
        }
        if !(self.burst_interval > 0.0) {
            return Err(Error::param("burst_interval", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Burst {
    pub frames: u64,
    pub actual_throughput: f64,
}

/// Ceiling that ignores float noise of a few ulps just above an integer.
pub(crate) fn ceil_tolerant(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

pub fn burst_frames(rate_bps: f64, eth: &EthernetModel) -> Burst {
    let frames = ceil_tolerant((rate_bps.max(0.0) * eth.burst_interval) / eth.payload_bits);
    Burst {
        frames: frames as u64,
        actual_throughput: frames * eth.frame_bits / eth.burst_interval,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig4(a: f64, b: f64) -> bool {
        ((a - b) / b).abs() < 5e-5
    }

    #[test]
    fn throughput_example() {
        let cfg = RadioConfig {
            max_code_rate: 0.92578,
            ..RadioConfig::default()
        };
        let w = ru_max_throughput(&cfg).unwrap();
        // 4 * 8 * 0.92578 * 12 * 273 / 35.714us * 0.86
        let hand = 4.0 * 8.0 * 0.92578 * (12.0 * 273.0 / (1e-3 / 28.0)) * 0.86;
        assert!(sig4(w, hand));
        assert!((w / 1e9 - 2.34).abs() < 0.01);
        let half = ru_max_throughput(&RadioConfig {
            mimo_layers: 2,
            ..cfg
        })
        .unwrap();
        assert_eq!(half * 2.0, w);
    }

    #[test]
    fn bad_radio_field_is_named() {
        let err = ru_max_throughput(&RadioConfig {
            overhead: 1.5,
            ..RadioConfig::default()
        })
        .unwrap_err();
        assert!(err.to_string().contains("overhead"));
        assert!(ru_max_throughput(&RadioConfig {
            numerology: 7,
            ..RadioConfig::default()
        })
        .is_err());
    }

    #[test]
    fn path_loss_examples() {
        assert!((path_loss(RuKind::Macro, 1.0).unwrap() - 128.1).abs() < 1e-12);
        assert!(sig4(path_loss(RuKind::Macro, 2.0).unwrap(), 139.4187));
        assert!(sig4(path_loss(RuKind::Small, 0.5).unwrap(), 27.9691));
        assert!(path_loss(RuKind::Small, 0.0).is_err());
        assert!(path_loss(RuKind::Macro, -1.0).is_err());
    }

    #[test]
    fn unit_sinr_gives_bandwidth() {
        // noise over 1 Hz at -100 dBm/Hz equals a received -100 dBm
        let r = ue_throughput(1.0, 0.0, -100.0, 100.0, &[]);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bbu_and_split() {
        let spec = ComputeSpec {
            antennas: 4,
            modulation_bits: 6,
            code_rate: 1.0,
            layers: 2,
            prb: 100,
            ..ComputeSpec::default()
        };
        assert!((bbu_gops(&spec) - 320.0).abs() < 1e-9);
        assert_eq!(bbu_gops(&ComputeSpec { prb: 0, ..spec }), 0.0);
        let s = split_gops(1800.0, &SplitShares::default()).unwrap();
        assert_eq!((s.ru, s.du, s.cu), (720.0, 900.0, 180.0));
        let s = split_gops(0.0, &SplitShares::default()).unwrap();
        assert_eq!((s.ru, s.du, s.cu), (0.0, 0.0, 0.0));
        let s = split_gops(
            55.5,
            &SplitShares {
                ru: 1.0,
                du: 0.0,
                cu: 0.0,
            },
        )
        .unwrap();
        assert_eq!((s.ru, s.du, s.cu), (55.5, 0.0, 0.0));
        assert!(split_gops(
            1.0,
            &SplitShares {
                ru: 0.5,
                du: 0.5,
                cu: 0.5
            }
        )
        .is_err());
    }

    #[test]
    fn burst_examples() {
        let eth = EthernetModel::default();
        let b = burst_frames(1.111e9, &eth);
        assert_eq!(b.frames, 47);
        assert!(sig4(b.actual_throughput, 1.1596e9));
        assert_eq!(
            burst_frames(0.0, &eth),
            Burst {
                frames: 0,
                actual_throughput: 0.0
            }
        );
        let one = burst_frames(eth.payload_bits / eth.burst_interval, &eth);
        assert_eq!(one.frames, 1);
        assert_eq!(one.actual_throughput, eth.frame_bits / eth.burst_interval);
    }

    #[test]
    fn coverage_caps_and_errors() {
        let mut q = CoverageQuery {
            slice_peak_rate: 1.0,
            bandwidth_hz: 100e6,
            tx_power_dbm: 46.0,
            noise_dbm_per_hz: -174.0,
            kind: RuKind::Macro,
            cap_km: 1.0,
            resolution_km: 1e-3,
        };
        assert_eq!(max_coverage_distance(&q).unwrap(), 1.0);
        q.slice_peak_rate = 1e13;
        assert!(max_coverage_distance(&q).unwrap_err().is_infeasible());
    }
}
