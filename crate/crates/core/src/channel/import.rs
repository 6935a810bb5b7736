//! Columnar text format for externally traced paths.
//!
//! ```text
//! # pathloss=1e-9 K=64 D=16 Ts=1e-8
//! link_id, path_index, gain_re, gain_im, delay_s, azimuth_rad, elevation_rad
//! 0, 0, 1.0, 0.0, 0.0, 0.5, 1.2
//! 1, 0, 0.3, -0.2, 2e-8, 3.1, 1.5
//! ```
//!
//! The first non-blank line must be the `# pathloss=... K=... D=... Ts=...`
//! header. Further `#` lines and a `link_id` column-name line are ignored.
//! Angles must already lie in `[0, 2pi)`; nothing is silently wrapped.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use super::{ChannelConfig, PathComponent, Pulse};
use crate::{Complex64, Error, Result};

/// Values carried by the `#` header line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelFileHeader {
    pub path_loss: f64,
    pub num_subcarriers: usize,
    pub num_taps: usize,
    pub sample_period: f64,
}

impl ChannelFileHeader {
    /// Channel configuration implied by the header.
    pub fn channel_config(&self, pulse: Pulse) -> ChannelConfig {
        ChannelConfig {
            num_subcarriers: self.num_subcarriers,
            num_taps: self.num_taps,
            sample_period: self.sample_period,
            path_loss: self.path_loss,
            pulse,
        }
    }
}

/// Paths grouped by link, in `path_index` order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportedChannels {
    pub header: ChannelFileHeader,
    pub links: BTreeMap<u64, Vec<PathComponent>>,
}

pub fn read_channel_file(path: impl AsRef<Path>) -> Result<ImportedChannels> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_channel_file(&text, &path.display().to_string())
}

pub fn parse_channel_file(text: &str, source_name: &str) -> Result<ImportedChannels> {
    let err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        line,
        message,
    };

    let mut header = None;
    let mut records: BTreeMap<u64, BTreeMap<u64, PathComponent>> = BTreeMap::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if header.is_none() {
            header = Some(parse_header(line).map_err(|m| err(lineno, m))?);
            continue;
        }
        if line.starts_with('#') || line.starts_with("link_id") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(err(lineno, format!("expected 7 fields, found {}", fields.len())));
        }
        let int = |idx: usize, name: &str| -> Result<u64> {
            fields[idx]
                .parse::<u64>()
                .map_err(|e| err(lineno, format!("field `{name}`: {e}")))
        };
        let float = |idx: usize, name: &str| -> Result<f64> {
            let v = fields[idx]
                .parse::<f64>()
                .map_err(|e| err(lineno, format!("field `{name}`: {e}")))?;
            if !v.is_finite() {
                return Err(err(lineno, format!("field `{name}` is not finite")));
            }
            Ok(v)
        };
        let link = int(0, "link_id")?;
        let index = int(1, "path_index")?;
        let gain = Complex64::new(float(2, "gain_re")?, float(3, "gain_im")?);
        let delay = float(4, "delay_s")?;
        let azimuth = float(5, "azimuth_rad")?;
        let elevation = float(6, "elevation_rad")?;
        let record = format!("record (link {link}, path {index})");
        if delay < 0.0 {
            return Err(err(lineno, format!("{record}: negative delay {delay}")));
        }
        for (name, angle) in [("azimuth_rad", azimuth), ("elevation_rad", elevation)] {
            if !(0.0..TAU).contains(&angle) {
                return Err(err(lineno, format!("{record}: {name} = {angle} outside [0, 2pi)")));
            }
        }
        let path = PathComponent::new(gain, delay, azimuth, elevation).map_err(|e| err(lineno, format!("{record}: {e}")))?;
        if records.entry(link).or_default().insert(index, path).is_some() {
            return Err(err(lineno, format!("{record}: duplicate path index")));
        }
    }

    let header = header.ok_or_else(|| err(0, "missing `# pathloss=... K=... D=... Ts=...` header".into()))?;
    let links = records
        .into_iter()
        .map(|(link, paths)| (link, paths.into_values().collect()))
        .collect();
    Ok(ImportedChannels { header, links })
}

fn parse_header(line: &str) -> std::result::Result<ChannelFileHeader, String> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| "first line must be the `# pathloss=... K=... D=... Ts=...` header".to_string())?;
    let (mut pl, mut k, mut d, mut ts) = (None, None, None, None);
    for tok in body.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| format!("malformed header token `{tok}`"))?;
        let bad = |e: &dyn std::fmt::Display| format!("header `{key}`: {e}");
        match key {
            "pathloss" => pl = Some(value.parse::<f64>().map_err(|e| bad(&e))?),
            "K" => k = Some(value.parse::<usize>().map_err(|e| bad(&e))?),
            "D" => d = Some(value.parse::<usize>().map_err(|e| bad(&e))?),
            "Ts" => ts = Some(value.parse::<f64>().map_err(|e| bad(&e))?),
            other => return Err(format!("unknown header key `{other}`")),
        }
    }
    let header = ChannelFileHeader {
        path_loss: pl.ok_or("header is missing `pathloss`")?,
        num_subcarriers: k.ok_or("header is missing `K`")?,
        num_taps: d.ok_or("header is missing `D`")?,
        sample_period: ts.ok_or("header is missing `Ts`")?,
    };
    header
        .channel_config(Pulse::Delta)
        .validate()
        .map_err(|e| format!("header: {e}"))?;
    Ok(header)
}

/// Writes `links` in the import format. Floats use the shortest round-trip
/// representation, so `parse(write(x)) == x`.
pub fn write_channel_file(header: &ChannelFileHeader, links: &BTreeMap<u64, Vec<PathComponent>>) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# pathloss={:?} K={} D={} Ts={:?}",
        header.path_loss, header.num_subcarriers, header.num_taps, header.sample_period
    );
    out.push_str("link_id, path_index, gain_re, gain_im, delay_s, azimuth_rad, elevation_rad\n");
    for (link, paths) in links {
        for (i, p) in paths.iter().enumerate() {
            let _ = writeln!(
                out,
                "{link}, {i}, {:?}, {:?}, {:?}, {:?}, {:?}",
                p.gain.re, p.gain.im, p.delay, p.azimuth, p.elevation
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "# pathloss=2.5 K=16 D=4 Ts=1e-8
link_id, path_index, gain_re, gain_im, delay_s, azimuth_rad, elevation_rad
0, 0, 1.0, 0.0, 0.0, 0.5, 1.2
1, 1, 0.1, 0.1, 1e-8, 2.0, 1.0
1, 0, 0.3, -0.2, 2e-8, 3.1, 1.5
";

    #[test]
    fn parses_header_and_groups_links() {
        let imp = parse_channel_file(GOOD, "good").unwrap();
        assert_eq!(imp.header.num_subcarriers, 16);
        assert_eq!(imp.header.num_taps, 4);
        assert_eq!(imp.header.path_loss, 2.5);
        assert_eq!(imp.links.len(), 2);
        let l1 = &imp.links[&1];
        assert_eq!(l1.len(), 2);
        // sorted by path_index
        assert_eq!(l1[0].azimuth, 3.1);
    }

    #[test]
    fn rejects_out_of_range_angle_naming_record() {
        let bad = GOOD.replace("2.0, 1.0", "7.0, 1.0");
        let e = parse_channel_file(&bad, "bad.csv").unwrap_err().to_string();
        assert!(e.contains("bad.csv:4"), "{e}");
        assert!(e.contains("link 1, path 1"), "{e}");
        assert!(e.contains("azimuth_rad"), "{e}");
    }

    #[test]
    fn rejects_missing_header_and_bad_counts() {
        assert!(parse_channel_file("0, 0, 1, 0, 0, 0, 0\n", "x").is_err());
        assert!(parse_channel_file("# pathloss=1 K=4 D=8 Ts=1e-8\n", "x").is_err());
        assert!(parse_channel_file("# pathloss=1 K=4 D=2 Ts=1e-8\n0, 0, 1\n", "x").is_err());
        assert!(parse_channel_file("# pathloss=1 K=4 D=2 Ts=1e-8\n0, 0, 1, 0, -1, 0, 0\n", "x").is_err());
        let dup = "# pathloss=1 K=4 D=2 Ts=1e-8\n0, 0, 1, 0, 0, 0, 0\n0, 0, 1, 0, 0, 0, 0\n";
        assert!(parse_channel_file(dup, "x").is_err());
    }

    #[test]
    fn write_then_parse_is_identity() {
        let imp = parse_channel_file(GOOD, "good").unwrap();
        let text = write_channel_file(&imp.header, &imp.links);
        assert_eq!(parse_channel_file(&text, "rt").unwrap(), imp);
    }
}
