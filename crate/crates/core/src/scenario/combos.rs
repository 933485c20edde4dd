//! Enumeration of component-carrier combinations for sweeps.

use std::collections::BTreeMap;

use super::{AggregationConfig, Band, Bandwidth, CarrierSpec, ScenarioError, MAX_CCS};

/// Bands available to a sweep, each with its permitted bandwidths.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AllowedBands {
    entries: BTreeMap<u32, (Band, Vec<Bandwidth>)>,
}

impl AllowedBands {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds (or replaces) a band with the given bandwidths; duplicates are dropped.
    pub fn insert(&mut self, band: Band, bandwidths: impl IntoIterator<Item = Bandwidth>) {
        let mut bws: Vec<Bandwidth> = bandwidths.into_iter().collect();
        bws.sort_unstable();
        bws.dedup();
        self.entries.insert(band.frequency_mhz, (band, bws));
    }

    /// Built-in bands from `(frequency MHz, [bandwidth MHz])` pairs.
    pub fn builtin(table: &[(u32, &[f64])]) -> Result<Self, ScenarioError> {
        let mut out = Self::new();
        for (freq, bws) in table {
            let band = Band::builtin(*freq).ok_or_else(|| {
                ScenarioError::invalid("bands", format!("{freq} MHz is not a built-in band"))
            })?;
            let bws = bws
                .iter()
                .map(|&b| Bandwidth::from_mhz(b))
                .collect::<Result<Vec<_>, _>>()?;
            out.insert(band, bws);
        }
        Ok(out)
    }

    /// Parses a band spec such as `900:10;1800:10,20;2100:10,20`.
    pub fn parse_spec(spec: &str) -> Result<Self, ScenarioError> {
        const HINT: &str = "expected FREQ:BW[,BW...][;FREQ:BW...], e.g. 900:10;1800:10,20";
        let bad = |what: String| ScenarioError::invalid("bands", format!("{what} ({HINT})"));
        let mut out = Self::new();
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (freq, bws) = part
                .split_once(':')
                .ok_or_else(|| bad(format!("missing ':' in `{part}`")))?;
            let freq: u32 = freq
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad frequency `{}`", freq.trim())))?;
            let band = Band::builtin(freq)
                .ok_or_else(|| bad(format!("{freq} MHz is not a built-in band")))?;
            let bws = bws
                .split(',')
                .map(|b| {
                    let b = b.trim();
                    b.parse::<f64>()
                        .map_err(|_| bad(format!("bad bandwidth `{b}`")))
                        .and_then(|mhz| Bandwidth::from_mhz(mhz).map_err(|e| bad(e.to_string())))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if out.entries.contains_key(&freq) {
                return Err(bad(format!("band {freq} listed twice")));
            }
            out.insert(band, bws);
        }
        if out.is_empty() {
            return Err(bad("no bands given".into()));
        }
        Ok(out)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.values().all(|(_, bws)| bws.is_empty())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Bands in ascending frequency order.
    pub fn bands(&self) -> impl Iterator<Item = (&Band, &[Bandwidth])> {
        self.entries.values().map(|(b, bws)| (b, bws.as_slice()))
    }
}

/// All aggregation configurations of `n_cc` carriers drawn from `allowed`.
///
/// Configurations violating the aggregation invariants (bandwidth caps, the
/// aggregated-bandwidth limit) are skipped. Carriers within a configuration
/// are ordered by band then bandwidth, the primary is the lowest-frequency
/// carrier, and the list is sorted by the same key. Without
/// `inter_band_only`, intra-band (non-contiguous) configurations are added.
pub fn enumerate_combinations(
    allowed: &AllowedBands,
    n_cc: usize,
    inter_band_only: bool,
) -> Result<Vec<AggregationConfig>, ScenarioError> {
    if !(1..=MAX_CCS).contains(&n_cc) {
        return Err(ScenarioError::invalid(
            "cc",
            format!("carrier count must be between 1 and {MAX_CCS}, got {n_cc}"),
        ));
    }
    if allowed.is_empty() {
        return Err(ScenarioError::invalid("bands", "no bands allowed"));
    }
    let bands: Vec<(&Band, &[Bandwidth])> = allowed.bands().filter(|(_, b)| !b.is_empty()).collect();
    if inter_band_only && n_cc > bands.len() {
        return Err(ScenarioError::NotEnoughBands {
            n_cc,
            bands: bands.len(),
        });
    }

    let mut candidates: Vec<Vec<CarrierSpec>> = Vec::new();
    for subset in subsets(bands.len(), n_cc) {
        let mut partial: Vec<Vec<CarrierSpec>> = vec![Vec::new()];
        for &bi in &subset {
            let (band, bws) = bands[bi];
            partial = partial
                .into_iter()
                .flat_map(|prefix| {
                    bws.iter().filter_map(move |&bw| {
                        let c = CarrierSpec::new(*band, bw).ok()?;
                        let mut next = prefix.clone();
                        next.push(c);
                        Some(next)
                    })
                })
                .collect();
        }
        candidates.extend(partial);
    }
    if !inter_band_only && n_cc > 1 {
        for (band, bws) in &bands {
            for multiset in multisets(bws.len(), n_cc) {
                let carriers: Option<Vec<CarrierSpec>> =
                    multiset.iter().map(|&i| CarrierSpec::new(**band, bws[i]).ok()).collect();
                if let Some(c) = carriers {
                    candidates.push(c);
                }
            }
        }
    }

    let mut out: Vec<AggregationConfig> = candidates
        .into_iter()
        .filter_map(|carriers| AggregationConfig::new(carriers).ok())
        .collect();
    out.sort_by_key(canonical_key);
    out.dedup_by_key(|c| canonical_key(c));
    Ok(out)
}

fn canonical_key(cfg: &AggregationConfig) -> Vec<(u32, Bandwidth)> {
    cfg.carriers()
        .iter()
        .map(|c| (c.band.frequency_mhz, c.bandwidth))
        .collect()
}

/// Increasing index tuples of length `k` from `0..n`.
fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Non-decreasing index tuples of length `k` from `0..n`.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(cfgs: &[AggregationConfig]) -> Vec<String> {
        cfgs.iter().map(AggregationConfig::label).collect()
    }

    #[test]
    fn single_choice_per_band() {
        let allowed = AllowedBands::builtin(&[(900, &[10.0]), (1800, &[20.0]), (2100, &[20.0])]).unwrap();
        let cfgs = enumerate_combinations(&allowed, 3, true).unwrap();
        assert_eq!(labels(&cfgs), ["900@10+1800@20+2100@20"]);
        assert_eq!(cfgs[0].pcc().band.frequency_mhz, 900);
    }

    #[test]
    fn two_by_two_cartesian() {
        let allowed = AllowedBands::builtin(&[(1800, &[10.0, 20.0]), (2100, &[10.0, 20.0])]).unwrap();
        let cfgs = enumerate_combinations(&allowed, 2, true).unwrap();
        assert_eq!(
            labels(&cfgs),
            ["1800@10+2100@10", "1800@10+2100@20", "1800@20+2100@10", "1800@20+2100@20"]
        );
    }

    #[test]
    fn not_enough_bands() {
        let allowed = AllowedBands::builtin(&[(900, &[5.0])]).unwrap();
        assert_eq!(
            enumerate_combinations(&allowed, 2, true),
            Err(ScenarioError::NotEnoughBands { n_cc: 2, bands: 1 })
        );
        assert!(enumerate_combinations(&allowed, 0, true).is_err());
        assert!(enumerate_combinations(&allowed, 6, false).is_err());
    }

    #[test]
    fn caps_are_filtered() {
        let mut a = AllowedBands::new();
        a.insert(Band::builtin(900).unwrap(), [Bandwidth::Mhz10, Bandwidth::Mhz20]);
        a.insert(Band::builtin(1800).unwrap(), [Bandwidth::Mhz20]);
        let cfgs = enumerate_combinations(&a, 2, true).unwrap();
        assert_eq!(labels(&cfgs), ["900@10+1800@20"]);
    }

    #[test]
    fn intra_band_configs_when_allowed() {
        let allowed = AllowedBands::builtin(&[(1800, &[5.0, 10.0])]).unwrap();
        let cfgs = enumerate_combinations(&allowed, 2, false).unwrap();
        assert_eq!(labels(&cfgs), ["1800@5+1800@5", "1800@5+1800@10", "1800@10+1800@10"]);
    }

    #[test]
    fn band_spec_parsing() {
        let a = AllowedBands::parse_spec("900:10;1800:10,20;2100:10,20").unwrap();
        assert_eq!(a.len(), 3);
        for bad in ["", "1800", "1800:7", "abc:10", "1800:10;1800:20", "2600:10"] {
            let err = AllowedBands::parse_spec(bad).unwrap_err();
            assert!(err.to_string().contains("FREQ:BW"), "{bad}: {err}");
        }
    }

    /// Counts inter-band configurations by walking every assignment of one
    /// (band, bandwidth) pair per slot with strictly increasing bands.
    fn brute_force_count(sizes: &[usize], n_cc: usize) -> usize {
        fn go(sizes: &[usize], from: usize, left: usize) -> usize {
            if left == 0 {
                return 1;
            }
            let mut total = 0;
            for b in from..sizes.len() {
                for _ in 0..sizes[b] {
                    total += go(sizes, b + 1, left - 1);
                }
            }
            total
        }
        go(sizes, 0, n_cc)
    }

    proptest! {
        #[test]
        fn count_matches_brute_force(
            picks in proptest::collection::vec(proptest::sample::subsequence(vec![1.4, 3.0, 5.0, 10.0, 15.0], 1..=5), 1..=3),
            n_cc in 1usize..=3,
        ) {
            // 1800/2100/2600 are uncapped up to 20 MHz, and 3 x 15 MHz stays below 100 MHz.
            let freqs = [1800u32, 2100, 2600];
            let mut allowed = AllowedBands::new();
            for (i, bws) in picks.iter().enumerate() {
                let band = Band::builtin(freqs[i]).unwrap_or(Band { frequency_mhz: freqs[i], ..Band::builtin(2100).unwrap() });
                allowed.insert(band, bws.iter().map(|&b| Bandwidth::from_mhz(b).unwrap()));
            }
            let sizes: Vec<usize> = picks.iter().map(Vec::len).collect();
            match enumerate_combinations(&allowed, n_cc, true) {
                Ok(cfgs) => {
                    prop_assert_eq!(cfgs.len(), brute_force_count(&sizes, n_cc));
                    for c in &cfgs {
                        prop_assert!(c.validate().is_ok());
                        let mut fs: Vec<u32> = c.carriers().iter().map(|c| c.band.frequency_mhz).collect();
                        fs.dedup();
                        prop_assert_eq!(fs.len(), n_cc);
                    }
                    let keys: Vec<_> = cfgs.iter().map(canonical_key).collect();
                    let mut sorted = keys.clone();
                    sorted.sort();
                    sorted.dedup();
                    prop_assert_eq!(keys, sorted);
                }
                Err(e) => prop_assert!(n_cc > picks.len(), "{}", e),
            }
        }
    }
}
