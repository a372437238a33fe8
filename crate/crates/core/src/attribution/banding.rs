use serde::{Deserialize, Serialize};

use super::AttributionMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Red,
    Orange,
    Yellow,
    None,
}

impl Band {
    const RANKED: [Band; 3] = [Band::Red, Band::Orange, Band::Yellow];

    pub fn color(self) -> Option<&'static str> {
        match self {
            Band::Red => Some("#ff6b6b"),
            Band::Orange => Some("#ffb347"),
            Band::Yellow => Some("#fff176"),
            Band::None => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandedToken {
    pub token: String,
    pub position: Option<usize>,
    pub score: f64,
    pub band: Band,
}

/// Tokens in attribution-map order, each with its band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandedHighlight {
    pub tokens: Vec<BandedToken>,
}

impl BandedHighlight {
    pub fn count(&self, band: Band) -> usize {
        self.tokens.iter().filter(|t| t.band == band).count()
    }
}

/// Sizes of `bands` groups covering the top `ceil(fraction * n)` of `n`
/// items, highest band first; the remainder goes to the highest bands.
pub fn band_sizes(n: usize, fraction: f64, bands: usize) -> Vec<usize> {
    if bands == 0 {
        return Vec::new();
    }
    // The epsilon keeps products like 0.6 * 5 from rounding up past 3.
    let k = ((fraction.clamp(0.0, 1.0) * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let k = k.min(n);
    (0..bands).map(|b| k / bands + usize::from(b < k % bands)).collect()
}

/// Sorts by descending score (earlier source position first on ties), bands
/// the top `fraction` into `bands` groups of near-equal size, colored red,
/// orange and yellow from the top. At most three bands exist.
pub fn band_tokens(attr: &AttributionMap, fraction: f64, bands: usize) -> BandedHighlight {
    let n_bands = bands.clamp(1, Band::RANKED.len());
    let scores = &attr.scores;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&scores[a], &scores[b]);
        sb.score
            .total_cmp(&sa.score)
            .then(sa.position.unwrap_or(usize::MAX).cmp(&sb.position.unwrap_or(usize::MAX)))
            .then(a.cmp(&b))
    });
    let mut bands = vec![Band::None; scores.len()];
    let mut ranked = order.into_iter();
    for (band, size) in Band::RANKED.into_iter().zip(band_sizes(scores.len(), fraction, n_bands)) {
        for i in ranked.by_ref().take(size) {
            bands[i] = band;
        }
    }
    BandedHighlight {
        tokens: scores
            .iter()
            .zip(bands)
            .map(|(s, band)| BandedToken {
                token: s.token.clone(),
                position: s.position,
                score: s.score,
                band,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::TokenScore;
    use crate::encoders::{ModelKind, UnitKind};
    use crate::tasks::TaskKind;
    use proptest::prelude::*;

    fn map(scores: &[f64]) -> AttributionMap {
        AttributionMap {
            program_id: "p".into(),
            model: ModelKind::Lstm,
            task: TaskKind::Classification,
            delta: 0.0,
            steps: 1,
            residual: 0.0,
            units: UnitKind::Lexed,
            scores: scores
                .iter()
                .enumerate()
                .map(|(i, &score)| TokenScore {
                    token: format!("t{i}"),
                    position: Some(i),
                    node_type: "ID".into(),
                    score,
                    unit: i,
                })
                .collect(),
        }
    }

    #[test]
    fn sizes_follow_the_remainder_rule() {
        assert_eq!(band_sizes(10, 0.6, 3), vec![2, 2, 2]);
        assert_eq!(band_sizes(5, 0.6, 3), vec![1, 1, 1]);
        assert_eq!(band_sizes(7, 0.6, 3), vec![2, 2, 1]);
        assert_eq!(band_sizes(1, 0.6, 3), vec![1, 0, 0]);
        assert_eq!(band_sizes(0, 0.6, 3), vec![0, 0, 0]);
    }

    #[test]
    fn ties_go_to_the_earlier_token() {
        let h = band_tokens(&map(&[1.0, 1.0, 1.0, 0.0, 0.0]), 0.6, 3);
        let bands: Vec<Band> = h.tokens.iter().map(|t| t.band).collect();
        assert_eq!(bands, vec![Band::Red, Band::Orange, Band::Yellow, Band::None, Band::None]);
    }

    #[test]
    fn fewer_bands_use_the_top_colors() {
        let h = band_tokens(&map(&[4.0, 3.0, 2.0, 1.0, 0.0]), 0.8, 2);
        let bands: Vec<Band> = h.tokens.iter().map(|t| t.band).collect();
        assert_eq!(bands, vec![Band::Red, Band::Red, Band::Orange, Band::Orange, Band::None]);
    }

    proptest! {
        #[test]
        fn bands_are_ordered_and_sized(scores in prop::collection::vec(-5.0f64..5.0, 1..80)) {
            let n = scores.len();
            let h = band_tokens(&map(&scores), 0.6, 3);
            let counts = [h.count(Band::Red), h.count(Band::Orange), h.count(Band::Yellow)];
            prop_assert_eq!(counts.iter().sum::<usize>(), (0.6 * n as f64 - 1e-9).ceil() as usize);
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            let min_of = |b: Band| h.tokens.iter().filter(|t| t.band == b).map(|t| t.score).fold(f64::INFINITY, f64::min);
            let max_of = |b: Band| h.tokens.iter().filter(|t| t.band == b).map(|t| t.score).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(min_of(Band::Red) >= max_of(Band::Orange));
            prop_assert!(min_of(Band::Orange) >= max_of(Band::Yellow));
            prop_assert!(min_of(Band::Yellow) >= max_of(Band::None));
        }
    }
}
