mod oracles;

use proptest::prelude::*;
use wfs_core::allocation::{allocate_budget, SegmentScore};
use wfs_core::boundary::{detect_boundaries, PeakParams, Segment};
use wfs_core::mmr::{select_in_segment, EmbeddingMatrix};
use wfs_core::wavelet::{decompose, max_level, reconstruct, reconstruct_detail_only};
use wfs_core::WaveletFamily;

use oracles::OracleBank;

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
}

fn family() -> impl Strategy<Value = WaveletFamily> {
    prop::sample::select(WaveletFamily::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dwt_matches_direct_convolution(
        fam in family(),
        signal in prop::collection::vec(-5.0f64..5.0, 2..=256),
        level_pick in 1usize..=4,
    ) {
        let bank = fam.filter_bank::<f64>();
        let max = max_level(signal.len(), bank.frame_len());
        prop_assume!(max >= 1);
        let level = level_pick.min(max);
        let reference = OracleBank::from(&bank);

        let coeffs = decompose(&signal, &bank, level).unwrap();
        let (a, details, lengths) = oracles::wavedec(&signal, &reference, level);
        prop_assert!(close(coeffs.approx(), &a, 1e-10));
        prop_assert_eq!(coeffs.details().len(), details.len());
        for (got, want) in coeffs.details().iter().zip(&details) {
            prop_assert!(close(got, want, 1e-10));
        }
        prop_assert_eq!(coeffs.lengths(), &lengths[..]);

        let back = reconstruct(&coeffs).unwrap();
        prop_assert!(close(&back, &oracles::waverec(&a, &details, &lengths, &reference), 1e-10));
        let detail = reconstruct_detail_only(&coeffs).unwrap();
        prop_assert!(close(&detail, &oracles::detail_only(&signal, &reference, level), 1e-10));
    }

    #[test]
    fn allocation_matches_reference(
        parts in prop::collection::vec((0u32..=64, 1usize..=6), 1..=5),
        k in 0usize..=10,
    ) {
        let importance: Vec<f64> = parts.iter().map(|&(q, _)| f64::from(q) / 64.0).collect();
        let caps: Vec<usize> = parts.iter().map(|&(_, c)| c).collect();
        let mut start = 0;
        let scores: Vec<SegmentScore> = parts
            .iter()
            .enumerate()
            .map(|(id, &(q, len))| {
                let segment = Segment { id, start, end: start + len - 1 };
                start += len;
                SegmentScore {
                    segment,
                    importance: f64::from(q) / 64.0,
                    duration_term: 0.0,
                    mean_term: 0.0,
                    max_term: 0.0,
                    variance_term: 0.0,
                }
            })
            .collect();
        let got: Vec<usize> = allocate_budget(&scores, k).unwrap().entries.iter().map(|e| e.budget).collect();
        prop_assert_eq!(got, oracles::allocate_reference(&importance, &caps, k));
    }

    #[test]
    fn mmr_matches_double_loop(
        len in 1usize..=12,
        k_pick in 1usize..=4,
        lambda in prop::sample::select(vec![0.0, 0.25, 0.5, 0.75, 1.0]),
        values in prop::collection::vec(0.0f64..1.0, 12),
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 12),
    ) {
        let k = k_pick.min(len);
        let relevance = &values[..len];
        let rows: Vec<Vec<f64>> = rows[..len].iter().map(|r| {
            if r.iter().all(|v| *v == 0.0) { vec![1.0, 0.0, 0.0] } else { r.clone() }
        }).collect();
        let emb = EmbeddingMatrix::from_rows(&rows).unwrap();
        let seg = Segment { id: 0, start: 0, end: len - 1 };
        let got = select_in_segment(relevance, &seg, k, &emb, lambda).unwrap();
        prop_assert_eq!(got, oracles::mmr_reference(relevance, &rows, 0, len - 1, k, lambda));
    }
}

/// Every signal of length 3..=8 over a 3-letter alphabet.
#[test]
fn detection_matches_exhaustive_reference_small() {
    let params = PeakParams::default();
    let alphabet = [0.0, 1.0, 2.0];
    for n in 3..=8u32 {
        for code in 0..3usize.pow(n) {
            let mut c = code;
            let signal: Vec<f64> = (0..n)
                .map(|_| {
                    let v = alphabet[c % 3];
                    c /= 3;
                    v
                })
                .collect();
            let got = detect_boundaries(&signal, &params);
            let want = oracles::detect_exhaustive(
                &signal,
                params.height_factor,
                params.prominence_factor,
                params.min_distance_floor,
                params.min_distance_fraction,
            );
            assert_eq!(got.indices(), &want[..], "signal {signal:?}");
        }
    }
}

#[test]
fn detection_matches_reference_with_short_suppression_distance() {
    let params = PeakParams {
        min_distance_floor: 2,
        ..PeakParams::default()
    };
    let alphabet = [0.0, 0.5, 3.0];
    for code in 0..3usize.pow(9) {
        let mut c = code;
        let signal: Vec<f64> = (0..9)
            .map(|_| {
                let v = alphabet[c % 3];
                c /= 3;
                v
            })
            .collect();
        let got = detect_boundaries(&signal, &params);
        let want = oracles::detect_exhaustive(&signal, 0.5, 0.05, 2, 0.02);
        assert_eq!(got.indices(), &want[..], "signal {signal:?}");
    }
}
