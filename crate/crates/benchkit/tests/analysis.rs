use benchkit::dunno::{dunno_prob_absent, measured_absent_rate};
use benchkit::events::synth_feed;
use benchkit::locality::locality_histograms;

#[test]
fn real_table_dont_know_rate_is_near_the_model() {
    let queries = 2_000_000;
    let (rate, preleafs, buckets) = measured_absent_rate(9210, queries, 5);
    assert_eq!(buckets, 32768);
    let p = dunno_prob_absent(preleafs as u64, buckets as u64, 5);
    let sigma = (p * (1.0 - p) / queries as f64).sqrt();
    assert!(
        rate < 10.0 * p + 3.0 * sigma,
        "rate {rate:.3e}, model {p:.3e}"
    );
}

#[test]
fn synthetic_feed_has_locality() {
    let (seq, edge) = locality_histograms(&synth_feed(6, 50_000));
    let near = |h: &benchkit::locality::LocalityHistogram| {
        h.bins.range(..=10).map(|(_, c)| c).sum::<u64>() as f64 / h.total() as f64
    };
    assert!(near(&seq) > 0.5, "{}", near(&seq));
    assert!(near(&edge) > 0.3, "{}", near(&edge));
}
