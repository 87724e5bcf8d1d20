"""Surveying the good minima of the Tai Ji task (small-scale walkthrough).

Repeated seeded trainings of a quadratic MLP land in different minima; the
first hidden layer's type tally identifies each one.  Wider first layers
expose more distinct fingerprints, and the entropy of their frequencies
grows, quantifying loss-landscape complexity.  The full-size run lives in
the CLI: ``quadnet survey --arch 2-6-6-1 --target 56 --workers 4 --out r.json``.
"""

from quadnet.experiments import SurveyConfig, run_survey, top_k_split

for width, target in ((6, 14), (8, 22), (10, 33)):
    config = SurveyConfig(arch=(2, width, 6, 1), target=target, base_seed=0, workers=2)
    report = run_survey(config)
    summary = report.summary()
    print(f"\narchitecture 2-{width}-6-1: kept {len(report.records)} good minima "
          f"out of {report.attempted} runs")
    print(f"  distinct fingerprints: {summary['distinct_keys']} "
          f"(at most {summary['max_possible_keys']} exist)")
    print(f"  entropy of good minima: {summary['entropy_bits']:.4f} bits")
    print(f"  frequency variance: {summary['frequency_variance']:.5f}")
    print(f"  frequency-weighted generalization: {summary['weighted_generalization']:.4f}")
    print("  most frequent fingerprints:")
    for key, count, freq, mean_acc in report.frequency_table[:3]:
        print(f"    {key}: {count} hits ({freq:.1%}), mean test accuracy {mean_acc:.4f}")

# Flat-vs-sharp comparison on the last survey: frequent fingerprints mark
# flat minima (easy to reach), rare ones mark sharp minima.
split = top_k_split(report.records, 5)
print(f"\ntop-5 fingerprints cover {split['top_frequency']:.1%} of runs")
print(f"  mean generalization, top-5: {split['top_mean_generalization']:.4f}")
print(f"  mean generalization, rest:  {split['rest_mean_generalization']:.4f}")
print(f"  difference: {split['difference']:+.4f}  (small either way: frequency "
      "alone does not decide generalization)")
