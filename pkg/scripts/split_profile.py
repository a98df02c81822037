"""How close the speaker-disjoint splitter gets to the target counts.

Sweeps synthetic corpora of varying speaker counts and skews and reports
the largest miss relative to the largest speaker.
"""

import argparse
from collections import Counter

from pseudostutter.pipeline import DEFAULT_SPLIT_COUNTS, counts_from_ratios, stratified_split, synthetic_utterances


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--utterances", type=int, default=sum(DEFAULT_SPLIT_COUNTS))
    ap.add_argument("--speakers", type=int, nargs="+", default=[50, 100, 300, 1000])
    ap.add_argument("--skews", type=float, nargs="+", default=[0.0, 0.5, 0.7, 1.0])
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args(argv)

    targets = counts_from_ratios(DEFAULT_SPLIT_COUNTS, args.utterances)
    print(f"targets {targets}")
    print(f"{'speakers':>8} {'skew':>5} {'max_spk':>8} {'worst_miss':>10} {'miss/max':>8}")
    for n in args.speakers:
        for skew in args.skews:
            worst, biggest = 0, 0
            for seed in range(args.seeds):
                utts = synthetic_utterances(args.utterances, n, seed=seed, skew=skew)
                biggest = max(biggest, max(Counter(u.speaker_id for u in utts).values()))
                plan = stratified_split(utts, targets, seed=seed)
                worst = max(worst, max(abs(c - t) for c, t in zip(plan.counts, targets)))
            print(f"{n:8d} {skew:5.1f} {biggest:8d} {worst:10d} {worst / biggest:8.3f}")


if __name__ == "__main__":
    main()
