"""Realized word-event rate of the rule injector against the requested p."""

import argparse
import math

import numpy as np

from pseudostutter.disfluency import AugmentationConfig, inject

VOCAB = ("saya mau makan nasi goreng terus kenapa kamu tidak datang kemarin rumah itu "
         "terletak di dekat pasar ikan jadi kita berangkat besok pagi masyarakat "
         "anak-anak sapi-sapi kotak-kotak 2024 hmm").split()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=float, nargs="+", default=[0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9])
    ap.add_argument("--sentences", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    corpus = [" ".join(rng.choice(VOCAB, size=int(rng.integers(1, 13)))) for _ in range(args.sentences)]
    words = sum(len(s.split()) for s in corpus)
    print(f"{'p':>6} {'rate':>8} {'z':>7} {'fillers/gap':>12}")
    for p in args.p:
        cfg = AugmentationConfig(p_disfluency=p, seed=args.seed)
        fired = fillers = 0
        for n, s in enumerate(corpus):
            events = inject(s, cfg, key=str(n)).events
            fired += sum(not e.kind.is_interjection for e in events)
            fillers += sum(e.kind.is_interjection for e in events)
        rate = fired / words
        se = math.sqrt(p * (1 - p) / words) or float("inf")
        print(f"{p:6.2f} {rate:8.4f} {(rate - p) / se:+7.2f} {fillers / words:12.4f}")


if __name__ == "__main__":
    main()
