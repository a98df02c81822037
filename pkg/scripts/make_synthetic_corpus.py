"""Write a Common Voice style TSV with a long-tailed speaker profile.

The sentences are drawn from a small vocabulary; the point is the shape of
the corpus (utterances per speaker), not the text.
"""

import argparse
import csv
import sys

import numpy as np

from pseudostutter.pipeline import synthetic_utterances

WORDS = ("saya mau makan nasi goreng terus kenapa kamu tidak datang kemarin rumah itu "
         "terletak di dekat pasar jadi kita berangkat besok pagi anak-anak kota-kota").split()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="-", help="output TSV (default: stdout)")
    ap.add_argument("--utterances", type=int, default=12_133)
    ap.add_argument("--speakers", type=int, default=300)
    ap.add_argument("--skew", type=float, default=0.7, help="Zipf exponent of speaker sizes")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    utts = synthetic_utterances(args.utterances, args.speakers, args.seed, args.skew)
    rng = np.random.default_rng(args.seed)
    f = sys.stdout if args.out == "-" else open(args.out, "w", encoding="utf-8", newline="")
    try:
        w = csv.writer(f, delimiter="\t", lineterminator="\n", quoting=csv.QUOTE_NONE)
        w.writerow(["client_id", "path", "sentence", "up_votes", "down_votes"])
        for u in utts:
            sentence = " ".join(rng.choice(WORDS, size=int(rng.integers(2, 10)))).capitalize() + "."
            w.writerow([u.speaker_id, f"{u.id}.mp3", sentence, 2, 0])
    finally:
        if f is not sys.stdout:
            f.close()


if __name__ == "__main__":
    main()
