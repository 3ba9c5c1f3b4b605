"""Score the bundled sentence corpus with the reference Python VADER package.

Usage: python3 scripts/score_reference.py crates/core/data/sentiment_corpus.txt \
    > crates/core/data/sentiment_reference.tsv

Output: tab-separated sentence, compound (4 decimals, as the package reports it).
"""
import sys

from vaderSentiment.vaderSentiment import SentimentIntensityAnalyzer


def main(path):
    analyzer = SentimentIntensityAnalyzer()
    with open(path, encoding="utf-8") as f:
        for line in f:
            text = line.rstrip("\n")
            if text:
                compound = analyzer.polarity_scores(text)["compound"]
                print(f"{text}\t{compound:.4f}")


if __name__ == "__main__":
    main(sys.argv[1])
