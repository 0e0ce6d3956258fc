#!/usr/bin/env python3
"""Walkthrough: the model-free evaluation metrics.

Sentiment-style outputs get macro precision/recall/F1 (robust to class
imbalance), reasoning gets multi-class accuracy, summaries get ROUGE, and
extraction outputs get the aggregated hallucination rate: the fraction of
generated examples that cannot be found in their source text.
"""

import json

from loramerge import evaluate_task


def show(task, records):
    report = evaluate_task(task, records)
    print(f"{task}:")
    print(json.dumps(report, indent=2))
    print()


def main():
    show(
        "sentiment",
        [
            {"gold": "pos", "pred": "pos"},
            {"gold": "pos", "pred": "neg"},
            {"gold": "neg", "pred": "neg"},
            {"gold": "neg", "pred": "neg"},
            {"gold": "neu", "pred": "neu"},
        ],
    )
    show(
        "reasoning",
        [{"gold": "A", "pred": "A"}, {"gold": "B", "pred": "B"}, {"gold": "C", "pred": "A"}],
    )
    show(
        "summarization",
        [
            {"reference": "the cat sat on the mat", "candidate": "the cat sat"},
            {
                "reference": "merging adapters is cheap",
                "candidate": "adapters merging is cheap",
                "bertscore": 0.91,  # precomputed elsewhere; passed through
            },
        ],
    )
    show(
        "extraction",
        [
            {
                "source": "Customers praised the battery life but disliked the keyboard.",
                "examples": ["praised the battery life", "disliked the keyboard"],
            },
            {
                "source": "Support tickets mention slow startup times.",
                "examples": ["slow startup times", "frequent crashes"],
            },
        ],
    )


if __name__ == "__main__":
    main()
