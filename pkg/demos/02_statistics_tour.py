"""A tour of the measurement primitives: bands, sim_max, MW-U, and KS.

No corpus needed — everything here runs on small synthetic inputs, which
makes the behavior of each primitive easy to see: where the similarity
band boundaries sit, how the deterministic hash embedding grades partial
overlap, when the Mann-Whitney test switches between exact enumeration
and the normal approximation, and what the KS statistic responds to.

Run from the repository root:

    python3 demos/02_statistics_tour.py
"""

import numpy as np

from geaudit.embeddings import HashEmbeddingBackend
from geaudit.reflection import (
    Sentence,
    band,
    embed_sentences,
    sim_max,
    split_sentences,
)
from geaudit.stattests import Sample, ks_two_sample, mann_whitney_u

# --- 1. similarity bands ------------------------------------------------------
# Scores live in [-1, 1]; boundaries bind downward, so 0.8 is still Low
# and 0.9 is still Mid.

print("band boundaries:")
for score in (0.10, 0.80, 0.80000001, 0.90, 0.90000001, 1.00):
    print(f"  band({score:.8f}) = {band(score).value}")

# --- 2. sentence splitting and the hash embedding -----------------------------
# The hash backend maps each token to a fixed gaussian vector seeded from
# its digest and embeds a sentence as the normalized token-vector sum.
# Identical sentences land at cosine 1; sharing a fraction f of the tokens
# puts the cosine near sqrt(f), which is what makes the backend usable as
# a deterministic stand-in for a trained model.

backend = HashEmbeddingBackend()
answer = "The party pledged to expand childcare support and cut the consumption tax."
print(f"\nanswer sentence: {answer!r}")
words = answer.rstrip(".").split()
print("cosine against truncated copies (fraction of words kept):")
for keep in (len(words), 9, 6, 3):
    truncated = " ".join(words[:keep]) + "."
    vecs = embed_sentences(
        [Sentence(0, answer, "en"), Sentence(1, truncated, "en")], backend
    )
    score = float(np.dot(vecs[0], vecs[1]))
    frac = keep / len(words)
    print(f"  keep {keep:>2}/{len(words)} (f={frac:.2f}, sqrt={frac ** 0.5:.2f})"
          f" -> cosine {score:.3f}, band {band(min(1.0, score)).value}")

# sim_max scans every (answer sentence, citation sentence) pair and keeps
# the best one, so a single strong sentence on the cited page is enough.
citation_text = (
    "Unrelated housekeeping notice. "
    "The party pledged to expand childcare support and cut the consumption tax. "
    "Contact the webmaster for corrections."
)
answer_sents = split_sentences(answer, "en")
citation_sents = split_sentences(citation_text, "en")
score, (ai, ci) = sim_max(
    embed_sentences(answer_sents, backend),
    embed_sentences(citation_sents, backend),
)
print(f"\nsim_max over {len(answer_sents)}x{len(citation_sents)} pairs: "
      f"{score:.3f} at answer[{ai}] x citation[{ci}] -> {band(score).value}")

# --- 3. Mann-Whitney U ----------------------------------------------------------
# Small tie-free samples get the exact two-sided p by enumerating every
# regrouping; larger or tied samples fall back to the normal approximation
# with tie-corrected variance.

small_a = Sample("cited", (4.1, 6.2, 7.3, 9.4))
small_b = Sample("other", (1.1, 2.2, 3.3, 5.4))
result = mann_whitney_u(small_a, small_b)
print(f"\nMW-U, small tie-free samples: U={result.statistic} "
      f"p={result.p_value:.4f} ({result.method})")

rng = np.random.default_rng(7)
big_a = Sample("cited", tuple(rng.integers(0, 6, size=60).astype(float)))
big_b = Sample("other", tuple(rng.integers(1, 7, size=60).astype(float)))
result = mann_whitney_u(big_a, big_b)
print(f"MW-U, 60v60 with ties:        U={result.statistic} "
      f"p={result.p_value:.4f} ({result.method})")

# --- 4. Kolmogorov-Smirnov -------------------------------------------------------
# D is the largest vertical gap between the two empirical CDFs; a location
# shift moves it, identical samples give D=0 / p=1.

shifted = Sample("shifted", tuple(v + 1.5 for v in big_a.values))
print("\nKS on the same sample vs itself, then vs a +1.5 shift:")
same = ks_two_sample(big_a, big_a)
moved = ks_two_sample(big_a, shifted)
print(f"  identical: D={same.statistic:.3f} p={same.p_value:.3f}")
print(f"  shifted:   D={moved.statistic:.3f} p={moved.p_value:.6f} "
      f"{'(clearly different)' if moved.p_value < 0.001 else ''}")
