"""
From message triples to an evaluated model
==========================================

Write a small (source, destination, timestamp) log, then drive the
command line tool end to end: fit, score against the empirical
interaction graph, compute the log-likelihood and check whether
consecutive gaps are correlated.
"""

import tempfile
from pathlib import Path

import numpy as np

from woldgranger.cli import main

rng = np.random.default_rng(5)
workdir = Path(tempfile.mkdtemp(prefix="woldgranger-demo-"))
triples = workdir / "messages.txt"

# six users; each user mostly replies to two favourite contacts
users = ["ana", "bo", "cy", "dee", "eli", "fay"]
favourites = {u: rng.choice([v for v in users if v != u], 2, replace=False) for u in users}
lines = []
t = 0.0
for _ in range(3000):
    t += rng.exponential(0.5)
    src = rng.choice(users)
    dst = rng.choice(favourites[src]) if rng.random() < 0.8 else rng.choice(users)
    lines.append(f"{src} {dst} {t:.3f}")
triples.write_text("\n".join(lines) + "\n")
print("wrote", len(lines), "triples to", triples)

model = workdir / "model.json"
main(["fit", "--input", str(triples), "--iters", "100", "--seed", "1", "--output", str(model)])
main(["evaluate", "--model", str(model), "--ground-truth", str(triples),
      "--metrics", "precision@2,kendall,relerr", "--null-model-seed", "0"])
main(["loglik", "--model", str(model), "--input", str(triples)])
main(["diagnose", "--input", str(triples)])
