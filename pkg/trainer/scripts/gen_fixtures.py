"""Regenerate the committed metric cross-check fixtures.

Development-time only: imports the engine package to freeze its metric
values; the trainer's tests then replay the frozen files without touching
the engine.
"""

import json
import pathlib

import numpy as np

from fkpde.bench import relative_errors
from fkpde.fileio import write_fields
from fkpde.grid import Field, make_grid

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    g = make_grid(1, 64)
    rng = np.random.default_rng(314159)
    cases = []
    for i in range(10):
        ref = [Field(g, rng.standard_normal(64) + 2.0) for _ in range(10)]
        pred = [Field(g, r.values + 0.05 * rng.standard_normal(64)) for r in ref]
        e2, einf = relative_errors(pred, ref)
        write_fields(OUT / f"metric_ref_{i}.fkf", ref)
        write_fields(OUT / f"metric_pred_{i}.fkf", pred)
        cases.append({"ref": f"metric_ref_{i}.fkf", "pred": f"metric_pred_{i}.fkf",
                      "e_l2": e2, "e_linf": einf})
    (OUT / "expected.json").write_text(json.dumps(cases, indent=2))
    print(f"wrote {len(cases)} fixture pairs to {OUT}")


if __name__ == "__main__":
    main()
