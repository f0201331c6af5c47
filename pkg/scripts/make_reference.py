"""Recompute the pinned fine-grid origin value (about 4-5 minutes)."""
import json
import sys
import time
from pathlib import Path

from heisenberg_cr import subelliptic_grid as grid

N = 97


def main() -> None:
    t0 = time.time()
    spec = grid.GridSpec(N)
    g = grid.dirichlet_solve(grid.barrier_mask(spec), 0.0)
    rep = grid.solve_report(g, 0.0)
    out = {"N": spec.N, "Nt": spec.Nt, "hz": spec.hz, "ht": spec.ht, "eps": 0.0, "c0": grid.C0,
           "origin_value": rep.origin_value, "residual": rep.residual,
           "interior_min": rep.interior_min, "interior_max": rep.interior_max,
           "flagged": rep.flagged}
    path = Path(__file__).resolve().parents[1] / "src/heisenberg_cr/data/reference.json"
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(f"wrote {path} in {time.time() - t0:.0f} s", file=sys.stderr)


if __name__ == "__main__":
    main()
