"""Commit the consistency-sweep pilot used by the acceptance gate.

Runs the committed plan at its recorded seed block plus two fresh blocks,
and stores every row so the gate can (a) reproduce the committed block
bit-for-bit and (b) judge whether the monotone-decrease clause is resolved
across blocks rather than lucky within one.
"""

import json
import os

from fbmdrift.harness import ExperimentPlan, run_consistency

OUT = os.path.join(os.path.dirname(__file__), "..", "tests", "data",
                   "pilot_consistency.json")

BLOCKS = [0, 1000, 2000]


def make_plan(base_seed: int) -> ExperimentPlan:
    return ExperimentPlan(
        n_list=[2**10, 2**12, 2**14],
        model_name="linear",
        model_params={"theta": 1.0},
        sigma=0.5,
        hurst=0.7,
        gamma=2.5,
        c_alpha=8.0,
        seeds=50,
        base_seed=base_seed,
        x_min=-0.25,
        x_max=0.25,
        x_points=11,
        mode="wick_oracle",
        workers=4,
    )


def main() -> None:
    blocks = []
    for bs in BLOCKS:
        rep = run_consistency(make_plan(bs))
        sups = [r["sup_err_median"] for r in rep.rows]
        blocks.append({
            "base_seed": bs,
            "rows": rep.rows,
            "strictly_decreasing": all(b < a for a, b in zip(sups, sups[1:])),
        })
        print(f"base_seed={bs}: sup medians {['%.6f' % s for s in sups]}")

    committed = blocks[0]
    terminal = committed["rows"][-1]["sup_err_median"]
    doc = {
        "created": "2026-08-18",
        "purpose": "committed pilot fixing the numeric thresholds of the "
                   "consistency acceptance gate",
        "plan": make_plan(BLOCKS[0]).to_mapping(),
        "threshold_rule": "1.25 x the committed block's terminal median",
        "terminal_threshold": 1.25 * terminal,
        "blocks": blocks,
        "decrease_resolved": all(b["strictly_decreasing"] for b in blocks),
        "note": "per-step declines of the median are smaller than its "
                "standard error (~0.013 at 50 seeds); the ordering flips "
                "between seed blocks, so the monotone-decrease clause is "
                "reported as unresolved at this budget",
    }
    os.makedirs(os.path.dirname(OUT), exist_ok=True)
    with open(OUT, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print("wrote", os.path.abspath(OUT))


if __name__ == "__main__":
    main()
