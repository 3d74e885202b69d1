#!/usr/bin/env python3
"""Independent reference values for the worked arithmetic checks.

Everything is computed from the definitions with exact rationals, brute-force
rasterization or exhaustive assignment, never by calling the Rust library.
Run it to regenerate derived_values.json next to this file:

    python3 crates/cli/tests/oracle/derived_values.py
"""

import itertools
import json
import math
from fractions import Fraction as F
from pathlib import Path


def box(x, y, w, h):
    return tuple(F(v) for v in (x, y, w, h))


def area(b):
    return b[2] * b[3]


def inter(a, b):
    ow = min(a[0] + a[2], b[0] + b[2]) - max(a[0], b[0])
    oh = min(a[1] + a[3], b[1] + b[3]) - max(a[1], b[1])
    return max(F(0), ow) * max(F(0), oh)


def iou(a, b):
    i = inter(a, b)
    return i / (area(a) + area(b) - i)


def center(b):
    return (b[0] + b[2] / 2, b[1] + b[3] / 2)


def pvar(xs):
    m = sum(xs) / len(xs)
    return sum((x - m) ** 2 for x in xs) / len(xs)


def raster_overlap(a_boxes, b_boxes, res):
    """Counts grid cells whose center lies in the union of b, and of those
    the ones also inside the union of a."""
    def inside(px, py, bs):
        return any(b[0] <= px < b[0] + b[2] and b[1] <= py < b[1] + b[3] for b in bs)

    covered = hit = 0
    for i in range(res):
        px = (i + 0.5) / res
        for j in range(res):
            py = (j + 0.5) / res
            if inside(px, py, b_boxes):
                covered += 1
                if inside(px, py, a_boxes):
                    hit += 1
    return hit / covered if covered else 0.0


def alignment(centers, alpha):
    # Distances involve square roots, so this one runs in floating point.
    n = len(centers)
    d = sum(math.hypot(float(x) - 0.5, float(y) - 0.5) for x, y in centers) / n
    a_ec = 1 - d / math.sqrt(2)
    a_ee = 1 - float(pvar([c[0] for c in centers]) + pvar([c[1] for c in centers])) / 2
    return min(1.0, max(0.0, alpha * a_ec + (1 - alpha) * a_ee))


def distribution(centers):
    n = len(centers)
    mx = sum(c[0] for c in centers) / n
    my = sum(c[1] for c in centers) / n
    spread = sum((x - mx) ** 2 + (y - my) ** 2 for x, y in centers) / n / 2
    cells = {(min(math.floor(3 * x), 2), min(math.floor(3 * y), 2)) for x, y in centers}
    return (spread + F(len(cells), 9)) / 2


def spacing(ys):
    ys = sorted(ys)
    gaps = [b - a for a, b in zip(ys, ys[1:])]
    mean = sum(gaps) / len(gaps)
    return 1 - pvar(gaps) / mean ** 2


def best_assignment_iou(pred, ref):
    """Mean IoU of the best one-to-one matching, by exhaustive search."""
    best = max(
        sum(iou(p, ref[k]) for p, k in zip(pred, perm))
        for perm in itertools.permutations(range(len(ref)))
    )
    return best / len(ref)


def advantages(rs):
    m = sum(rs) / len(rs)
    sd = math.sqrt(sum((r - m) ** 2 for r in rs) / len(rs))
    return [(r - m) / sd for r in rs], sd


def main():
    out = {}

    def put(name, value):
        if isinstance(value, (list, tuple)):
            out[name] = [float(v) for v in value]
        else:
            out[name] = float(value)

    put("area_small", area(box("0.1", "0.2", "0.5", "0.1")))
    put("area_quarter", area(box(0, 0, "0.25", "0.25")))
    a, b = box(0, 0, "0.5", "0.5"), box("0.25", "0.25", "0.5", "0.5")
    put("intersect_offset", inter(a, b))
    put("iou_offset", iou(a, b))
    put("center_a", center(box("0.1", "0.2", "0.4", "0.2")))
    put("center_b", center(box(0, 0, "0.2", "0.6")))
    put("raster_half", raster_overlap([box(0, 0, "0.5", 1)], [box("0.25", 0, "0.5", 1)], 512))

    put("align_corner_alpha1", alignment([(F(0), F(0))], 1.0))
    put("align_column_alpha0", alignment([(F(1, 2), F(1, 4)), (F(1, 2), F(3, 4))], 0.0))
    put("dist_single_centered", distribution([(F(1, 2), F(1, 2))]))
    put("dist_two_wide", distribution([(F(1, 10), F(1, 2)), (F(9, 10), F(1, 2))]))
    put("spacing_uneven", spacing([F(1, 10), F(2, 10), F(8, 10)]))
    put("icr_stacked_texts", 1 - iou(a, a))

    ref = [box(0, 0, "0.5", "0.5"), box("0.5", "0.5", "0.5", "0.5")]
    pred = [box(0, 0, "0.5", "0.5"), box("0.25", "0.25", "0.5", "0.5")]
    put("iou_reward_two_texts", best_assignment_iou(pred, ref))

    q_single = F(1, 5) * (1 + 1 + distribution([(F(1, 2), F(1, 2))]) + 1 + 1)
    put("quality_single_centered", q_single)
    put("hybrid_missing_block_balanced", F(1, 10) * F(1, 10))
    put("hybrid_folded_single_centered", F(1, 10) * 1 + F(9, 10) * q_single)

    adv, sd = advantages([0.2, 0.4, 0.6])
    put("advantages_example", adv)
    put("advantages_example_std", sd)

    put("normalized_text_box", [F(51, 513), F(150, 750), F(257, 513), F(75, 750)])

    # Metric examples.
    text, logo = box("0.1", "0.1", "0.3", "0.1"), box("0.6", "0.6", "0.2", "0.2")
    non_underlay = [text, logo]
    pairs = list(itertools.combinations(non_underlay, 2))
    put("ove_text_underlay_logo", sum(iou(p, q) for p, q in pairs) / len(pairs))
    underlays = [box("0.05", "0.05", "0.4", "0.2"), box("0.5", "0.8", "0.3", "0.1")]
    effective = [u for u in underlays if inter(u, text) == area(text)]
    put("und_two_underlays", F(len(effective), len(underlays)))
    put("occ_half_cover", raster_overlap([box(0, 0, "0.5", 1)], [box("0.25", 0, "0.5", 1)], 512))
    put("floor_variance", math.exp(2 * math.log(1e-3)))

    path = Path(__file__).with_name("derived_values.json")
    path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(out)} values to {path}")


if __name__ == "__main__":
    main()
