"""Bundled experiment presets run by ``shadowlab suite``.

Each preset is a config without a seed; the suite injects its own. Horizons
are kept small enough that the whole suite runs in well under a minute.
"""

NET_400 = 1 / 399  # 400-point net on the circle

PRESETS = {
    "two-point-random": {
        "construction": {"name": "example-4.4", "params": {"kind": "random"}},
        "horizon": 10_000,
        "verify": [
            {"property": "M_upper:0.4", "epsilon": 0.5},
            {"property": "M_lower:0.4", "epsilon": 0.5},
        ],
    },
    "two-point-alternating": {
        "construction": {"name": "example-4.4", "params": {"kind": "alternating"}},
        "horizon": 10_000,
        "verify": [
            {"property": "M_upper:0.6", "epsilon": 0.5},
            {"property": "average-shadowing", "epsilon": 0.5},
        ],
    },
    "two-point-chain": {
        "system": {"kind": "finite-map", "params": {"table": [0, 1], "labels": ["a1", "a2"],
                                                      "name": "two-point-identity"}},
        "horizon": 100,
        "verify": [{"property": "chain", "delta": 0.5}],
    },
    "rotation-chain": {
        "system": {"kind": "circle-rotation", "params": {"angle": "1/3"}},
        "horizon": 100,
        "verify": [{"property": "chain", "delta": 0.05, "net": 0.01}],
    },
    "shift-chain": {
        "system": {"kind": "full-shift", "params": {"alphabet": 2, "horizon": 6}},
        "horizon": 100,
        "verify": [{"property": "chain", "delta": 0.1}],
    },
    "linear-blocks-density": {
        "horizon": 100_000,
        "verify": [{"property": "density", "closed_form": "linear-blocks", "family": "M_upper:0.4"}],
    },
    "rotation-adversary": {
        "system": {"kind": "circle-rotation", "params": {"angle": "golden"}},
        "construction": {"name": "rotation-adversary", "params": {"y": 0.0, "y_prime": 0.5}},
        "horizon": 20_000,
        "verify": [{"property": "M_upper:0.6", "epsilon": 0.0625, "candidates": {"net": NET_400}}],
    },
    "shift-splice": {
        "system": {"kind": "full-shift", "params": {"alphabet": 2, "horizon": 16}},
        "construction": {"name": "shift-splice"},
        "horizon": 10_000,
        "verify": [
            {"property": "average-shadowing", "epsilon": 0.25},
            {"property": "M_alpha:0.5", "epsilon": 0.5},
            {"property": "classify", "type": "delta-average", "delta": 0.5},
        ],
    },
    "rotation-concatenation": {
        "system": {"kind": "circle-rotation", "params": {"angle": "golden"}},
        "construction": {"name": "concatenate-average-family", "params": {"family": "orbits"}},
        "horizon": 20_000,
        "verify": [{"property": "classify", "type": "asymptotic-average"}],
    },
    "rotation-ergodic-to-average": {
        "system": {"kind": "circle-rotation", "params": {"angle": "golden"}},
        "construction": {"name": "ergodic-to-average", "params": {"delta": 0.2}},
        "horizon": 10_000,
        "verify": [{"property": "classify", "type": "delta-average", "delta": 0.2}],
    },
    "two-point-interleave": {
        # mismatch density decays like sqrt(2/n), so the default 1e-2 tolerance
        # needs a horizon past 2e5; 0.02 is reached at 1e5
        "system": {"kind": "finite-map", "params": {"table": [0, 1], "labels": ["a1", "a2"],
                                                      "name": "two-point-identity"}},
        "construction": {"name": "interleave-minimal", "params": {"u": "a1", "v": "a2", "variant": "linear"}},
        "horizon": 100_000,
        "tolerances": {"density": 0.02},
        "verify": [{"property": "classify", "type": "delta-ergodic", "delta": 0.5}],
    },
}
