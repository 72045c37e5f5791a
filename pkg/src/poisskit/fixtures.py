"""Built-in fixture zoo, stored as manifest dictionaries (see cli).

All indices in manifests are 0-based; every mathematical value is a string
in the expression grammar.
"""

from __future__ import annotations

FIXTURES: dict[str, dict] = {
    "so3": {
        "chart": ["x", "y", "z"],
        "bivectors": {"pi": {"0,1": "z", "1,2": "x", "0,2": "-y"}},
        "expressions": {"casimir": "x^2+y^2+z^2"},
        "lie_algebras": {
            "so3": {"dim": 3, "constants": [[0, 1, 2, "1"], [1, 2, 0, "1"], [2, 0, 1, "1"]]}
        },
        "tasks": [
            {"task": "is_poisson", "bivector": "pi"},
            {"task": "casimir", "bivector": "pi", "f": "x^2+y^2+z^2"},
        ],
    },
    "sl2r": {
        "chart": ["x", "y", "z"],
        "bivectors": {"pi": {"0,1": "-z", "1,2": "x", "0,2": "-y"}},
        "expressions": {"casimir": "x^2+y^2-z^2"},
        "lie_algebras": {
            "sl2r": {"dim": 3, "constants": [[0, 1, 2, "-1"], [1, 2, 0, "1"], [2, 0, 1, "1"]]}
        },
        "tasks": [
            {"task": "is_poisson", "bivector": "pi"},
            {"task": "casimir", "bivector": "pi", "f": "x^2+y^2-z^2"},
        ],
    },
    "book": {
        "chart": ["x", "y", "z"],
        "bivectors": {"pi": {"0,2": "x", "1,2": "y"}},
        "lie_algebras": {
            "book": {"dim": 3, "constants": [[0, 2, 0, "1"], [1, 2, 1, "1"]]}
        },
        "tasks": [
            {"task": "is_poisson", "bivector": "pi"},
            {"task": "rank", "bivector": "pi", "point": "0,0,5"},
        ],
    },
    "heisenberg": {
        "chart": ["x", "y", "z"],
        "bivectors": {"pi": {"0,1": "z"}},
        "lie_algebras": {
            "heisenberg": {"dim": 3, "constants": [[0, 1, 2, "1"]]}
        },
        "tasks": [{"task": "is_poisson", "bivector": "pi"}],
    },
    "s3_standard": {
        "chart": ["x", "y", "z", "w"],
        "bivectors": {
            "pi": {
                "0,1": "z^2+w^2",
                "0,2": "-y*z",
                "0,3": "-y*w",
                "1,2": "x*z",
                "1,3": "x*w",
            }
        },
        "expressions": {"sphere": "x^2+y^2+z^2+w^2"},
        "tasks": [{"task": "is_poisson", "bivector": "pi"}],
    },
    "s2_bruhat": {
        "chart": ["x1", "x2", "x3"],
        "bivectors": {
            "pi": {
                "0,1": "2*(x3-1)*x3",
                "1,2": "2*(x3-1)*x1",
                "0,2": "-2*(x3-1)*x2",
            }
        },
        "tasks": [{"task": "is_poisson", "bivector": "pi"}],
    },
    "log2d": {
        "chart": ["y1", "y2"],
        "bivectors": {"pi": {"0,1": "y1"}},
        "tasks": [{"task": "is_poisson", "bivector": "pi"}],
    },
    "r2_xdxdy": {
        "chart": ["x", "y"],
        "bivectors": {"pi": {"0,1": "x"}},
        "tasks": [
            {"task": "is_poisson", "bivector": "pi"},
            {"task": "modular", "bivector": "pi"},
        ],
    },
    # extra fixtures used by tests and the CLI, beyond the required zoo
    "log4d": {
        "chart": ["y1", "y2", "q", "p"],
        "bivectors": {"pi": {"0,1": "y1", "2,3": "-1"}},
        "tasks": [{"task": "is_poisson", "bivector": "pi"}],
    },
    "r4_canonical": {
        "chart": ["q1", "p1", "q2", "p2"],
        "bivectors": {"pi": {"0,1": "-1", "2,3": "-1"}},
        "constraints": {
            "second_class": {
                "bivector": "pi",
                "psi": ["q2", "p2"],
                "level": ["0", "0"],
                "samples": [["0", "0", "0", "0"], ["1", "2", "0", "0"]],
            }
        },
        "tasks": [
            {"task": "is_poisson", "bivector": "pi"},
            {"task": "classify", "constraints": "second_class"},
        ],
    },
}


def list_fixtures() -> list[str]:
    return sorted(FIXTURES)


def fixture_manifest(name: str) -> dict:
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(list_fixtures())}")
    import copy

    return copy.deepcopy(FIXTURES[name])
