"""Engine findings against the brute-force interpreter on random straight-line programs."""

import random

from hypothesis import given, settings, strategies as st

from _oracle import compare_seed as compare, gen_program
from opflow.rules import default_rules, parse_rules

def test_generator_is_deterministic():
    assert gen_program(random.Random(7)) == gen_program(random.Random(7))


def test_generated_programs_exercise_several_classes():
    classes = set()
    for seed in range(200):
        want, _ = compare(seed)
        classes |= {c for c, _, _ in want}
    assert {"XSS", "RCE", "SQLI"} <= classes


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**31))
def test_engine_matches_oracle(seed):
    want, got = compare(seed)
    assert got == want


def test_comparison_detects_a_planted_rules_mismatch():
    weakened = parse_rules("sanitizer htmlspecialchars classes=-\n", default_rules())
    differing = 0
    for seed in range(300):
        want, got = compare(seed, weakened)
        differing += want != got
    assert differing > 0
