import time

from retainkv.harness import run_trials


def slow_square(seed: int) -> int:
    time.sleep(0.01 * (5 - seed % 5))
    return seed * seed


def test_results_come_back_in_seed_order():
    seeds = list(range(10))
    assert run_trials(slow_square, seeds, jobs=4) == [s * s for s in seeds]
    assert run_trials(slow_square, seeds, jobs=1) == run_trials(slow_square, seeds, jobs=3)


def test_no_seeds():
    assert run_trials(slow_square, [], jobs=4) == []
