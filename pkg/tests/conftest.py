"""Shared fixtures and the acceptance-suite summary hook.

Every test in test_acceptance.py gets one PASS/FAIL line in the terminal
summary so the acceptance gate is readable at a glance.
"""

import numpy as np
import pytest

from cmfuse.ndcore import RngState
from cmfuse.preprocess import Example
from cmfuse.trainer import TrainConfig

# model small enough that every parameter scalar can be finite-differenced
TINY = dict(vocab_rows=20, embed_dim=8, text_hidden=4, time_hidden=4,
            d_fuse=8, d_att=8, n_classes=3)
TINY_MAX_LEN = 5


def tiny_train_config(**overrides) -> TrainConfig:
    base = dict(max_len=TINY_MAX_LEN, vocab_size=TINY["vocab_rows"] - 2,
                embed_dim=TINY["embed_dim"], text_hidden=TINY["text_hidden"],
                time_hidden=TINY["time_hidden"], d_fuse=TINY["d_fuse"],
                d_att=TINY["d_att"], dropout=0.0, seed=3)
    base.update(overrides)
    return TrainConfig(**base)


def make_separable_dataset(n=64, n_classes=3, max_len=TINY_MAX_LEN, seed=11):
    """Strongly class-separable examples: each class draws tokens from its
    own disjoint id range and gets a class-correlated temporal vector."""
    rng = RngState(seed).split("separable")
    examples = []
    for k in range(n):
        label = k % n_classes
        r = rng.split(k)
        ids = [int(v) for v in r.integers(2 + 6 * label, 2 + 6 * label + 6, max_len)]
        base = label / max(n_classes - 1, 1)
        temporal = np.clip(base + (r.random(6) - 0.5) * 0.1, 0.0, 1.0)
        examples.append(Example(token_ids=ids, mask=[1] * max_len,
                                temporal=[float(v) for v in temporal], label=label))
    return examples


_acceptance_results = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and "test_acceptance" in item.nodeid:
        _acceptance_results.append((item.name, rep.passed))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, passed in _acceptance_results:
        terminalreporter.write_line(f"{name}: {'PASS' if passed else 'FAIL'}")
