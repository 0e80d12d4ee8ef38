"""Tests for the configuration models."""

import pytest

from cascada.models import EvalMode, GreedyConfig, GreedyVariant, KernelParams, SaaConfig


def test_kernel_defaults():
    """Test the default colonization kernel constants."""
    kernel = KernelParams()

    assert kernel.r0 == 3000.0
    assert kernel.alpha == 0.1
    assert kernel.gamma == 7.69e-4


@pytest.mark.parametrize("field", ["r0", "alpha", "gamma"])
def test_kernel_rejects_negative(field):
    """Test every kernel constant must be non-negative."""
    with pytest.raises(ValueError, match=f"{field} must be non-negative"):
        KernelParams(**{field: -0.5})


def test_saa_defaults():
    """Test SaaConfig defaults."""
    cfg = SaaConfig()

    assert (cfg.m, cfg.n, cfg.n_valid, cfg.n_test) == (10, 10, 500, 500)
    assert cfg.budget is None
    assert cfg.node_limit is None
    assert cfg.preprocess is True
    assert cfg.jobs == 1


@pytest.mark.parametrize("field", ["n", "n_valid", "n_test"])
def test_saa_counts_positive(field):
    """Test every replication count must be at least one."""
    with pytest.raises(ValueError, match=f"{field} must be at least 1"):
        SaaConfig(**{field: 0})


def test_saa_node_limit():
    """Test a zero node limit is allowed but a negative one is not."""
    assert SaaConfig(node_limit=0).node_limit == 0
    with pytest.raises(ValueError, match="node_limit must be non-negative"):
        SaaConfig(node_limit=-1)


def test_greedy_defaults():
    """Test GreedyConfig defaults."""
    cfg = GreedyConfig()

    assert cfg.variant is GreedyVariant.CB
    assert cfg.eval_mode is EvalMode.REUSE_PRE_REPEAT
    assert cfg.n == 100
    assert cfg.seed == 0


def test_greedy_rejects_negative_budget():
    """Test a negative budget override is rejected."""
    with pytest.raises(ValueError, match="budget must be non-negative"):
        GreedyConfig(budget=-1.0)


def test_enum_lookup():
    """Test names are matched case-insensitively and modes accept underscores."""
    assert GreedyVariant("CB") is GreedyVariant.CB
    assert EvalMode("REUSE+PRE") is EvalMode.REUSE_PRE
    assert EvalMode("reuse_pre") is EvalMode.REUSE_PRE
    with pytest.raises(ValueError):
        GreedyVariant("random")
    with pytest.raises(ValueError):
        EvalMode("cached")
